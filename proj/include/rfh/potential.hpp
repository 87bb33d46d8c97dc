#pragma once

#include <vector>

#include "rfh/distributions.hpp"

namespace rfh {

// Finite signed interaction measure w, represented on the Fourier side.
// w_hat uses the measure convention w_hat(xi) = int e^{-i x xi} dw(x), so
// w_hat(0) is the total mass of w and a point mass of weight a at the origin
// has w_hat == a identically. All stability criteria consume w_hat directly;
// grid convolutions (hartree_potential) carry the extra (2pi)^{-d/2} of the
// unitary transform pair, which is what makes the simulated response operator
// have exactly the symbol w_hat(xi) m_f(tau, xi).
enum class PotentialKind { PointMass, GaussianMeasure, Yukawa3D, CustomFourier };

struct Potential {
  PotentialKind kind;
  double weight = 0.0;     // = w_hat(0) for every built-in kind
  double width = 0.0;      // GaussianMeasure: position-space std deviation
  double screening = 0.0;  // Yukawa3D: screening rate lambda > 0
  // CustomFourier: cubic-interpolated table of w_hat over |xi|, constant
  // extension beyond the last node.
  std::vector<double> k_nodes, k_values;

  static Potential point_mass(double weight);
  static Potential gaussian(double weight, double width);
  static Potential yukawa3d(double weight, double screening);
  static Potential custom_fourier(std::vector<double> k_nodes,
                                  std::vector<double> k_values);
  static Potential zero() { return point_mass(0.0); }

  double w_hat(double k) const;  // radial evaluator, k = |xi| >= 0
  double w_hat_zero() const { return w_hat(0.0); }

  // sup over xi of |w_hat(xi)| (exact for the analytic kinds, table max for
  // CustomFourier).
  double sup_abs() const;

  // sup over xi != 0 of |w_hat(xi)| / |xi|: infinite whenever w_hat(0) != 0
  // (point mass at frequency zero in the ratio), otherwise sampled on a
  // log grid over [1e-6, 1e6] plus the table nodes.
  double sup_abs_over_k() const;
};

// Steady-state parameter bundle: the mass shift is pinned to the pair,
// m = w_hat(0) * ||f||^2_{L^2}. The dynamics is invariant under m -> m + c
// (a global phase), so m is a bookkeeping convention, not a tunable.
struct SteadyStateParams {
  MomentumDistribution distribution;
  Potential potential;
  double m = 0.0;

  static SteadyStateParams make(MomentumDistribution dist, Potential pot,
                                const QuadratureOptions& quad = {});
};

}  // namespace rfh
