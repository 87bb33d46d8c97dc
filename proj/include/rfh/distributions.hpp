#pragma once

#include <limits>
#include <string>
#include <vector>

#include "rfh/quadrature.hpp"

namespace rfh {

// Squared momentum profile |f(xi)|^2 of a steady state: radial, nonnegative,
// L^1 in the radial measure rho^{d-1} drho (so f is L^2).
enum class DistKind { FermiZero, FermiDirac, Bose, Boltzmann, CustomRadial };

enum class CustomTail { Compact, Exponential };

struct CustomTable {
  std::vector<double> rho;  // strictly increasing, rho[0] == 0
  std::vector<double> val;  // |f|^2 samples, >= 0
  CustomTail tail = CustomTail::Compact;
};

struct MomentumDistribution {
  DistKind kind;
  int dim = 3;
  double mu = 0.0;
  double T = 0.0;
  CustomTable table;  // CustomRadial only

  static MomentumDistribution fermi_zero(int d, double mu);
  static MomentumDistribution fermi_dirac(int d, double T, double mu);
  static MomentumDistribution bose(int d, double T, double mu);  // mu < 0
  static MomentumDistribution boltzmann(int d, double T, double mu);
  static MomentumDistribution custom_radial(int d, CustomTable table);
};

// |f(xi)|^2 at |xi| = rho.
double eval_f_squared(const MomentumDistribution& dist, double rho);

// Radius beyond which |f|^2 is zero (FermiZero, compact custom) or below
// ~1e-19 of its peak (thermal kinds); every radial quadrature stops here.
double support_radius(const MomentumDistribution& dist);

// ||f||^2_{L^2} = |S^{d-1}| * int_0^inf |f(rho)|^2 rho^{d-1} drho.
double norm_squared(const MomentumDistribution& dist,
                    const QuadratureOptions& quad = {});

// Sampled radial profile h(r) on uniform nodes 0 = r_0 < ... < r_n = r_max
// with a cubic Hermite interpolant (fourth-order finite-difference slopes)
// and a fitted power-law tail model.
//
// The tail model |h(r)| ~ tail_C * r^{-tail_p} for r > r_max comes from a
// least-squares line on (log r, log|h|) over the last decade of nodes,
// skipping nodes within 1e-8 of a zero crossing (relative to the local
// oscillation amplitude). For an oscillating profile the fitted line tracks
// the geometric mean of |h|, not a strict envelope; tail integrals built on
// it are estimates of the same order as the true tail contribution.
class RadialProfile {
 public:
  RadialProfile() = default;
  RadialProfile(std::vector<double> r, std::vector<double> h);

  std::size_t size() const { return r_.size(); }
  double r_max() const { return r_.empty() ? 0.0 : r_.back(); }
  const std::vector<double>& nodes() const { return r_; }
  const std::vector<double>& values() const { return h_; }

  // Even in r: eval(-r) = eval(r). Inside [0, r_max] cubic Hermite; beyond,
  // the tail model magnitude (sign not modeled).
  double eval(double r) const;

  // Fitted tail magnitude exp(tail_log_C) * r^{-tail_p}; the constant is kept
  // in log form internally because super-polynomial profiles fit very steep
  // lines whose extrapolated constant overflows a double.
  double tail_log_C() const { return tail_log_C_; }
  double tail_C() const;
  double tail_p() const { return tail_p_; }
  bool tail_valid() const { return tail_valid_; }

  struct WeightedIntegral {
    double value = 0.0;
    double error = 0.0;
    bool divergent = false;  // tail exponent too small for the weight
  };
  // int_0^inf |h(r)| r^q dr as quadrature on [0, r_max] plus the tail-model
  // integral; divergent (value = inf) when tail_p <= q + 1 with tail_C > 0.
  WeightedIntegral integral_abs_weighted(double q,
                                         const QuadratureOptions& quad = {}) const;

 private:
  std::vector<double> r_, h_, slope_;
  double dr_ = 0.0;
  double tail_log_C_ = -std::numeric_limits<double>::infinity();
  double tail_p_ = 0.0;
  bool tail_valid_ = false;

  void fit_slopes();
  void fit_tail();
};

// H_f(x) at |x| = r: inverse unitary Fourier transform of |f|^2, computed by
// the radial (Hankel-type) reduction
//   H_f(r) = int_0^inf |f(rho)|^2 K_d(r, rho) drho,
//   K_d(r, rho) = r^{1 - d/2} rho^{d/2} J_{d/2-1}(r rho),
// which degenerates to sqrt(2/pi) cos(r rho) in d=1 and
// sqrt(2/pi) sin(r rho) rho / r in d=3. For FermiZero in d=3 the closed form
// sqrt(2/pi) r^{-2} (sin r / r - cos r) (scaled by mu) is used directly unless
// force_quadrature is set.
double compute_Hf(const MomentumDistribution& dist, double r,
                  const QuadratureOptions& quad = {},
                  bool force_quadrature = false);

// The d=3 FermiZero closed form with its small-r Taylor branch; exposed so
// the quadrature path can be validated against it.
double fermi_zero_Hf_3d(double mu, double r);

// Samples compute_Hf on n+1 uniform nodes in [0, r_max] and fits the tail.
RadialProfile compute_hf_profile(const MomentumDistribution& dist, double r_max,
                                 int n, const QuadratureOptions& quad = {});

// ||h_f||_{L^1(R)} = 2 * (int_0^{r_max} |h| dr + tail integral); +inf when the
// fitted tail exponent is <= 1 (flagged by the infinite value, not thrown).
double hf_L1_norm(const RadialProfile& profile,
                  const QuadratureOptions& quad = {});

}  // namespace rfh
