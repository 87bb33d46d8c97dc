#pragma once

#include <string>
#include <vector>

#include "rfh/fields.hpp"

namespace rfh {

enum class SpaceNormKind { L2, Lq, Linf, Hs, Hsdot };

struct SpatialNormSpec {
  SpaceNormKind kind = SpaceNormKind::L2;
  double sigma = 0.0;  // Sobolev order for Hs / Hsdot
  double q = 2.0;      // Lebesgue exponent for Lq
};

// Mixed space-time norm L^p_t(X). Config strings follow the grammar
//   "L<p>t:<inner>"   with p a number or "inf",
//   <inner> one of "Hs(<sigma>)", "Hsdot(<sigma>)", "L<q>" (q number or "inf").
// Examples: "L2t:Hs(0.5)", "L2t:Hsdot(-0.5)", "Linft:L2".
struct NormSpec {
  double time_p = 2.0;  // infinity encodes L^inf_t
  SpatialNormSpec space;

  static NormSpec parse(const std::string& text);
  std::string str() const;  // canonical form, round-trips through parse
};

// Frequency-side |xi|^sigma (homogeneous) or (1 + |xi|^2)^{sigma/2}
// multiplier. Homogeneous conventions on the torus: sigma > 0 sends the zero
// mode to 0, sigma = 0 is the identity, and sigma < 0 drops the zero mode and
// requires mean-zero input (guard error otherwise, since |xi|^sigma blows up).
std::vector<cplx> frac_deriv(const SpectralGrid& grid, const std::vector<cplx>& u,
                             double sigma, bool homogeneous);

// Single-snapshot spatial norm. Sobolev norms are evaluated exactly on the
// frequency side; L^q for q not in {2, inf} is a Riemann sum times the cell
// volume.
double spatial_norm(const SpectralGrid& grid, const std::vector<cplx>& u,
                    const SpatialNormSpec& spec);

// Uniformly sampled path u(t_i, .): inner spatial norm per snapshot, outer
// L^p_t by trapezoid on the p-th power (max over snapshots for p = inf).
double mixed_norm(const SpectralGrid& grid,
                  const std::vector<std::vector<cplx>>& snapshots, double dt,
                  const NormSpec& spec);

}  // namespace rfh
