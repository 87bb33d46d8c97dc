#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rfh/distributions.hpp"
#include "rfh/dynamics.hpp"
#include "rfh/io.hpp"
#include "rfh/potential.hpp"

namespace rfh {

struct GridConfig {
  int dim = 3;
  std::size_t N = 16;
  double L = 6.283185307179586476925286766559;
  bool dealias = false;

  SpectralGrid make() const { return SpectralGrid::make(dim, N, L, dealias); }
};

struct ModesConfig {
  // 0 selects the distribution's support radius, capped just under Nyquist.
  double cutoff = 0.0;
};

struct PerturbationConfig {
  // zero       : no perturbation
  // bump_extra : one independent direction carrying a periodic Gaussian bump
  // random_extra: `count` independent directions with seeded Gaussian
  //               coefficients under the spectral envelope e^{-|xi|^2 w^2/2}
  // bump_mode  : the bump added to z of mode `mode_index` (correlated data)
  std::string kind = "zero";
  double amplitude = 0.0;
  double width = 1.0;
  std::size_t count = 1;
  std::size_t mode_index = 0;
};

struct SymbolTableConfig {
  std::string source = "modes";  // modes | quadrature
  double eta = 0.0;              // modes source; 0 means 2 / t_end
  double tau_max = 4.0;          // grids for the quadrature source
  std::size_t tau_count = 33;
  double k_min = 0.05;
  double k_max = 2.0;
  std::size_t k_count = 17;
  std::vector<double> resonance_eps;  // optional tau-clustering ladder
};

struct FixedPointConfig {
  double tol = 1e-8;
  std::size_t max_iter = 20;
  PhiOptions phi;
  std::string norm;  // empty: L2t:Hs(0.5) in d=3, L2t:Hsdot(-0.5) otherwise
};

// Response-path comparison: the input is cos(xi0 . x) cos(tau_c t) under a
// sin^p(pi t / T) envelope. The envelope is exactly bandlimited to p/2 DFT
// bins, so the causal transient of the direct path is suppressed to the
// envelope's edge smallness. Each level multiplies the step count by 8 and
// divides dt by 4: the window doubles while the Duhamel quadrature refines.
struct CrosscheckConfig {
  std::size_t levels = 3;
  std::size_t base_steps = 64;
  double t_end = 12.8;                 // window of the coarsest level
  std::vector<int> harmonic{1, 0, 0};  // spatial frequency, lattice units
  int envelope_power = 8;              // even; bins occupied = power/2
  int time_carrier = 0;                // temporal harmonic, DFT bin units
  double eta = 1e-6;                   // mode-symbol regularization
  double taper_fraction = 0.0;         // envelope already vanishes at edges
};

struct SteadyConfig {
  double r_max = 60.0;
  int n = 600;
};

struct RunConfig {
  MomentumDistribution dist = MomentumDistribution::fermi_zero(3, 1.0);
  Potential pot = Potential::zero();
  GridConfig grid;
  ModesConfig modes;
  EvolutionConfig evo;
  QuadratureOptions quad;
  SymbolOptions symbol;
  SymbolTableConfig table;
  PerturbationConfig perturbation;
  FixedPointConfig fixedpoint;
  CrosscheckConfig crosscheck;
  SteadyConfig steady;
  std::vector<std::string> norms;  // per-snapshot norm reports in simulate
  std::uint64_t seed = 1;
};

// Parse and validate a config document. Unknown keys anywhere are rejected
// so a typo cannot silently fall back to a default. Custom tables may point
// at CSV files; relative paths resolve against base_dir. Throws
// std::invalid_argument on every defect.
RunConfig parse_config(const json& j, const std::string& base_dir = "");

// The fully resolved document, defaults filled in; custom tables are echoed
// inline so the echo is self-contained. echo(parse(echo(c))) == echo(c).
json echo_config(const RunConfig& c);

std::string default_norm(int dim);

}  // namespace rfh
