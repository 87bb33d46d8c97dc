#pragma once

#include <array>
#include <string>
#include <vector>

#include "rfh/fields.hpp"
#include "rfh/norms.hpp"
#include "rfh/response.hpp"

namespace rfh {

enum class SelfConsistency { FrozenV, Picard2 };
enum class DuhamelRule { Trapezoid, Simpson };

struct EvolutionConfig {
  double dt = 0.01;
  double t_end = 1.0;
  int splitting_order = 2;  // Strang is the only implemented order
  bool dealias = false;
  SelfConsistency self_consistency = SelfConsistency::FrozenV;
  std::size_t snapshots = 9;  // sample times for emitted densities/diagnostics
  double scatter_sigma = 0.25;
  bool scatter_homogeneous = false;

  std::size_t steps() const;  // t_end / dt, which must be near-integral
  void validate(const SpectralGrid& grid) const;
};

// Exact free propagator S(dt) = e^{-i dt (m - Laplacian)} as a frequency
// multiplier. dt = 0 returns the input unchanged.
std::vector<cplx> free_step(const SpectralGrid& grid, const std::vector<cplx>& field,
                            double m, double dt);

// One Strang split step of i d/dt u = (m - Laplacian + V) u with V frozen
// over the step: e^{-i dt V/2} S(dt) e^{-i dt V/2}. Every factor is unitary.
std::vector<cplx> sv_step(const SpectralGrid& grid, const std::vector<cplx>& field,
                          const std::vector<double>& V, double m, double dt);

// Same step applied to every stored field of a state; advances state.t.
void sv_step(RandomFieldState& state, const std::vector<double>& V, double dt);

struct ScatterDiagnostics {
  std::vector<double> times;
  double sigma = 0.25;
  bool homogeneous = false;
  // Backward-propagated profiles W(t_i) = S(-t_i) z(t_i) in coefficient
  // space, one entry per field (mode components first, then extras).
  std::vector<std::vector<std::vector<cplx>>> profiles;
  std::vector<std::vector<double>> cauchy;  // symmetric, zero diagonal
};

// Cauchy diagnostics for scattering: needs >= 3 sampled states of one run.
// Norms are L^2 over the Gaussian directions of H^sigma (or its homogeneous
// counterpart) of W(t_i) - W(t_j).
ScatterDiagnostics scattering_diagnostic(const std::vector<RandomFieldState>& samples,
                                         double sigma, bool homogeneous);

struct IvpResult {
  DensityPath path;  // rho and V at the sample times
  ScatterDiagnostics scatter;
  RandomFieldState final_state;
  bool aborted = false;          // non-finite density encountered
  std::string guard_message;
};

// Evolves the combined field x_k = y_k + z_k per mode (plus extra directions)
// under the self-consistent potential V = w * rho. The steady part satisfies
// the free flow exactly, so z_k is recovered as x_k - y_k(t) at sample times.
IvpResult run_ivp(const RandomFieldState& initial, const Potential& w,
                  const EvolutionConfig& cfg);

// Response symbol of the discretized steady state: the lattice mode sum with
// eta regularization. Agrees with the continuum symbol as the mode set
// refines, and is exactly the multiplier of the simulated response operator
// in the eta -> 0, long-window limit. Acts on harmonics e^{i(t tau + x.xi)}.
cplx mode_symbol(const ModeSet& modes, const std::array<double, 3>& xi0, double tau,
                 double eta);

// Radial (tau, k) table of mode_symbol along the coordinate axes (averaged;
// exact in d = 1 where the mode sum is direction-independent).
ResponseSymbol build_mode_symbol_table(const ModeSet& modes,
                                       const std::vector<double>& tau_grid,
                                       const std::vector<double>& k_grid, double eta);

// Nonnegative DFT frequencies 2 pi n / (n_samples dt) of a length-n_samples
// uniform window, n = 0 .. floor(n_samples/2).
std::vector<double> time_frequencies(std::size_t n_samples, double dt);

// Sorted distinct nonzero frequency magnitudes |xi| of the grid's lattice.
std::vector<double> lattice_radii(const SpectralGrid& grid);

// Response operator, direct form: L[u](t) = 2 Re sum_k conj(y_k(t)) D((w*u) y_k)(t)
// with the Duhamel integral D(psi)(t) = -i int_0^t S(t-s) psi(s) ds evaluated
// by the composite trapezoid rule (Simpson offered for convergence studies).
// u is a real space-time path sampled at t_i = i dt. Exactly linear in u.
std::vector<std::vector<double>> apply_L_direct(
    const std::vector<std::vector<double>>& u, const ModeSet& modes, double m,
    const Potential& w, const SpectralGrid& grid, double dt,
    DuhamelRule rule = DuhamelRule::Trapezoid);

// Response operator, multiplier form: space-time Fourier transform, multiply
// by w_hat(|xi|) m(tau, |xi|) from the interpolated table (conjugate symmetry
// supplies tau < 0; the zero spatial mode is annihilated), inverse transform.
// A raised-cosine taper over taper_fraction of each end of the time window is
// applied before the transform. The table must cover the run's lattice.
std::vector<std::vector<double>> apply_L_multiplier(
    const std::vector<std::vector<double>>& u, const ResponseSymbol& symbol,
    const Potential& w, const SpectralGrid& grid, double dt,
    double taper_fraction = 0.1);

struct PhiOptions {
  double gap_margin = 0.05;     // required inf |1 - w_hat m| on the table
  double taper_fraction = 0.1;  // window taper for the (1 - L)^{-1} multiplier
};

// One application of the fixed-point map: from a density candidate rho on the
// run's time grid, freeze V = w * rho, evolve the five source terms
//   A1 = E|S_V Z0|^2,            A2 = 2 Re E[(S_V Z0) conj(D_V(VY))],
//   A3 = E|D_V(VY)|^2,           A4 = 2 Re E[conj(Y) S_V Z0],
//   A5 = 2 Re E[conj(Y)(D_V - D)(VY)]
// by per-mode sweeps, and return (1 - L)^{-1}(A1 + ... + A5) via the symbol
// multiplier. z0 carries Z0: components along Y's Gaussian directions in .z
// (zero for independent data) and independent directions in .extra.
DensityPath apply_Phi(const DensityPath& rho, const RandomFieldState& z0,
                      const Potential& w, const ResponseSymbol& symbol,
                      const PhiOptions& opt = {});

struct FixedPointResult {
  DensityPath rho;
  std::vector<double> residuals;  // ||rho^{n+1} - rho^n|| per iteration
  std::vector<double> ratios;     // successive residual ratios
  std::size_t iterations = 0;
  bool converged = false;
  bool non_contraction = false;  // ratio >= 1 three times in a row
};

// Picard iteration of apply_Phi from rho = 0 until the residual in `norm`
// falls below tol. For homogeneous negative-order norms the snapshot means
// are split off and measured in L^2 separately (they are ill-posed in the
// norm itself on the torus), then combined in quadrature.
FixedPointResult solve_fixed_point(const RandomFieldState& z0, const Potential& w,
                                   const ResponseSymbol& symbol,
                                   const EvolutionConfig& evo, const NormSpec& norm,
                                   double tol, std::size_t max_iter,
                                   const PhiOptions& opt = {});

}  // namespace rfh
