#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "rfh/distributions.hpp"
#include "rfh/fft.hpp"
#include "rfh/potential.hpp"

namespace rfh {

// Periodic box [0, L)^d sampled with N points per axis. Frequencies live on
// the signed lattice (2 pi / L) * {-N/2, ..., N/2 - 1}.
struct SpectralGrid {
  int dim = 1;
  std::size_t N = 0;
  double L = 0.0;
  bool dealias = false;  // when set, hartree_potential zeroes |xi_c| >= dk*N/3

  static SpectralGrid make(int dim, std::size_t N, double L, bool dealias = false);

  std::size_t size() const;                 // N^dim
  double dx() const { return L / static_cast<double>(N); }
  double dk() const;                        // 2 pi / L
  double nyquist() const;                   // dk * N / 2, per-axis bound
  double xi_sq_max() const;                 // dim * nyquist^2 (lattice corner)
  double cell() const;                      // dx^dim
  double volume() const;                    // L^dim

  // Signed frequency for axis index i in [0, N).
  double freq(std::size_t i) const;
  std::array<double, 3> xi_at(std::size_t flat) const;
  double xi_sq_at(std::size_t flat) const;

  // In-place physical <-> coefficient transforms. Coefficients follow
  // u(x) = sum_xi c_xi e^{i xi.x}, so the analysis direction carries 1/N^d.
  void to_coeff(std::vector<cplx>& u) const;
  void to_phys(std::vector<cplx>& u) const;
};

struct Mode {
  std::array<double, 3> xi{0.0, 0.0, 0.0};
  double f = 0.0;  // amplitude, volume element included

  double xi_sq() const { return xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]; }
};

struct ModeSet {
  int dim = 0;
  std::vector<Mode> modes;

  std::size_t size() const { return modes.size(); }
  double sum_f_squared() const;
};

// One mode per lattice frequency with |xi| <= cutoff and nonzero occupation;
// amplitudes f(xi) (2 pi / L)^{d/2} make sum f_k^2 a Riemann sum for the
// occupation integral. Throws when cutoff exceeds the Nyquist radius or no
// mode survives.
ModeSet build_mode_set(const MomentumDistribution& dist, const SpectralGrid& grid,
                       double cutoff);

// E|Y|^2 = sum_k f_k^2, constant in space and time.
double steady_density(const ModeSet& modes);

// Steady-state mode field y_k(t, x) = f_k e^{i(x.xi_k - t(m + |xi_k|^2))},
// recomputed exactly rather than evolved.
std::vector<cplx> y_field(const SpectralGrid& grid, const Mode& mode, double m,
                          double t);

// Coefficient-field state: the perturbation's components along the steady
// state's Gaussian directions (z, one field per mode) plus optional extra
// orthonormal directions carrying initial data independent of Y.
struct RandomFieldState {
  double t = 0.0;
  double m = 0.0;
  SpectralGrid grid;
  ModeSet modes;
  std::vector<std::vector<cplx>> z;      // size modes.size(), each grid.size()
  std::vector<std::vector<cplx>> extra;  // any count, each grid.size()

  static RandomFieldState make(const SpectralGrid& grid, const ModeSet& modes,
                               double m);
  void validate() const;
};

// rho(x) = sum_k (|y_k + z_k|^2 - |y_k|^2) + sum_j |extra_j|^2, the density
// relative to the steady background, evaluated in subtracted form.
std::vector<double> compute_density(const RandomFieldState& state);

// V = w * rho on the lattice: coefficient-wise (2 pi)^{-d/2} w_hat(|xi|)
// rho_hat(xi). The (2 pi)^{-d/2} factor keeps the lattice multiplier equal to
// the continuum symbol convention used by the response module (a point mass
// of weight a acting on rho = c gives V = a c (2 pi)^{-d/2}).
std::vector<double> hartree_potential(const std::vector<double>& rho,
                                      const Potential& w,
                                      const SpectralGrid& grid);

struct DensityPath {
  std::vector<double> times;
  std::vector<std::vector<double>> rho;
  std::vector<std::vector<double>> V;
};

}  // namespace rfh
