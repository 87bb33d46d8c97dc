#include "rfh/fields.hpp"

#include <cmath>
#include <stdexcept>

#include "rfh/errors.hpp"
#include "rfh/threads.hpp"

namespace rfh {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTwoPi = 2.0 * kPi;

// Per-axis phase table e^{i x_i xi_a} for one mode component.
std::vector<cplx> axis_phases(const SpectralGrid& g, double xi_component) {
  std::vector<cplx> ph(g.N);
  const double dx = g.dx();
  for (std::size_t i = 0; i < g.N; ++i) {
    const double arg = xi_component * dx * static_cast<double>(i);
    ph[i] = cplx(std::cos(arg), std::sin(arg));
  }
  return ph;
}

// Fills out[flat] = scale * prod_a phases[a][i_a].
void fill_plane_wave(const SpectralGrid& g,
                     const std::array<std::vector<cplx>, 3>& ph, cplx scale,
                     std::vector<cplx>& out) {
  const std::size_t n = g.N;
  if (g.dim == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = scale * ph[0][i];
    return;
  }
  if (g.dim == 2) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const cplx row = scale * ph[0][i];
      for (std::size_t j = 0; j < n; ++j) out[flat++] = row * ph[1][j];
    }
    return;
  }
  std::size_t flat = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const cplx pi_ = scale * ph[0][i];
    for (std::size_t j = 0; j < n; ++j) {
      const cplx pij = pi_ * ph[1][j];
      for (std::size_t k = 0; k < n; ++k) out[flat++] = pij * ph[2][k];
    }
  }
}
}  // namespace

SpectralGrid SpectralGrid::make(int dim, std::size_t N, double L, bool dealias) {
  if (dim < 1 || dim > 3) throw std::invalid_argument("grid: dim must be 1, 2, or 3");
  if (!is_pow2(N) || N < 2)
    throw std::invalid_argument("grid: N must be a power of two >= 2");
  if (!(L > 0.0) || !std::isfinite(L))
    throw std::invalid_argument("grid: L must be positive and finite");
  SpectralGrid g;
  g.dim = dim;
  g.N = N;
  g.L = L;
  g.dealias = dealias;
  return g;
}

std::size_t SpectralGrid::size() const {
  std::size_t total = 1;
  for (int t = 0; t < dim; ++t) total *= N;
  return total;
}

double SpectralGrid::dk() const { return kTwoPi / L; }
double SpectralGrid::nyquist() const { return dk() * static_cast<double>(N / 2); }
double SpectralGrid::xi_sq_max() const {
  const double ny = nyquist();
  return dim * ny * ny;
}
double SpectralGrid::cell() const { return std::pow(dx(), dim); }
double SpectralGrid::volume() const { return std::pow(L, dim); }

double SpectralGrid::freq(std::size_t i) const {
  const auto half = N / 2;
  const double c = i < half ? static_cast<double>(i)
                            : static_cast<double>(i) - static_cast<double>(N);
  return dk() * c;
}

std::array<double, 3> SpectralGrid::xi_at(std::size_t flat) const {
  std::array<double, 3> xi{0.0, 0.0, 0.0};
  for (int a = dim - 1; a >= 0; --a) {
    xi[a] = freq(flat % N);
    flat /= N;
  }
  return xi;
}

double SpectralGrid::xi_sq_at(std::size_t flat) const {
  const auto xi = xi_at(flat);
  return xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
}

void SpectralGrid::to_coeff(std::vector<cplx>& u) const {
  if (u.size() != size()) throw std::invalid_argument("to_coeff: size mismatch");
  fft_nd(u.data(), dim, N, -1);
  const double scale = 1.0 / static_cast<double>(size());
  for (auto& c : u) c *= scale;
}

void SpectralGrid::to_phys(std::vector<cplx>& u) const {
  if (u.size() != size()) throw std::invalid_argument("to_phys: size mismatch");
  fft_nd(u.data(), dim, N, 1);
}

double ModeSet::sum_f_squared() const {
  double s = 0.0;
  for (const auto& m : modes) s += m.f * m.f;
  return s;
}

ModeSet build_mode_set(const MomentumDistribution& dist, const SpectralGrid& grid,
                       double cutoff) {
  if (dist.dim != grid.dim)
    throw std::invalid_argument("mode set: distribution and grid dimension differ");
  if (!(cutoff > 0.0) || cutoff > grid.nyquist() * (1.0 + 1e-12))
    throw std::invalid_argument(
        "mode set: cutoff must lie in (0, Nyquist radius]");

  const double weight = std::pow(grid.dk(), grid.dim);  // (2 pi / L)^d
  const double amp_scale = std::sqrt(weight);
  ModeSet set;
  set.dim = grid.dim;
  const double cut_sq = cutoff * cutoff * (1.0 + 1e-12);
  for (std::size_t flat = 0; flat < grid.size(); ++flat) {
    const auto xi = grid.xi_at(flat);
    const double xi_sq = xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2];
    if (xi_sq > cut_sq) continue;
    const double f2 = eval_f_squared(dist, std::sqrt(xi_sq));
    if (f2 <= 0.0) continue;
    Mode m;
    m.xi = xi;
    m.f = std::sqrt(f2) * amp_scale;
    set.modes.push_back(m);
  }
  if (set.modes.empty())
    throw std::invalid_argument("mode set: no lattice mode carries occupation");
  return set;
}

double steady_density(const ModeSet& modes) {
  if (modes.modes.empty()) throw std::invalid_argument("steady_density: empty mode set");
  return modes.sum_f_squared();
}

std::vector<cplx> y_field(const SpectralGrid& grid, const Mode& mode, double m,
                          double t) {
  std::array<std::vector<cplx>, 3> ph;
  for (int a = 0; a < grid.dim; ++a) ph[a] = axis_phases(grid, mode.xi[a]);
  const double arg = -t * (m + mode.xi_sq());
  const cplx scale = mode.f * cplx(std::cos(arg), std::sin(arg));
  std::vector<cplx> out(grid.size());
  fill_plane_wave(grid, ph, scale, out);
  return out;
}

RandomFieldState RandomFieldState::make(const SpectralGrid& grid,
                                        const ModeSet& modes, double m) {
  if (grid.dim != modes.dim)
    throw std::invalid_argument("state: grid and mode set dimension differ");
  RandomFieldState s;
  s.grid = grid;
  s.modes = modes;
  s.m = m;
  s.z.assign(modes.size(), std::vector<cplx>(grid.size(), cplx(0.0, 0.0)));
  return s;
}

void RandomFieldState::validate() const {
  if (z.size() != modes.size())
    throw std::invalid_argument("state: one z field per mode required");
  for (const auto& f : z)
    if (f.size() != grid.size()) throw std::invalid_argument("state: z field size");
  for (const auto& f : extra)
    if (f.size() != grid.size()) throw std::invalid_argument("state: extra field size");
}

std::vector<double> compute_density(const RandomFieldState& state) {
  state.validate();
  const std::size_t npts = state.grid.size();
  const std::size_t n_modes = state.modes.size();

  // Mode-parallel partial densities, folded in chunk order so the result is
  // reproducible at a fixed thread count.
  const std::size_t n_chunks = chunk_count(n_modes);
  std::vector<std::vector<double>> partial(n_chunks);
  parallel_for_chunks(n_modes, [&](std::size_t begin, std::size_t end,
                                   std::size_t chunk) {
    std::vector<double> acc(npts, 0.0);
    std::vector<cplx> y(npts);
    for (std::size_t k = begin; k < end; ++k) {
      const Mode& mode = state.modes.modes[k];
      std::array<std::vector<cplx>, 3> ph;
      for (int a = 0; a < state.grid.dim; ++a)
        ph[a] = axis_phases(state.grid, mode.xi[a]);
      const double arg = -state.t * (state.m + mode.xi_sq());
      const cplx scale = mode.f * cplx(std::cos(arg), std::sin(arg));
      fill_plane_wave(state.grid, ph, scale, y);
      const auto& zk = state.z[k];
      for (std::size_t p = 0; p < npts; ++p)
        acc[p] += std::norm(y[p] + zk[p]) - std::norm(y[p]);
    }
    partial[chunk] = std::move(acc);
  });

  std::vector<double> rho(npts, 0.0);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    if (partial[c].empty()) continue;
    for (std::size_t p = 0; p < npts; ++p) rho[p] += partial[c][p];
  }
  for (const auto& e : state.extra)
    for (std::size_t p = 0; p < npts; ++p) rho[p] += std::norm(e[p]);
  return rho;
}

std::vector<double> hartree_potential(const std::vector<double>& rho,
                                      const Potential& w,
                                      const SpectralGrid& grid) {
  if (rho.size() != grid.size())
    throw std::invalid_argument("hartree_potential: field/grid size mismatch");
  std::vector<cplx> work(rho.begin(), rho.end());
  grid.to_coeff(work);

  const double conv = std::pow(kTwoPi, -0.5 * grid.dim);
  const double dealias_bound = grid.dk() * static_cast<double>(grid.N) / 3.0;
  parallel_for(work.size(), [&](std::size_t flat) {
    const auto xi = grid.xi_at(flat);
    if (grid.dealias) {
      for (int a = 0; a < grid.dim; ++a) {
        if (std::abs(xi[a]) >= dealias_bound) {
          work[flat] = cplx(0.0, 0.0);
          return;
        }
      }
    }
    const double k = std::sqrt(xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]);
    work[flat] *= conv * w.w_hat(k);
  });

  grid.to_phys(work);
  std::vector<double> V(work.size());
  double max_re = 1.0, max_im = 0.0;
  for (std::size_t p = 0; p < work.size(); ++p) {
    V[p] = work[p].real();
    max_re = std::max(max_re, std::abs(work[p].real()));
    max_im = std::max(max_im, std::abs(work[p].imag()));
  }
  if (max_im > 1e-10 * max_re)
    throw numerical_guard_error(
        "hartree_potential: non-real output (convolution of real data)");
  return V;
}

}  // namespace rfh
