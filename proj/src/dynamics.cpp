#include "rfh/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <sstream>

#include "rfh/errors.hpp"
#include "rfh/threads.hpp"

namespace rfh {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kTwoPi = 2.0 * kPi;

// field[p] *= e^{-i c V[p]}
void apply_phase(std::vector<cplx>& field, const std::vector<double>& V, double c) {
  for (std::size_t p = 0; p < field.size(); ++p) {
    const double a = c * V[p];
    field[p] *= cplx(std::cos(a), -std::sin(a));
  }
}

std::vector<cplx> free_multiplier(const SpectralGrid& g, double m, double dt) {
  std::vector<cplx> mult(g.size());
  for (std::size_t flat = 0; flat < mult.size(); ++flat) {
    const double a = dt * (m + g.xi_sq_at(flat));
    mult[flat] = cplx(std::cos(a), -std::sin(a));
  }
  return mult;
}

void free_inplace(const SpectralGrid& g, std::vector<cplx>& field,
                  const std::vector<cplx>& mult) {
  g.to_coeff(field);
  for (std::size_t p = 0; p < field.size(); ++p) field[p] *= mult[p];
  g.to_phys(field);
}

void sv_pair_inplace(const SpectralGrid& g, std::vector<cplx>& field,
                     const std::vector<double>& V_begin, const std::vector<double>& V_end,
                     const std::vector<cplx>& mult, double dt) {
  apply_phase(field, V_begin, 0.5 * dt);
  free_inplace(g, field, mult);
  apply_phase(field, V_end, 0.5 * dt);
}

// rho = sum_k (|x_k|^2 - f_k^2) + sum_j |e_j|^2 for combined fields x_k;
// |y_k| = f_k pointwise, so the steady background subtracts exactly.
std::vector<double> density_combined(const SpectralGrid& grid, const ModeSet& modes,
                                     const std::vector<std::vector<cplx>>& xs,
                                     const std::vector<std::vector<cplx>>& extras) {
  const std::size_t npts = grid.size();
  const std::size_t n_modes = modes.size();
  const std::size_t n_chunks = chunk_count(n_modes);
  std::vector<std::vector<double>> partial(n_chunks);
  parallel_for_chunks(n_modes, [&](std::size_t begin, std::size_t end, std::size_t c) {
    std::vector<double> acc(npts, 0.0);
    for (std::size_t k = begin; k < end; ++k) {
      const double f_sq = modes.modes[k].f * modes.modes[k].f;
      const auto& x = xs[k];
      for (std::size_t p = 0; p < npts; ++p) acc[p] += std::norm(x[p]) - f_sq;
    }
    partial[c] = std::move(acc);
  });
  std::vector<double> rho(npts, 0.0);
  for (std::size_t c = 0; c < n_chunks; ++c) {
    if (partial[c].empty()) continue;
    for (std::size_t p = 0; p < npts; ++p) rho[p] += partial[c][p];
  }
  for (const auto& e : extras)
    for (std::size_t p = 0; p < npts; ++p) rho[p] += std::norm(e[p]);
  return rho;
}

bool all_zero(const std::vector<cplx>& f) {
  for (const auto& v : f)
    if (v != cplx(0.0, 0.0)) return false;
  return true;
}

// Bilinear lookup into a ResponseSymbol table; negative tau by conjugation.
class SymbolInterp {
 public:
  explicit SymbolInterp(const ResponseSymbol& s) : s_(s) {
    if (s.tau_grid.size() < 2)
      throw std::invalid_argument("symbol table: need at least two tau nodes");
    if (s.k_grid.empty())
      throw std::invalid_argument("symbol table: empty k grid");
  }

  bool covers(double tau_hi, double k_lo, double k_hi, std::string* why) const {
    std::ostringstream os;
    const double tau_slack = 1e-9 * std::max(1.0, tau_hi);
    if (s_.tau_grid.front() > 1e-12 || s_.tau_grid.back() + tau_slack < tau_hi) {
      os << "tau range [" << s_.tau_grid.front() << ", " << s_.tau_grid.back()
         << "] does not cover [0, " << tau_hi << "]";
      if (why) *why = os.str();
      return false;
    }
    const double k_slack = 1e-9 * std::max(1.0, k_hi);
    if (s_.k_grid.front() > k_lo + k_slack || s_.k_grid.back() + k_slack < k_hi) {
      os << "k range [" << s_.k_grid.front() << ", " << s_.k_grid.back()
         << "] does not cover [" << k_lo << ", " << k_hi << "]";
      if (why) *why = os.str();
      return false;
    }
    return true;
  }

  cplx at(double tau, double k) const {
    const bool flip = tau < 0.0;
    if (flip) tau = -tau;
    const cplx v = lookup(tau, k);
    return flip ? std::conj(v) : v;
  }

 private:
  static std::size_t cell_index(const std::vector<double>& g, double& x) {
    x = std::min(std::max(x, g.front()), g.back());
    auto it = std::upper_bound(g.begin(), g.end(), x);
    std::size_t hi = static_cast<std::size_t>(it - g.begin());
    if (hi >= g.size()) hi = g.size() - 1;
    if (hi == 0) hi = 1;
    return hi - 1;  // x in [g[hi-1], g[hi]]
  }

  cplx lookup(double tau, double k) const {
    const std::size_t i = cell_index(s_.tau_grid, tau);
    const double dti = s_.tau_grid[i + 1] - s_.tau_grid[i];
    const double a = dti > 0.0 ? (tau - s_.tau_grid[i]) / dti : 0.0;
    if (s_.k_grid.size() == 1) {
      return (1.0 - a) * s_.at(i, 0).value + a * s_.at(i + 1, 0).value;
    }
    const std::size_t j = cell_index(s_.k_grid, k);
    const double dkj = s_.k_grid[j + 1] - s_.k_grid[j];
    const double b = dkj > 0.0 ? (k - s_.k_grid[j]) / dkj : 0.0;
    return (1.0 - a) * (1.0 - b) * s_.at(i, j).value +
           (1.0 - a) * b * s_.at(i, j + 1).value +
           a * (1.0 - b) * s_.at(i + 1, j).value + a * b * s_.at(i + 1, j + 1).value;
  }

  const ResponseSymbol& s_;
};

std::vector<double> taper_weights(std::size_t n_t, double dt, double fraction) {
  std::vector<double> w(n_t, 1.0);
  if (fraction <= 0.0) return w;
  const double T = static_cast<double>(n_t - 1) * dt;
  const double ramp = fraction * T;
  for (std::size_t i = 0; i < n_t; ++i) {
    const double t = static_cast<double>(i) * dt;
    const double edge = std::min(t, T - t);
    if (edge < ramp) w[i] = 0.5 * (1.0 - std::cos(kPi * edge / ramp));
  }
  return w;
}

// Shared space-time multiplier engine. mult(tau, k) is consulted for
// tau >= 0 only; negative-frequency slots use the conjugate, and an even
// sample count takes Re(mult) at the time-Nyquist slot so that real input
// maps to real output for any symbol with m(-tau) = conj(m(tau)).
std::vector<std::vector<double>> apply_spacetime_multiplier(
    const std::vector<std::vector<double>>& u, const SpectralGrid& grid, double dt,
    double taper_fraction, const std::function<cplx(double, double)>& mult) {
  const std::size_t n_t = u.size();
  if (n_t < 2) throw std::invalid_argument("space-time multiplier: need >= 2 snapshots");
  if (!(dt > 0.0)) throw std::invalid_argument("space-time multiplier: dt must be > 0");
  if (taper_fraction < 0.0 || taper_fraction > 0.45)
    throw std::invalid_argument("space-time multiplier: taper fraction in [0, 0.45]");
  const std::size_t npts = grid.size();
  for (const auto& snap : u)
    if (snap.size() != npts)
      throw std::invalid_argument("space-time multiplier: snapshot size mismatch");

  const auto taper = taper_weights(n_t, dt, taper_fraction);
  std::vector<std::vector<cplx>> cube(n_t);
  parallel_for(n_t, [&](std::size_t i) {
    std::vector<cplx> snap(npts);
    for (std::size_t p = 0; p < npts; ++p) snap[p] = taper[i] * u[i][p];
    grid.to_coeff(snap);
    cube[i] = std::move(snap);
  });

  const double dtau = kTwoPi / (static_cast<double>(n_t) * dt);
  const std::size_t half = n_t / 2;
  const bool even = n_t % 2 == 0;
  parallel_for(npts, [&](std::size_t p) {
    const double k = std::sqrt(grid.xi_sq_at(p));
    std::vector<cplx> series(n_t);
    for (std::size_t i = 0; i < n_t; ++i) series[i] = cube[i][p];
    fft_any(series.data(), n_t, -1);
    const double scale = 1.0 / static_cast<double>(n_t);
    for (std::size_t nu = 0; nu < n_t; ++nu) {
      cplx factor;
      if (even && nu == half) {
        factor = cplx(mult(dtau * static_cast<double>(nu), k).real(), 0.0);
      } else if (nu <= half) {
        factor = mult(dtau * static_cast<double>(nu), k);
      } else {
        factor = std::conj(mult(dtau * static_cast<double>(n_t - nu), k));
      }
      series[nu] *= scale * factor;
    }
    fft_any(series.data(), n_t, 1);
    for (std::size_t i = 0; i < n_t; ++i) cube[i][p] = series[i];
  });

  std::vector<std::vector<double>> out(n_t);
  std::vector<double> max_im(n_t, 0.0), max_re(n_t, 0.0);
  parallel_for(n_t, [&](std::size_t i) {
    grid.to_phys(cube[i]);
    std::vector<double> snap(npts);
    double mi = 0.0, mr = 0.0;
    for (std::size_t p = 0; p < npts; ++p) {
      snap[p] = cube[i][p].real();
      mr = std::max(mr, std::abs(cube[i][p].real()));
      mi = std::max(mi, std::abs(cube[i][p].imag()));
    }
    out[i] = std::move(snap);
    max_im[i] = mi;
    max_re[i] = mr;
  });
  const double mr = std::max(1.0, *std::max_element(max_re.begin(), max_re.end()));
  const double mi = *std::max_element(max_im.begin(), max_im.end());
  if (mi > 1e-10 * mr)
    throw numerical_guard_error(
        "space-time multiplier: output has a non-real residue beyond tolerance");
  return out;
}
}  // namespace

std::size_t EvolutionConfig::steps() const {
  return static_cast<std::size_t>(std::llround(t_end / dt));
}

void EvolutionConfig::validate(const SpectralGrid& grid) const {
  if (!(dt > 0.0) || !std::isfinite(dt))
    throw std::invalid_argument("evolution: dt must be positive");
  if (!(t_end >= dt) || !std::isfinite(t_end))
    throw std::invalid_argument("evolution: t_end must be >= dt");
  if (splitting_order != 2)
    throw std::invalid_argument("evolution: only Strang splitting (order 2) is available");
  const auto n = steps();
  if (n < 1 || std::abs(static_cast<double>(n) * dt - t_end) >
                   1e-9 * std::max(dt, t_end))
    throw std::invalid_argument("evolution: t_end must be an integer number of steps");
  if (!(dt * grid.xi_sq_max() < kTwoPi))
    throw std::invalid_argument(
        "evolution: dt too large for the lattice bandwidth (dt * max|xi|^2 must stay "
        "below 2 pi)");
  if (snapshots < 3 || snapshots > n + 1)
    throw std::invalid_argument("evolution: snapshots must lie in [3, steps + 1]");
  if (!std::isfinite(scatter_sigma))
    throw std::invalid_argument("evolution: scatter_sigma must be finite");
}

std::vector<cplx> free_step(const SpectralGrid& grid, const std::vector<cplx>& field,
                            double m, double dt) {
  if (field.size() != grid.size())
    throw std::invalid_argument("free_step: field/grid size mismatch");
  if (!std::isfinite(dt) || !std::isfinite(m))
    throw std::invalid_argument("free_step: dt and m must be finite");
  if (dt == 0.0) return field;
  std::vector<cplx> out = field;
  const auto mult = free_multiplier(grid, m, dt);
  free_inplace(grid, out, mult);
  return out;
}

std::vector<cplx> sv_step(const SpectralGrid& grid, const std::vector<cplx>& field,
                          const std::vector<double>& V, double m, double dt) {
  if (field.size() != grid.size() || V.size() != grid.size())
    throw std::invalid_argument("sv_step: field/potential/grid size mismatch");
  for (double v : V)
    if (!std::isfinite(v)) throw numerical_guard_error("sv_step: potential is not finite");
  std::vector<cplx> out = field;
  const auto mult = free_multiplier(grid, m, dt);
  sv_pair_inplace(grid, out, V, V, mult, dt);
  return out;
}

void sv_step(RandomFieldState& state, const std::vector<double>& V, double dt) {
  state.validate();
  if (V.size() != state.grid.size())
    throw std::invalid_argument("sv_step: potential/grid size mismatch");
  for (double v : V)
    if (!std::isfinite(v)) throw numerical_guard_error("sv_step: potential is not finite");
  const auto mult = free_multiplier(state.grid, state.m, dt);
  const std::size_t n_fields = state.z.size() + state.extra.size();
  parallel_for(n_fields, [&](std::size_t f) {
    auto& field = f < state.z.size() ? state.z[f] : state.extra[f - state.z.size()];
    sv_pair_inplace(state.grid, field, V, V, mult, dt);
  });
  state.t += dt;
}

IvpResult run_ivp(const RandomFieldState& initial, const Potential& w,
                  const EvolutionConfig& cfg) {
  initial.validate();
  SpectralGrid grid = initial.grid;
  grid.dealias = cfg.dealias;
  cfg.validate(grid);
  const std::size_t steps = cfg.steps();
  const double dt = cfg.dt;
  const ModeSet& modes = initial.modes;
  const double m = initial.m;

  // Sample indices: cfg.snapshots of them, always including both ends.
  std::set<std::size_t> sample_set;
  for (std::size_t j = 0; j < cfg.snapshots; ++j)
    sample_set.insert(static_cast<std::size_t>(std::llround(
        static_cast<double>(j) * static_cast<double>(steps) /
        static_cast<double>(cfg.snapshots - 1))));
  const std::vector<std::size_t> sample_idx(sample_set.begin(), sample_set.end());

  // Combined fields x_k = y_k + z_k; extras evolve as given.
  std::vector<std::vector<cplx>> xs(modes.size());
  parallel_for(modes.size(), [&](std::size_t k) {
    auto x = y_field(grid, modes.modes[k], m, initial.t);
    const auto& z = initial.z[k];
    for (std::size_t p = 0; p < x.size(); ++p) x[p] += z[p];
    xs[k] = std::move(x);
  });
  std::vector<std::vector<cplx>> extras = initial.extra;

  const auto mult = free_multiplier(grid, m, dt);
  IvpResult result;
  std::vector<RandomFieldState> sample_states;
  double t = initial.t;

  auto record_sample = [&](const std::vector<double>& rho,
                           const std::vector<double>& V) {
    result.path.times.push_back(t);
    result.path.rho.push_back(rho);
    result.path.V.push_back(V);
    RandomFieldState snap = RandomFieldState::make(grid, modes, m);
    snap.t = t;
    parallel_for(modes.size(), [&](std::size_t k) {
      auto y = y_field(grid, modes.modes[k], m, t);
      auto& zk = snap.z[k];
      for (std::size_t p = 0; p < y.size(); ++p) zk[p] = xs[k][p] - y[p];
    });
    snap.extra = extras;
    sample_states.push_back(std::move(snap));
  };

  std::vector<double> rho = density_combined(grid, modes, xs, extras);
  std::vector<double> V = hartree_potential(rho, w, grid);
  std::size_t next_sample = 0;
  if (sample_idx[next_sample] == 0) {
    record_sample(rho, V);
    ++next_sample;
  }

  const std::size_t n_fields = xs.size() + extras.size();
  auto field_at = [&](std::size_t f) -> std::vector<cplx>& {
    return f < xs.size() ? xs[f] : extras[f - xs.size()];
  };
  std::vector<std::vector<cplx>> mids;  // Picard predictor storage

  for (std::size_t step = 0; step < steps; ++step) {
    if (cfg.self_consistency == SelfConsistency::FrozenV) {
      parallel_for(n_fields, [&](std::size_t f) {
        sv_pair_inplace(grid, field_at(f), V, V, mult, dt);
      });
    } else {
      // Picard(2): predict the end-of-step density with the frozen potential,
      // then redo the closing half-phase with the predicted potential.
      if (mids.empty()) mids.resize(n_fields);
      parallel_for(n_fields, [&](std::size_t f) {
        auto& u = field_at(f);
        apply_phase(u, V, 0.5 * dt);
        free_inplace(grid, u, mult);
        mids[f] = u;
        apply_phase(u, V, 0.5 * dt);
      });
      std::vector<double> rho_pred = density_combined(grid, modes, xs, extras);
      std::vector<double> V_pred = hartree_potential(rho_pred, w, grid);
      parallel_for(n_fields, [&](std::size_t f) {
        auto& u = field_at(f);
        u = std::move(mids[f]);
        apply_phase(u, V_pred, 0.5 * dt);
      });
    }
    t = initial.t + static_cast<double>(step + 1) * dt;
    rho = density_combined(grid, modes, xs, extras);

    double peak = 0.0;
    bool finite = true;
    for (double r : rho) {
      if (!std::isfinite(r)) {
        finite = false;
        break;
      }
      peak = std::max(peak, std::abs(r));
    }
    if (!finite || peak > 1e150) {
      result.aborted = true;
      std::ostringstream os;
      os << "density " << (finite ? "overflow" : "non-finite") << " at t = " << t
         << "; keeping the last valid snapshot";
      result.guard_message = os.str();
      break;
    }
    V = hartree_potential(rho, w, grid);
    if (next_sample < sample_idx.size() && sample_idx[next_sample] == step + 1) {
      record_sample(rho, V);
      ++next_sample;
    }
  }

  if (result.aborted) {
    result.final_state = sample_states.empty()
                             ? RandomFieldState::make(grid, modes, m)
                             : sample_states.back();
  } else {
    RandomFieldState fin = RandomFieldState::make(grid, modes, m);
    fin.t = t;
    parallel_for(modes.size(), [&](std::size_t k) {
      auto y = y_field(grid, modes.modes[k], m, t);
      auto& zk = fin.z[k];
      for (std::size_t p = 0; p < y.size(); ++p) zk[p] = xs[k][p] - y[p];
    });
    fin.extra = std::move(extras);
    result.final_state = std::move(fin);
  }
  if (sample_states.size() >= 3)
    result.scatter =
        scattering_diagnostic(sample_states, cfg.scatter_sigma, cfg.scatter_homogeneous);
  return result;
}

cplx mode_symbol(const ModeSet& modes, const std::array<double, 3>& xi0, double tau,
                 double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("mode_symbol: eta must be > 0");
  const double xi0_sq = xi0[0] * xi0[0] + xi0[1] * xi0[1] + xi0[2] * xi0[2];
  cplx acc(0.0, 0.0);
  for (const auto& mode : modes.modes) {
    const double cross =
        2.0 * (xi0[0] * mode.xi[0] + xi0[1] * mode.xi[1] + xi0[2] * mode.xi[2]);
    const double w1 = xi0_sq + cross;
    const double w2 = -xi0_sq + cross;
    const double f_sq = mode.f * mode.f;
    acc += f_sq * (1.0 / cplx(eta, tau - w1) - 1.0 / cplx(eta, tau - w2));
  }
  return cplx(0.0, 1.0) * std::pow(kTwoPi, -0.5 * modes.dim) * acc;
}

ResponseSymbol build_mode_symbol_table(const ModeSet& modes,
                                       const std::vector<double>& tau_grid,
                                       const std::vector<double>& k_grid, double eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("mode symbol table: eta must be > 0");
  for (std::size_t i = 1; i < tau_grid.size(); ++i)
    if (tau_grid[i] <= tau_grid[i - 1])
      throw std::invalid_argument("mode symbol table: tau grid must increase");
  for (std::size_t j = 0; j < k_grid.size(); ++j)
    if (k_grid[j] <= 0.0 || (j > 0 && k_grid[j] <= k_grid[j - 1]))
      throw std::invalid_argument("mode symbol table: k grid must increase, k > 0");
  ResponseSymbol table;
  table.tau_grid = tau_grid;
  table.k_grid = k_grid;
  table.dim = modes.dim;
  {
    std::ostringstream os;
    os << "lattice mode symbol (" << modes.size() << " modes, eta=" << eta << ")";
    table.dist_desc = os.str();
  }
  table.values.resize(tau_grid.size() * k_grid.size());
  const int d = modes.dim;
  parallel_for(table.values.size(), [&](std::size_t idx) {
    const std::size_t i = idx / k_grid.size();
    const std::size_t j = idx % k_grid.size();
    cplx vals[3];
    cplx mean(0.0, 0.0);
    for (int a = 0; a < d; ++a) {
      std::array<double, 3> xi0{0.0, 0.0, 0.0};
      xi0[a] = k_grid[j];
      vals[a] = mode_symbol(modes, xi0, tau_grid[i], eta);
      mean += vals[a];
    }
    mean /= static_cast<double>(d);
    double spread = 0.0;
    for (int a = 0; a < d; ++a) spread = std::max(spread, std::abs(vals[a] - mean));
    SymbolPoint pt;
    pt.value = mean;
    pt.err = spread;  // axis anisotropy, zero in d = 1
    pt.flagged = false;
    table.values[idx] = pt;
  });
  return table;
}

std::vector<double> time_frequencies(std::size_t n_samples, double dt) {
  if (n_samples < 2 || !(dt > 0.0))
    throw std::invalid_argument("time_frequencies: need n >= 2, dt > 0");
  std::vector<double> out(n_samples / 2 + 1);
  const double dtau = kTwoPi / (static_cast<double>(n_samples) * dt);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] = dtau * static_cast<double>(n);
  return out;
}

std::vector<double> lattice_radii(const SpectralGrid& grid) {
  std::set<std::int64_t> sums;
  const std::int64_t half = static_cast<std::int64_t>(grid.N / 2);
  std::array<std::int64_t, 3> c{0, 0, 0};
  const int d = grid.dim;
  std::function<void(int)> rec = [&](int axis) {
    if (axis == d) {
      const std::int64_t s = c[0] * c[0] + c[1] * c[1] + c[2] * c[2];
      if (s > 0) sums.insert(s);
      return;
    }
    for (std::int64_t v = -half; v < half; ++v) {
      c[axis] = v;
      rec(axis + 1);
    }
  };
  rec(0);
  std::vector<double> radii;
  radii.reserve(sums.size());
  for (auto s : sums) radii.push_back(grid.dk() * std::sqrt(static_cast<double>(s)));
  return radii;
}

std::vector<std::vector<double>> apply_L_direct(
    const std::vector<std::vector<double>>& u, const ModeSet& modes, double m,
    const Potential& w, const SpectralGrid& grid, double dt, DuhamelRule rule) {
  const std::size_t n_t = u.size();
  if (n_t < 2) throw std::invalid_argument("apply_L_direct: need >= 2 snapshots");
  if (!(dt > 0.0)) throw std::invalid_argument("apply_L_direct: dt must be > 0");
  const std::size_t npts = grid.size();
  for (const auto& snap : u)
    if (snap.size() != npts)
      throw std::invalid_argument("apply_L_direct: snapshot size mismatch");
  if (modes.dim != grid.dim)
    throw std::invalid_argument("apply_L_direct: mode set/grid dimension mismatch");

  std::vector<std::vector<double>> W(n_t);
  for (std::size_t i = 0; i < n_t; ++i) W[i] = hartree_potential(u[i], w, grid);

  const auto mult1 = free_multiplier(grid, m, dt);
  const auto mult2 = free_multiplier(grid, m, 2.0 * dt);

  const std::size_t n_chunks = chunk_count(modes.size());
  std::vector<std::vector<std::vector<double>>> partial(n_chunks);
  parallel_for_chunks(modes.size(), [&](std::size_t begin, std::size_t end,
                                        std::size_t chunk) {
    std::vector<std::vector<double>> acc(n_t, std::vector<double>(npts, 0.0));
    std::vector<cplx> D(npts), psi_prev(npts), psi(npts), work(npts);
    for (std::size_t kk = begin; kk < end; ++kk) {
      const Mode& mode = modes.modes[kk];
      auto y = y_field(grid, mode, m, 0.0);
      const double om = dt * (m + mode.xi_sq());
      const cplx ystep(std::cos(om), -std::sin(om));
      std::fill(D.begin(), D.end(), cplx(0.0, 0.0));
      for (std::size_t p = 0; p < npts; ++p) psi_prev[p] = W[0][p] * y[p];

      if (rule == DuhamelRule::Trapezoid) {
        const cplx half_w(0.0, -0.5 * dt);
        for (std::size_t i = 1; i < n_t; ++i) {
          for (std::size_t p = 0; p < npts; ++p) y[p] *= ystep;
          for (std::size_t p = 0; p < npts; ++p) psi[p] = W[i][p] * y[p];
          for (std::size_t p = 0; p < npts; ++p) D[p] += half_w * psi_prev[p];
          free_inplace(grid, D, mult1);
          for (std::size_t p = 0; p < npts; ++p) D[p] += half_w * psi[p];
          auto& row = acc[i];
          for (std::size_t p = 0; p < npts; ++p)
            row[p] += 2.0 * (y[p].real() * D[p].real() + y[p].imag() * D[p].imag());
          std::swap(psi_prev, psi);
        }
      } else {
        // Composite Simpson on even prefixes; odd nodes close with one
        // trapezoid panel from the previous even node.
        const cplx w_half(0.0, -0.5 * dt);
        const cplx w_third(0.0, -dt / 3.0);
        const cplx w_four_thirds(0.0, -4.0 * dt / 3.0);
        std::vector<cplx> psi_even = psi_prev;  // psi at the current even node
        std::vector<cplx> y_node = y;           // tracks y at the visited node
        std::size_t e = 0;
        while (e + 1 < n_t) {
          for (std::size_t p = 0; p < npts; ++p) y_node[p] *= ystep;
          for (std::size_t p = 0; p < npts; ++p) psi[p] = W[e + 1][p] * y_node[p];
          // odd node e+1 by trapezoid from e
          work = D;
          for (std::size_t p = 0; p < npts; ++p) work[p] += w_half * psi_even[p];
          free_inplace(grid, work, mult1);
          for (std::size_t p = 0; p < npts; ++p) work[p] += w_half * psi[p];
          {
            auto& row = acc[e + 1];
            for (std::size_t p = 0; p < npts; ++p)
              row[p] += 2.0 * (y_node[p].real() * work[p].real() +
                               y_node[p].imag() * work[p].imag());
          }
          if (e + 2 >= n_t) break;
          for (std::size_t p = 0; p < npts; ++p) y_node[p] *= ystep;
          for (std::size_t p = 0; p < npts; ++p) D[p] += w_third * psi_even[p];
          free_inplace(grid, D, mult1);
          for (std::size_t p = 0; p < npts; ++p) D[p] += w_four_thirds * psi[p];
          free_inplace(grid, D, mult1);
          for (std::size_t p = 0; p < npts; ++p) psi_even[p] = W[e + 2][p] * y_node[p];
          for (std::size_t p = 0; p < npts; ++p) D[p] += w_third * psi_even[p];
          auto& row = acc[e + 2];
          for (std::size_t p = 0; p < npts; ++p)
            row[p] += 2.0 * (y_node[p].real() * D[p].real() +
                             y_node[p].imag() * D[p].imag());
          e += 2;
        }
        (void)mult2;
      }
    }
    partial[chunk] = std::move(acc);
  });

  std::vector<std::vector<double>> out(n_t, std::vector<double>(npts, 0.0));
  for (std::size_t c = 0; c < n_chunks; ++c) {
    if (partial[c].empty()) continue;
    for (std::size_t i = 0; i < n_t; ++i)
      for (std::size_t p = 0; p < npts; ++p) out[i][p] += partial[c][i][p];
  }
  return out;
}

std::vector<std::vector<double>> apply_L_multiplier(
    const std::vector<std::vector<double>>& u, const ResponseSymbol& symbol,
    const Potential& w, const SpectralGrid& grid, double dt, double taper_fraction) {
  SymbolInterp interp(symbol);
  const auto radii = lattice_radii(grid);
  const auto taus = time_frequencies(u.size(), dt);
  std::string why;
  if (!interp.covers(taus.back(), radii.front(), radii.back(), &why))
    throw std::invalid_argument("apply_L_multiplier: symbol table coverage gap: " + why);
  return apply_spacetime_multiplier(
      u, grid, dt, taper_fraction, [&](double tau, double k) -> cplx {
        if (k == 0.0) return cplx(0.0, 0.0);
        return w.w_hat(k) * interp.at(tau, k);
      });
}

DensityPath apply_Phi(const DensityPath& rho, const RandomFieldState& z0,
                      const Potential& w, const ResponseSymbol& symbol,
                      const PhiOptions& opt) {
  z0.validate();
  const SpectralGrid& grid = z0.grid;
  const std::size_t npts = grid.size();
  const std::size_t n_t = rho.times.size();
  if (n_t < 3) throw std::invalid_argument("apply_Phi: need >= 3 time samples");
  if (rho.rho.size() != n_t)
    throw std::invalid_argument("apply_Phi: times/snapshots size mismatch");
  const double dt = rho.times[1] - rho.times[0];
  if (!(dt > 0.0)) throw std::invalid_argument("apply_Phi: times must increase");
  for (std::size_t i = 0; i + 1 < n_t; ++i)
    if (std::abs(rho.times[i + 1] - rho.times[i] - dt) > 1e-9 * dt)
      throw std::invalid_argument("apply_Phi: time grid must be uniform");
  if (std::abs(rho.times[0]) > 1e-12 * std::max(1.0, rho.times.back()))
    throw std::invalid_argument("apply_Phi: the candidate path must start at t = 0");
  if (std::abs(z0.t) > 1e-12)
    throw std::invalid_argument("apply_Phi: Z0 must be given at t = 0");
  for (const auto& snap : rho.rho)
    if (snap.size() != npts) throw std::invalid_argument("apply_Phi: snapshot size");

  const auto gap = symbol_gap(symbol, w, opt.gap_margin);
  if (!gap.satisfied)
    throw numerical_guard_error("apply_Phi: symbol gap too small: " + gap.detail);

  SymbolInterp interp(symbol);
  const auto radii = lattice_radii(grid);
  const auto taus = time_frequencies(n_t, dt);
  std::string why;
  if (!interp.covers(taus.back(), radii.front(), radii.back(), &why))
    throw std::invalid_argument("apply_Phi: symbol table coverage gap: " + why);

  std::vector<std::vector<double>> V(n_t);
  for (std::size_t i = 0; i < n_t; ++i) V[i] = hartree_potential(rho.rho[i], w, grid);

  const ModeSet& modes = z0.modes;
  const double m = z0.m;
  const auto mult = free_multiplier(grid, m, dt);
  const cplx w_half(0.0, -0.5 * dt);

  // Per-mode sweep: s = S_V z0_k, G = D_V(V y_k), Q = D(V G) so that
  // 2 Re conj(y) Q is the quadratic remainder without a small difference of
  // large Duhamel integrals.
  const std::size_t n_chunks = chunk_count(modes.size());
  std::vector<std::vector<std::vector<double>>> partial(n_chunks);
  parallel_for_chunks(modes.size(), [&](std::size_t begin, std::size_t end,
                                        std::size_t chunk) {
    std::vector<std::vector<double>> acc(n_t, std::vector<double>(npts, 0.0));
    std::vector<cplx> G(npts), Q(npts), psi(npts), psi_next(npts), phi(npts),
        phi_next(npts), s(npts);
    for (std::size_t kk = begin; kk < end; ++kk) {
      const Mode& mode = modes.modes[kk];
      auto y = y_field(grid, mode, m, 0.0);
      const double om = dt * (m + mode.xi_sq());
      const cplx ystep(std::cos(om), -std::sin(om));
      const bool with_s = !all_zero(z0.z[kk]);
      if (with_s) s = z0.z[kk];

      std::fill(G.begin(), G.end(), cplx(0.0, 0.0));
      std::fill(Q.begin(), Q.end(), cplx(0.0, 0.0));
      for (std::size_t p = 0; p < npts; ++p) psi[p] = V[0][p] * y[p];
      std::fill(phi.begin(), phi.end(), cplx(0.0, 0.0));  // V * G at node 0

      // node 0 terms (G = Q = 0 there)
      if (with_s) {
        auto& row = acc[0];
        for (std::size_t p = 0; p < npts; ++p) {
          row[p] += std::norm(s[p]);  // A1
          row[p] += 2.0 * (y[p].real() * s[p].real() + y[p].imag() * s[p].imag());  // A4
        }
      }

      for (std::size_t i = 0; i + 1 < n_t; ++i) {
        // advance G: trapezoid Duhamel under S_V
        for (std::size_t p = 0; p < npts; ++p) G[p] += w_half * psi[p];
        sv_pair_inplace(grid, G, V[i], V[i + 1], mult, dt);
        for (std::size_t p = 0; p < npts; ++p) y[p] *= ystep;
        for (std::size_t p = 0; p < npts; ++p) psi_next[p] = V[i + 1][p] * y[p];
        for (std::size_t p = 0; p < npts; ++p) G[p] += w_half * psi_next[p];
        // advance Q: trapezoid Duhamel under the free flow, source V G
        for (std::size_t p = 0; p < npts; ++p) Q[p] += w_half * phi[p];
        free_inplace(grid, Q, mult);
        for (std::size_t p = 0; p < npts; ++p) phi_next[p] = V[i + 1][p] * G[p];
        for (std::size_t p = 0; p < npts; ++p) Q[p] += w_half * phi_next[p];
        // advance s
        if (with_s) sv_pair_inplace(grid, s, V[i], V[i + 1], mult, dt);

        auto& row = acc[i + 1];
        for (std::size_t p = 0; p < npts; ++p) {
          row[p] += std::norm(G[p]);  // A3
          row[p] += 2.0 * (y[p].real() * Q[p].real() + y[p].imag() * Q[p].imag());  // A5
        }
        if (with_s) {
          for (std::size_t p = 0; p < npts; ++p) {
            row[p] += std::norm(s[p]);                                               // A1
            row[p] += 2.0 * (s[p].real() * G[p].real() + s[p].imag() * G[p].imag()); // A2
            row[p] += 2.0 * (y[p].real() * s[p].real() + y[p].imag() * s[p].imag()); // A4
          }
        }
        std::swap(psi, psi_next);
        std::swap(phi, phi_next);
      }
    }
    partial[chunk] = std::move(acc);
  });

  std::vector<std::vector<double>> A(n_t, std::vector<double>(npts, 0.0));
  for (std::size_t c = 0; c < n_chunks; ++c) {
    if (partial[c].empty()) continue;
    for (std::size_t i = 0; i < n_t; ++i)
      for (std::size_t p = 0; p < npts; ++p) A[i][p] += partial[c][i][p];
  }

  // Independent directions of Z0 contribute E|S_V Z0|^2 only.
  if (!z0.extra.empty()) {
    std::vector<std::vector<std::vector<double>>> epart(chunk_count(z0.extra.size()));
    parallel_for_chunks(z0.extra.size(), [&](std::size_t begin, std::size_t end,
                                             std::size_t chunk) {
      std::vector<std::vector<double>> acc(n_t, std::vector<double>(npts, 0.0));
      std::vector<cplx> e(npts);
      for (std::size_t j = begin; j < end; ++j) {
        e = z0.extra[j];
        for (std::size_t p = 0; p < npts; ++p) acc[0][p] += std::norm(e[p]);
        for (std::size_t i = 0; i + 1 < n_t; ++i) {
          sv_pair_inplace(grid, e, V[i], V[i + 1], mult, dt);
          auto& row = acc[i + 1];
          for (std::size_t p = 0; p < npts; ++p) row[p] += std::norm(e[p]);
        }
      }
      epart[chunk] = std::move(acc);
    });
    for (const auto& acc : epart) {
      if (acc.empty()) continue;
      for (std::size_t i = 0; i < n_t; ++i)
        for (std::size_t p = 0; p < npts; ++p) A[i][p] += acc[i][p];
    }
  }

  DensityPath out;
  out.times = rho.times;
  out.rho = apply_spacetime_multiplier(
      A, grid, dt, opt.taper_fraction, [&](double tau, double k) -> cplx {
        const cplx lm = k == 0.0 ? cplx(0.0, 0.0) : w.w_hat(k) * interp.at(tau, k);
        return 1.0 / (1.0 - lm);
      });
  out.V.resize(n_t);
  for (std::size_t i = 0; i < n_t; ++i) out.V[i] = hartree_potential(out.rho[i], w, grid);
  return out;
}

namespace {
// Residual norm for the fixed-point iteration. Homogeneous negative-order
// norms are ill-posed on the snapshot means, so those are split off and
// measured in L^2, then combined in quadrature.
double path_residual(const SpectralGrid& grid, const std::vector<std::vector<double>>& a,
                     const std::vector<std::vector<double>>& b, double dt,
                     const NormSpec& spec) {
  const std::size_t n_t = a.size();
  const std::size_t npts = grid.size();
  const bool split_mean =
      spec.space.kind == SpaceNormKind::Hsdot && spec.space.sigma < 0.0;
  std::vector<std::vector<cplx>> diff(n_t, std::vector<cplx>(npts));
  std::vector<double> means(n_t, 0.0);
  for (std::size_t i = 0; i < n_t; ++i) {
    double mean = 0.0;
    for (std::size_t p = 0; p < npts; ++p) mean += a[i][p] - b[i][p];
    mean /= static_cast<double>(npts);
    if (!split_mean) mean = 0.0;
    means[i] = mean;
    for (std::size_t p = 0; p < npts; ++p) diff[i][p] = a[i][p] - b[i][p] - mean;
  }
  const double fluct = mixed_norm(grid, diff, dt, spec);
  if (!split_mean) return fluct;
  const double vol_sqrt = std::sqrt(grid.volume());
  double acc = 0.0;
  const double p_t = spec.time_p;
  if (p_t == std::numeric_limits<double>::infinity()) {
    for (double mn : means) acc = std::max(acc, std::abs(mn) * vol_sqrt);
  } else {
    for (std::size_t i = 0; i < n_t; ++i) {
      const double wgt = (i == 0 || i + 1 == n_t) ? 0.5 : 1.0;
      acc += wgt * std::pow(std::abs(means[i]) * vol_sqrt, p_t);
    }
    acc = std::pow(dt * acc, 1.0 / p_t);
  }
  return std::hypot(fluct, acc);
}
}  // namespace

FixedPointResult solve_fixed_point(const RandomFieldState& z0, const Potential& w,
                                   const ResponseSymbol& symbol,
                                   const EvolutionConfig& evo, const NormSpec& norm,
                                   double tol, std::size_t max_iter,
                                   const PhiOptions& opt) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_fixed_point: tol must be > 0");
  if (max_iter < 1) throw std::invalid_argument("solve_fixed_point: max_iter >= 1");
  evo.validate(z0.grid);
  const std::size_t n_t = evo.steps() + 1;
  const double dt = evo.dt;

  DensityPath cur;
  cur.times.resize(n_t);
  for (std::size_t i = 0; i < n_t; ++i) cur.times[i] = static_cast<double>(i) * dt;
  cur.rho.assign(n_t, std::vector<double>(z0.grid.size(), 0.0));
  cur.V = cur.rho;

  FixedPointResult result;
  int bad_streak = 0;
  for (std::size_t iter = 1; iter <= max_iter; ++iter) {
    DensityPath next = apply_Phi(cur, z0, w, symbol, opt);
    const double r = path_residual(z0.grid, next.rho, cur.rho, dt, norm);
    result.residuals.push_back(r);
    if (result.residuals.size() >= 2) {
      const double prev = result.residuals[result.residuals.size() - 2];
      const double ratio = prev > 0.0 ? r / prev
                                      : (r > 0.0
                                             ? std::numeric_limits<double>::infinity()
                                             : 0.0);
      result.ratios.push_back(ratio);
      bad_streak = ratio >= 1.0 ? bad_streak + 1 : 0;
    }
    cur = std::move(next);
    result.iterations = iter;
    if (r <= tol) {
      result.converged = true;
      break;
    }
    if (bad_streak >= 3) {
      result.non_contraction = true;
      break;
    }
  }
  result.rho = std::move(cur);
  return result;
}

}  // namespace rfh
