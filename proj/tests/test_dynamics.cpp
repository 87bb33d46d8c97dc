#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "doctest.h"
#include "rfh/dynamics.hpp"
#include "rfh/errors.hpp"
#include "rfh/fields.hpp"
#include "rfh/config.hpp"
#include "rfh/io.hpp"

using namespace rfh;

namespace {

const double pi = std::acos(-1.0);

std::vector<cplx> plane_wave(const SpectralGrid& grid, const std::array<double, 3>& xi,
                             cplx amp) {
  std::vector<cplx> u(grid.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    // Flat index decomposes with the last axis innermost.
    std::size_t rem = p;
    double phase = 0.0;
    for (int a = grid.dim - 1; a >= 0; --a) {
      const std::size_t idx = rem % grid.N;
      rem /= grid.N;
      phase += xi[static_cast<std::size_t>(a)] * grid.dx() * static_cast<double>(idx);
    }
    u[p] = amp * cplx(std::cos(phase), std::sin(phase));
  }
  return u;
}

std::vector<cplx> random_field(const SpectralGrid& grid, unsigned seed, double amp) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<cplx> u(grid.size());
  for (auto& v : u) v = amp * cplx(gauss(rng), gauss(rng));
  return u;
}

double mass(const SpectralGrid& grid, const std::vector<cplx>& u) {
  double s = 0.0;
  for (const auto& v : u) s += std::norm(v);
  return s * grid.cell();
}

double max_abs_diff(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  double m = 0.0;
  for (std::size_t p = 0; p < a.size(); ++p) m = std::max(m, std::abs(a[p] - b[p]));
  return m;
}

std::vector<double> bump(const SpectralGrid& grid, double amp, double width) {
  std::vector<double> u(grid.size());
  for (std::size_t p = 0; p < u.size(); ++p) {
    std::size_t rem = p;
    double r_sq = 0.0;
    for (int a = grid.dim - 1; a >= 0; --a) {
      const double x = grid.dx() * static_cast<double>(rem % grid.N) - 0.5 * grid.L;
      rem /= grid.N;
      r_sq += x * x;
    }
    u[p] = amp * std::exp(-0.5 * r_sq / (width * width));
  }
  return u;
}

std::vector<cplx> to_complex(const std::vector<double>& u) {
  std::vector<cplx> v(u.size());
  for (std::size_t p = 0; p < u.size(); ++p) v[p] = u[p];
  return v;
}

ResponseSymbol flat_table(const std::vector<double>& taus, const std::vector<double>& ks,
                          cplx value) {
  ResponseSymbol s;
  s.tau_grid = taus;
  s.k_grid = ks;
  s.values.assign(taus.size() * ks.size(), SymbolPoint{value, 0.0, false});
  return s;
}

}  // namespace

TEST_CASE("free propagator: identity, plane-wave phase, group law") {
  auto grid = SpectralGrid::make(1, 8, 2.0 * pi);
  auto u = plane_wave(grid, {2.0, 0.0, 0.0}, cplx(0.7, -0.3));
  const double m = 0.45;

  auto same = free_step(grid, u, m, 0.0);
  CHECK(max_abs_diff(same, u) == 0.0);

  const double dt = 0.3;
  auto stepped = free_step(grid, u, m, dt);
  const cplx expect_phase = std::exp(cplx(0.0, -dt * (m + 4.0)));
  double worst = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p)
    worst = std::max(worst, std::abs(stepped[p] - expect_phase * u[p]));
  CHECK(worst < 1e-14);

  auto mixed = random_field(grid, 11, 1.0);
  auto two = free_step(grid, free_step(grid, mixed, m, 0.1), m, 0.2);
  auto one = free_step(grid, mixed, m, 0.3);
  CHECK(max_abs_diff(two, one) < 1e-13);
}

TEST_CASE("split step: exact for constant potential, unitary for any") {
  auto grid = SpectralGrid::make(2, 8, 2.0 * pi);
  auto u = random_field(grid, 5, 0.8);
  const double m = -0.2, dt = 0.15, c = 0.6;

  std::vector<double> V_const(grid.size(), c);
  auto split = sv_step(grid, u, V_const, m, dt);
  auto exact = free_step(grid, u, m, dt);
  const cplx phase = std::exp(cplx(0.0, -dt * c));
  for (auto& v : exact) v *= phase;
  CHECK(max_abs_diff(split, exact) < 1e-14);

  auto V = bump(grid, 1.3, 1.0);
  auto kicked = sv_step(grid, u, V, m, dt);
  CHECK(mass(grid, kicked) == doctest::Approx(mass(grid, u)).epsilon(1e-13));
}

TEST_CASE("state-level split step advances time and trips on bad potential") {
  auto grid = SpectralGrid::make(1, 8, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(1, 1.0), grid, 1.0);
  auto state = RandomFieldState::make(grid, modes, 0.3);
  state.z[0] = random_field(grid, 2, 0.1);

  std::vector<double> V(grid.size(), 0.25);
  sv_step(state, V, 0.05);
  CHECK(state.t == doctest::Approx(0.05).epsilon(1e-15));

  std::vector<double> bad(grid.size(), 0.25);
  bad[3] = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sv_step(state, bad, 0.05), numerical_guard_error);
  CHECK_THROWS_AS(sv_step(state, std::vector<double>(7, 0.0), 0.05),
                  std::invalid_argument);
}

TEST_CASE("evolution config validation") {
  auto grid = SpectralGrid::make(1, 8, 2.0 * pi);
  EvolutionConfig ok;
  ok.dt = 0.1;
  ok.t_end = 1.0;
  ok.validate(grid);
  CHECK(ok.steps() == 10);

  EvolutionConfig bad = ok;
  bad.dt = 0.0;
  CHECK_THROWS_AS(bad.validate(grid), std::invalid_argument);
  bad = ok;
  bad.t_end = 1.03;  // not an integer number of steps
  CHECK_THROWS_AS(bad.validate(grid), std::invalid_argument);
  bad = ok;
  bad.snapshots = 2;
  CHECK_THROWS_AS(bad.validate(grid), std::invalid_argument);
  bad = ok;
  bad.dt = 0.5;  // dt * max|xi|^2 = 8 exceeds the bandwidth bound
  CHECK_THROWS_AS(bad.validate(grid), std::invalid_argument);
}

TEST_CASE("zero perturbation stays exactly on the steady state") {
  auto grid = SpectralGrid::make(3, 8, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(3, 1.0), grid, 1.0);
  auto w = Potential::point_mass(-0.5);
  auto params = SteadyStateParams::make(MomentumDistribution::fermi_zero(3, 1.0), w);
  auto state = RandomFieldState::make(grid, modes, params.m);

  EvolutionConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 1.0;
  cfg.snapshots = 5;
  auto res = run_ivp(state, w, cfg);
  REQUIRE(!res.aborted);
  double rho_peak = 0.0;
  for (const auto& snap : res.path.rho)
    for (double r : snap) rho_peak = std::max(rho_peak, std::abs(r));
  CHECK(rho_peak < 1e-12);
  double z_peak = 0.0;
  for (const auto& zk : res.final_state.z)
    for (const auto& v : zk) z_peak = std::max(z_peak, std::abs(v));
  CHECK(z_peak < 1e-12);
}

TEST_CASE("shifting the zero-point constant only phases the perturbation") {
  auto grid = SpectralGrid::make(1, 16, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(1, 1.0), grid, 1.0);
  auto w = Potential::point_mass(-0.3);
  const double c = 0.9;

  EvolutionConfig cfg;
  cfg.dt = 0.02;
  cfg.t_end = 0.6;
  cfg.snapshots = 4;

  auto make_initial = [&](double m) {
    auto s = RandomFieldState::make(grid, modes, m);
    s.z[1] = to_complex(bump(grid, 0.05, 0.7));
    s.extra.push_back(random_field(grid, 7, 0.02));
    return s;
  };
  auto a = run_ivp(make_initial(0.25), w, cfg);
  auto b = run_ivp(make_initial(0.25 + c), w, cfg);
  REQUIRE(!a.aborted);
  REQUIRE(!b.aborted);

  double rho_diff = 0.0;
  for (std::size_t i = 0; i < a.path.rho.size(); ++i)
    for (std::size_t p = 0; p < a.path.rho[i].size(); ++p)
      rho_diff = std::max(rho_diff, std::abs(a.path.rho[i][p] - b.path.rho[i][p]));
  CHECK(rho_diff < 1e-12);

  const cplx phase = std::exp(cplx(0.0, -cfg.t_end * c));
  for (std::size_t k = 0; k < modes.size(); ++k) {
    double worst = 0.0;
    for (std::size_t p = 0; p < grid.size(); ++p)
      worst = std::max(worst,
                       std::abs(b.final_state.z[k][p] - phase * a.final_state.z[k][p]));
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("driver reproduces a hand-rolled split-step loop") {
  auto grid = SpectralGrid::make(1, 8, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(1, 1.0), grid, 1.0);
  auto w = Potential::gaussian(-0.4, 1.0);
  const double m = 0.7;

  auto initial = RandomFieldState::make(grid, modes, m);
  initial.z[1] = to_complex(bump(grid, 0.1, 0.8));
  initial.extra.push_back(random_field(grid, 3, 0.05));

  EvolutionConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 0.5;
  cfg.snapshots = 3;
  auto res = run_ivp(initial, w, cfg);
  REQUIRE(!res.aborted);

  // Manual loop over the combined fields x_k = y_k + z_k.
  std::vector<std::vector<cplx>> xs(modes.size());
  for (std::size_t k = 0; k < modes.size(); ++k) {
    xs[k] = y_field(grid, modes.modes[k], m, 0.0);
    for (std::size_t p = 0; p < grid.size(); ++p) xs[k][p] += initial.z[k][p];
  }
  std::vector<std::vector<cplx>> extras = initial.extra;
  const double background = steady_density(modes);
  auto density_now = [&]() {
    std::vector<double> rho(grid.size(), -background);
    for (const auto& x : xs)
      for (std::size_t p = 0; p < grid.size(); ++p) rho[p] += std::norm(x[p]);
    for (const auto& e : extras)
      for (std::size_t p = 0; p < grid.size(); ++p) rho[p] += std::norm(e[p]);
    return rho;
  };
  for (std::size_t step = 0; step < cfg.steps(); ++step) {
    auto V = hartree_potential(density_now(), w, grid);
    for (auto& x : xs) x = sv_step(grid, x, V, m, cfg.dt);
    for (auto& e : extras) e = sv_step(grid, e, V, m, cfg.dt);
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    auto y = y_field(grid, modes.modes[k], m, cfg.t_end);
    for (std::size_t p = 0; p < grid.size(); ++p)
      worst = std::max(worst, std::abs(res.final_state.z[k][p] - (xs[k][p] - y[p])));
  }
  for (std::size_t p = 0; p < grid.size(); ++p)
    worst = std::max(worst, std::abs(res.final_state.extra[0][p] - extras[0][p]));
  CHECK(worst < 1e-13);

  auto rho_end = density_now();
  const auto& rho_sampled = res.path.rho.back();
  double rho_diff = 0.0;
  for (std::size_t p = 0; p < grid.size(); ++p)
    rho_diff = std::max(rho_diff, std::abs(rho_end[p] - rho_sampled[p]));
  CHECK(rho_diff < 1e-13);
}

TEST_CASE("picard corrector stays unitary") {
  auto grid = SpectralGrid::make(1, 16, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(1, 1.0), grid, 1.0);
  auto initial = RandomFieldState::make(grid, modes, 0.4);
  initial.z[0] = to_complex(bump(grid, 0.2, 0.6));

  EvolutionConfig cfg;
  cfg.dt = 0.05;
  cfg.t_end = 0.5;
  cfg.snapshots = 3;
  cfg.self_consistency = SelfConsistency::Picard2;
  auto res = run_ivp(initial, Potential::point_mass(-0.6), cfg);
  REQUIRE(!res.aborted);

  for (std::size_t k = 0; k < modes.size(); ++k) {
    auto y0 = y_field(grid, modes.modes[k], initial.m, 0.0);
    auto yT = y_field(grid, modes.modes[k], initial.m, cfg.t_end);
    std::vector<cplx> x0(grid.size()), xT(grid.size());
    for (std::size_t p = 0; p < grid.size(); ++p) {
      x0[p] = y0[p] + initial.z[k][p];
      xT[p] = yT[p] + res.final_state.z[k][p];
    }
    CHECK(mass(grid, xT) == doctest::Approx(mass(grid, x0)).epsilon(1e-12));
  }
}

TEST_CASE("ivp guards against density blowup") {
  auto grid = SpectralGrid::make(1, 8, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(1, 1.0), grid, 1.0);
  auto initial = RandomFieldState::make(grid, modes, 0.0);
  initial.extra.push_back(to_complex(bump(grid, 1e120, 0.8)));

  EvolutionConfig cfg;
  cfg.dt = 0.1;
  cfg.t_end = 1.0;
  cfg.snapshots = 3;
  auto res = run_ivp(initial, Potential::point_mass(1.0), cfg);
  CHECK(res.aborted);
  CHECK(!res.guard_message.empty());
}

TEST_CASE("mode symbol: conjugate symmetry and axis-averaged table") {
  auto grid = SpectralGrid::make(2, 8, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(2, 1.0), grid, 1.0);
  const double eta = 0.3;

  for (double tau : {0.0, 0.7, 2.3}) {
    auto plus = mode_symbol(modes, {1.0, 0.0, 0.0}, tau, eta);
    auto minus = mode_symbol(modes, {1.0, 0.0, 0.0}, -tau, eta);
    CHECK(std::abs(minus - std::conj(plus)) < 1e-14);
  }

  std::vector<double> taus{0.0, 1.0};
  std::vector<double> ks{1.0, 2.0};
  auto table = build_mode_symbol_table(modes, taus, ks, eta);
  for (std::size_t i = 0; i < taus.size(); ++i)
    for (std::size_t j = 0; j < ks.size(); ++j) {
      auto ex = 0.5 * (mode_symbol(modes, {ks[j], 0.0, 0.0}, taus[i], eta) +
                       mode_symbol(modes, {0.0, ks[j], 0.0}, taus[i], eta));
      CHECK(std::abs(table.at(i, j).value - ex) < 1e-14);
    }

  CHECK_THROWS_AS(mode_symbol(modes, {1.0, 0.0, 0.0}, 0.0, 0.0),
                  std::invalid_argument);
}

TEST_CASE("time and lattice frequency helpers") {
  auto f8 = time_frequencies(8, 0.25);
  REQUIRE(f8.size() == 5);
  for (std::size_t n = 0; n < f8.size(); ++n)
    CHECK(f8[n] == doctest::Approx(2.0 * pi * static_cast<double>(n) / 2.0)
                       .epsilon(1e-15));
  auto f9 = time_frequencies(9, 0.5);
  REQUIRE(f9.size() == 5);
  CHECK(f9[4] == doctest::Approx(2.0 * pi * 4.0 / 4.5).epsilon(1e-15));

  auto grid = SpectralGrid::make(2, 4, 2.0 * pi);
  auto radii = lattice_radii(grid);
  // Axis frequencies {-2,-1,0,1}: distinct nonzero magnitudes of the lattice.
  const std::vector<double> expect{1.0, std::sqrt(2.0), 2.0, std::sqrt(5.0),
                                   std::sqrt(8.0)};
  REQUIRE(radii.size() == expect.size());
  for (std::size_t i = 0; i < radii.size(); ++i)
    CHECK(radii[i] == doctest::Approx(expect[i]).epsilon(1e-14));
}

TEST_CASE("direct response operator: linear, causal, zero without potential") {
  auto grid = SpectralGrid::make(1, 8, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(1, 1.0), grid, 1.0);
  const double m = 0.2, dt = 0.1;
  const std::size_t n_t = 9;

  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  auto path = [&](std::size_t zero_until) {
    std::vector<std::vector<double>> u(n_t, std::vector<double>(grid.size(), 0.0));
    for (std::size_t i = zero_until; i < n_t; ++i)
      for (auto& v : u[i]) v = gauss(rng);
    return u;
  };
  auto u = path(0), v = path(0);
  auto w = Potential::gaussian(0.8, 0.9);

  auto Lu = apply_L_direct(u, modes, m, w, grid, dt);
  auto Lv = apply_L_direct(v, modes, m, w, grid, dt);
  std::vector<std::vector<double>> combo(n_t, std::vector<double>(grid.size()));
  for (std::size_t i = 0; i < n_t; ++i)
    for (std::size_t p = 0; p < grid.size(); ++p)
      combo[i][p] = 2.0 * u[i][p] - 3.0 * v[i][p];
  auto Lcombo = apply_L_direct(combo, modes, m, w, grid, dt);
  double lin = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < n_t; ++i)
    for (std::size_t p = 0; p < grid.size(); ++p) {
      lin = std::max(lin, std::abs(Lcombo[i][p] - 2.0 * Lu[i][p] + 3.0 * Lv[i][p]));
      scale = std::max(scale, std::abs(Lcombo[i][p]));
    }
  CHECK(lin < 1e-12 * std::max(1.0, scale));

  auto Lzero = apply_L_direct(u, modes, m, Potential::zero(), grid, dt);
  double z = 0.0;
  for (const auto& row : Lzero)
    for (double val : row) z = std::max(z, std::abs(val));
  CHECK(z == 0.0);

  const std::size_t j0 = 4;
  auto late = path(j0);
  auto Llate = apply_L_direct(late, modes, m, w, grid, dt);
  double before = 0.0, after = 0.0;
  for (std::size_t i = 0; i < n_t; ++i)
    for (double val : Llate[i])
      (i <= j0 ? before : after) = std::max(i <= j0 ? before : after, std::abs(val));
  // At i = j0 the single endpoint term of the Duhamel trapezoid is purely
  // imaginary before the 2 Re projection, so only rounding dust survives.
  CHECK(before < 1e-15 * std::max(1.0, after));
  CHECK(after > 1e-3 * before + 1e-6);
}

TEST_CASE("fixed-point map guards: multiplier crossing and table coverage") {
  auto grid = SpectralGrid::make(1, 8, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(1, 1.0), grid, 1.0);
  auto z0 = RandomFieldState::make(grid, modes, 0.0);

  DensityPath rho;
  const std::size_t n_t = 5;
  const double dt = 0.1;
  for (std::size_t i = 0; i < n_t; ++i) {
    rho.times.push_back(static_cast<double>(i) * dt);
    rho.rho.push_back(std::vector<double>(grid.size(), 0.0));
  }

  // w_hat m = 1 everywhere: the inf of |1 - w_hat m| is zero.
  auto crossing = flat_table({0.0, 40.0}, {0.5, 8.0}, cplx(2.0, 0.0));
  CHECK_THROWS_AS(apply_Phi(rho, z0, Potential::point_mass(0.5), crossing, {}),
                  numerical_guard_error);

  // Healthy multiplier but a k range that misses the lattice: coverage error.
  auto narrow = flat_table({0.0, 40.0}, {0.5, 1.5}, cplx(0.1, 0.0));
  CHECK_THROWS_AS(apply_Phi(rho, z0, Potential::point_mass(-0.2), narrow, {}),
                  std::invalid_argument);

  CHECK_THROWS_AS(apply_Phi(DensityPath{}, z0, Potential::zero(),
                            flat_table({0.0, 40.0}, {0.5, 8.0}, cplx(0.0, 0.0)), {}),
                  std::invalid_argument);
}

TEST_CASE("fixed point: zero data converges immediately, small data contracts") {
  auto grid = SpectralGrid::make(3, 8, 2.0 * pi);
  auto modes = build_mode_set(MomentumDistribution::fermi_zero(3, 1.0), grid, 1.0);
  auto w = Potential::point_mass(-0.05 * std::pow(2.0 * pi, 1.5));
  auto params =
      SteadyStateParams::make(MomentumDistribution::fermi_zero(3, 1.0), w);

  EvolutionConfig evo;
  evo.dt = 0.1;
  evo.t_end = 2.0;
  evo.snapshots = 3;

  const double eta = 2.0 / evo.t_end;
  auto taus = time_frequencies(evo.steps() + 1, evo.dt);
  auto radii = lattice_radii(grid);
  auto symbol = build_mode_symbol_table(modes, taus, radii, eta);
  auto norm = NormSpec::parse(default_norm(3));

  auto zero = RandomFieldState::make(grid, modes, params.m);
  auto res0 = solve_fixed_point(zero, w, symbol, evo, norm, 1e-10, 5);
  CHECK(res0.converged);
  CHECK(res0.iterations == 1);
  CHECK(res0.residuals.front() < 1e-14);

  auto z0 = RandomFieldState::make(grid, modes, params.m);
  z0.extra.push_back(to_complex(bump(grid, 1e-3, 1.0)));
  auto res = solve_fixed_point(z0, w, symbol, evo, norm, 1e-12, 20);
  CHECK(res.converged);
  CHECK(!res.non_contraction);
  REQUIRE(!res.ratios.empty());
  for (double r : res.ratios) CHECK(r < 0.5);
}
