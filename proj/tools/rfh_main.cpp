#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rfh/config.hpp"
#include "rfh/errors.hpp"
#include "rfh/io.hpp"
#include "rfh/threads.hpp"

namespace fs = std::filesystem;
using namespace rfh;

namespace {

std::vector<double> linspace(double a, double b, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

ModeSet make_modes(const RunConfig& c, const SpectralGrid& grid) {
  double cutoff = c.modes.cutoff;
  if (cutoff <= 0.0)
    cutoff = std::min(support_radius(c.dist), grid.nyquist() * (1.0 - 1e-9));
  return build_mode_set(c.dist, grid, cutoff);
}

std::vector<cplx> bump_field(const SpectralGrid& grid, double amplitude,
                             double width) {
  std::vector<cplx> u(grid.size());
  const double dx = grid.dx();
  for (std::size_t p = 0; p < grid.size(); ++p) {
    std::size_t rest = p;
    double r2 = 0.0;
    for (int a = grid.dim - 1; a >= 0; --a) {
      const double x = dx * static_cast<double>(rest % grid.N);
      rest /= grid.N;
      const double d = x - 0.5 * grid.L;
      r2 += d * d;
    }
    u[p] = amplitude * std::exp(-r2 / (2.0 * width * width));
  }
  return u;
}

std::vector<cplx> random_field(const SpectralGrid& grid, double amplitude,
                               double width, std::uint64_t seed, std::size_t index) {
  std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ULL * (index + 1)));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cplx> coef(grid.size());
  const double inv_sqrt2 = 0.70710678118654752440;
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double env = std::exp(-0.5 * grid.xi_sq_at(p) * width * width);
    const double a = normal(rng);
    const double b = normal(rng);
    coef[p] = amplitude * env * inv_sqrt2 * cplx(a, b);
  }
  grid.to_phys(coef);
  return coef;
}

RandomFieldState make_initial_state(const RunConfig& c, const SpectralGrid& grid,
                                    const ModeSet& modes, double m) {
  RandomFieldState st = RandomFieldState::make(grid, modes, m);
  const PerturbationConfig& p = c.perturbation;
  if (p.kind == "zero" || p.amplitude == 0.0) return st;
  if (p.kind == "bump_extra") {
    st.extra.push_back(bump_field(grid, p.amplitude, p.width));
  } else if (p.kind == "bump_mode") {
    if (p.mode_index >= modes.size())
      throw std::invalid_argument("perturbation.mode_index out of range");
    st.z[p.mode_index] = bump_field(grid, p.amplitude, p.width);
  } else {  // random_extra
    for (std::size_t j = 0; j < p.count; ++j)
      st.extra.push_back(random_field(grid, p.amplitude, p.width, c.seed, j));
  }
  return st;
}

json criterion_to_json(const CriterionReport& r) {
  json j;
  j["name"] = r.name;
  j["value"] = std::isfinite(r.value) ? json(r.value) : json();
  j["value_text"] = format_double(r.value);
  j["satisfied"] = r.satisfied;
  j["detail"] = r.detail;
  return j;
}

int cmd_steady(const RunConfig& c, const fs::path& out) {
  const double nsq = norm_squared(c.dist, c.quad);
  if (nsq <= 0.0)
    throw std::invalid_argument("steady: the distribution is identically zero");
  const RadialProfile profile =
      compute_hf_profile(c.dist, c.steady.r_max, c.steady.n, c.quad);
  {
    std::vector<std::vector<double>> rows;
    rows.reserve(profile.size());
    for (std::size_t i = 0; i < profile.size(); ++i)
      rows.push_back({profile.nodes()[i], profile.values()[i]});
    write_csv((out / "hf_profile.csv").string(), {"r", "h"}, rows);
  }
  const double L1 = hf_L1_norm(profile, c.quad);
  const SteadyStateParams params = SteadyStateParams::make(c.dist, c.pot, c.quad);
  json meta;
  meta["dim"] = c.dist.dim;
  meta["norm_squared"] = nsq;
  meta["steady_density"] = nsq;  // E|Y|^2 = ||f||^2 in the lattice convention
  meta["m"] = params.m;
  meta["support_radius"] = support_radius(c.dist);
  meta["tail"] = {{"exponent", profile.tail_p()},
                  {"log_C", std::isfinite(profile.tail_log_C())
                                ? json(profile.tail_log_C())
                                : json()},
                  {"valid", profile.tail_valid()}};
  meta["hf_L1"] = std::isfinite(L1) ? json(L1) : json();
  meta["hf_L1_finite"] = std::isfinite(L1) != 0;
  write_json((out / "steady.json").string(), meta);
  std::cout << "steady: ||f||^2 = " << nsq << ", m = " << params.m
            << ", ||h_f||_L1 = " << L1 << "\n";
  return 0;
}

int cmd_response(const RunConfig& c, const fs::path& out) {
  ResponseSymbol table;
  const auto k_grid = linspace(c.table.k_min, c.table.k_max, c.table.k_count);
  if (c.table.source == "quadrature") {
    std::vector<double> tau_grid;
    if (c.table.resonance_eps.empty())
      tau_grid = linspace(0.0, c.table.tau_max, c.table.tau_count);
    else
      tau_grid = resonance_clustered_tau_grid(c.table.tau_max,
                                              static_cast<int>(c.table.tau_count),
                                              k_grid, c.table.resonance_eps);
    table = build_symbol_table(c.dist, tau_grid, k_grid, c.symbol);
  } else {
    const SpectralGrid grid = c.grid.make();
    const ModeSet modes = make_modes(c, grid);
    const double eta = c.table.eta > 0.0 ? c.table.eta : 2.0 / c.evo.t_end;
    const auto tau_grid = linspace(0.0, c.table.tau_max, c.table.tau_count);
    table = build_mode_symbol_table(modes, tau_grid, k_grid, eta);
  }
  write_symbol((out / "symbol.csv").string(), (out / "symbol_meta.json").string(),
               table);

  const RadialProfile profile = compute_hf_profile(
      c.dist, c.symbol.profile_r_max, c.symbol.profile_n, c.quad);
  json criteria = json::array();
  criteria.push_back(criterion_to_json(check_SC(profile, c.pot, c.quad)));
  criteria.push_back(criterion_to_json(check_CS(profile, c.pot, c.quad)));
  if (c.dist.dim == 3)
    criteria.push_back(criterion_to_json(check_cor_3d(c.pot, 0.1, 0.1)));
  try {
    criteria.push_back(
        criterion_to_json(symbol_gap(table, c.pot, c.fixedpoint.phi.gap_margin)));
  } catch (const std::invalid_argument& e) {
    json g;
    g["name"] = "GAP";
    g["value"] = json();
    g["value_text"] = "nan";
    g["satisfied"] = false;
    g["detail"] = e.what();
    criteria.push_back(std::move(g));
  }
  write_json((out / "criteria.json").string(), criteria);

  if (c.dist.kind == DistKind::FermiZero && c.dist.dim == 3 &&
      c.table.source == "quadrature") {
    // Residual after removing the explicit resonance-log part: the bounded
    // remainder of the symbol decomposition.
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < table.tau_grid.size(); ++i)
      for (std::size_t j = 0; j < table.k_grid.size(); ++j) {
        const SymbolPoint& p = table.at(i, j);
        const double lt = log_term_3d(table.tau_grid[i], table.k_grid[j]);
        rows.push_back({table.tau_grid[i], table.k_grid[j], std::abs(p.value), lt,
                        std::abs(p.value - lt)});
      }
    write_csv((out / "logterm_residual.csv").string(),
              {"tau", "k", "abs_m", "log_term", "abs_residual"}, rows);
  }
  std::cout << "response: table " << table.tau_grid.size() << " x "
            << table.k_grid.size() << ", flagged " << table.flagged_count() << "\n";
  return 0;
}

int cmd_simulate(const RunConfig& c, const fs::path& out) {
  const SpectralGrid grid = c.grid.make();
  const ModeSet modes = make_modes(c, grid);
  const double m = SteadyStateParams::make(c.dist, c.pot, c.quad).m;
  const RandomFieldState initial = make_initial_state(c, grid, modes, m);
  c.evo.validate(grid);
  const IvpResult res = run_ivp(initial, c.pot, c.evo);

  write_density_path((out / "density_path.csv").string(), grid, res.path);
  if (!res.scatter.times.empty())
    write_cauchy((out / "cauchy.csv").string(), res.scatter);
  save_state((out / "final_state.bin").string(), res.final_state);

  std::vector<std::string> norm_strs = c.norms;
  if (norm_strs.empty()) norm_strs.push_back(default_norm(grid.dim));
  std::vector<NormSpec> specs;
  for (const auto& s : norm_strs) specs.push_back(NormSpec::parse(s));
  {
    std::vector<std::string> header{"t"};
    for (const auto& s : norm_strs) header.push_back(s);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < res.path.times.size(); ++i) {
      std::vector<double> row{res.path.times[i]};
      std::vector<cplx> u(res.path.rho[i].begin(), res.path.rho[i].end());
      for (const auto& spec : specs)
        row.push_back(spatial_norm(grid, u, spec.space));
      rows.push_back(std::move(row));
    }
    write_csv((out / "norms.csv").string(), header, rows);
  }

  // Combined-field mass drift: each x_k = y_k + z_k evolves unitarily.
  double mass_drift = 0.0;
  for (std::size_t k = 0; k < modes.size(); ++k) {
    auto mass_of = [&](const RandomFieldState& st, std::size_t kk) {
      const auto y = y_field(grid, modes.modes[kk], m, st.t);
      double acc = 0.0;
      for (std::size_t p = 0; p < grid.size(); ++p)
        acc += std::norm(y[p] + st.z[kk][p]);
      return grid.cell() * acc;
    };
    const double m0 = mass_of(initial, k);
    const double m1 = mass_of(res.final_state, k);
    if (m0 > 0.0) mass_drift = std::max(mass_drift, std::abs(m1 - m0) / m0);
  }

  json meta;
  meta["aborted"] = res.aborted;
  meta["guard_message"] = res.guard_message;
  meta["times"] = res.path.times;
  meta["mass_drift_rel"] = mass_drift;
  meta["modes"] = modes.size();
  meta["extras"] = initial.extra.size();
  {
    json mixed = json::object();
    const auto& ts = res.path.times;
    const bool uniform = [&] {
      if (ts.size() < 2) return false;
      const double dt = ts[1] - ts[0];
      for (std::size_t i = 1; i + 1 < ts.size(); ++i)
        if (std::abs(ts[i + 1] - ts[i] - dt) > 1e-9 * dt) return false;
      return true;
    }();
    if (uniform) {
      std::vector<std::vector<cplx>> snaps;
      for (const auto& r : res.path.rho) snaps.emplace_back(r.begin(), r.end());
      for (std::size_t s = 0; s < specs.size(); ++s)
        mixed[norm_strs[s]] = mixed_norm(grid, snaps, ts[1] - ts[0], specs[s]);
    }
    meta["mixed_norms"] = std::move(mixed);
  }
  write_json((out / "simulate.json").string(), meta);
  std::cout << "simulate: " << res.path.times.size() << " samples, mass drift "
            << mass_drift << (res.aborted ? ", ABORTED: " + res.guard_message : "")
            << "\n";
  return res.aborted ? 3 : 0;
}

int cmd_fixedpoint(const RunConfig& c, const fs::path& out) {
  const SpectralGrid grid = c.grid.make();
  const ModeSet modes = make_modes(c, grid);
  const double m = SteadyStateParams::make(c.dist, c.pot, c.quad).m;
  RandomFieldState z0 = make_initial_state(c, grid, modes, m);
  c.evo.validate(grid);
  const std::size_t n_t = c.evo.steps() + 1;

  ResponseSymbol table;
  const auto taus = time_frequencies(n_t, c.evo.dt);
  const auto ks = lattice_radii(grid);
  if (c.table.source == "quadrature") {
    table = build_symbol_table(c.dist, taus, ks, c.symbol);
  } else {
    const double eta = c.table.eta > 0.0 ? c.table.eta : 2.0 / c.evo.t_end;
    table = build_mode_symbol_table(modes, taus, ks, eta);
  }
  write_symbol((out / "symbol.csv").string(), (out / "symbol_meta.json").string(),
               table);

  const NormSpec norm = NormSpec::parse(
      c.fixedpoint.norm.empty() ? default_norm(grid.dim) : c.fixedpoint.norm);
  const FixedPointResult res =
      solve_fixed_point(z0, c.pot, table, c.evo, norm, c.fixedpoint.tol,
                        c.fixedpoint.max_iter, c.fixedpoint.phi);

  {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < res.residuals.size(); ++i)
      rows.push_back({static_cast<double>(i + 1), res.residuals[i],
                      i == 0 ? std::numeric_limits<double>::quiet_NaN()
                             : res.ratios[i - 1]});
    write_csv((out / "residuals.csv").string(), {"iteration", "residual", "ratio"},
              rows);
  }
  write_density_path((out / "rho_final.csv").string(), grid, res.rho);
  json meta;
  meta["converged"] = res.converged;
  meta["iterations"] = res.iterations;
  meta["non_contraction"] = res.non_contraction;
  meta["residuals"] = res.residuals;
  meta["ratios"] = res.ratios;
  meta["norm"] = norm.str();
  meta["tol"] = c.fixedpoint.tol;
  write_json((out / "fixedpoint.json").string(), meta);
  std::cout << "fixedpoint: " << (res.converged ? "converged" : "NOT converged")
            << " in " << res.iterations << " iterations"
            << (res.non_contraction ? " (non-contraction)" : "") << "\n";
  return res.converged ? 0 : 4;
}

int cmd_crosscheck(const RunConfig& c, const fs::path& out) {
  const SpectralGrid grid = c.grid.make();
  const ModeSet modes = make_modes(c, grid);
  const double m = SteadyStateParams::make(c.dist, c.pot, c.quad).m;
  const CrosscheckConfig& cc = c.crosscheck;
  const double half = static_cast<double>(grid.N / 2);
  for (int a = 0; a < 3; ++a) {
    if (a >= grid.dim && cc.harmonic[a] != 0)
      throw std::invalid_argument("crosscheck.harmonic: component beyond dim");
    if (std::abs(cc.harmonic[a]) >= half && cc.harmonic[a] != 0)
      throw std::invalid_argument("crosscheck.harmonic: beyond the Nyquist index");
  }

  // Spatial factor cos(xi0 . x) on the lattice.
  std::vector<double> spatial(grid.size());
  for (std::size_t p = 0; p < grid.size(); ++p) {
    std::size_t rest = p;
    double phase = 0.0;
    for (int a = grid.dim - 1; a >= 0; --a) {
      const double coord = static_cast<double>(rest % grid.N);
      rest /= grid.N;
      phase += 2.0 * std::acos(-1.0) * cc.harmonic[a] * coord /
               static_cast<double>(grid.N);
    }
    spatial[p] = std::cos(phase);
  }

  std::vector<std::vector<double>> rows;
  const double dt0 = cc.t_end / static_cast<double>(cc.base_steps);
  for (std::size_t l = 0; l < cc.levels; ++l) {
    const std::size_t steps = cc.base_steps << (3 * l);
    const double dt = dt0 / static_cast<double>(1u << (2 * l));
    const std::size_t n_t = steps + 1;
    std::vector<std::vector<double>> u(n_t, std::vector<double>(grid.size()));
    const double pi = std::acos(-1.0);
    for (std::size_t j = 0; j < n_t; ++j) {
      const double env = std::pow(
          std::sin(pi * static_cast<double>(j) / static_cast<double>(n_t)),
          cc.envelope_power);
      const double carrier =
          std::cos(2.0 * pi * cc.time_carrier * static_cast<double>(j) /
                   static_cast<double>(n_t));
      const double amp = env * carrier;
      for (std::size_t p = 0; p < grid.size(); ++p) u[j][p] = amp * spatial[p];
    }
    const auto direct = apply_L_direct(u, modes, m, c.pot, grid, dt);
    const auto table = build_mode_symbol_table(modes, time_frequencies(n_t, dt),
                                               lattice_radii(grid), cc.eta);
    const auto mult =
        apply_L_multiplier(u, table, c.pot, grid, dt, cc.taper_fraction);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < n_t; ++j)
      for (std::size_t p = 0; p < grid.size(); ++p) {
        const double d = direct[j][p] - mult[j][p];
        num += d * d;
        den += direct[j][p] * direct[j][p];
      }
    const double rel = den > 0.0 ? std::sqrt(num / den)
                                 : (num > 0.0 ? std::numeric_limits<double>::infinity()
                                              : 0.0);
    rows.push_back({static_cast<double>(l), static_cast<double>(steps), dt,
                    static_cast<double>(steps) * dt, rel});
    std::cout << "crosscheck level " << l << ": steps " << steps << ", dt " << dt
              << ", rel error " << rel << "\n";
  }
  write_csv((out / "crosscheck.csv").string(),
            {"level", "steps", "dt", "window", "rel_error"}, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"random-field Hartree laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  int threads = 1;
  std::uint64_t seed = 0;
  bool seed_given = false;

  const std::vector<std::string> names = {"steady", "response", "simulate",
                                          "fixedpoint", "crosscheck"};
  const std::vector<std::string> descs = {
      "momentum profile, h_f profile, tail fit, L1 norm",
      "response symbol table and stability criteria",
      "evolve a perturbation and record density/scattering diagnostics",
      "Picard iteration of the density fixed-point map",
      "direct vs multiplier response paths on a refinement ladder"};
  for (std::size_t i = 0; i < names.size(); ++i) {
    auto* sub = app.add_subcommand(names[i], descs[i]);
    sub->add_option("--config", config_path, "JSON config path")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (created if missing)");
    sub->add_option("--threads", threads, "worker thread count (0 = hardware)");
    auto* s = sub->add_option("--seed", seed, "Monte-Carlo seed override");
    sub->callback([s, &seed_given] { seed_given = s->count() > 0; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    set_thread_count(threads);
    const json raw = read_json(config_path);
    RunConfig cfg =
        parse_config(raw, fs::path(config_path).parent_path().string());
    if (seed_given) cfg.seed = seed;
    const fs::path out(out_dir);
    fs::create_directories(out);
    write_json((out / "config_resolved.json").string(), echo_config(cfg));

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "steady") return cmd_steady(cfg, out);
    if (cmd == "response") return cmd_response(cfg, out);
    if (cmd == "simulate") return cmd_simulate(cfg, out);
    if (cmd == "fixedpoint") return cmd_fixedpoint(cfg, out);
    return cmd_crosscheck(cfg, out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const numerical_guard_error& e) {
    std::cerr << "numerical guard: " << e.what() << "\n";
    return 3;
  } catch (const convergence_error& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
