#include "rfh/config.hpp"

#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "rfh/norms.hpp"

namespace rfh {

namespace {
// Tracks which keys of an object were consumed; parse errors carry the
// config path so the offending line is findable.
class Keys {
 public:
  Keys(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j.is_object())
      throw std::invalid_argument("config." + name_ + " must be an object");
  }

  bool has(const char* k) {
    seen_.insert(k);
    return j_.contains(k);
  }

  const json& at(const char* k) {
    seen_.insert(k);
    if (!j_.contains(k))
      throw std::invalid_argument("config." + name_ + ": missing key '" +
                                  std::string(k) + "'");
    return j_.at(k);
  }

  template <typename T>
  T get(const char* k, T def) {
    seen_.insert(k);
    if (!j_.contains(k)) return def;
    try {
      return j_.at(k).get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config." + name_ + "." + std::string(k) +
                                  ": wrong type");
    }
  }

  template <typename T>
  T require(const char* k) {
    const json& v = at(k);
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config." + name_ + "." + std::string(k) +
                                  ": wrong type");
    }
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key()))
        throw std::invalid_argument("config." + name_ + ": unknown key '" +
                                    item.key() + "'");
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::string resolve_path(const std::string& path, const std::string& base_dir) {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

// Accepts either inline arrays or a two-column CSV (first column abscissa).
void load_table(Keys& k, const char* x_key, const char* y_key,
                const std::string& base_dir, std::vector<double>& xs,
                std::vector<double>& ys) {
  if (k.has("csv")) {
    const auto rows = read_csv(resolve_path(k.require<std::string>("csv"), base_dir));
    for (const auto& row : rows) {
      if (row.size() < 2)
        throw std::invalid_argument("table csv: need two columns");
      xs.push_back(row[0]);
      ys.push_back(row[1]);
    }
  } else {
    xs = k.require<std::vector<double>>(x_key);
    ys = k.require<std::vector<double>>(y_key);
  }
}

MomentumDistribution parse_distribution(const json& j, const std::string& base_dir) {
  Keys k(j, "distribution");
  const auto kind = k.require<std::string>("kind");
  const int dim = k.get<int>("dim", 3);
  MomentumDistribution dist = MomentumDistribution::fermi_zero(3, 1.0);
  if (kind == "fermi_zero") {
    dist = MomentumDistribution::fermi_zero(dim, k.require<double>("mu"));
  } else if (kind == "fermi_dirac") {
    dist = MomentumDistribution::fermi_dirac(dim, k.require<double>("T"),
                                             k.require<double>("mu"));
  } else if (kind == "bose") {
    dist = MomentumDistribution::bose(dim, k.require<double>("T"),
                                      k.require<double>("mu"));
  } else if (kind == "boltzmann") {
    dist = MomentumDistribution::boltzmann(dim, k.require<double>("T"),
                                           k.require<double>("mu"));
  } else if (kind == "custom_radial") {
    CustomTable table;
    load_table(k, "rho", "val", base_dir, table.rho, table.val);
    const auto tail = k.get<std::string>("tail", "compact");
    if (tail == "compact")
      table.tail = CustomTail::Compact;
    else if (tail == "exponential")
      table.tail = CustomTail::Exponential;
    else
      throw std::invalid_argument("config.distribution.tail: compact | exponential");
    dist = MomentumDistribution::custom_radial(dim, std::move(table));
  } else {
    throw std::invalid_argument("config.distribution.kind: unknown '" + kind + "'");
  }
  k.finish();
  return dist;
}

Potential parse_potential(const json& j, const std::string& base_dir) {
  Keys k(j, "potential");
  const auto kind = k.require<std::string>("kind");
  Potential pot = Potential::zero();
  if (kind == "zero") {
    // nothing else to read
  } else if (kind == "point_mass") {
    pot = Potential::point_mass(k.require<double>("weight"));
  } else if (kind == "gaussian") {
    pot = Potential::gaussian(k.require<double>("weight"), k.require<double>("width"));
  } else if (kind == "yukawa") {
    pot = Potential::yukawa3d(k.require<double>("weight"),
                              k.require<double>("screening"));
  } else if (kind == "custom_fourier") {
    std::vector<double> ks, vs;
    load_table(k, "k", "val", base_dir, ks, vs);
    pot = Potential::custom_fourier(std::move(ks), std::move(vs));
  } else {
    throw std::invalid_argument("config.potential.kind: unknown '" + kind + "'");
  }
  k.finish();
  return pot;
}
}  // namespace

std::string default_norm(int dim) {
  return dim == 3 ? "L2t:Hs(0.5)" : "L2t:Hsdot(-0.5)";
}

RunConfig parse_config(const json& j, const std::string& base_dir) {
  RunConfig c;
  Keys top(j, "<root>");
  if (top.has("distribution"))
    c.dist = parse_distribution(top.at("distribution"), base_dir);
  if (top.has("potential")) c.pot = parse_potential(top.at("potential"), base_dir);

  if (top.has("grid")) {
    Keys k(top.at("grid"), "grid");
    c.grid.dim = k.get<int>("dim", c.grid.dim);
    c.grid.N = k.get<std::size_t>("N", c.grid.N);
    c.grid.L = k.get<double>("L", c.grid.L);
    c.grid.dealias = k.get<bool>("dealias", c.grid.dealias);
    k.finish();
    c.grid.make();  // validates
  }
  if (top.has("modes")) {
    Keys k(top.at("modes"), "modes");
    c.modes.cutoff = k.get<double>("cutoff", c.modes.cutoff);
    k.finish();
    if (c.modes.cutoff < 0.0)
      throw std::invalid_argument("config.modes.cutoff: must be >= 0");
  }
  if (top.has("evolution")) {
    Keys k(top.at("evolution"), "evolution");
    c.evo.dt = k.get<double>("dt", c.evo.dt);
    c.evo.t_end = k.get<double>("t_end", c.evo.t_end);
    c.evo.splitting_order = k.get<int>("splitting_order", 2);
    c.evo.dealias = k.get<bool>("dealias", c.evo.dealias);
    const auto sc = k.get<std::string>("self_consistency", "frozen");
    if (sc == "frozen")
      c.evo.self_consistency = SelfConsistency::FrozenV;
    else if (sc == "picard2")
      c.evo.self_consistency = SelfConsistency::Picard2;
    else
      throw std::invalid_argument("config.evolution.self_consistency: frozen | picard2");
    c.evo.snapshots = k.get<std::size_t>("snapshots", c.evo.snapshots);
    c.evo.scatter_sigma = k.get<double>("scatter_sigma", c.evo.scatter_sigma);
    c.evo.scatter_homogeneous =
        k.get<bool>("scatter_homogeneous", c.evo.scatter_homogeneous);
    k.finish();
  }
  if (top.has("quadrature")) {
    Keys k(top.at("quadrature"), "quadrature");
    c.quad.abs_tol = k.get<double>("abs_tol", c.quad.abs_tol);
    c.quad.rel_tol = k.get<double>("rel_tol", c.quad.rel_tol);
    c.quad.max_intervals = k.get<std::size_t>("max_intervals", c.quad.max_intervals);
    k.finish();
    if (!(c.quad.abs_tol > 0.0) || c.quad.rel_tol < 0.0 || c.quad.max_intervals < 1)
      throw std::invalid_argument("config.quadrature: abs_tol > 0, rel_tol >= 0");
  }
  if (top.has("symbol")) {
    Keys k(top.at("symbol"), "symbol");
    c.symbol.eta0 = k.get<double>("eta0", c.symbol.eta0);
    c.symbol.t_factor = k.get<double>("t_factor", c.symbol.t_factor);
    c.symbol.flag_rel_tol = k.get<double>("flag_rel_tol", c.symbol.flag_rel_tol);
    c.symbol.profile_r_max = k.get<double>("profile_r_max", c.symbol.profile_r_max);
    c.symbol.profile_n = k.get<int>("profile_n", c.symbol.profile_n);
    c.table.source = k.get<std::string>("source", c.table.source);
    c.table.eta = k.get<double>("eta", c.table.eta);
    c.table.tau_max = k.get<double>("tau_max", c.table.tau_max);
    c.table.tau_count = k.get<std::size_t>("tau_count", c.table.tau_count);
    c.table.k_min = k.get<double>("k_min", c.table.k_min);
    c.table.k_max = k.get<double>("k_max", c.table.k_max);
    c.table.k_count = k.get<std::size_t>("k_count", c.table.k_count);
    c.table.resonance_eps =
        k.get<std::vector<double>>("resonance_eps", c.table.resonance_eps);
    k.finish();
    if (c.table.source != "modes" && c.table.source != "quadrature")
      throw std::invalid_argument("config.symbol.source: modes | quadrature");
    if (!(c.symbol.eta0 > 0.0) || !(c.symbol.t_factor > 0.0))
      throw std::invalid_argument("config.symbol: eta0 and t_factor must be > 0");
    if (!(c.table.tau_max > 0.0) || c.table.tau_count < 2 ||
        !(c.table.k_min > 0.0) || !(c.table.k_max > c.table.k_min) ||
        c.table.k_count < 2)
      throw std::invalid_argument("config.symbol: bad table grid bounds");
  }
  if (top.has("perturbation")) {
    Keys k(top.at("perturbation"), "perturbation");
    c.perturbation.kind = k.get<std::string>("kind", c.perturbation.kind);
    c.perturbation.amplitude = k.get<double>("amplitude", c.perturbation.amplitude);
    c.perturbation.width = k.get<double>("width", c.perturbation.width);
    c.perturbation.count = k.get<std::size_t>("count", c.perturbation.count);
    c.perturbation.mode_index = k.get<std::size_t>("mode_index", 0);
    k.finish();
    const auto& kind = c.perturbation.kind;
    if (kind != "zero" && kind != "bump_extra" && kind != "random_extra" &&
        kind != "bump_mode")
      throw std::invalid_argument(
          "config.perturbation.kind: zero | bump_extra | random_extra | bump_mode");
    if (!(c.perturbation.width > 0.0))
      throw std::invalid_argument("config.perturbation.width: must be > 0");
    if (!std::isfinite(c.perturbation.amplitude))
      throw std::invalid_argument("config.perturbation.amplitude: must be finite");
  }
  if (top.has("fixedpoint")) {
    Keys k(top.at("fixedpoint"), "fixedpoint");
    c.fixedpoint.tol = k.get<double>("tol", c.fixedpoint.tol);
    c.fixedpoint.max_iter = k.get<std::size_t>("max_iter", c.fixedpoint.max_iter);
    c.fixedpoint.phi.gap_margin =
        k.get<double>("gap_margin", c.fixedpoint.phi.gap_margin);
    c.fixedpoint.phi.taper_fraction =
        k.get<double>("taper_fraction", c.fixedpoint.phi.taper_fraction);
    c.fixedpoint.norm = k.get<std::string>("norm", c.fixedpoint.norm);
    k.finish();
    if (!(c.fixedpoint.tol > 0.0) || c.fixedpoint.max_iter < 1)
      throw std::invalid_argument("config.fixedpoint: tol > 0, max_iter >= 1");
    if (!c.fixedpoint.norm.empty()) NormSpec::parse(c.fixedpoint.norm);  // validates
  }
  if (top.has("crosscheck")) {
    Keys k(top.at("crosscheck"), "crosscheck");
    c.crosscheck.levels = k.get<std::size_t>("levels", c.crosscheck.levels);
    c.crosscheck.base_steps = k.get<std::size_t>("base_steps", c.crosscheck.base_steps);
    c.crosscheck.t_end = k.get<double>("t_end", c.crosscheck.t_end);
    c.crosscheck.harmonic = k.get<std::vector<int>>("harmonic", c.crosscheck.harmonic);
    c.crosscheck.envelope_power =
        k.get<int>("envelope_power", c.crosscheck.envelope_power);
    c.crosscheck.time_carrier = k.get<int>("time_carrier", c.crosscheck.time_carrier);
    c.crosscheck.eta = k.get<double>("eta", c.crosscheck.eta);
    c.crosscheck.taper_fraction =
        k.get<double>("taper_fraction", c.crosscheck.taper_fraction);
    k.finish();
    if (c.crosscheck.levels < 1 || c.crosscheck.base_steps < 8)
      throw std::invalid_argument("config.crosscheck: levels >= 1, base_steps >= 8");
    if (!(c.crosscheck.t_end > 0.0))
      throw std::invalid_argument("config.crosscheck.t_end: must be > 0");
    if (c.crosscheck.harmonic.size() != 3)
      throw std::invalid_argument("config.crosscheck.harmonic: three integers");
    if (c.crosscheck.envelope_power < 2 || c.crosscheck.envelope_power % 2 != 0)
      throw std::invalid_argument("config.crosscheck.envelope_power: even, >= 2");
    if (!(c.crosscheck.eta > 0.0))
      throw std::invalid_argument("config.crosscheck.eta: must be > 0");
  }
  if (top.has("steady")) {
    Keys k(top.at("steady"), "steady");
    c.steady.r_max = k.get<double>("r_max", c.steady.r_max);
    c.steady.n = k.get<int>("n", c.steady.n);
    k.finish();
    if (!(c.steady.r_max > 0.0) || c.steady.n < 2)
      throw std::invalid_argument("config.steady: r_max > 0, n >= 2");
  }
  if (top.has("norms")) {
    try {
      c.norms = top.at("norms").get<std::vector<std::string>>();
    } catch (const json::exception&) {
      throw std::invalid_argument("config.norms: array of norm strings");
    }
    for (const auto& s : c.norms) NormSpec::parse(s);  // validates
  }
  c.seed = top.get<std::uint64_t>("seed", c.seed);
  top.finish();
  return c;
}

json echo_config(const RunConfig& c) {
  json j;
  {
    json d;
    switch (c.dist.kind) {
      case DistKind::FermiZero:
        d = {{"kind", "fermi_zero"}, {"mu", c.dist.mu}};
        break;
      case DistKind::FermiDirac:
        d = {{"kind", "fermi_dirac"}, {"T", c.dist.T}, {"mu", c.dist.mu}};
        break;
      case DistKind::Bose:
        d = {{"kind", "bose"}, {"T", c.dist.T}, {"mu", c.dist.mu}};
        break;
      case DistKind::Boltzmann:
        d = {{"kind", "boltzmann"}, {"T", c.dist.T}, {"mu", c.dist.mu}};
        break;
      case DistKind::CustomRadial:
        d = {{"kind", "custom_radial"},
             {"rho", c.dist.table.rho},
             {"val", c.dist.table.val},
             {"tail",
              c.dist.table.tail == CustomTail::Compact ? "compact" : "exponential"}};
        break;
    }
    d["dim"] = c.dist.dim;
    j["distribution"] = std::move(d);
  }
  {
    json p;
    switch (c.pot.kind) {
      case PotentialKind::PointMass:
        p = {{"kind", "point_mass"}, {"weight", c.pot.weight}};
        break;
      case PotentialKind::GaussianMeasure:
        p = {{"kind", "gaussian"}, {"weight", c.pot.weight}, {"width", c.pot.width}};
        break;
      case PotentialKind::Yukawa3D:
        p = {{"kind", "yukawa"},
             {"weight", c.pot.weight},
             {"screening", c.pot.screening}};
        break;
      case PotentialKind::CustomFourier:
        p = {{"kind", "custom_fourier"}, {"k", c.pot.k_nodes}, {"val", c.pot.k_values}};
        break;
    }
    j["potential"] = std::move(p);
  }
  j["grid"] = {{"dim", c.grid.dim},
               {"N", c.grid.N},
               {"L", c.grid.L},
               {"dealias", c.grid.dealias}};
  j["modes"] = {{"cutoff", c.modes.cutoff}};
  j["evolution"] = {
      {"dt", c.evo.dt},
      {"t_end", c.evo.t_end},
      {"splitting_order", c.evo.splitting_order},
      {"dealias", c.evo.dealias},
      {"self_consistency",
       c.evo.self_consistency == SelfConsistency::FrozenV ? "frozen" : "picard2"},
      {"snapshots", c.evo.snapshots},
      {"scatter_sigma", c.evo.scatter_sigma},
      {"scatter_homogeneous", c.evo.scatter_homogeneous}};
  j["quadrature"] = {{"abs_tol", c.quad.abs_tol},
                     {"rel_tol", c.quad.rel_tol},
                     {"max_intervals", c.quad.max_intervals}};
  j["symbol"] = {{"eta0", c.symbol.eta0},
                 {"t_factor", c.symbol.t_factor},
                 {"flag_rel_tol", c.symbol.flag_rel_tol},
                 {"profile_r_max", c.symbol.profile_r_max},
                 {"profile_n", c.symbol.profile_n},
                 {"source", c.table.source},
                 {"eta", c.table.eta},
                 {"tau_max", c.table.tau_max},
                 {"tau_count", c.table.tau_count},
                 {"k_min", c.table.k_min},
                 {"k_max", c.table.k_max},
                 {"k_count", c.table.k_count},
                 {"resonance_eps", c.table.resonance_eps}};
  j["perturbation"] = {{"kind", c.perturbation.kind},
                       {"amplitude", c.perturbation.amplitude},
                       {"width", c.perturbation.width},
                       {"count", c.perturbation.count},
                       {"mode_index", c.perturbation.mode_index}};
  j["fixedpoint"] = {{"tol", c.fixedpoint.tol},
                     {"max_iter", c.fixedpoint.max_iter},
                     {"gap_margin", c.fixedpoint.phi.gap_margin},
                     {"taper_fraction", c.fixedpoint.phi.taper_fraction},
                     {"norm", c.fixedpoint.norm}};
  j["crosscheck"] = {{"levels", c.crosscheck.levels},
                     {"base_steps", c.crosscheck.base_steps},
                     {"t_end", c.crosscheck.t_end},
                     {"harmonic", c.crosscheck.harmonic},
                     {"envelope_power", c.crosscheck.envelope_power},
                     {"time_carrier", c.crosscheck.time_carrier},
                     {"eta", c.crosscheck.eta},
                     {"taper_fraction", c.crosscheck.taper_fraction}};
  j["steady"] = {{"r_max", c.steady.r_max}, {"n", c.steady.n}};
  j["norms"] = c.norms;
  j["seed"] = c.seed;
  return j;
}

}  // namespace rfh
