#include "rfh/response.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rfh/special.hpp"
#include "rfh/threads.hpp"

namespace rfh {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string dist_label(const MomentumDistribution& d) {
  switch (d.kind) {
    case DistKind::FermiZero:
      return "fermi_zero(mu=" + std::to_string(d.mu) + ")";
    case DistKind::FermiDirac:
      return "fermi_dirac(T=" + std::to_string(d.T) + ",mu=" + std::to_string(d.mu) + ")";
    case DistKind::Bose:
      return "bose(T=" + std::to_string(d.T) + ",mu=" + std::to_string(d.mu) + ")";
    case DistKind::Boltzmann:
      return "boltzmann(T=" + std::to_string(d.T) + ",mu=" + std::to_string(d.mu) + ")";
    case DistKind::CustomRadial:
      return "custom_radial(" + std::to_string(d.table.rho.size()) + " nodes)";
  }
  return "?";
}
}  // namespace

SymbolEvaluator::SymbolEvaluator(const MomentumDistribution& dist,
                                 SymbolOptions opt)
    : dist_(dist), opt_(opt) {
  if (dist.kind == DistKind::FermiZero && dist.dim == 3) {
    closed_form_ = true;
    return;
  }
  profile_ = compute_hf_profile(dist, opt_.profile_r_max, opt_.profile_n,
                                opt_.profile_quad);
  double peak = 0.0;
  for (double v : profile_.values()) peak = std::max(peak, std::abs(v));
  zero_ = peak == 0.0;
}

double SymbolEvaluator::h(double r) const {
  if (closed_form_) return fermi_zero_Hf_3d(dist_.mu, r);
  return profile_.eval(r);
}

SymbolPoint SymbolEvaluator::eval(double tau, double k) const {
  if (k <= 0.0)
    throw std::invalid_argument("symbol: k must be > 0 (radial frequency)");
  SymbolPoint out;
  if (zero_) return out;

  const double k2 = k * k;
  double quad_err = 0.0;
  double trunc_err = 0.0;
  std::complex<double> ladder[3];
  for (int l = 0; l < 3; ++l) {
    const double eta = opt_.eta0 / (1 << l);
    double t_end = opt_.t_factor / eta;
    if (!closed_form_ && profile_.tail_valid()) {
      // Beyond the sampled profile the oscillating sign of h is not modeled;
      // truncate there and account for the tail magnitude in the error.
      const double t_cut = profile_.r_max() / (2.0 * k);
      if (t_cut < t_end) {
        const double p = profile_.tail_p();
        const double log_c = profile_.tail_log_C();
        if (log_c > -700.0) {
          // int_{t_cut}^inf e^{-eta t} C (2kt)^{-p} dt <= C (2k t_cut)^{-p} / eta
          const double log_tail =
              log_c - p * std::log(2.0 * k * t_cut) - std::log(eta) - eta * t_cut;
          trunc_err += log_tail < -700.0 ? 0.0 : std::exp(log_tail);
        }
        t_end = t_cut;
      }
    }
    auto res = integrate_complex(
        [&](double t) {
          const std::complex<double> osc(std::cos(tau * t), -std::sin(tau * t));
          return std::exp(-eta * t) * std::sin(k2 * t) * h(2.0 * k * t) * osc;
        },
        0.0, t_end, opt_.quad);
    ladder[l] = -2.0 * res.value;
    quad_err += 2.0 * res.error;
  }
  const std::complex<double> r1 = 2.0 * ladder[1] - ladder[0];
  const std::complex<double> r2 = 2.0 * ladder[2] - ladder[1];
  out.value = (4.0 * r2 - r1) / 3.0;
  out.err = std::abs(out.value - r2) + quad_err + 2.0 * trunc_err;
  out.flagged = out.err > opt_.flag_rel_tol * std::max(1.0, std::abs(out.value));
  return out;
}

SymbolPoint m_f_quadrature(const MomentumDistribution& dist, int d, double tau,
                           double k, const SymbolOptions& opt) {
  if (d != dist.dim)
    throw std::invalid_argument("m_f_quadrature: d disagrees with dist.dim");
  return SymbolEvaluator(dist, opt).eval(tau, k);
}

double log_term_3d(double tau, double k) {
  if (k <= 0.0) throw std::invalid_argument("log_term_3d: k must be > 0");
  const double eps = std::min(std::abs(2.0 - tau / k), std::abs(2.0 + tau / k));
  constexpr double c = 0.19947114020071633897;  // 1 / (2 sqrt(2 pi))
  return c * std::min(std::log(std::max(eps, k)), 0.0);
}

std::size_t ResponseSymbol::flagged_count() const {
  std::size_t n = 0;
  for (const auto& p : values) n += p.flagged ? 1 : 0;
  return n;
}

ResponseSymbol build_symbol_table(const MomentumDistribution& dist,
                                  const std::vector<double>& tau_grid,
                                  const std::vector<double>& k_grid,
                                  const SymbolOptions& opt) {
  for (std::size_t i = 1; i < tau_grid.size(); ++i)
    if (tau_grid[i] <= tau_grid[i - 1])
      throw std::invalid_argument("symbol table: tau grid must increase");
  for (std::size_t j = 0; j < k_grid.size(); ++j)
    if (k_grid[j] <= 0.0 || (j > 0 && k_grid[j] <= k_grid[j - 1]))
      throw std::invalid_argument("symbol table: k grid must increase, k > 0");

  ResponseSymbol table;
  table.tau_grid = tau_grid;
  table.k_grid = k_grid;
  table.dim = dist.dim;
  table.dist_desc = dist_label(dist);
  table.opt = opt;
  table.values.resize(tau_grid.size() * k_grid.size());

  SymbolEvaluator ev(dist, opt);
  parallel_for(table.values.size(), [&](std::size_t idx) {
    const std::size_t i = idx / k_grid.size();
    const std::size_t j = idx % k_grid.size();
    table.values[idx] = ev.eval(tau_grid[i], k_grid[j]);
  });
  return table;
}

std::vector<double> resonance_clustered_tau_grid(
    double tau_max, int base_count, const std::vector<double>& k_grid,
    const std::vector<double>& eps_ladder) {
  if (tau_max <= 0.0 || base_count < 2)
    throw std::invalid_argument("clustered grid: tau_max > 0, base_count >= 2");
  std::set<double> nodes;
  for (int i = 0; i < base_count; ++i)
    nodes.insert(tau_max * i / (base_count - 1));
  for (double k : k_grid) {
    for (double e : eps_ladder) {
      for (double s : {2.0 - e, 2.0 + e}) {
        const double tau = k * s;
        if (tau >= 0.0 && tau <= tau_max) nodes.insert(tau);
      }
    }
  }
  return {nodes.begin(), nodes.end()};
}

CriterionReport check_SC(const RadialProfile& profile, const Potential& w,
                         const QuadratureOptions& quad) {
  CriterionReport rep;
  rep.name = "SC";
  const double sup = w.sup_abs();
  std::ostringstream detail;
  if (sup == 0.0) {
    rep.value = 0.0;
    rep.satisfied = true;
    rep.detail = "w_hat identically zero";
    return rep;
  }
  auto integral = profile.integral_abs_weighted(1.0, quad);
  if (integral.divergent) {
    rep.value = kInf;
    rep.satisfied = false;
    detail << "radial integral of |h_f(r)| r diverges (tail exponent "
           << profile.tail_p() << " <= 2)";
    rep.detail = detail.str();
    return rep;
  }
  rep.value = 0.5 * sup * integral.value;
  rep.satisfied = rep.value < 1.0;
  detail << "sup|w_hat| = " << sup << ", int |h_f| r dr = " << integral.value
         << " (err " << integral.error << ")";
  rep.detail = detail.str();
  return rep;
}

CriterionReport check_CS(const RadialProfile& profile, const Potential& w,
                         const QuadratureOptions& quad) {
  CriterionReport rep;
  rep.name = "CS";
  const double ratio_sup = w.sup_abs_over_k();
  std::ostringstream detail;
  if (ratio_sup == 0.0) {
    rep.value = 0.0;
    rep.satisfied = true;
    rep.detail = "w_hat identically zero";
    return rep;
  }
  if (ratio_sup == kInf) {
    rep.value = kInf;
    rep.satisfied = false;
    rep.detail = "w_hat(0) != 0: |w_hat(xi)|/|xi| unbounded at xi -> 0";
    return rep;
  }
  auto integral = profile.integral_abs_weighted(0.0, quad);
  if (integral.divergent) {
    rep.value = kInf;
    rep.satisfied = false;
    detail << "int |h_f| dr diverges (tail exponent " << profile.tail_p()
           << " <= 1)";
    rep.detail = detail.str();
    return rep;
  }
  rep.value = ratio_sup * integral.value;
  rep.satisfied = rep.value < 1.0;
  detail << "sup|w_hat/k| = " << ratio_sup << ", int |h_f| dr = " << integral.value
         << " (err " << integral.error << ")";
  rep.detail = detail.str();
  return rep;
}

CriterionReport check_cor_3d(const Potential& w, double delta, double delta0) {
  if (delta <= 0.0 || delta0 <= 0.0)
    throw std::invalid_argument("check_cor_3d: delta, delta0 must be > 0");
  CriterionReport rep;
  rep.name = "COR3D";
  double worst = kInf;
  double worst_k = 0.0;
  const int samples = 600;
  for (int i = 0; i <= samples; ++i) {
    const double k = std::pow(10.0, -6.0 + 12.0 * i / samples);
    const double wh = w.w_hat(k);
    const double lg = std::log(k);
    const double upper = delta0 / std::sqrt(1.0 + lg * lg);
    const double slack = std::min(wh + delta, upper - wh);
    if (slack < worst) {
      worst = slack;
      worst_k = k;
    }
  }
  rep.value = worst;
  rep.satisfied = worst > 0.0;
  std::ostringstream detail;
  detail << "-" << delta << " <= w_hat <= " << delta0
         << "/<log|xi|>; tightest slack " << worst << " at |xi| = " << worst_k;
  rep.detail = detail.str();
  return rep;
}

CriterionReport symbol_gap(const ResponseSymbol& symbol, const Potential& w,
                           double margin) {
  if (symbol.flagged_count() > 0)
    throw std::invalid_argument(
        "symbol_gap: table has flagged entries; rebuild with a grid (or "
        "tolerance) that resolves them");
  CriterionReport rep;
  rep.name = "GAP";
  double gap = kInf;
  double arg_tau = 0.0, arg_k = 0.0;
  for (std::size_t i = 0; i < symbol.tau_grid.size(); ++i) {
    for (std::size_t j = 0; j < symbol.k_grid.size(); ++j) {
      const double g =
          std::abs(1.0 - w.w_hat(symbol.k_grid[j]) * symbol.at(i, j).value);
      if (g < gap) {
        gap = g;
        arg_tau = symbol.tau_grid[i];
        arg_k = symbol.k_grid[j];
      }
    }
  }
  rep.value = gap;
  rep.satisfied = gap > margin;
  std::ostringstream detail;
  detail << "inf |1 - w_hat m_f| = " << gap << " at (tau, k) = (" << arg_tau
         << ", " << arg_k << "); multiplier bound estimate "
         << (gap > 0.0 ? 1.0 / gap : kInf) << "; margin " << margin;
  rep.detail = detail.str();
  return rep;
}

double a_theta_fn(const std::function<double(double)>& g_abs, double theta,
                  double u_cap, double v_cap, const QuadratureOptions& quad) {
  if (theta <= 0.0 || theta >= 1.0)
    throw std::invalid_argument("a_theta: theta must lie in (0, 1)");
  auto inner = [&](double v) {
    auto res = integrate(
        [&](double u) {
          return g_abs(std::sqrt(u * u + v * v)) * std::pow(u, theta);
        },
        0.0, u_cap, quad);
    return 2.0 * res.value;
  };
  auto outer = integrate([&](double v) { const double s = inner(v); return s * s; },
                         0.0, v_cap, quad);
  return std::sqrt(2.0 * outer.value);
}

AThetaResult a_theta(const RadialProfile& g, double theta,
                     const QuadratureOptions& quad) {
  if (theta <= 0.0 || theta >= 1.0)
    throw std::invalid_argument("a_theta: theta must lie in (0, 1)");
  AThetaResult out;
  double peak = 0.0;
  for (double v : g.values()) peak = std::max(peak, std::abs(v));
  if (peak == 0.0 && g.tail_C() == 0.0) return out;  // zero profile

  if (!g.tail_valid()) {
    out.divergent = true;
    out.value = kInf;
    return out;
  }
  const double p = g.tail_p();
  const bool zero_tail = g.tail_log_C() == -kInf;
  if (!zero_tail && (p <= theta + 1.0 || 2.0 * (p - theta - 1.0) <= 1.0)) {
    out.divergent = true;
    out.value = kInf;
    return out;
  }
  // Radial cap: the quarter-plane outside radius R contributes a relative
  // O(R^{-(2p - 2 theta - 3)}) tail; aim it at ~0.5% and clamp.
  double cap = g.r_max() * 1.2;
  if (!zero_tail) {
    const double kappa = 2.0 * (p - theta - 1.0) - 1.0;
    cap = std::max(cap, g.r_max() * std::pow(0.005, -1.0 / kappa));
    cap = std::min(cap, 1e5);
  }
  out.cap = cap;
  QuadratureOptions q = quad;
  q.rel_tol = std::max(q.rel_tol, 1e-8);
  out.value = a_theta_fn([&](double r) { return std::abs(g.eval(r)); }, theta,
                         cap, cap, q);
  return out;
}

}  // namespace rfh
