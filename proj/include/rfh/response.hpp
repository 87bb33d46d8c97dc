#pragma once

#include <complex>
#include <string>
#include <vector>

#include "rfh/distributions.hpp"
#include "rfh/potential.hpp"

namespace rfh {

// Linear-response symbol m_f(tau, k) = -2 int_0^inf e^{-i tau t} sin(k^2 t)
// h_f(2kt) dt. The integral is only conditionally convergent (h_f ~ t^{-2}
// tails), so it is evaluated with exponential damping e^{-eta t} on
// [0, 40/eta] and Richardson-extrapolated over the ladder
// {eta0, eta0/2, eta0/4}; the extrapolation residual is the error estimate.
// Near the resonance rays tau = +-2k the limit diverges logarithmically and
// the estimate honestly blows up: such entries carry flagged = true.
struct SymbolOptions {
  double eta0 = 1e-2;
  double t_factor = 40.0;  // integrate to t_factor / eta per ladder rung
  QuadratureOptions quad{1e-9, 0.0, 200000};
  double flag_rel_tol = 0.05;  // flag when err > tol * max(1, |value|)
  // Profile used when no closed form exists (everything except FermiZero d=3).
  double profile_r_max = 120.0;
  int profile_n = 1600;
  QuadratureOptions profile_quad{1e-12, 0.0, 20000};
};

struct SymbolPoint {
  std::complex<double> value{0.0, 0.0};
  double err = 0.0;
  bool flagged = false;
};

// Reusable evaluator: builds the h_f profile once (closed form for FermiZero
// d=3, sampled profile otherwise) and answers per-(tau, k) queries.
class SymbolEvaluator {
 public:
  explicit SymbolEvaluator(const MomentumDistribution& dist,
                           SymbolOptions opt = {});
  SymbolPoint eval(double tau, double k) const;
  const SymbolOptions& options() const { return opt_; }

 private:
  MomentumDistribution dist_;
  SymbolOptions opt_;
  bool closed_form_ = false;
  bool zero_ = false;
  RadialProfile profile_;

  double h(double r) const;
};

// One-shot wrapper; d must match dist.dim (kept as an explicit argument so
// call sites show the dimension they mean).
SymbolPoint m_f_quadrature(const MomentumDistribution& dist, int d, double tau,
                           double k, const SymbolOptions& opt = {});

// (1/(2 sqrt(2 pi))) * min(log(max(eps, k)), 0) with
// eps = min(|2 - tau/k|, |2 + tau/k|): the explicit logarithmic part of the
// d=3 Fermi-zero symbol near the resonance rays.
double log_term_3d(double tau, double k);

struct ResponseSymbol {
  std::vector<double> tau_grid;  // strictly increasing
  std::vector<double> k_grid;    // strictly increasing, > 0
  std::vector<SymbolPoint> values;  // row-major [tau][k]
  int dim = 3;
  std::string dist_desc;
  SymbolOptions opt;

  const SymbolPoint& at(std::size_t i_tau, std::size_t j_k) const {
    return values[i_tau * k_grid.size() + j_k];
  }
  SymbolPoint& at(std::size_t i_tau, std::size_t j_k) {
    return values[i_tau * k_grid.size() + j_k];
  }
  std::size_t flagged_count() const;
};

// Tensor-grid table, parallel over points.
ResponseSymbol build_symbol_table(const MomentumDistribution& dist,
                                  const std::vector<double>& tau_grid,
                                  const std::vector<double>& k_grid,
                                  const SymbolOptions& opt = {});

// Union of a uniform base grid on [0, tau_max] with nodes clustered toward
// the resonance tau = 2k for every k in k_grid: tau = k(2 - e) and k(2 + e)
// for e in eps_ladder. Sorted, deduplicated, nonnegative.
std::vector<double> resonance_clustered_tau_grid(
    double tau_max, int base_count, const std::vector<double>& k_grid,
    const std::vector<double>& eps_ladder);

struct CriterionReport {
  std::string name;  // SC | CS | COR3D | GAP
  double value = 0.0;
  bool satisfied = false;
  std::string detail;
};

// (SC): (||w_hat||_inf / (2 |S^{d-1}|)) int |H_f(x)| / |x|^{d-2} dx < 1.
// After radial reduction the surface measure cancels:
// value = (||w_hat||_inf / 2) int_0^inf |h_f(r)| r dr. Divergent tails
// (exponent <= 2) report value = inf, satisfied = false.
CriterionReport check_SC(const RadialProfile& profile, const Potential& w,
                         const QuadratureOptions& quad = {});

// (CS): ||w_hat(xi)/|xi|||_inf * int_0^inf |h_f(r)| dr < 1. The sup is
// infinite whenever w_hat(0) != 0.
CriterionReport check_CS(const RadialProfile& profile, const Potential& w,
                         const QuadratureOptions& quad = {});

// Two-sided bound -delta <= w_hat(xi) <= delta0 / <log|xi|> over a log grid
// on [1e-6, 1e6] (the d=3 Fermi-zero smallness condition). value = smallest
// slack; satisfied when the slack is positive everywhere.
CriterionReport check_cor_3d(const Potential& w, double delta, double delta0);

// inf over the table of |1 - w_hat(k) m_f(tau, k)|; satisfied when the gap
// exceeds margin. detail carries the multiplier bound estimate 1/value.
// Tables with flagged entries are rejected.
CriterionReport symbol_gap(const ResponseSymbol& symbol, const Potential& w,
                           double margin = 0.05);

// A_theta[g] = { int_R dv ( int_R du |g(sqrt(u^2+v^2))| |u|^theta )^2 }^{1/2},
// computed on the quarter plane (both integrands even). For profiles the
// integration caps come from the fitted tail exponent p: the functional is
// finite only when p > theta + 1 and 2(p - theta - 1) > 1; otherwise the
// result is flagged divergent.
struct AThetaResult {
  double value = 0.0;
  bool divergent = false;
  double cap = 0.0;  // radial truncation actually used
};
AThetaResult a_theta(const RadialProfile& g, double theta,
                     const QuadratureOptions& quad = {});

// Same functional for an explicit radial integrand with caller-chosen caps
// (used by closed-form oracles with known decay).
double a_theta_fn(const std::function<double(double)>& g_abs, double theta,
                  double u_cap, double v_cap, const QuadratureOptions& quad = {});

}  // namespace rfh
