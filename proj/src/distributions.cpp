#include "rfh/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rfh/special.hpp"
#include "rfh/threads.hpp"

namespace rfh {

namespace {

constexpr double kSqrt2OverPi = 0.7978845608028653558798921198687;  // sqrt(2/pi)

void validate(const MomentumDistribution& d) {
  if (d.dim < 1) throw std::invalid_argument("distribution: dim must be >= 1");
  switch (d.kind) {
    case DistKind::FermiZero:
      if (d.mu <= 0.0) throw std::invalid_argument("FermiZero: mu must be > 0");
      break;
    case DistKind::FermiDirac:
    case DistKind::Boltzmann:
      if (d.T <= 0.0) throw std::invalid_argument("thermal kind: T must be > 0");
      break;
    case DistKind::Bose:
      if (d.T <= 0.0) throw std::invalid_argument("Bose: T must be > 0");
      if (d.mu >= 0.0)
        throw std::invalid_argument("Bose: mu must be < 0 (pole at |xi|^2 = mu)");
      break;
    case DistKind::CustomRadial: {
      const auto& t = d.table;
      if (t.rho.size() < 2 || t.rho.size() != t.val.size())
        throw std::invalid_argument("CustomRadial: need >= 2 (rho, value) rows");
      if (t.rho.front() != 0.0)
        throw std::invalid_argument("CustomRadial: first radius must be 0");
      for (std::size_t i = 1; i < t.rho.size(); ++i)
        if (t.rho[i] <= t.rho[i - 1])
          throw std::invalid_argument("CustomRadial: radii must increase");
      for (double v : t.val)
        if (!(v >= 0.0))
          throw std::invalid_argument("CustomRadial: |f|^2 samples must be >= 0");
      break;
    }
  }
}

// Cubic Hermite on a (possibly non-uniform) table with secant-weighted slopes,
// clamped to 0 from below: the table stores a squared profile.
double custom_interp(const CustomTable& t, double rho) {
  const auto& r = t.rho;
  const auto& v = t.val;
  const std::size_t n = r.size();
  if (rho >= r.back()) {
    if (t.tail == CustomTail::Compact) return 0.0;
    // Exponential continuation with the rate of the last two samples.
    const double v1 = v[n - 2], v2 = v[n - 1];
    if (v2 <= 0.0 || v1 <= v2) return 0.0;
    const double lambda = std::log(v1 / v2) / (r[n - 1] - r[n - 2]);
    return v2 * std::exp(-lambda * (rho - r.back()));
  }
  const std::size_t j =
      std::upper_bound(r.begin(), r.end(), rho) - r.begin() - 1;
  const std::size_t i = std::min(j, n - 2);
  auto secant = [&](std::size_t a) { return (v[a + 1] - v[a]) / (r[a + 1] - r[a]); };
  auto node_slope = [&](std::size_t a) -> double {
    if (a == 0) return secant(0);
    if (a == n - 1) return secant(n - 2);
    const double hl = r[a] - r[a - 1], hr = r[a + 1] - r[a];
    return (hr * secant(a - 1) + hl * secant(a)) / (hl + hr);
  };
  const double h = r[i + 1] - r[i];
  const double s = (rho - r[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double m0 = node_slope(i), m1 = node_slope(i + 1);
  const double y = (2 * s3 - 3 * s2 + 1) * v[i] + (s3 - 2 * s2 + s) * h * m0 +
                   (-2 * s3 + 3 * s2) * v[i + 1] + (s3 - s2) * h * m1;
  return std::max(y, 0.0);
}

// J_nu(z) (2/z)^nu Gamma(nu+1): 1 at z=0, smooth; used for the small-argument
// branch of the radial kernel.
double scaled_bessel(double nu, double z) {
  double term = 1.0, sum = 1.0;
  const double q = 0.25 * z * z;
  for (int m = 1; m <= 60; ++m) {
    term *= -q / (m * (m + nu));
    sum += term;
    if (std::abs(term) < 1e-18) break;
  }
  return sum;
}

// Radial reduction kernel K_d(r, rho) such that
// H(r) = int_0^inf |f(rho)|^2 K_d(r, rho) drho.
double radial_kernel(int d, double r, double rho) {
  const double z = r * rho;
  switch (d) {
    case 1:
      return kSqrt2OverPi * std::cos(z);
    case 3: {
      const double sinc = z < 1e-8 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
      return kSqrt2OverPi * rho * rho * sinc;
    }
    default: {
      const double nu = 0.5 * d - 1.0;
      if (z < 0.5) {
        return std::pow(rho, d - 1) * scaled_bessel(nu, z) /
               (std::pow(2.0, nu) * std::tgamma(nu + 1.0));
      }
      return std::pow(r, 1.0 - 0.5 * d) * std::pow(rho, 0.5 * d) *
             bessel_J(nu, z);
    }
  }
}

}  // namespace

MomentumDistribution MomentumDistribution::fermi_zero(int d, double mu) {
  MomentumDistribution m{DistKind::FermiZero, d, mu, 0.0, {}};
  validate(m);
  return m;
}
MomentumDistribution MomentumDistribution::fermi_dirac(int d, double T, double mu) {
  MomentumDistribution m{DistKind::FermiDirac, d, mu, T, {}};
  validate(m);
  return m;
}
MomentumDistribution MomentumDistribution::bose(int d, double T, double mu) {
  MomentumDistribution m{DistKind::Bose, d, mu, T, {}};
  validate(m);
  return m;
}
MomentumDistribution MomentumDistribution::boltzmann(int d, double T, double mu) {
  MomentumDistribution m{DistKind::Boltzmann, d, mu, T, {}};
  validate(m);
  return m;
}
MomentumDistribution MomentumDistribution::custom_radial(int d, CustomTable table) {
  MomentumDistribution m{DistKind::CustomRadial, d, 0.0, 0.0, std::move(table)};
  validate(m);
  return m;
}

double eval_f_squared(const MomentumDistribution& dist, double rho) {
  if (rho < 0.0) throw std::invalid_argument("eval_f_squared: rho must be >= 0");
  switch (dist.kind) {
    case DistKind::FermiZero:
      return rho * rho <= dist.mu ? 1.0 : 0.0;
    case DistKind::FermiDirac:
      return 1.0 / (std::exp((rho * rho - dist.mu) / dist.T) + 1.0);
    case DistKind::Bose:
      // mu < 0 keeps the argument positive; expm1 is exact near 0.
      return 1.0 / std::expm1((rho * rho - dist.mu) / dist.T);
    case DistKind::Boltzmann:
      return std::exp(-(rho * rho - dist.mu) / dist.T);
    case DistKind::CustomRadial:
      return custom_interp(dist.table, rho);
  }
  return 0.0;
}

double support_radius(const MomentumDistribution& dist) {
  switch (dist.kind) {
    case DistKind::FermiZero:
      return std::sqrt(dist.mu);
    case DistKind::FermiDirac:
    case DistKind::Bose:
    case DistKind::Boltzmann:
      // (rho^2 - max(mu,0)) / T = 45 puts |f|^2 below ~3e-20 of its peak.
      return std::sqrt(std::max(dist.mu, 0.0) + 45.0 * dist.T);
    case DistKind::CustomRadial: {
      const auto& t = dist.table;
      if (t.tail == CustomTail::Compact) return t.rho.back();
      const std::size_t n = t.rho.size();
      const double v1 = t.val[n - 2], v2 = t.val[n - 1];
      if (v2 <= 0.0 || v1 <= v2) return t.rho.back();
      const double lambda = std::log(v1 / v2) / (t.rho[n - 1] - t.rho[n - 2]);
      return t.rho.back() + 45.0 / lambda;
    }
  }
  return 0.0;
}

double norm_squared(const MomentumDistribution& dist,
                    const QuadratureOptions& quad) {
  const double R = support_radius(dist);
  if (R == 0.0) return 0.0;
  const int d = dist.dim;
  auto res = integrate(
      [&](double rho) {
        return eval_f_squared(dist, rho) * std::pow(rho, d - 1);
      },
      0.0, R, quad);
  return sphere_area(d) * res.value;
}

double fermi_zero_Hf_3d(double mu, double r) {
  const double s = std::sqrt(mu) * r;
  const double amp = kSqrt2OverPi * mu * std::sqrt(mu);
  if (s < 0.1) {
    const double s2 = s * s;
    return amp * (1.0 / 3.0 + s2 * (-1.0 / 30.0 + s2 * (1.0 / 840.0 - s2 / 45360.0)));
  }
  return amp * (std::sin(s) / s - std::cos(s)) / (s * s);
}

double compute_Hf(const MomentumDistribution& dist, double r,
                  const QuadratureOptions& quad, bool force_quadrature) {
  if (r < 0.0) r = -r;  // H_f is radial; accept either sign
  if (dist.kind == DistKind::FermiZero && dist.dim == 3 && !force_quadrature)
    return fermi_zero_Hf_3d(dist.mu, r);
  const double R = support_radius(dist);
  if (R == 0.0) return 0.0;
  const int d = dist.dim;
  const double rr = r;
  auto res = integrate(
      [&](double rho) {
        return eval_f_squared(dist, rho) * radial_kernel(d, rr, rho);
      },
      0.0, R, quad);
  if (!res.converged)
    throw std::runtime_error("compute_Hf: quadrature error " +
                             std::to_string(res.error) + " above tolerance");
  return res.value;
}

RadialProfile::RadialProfile(std::vector<double> r, std::vector<double> h)
    : r_(std::move(r)), h_(std::move(h)) {
  if (r_.size() < 2 || r_.size() != h_.size())
    throw std::invalid_argument("RadialProfile: need >= 2 matching nodes");
  if (r_.front() != 0.0)
    throw std::invalid_argument("RadialProfile: first node must be r = 0");
  dr_ = r_[1] - r_[0];
  for (std::size_t i = 1; i < r_.size(); ++i) {
    const double step = r_[i] - r_[i - 1];
    if (step <= 0.0 || std::abs(step - dr_) > 1e-9 * dr_)
      throw std::invalid_argument("RadialProfile: nodes must be uniform");
  }
  for (double v : h_)
    if (!std::isfinite(v))
      throw std::invalid_argument("RadialProfile: non-finite sample");
  fit_slopes();
  fit_tail();
}

void RadialProfile::fit_slopes() {
  const std::size_t n = r_.size();
  slope_.assign(n, 0.0);
  if (n < 5) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t a = i == 0 ? 0 : i - 1;
      const std::size_t b = i == n - 1 ? n - 1 : i + 1;
      slope_[i] = (h_[b] - h_[a]) / (r_[b] - r_[a]);
    }
    return;
  }
  const double inv = 1.0 / (12.0 * dr_);
  slope_[0] = (-25 * h_[0] + 48 * h_[1] - 36 * h_[2] + 16 * h_[3] - 3 * h_[4]) * inv;
  slope_[1] = (-3 * h_[0] - 10 * h_[1] + 18 * h_[2] - 6 * h_[3] + h_[4]) * inv;
  for (std::size_t i = 2; i + 2 < n; ++i)
    slope_[i] = (h_[i - 2] - 8 * h_[i - 1] + 8 * h_[i + 1] - h_[i + 2]) * inv;
  slope_[n - 2] =
      (3 * h_[n - 1] + 10 * h_[n - 2] - 18 * h_[n - 3] + 6 * h_[n - 4] - h_[n - 5]) * inv;
  slope_[n - 1] =
      (25 * h_[n - 1] - 48 * h_[n - 2] + 36 * h_[n - 3] - 16 * h_[n - 4] + 3 * h_[n - 5]) * inv;
}

void RadialProfile::fit_tail() {
  const std::size_t n = r_.size();
  const double r_lo = r_.back() / 10.0;
  const std::ptrdiff_t w = std::max<std::ptrdiff_t>(3, static_cast<std::ptrdiff_t>(n) / 40);

  double max_abs_region = 0.0;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < n; ++i) {
    if (r_[i] < r_lo || r_[i] <= 0.0) continue;
    double local = 0.0;
    const std::ptrdiff_t si = static_cast<std::ptrdiff_t>(i);
    for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, si - w);
         j <= std::min<std::ptrdiff_t>(n - 1, si + w); ++j)
      local = std::max(local, std::abs(h_[j]));
    max_abs_region = std::max(max_abs_region, local);
    const double a = std::abs(h_[i]);
    // Skip exact zeros (no log) and near-zeros: crossings of an oscillating
    // tail would otherwise drag the log-log fit down. The comparison is done
    // in log space because 1e-8 * local underflows once local is subnormal.
    if (local <= 0.0 || a <= 0.0 || std::log(a) < std::log(local) - 18.4)
      continue;
    lx.push_back(std::log(r_[i]));
    ly.push_back(std::log(a));
  }
  if (max_abs_region == 0.0) {
    // Identically zero on the fit region: a zero tail, trivially valid.
    tail_log_C_ = -std::numeric_limits<double>::infinity();
    tail_p_ = 0.0;
    tail_valid_ = true;
    return;
  }
  if (lx.size() < 8) {
    tail_valid_ = false;
    return;
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(lx.size());
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  const double det = m * sxx - sx * sx;
  const double b = (m * sxy - sx * sy) / det;  // slope
  const double a = (sy - b * sx) / m;          // intercept: log C
  if (!(std::isfinite(b) && std::isfinite(a)) || -b < 0.0) {
    tail_valid_ = false;  // growing tail or degenerate fit: no power-law model
    return;
  }
  tail_p_ = -b;
  tail_log_C_ = a;
  tail_valid_ = true;
}

double RadialProfile::tail_C() const {
  if (!tail_valid_) return 0.0;
  return std::exp(std::min(tail_log_C_, 700.0));
}

double RadialProfile::eval(double r) const {
  r = std::abs(r);  // even profile
  if (r >= r_.back()) {
    if (!tail_valid_) return 0.0;
    const double log_val = tail_log_C_ - tail_p_ * std::log(r);
    return log_val < -745.0 ? 0.0 : std::exp(log_val);
  }
  const std::size_t n = r_.size();
  std::size_t i = static_cast<std::size_t>(r / dr_);
  if (i >= n - 1) i = n - 2;
  const double s = (r - r_[i]) / dr_;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * h_[i] + (s3 - 2 * s2 + s) * dr_ * slope_[i] +
         (-2 * s3 + 3 * s2) * h_[i + 1] + (s3 - s2) * dr_ * slope_[i + 1];
}

RadialProfile::WeightedIntegral RadialProfile::integral_abs_weighted(
    double q, const QuadratureOptions& quad) const {
  WeightedIntegral out;
  auto head = integrate(
      [&](double r) { return std::abs(eval(r)) * std::pow(r, q); }, 0.0,
      r_.back(), quad);
  out.value = head.value;
  out.error = head.error;
  if (!tail_valid_) {
    // No tail model: report the head with the tail acknowledged as unknown.
    out.divergent = false;
    out.error = std::numeric_limits<double>::infinity();
    return out;
  }
  if (tail_log_C_ == -std::numeric_limits<double>::infinity()) return out;
  if (tail_p_ <= q + 1.0) {
    out.divergent = true;
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  // int_{r_max}^inf C r^{q-p} dr, computed in log space (steep fits overflow C).
  const double log_tail = tail_log_C_ + (q - tail_p_ + 1.0) * std::log(r_.back()) -
                          std::log(tail_p_ - q - 1.0);
  const double tail = log_tail < -745.0 ? 0.0 : std::exp(log_tail);
  out.value += tail;
  out.error += 0.5 * tail;  // the tail model is a fit, not a bound
  return out;
}

RadialProfile compute_hf_profile(const MomentumDistribution& dist, double r_max,
                                 int n, const QuadratureOptions& quad) {
  if (r_max <= 0.0 || n < 2)
    throw std::invalid_argument("compute_hf_profile: need r_max > 0, n >= 2");
  std::vector<double> r(n + 1), h(n + 1);
  for (int i = 0; i <= n; ++i) r[i] = r_max * i / n;
  parallel_for(static_cast<std::size_t>(n + 1),
               [&](std::size_t i) { h[i] = compute_Hf(dist, r[i], quad); });
  return RadialProfile(std::move(r), std::move(h));
}

double hf_L1_norm(const RadialProfile& profile, const QuadratureOptions& quad) {
  auto res = profile.integral_abs_weighted(0.0, quad);
  if (res.divergent || !std::isfinite(res.value))
    return std::numeric_limits<double>::infinity();
  return 2.0 * res.value;
}

}  // namespace rfh
