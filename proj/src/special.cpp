#include "rfh/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rfh {

namespace {

double bessel_series(double nu, double x) {
  // J_nu(x) = sum_m (-1)^m / (m! Gamma(m+nu+1)) (x/2)^{2m+nu}
  const double half = 0.5 * x;
  double term = std::exp(nu * std::log(half) - std::lgamma(nu + 1.0));
  const double q = half * half;
  double sum = term;
  for (int m = 1; m <= 200; ++m) {
    term *= -q / (m * (m + nu));
    sum += term;
    if (std::abs(term) < 1e-18 * (1.0 + std::abs(sum))) break;
  }
  return sum;
}

double bessel_hankel(double nu, double x) {
  // J_nu(x) ~ sqrt(2/(pi x)) [P cos(chi) - Q sin(chi)], chi = x - (nu/2 + 1/4) pi,
  // with P, Q the even/odd partial sums of t_k = prod_{j<=k}(mu-(2j-1)^2)/(k (8x))
  // and mu = 4 nu^2. The series is asymptotic: stop at the smallest term.
  const double mu = 4.0 * nu * nu;
  double p = 1.0, q = 0.0;
  double term = 1.0;
  double prev_mag = std::numeric_limits<double>::max();
  for (int k = 1; k <= 60; ++k) {
    const double num = mu - static_cast<double>(2 * k - 1) * (2 * k - 1);
    term *= num / (static_cast<double>(k) * 8.0 * x);
    const double mag = std::abs(term);
    if (mag > prev_mag) break;  // divergence onset
    prev_mag = mag;
    const int phase = k % 4;  // sign pattern +,+,-,- applied to (Q,P,Q,P)
    if (phase == 1)
      q += term;
    else if (phase == 2)
      p -= term;
    else if (phase == 3)
      q -= term;
    else
      p += term;
    if (mag < 1e-18) break;
  }
  const double chi = x - (0.5 * nu + 0.25) * M_PI;
  return std::sqrt(2.0 / (M_PI * x)) * (p * std::cos(chi) - q * std::sin(chi));
}

}  // namespace

double bessel_J(double nu, double x) {
  if (nu < 0.0) throw std::invalid_argument("bessel_J: order must be >= 0");
  if (x < 0.0) throw std::invalid_argument("bessel_J: argument must be >= 0");
  if (x == 0.0) return nu == 0.0 ? 1.0 : 0.0;
  return x <= 12.0 ? bessel_series(nu, x) : bessel_hankel(nu, x);
}

double sphere_area(int d) {
  if (d < 1) throw std::invalid_argument("sphere_area: dimension must be >= 1");
  return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d);
}

}  // namespace rfh
