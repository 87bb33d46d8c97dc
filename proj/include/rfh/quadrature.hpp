#pragma once

#include <complex>
#include <cstddef>
#include <functional>

namespace rfh {

struct QuadratureOptions {
  double abs_tol = 1e-12;
  double rel_tol = 0.0;
  std::size_t max_intervals = 20000;
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;       // estimated absolute error
  std::size_t evaluations = 0;
  bool converged = false;
};

struct QuadratureResultC {
  std::complex<double> value{0.0, 0.0};
  double error = 0.0;
  std::size_t evaluations = 0;
  bool converged = false;
};

// Globally adaptive Gauss-Kronrod 15(7) on [a, b]: the interval with the largest
// error estimate is bisected until the summed estimate meets
// max(abs_tol, rel_tol * |value|) or max_intervals is reached. The returned error
// is the summed per-interval estimate (an upper bound in practice), so callers can
// propagate it honestly.
QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadratureOptions& opt = {});

QuadratureResultC integrate_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    const QuadratureOptions& opt = {});

}  // namespace rfh
