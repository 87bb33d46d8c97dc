#include "rfh/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace rfh {
namespace {

// 15-point Kronrod abscissae (positive half); even indices are the embedded
// 7-point Gauss nodes.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class T>
struct Panel {
  double a, b;
  T value;
  double error;
};

// One Kronrod 15(7) evaluation on [a, b] with the QUADPACK-style scaled
// error estimate.
template <class T, class F>
Panel<T> kronrod15(const F& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);

  T fv[15];
  fv[7] = f(c);
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    fv[j] = f(c - dx);
    fv[14 - j] = f(c + dx);
  }

  T resk = kWgk[7] * fv[7];
  T resg = kWg[3] * fv[7];
  double resabs = kWgk[7] * std::abs(fv[7]);
  for (int j = 0; j < 7; ++j) {
    const T sum = fv[j] + fv[14 - j];
    resk += kWgk[j] * sum;
    resabs += kWgk[j] * (std::abs(fv[j]) + std::abs(fv[14 - j]));
    if (j % 2 == 1) resg += kWg[j / 2] * sum;
  }
  const T mean = resk * 0.5;
  double resasc = kWgk[7] * std::abs(fv[7] - mean);
  for (int j = 0; j < 7; ++j)
    resasc += kWgk[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));

  resabs *= std::abs(h);
  resasc *= std::abs(h);
  double err = std::abs(resk - resg) * std::abs(h);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  const double uflow = std::numeric_limits<double>::min();
  const double eps = std::numeric_limits<double>::epsilon();
  if (resabs > uflow / (50.0 * eps)) err = std::max(50.0 * eps * resabs, err);

  return Panel<T>{a, b, resk * h, err};
}

template <class T, class F>
void run(const F& f, double a, double b, const QuadratureOptions& opt, T& value,
         double& error, std::size_t& evals, bool& converged) {
  std::vector<Panel<T>> panels;
  panels.push_back(kronrod15<T>(f, a, b));
  evals = 15;

  auto worse = [](const Panel<T>& l, const Panel<T>& r) {
    return l.error < r.error;
  };
  const double span = std::max({std::abs(a), std::abs(b), 1.0});
  const double min_width = 1e3 * std::numeric_limits<double>::epsilon() * span;

  double frozen_error = 0.0;  // panels too narrow to split further
  T total = panels.front().value;
  double err_sum = panels.front().error;
  while (panels.size() < opt.max_intervals) {
    const double tol = std::max(opt.abs_tol, opt.rel_tol * std::abs(total));
    if (err_sum + frozen_error <= tol) break;

    std::pop_heap(panels.begin(), panels.end(), worse);
    Panel<T> worst = panels.back();
    panels.pop_back();
    if (worst.b - worst.a < min_width) {
      // Roundoff-limited panel: bank its estimate and stop refining it.
      frozen_error += worst.error;
      err_sum -= worst.error;
      panels.push_back(Panel<T>{worst.a, worst.b, worst.value, 0.0});
      std::push_heap(panels.begin(), panels.end(), worse);
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    Panel<T> left = kronrod15<T>(f, worst.a, mid);
    Panel<T> right = kronrod15<T>(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    err_sum += left.error + right.error - worst.error;
    panels.push_back(left);
    std::push_heap(panels.begin(), panels.end(), worse);
    panels.push_back(right);
    std::push_heap(panels.begin(), panels.end(), worse);
    evals += 30;
  }

  // Sum smallest-error panels first so the final reduction is as clean as the
  // subdivision allowed.
  std::sort(panels.begin(), panels.end(),
            [](const Panel<T>& l, const Panel<T>& r) { return l.error < r.error; });
  value = T{};
  error = frozen_error;
  for (const auto& p : panels) {
    value += p.value;
    error += p.error;
  }
  converged = error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(value));
}

}  // namespace

QuadratureResult integrate(const std::function<double(double)>& f, double a,
                           double b, const QuadratureOptions& opt) {
  QuadratureResult r;
  if (a == b) {
    r.converged = true;
    return r;
  }
  run<double>(f, a, b, opt, r.value, r.error, r.evaluations, r.converged);
  return r;
}

QuadratureResultC integrate_complex(
    const std::function<std::complex<double>(double)>& f, double a, double b,
    const QuadratureOptions& opt) {
  QuadratureResultC r;
  if (a == b) {
    r.converged = true;
    return r;
  }
  run<std::complex<double>>(f, a, b, opt, r.value, r.error, r.evaluations,
                            r.converged);
  return r;
}

}  // namespace rfh
