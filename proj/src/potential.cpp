#include "rfh/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace rfh {

Potential Potential::point_mass(double weight) {
  Potential p;
  p.kind = PotentialKind::PointMass;
  p.weight = weight;
  return p;
}

Potential Potential::gaussian(double weight, double width) {
  if (width <= 0.0) throw std::invalid_argument("gaussian potential: width > 0");
  Potential p;
  p.kind = PotentialKind::GaussianMeasure;
  p.weight = weight;
  p.width = width;
  return p;
}

Potential Potential::yukawa3d(double weight, double screening) {
  if (screening <= 0.0)
    throw std::invalid_argument("yukawa potential: screening > 0");
  Potential p;
  p.kind = PotentialKind::Yukawa3D;
  p.weight = weight;
  p.screening = screening;
  return p;
}

Potential Potential::custom_fourier(std::vector<double> k_nodes,
                                    std::vector<double> k_values) {
  if (k_nodes.size() < 2 || k_nodes.size() != k_values.size())
    throw std::invalid_argument("custom potential: need >= 2 (k, value) rows");
  if (k_nodes.front() != 0.0)
    throw std::invalid_argument("custom potential: first node must be k = 0");
  for (std::size_t i = 1; i < k_nodes.size(); ++i)
    if (k_nodes[i] <= k_nodes[i - 1])
      throw std::invalid_argument("custom potential: nodes must increase");
  Potential p;
  p.kind = PotentialKind::CustomFourier;
  p.k_nodes = std::move(k_nodes);
  p.k_values = std::move(k_values);
  p.weight = p.k_values.front();
  return p;
}

double Potential::w_hat(double k) const {
  k = std::abs(k);  // w_hat is even
  switch (kind) {
    case PotentialKind::PointMass:
      return weight;
    case PotentialKind::GaussianMeasure:
      return weight * std::exp(-0.5 * width * width * k * k);
    case PotentialKind::Yukawa3D: {
      const double l2 = screening * screening;
      return weight * l2 / (k * k + l2);
    }
    case PotentialKind::CustomFourier: {
      const auto& r = k_nodes;
      const auto& v = k_values;
      const std::size_t n = r.size();
      if (k >= r.back()) return v.back();
      const std::size_t j = std::upper_bound(r.begin(), r.end(), k) - r.begin() - 1;
      const std::size_t i = std::min(j, n - 2);
      auto secant = [&](std::size_t a) {
        return (v[a + 1] - v[a]) / (r[a + 1] - r[a]);
      };
      auto node_slope = [&](std::size_t a) -> double {
        if (a == 0) return secant(0);
        if (a == n - 1) return secant(n - 2);
        const double hl = r[a] - r[a - 1], hr = r[a + 1] - r[a];
        return (hr * secant(a - 1) + hl * secant(a)) / (hl + hr);
      };
      const double h = r[i + 1] - r[i];
      const double s = (k - r[i]) / h;
      const double s2 = s * s, s3 = s2 * s;
      return (2 * s3 - 3 * s2 + 1) * v[i] + (s3 - 2 * s2 + s) * h * node_slope(i) +
             (-2 * s3 + 3 * s2) * v[i + 1] + (s3 - s2) * h * node_slope(i + 1);
    }
  }
  return 0.0;
}

double Potential::sup_abs() const {
  switch (kind) {
    case PotentialKind::PointMass:
    case PotentialKind::GaussianMeasure:
    case PotentialKind::Yukawa3D:
      return std::abs(weight);
    case PotentialKind::CustomFourier: {
      double m = 0.0;
      for (double v : k_values) m = std::max(m, std::abs(v));
      return m;
    }
  }
  return 0.0;
}

double Potential::sup_abs_over_k() const {
  if (sup_abs() == 0.0) return 0.0;
  if (w_hat_zero() != 0.0) return std::numeric_limits<double>::infinity();
  double sup = 0.0;
  const int samples = 600;
  for (int i = 0; i <= samples; ++i) {
    const double k = std::pow(10.0, -6.0 + 12.0 * i / samples);
    sup = std::max(sup, std::abs(w_hat(k)) / k);
  }
  for (double k : k_nodes)
    if (k > 0.0) sup = std::max(sup, std::abs(w_hat(k)) / k);
  return sup;
}

SteadyStateParams SteadyStateParams::make(MomentumDistribution dist,
                                          Potential pot,
                                          const QuadratureOptions& quad) {
  SteadyStateParams s{std::move(dist), std::move(pot), 0.0};
  s.m = s.potential.w_hat_zero() * norm_squared(s.distribution, quad);
  return s;
}

}  // namespace rfh
