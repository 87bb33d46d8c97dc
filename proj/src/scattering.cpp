#include <cmath>
#include <stdexcept>

#include "rfh/dynamics.hpp"
#include "rfh/threads.hpp"

namespace rfh {

ScatterDiagnostics scattering_diagnostic(const std::vector<RandomFieldState>& samples,
                                         double sigma, bool homogeneous) {
  if (samples.size() < 3)
    throw std::invalid_argument("scattering: need at least three sampled states");
  if (!std::isfinite(sigma))
    throw std::invalid_argument("scattering: sigma must be finite");
  const SpectralGrid& grid = samples.front().grid;
  const std::size_t npts = grid.size();
  const std::size_t n_modes = samples.front().z.size();
  const std::size_t n_extra = samples.front().extra.size();
  for (const auto& s : samples) {
    s.validate();
    if (s.grid.dim != grid.dim || s.grid.N != grid.N || s.grid.L != grid.L)
      throw std::invalid_argument("scattering: samples live on different grids");
    if (s.z.size() != n_modes || s.extra.size() != n_extra)
      throw std::invalid_argument("scattering: samples carry different field counts");
  }
  for (std::size_t i = 1; i < samples.size(); ++i)
    if (!(samples[i].t > samples[i - 1].t))
      throw std::invalid_argument("scattering: sample times must increase");

  ScatterDiagnostics diag;
  diag.sigma = sigma;
  diag.homogeneous = homogeneous;
  diag.times.reserve(samples.size());
  for (const auto& s : samples) diag.times.push_back(s.t);

  // W(t_i) = S(-t_i) z(t_i): undo the free flow in coefficient space. The
  // profiles converge iff the perturbation scatters.
  const std::size_t n_s = samples.size();
  const std::size_t n_f = n_modes + n_extra;
  diag.profiles.assign(n_s, std::vector<std::vector<cplx>>(n_f));
  parallel_for(n_s, [&](std::size_t i) {
    const auto& s = samples[i];
    for (std::size_t f = 0; f < n_f; ++f) {
      std::vector<cplx> c = f < n_modes ? s.z[f] : s.extra[f - n_modes];
      grid.to_coeff(c);
      for (std::size_t p = 0; p < npts; ++p) {
        const double a = s.t * (s.m + grid.xi_sq_at(p));
        c[p] *= cplx(std::cos(a), std::sin(a));
      }
      diag.profiles[i][f] = std::move(c);
    }
  });

  std::vector<double> mult(npts);
  for (std::size_t p = 0; p < npts; ++p) {
    const double xi_sq = grid.xi_sq_at(p);
    if (homogeneous) {
      if (sigma == 0.0)
        mult[p] = 1.0;
      else
        mult[p] = xi_sq > 0.0 ? std::pow(xi_sq, sigma) : 0.0;
    } else {
      mult[p] = std::pow(1.0 + xi_sq, sigma);
    }
  }

  diag.cauchy.assign(n_s, std::vector<double>(n_s, 0.0));
  const double vol = grid.volume();
  for (std::size_t i = 0; i < n_s; ++i) {
    for (std::size_t j = i + 1; j < n_s; ++j) {
      double acc = 0.0;
      for (std::size_t f = 0; f < n_f; ++f) {
        const auto& a = diag.profiles[i][f];
        const auto& b = diag.profiles[j][f];
        for (std::size_t p = 0; p < npts; ++p) acc += mult[p] * std::norm(a[p] - b[p]);
      }
      const double v = std::sqrt(vol * acc);
      diag.cauchy[i][j] = v;
      diag.cauchy[j][i] = v;
    }
  }
  return diag;
}

}  // namespace rfh
