#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "rfh/norms.hpp"

using namespace rfh;

namespace {
const double pi = std::acos(-1.0);
const double two_pi = 2.0 * pi;

std::vector<cplx> plane_wave(const SpectralGrid& grid, double n0, cplx amp) {
  std::vector<cplx> u(grid.size());
  const std::size_t stride0 = grid.size() / grid.N;  // axis 0 is outermost
  for (std::size_t p = 0; p < grid.size(); ++p) {
    const double x0 = grid.dx() * double(p / stride0);
    u[p] = amp * std::exp(cplx(0.0, n0 * x0));
  }
  return u;
}
}  // namespace

TEST_CASE("norm spec grammar round trips") {
  for (const char* s :
       {"L2t:Hs(0.5)", "L2t:Hsdot(-0.5)", "Linft:L2", "L4t:L6", "L1t:Linf",
        "L2t:Hs(-1.25)", "Linft:Hsdot(0.75)"}) {
    auto spec = NormSpec::parse(s);
    CHECK(NormSpec::parse(spec.str()).str() == spec.str());
    CHECK(spec.str() == s);
  }
  CHECK(NormSpec::parse("L2t:Hs(0.5)").time_p == 2.0);
  CHECK(std::isinf(NormSpec::parse("Linft:L2").time_p));
  CHECK(NormSpec::parse("L2t:L2").space.kind == SpaceNormKind::L2);
  for (const char* bad : {"", "Hs(0.5)", "L2:Hs(0.5)", "L2t:Hs", "L2t:Hs(x)",
                          "L0.5t:L2", "L2t:L0.9", "L2t:Hs(0.5)x"})
    CHECK_THROWS_AS(NormSpec::parse(bad), std::invalid_argument);
}

TEST_CASE("spatial norms of a constant") {
  auto grid = SpectralGrid::make(2, 8, two_pi);
  std::vector<cplx> u(grid.size(), cplx(0.3, -0.4));  // |u| = 0.5
  const double vol = grid.volume();
  CHECK(spatial_norm(grid, u, {SpaceNormKind::L2, 0, 2}) ==
        doctest::Approx(0.5 * std::sqrt(vol)).epsilon(1e-12));
  CHECK(spatial_norm(grid, u, {SpaceNormKind::Linf, 0, 2}) ==
        doctest::Approx(0.5).epsilon(1e-12));
  CHECK(spatial_norm(grid, u, {SpaceNormKind::Lq, 0, 4}) ==
        doctest::Approx(0.5 * std::pow(vol, 0.25)).epsilon(1e-12));
  // Hs of a constant sees only the zero mode: (1+0)^{s/2} |c| sqrt(vol).
  CHECK(spatial_norm(grid, u, {SpaceNormKind::Hs, 1.5, 2}) ==
        doctest::Approx(0.5 * std::sqrt(vol)).epsilon(1e-12));
  // Homogeneous norms of positive order kill constants.
  CHECK(spatial_norm(grid, u, {SpaceNormKind::Hsdot, 0.5, 2}) ==
        doctest::Approx(0.0));
}

TEST_CASE("sobolev norms of a plane wave are exact") {
  auto grid = SpectralGrid::make(2, 16, two_pi);
  auto u = plane_wave(grid, 3.0, cplx(0.7, 0.1));
  const double a = std::abs(cplx(0.7, 0.1));
  const double vol = grid.volume();
  for (double s : {-0.5, 0.5, 1.0, 2.0}) {
    INFO("sigma = ", s);
    CHECK(spatial_norm(grid, u, {SpaceNormKind::Hs, s, 2}) ==
          doctest::Approx(a * std::sqrt(vol) * std::pow(10.0, s / 2.0))
              .epsilon(1e-12));
    CHECK(spatial_norm(grid, u, {SpaceNormKind::Hsdot, s, 2}) ==
          doctest::Approx(a * std::sqrt(vol) * std::pow(3.0, s)).epsilon(1e-12));
  }
}

TEST_CASE("sobolev monotonicity in the order") {
  auto grid = SpectralGrid::make(2, 8, two_pi);
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<cplx> u(grid.size());
  for (auto& x : u) x = cplx(d(rng), d(rng));
  double prev = 0.0;
  for (double s : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    const double v = spatial_norm(grid, u, {SpaceNormKind::Hs, s, 2});
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(spatial_norm(grid, u, {SpaceNormKind::Hs, 0.0, 2}) ==
        doctest::Approx(spatial_norm(grid, u, {SpaceNormKind::L2, 0, 2}))
            .epsilon(1e-13));
}

TEST_CASE("triangle inequality") {
  auto grid = SpectralGrid::make(1, 32, two_pi);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  std::vector<cplx> u(grid.size()), v(grid.size()), s(grid.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    u[i] = cplx(d(rng), d(rng));
    v[i] = cplx(d(rng), d(rng));
    s[i] = u[i] + v[i];
  }
  for (auto kind : {SpaceNormKind::L2, SpaceNormKind::Linf, SpaceNormKind::Hs}) {
    SpatialNormSpec spec{kind, 0.7, 2};
    CHECK(spatial_norm(grid, s, spec) <=
          spatial_norm(grid, u, spec) + spatial_norm(grid, v, spec) + 1e-12);
  }
}

TEST_CASE("frac_deriv sigma=2 is the (negative) laplacian") {
  auto grid = SpectralGrid::make(2, 16, two_pi);
  auto u = plane_wave(grid, 3.0, cplx(1.0, 0.0));
  auto lap = frac_deriv(grid, u, 2.0, true);
  for (std::size_t p = 0; p < u.size(); ++p)
    CHECK(std::abs(lap[p] - 9.0 * u[p]) < 1e-10);
  // Inhomogeneous version applies (1 + |xi|^2)^{sigma/2}.
  auto bes = frac_deriv(grid, u, 2.0, false);
  for (std::size_t p = 0; p < u.size(); ++p)
    CHECK(std::abs(bes[p] - 10.0 * u[p]) < 1e-10);
}

TEST_CASE("negative homogeneous order requires mean-zero input") {
  auto grid = SpectralGrid::make(1, 16, two_pi);
  std::vector<cplx> with_mean(grid.size(), cplx(1.0, 0.0));
  CHECK_THROWS(frac_deriv(grid, with_mean, -0.5, true));
  auto u = plane_wave(grid, 2.0, cplx(1.0, 0.0));  // mean zero
  auto v = frac_deriv(grid, u, -0.5, true);
  for (std::size_t p = 0; p < u.size(); ++p)
    CHECK(std::abs(v[p] - u[p] / std::sqrt(2.0)) < 1e-12);
}

TEST_CASE("mixed norm over constant-in-time snapshots") {
  auto grid = SpectralGrid::make(1, 16, two_pi);
  std::vector<cplx> snap(grid.size(), cplx(2.0, 0.0));
  std::vector<std::vector<cplx>> path(5, snap);
  const double dt = 0.25;  // window length 1.0
  const double sp = 2.0 * std::sqrt(grid.volume());
  auto spec2 = NormSpec::parse("L2t:L2");
  CHECK(mixed_norm(grid, path, dt, spec2) ==
        doctest::Approx(sp * 1.0).epsilon(1e-12));  // sqrt(int_0^1 sp^2)
  auto specI = NormSpec::parse("Linft:L2");
  CHECK(mixed_norm(grid, path, dt, specI) == doctest::Approx(sp).epsilon(1e-12));
}

TEST_CASE("mixed norm trapezoid weighting") {
  auto grid = SpectralGrid::make(1, 8, two_pi);
  // One nonzero snapshot at an endpoint gets half weight under the trapezoid.
  std::vector<std::vector<cplx>> path(3, std::vector<cplx>(grid.size(), 0.0));
  path[0].assign(grid.size(), cplx(1.0, 0.0));
  const double dt = 0.5;
  const double sp = std::sqrt(grid.volume());
  auto spec = NormSpec::parse("L2t:L2");
  CHECK(mixed_norm(grid, path, dt, spec) ==
        doctest::Approx(sp * std::sqrt(0.5 * dt)).epsilon(1e-12));
}
