#pragma once

namespace rfh {

// Bessel function of the first kind J_nu(x) for nu >= 0, x >= 0.
// Ascending power series for x <= 12, Hankel large-argument expansion beyond.
// The split point keeps the series' alternating-term cancellation below ~1e-11
// absolute while the asymptotic tail has already converged to machine noise
// for the orders used here (nu <= 9/2; half-integer orders terminate exactly).
double bessel_J(double nu, double x);

// Surface measure of the unit sphere in R^d: 2 pi^{d/2} / Gamma(d/2).
double sphere_area(int d);

}  // namespace rfh
