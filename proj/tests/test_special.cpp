#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "rfh/special.hpp"

using namespace rfh;

// Reference values computed with 50-digit arithmetic, covering both the
// power-series branch (x <= 12) and the asymptotic branch, plus the seam.
struct JRef {
  double nu, x, value;
};
static const JRef j_refs[] = {
    {0.0, 0.3, 0.97762624653829608922},
    {0.0, 1.0, 0.76519768655796655145},
    {0.0, 5.0, -0.17759677131433830435},
    {0.0, 11.9, 0.02504944169958964508},
    {0.0, 12.1, 0.069666773606807311849},
    {0.0, 25.0, 0.096266783275958116174},
    {0.0, 80.0, -0.06974216551221002284},
    {0.0, 300.0, -0.033298554876305668007},
    {0.5, 0.3, 0.43049351732812455754},
    {0.5, 1.0, 0.67139670714180309042},
    {0.5, 5.0, -0.34216798479816180976},
    {0.5, 11.9, -0.14297213406708067944},
    {0.5, 12.1, -0.10313819465555995372},
    {0.5, 300.0, -0.04605463914475310566},
    {1.0, 0.3, 0.14831881627310400238},
    {1.0, 1.0, 0.44005058574493351596},
    {1.0, 5.0, -0.32757913759146522204},
    {1.0, 11.9, -0.22898324966192405505},
    {1.0, 12.1, -0.21574897337692480827},
    {1.0, 80.0, -0.05605729667571257751},
    {1.5, 0.3, 0.043309881918378320896},
    {1.5, 1.0, 0.2402978391234270109},
    {1.5, 5.0, -0.16965130614474076152},
    {1.5, 12.1, -0.21340358035979594877},
    {1.5, 300.0, 0.00086438489403493274876},
    {2.0, 0.3, 0.011165861949063963219},
    {2.0, 1.0, 0.11490348493190048047},
    {2.0, 5.0, 0.046565116277752215532},
    {2.0, 11.9, -0.063534021474702930493},
    {2.0, 12.1, -0.10532776094183620682},
    {2.0, 25.0, -0.10629480324238130855},
    {2.5, 1.0, 0.049496810228477942271},
    {2.5, 5.0, 0.24037720111131735285},
    {2.5, 12.1, 0.050228216053957650821},
    {3.0, 0.3, 0.00055934304774884605867},
    {3.0, 5.0, 0.36483123061366699446},
    {3.0, 80.0, 0.05947433333047843793},
    {3.5, 1.0, 0.00718621201896270046},
    {3.5, 11.9, 0.23336980516952595706},
    {3.5, 300.0, -0.000096663510806708498972},
    {4.0, 0.3, 0.00002099900591295836794},
    {4.0, 1.0, 0.0024766389641099550438},
    {4.0, 5.0, 0.39123236045864817782},
    {4.0, 12.1, 0.19504505623970296748},
    {4.0, 80.0, -0.063880158095531325557},
    {4.0, 300.0, -0.032439400447038881154},
};

TEST_CASE("bessel J reference values") {
  for (const auto& ref : j_refs) {
    const double got = bessel_J(ref.nu, ref.x);
    INFO("nu = ", ref.nu, " x = ", ref.x);
    CHECK(std::abs(got - ref.value) <
          1e-11 * std::max(1.0, std::abs(ref.value)));
  }
}

TEST_CASE("half-integer closed forms") {
  const double pi = std::acos(-1.0);
  // J_{1/2}(x) = sqrt(2/(pi x)) sin x ; at x = pi/2 this is 2/pi.
  CHECK(bessel_J(0.5, pi / 2.0) == doctest::Approx(2.0 / pi).epsilon(1e-13));
  // J_{3/2}(x) = sqrt(2/(pi x)) (sin x / x - cos x); at x = pi this is sqrt(2)/pi.
  CHECK(bessel_J(1.5, pi) == doctest::Approx(std::sqrt(2.0) / pi).epsilon(1e-13));
}

TEST_CASE("three-term recurrence") {
  const double xs[] = {0.7, 3.3, 9.0, 14.2, 60.0};
  const double nus[] = {1.0, 1.5, 2.0, 3.0};
  for (double nu : nus)
    for (double x : xs) {
      const double lhs = bessel_J(nu - 1.0, x) + bessel_J(nu + 1.0, x);
      const double rhs = (2.0 * nu / x) * bessel_J(nu, x);
      INFO("nu = ", nu, " x = ", x);
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
}

TEST_CASE("J at zero argument") {
  CHECK(bessel_J(0.0, 0.0) == doctest::Approx(1.0));
  CHECK(bessel_J(1.0, 0.0) == doctest::Approx(0.0));
  CHECK(bessel_J(2.5, 0.0) == doctest::Approx(0.0));
}

TEST_CASE("sphere areas") {
  const double pi = std::acos(-1.0);
  CHECK(sphere_area(1) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(sphere_area(2) == doctest::Approx(2.0 * pi).epsilon(1e-14));
  CHECK(sphere_area(3) == doctest::Approx(4.0 * pi).epsilon(1e-14));
  CHECK(sphere_area(4) == doctest::Approx(2.0 * pi * pi).epsilon(1e-14));
}
