#include <cmath>
#include <vector>

#include "ddtax/quad.hpp"
#include "ddtax/rng.hpp"
#include "doctest.h"

using namespace ddtax;

TEST_CASE("compensated sum recovers mass swamped by large terms") {
  CompensatedSum s;
  s.add(1.0);
  s.add(1e100);
  s.add(1.0);
  s.add(-1e100);
  CHECK(s.value() == 2.0);
}

TEST_CASE("gk15 is exact on low-degree polynomials") {
  auto r = gk15([](double x) { return x * x; }, 0.0, 1.0);
  CHECK(r.value == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  auto r2 = gk15([](double x) { return 5 * x * x * x * x - 2 * x; }, -1.0, 2.0);
  // antiderivative x^5 - x^2: (32-4) - (-1-1) = 30
  CHECK(r2.value == doctest::Approx(30.0).epsilon(1e-14));
  CHECK(r2.error < 1e-10);
}

TEST_CASE("adaptive quadrature handles smooth and endpoint-singular integrands") {
  auto smooth = integrate_adaptive([](double x) { return std::sin(x); }, 0.0,
                                   M_PI, 1e-12);
  CHECK(std::abs(smooth.value - 2.0) < 1e-11);

  // int_0^1 log x = -1; integrable singularity at the left endpoint
  auto lg = integrate_adaptive([](double x) { return std::log(x); }, 0.0, 1.0,
                               1e-10);
  CHECK(std::abs(lg.value + 1.0) < 1e-8);

  // int_0^1 x^{-1/2} = 2
  auto sq = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0,
                               1.0, 1e-9);
  CHECK(std::abs(sq.value - 2.0) < 1e-6);
}

TEST_CASE("cumulative integral matches the antiderivative and extends") {
  CumulativeIntegral ci([](double x) { return std::cos(x); }, 0.0, M_PI / 2,
                        1e-12);
  CHECK(ci.total() == doctest::Approx(1.0).epsilon(1e-11));
  for (double y : {0.0, 0.3, 0.7, 1.2, M_PI / 2})
    CHECK(std::abs(ci.eval(y) - std::sin(y)) < 1e-10);

  ci.extend(M_PI);
  CHECK(std::abs(ci.total() - std::sin(M_PI)) < 1e-10);
  CHECK(std::abs(ci.eval(2.0) - std::sin(2.0)) < 1e-10);
  CHECK(ci.upper() == doctest::Approx(M_PI));

  const auto& nodes = ci.breakpoints();
  REQUIRE(nodes.size() >= 2);
  CHECK(nodes.front() == doctest::Approx(0.0));
  CHECK(nodes.back() == doctest::Approx(M_PI));
  for (std::size_t i = 1; i < nodes.size(); ++i) CHECK(nodes[i] > nodes[i - 1]);
}

TEST_CASE("gauss-legendre rules integrate exactly up to degree 2n-1") {
  const auto& gl = gauss_legendre(24);
  REQUIRE(gl.x.size() == 24);
  CompensatedSum wsum, mom;
  for (int i = 0; i < 24; ++i) {
    wsum.add(gl.w[i]);
    mom.add(gl.w[i] * std::pow(gl.x[i], 46));
  }
  CHECK(wsum.value() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(mom.value() == doctest::Approx(2.0 / 47.0).epsilon(1e-13));
}

TEST_CASE("root finders locate bracketed roots") {
  double r = newton_bisect([](double x) { return x * x * x - 2.0; },
                           [](double x) { return 3.0 * x * x; }, 0.0, 2.0);
  CHECK(r == doctest::Approx(std::cbrt(2.0)).epsilon(1e-12));

  double c = brent_root([](double x) { return std::cos(x) - x; }, 0.0, 1.0);
  CHECK(c == doctest::Approx(0.7390851332151607).epsilon(1e-12));
}

TEST_CASE("central derivative with Richardson step") {
  auto d = central_derivative([](double x) { return std::sin(x); }, 1.0, 1e-3);
  CHECK(std::abs(d.value - std::cos(1.0)) < 1e-11);
  CHECK(d.rel_spread < 1e-6);
}

TEST_CASE("philox4x32-10 known-answer vectors") {
  auto z = philox4x32({0u, 0u, 0u, 0u}, {0u, 0u});
  CHECK(z[0] == 0x6627e8d5u);
  CHECK(z[1] == 0xe169c58du);
  CHECK(z[2] == 0xbc57ac4cu);
  CHECK(z[3] == 0x9b00dbd8u);

  auto f = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                      {0xffffffffu, 0xffffffffu});
  CHECK(f[0] == 0x408f276du);
  CHECK(f[1] == 0x41c83b0eu);
  CHECK(f[2] == 0xa20bc7c6u);
  CHECK(f[3] == 0x6d5451fdu);

  auto p = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u});
  CHECK(p[0] == 0xd16cfe09u);
  CHECK(p[1] == 0x94fdccebu);
  CHECK(p[2] == 0x5001e420u);
  CHECK(p[3] == 0x24126ea1u);
}

TEST_CASE("inverse normal cdf spot values and round trip") {
  CHECK(inv_normal_cdf(0.5) == 0.0);
  CHECK(std::abs(inv_normal_cdf(0.975) - 1.959963984540054) < 1e-12);
  CHECK(std::abs(inv_normal_cdf(0.99) - 2.3263478740408408) < 1e-12);
  for (double pr : {1e-10, 1e-4, 0.2, 0.5, 0.8, 1 - 1e-4})
    CHECK(std::abs(normal_cdf(inv_normal_cdf(pr)) - pr) < 1e-13 * std::max(pr, 1e-3));
  CHECK_THROWS_AS(inv_normal_cdf(0.0), std::domain_error);
  CHECK_THROWS_AS(inv_normal_cdf(1.0), std::domain_error);
}

TEST_CASE("path rng streams are deterministic and per-path independent") {
  PathRng a(42, 7), b(42, 7), c(42, 8);
  std::vector<double> ua, ub;
  for (int i = 0; i < 16; ++i) {
    ua.push_back(a.next_uniform());
    ub.push_back(b.next_uniform());
  }
  CHECK(ua == ub);
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) any_diff |= (c.next_uniform() != ua[i]);
  CHECK(any_diff);
  for (double u : ua) {
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("rng moments: uniform, normal, exponential") {
  PathRng r(123, 0);
  const int n = 100000;
  CompensatedSum su, sn, sn2, se;
  for (int i = 0; i < n; ++i) {
    su.add(r.next_uniform());
    double z = r.next_normal();
    sn.add(z);
    sn2.add(z * z);
    se.add(r.next_exponential(2.0));
  }
  CHECK(std::abs(su.value() / n - 0.5) < 4.0 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(sn.value() / n) < 4.0 / std::sqrt(double(n)));
  CHECK(std::abs(sn2.value() / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(se.value() / n - 0.5) < 4.0 * 0.5 / std::sqrt(double(n)));
  CHECK_THROWS_AS(r.next_exponential(0.0), std::invalid_argument);
}
