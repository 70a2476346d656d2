#include <cmath>
#include <limits>
#include <stdexcept>

#include "ddtax/model.hpp"
#include "doctest.h"

using namespace ddtax;

TEST_CASE("levy family classification") {
  CHECK(levy_family({1.0, 0.0, 0.0, 1.0}) == LevyFamily::PureDrift);
  CHECK(levy_family({0.0, 1.0, 0.0, 1.0}) == LevyFamily::Brownian);
  CHECK(levy_family({1.0, 0.0, 2.0, 1.0}) == LevyFamily::CramerLundberg);
  CHECK(levy_family({1.0, 1.0, 2.0, 1.0}) == LevyFamily::JumpDiffusion);
}

TEST_CASE("model validation rejects degenerate parameters") {
  CHECK_NOTHROW(validate_model(LevyModel{0.5, 1.0, 1.0, 2.0}));
  // no randomness at all
  CHECK_THROWS_AS(validate_model(LevyModel{0.0, 0.0, 0.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_model(LevyModel{1.0, -1.0, 0.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_model(LevyModel{1.0, 0.0, 1.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_model(LevyModel{1.0, 0.0, -1.0, 1.0}),
                  std::invalid_argument);

  CHECK_NOTHROW(validate_model(OUJumpModel{1.0, 0.0, 1.0, 1.0, 1.0}));
  CHECK_THROWS_AS(validate_model(OUJumpModel{0.0, 0.0, 1.0, 1.0, 1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_model(OUJumpModel{1.0, 0.0, 0.0, 1.0, 1.0}),
                  std::invalid_argument);

  DiffusionModel d;
  d.mu = [](double) { return 0.0; };
  d.sigma = [](double) { return 1.0; };
  CHECK_NOTHROW(validate_model(d));
  DiffusionModel bad;  // callables unset
  CHECK_THROWS_AS(validate_model(bad), std::invalid_argument);
}

TEST_CASE("boundary evaluation across all kinds") {
  auto rv = boundary_eval(DrawdownBoundary::ruin(), 3.0);
  CHECK(rv.f == 0.0);
  CHECK(rv.fbar == 3.0);
  CHECK_THROWS_AS(boundary_eval(DrawdownBoundary::ruin(), 0.0),
                  std::domain_error);

  auto cv = boundary_eval(DrawdownBoundary::classic(2.0), 5.0);
  CHECK(cv.f == 3.0);
  CHECK(cv.fbar == 2.0);
  // classic is translation invariant, works for negative maxima too
  CHECK(boundary_eval(DrawdownBoundary::classic(2.0), -1.0).f == -3.0);

  auto pv = boundary_eval(DrawdownBoundary::proportional(0.25), 4.0);
  CHECK(pv.f == 1.0);
  CHECK(pv.fbar == 3.0);

  auto av = boundary_eval(DrawdownBoundary::affine(1.0, 10.0), 4.0);
  CHECK(av.f == -6.0);
  CHECK(av.fbar == 10.0);

  auto tb = DrawdownBoundary::tabulated({0.0, 2.0}, {-1.0, 0.5});
  auto tv = boundary_eval(tb, 1.0);
  CHECK(tv.f == doctest::Approx(-0.25));
  CHECK(tv.fbar == doctest::Approx(1.25));
  CHECK_THROWS_AS(boundary_eval(tb, 3.0), std::domain_error);
  CHECK_THROWS_AS(boundary_eval(tb, -0.5), std::domain_error);
}

TEST_CASE("tabulated boundary factory requires ascending grid") {
  CHECK_THROWS_AS(DrawdownBoundary::tabulated({1.0, 1.0}, {0.0, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DrawdownBoundary::tabulated({1.0}, {0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DrawdownBoundary::tabulated({0.0, 1.0}, {0.0}),
                  std::invalid_argument);
}

TEST_CASE("boundary validation catches violations on the interval") {
  // xi = 1 proportional means f(m) = m: rejected already at construction
  CHECK_THROWS_AS(DrawdownBoundary::proportional(1.0), std::invalid_argument);
  CHECK_THROWS_AS(DrawdownBoundary::affine(1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(DrawdownBoundary::classic(0.0), std::invalid_argument);

  // decreasing tabulated boundary
  auto dec = validate_boundary(
      DrawdownBoundary::tabulated({0.0, 1.0, 2.0}, {0.0, -1.0, -0.5}),
      {0.0, 2.0});
  CHECK_FALSE(dec.ok);

  // f(m) >= m inside the table
  auto cross = validate_boundary(
      DrawdownBoundary::tabulated({0.0, 1.0}, {0.5, 1.5}), {0.0, 1.0});
  CHECK_FALSE(cross.ok);

  CHECK(validate_boundary(DrawdownBoundary::ruin(), {0.5, 3.0}).ok);
  CHECK(validate_boundary(DrawdownBoundary::classic(1.0), {-2.0, 3.0}).ok);
  CHECK(validate_boundary(DrawdownBoundary::affine(0.5, 1.0), {0.0, 3.0}).ok);
  CHECK(
      validate_boundary(DrawdownBoundary::tabulated({0.0, 2.0}, {-1.0, 0.5}),
                        {0.0, 2.0})
          .ok);
  // ruin needs m > 0 on the whole interval
  CHECK_FALSE(validate_boundary(DrawdownBoundary::ruin(), {-1.0, 2.0}).ok);
}

TEST_CASE("tax schedules evaluate and validate") {
  CHECK(tax_rate_at(TaxSchedule::none(), 5.0) == 0.0);
  CHECK(tax_rate_at(TaxSchedule::constant(0.3), -2.0) == 0.3);

  auto pw = TaxSchedule::piecewise_constant({1.0, 2.0}, {0.1, 0.2, 0.4});
  CHECK(tax_rate_at(pw, 0.5) == 0.1);
  CHECK(tax_rate_at(pw, 1.0) == 0.2);  // right-continuous at breaks
  CHECK(tax_rate_at(pw, 1.5) == 0.2);
  CHECK(tax_rate_at(pw, 7.0) == 0.4);

  auto tab = TaxSchedule::tabulated({0.0, 4.0}, {0.0, 0.8});
  CHECK(tax_rate_at(tab, 1.0) == doctest::Approx(0.2));
  CHECK_THROWS_AS(tax_rate_at(tab, 5.0), std::domain_error);

  CHECK(validate_tax(pw, {0.0, 10.0}).ok);
  // rate outside [0, 1) is rejected at construction
  CHECK_THROWS_AS(TaxSchedule::constant(1.0), std::invalid_argument);
  CHECK_THROWS_AS(TaxSchedule::constant(-0.1), std::invalid_argument);
  // decreasing rates pass the factory but fail interval validation
  CHECK_FALSE(
      validate_tax(TaxSchedule::piecewise_constant({1.0}, {0.4, 0.2}), {0.0, 2.0})
          .ok);
  CHECK_FALSE(validate_tax(TaxSchedule::tabulated({0.0, 1.0}, {0.2, 0.1}),
                           {0.0, 1.0})
                  .ok);
  // tabulated grid not covering the interval
  CHECK_FALSE(validate_tax(tab, {0.0, 5.0}).ok);
}

TEST_CASE("tax factories reject malformed input") {
  CHECK_THROWS_AS(TaxSchedule::piecewise_constant({2.0, 1.0}, {0.1, 0.2, 0.3}),
                  std::invalid_argument);
  CHECK_THROWS_AS(TaxSchedule::piecewise_constant({1.0}, {0.1}),
                  std::invalid_argument);
  CHECK_THROWS_AS(TaxSchedule::tabulated({0.0}, {0.1}), std::invalid_argument);
  CHECK_THROWS_AS(TaxSchedule::tabulated({0.0, 1.0}, {0.2, 1.1}),
                  std::invalid_argument);
}

TEST_CASE("query validation") {
  const double inf = std::numeric_limits<double>::infinity();
  CHECK_NOTHROW(validate_query({0.0, 1.0, 0.5, 0.2}));
  CHECK_NOTHROW(validate_query({0.0, inf, 0.5, 0.0}));
  CHECK_THROWS_AS(validate_query({1.0, 1.0, 0.5, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_query({2.0, 1.0, 0.5, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_query({0.0, 1.0, -0.5, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_query({0.0, 1.0, 0.5, -0.2}), std::invalid_argument);
  CHECK_THROWS_AS(validate_query({std::nan(""), 1.0, 0.5, 0.0}),
                  std::invalid_argument);
}

TEST_CASE("labels are informative") {
  CHECK(model_label(LevyModel{1, 0, 2, 3}) != "");
  CHECK(boundary_label(DrawdownBoundary::affine(0.5, 1.0)) != "");
  CHECK(tax_label(TaxSchedule::constant(0.25)) != "");
}
