#include <cmath>
#include <limits>
#include <stdexcept>

#include "ddtax/engine.hpp"
#include "ddtax/mc.hpp"
#include "ddtax/tax.hpp"
#include "doctest.h"

using namespace ddtax;

namespace {

McConfig quick(std::size_t n, double dt) {
  McConfig c;
  c.seed = 99;
  c.n_paths = n;
  c.dt = dt;
  c.t_max = 50.0;
  return c;
}

}  // namespace

TEST_CASE("same seed, same numbers; parallel equals serial bitwise") {
  ProcessModel m = LevyModel{0.0, 1.0, 0.5, 2.0};
  auto f = DrawdownBoundary::classic(1.0);
  FunctionalQuery fq{0.0, 1.0, 0.25, 0.5};
  McConfig cfg = quick(4000, 1e-3);

  auto a = mc_functionals(m, f, TaxSchedule::none(), fq, cfg);
  auto b = mc_functionals(m, f, TaxSchedule::none(), fq, cfg);
  CHECK(a.g.mean == b.g.mean);
  CHECK(a.h.mean == b.h.mean);
  CHECK(a.g.se == b.g.se);

  cfg.parallel = false;
  auto s = mc_functionals(m, f, TaxSchedule::none(), fq, cfg);
  CHECK(a.g.mean == s.g.mean);
  CHECK(a.h.mean == s.h.mean);
  CHECK(a.epv.mean == s.epv.mean);
  CHECK(a.epv_upper.mean == s.epv_upper.mean);
  CHECK(a.g.se == s.g.se);
  CHECK(a.h.se == s.h.se);
  CHECK(a.unresolved == s.unresolved);

  cfg.parallel = true;
  cfg.seed = 100;
  auto c = mc_functionals(m, f, TaxSchedule::none(), fq, cfg);
  CHECK(c.g.mean != a.g.mean);
}

TEST_CASE("undiscounted weight is conserved: g + h + leftover = 1") {
  // with q = 0 and s = 0 every path's bridge weights split a unit mass
  // between up-exit, crossing and the horizon leftover
  ProcessModel m = LevyModel{0.1, 1.0, 0.7, 1.5};
  auto f = DrawdownBoundary::classic(0.8);
  FunctionalQuery fq{0.0, 1.2, 0.0, 0.0};
  auto r = mc_functionals(m, f, TaxSchedule::none(), fq, quick(3000, 1e-3));
  CHECK(r.g.mean + r.h.mean + r.unresolved ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.n == 3000);
}

TEST_CASE("brownian ruin exit probability") {
  ProcessModel m = LevyModel{0.0, 1.0, 0.0, 1.0};
  FunctionalQuery fq{1.0, 2.0, 0.0, 0.0};
  auto r = mc_functionals(m, DrawdownBoundary::ruin(), TaxSchedule::none(), fq,
                          quick(20000, 5e-4));
  // reaching 2 from 1 before 0: probability 1/2
  CHECK(std::abs(r.g.mean - 0.5) < 3.0 * r.g.se + 5e-3);
  CHECK(r.g.se < 0.006);
  CHECK(std::abs(r.g.mean + r.h.mean + r.unresolved - 1.0) < 1e-12);
}

TEST_CASE("jump crossings score the exact deficit transform") {
  // pure-drift-plus-jumps path: every drawdown crossing is a jump landing
  // at a node, so the e^{-s Y} weight carries no discretization error;
  // compare against the analytic law
  ProcessModel m = LevyModel{2.0, 0.0, 1.0, 1.0};
  auto f = DrawdownBoundary::classic(1.0);
  const double q = 0.3, s = 0.5, K = 1.0;
  FunctionalQuery fq{0.0, K, q, s};

  auto params = make_params(m, f, q, s, {-2.0, 1.5});
  const double href = drawdown_law(params, 0.0, K).value;
  const double gref = exit_transform(make_params(m, f, q, 0.0, {-2.0, 1.5}),
                                     0.0, K)
                          .value;

  auto r = mc_functionals(m, f, TaxSchedule::none(), fq, quick(30000, 1e-3));
  CHECK(std::abs(r.h.mean - href) < 3.0 * r.h.se + 3e-3);
  CHECK(std::abs(r.g.mean - gref) < 3.0 * r.g.se + 3e-3);
}

TEST_CASE("taxed walk estimates the taxed functionals") {
  TaxSetup st;
  st.model = LevyModel{0.0, 1.0, 0.0, 1.0};
  st.f = DrawdownBoundary::ruin();
  st.tax = TaxSchedule::constant(0.5);
  st.x = 1.0;
  const double q = 0.0, K = 2.0;
  const double gref = tax_exit(st, q, K).value;  // (1/2)^2 = 1/4
  const double eref = tax_epv(st, q, K, TaxEpvMode::UntilEither).value;
  const double uref = tax_epv(st, q, K, TaxEpvMode::OnUpperExit).value;

  FunctionalQuery fq{st.x, K, q, 0.0};
  auto r = mc_functionals(st.model, st.f, st.tax, fq, quick(20000, 5e-4));
  CHECK(std::abs(r.g.mean - gref) < 3.0 * r.g.se + 5e-3);
  CHECK(std::abs(r.epv.mean - eref) < 3.0 * r.epv.se + 5e-3);
  CHECK(std::abs(r.epv_upper.mean - uref) < 3.0 * r.epv_upper.se + 5e-3);
  CHECK(r.epv_upper.mean < r.epv.mean);
}

TEST_CASE("horizon leftover is reported, not silently dropped") {
  ProcessModel m = LevyModel{0.0, 1.0, 0.0, 1.0};
  FunctionalQuery fq{1.0, 2.0, 0.0, 0.0};
  McConfig cfg = quick(500, 1e-3);
  cfg.t_max = 0.05;  // far too short to resolve most paths
  auto r = mc_functionals(m, DrawdownBoundary::ruin(), TaxSchedule::none(), fq,
                          cfg);
  CHECK(r.unresolved > 0.5);
  CHECK(r.g.mean + r.h.mean + r.unresolved == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("queries must have a finite upper target") {
  ProcessModel m = LevyModel{0.0, 1.0, 0.0, 1.0};
  const double inf = std::numeric_limits<double>::infinity();
  FunctionalQuery fq{1.0, inf, 0.0, 0.0};
  CHECK_THROWS_AS(mc_functionals(m, DrawdownBoundary::ruin(),
                                 TaxSchedule::none(), fq, quick(10, 1e-2)),
                  std::invalid_argument);
}

TEST_CASE("pathwise identities hold for every stepper family") {
  McConfig cfg = quick(500, 2e-3);
  cfg.t_max = 20.0;

  SUBCASE("levy jump diffusion") {
    auto rep = check_pathwise(LevyModel{0.2, 1.0, 1.0, 2.0},
                              DrawdownBoundary::classic(0.9),
                              TaxSchedule::none(), 0.0, 1.5, cfg);
    CHECK(rep.violations == 0);
    CHECK(rep.paths > 0);
    INFO(rep.first_issue);
    CHECK(rep.first_issue.empty());
  }
  SUBCASE("levy with proportional boundary and tax") {
    auto rep = check_pathwise(LevyModel{0.5, 0.8, 0.6, 1.5},
                              DrawdownBoundary::proportional(0.4),
                              TaxSchedule::piecewise_constant({1.5}, {0.2, 0.5}),
                              1.0, 2.0, cfg);
    CHECK(rep.violations == 0);
    INFO(rep.first_issue);
    CHECK(rep.first_issue.empty());
  }
  SUBCASE("ou with jumps") {
    auto rep = check_pathwise(OUJumpModel{1.0, 0.0, 1.0, 1.0, 1.0},
                              DrawdownBoundary::classic(1.0),
                              TaxSchedule::constant(0.3), 0.0, 1.0, cfg);
    CHECK(rep.violations == 0);
    INFO(rep.first_issue);
    CHECK(rep.first_issue.empty());
  }
  SUBCASE("plain diffusion") {
    DiffusionModel dm;
    dm.mu = [](double x) { return -x; };
    dm.sigma = [](double) { return 1.0; };
    dm.label = "ou";
    auto rep = check_pathwise(dm, DrawdownBoundary::classic(0.8),
                              TaxSchedule::none(), 0.0, 1.0, cfg);
    CHECK(rep.violations == 0);
    INFO(rep.first_issue);
    CHECK(rep.first_issue.empty());
  }
}

TEST_CASE("ou stepper mean reversion shows up in the estimates") {
  // strong reversion to 0 makes the upper target much harder to reach than
  // for driftless Brownian motion
  ProcessModel bm = LevyModel{0.0, 1.0, 0.0, 1.0};
  ProcessModel ouj = OUJumpModel{4.0, 0.0, 1.0, 1e-12, 1.0};
  // note: lambda must stay positive for the model validator; the jump rate
  // is negligible so this is effectively a pure OU diffusion
  FunctionalQuery fq{0.5, 1.5, 0.0, 0.0};
  auto f = DrawdownBoundary::classic(2.0);
  auto rb = mc_functionals(bm, f, TaxSchedule::none(), fq, quick(4000, 1e-3));
  auto ro = mc_functionals(ouj, f, TaxSchedule::none(), fq, quick(4000, 1e-3));
  CHECK(ro.g.mean < rb.g.mean - 5.0 * (ro.g.se + rb.g.se));
}
