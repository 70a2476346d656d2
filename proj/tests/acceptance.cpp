// Acceptance gate: one verdict line per criterion, every tolerance pinned
// here in code.  Exits nonzero when any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ddtax/diffusion.hpp"
#include "ddtax/engine.hpp"
#include "ddtax/levy.hpp"
#include "ddtax/mc.hpp"
#include "ddtax/model.hpp"
#include "ddtax/oujump.hpp"
#include "ddtax/quad.hpp"
#include "ddtax/report.hpp"
#include "ddtax/tax.hpp"

using namespace ddtax;

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

struct Checker {
  bool ok = true;
  std::string why;  // first failure only

  void require(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      why = msg;
    }
  }
  // |got - want| <= tol
  void close_abs(const std::string& what, double got, double want,
                 double tol) {
    require(std::isfinite(got) && std::abs(got - want) <= tol,
            what + ": got " + num(got) + ", want " + num(want) + " +/- " +
                num(tol));
  }
  // |got - want| <= rtol |want|
  void close_rel(const std::string& what, double got, double want,
                 double rtol) {
    close_abs(what, got, want, rtol * std::abs(want));
  }
};

int run_criterion(int id, const std::string& title, double budget_s,
                  const std::function<void(Checker&)>& body) {
  Checker c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.require(false, std::string("threw: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (budget_s > 0.0)
    c.require(secs <= budget_s, "exceeded the " + num(budget_s) +
                                    " s budget (" + num(secs) + " s)");
  std::printf("[%s] criterion %2d: %s (%.2f s)%s%s\n",
              c.ok ? "PASS" : "FAIL", id, title.c_str(), secs,
              c.ok ? "" : " -- ", c.ok ? "" : c.why.c_str());
  std::fflush(stdout);
  return c.ok ? 0 : 1;
}

// 1. Zero-boundary exit for driftless Brownian motion is the scale ratio
//    W(x)/W(K) = x/K; pinned at 0.5 within 1e-10, under one second.
void c1_ruin_reduction(Checker& c) {
  const LevyModel bm{0.0, 1.0, 0.0, 1.0};
  const ExitParams p = make_params(ProcessModel{bm}, DrawdownBoundary::ruin(),
                                   0.0, 0.0, {0.5, 2.5});
  c.close_abs("exit(x=1, K=2)", exit_transform(p, 1.0, 2.0).value, 0.5,
              1e-10);
}

// 2. Fixed-gap drawdown of driftless Brownian motion: hazard 1/d over a unit
//    run gives e^{-1}; quadrature within 1e-8 and the bridge-corrected walker
//    within max(3 SE, 1e-2) at n = 1e5, dt = 1e-4.
void c2_classic_closed_case(Checker& c) {
  const LevyModel bm{0.0, 1.0, 0.0, 1.0};
  const DrawdownBoundary f = DrawdownBoundary::classic(1.0);
  const ExitParams p =
      make_params(ProcessModel{bm}, f, 0.0, 0.0, {-1.5, 1.5});
  const double g = exit_transform(p, 0.0, 1.0).value;
  c.close_abs("exit(x=0, K=1)", g, std::exp(-1.0), 1e-8);

  McConfig mc;
  mc.n_paths = 100000;
  mc.dt = 1e-4;
  mc.t_max = 50.0;
  mc.seed = 20260814;
  const McFunctionals est = mc_functionals(
      ProcessModel{bm}, f, TaxSchedule::none(), {0.0, 1.0, 0.0, 0.0}, mc);
  c.close_abs("walker exit", est.g.mean, g,
              std::max(3.0 * est.g.se, 1e-2));
}

// 3. At q = s = 0 the up-exit weight and the crossing weight partition the
//    paths: g + h = 1 within 1e-6 for every model/boundary pair (2e-4 for
//    the mean-reverting jump model, whose q -> 0 rates are extrapolated).
void c3_normalization(Checker& c) {
  struct NamedModel {
    std::string name;
    ProcessModel m;
    double tol;
  };
  struct NamedBoundary {
    std::string name;
    DrawdownBoundary f;
  };
  const std::vector<NamedModel> models = {
      {"drift", ProcessModel{LevyModel{0.8, 0.0, 0.0, 1.0}}, 1e-6},
      {"bm", ProcessModel{LevyModel{0.3, 1.0, 0.0, 1.0}}, 1e-6},
      {"cl", ProcessModel{LevyModel{1.5, 0.0, 1.0, 1.0}}, 1e-6},
      {"jd", ProcessModel{LevyModel{0.5, 1.0, 1.0, 2.0}}, 1e-6},
      {"diff-bm",
       ProcessModel{DiffusionModel{[](double) { return 0.2; },
                                   [](double) { return 1.0; }, "bm(0.2,1)"}},
       1e-6},
      {"diff-ou",
       ProcessModel{DiffusionModel{[](double x) { return 1.2 * (0.5 - x); },
                                   [](double) { return 0.8; }, "ou"}},
       1e-6},
      {"diff-cir",
       ProcessModel{DiffusionModel{
           [](double x) { return 1.5 * (1.0 - x); },
           [](double x) { return 0.7 * std::sqrt(std::max(x, 0.0)); },
           "cir"}},
       1e-6},
      {"mrj", ProcessModel{OUJumpModel{1.0, 0.0, 1.0, 1.0, 1.0}}, 2e-4},
  };
  const std::vector<NamedBoundary> boundaries = {
      {"ruin", DrawdownBoundary::ruin()},
      {"classic", DrawdownBoundary::classic(0.6)},
      {"proportional", DrawdownBoundary::proportional(0.4)},
      {"affine", DrawdownBoundary::affine(0.6, 0.1)},
      {"tabulated", DrawdownBoundary::tabulated({1.0, 2.0}, {0.5, 0.9})},
  };
  const double x = 1.0, K = 2.0;
  for (const auto& nm : models) {
    const ParamsFactory factory = make_params_factory(nm.m, {x, K});
    for (const auto& nb : boundaries) {
      // exit level 0 sits on the edge of the CIR state space (0, inf),
      // where the generator degenerates; the pair is outside the framework
      if (nm.name == "diff-cir" && nb.name == "ruin") continue;
      const ExitParams p = factory(nb.f, 0.0, 0.0);
      const double g = exit_transform(p, x, K).value;
      const double h = drawdown_law(p, x, K).value;
      c.close_abs("g + h (" + nm.name + ", " + nb.name + ")", g + h, 1.0,
                  nm.tol);
    }
  }
}

// 4. Affine boundaries collapse to a scale-ratio power
//    (W((1-xi)x+d) / W((1-xi)K+d))^{1/(1-xi)}; generic engine within 1e-8
//    relative over a 5x5 (xi, d) grid.
void c4_affine_closed_form(Checker& c) {
  const LevyModel jd{0.5, 1.0, 1.0, 2.0};
  const double q = 0.3, x = 1.0, K = 3.0;
  const ParamsFactory factory = make_params_factory(ProcessModel{jd}, {x, K});
  for (double xi : {0.1, 0.25, 0.4, 0.55, 0.7})
    for (double d : {0.2, 0.6, 1.0, 1.4, 1.8}) {
      const ExitParams p = factory(DrawdownBoundary::affine(xi, d), q, 0.0);
      const double g = exit_transform(p, x, K).value;
      const double ref =
          std::pow(scale_w(jd, q, (1.0 - xi) * x + d) /
                       scale_w(jd, q, (1.0 - xi) * K + d),
                   1.0 / (1.0 - xi));
      c.close_rel("affine(xi=" + num(xi) + ", d=" + num(d) + ")", g, ref,
                  1e-8);
    }
}

// 5. A constant tax rate adds the power 1/(1-gamma): taxed exit equals
//    ratio^{1/((1-xi)(1-gamma))} within 1e-6 relative for gamma in
//    {0.1..0.9}, and gamma = 0 reproduces the untaxed value within 1e-10.
void c5_tax_power_law(Checker& c) {
  const LevyModel jd{0.5, 1.0, 1.0, 2.0};
  const double xi = 0.3, d = 0.5, q = 0.3, x = 1.0, K = 3.0;
  TaxSetup st;
  st.model = ProcessModel{jd};
  st.f = DrawdownBoundary::affine(xi, d);
  st.x = x;
  const double ratio = scale_w(jd, q, (1.0 - xi) * x + d) /
                       scale_w(jd, q, (1.0 - xi) * K + d);
  for (int i = 1; i <= 9; ++i) {
    const double gamma = 0.1 * i;
    st.tax = TaxSchedule::constant(gamma);
    const double got = tax_exit(st, q, K).value;
    const double ref = std::pow(ratio, 1.0 / ((1.0 - xi) * (1.0 - gamma)));
    c.close_rel("gamma=" + num(gamma), got, ref, 1e-6);
  }
  st.tax = TaxSchedule::constant(0.0);
  const double untaxed =
      exit_transform(make_params(st.model, st.f, q, 0.0, {x, K}), x, K).value;
  c.close_abs("gamma=0 vs untaxed", tax_exit(st, q, K).value, untaxed, 1e-10);
}

// 6. Expected present value of the tax stream vs its scale-function
//    reduction (p = 1/(1-gamma)) within 1e-6 relative, and vs the walker
//    within max(3 SE, 1e-2).
void c6_epv_formulas(Checker& c) {
  TaxSetup st;
  st.model = ProcessModel{LevyModel{0.0, 1.0, 0.0, 1.0}};
  st.f = DrawdownBoundary::ruin();
  st.x = 1.0;
  const double gamma = 0.4, q = 0.3, K = 2.0, p = 1.0 / (1.0 - gamma);
  st.tax = TaxSchedule::constant(gamma);
  const LevyModel& lm = std::get<LevyModel>(st.model);

  const double until_ref =
      gamma * p *
      integrate_adaptive(
          [&](double g) {
            return std::pow(scale_w(lm, q, st.x) / scale_w(lm, q, g), p);
          },
          st.x, K, 1e-12)
          .value;
  const double upper_ref =
      gamma * p *
      integrate_adaptive(
          [&](double g) {
            return std::pow(scale_w(lm, q, st.x) / scale_w(lm, q, g), p) *
                   std::pow(scale_w(lm, 0.0, g) / scale_w(lm, 0.0, K), p);
          },
          st.x, K, 1e-12)
          .value;
  const double until = tax_epv(st, q, K, TaxEpvMode::UntilEither).value;
  const double upper = tax_epv(st, q, K, TaxEpvMode::OnUpperExit).value;
  c.close_rel("epv until either", until, until_ref, 1e-6);
  c.close_rel("epv on upper exit", upper, upper_ref, 1e-6);

  McConfig mc;
  mc.n_paths = 30000;
  mc.dt = 5e-4;
  mc.t_max = 60.0;
  mc.seed = 31337;
  const McFunctionals est =
      mc_functionals(st.model, st.f, st.tax, {st.x, K, q, 0.0}, mc);
  c.close_abs("walker epv until either", est.epv.mean, until,
              std::max(3.0 * est.epv.se, 1e-2));
  c.close_abs("walker epv on upper exit", est.epv_upper.mean, upper,
              std::max(3.0 * est.epv_upper.se, 1e-2));
}

// 7. Brownian motion with drift is served by both the closed-form scale
//    route and the two-sided ODE route: b, c agree within 1e-6 on a
//    50-point grid and the exit transforms within 1e-6.
void c7_cross_family(Checker& c) {
  const double mu = 0.4, q = 0.35, s = 0.6, x = 1.0, K = 3.0;
  const LevyModel lm{mu, 1.0, 0.0, 1.0};
  const DiffusionModel dm{[mu](double) { return mu; },
                          [](double) { return 1.0; }, "bm(0.4,1)"};
  const DrawdownBoundary f = DrawdownBoundary::classic(0.7);
  const ExitParams pl = make_params_factory(ProcessModel{lm}, {x, K})(f, q, s);
  const ExitParams pd = make_params_factory(ProcessModel{dm}, {x, K})(f, q, s);
  for (int i = 0; i < 50; ++i) {
    const double z = x + (K - x) * i / 49.0;
    c.close_abs("b at z=" + num(z), pd.b(z), pl.b(z),
                1e-6 * std::max(1.0, std::abs(pl.b(z))));
    c.close_abs("c at z=" + num(z), pd.c(z), pl.c(z),
                1e-6 * std::max(1.0, std::abs(pl.c(z))));
  }
  const double gl = exit_transform(pl, x, K).value;
  const double gd = exit_transform(pd, x, K).value;
  c.close_abs("exit transform", gd, gl, 1e-6);
}

// 8. For constant coefficients the two-point solutions are spanned by the
//    exponentials e^{ax} and e^{-bx} with a, b the roots of s^2/2 + mu s = q.
//    The pair combination vanishing at u is scale-free, so its ratios (and
//    the b/c ratios built from it) must match the exponential closed forms
//    within 1e-6 relative.
void c8_diffusion_exponentials(Checker& c) {
  const double mu = 1.0, q = 0.6;
  const DiffusionModel dm{[](double) { return 1.0; },
                          [](double) { return 1.0; }, "bm(1,1)"};
  const SLSolution sol = solve_phi(dm, q, {-1.0, 3.0});
  const double root = std::sqrt(mu * mu + 2.0 * q);
  const double a = -mu + root;  // increasing exponent
  const double b = mu + root;   // decreasing solution: e^{-b x}
  // closed-form pair combination vanishing at u, up to one overall scale
  const auto cf = [a, b](double u, double z) {
    return std::exp(a * u - b * z) - std::exp(a * z - b * u);
  };
  for (double u : {-0.8, -0.2, 0.6, 1.4}) {
    const double v = u + 1.3;
    for (double gap : {0.3, 0.9, 1.6}) {
      const double z = u + gap;
      const double eplus = std::exp(a * u - b * z);
      const double eminus = std::exp(a * z - b * u);
      const double den = eplus - eminus;
      const std::string at = " (u=" + num(u) + ", x=" + num(z) + ")";
      c.close_rel("two-sided ratio" + at,
                  sol.phi_big(u, z).phi / sol.phi_big(u, v).phi,
                  cf(u, z) / cf(u, v), 1e-6);
      c.close_rel("two-sided b" + at, sol.ratio_b(u, z),
                  (-b * eplus - a * eminus) / den, 1e-6);
      c.close_rel("two-sided c" + at, sol.ratio_c(u, z),
                  -(a + b) * std::exp((a - b) * z) / den, 1e-6);
    }
  }
}

// 9. Mean-reverting jump model: the assembled two-sided exit weights match
//    the walker within 3 SE at n = 1e5, and the two Fubini routes to the
//    jump convolution agree within 1e-8 relative.
void c9_oujump_vs_walker(Checker& c) {
  const OUJumpModel om{1.0, 0.0, 1.0, 1.0, 1.0};
  const double q = 0.5, s = 0.7, x = 0.0, u = -1.0, v = 1.0;
  const OUJumpKernel k(om, q, {-1.6, 1.6});
  for (double z : {-1.2, -0.3, 0.5, 1.2})
    c.close_rel("convolution at x=" + num(z), ou_jump_convolution(k, z),
                k.eval(z).c3, 1e-8);

  const OUFirstPassage fp = ou_first_passage(k, s, x, u, v);
  McConfig mc;
  mc.n_paths = 100000;
  mc.dt = 1e-3;
  mc.t_max = 30.0;
  mc.seed = 90210;
  // flat boundary at u turns the drawdown pair into the two-sided exit
  const DrawdownBoundary flat = DrawdownBoundary::tabulated({-0.5, 2.0}, {u, u});
  const McFunctionals est = mc_functionals(ProcessModel{om}, flat,
                                           TaxSchedule::none(), {x, v, q, s}, mc);
  c.close_abs("up-exit weight B", est.g.mean, fp.B, 3.0 * est.g.se);
  c.close_abs("crossing weight C", est.h.mean, fp.C, 3.0 * est.h.se);
}

// 10. Path identities (exit-index recomputation, boundary-freezing sandwich,
//     taxed/latent correspondence) hold with zero violations on 1e4 paths
//     per family.
void c10_pathwise(Checker& c) {
  McConfig mc;
  mc.n_paths = 10000;
  mc.dt = 2e-3;
  mc.t_max = 20.0;
  mc.seed = 777;
  struct Case {
    std::string name;
    ProcessModel m;
    TaxSchedule tax;
  };
  const std::vector<Case> cases = {
      {"bm", ProcessModel{LevyModel{0.3, 1.0, 0.0, 1.0}}, TaxSchedule::none()},
      {"cl", ProcessModel{LevyModel{1.5, 0.0, 1.0, 1.0}},
       TaxSchedule::constant(0.25)},
      {"jd", ProcessModel{LevyModel{0.5, 1.0, 1.0, 2.0}},
       TaxSchedule::constant(0.25)},
      {"diff-ou",
       ProcessModel{DiffusionModel{[](double x) { return 1.2 * (0.5 - x); },
                                   [](double) { return 0.8; }, "ou"}},
       TaxSchedule::none()},
      {"mrj", ProcessModel{OUJumpModel{1.0, 0.0, 1.0, 1.0, 1.0}},
       TaxSchedule::constant(0.2)},
  };
  const DrawdownBoundary f = DrawdownBoundary::classic(0.8);
  for (const auto& cs : cases) {
    const PathwiseReport r = check_pathwise(cs.m, f, cs.tax, 1.0, 2.0, mc);
    c.require(r.violations == 0,
              cs.name + ": " + num(double(r.violations)) + " violations (" +
                  r.first_issue + ")");
    c.require(r.paths > 0, cs.name + ": no paths resolved");
  }
}

// 11. Two runs of the shipped config with the same seed produce
//     byte-identical CSV output, and every comparison row in it passes.
void c11_determinism(Checker& c, const std::string& config_dir) {
  namespace fs = std::filesystem;
  const fs::path cfg_path = fs::path(config_dir) / "acceptance.json";
  std::ifstream in(cfg_path, std::ios::binary);
  c.require(bool(in), "cannot open " + cfg_path.string());
  if (!in) return;
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string cfg = buf.str();

  auto run_once = [&](const std::string& tag) {
    ReportOptions opt;
    opt.out_dir = (fs::temp_directory_path() / ("ddtax_accept_" + tag)).string();
    fs::remove_all(opt.out_dir);
    std::ostringstream log;
    const RunSummary sum = run_report(cfg, opt, log);
    std::ifstream csv(fs::path(opt.out_dir) / "report.csv", std::ios::binary);
    std::stringstream body;
    body << csv.rdbuf();
    return std::pair<RunSummary, std::string>{sum, body.str()};
  };
  const auto [sum_a, csv_a] = run_once("a");
  const auto [sum_b, csv_b] = run_once("b");
  c.require(sum_a.failures == 0,
            num(double(sum_a.failures)) + " comparison rows failed");
  c.require(!csv_a.empty(), "first run wrote no CSV");
  c.require(csv_a == csv_b, "same-seed runs differ byte-for-byte");
}

}  // namespace

int main(int argc, char** argv) {
  std::string config_dir = "configs";
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--config-dir") config_dir = argv[i + 1];

  int failed = 0;
  failed += run_criterion(1, "zero-boundary exit equals the scale ratio", 1.0,
                          c1_ruin_reduction);
  failed += run_criterion(2, "fixed-gap drawdown closed case e^{-1}", 120.0,
                          c2_classic_closed_case);
  failed += run_criterion(3, "g + h partitions the paths at q = s = 0", 300.0,
                          c3_normalization);
  failed += run_criterion(4, "affine boundary scale-ratio power", 0.0,
                          c4_affine_closed_form);
  failed += run_criterion(5, "constant tax adds a 1/(1-gamma) power", 0.0,
                          c5_tax_power_law);
  failed += run_criterion(6, "tax stream value vs reduction and walker", 0.0,
                          c6_epv_formulas);
  failed += run_criterion(7, "scale route vs ODE route for drifted BM", 0.0,
                          c7_cross_family);
  failed += run_criterion(8, "two-point solutions vs exponentials", 0.0,
                          c8_diffusion_exponentials);
  failed += run_criterion(9, "mean-reverting jump exits vs walker", 600.0,
                          c9_oujump_vs_walker);
  failed += run_criterion(10, "pathwise identities with zero violations",
                          300.0, c10_pathwise);
  failed +=
      run_criterion(11, "same-seed runs are byte-identical", 0.0,
                    [&](Checker& c) { c11_determinism(c, config_dir); });

  std::printf("%d of 11 criteria passed\n", 11 - failed);
  return failed == 0 ? 0 : 1;
}
