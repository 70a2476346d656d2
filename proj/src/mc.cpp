#include "ddtax/mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <variant>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "ddtax/quad.hpp"
#include "ddtax/rng.hpp"
#include "ddtax/tax.hpp"

namespace ddtax {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct StepOut {
  double t2 = 0.0;     // node time
  double x_pre = 0.0;  // value just before any jump at the node
  double x2 = 0.0;     // value at the node
  double var = 0.0;    // diffusive variance accumulated over the step
  bool jump = false;
};

struct LevyStepper {
  double mu, sigma, lambda, eta;
  double next_jump = kInf;

  explicit LevyStepper(const LevyModel& m)
      : mu(m.mu), sigma(m.sigma), lambda(m.lambda), eta(m.eta) {}
  void init(PathRng& rng) {
    if (lambda > 0.0) next_jump = rng.next_exponential(lambda);
  }
  StepOut advance(PathRng& rng, double t1, double x1, double dt) {
    StepOut s;
    s.t2 = t1 + dt;
    if (next_jump <= s.t2) {
      s.t2 = next_jump;
      s.jump = true;
    }
    const double h = s.t2 - t1;
    s.x_pre = x1 + mu * h;
    if (sigma > 0.0) {
      s.x_pre += sigma * std::sqrt(h) * rng.next_normal();
      s.var = sigma * sigma * h;
    }
    s.x2 = s.x_pre;
    if (s.jump) {
      s.x2 -= rng.next_exponential(eta);
      next_jump += rng.next_exponential(lambda);
    }
    return s;
  }
};

struct OUStepper {
  double theta, mu, sigma, lambda, eta;
  double next_jump = kInf;

  explicit OUStepper(const OUJumpModel& m)
      : theta(m.theta), mu(m.mu), sigma(m.sigma), lambda(m.lambda), eta(m.eta) {}
  void init(PathRng& rng) {
    if (lambda > 0.0) next_jump = rng.next_exponential(lambda);
  }
  StepOut advance(PathRng& rng, double t1, double x1, double dt) {
    StepOut s;
    s.t2 = t1 + dt;
    if (next_jump <= s.t2) {
      s.t2 = next_jump;
      s.jump = true;
    }
    const double h = s.t2 - t1;
    const double decay = std::exp(-theta * h);
    s.var = sigma * sigma * (1.0 - decay * decay) / (2.0 * theta);
    s.x_pre = mu + (x1 - mu) * decay + std::sqrt(s.var) * rng.next_normal();
    s.x2 = s.x_pre;
    if (s.jump) {
      s.x2 -= rng.next_exponential(eta);
      next_jump += rng.next_exponential(lambda);
    }
    return s;
  }
};

struct DiffStepper {
  const DiffusionModel* m;

  explicit DiffStepper(const DiffusionModel& dm) : m(&dm) {}
  void init(PathRng&) {}
  StepOut advance(PathRng& rng, double t1, double x1, double dt) {
    StepOut s;
    s.t2 = t1 + dt;
    const double sig = m->sigma(x1);
    s.var = sig * sig * dt;
    s.x_pre = x1 + m->mu(x1) * dt + sig * std::sqrt(dt) * rng.next_normal();
    s.x2 = s.x_pre;
    return s;
  }
};

struct PathOutcome {
  double g = 0.0;
  double h = 0.0;
  double epv = 0.0;
  double epv_upper = 0.0;
  double leftover = 0.0;
};

struct WalkSpec {
  double x = 0.0;
  double Ku = 0.0;  // latent upper target
  double q = 0.0;
  double s = 0.0;
  double dt = 1e-4;
  double t_max = 50.0;
  const std::function<double(double)>* barrier = nullptr;  // latent boundary
  const TaxContext* tax = nullptr;  // non-null when the tax stream is scored
};

template <class Stepper>
PathOutcome walk(Stepper st, PathRng& rng, const WalkSpec& w) {
  PathOutcome o;
  st.init(rng);
  double t = 0.0, X = w.x, M = w.x, wA = 1.0;
  double ell = (*w.barrier)(M);
  double S_upper = 0.0;  // undiscounted-by-weight accumulated tax stream
  while (t < w.t_max) {
    const StepOut sp = st.advance(rng, t, X, std::min(w.dt, w.t_max - t));
    // Upper exit rides the continuous part (the process is upward skip-free).
    if (sp.x_pre >= w.Ku) {
      const double frac = (w.Ku - X) / (sp.x_pre - X);
      const double tstar = t + frac * (sp.t2 - t);
      if (w.tax && w.Ku > M) {
        const double inc = w.tax->paid(w.Ku) - w.tax->paid(M);
        const double dsc = std::exp(-w.q * 0.5 * (t + tstar));
        o.epv += wA * dsc * inc;
        S_upper += dsc * inc;
      }
      o.g += wA * std::exp(-w.q * tstar);
      o.epv_upper += wA * S_upper;
      return o;
    }
    // Unseen intra-step touch of the upper target: upward passage rides the
    // continuous part, so the Brownian-bridge touch weight against the fixed
    // level Ku splits off the exiting fraction of the path weight.
    if (sp.var > 0.0) {
      const double eu = -2.0 * (w.Ku - X) * (w.Ku - sp.x_pre) / sp.var;
      if (eu > -40.0) {
        const double pu = std::exp(eu);
        const double dsc = std::exp(-w.q * 0.5 * (t + sp.t2));
        double S_exit = S_upper;
        if (w.tax && w.Ku > M) {
          const double inc = w.tax->paid(w.Ku) - w.tax->paid(M);
          o.epv += wA * pu * dsc * inc;
          S_exit += dsc * inc;
        }
        o.g += wA * pu * dsc;
        o.epv_upper += wA * pu * S_exit;
        wA *= 1.0 - pu;
      }
    }
    const double M2 = std::max(M, sp.x_pre);
    const double ell2 = (M2 == M) ? ell : (*w.barrier)(M2);
    if (w.tax && M2 > M) {
      const double inc = w.tax->paid(M2) - w.tax->paid(M);
      const double dsc = std::exp(-w.q * 0.5 * (t + sp.t2));
      o.epv += wA * dsc * inc;
      S_upper += dsc * inc;
    }
    if (sp.x_pre < ell2) {
      // Continuous crossing strictly inside the step: zero deficit.
      const double drop = (X - ell2) - (sp.x_pre - ell2);
      const double frac =
          (drop > 0.0) ? std::max(0.0, (X - ell2) / drop) : 0.0;
      const double tstar = t + frac * (sp.t2 - t);
      o.h += wA * std::exp(-w.q * tstar);
      return o;
    }
    if (sp.var > 0.0) {
      const double gap1 = std::max(X - ell2, 0.0);
      const double e = -2.0 * gap1 * (sp.x_pre - ell2) / sp.var;
      if (e > -40.0) {
        const double pc = std::min(1.0, std::exp(e));
        o.h += wA * pc * std::exp(-w.q * 0.5 * (t + sp.t2));
        wA *= 1.0 - pc;
      }
    }
    if (sp.jump && sp.x2 < ell2) {
      const double Y = ell2 - sp.x2;
      o.h += wA * std::exp(-w.q * sp.t2 - w.s * Y);
      return o;
    }
    t = sp.t2;
    X = sp.x2;
    M = M2;
    ell = ell2;
    if (wA < 1e-14) return o;
  }
  o.leftover = wA * std::exp(-w.q * w.t_max);
  return o;
}

template <class Stepper, class Model>
void run_paths(const Model& m, const WalkSpec& w, const McConfig& cfg,
               std::vector<PathOutcome>& out) {
  const std::int64_t n = static_cast<std::int64_t>(out.size());
  if (cfg.parallel) {
#ifdef _OPENMP
    const int nt = cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(static) num_threads(nt)
    for (std::int64_t i = 0; i < n; ++i) {
      PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
      out[static_cast<std::size_t>(i)] = walk(Stepper(m), rng, w);
    }
    return;
#endif
  }
  for (std::int64_t i = 0; i < n; ++i) {
    PathRng rng(cfg.seed, static_cast<std::uint64_t>(i));
    out[static_cast<std::size_t>(i)] = walk(Stepper(m), rng, w);
  }
}

McEstimate reduce(const std::vector<PathOutcome>& v, double PathOutcome::*fld) {
  CompensatedSum sum, sum2;
  for (const PathOutcome& o : v) {
    const double x = o.*fld;
    sum.add(x);
    sum2.add(x * x);
  }
  const double n = static_cast<double>(v.size());
  McEstimate e;
  e.mean = sum.value() / n;
  if (v.size() > 1) {
    const double var =
        std::max(0.0, (sum2.value() - n * e.mean * e.mean) / (n - 1.0));
    e.se = std::sqrt(var / n);
  }
  return e;
}

}  // namespace

McFunctionals mc_functionals(const ProcessModel& m, const DrawdownBoundary& f,
                             const TaxSchedule& tax, const FunctionalQuery& fq,
                             const McConfig& cfg) {
  validate_model(m);
  validate_query(fq);
  if (!std::isfinite(fq.K))
    throw std::invalid_argument("mc_functionals: K must be finite");
  if (!(cfg.dt > 0.0) || !(cfg.t_max > 0.0) || cfg.n_paths == 0)
    throw std::invalid_argument("mc_functionals: bad simulation parameters");

  std::optional<TaxContext> ctx;
  double Ku = fq.K;
  if (tax.kind != TaxKind::None) {
    ctx.emplace(tax, fq.x);
    Ku = ctx->gbar_inv(fq.K);
  }
  const std::function<double(double)> barrier = [&f, &ctx](double mx) {
    if (!ctx) return boundary_eval(f, mx).f;
    const double g = ctx->gbar(mx);
    return boundary_eval(f, g).f + (mx - g);
  };

  WalkSpec w;
  w.x = fq.x;
  w.Ku = Ku;
  w.q = fq.q;
  w.s = fq.s;
  w.dt = cfg.dt;
  w.t_max = cfg.t_max;
  w.barrier = &barrier;
  w.tax = ctx ? &*ctx : nullptr;

  std::vector<PathOutcome> out(cfg.n_paths);
  if (const auto* lm = std::get_if<LevyModel>(&m)) {
    run_paths<LevyStepper>(*lm, w, cfg, out);
  } else if (const auto* dm = std::get_if<DiffusionModel>(&m)) {
    run_paths<DiffStepper>(*dm, w, cfg, out);
  } else {
    run_paths<OUStepper>(std::get<OUJumpModel>(m), w, cfg, out);
  }

  McFunctionals r;
  r.n = cfg.n_paths;
  r.g = reduce(out, &PathOutcome::g);
  r.h = reduce(out, &PathOutcome::h);
  r.epv = reduce(out, &PathOutcome::epv);
  r.epv_upper = reduce(out, &PathOutcome::epv_upper);
  CompensatedSum left;
  for (const PathOutcome& o : out) left.add(o.leftover);
  r.unresolved = left.value() / static_cast<double>(cfg.n_paths);
  return r;
}

// ---------------------------------------------------------------------------
// Node-exact pathwise identities.

namespace {

constexpr std::size_t kNone = static_cast<std::size_t>(-1);

struct NodeScan {
  // first-passage node indices (kNone when not reached)
  std::size_t up = kNone;          // M_i >= x + eps
  std::size_t moving = kNone;      // X_i < f(M_i)
  std::size_t frozen_lo = kNone;   // X_i < f(x)
  std::size_t frozen_hi = kNone;   // X_i < f(x + eps)
  std::size_t tax_up = kNone;      // gbar(M_i) >= gbar(x + eps)
  std::size_t taxed_dd = kNone;    // U_i < f(gbar(M_i))
  std::size_t latent_dd = kNone;   // X_i < fstar(M_i), fstar exact
  double tie_gap = kInf;     // witness gap where taxed/latent drawdowns split
  double up_tie = kInf;      // witness gap where the upper passages split
  bool resolved = false;
  std::size_t nodes = 0;
};

template <class Stepper, class Model>
NodeScan scan_path(const Model& m, double x, double eps, double f_lo,
                   double f_hi, const DrawdownBoundary& f,
                   const TaxContext* ctx, const McConfig& cfg,
                   std::uint64_t path) {
  PathRng rng(cfg.seed, path);
  Stepper st(m);
  st.init(rng);
  NodeScan ns;
  double t = 0.0, X = x, M = x;
  const double Geps = ctx ? ctx->gbar(x + eps) : 0.0;
  ns.nodes = 0;
  for (std::size_t i = 1; t < cfg.t_max; ++i) {
    const StepOut sp = st.advance(rng, t, X, std::min(cfg.dt, cfg.t_max - t));
    t = sp.t2;
    X = sp.x2;
    M = std::max(M, sp.x_pre);
    ns.nodes = i;
    if (ns.up == kNone && M >= x + eps) ns.up = i;
    if (ns.moving == kNone && X < boundary_eval(f, M).f) ns.moving = i;
    if (ns.frozen_lo == kNone && X < f_lo) ns.frozen_lo = i;
    if (ns.frozen_hi == kNone && X < f_hi) ns.frozen_hi = i;
    if (ctx) {
      const double g = ctx->gbar(M);
      const double U = X - ctx->paid(M);
      if (ns.tax_up == kNone && g >= Geps) ns.tax_up = i;
      if ((ns.tax_up == kNone) != (ns.up == kNone))
        ns.up_tie = std::min(ns.up_tie, std::abs(g - Geps));
      if (ns.taxed_dd == kNone && U < boundary_eval(f, g).f) ns.taxed_dd = i;
      const double fstar = boundary_eval(f, g).f + (M - g);
      if (ns.latent_dd == kNone && X < fstar) ns.latent_dd = i;
      if ((ns.taxed_dd == kNone) != (ns.latent_dd == kNone))
        ns.tie_gap = std::min(ns.tie_gap, std::abs(X - fstar));
    }
    const bool lower_done = ns.frozen_lo != kNone && ns.moving != kNone &&
                            ns.frozen_hi != kNone &&
                            (!ctx || (ns.taxed_dd != kNone && ns.latent_dd != kNone));
    if (ns.up != kNone || lower_done) {
      ns.resolved = true;
      break;
    }
  }
  return ns;
}

std::size_t capped(std::size_t v, std::size_t cap) { return std::min(v, cap); }

}  // namespace

PathwiseReport check_pathwise(const ProcessModel& m, const DrawdownBoundary& f,
                              const TaxSchedule& tax, double x, double K,
                              const McConfig& cfg) {
  validate_model(m);
  if (!(K > x)) throw std::invalid_argument("check_pathwise: needs K > x");
  const double eps = 0.5 * (K - x);
  const double f_lo = boundary_eval(f, x).f;
  const double f_hi = boundary_eval(f, x + eps).f;
  std::optional<TaxContext> ctx;
  if (tax.kind != TaxKind::None) ctx.emplace(tax, x);

  PathwiseReport rep;
  auto issue = [&](std::uint64_t path, const std::string& what) {
    ++rep.violations;
    if (rep.first_issue.empty()) {
      std::ostringstream os;
      os << "path " << path << ": " << what;
      rep.first_issue = os.str();
    }
  };

  for (std::uint64_t p = 0; p < cfg.n_paths; ++p) {
    NodeScan ns;
    if (const auto* lm = std::get_if<LevyModel>(&m)) {
      ns = scan_path<LevyStepper>(*lm, x, eps, f_lo, f_hi, f,
                                  ctx ? &*ctx : nullptr, cfg, p);
    } else if (const auto* dm = std::get_if<DiffusionModel>(&m)) {
      ns = scan_path<DiffStepper>(*dm, x, eps, f_lo, f_hi, f,
                                  ctx ? &*ctx : nullptr, cfg, p);
    } else {
      ns = scan_path<OUStepper>(std::get<OUJumpModel>(m), x, eps, f_lo, f_hi,
                                f, ctx ? &*ctx : nullptr, cfg, p);
    }
    if (!ns.resolved) {
      ++rep.unresolved;
      continue;
    }
    ++rep.paths;
    // Boundary-freezing sandwich, all times capped by the max's first climb
    // past x + eps: higher frozen barrier crosses first, lower one last.
    const std::size_t cap = ns.up == kNone ? ns.nodes + 1 : ns.up;
    const std::size_t a = capped(ns.frozen_hi, cap);
    const std::size_t b = capped(ns.moving, cap);
    const std::size_t c = capped(ns.frozen_lo, cap);
    if (!(a <= b && b <= c))
      issue(p, "frozen-boundary sandwich out of order");
    if (ctx) {
      // Taxed upper passage == latent passage of the exact latent threshold
      // (only a floating-point tie in gbar may split them).
      const double scale_up = 1.0 + std::abs(x) + std::abs(K);
      if (ns.tax_up != ns.up && !(ns.up_tie <= 1e-12 * scale_up))
        issue(p, "taxed and latent upper passages disagree");
      // Taxed drawdown == latent drawdown under the exact pullback, with a
      // 1-ulp tie allowance on the crossing inequality.
      if (ns.taxed_dd != ns.latent_dd) {
        const double scale = 1.0 + std::abs(x) + std::abs(K);
        const bool near_tie = ns.tie_gap <= 1e-12 * scale;
        const bool off_by_one =
            ns.taxed_dd != kNone && ns.latent_dd != kNone &&
            (ns.taxed_dd > ns.latent_dd ? ns.taxed_dd - ns.latent_dd
                                        : ns.latent_dd - ns.taxed_dd) <= 1;
        if (!(near_tie || off_by_one))
          issue(p, "taxed and latent drawdown passages disagree");
      }
    }
  }
  return rep;
}

}  // namespace ddtax
