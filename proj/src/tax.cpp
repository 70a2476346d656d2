#include "ddtax/tax.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <utility>

#include "ddtax/quad.hpp"

namespace ddtax {

TaxContext::TaxContext(TaxSchedule schedule, double x)
    : schedule_(std::move(schedule)), x_(x) {
  if (!std::isfinite(x)) throw std::invalid_argument("tax context: x not finite");
  knots_.push_back(x);
  auto add = [&](const std::vector<double>& src) {
    for (double k : src)
      if (k > x) knots_.push_back(k);
  };
  if (schedule_.kind == TaxKind::PiecewiseConstant) add(schedule_.breaks);
  if (schedule_.kind == TaxKind::Tabulated) add(schedule_.grid_m);
  std::sort(knots_.begin(), knots_.end());
  knots_.erase(std::unique(knots_.begin(), knots_.end()), knots_.end());
  prefix_.resize(knots_.size());
  prefix_[0] = x;
  for (std::size_t i = 1; i < knots_.size(); ++i)
    prefix_[i] = prefix_[i - 1] + segment_integral(knots_[i - 1], knots_[i]);
}

double TaxContext::segment_integral(double a, double b) const {
  // Within one segment the rate is constant or linear, so the midpoint and
  // trapezoid rules below are exact, not approximations.
  switch (schedule_.kind) {
    case TaxKind::None:
      return b - a;
    case TaxKind::Constant:
      return (b - a) * (1.0 - schedule_.rate);
    case TaxKind::PiecewiseConstant:
      return (b - a) * (1.0 - rate(0.5 * (a + b)));
    case TaxKind::Tabulated:
      return (b - a) * (1.0 - 0.5 * (rate(a) + rate(b)));
  }
  return b - a;
}

double TaxContext::gbar(double m) const {
  if (!(m >= x_ - 1e-12 * (1.0 + std::abs(x_)))) {
    std::ostringstream os;
    os << "tax context: latent maximum " << m << " below the start " << x_;
    throw std::domain_error(os.str());
  }
  if (m <= knots_.front()) return x_;
  auto it = std::upper_bound(knots_.begin(), knots_.end(), m);
  const std::size_t i = static_cast<std::size_t>(it - knots_.begin()) - 1;
  return prefix_[i] + segment_integral(knots_[i], m);
}

double TaxContext::gbar_inv(double level) const {
  if (!(level >= x_ - 1e-12 * (1.0 + std::abs(x_)))) {
    std::ostringstream os;
    os << "tax context: taxed level " << level << " below the start " << x_;
    throw std::domain_error(os.str());
  }
  if (level <= x_) return x_;
  auto it = std::upper_bound(prefix_.begin(), prefix_.end(), level);
  const std::size_t i = static_cast<std::size_t>(it - prefix_.begin()) - 1;
  const double a = knots_[i];
  const double t = level - prefix_[i];
  const double ga = rate(a);
  double slope = 0.0;
  if (schedule_.kind == TaxKind::Tabulated) {
    if (i + 1 >= knots_.size()) {
      std::ostringstream os;
      os << "tax context: taxed level " << level
         << " requires latent maxima beyond the tabulated schedule";
      throw std::domain_error(os.str());
    }
    const double h = knots_[i + 1] - a;
    slope = (rate(knots_[i + 1]) - ga) / h;
  } else if (schedule_.kind == TaxKind::PiecewiseConstant && i + 1 < knots_.size()) {
    // constant within the segment; evaluate away from the break
    const double gmid = rate(0.5 * (a + knots_[i + 1]));
    return a + t / (1.0 - gmid);
  }
  const double B = 1.0 - ga;
  if (slope == 0.0) return a + t / B;
  // solve h B - slope h^2 / 2 = t for the in-segment offset h
  const double disc = std::max(0.0, B * B - 2.0 * slope * t);
  return a + 2.0 * t / (B + std::sqrt(disc));
}

namespace {

void refine_cell(const std::function<double(double)>& fstar, double a,
                 double fa, double b, double fb, int depth,
                 std::vector<std::pair<double, double>>& out) {
  const double mid = 0.5 * (a + b);
  const double fm = fstar(mid);
  const double lin = 0.5 * (fa + fb);
  if (depth <= 0 || std::abs(fm - lin) <= 1e-10 * (1.0 + std::abs(fm))) {
    out.emplace_back(b, fb);
    return;
  }
  refine_cell(fstar, a, fa, mid, fm, depth - 1, out);
  refine_cell(fstar, mid, fm, b, fb, depth - 1, out);
}

}  // namespace

DrawdownBoundary latent_boundary(const TaxContext& ctx,
                                 const DrawdownBoundary& f, double m_hi) {
  // A classic gap boundary commutes with taxation exactly, and with no tax
  // the latent process is the taxed process.
  if (f.kind == BoundaryKind::Classic || ctx.schedule().kind == TaxKind::None)
    return f;
  const double x = ctx.x();
  if (!(m_hi > x))
    throw std::invalid_argument("latent_boundary: empty latent range");

  auto fstar = [&](double m) {
    const double g = ctx.gbar(m);
    return boundary_eval(f, g).f + (m - g);
  };

  std::vector<double> seed{x, m_hi};
  for (double k : ctx.knots())
    if (k > x && k < m_hi) seed.push_back(k);
  if (f.kind == BoundaryKind::Tabulated) {
    const double g_hi = ctx.gbar(m_hi);
    for (double u : f.grid_m)
      if (u > x && u < g_hi) seed.push_back(ctx.gbar_inv(u));
  }
  std::sort(seed.begin(), seed.end());
  const double scale = 1.0 + std::abs(x) + std::abs(m_hi);
  seed.erase(std::unique(seed.begin(), seed.end(),
                         [&](double a, double b) {
                           return std::abs(a - b) < 1e-12 * scale;
                         }),
             seed.end());

  std::vector<std::pair<double, double>> pts{{seed.front(), fstar(seed.front())}};
  for (std::size_t i = 1; i < seed.size(); ++i)
    refine_cell(fstar, pts.back().first, pts.back().second, seed[i],
                fstar(seed[i]), 30, pts);
  std::vector<double> ms, fs;
  ms.reserve(pts.size());
  fs.reserve(pts.size());
  for (auto& [m, fv] : pts) {
    ms.push_back(m);
    fs.push_back(fv);
  }
  return DrawdownBoundary::tabulated(std::move(ms), std::move(fs));
}

namespace {

struct TaxPlan {
  TaxContext ctx;
  double Kp;                // latent upper level gbar^{-1}(K)
  DrawdownBoundary fstar;
  ParamsFactory factory;
};

TaxPlan plan(const TaxSetup& st, double q, double K) {
  if (!std::isfinite(st.x)) throw std::invalid_argument("tax: x not finite");
  if (!std::isfinite(K) || !(K > st.x))
    throw std::invalid_argument("tax: requires finite K > x");
  if (!(q >= 0.0)) throw std::invalid_argument("tax: q must be >= 0");
  TaxContext ctx(st.tax, st.x);
  const double Kp = ctx.gbar_inv(K);
  const double pad = 1e-6 * (1.0 + std::abs(Kp));
  DrawdownBoundary fstar = latent_boundary(ctx, st.f, Kp + pad);
  ParamsFactory factory =
      make_params_factory(st.model, {st.x, Kp + pad}, st.factory);
  return {std::move(ctx), Kp, std::move(fstar), std::move(factory)};
}

}  // namespace

TaxValue tax_exit(const TaxSetup& st, double q, double K) {
  TaxPlan pl = plan(st, q, K);
  const ExitParams p = pl.factory(pl.fstar, q, 0.0);
  const EngineResult r = exit_transform(p, st.x, pl.Kp, st.engine);
  return {r.value, r.quad_error, r.extrapolated, pl.Kp};
}

TaxValue tax_drawdown_law(const TaxSetup& st, double q, double s, double K) {
  if (!(s >= 0.0)) throw std::invalid_argument("tax: s must be >= 0");
  TaxPlan pl = plan(st, q, K);
  const ExitParams p = pl.factory(pl.fstar, q, s);
  const EngineResult r = drawdown_law(p, st.x, pl.Kp, st.engine);
  return {r.value, r.quad_error, r.extrapolated, pl.Kp};
}

TaxValue tax_epv(const TaxSetup& st, double q, double K, TaxEpvMode mode) {
  TaxPlan pl = plan(st, q, K);
  const ExitParams pq = pl.factory(pl.fstar, q, 0.0);
  const double x = st.x;
  CumulativeIntegral Iq(pq.b, x, pl.Kp, st.engine.abs_tol);

  bool extrapolated = pq.extrapolated;
  std::function<double(double)> weight;
  CumulativeIntegral* I0p = nullptr;
  std::unique_ptr<CumulativeIntegral> I0;
  double T0 = 0.0;
  if (mode == TaxEpvMode::OnUpperExit) {
    const ExitParams p0 = pl.factory(pl.fstar, 0.0, 0.0);
    extrapolated = extrapolated || p0.extrapolated;
    I0 = std::make_unique<CumulativeIntegral>(p0.b, x, pl.Kp,
                                              st.engine.abs_tol);
    T0 = I0->total();
    I0p = I0.get();
  }
  auto integrand = [&](double y) {
    double e = Iq.eval(y);
    if (I0p) e += T0 - I0p->eval(y);
    if (-e > st.engine.exp_cap)
      throw std::range_error("tax_epv: hazard integral went negative");
    return pl.ctx.rate(y) * std::exp(-e);
  };

  // Integrate segment-wise between rate kinks (the integrand may jump there).
  std::vector<double> cuts{x};
  for (double k : pl.ctx.knots())
    if (k > x && k < pl.Kp) cuts.push_back(k);
  cuts.push_back(pl.Kp);
  CompensatedSum acc;
  double err = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    const QuadResult qr =
        integrate_adaptive(integrand, cuts[i - 1], cuts[i], st.engine.abs_tol);
    acc.add(qr.value);
    err += qr.error;
  }
  return {acc.value(), err, extrapolated, pl.Kp};
}

}  // namespace ddtax
