#include "ddtax/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace ddtax {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

bool finite(double v) { return std::isfinite(v); }

double interp_linear(const std::vector<double>& xs, const std::vector<double>& ys,
                     double x, const char* what) {
  if (x < xs.front() || x > xs.back()) {
    std::ostringstream os;
    os << what << ": level " << x << " outside tabulated range [" << xs.front()
       << ", " << xs.back() << "]";
    throw std::domain_error(os.str());
  }
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  std::size_t i = static_cast<std::size_t>(it - xs.begin());
  if (i == 0) return ys.front();
  --i;
  const double t = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + t * (ys[i + 1] - ys[i]);
}

}  // namespace

LevyFamily levy_family(const LevyModel& m) {
  if (m.sigma == 0.0 && m.lambda == 0.0) return LevyFamily::PureDrift;
  if (m.lambda == 0.0) return LevyFamily::Brownian;
  if (m.sigma == 0.0) return LevyFamily::CramerLundberg;
  return LevyFamily::JumpDiffusion;
}

std::string model_label(const ProcessModel& m) {
  if (const auto* lv = std::get_if<LevyModel>(&m)) {
    std::ostringstream os;
    switch (levy_family(*lv)) {
      case LevyFamily::PureDrift:
        os << "drift(mu=" << lv->mu << ")";
        break;
      case LevyFamily::Brownian:
        os << "bm(mu=" << lv->mu << ",sigma=" << lv->sigma << ")";
        break;
      case LevyFamily::CramerLundberg:
        os << "cl(mu=" << lv->mu << ",lambda=" << lv->lambda
           << ",eta=" << lv->eta << ")";
        break;
      case LevyFamily::JumpDiffusion:
        os << "levy(mu=" << lv->mu << ",sigma=" << lv->sigma
           << ",lambda=" << lv->lambda << ",eta=" << lv->eta << ")";
        break;
    }
    return os.str();
  }
  if (const auto* d = std::get_if<DiffusionModel>(&m)) return d->label;
  const auto& ou = std::get<OUJumpModel>(m);
  std::ostringstream os;
  os << "oujump(theta=" << ou.theta << ",mu=" << ou.mu << ",sigma=" << ou.sigma
     << ",lambda=" << ou.lambda << ",eta=" << ou.eta << ")";
  return os.str();
}

void validate_model(const ProcessModel& m) {
  if (const auto* lv = std::get_if<LevyModel>(&m)) {
    require(finite(lv->mu) && finite(lv->sigma) && finite(lv->lambda) &&
                finite(lv->eta),
            "levy model: parameters must be finite");
    require(lv->sigma >= 0.0, "levy model: sigma < 0");
    require(lv->lambda >= 0.0, "levy model: lambda < 0");
    require(lv->eta > 0.0, "levy model: eta must be > 0");
    require(lv->sigma > 0.0 || lv->lambda > 0.0 || lv->mu != 0.0,
            "levy model: degenerate (no motion)");
    if (lv->sigma == 0.0)
      require(lv->mu > 0.0,
              "levy model: sigma = 0 requires mu > 0 (upward motion must be "
              "creeping drift)");
    return;
  }
  if (const auto* d = std::get_if<DiffusionModel>(&m)) {
    require(static_cast<bool>(d->mu) && static_cast<bool>(d->sigma),
            "diffusion model: mu/sigma callbacks must be set");
    return;
  }
  const auto& ou = std::get<OUJumpModel>(m);
  require(finite(ou.theta) && finite(ou.mu) && finite(ou.sigma) &&
              finite(ou.lambda) && finite(ou.eta),
          "ou-jump model: parameters must be finite");
  require(ou.theta > 0.0, "ou-jump model: theta must be > 0");
  require(ou.sigma > 0.0, "ou-jump model: sigma must be > 0");
  require(ou.lambda >= 0.0, "ou-jump model: lambda < 0");
  require(ou.eta > 0.0, "ou-jump model: eta must be > 0");
}

DrawdownBoundary DrawdownBoundary::classic(double d) {
  DrawdownBoundary b;
  b.kind = BoundaryKind::Classic;
  b.xi = 1.0;
  b.d = d;
  if (!(d > 0.0)) throw std::invalid_argument("classic boundary: d must be > 0");
  return b;
}

DrawdownBoundary DrawdownBoundary::proportional(double xi) {
  DrawdownBoundary b;
  b.kind = BoundaryKind::Proportional;
  b.xi = xi;
  if (!(xi < 1.0))
    throw std::invalid_argument("proportional boundary: xi must be < 1");
  return b;
}

DrawdownBoundary DrawdownBoundary::affine(double xi, double d) {
  DrawdownBoundary b;
  b.kind = BoundaryKind::Affine;
  b.xi = xi;
  b.d = d;
  if (!(xi <= 1.0)) throw std::invalid_argument("affine boundary: xi must be <= 1");
  if (!(d >= 0.0)) throw std::invalid_argument("affine boundary: d must be >= 0");
  if (xi == 1.0 && d == 0.0)
    throw std::invalid_argument("affine boundary: xi = 1 requires d > 0");
  return b;
}

DrawdownBoundary DrawdownBoundary::tabulated(std::vector<double> m,
                                             std::vector<double> f) {
  DrawdownBoundary b;
  b.kind = BoundaryKind::Tabulated;
  if (m.size() != f.size() || m.size() < 2)
    throw std::invalid_argument("tabulated boundary: need >= 2 (m, f) pairs");
  for (std::size_t i = 1; i < m.size(); ++i)
    if (!(m[i] > m[i - 1]))
      throw std::invalid_argument("tabulated boundary: m grid must be ascending");
  b.grid_m = std::move(m);
  b.grid_f = std::move(f);
  return b;
}

BoundaryValue boundary_eval(const DrawdownBoundary& b, double m) {
  if (!std::isfinite(m)) throw std::domain_error("boundary_eval: m not finite");
  double f = 0.0;
  switch (b.kind) {
    case BoundaryKind::Ruin:
      if (!(m > 0.0))
        throw std::domain_error("boundary_eval: ruin boundary needs m > 0");
      f = 0.0;
      break;
    case BoundaryKind::Classic:
      f = m - b.d;
      break;
    case BoundaryKind::Proportional:
      if (!(m > 0.0))
        throw std::domain_error(
            "boundary_eval: proportional boundary needs m > 0");
      f = b.xi * m;
      break;
    case BoundaryKind::Affine:
      f = b.xi * m - b.d;
      if (!(f < m))
        throw std::domain_error("boundary_eval: affine boundary has f(m) >= m");
      break;
    case BoundaryKind::Tabulated:
      f = interp_linear(b.grid_m, b.grid_f, m, "boundary_eval");
      break;
  }
  return {f, m - f};
}

double boundary_floor(const DrawdownBoundary& b, double lo) {
  switch (b.kind) {
    case BoundaryKind::Ruin:
      return 0.0;
    case BoundaryKind::Proportional:
      return b.xi * std::max(lo, 0.0);
    case BoundaryKind::Tabulated:
      return boundary_eval(
                 b, std::clamp(lo, b.grid_m.front(), b.grid_m.back()))
          .f;
    default:
      return boundary_eval(b, lo).f;
  }
}

ValidationReport validate_boundary(const DrawdownBoundary& b, Interval iv) {
  ValidationReport rep;
  auto flag = [&rep](const std::string& what, double where) {
    rep.ok = false;
    rep.issues.push_back({what, where});
  };
  if (!(iv.hi > iv.lo)) {
    flag("validation interval is empty", iv.lo);
    return rep;
  }
  switch (b.kind) {
    case BoundaryKind::Ruin:
      if (iv.lo <= 0.0) flag("ruin boundary requires m > 0 on the interval", iv.lo);
      break;
    case BoundaryKind::Classic:
      if (!(b.d > 0.0)) flag("classic boundary needs d > 0", 0.0);
      break;
    case BoundaryKind::Proportional:
      if (!(b.xi < 1.0)) flag("proportional boundary needs xi < 1", 0.0);
      if (b.xi < 0.0) flag("boundary is decreasing (xi < 0)", 0.0);
      if (iv.lo <= 0.0)
        flag("proportional boundary requires m > 0 on the interval", iv.lo);
      break;
    case BoundaryKind::Affine: {
      if (b.xi < 0.0) flag("boundary is decreasing (xi < 0)", 0.0);
      if (b.xi > 1.0) flag("affine boundary needs xi <= 1", 0.0);
      // f(m) < m  <=>  (1 - xi) m + d > 0; linear, so endpoints suffice.
      const double glo = (1.0 - b.xi) * iv.lo + b.d;
      const double ghi = (1.0 - b.xi) * iv.hi + b.d;
      if (!(glo > 0.0)) flag("affine boundary has f(m) >= m", iv.lo);
      if (!(ghi > 0.0)) flag("affine boundary has f(m) >= m", iv.hi);
      break;
    }
    case BoundaryKind::Tabulated: {
      if (b.grid_m.front() > iv.lo || b.grid_m.back() < iv.hi)
        flag("tabulated boundary does not cover the interval", iv.lo);
      for (std::size_t i = 1; i < b.grid_m.size(); ++i)
        if (b.grid_f[i] < b.grid_f[i - 1])
          flag("tabulated boundary is decreasing between knots", b.grid_m[i]);
      // Piecewise linear vs identity: violations can only appear at knots.
      for (std::size_t i = 0; i < b.grid_m.size(); ++i) {
        const double m = b.grid_m[i];
        if (m >= iv.lo && m <= iv.hi && !(b.grid_f[i] < m))
          flag("tabulated boundary has f(m) >= m at a knot", m);
      }
      for (double end : {iv.lo, iv.hi}) {
        const double fv = interp_linear(b.grid_m, b.grid_f, end, "validate");
        if (!(fv < end)) flag("tabulated boundary has f(m) >= m", end);
      }
      break;
    }
  }
  return rep;
}

std::string boundary_label(const DrawdownBoundary& b) {
  std::ostringstream os;
  switch (b.kind) {
    case BoundaryKind::Ruin:
      os << "ruin";
      break;
    case BoundaryKind::Classic:
      os << "classic(d=" << b.d << ")";
      break;
    case BoundaryKind::Proportional:
      os << "proportional(xi=" << b.xi << ")";
      break;
    case BoundaryKind::Affine:
      os << "affine(xi=" << b.xi << ",d=" << b.d << ")";
      break;
    case BoundaryKind::Tabulated:
      os << "tabulated(" << b.grid_m.size() << " knots)";
      break;
  }
  return os.str();
}

TaxSchedule TaxSchedule::constant(double gamma) {
  TaxSchedule s;
  s.kind = TaxKind::Constant;
  s.rate = gamma;
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw std::invalid_argument("tax schedule: rate must lie in [0, 1)");
  return s;
}

TaxSchedule TaxSchedule::piecewise_constant(std::vector<double> breaks,
                                            std::vector<double> values) {
  TaxSchedule s;
  s.kind = TaxKind::PiecewiseConstant;
  if (values.size() != breaks.size() + 1)
    throw std::invalid_argument(
        "tax schedule: need one more value than breaks");
  for (std::size_t i = 1; i < breaks.size(); ++i)
    if (!(breaks[i] > breaks[i - 1]))
      throw std::invalid_argument("tax schedule: breaks must be ascending");
  for (double v : values)
    if (!(v >= 0.0 && v < 1.0))
      throw std::invalid_argument("tax schedule: rates must lie in [0, 1)");
  s.breaks = std::move(breaks);
  s.values = std::move(values);
  return s;
}

TaxSchedule TaxSchedule::tabulated(std::vector<double> m,
                                   std::vector<double> rate) {
  TaxSchedule s;
  s.kind = TaxKind::Tabulated;
  if (m.size() != rate.size() || m.size() < 2)
    throw std::invalid_argument("tax schedule: need >= 2 (m, rate) pairs");
  for (std::size_t i = 1; i < m.size(); ++i)
    if (!(m[i] > m[i - 1]))
      throw std::invalid_argument("tax schedule: m grid must be ascending");
  for (double v : rate)
    if (!(v >= 0.0 && v < 1.0))
      throw std::invalid_argument("tax schedule: rates must lie in [0, 1)");
  s.grid_m = std::move(m);
  s.grid_rate = std::move(rate);
  return s;
}

double tax_rate_at(const TaxSchedule& s, double m) {
  switch (s.kind) {
    case TaxKind::None:
      return 0.0;
    case TaxKind::Constant:
      return s.rate;
    case TaxKind::PiecewiseConstant: {
      auto it = std::upper_bound(s.breaks.begin(), s.breaks.end(), m);
      return s.values[static_cast<std::size_t>(it - s.breaks.begin())];
    }
    case TaxKind::Tabulated:
      return interp_linear(s.grid_m, s.grid_rate, m, "tax_rate_at");
  }
  return 0.0;
}

ValidationReport validate_tax(const TaxSchedule& s, Interval iv) {
  ValidationReport rep;
  auto flag = [&rep](const std::string& what, double where) {
    rep.ok = false;
    rep.issues.push_back({what, where});
  };
  switch (s.kind) {
    case TaxKind::None:
    case TaxKind::Constant:
      break;  // constructor enforced the range
    case TaxKind::PiecewiseConstant:
      for (std::size_t i = 1; i < s.values.size(); ++i)
        if (s.values[i] < s.values[i - 1])
          flag("tax schedule decreases across a break", s.breaks[i - 1]);
      break;
    case TaxKind::Tabulated:
      if (s.grid_m.front() > iv.lo || s.grid_m.back() < iv.hi)
        flag("tabulated tax schedule does not cover the interval", iv.lo);
      for (std::size_t i = 1; i < s.grid_rate.size(); ++i)
        if (s.grid_rate[i] < s.grid_rate[i - 1])
          flag("tax schedule decreases between knots", s.grid_m[i]);
      break;
  }
  return rep;
}

std::string tax_label(const TaxSchedule& s) {
  std::ostringstream os;
  switch (s.kind) {
    case TaxKind::None:
      return "none";
    case TaxKind::Constant:
      os << "constant(" << s.rate << ")";
      break;
    case TaxKind::PiecewiseConstant:
      os << "piecewise(" << s.values.size() << " rates)";
      break;
    case TaxKind::Tabulated:
      os << "tabulated(" << s.grid_m.size() << " knots)";
      break;
  }
  return os.str();
}

void validate_query(const FunctionalQuery& f) {
  if (!std::isfinite(f.x)) throw std::invalid_argument("query: x not finite");
  if (std::isnan(f.K)) throw std::invalid_argument("query: K is NaN");
  if (!(f.x < f.K)) throw std::invalid_argument("query: requires x < K");
  if (!(f.q >= 0.0) || !std::isfinite(f.q))
    throw std::invalid_argument("query: q must be >= 0 and finite");
  if (!(f.s >= 0.0) || !std::isfinite(f.s))
    throw std::invalid_argument("query: s must be >= 0 and finite");
}

}  // namespace ddtax
