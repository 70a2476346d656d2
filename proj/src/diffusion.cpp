#include "ddtax/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace ddtax {

namespace {

struct State {
  double l;
  double r;
};

// Dormand-Prince 5(4) pair for the log-space system l' = r, r' = rhs(x, r).
template <typename Rhs>
State dp45_step(const Rhs& rhs, double x, const State& y, double h,
                double& err) {
  auto f = [&rhs](double xx, const State& s) -> State {
    return {s.r, rhs(xx, s.r)};
  };
  const State k1 = f(x, y);
  auto adv = [&](double c1, double c2, double c3, double c4, double c5,
                 double c6, const State& K1, const State& K2, const State& K3,
                 const State& K4, const State& K5, const State& K6) -> State {
    return {y.l + h * (c1 * K1.l + c2 * K2.l + c3 * K3.l + c4 * K4.l +
                       c5 * K5.l + c6 * K6.l),
            y.r + h * (c1 * K1.r + c2 * K2.r + c3 * K3.r + c4 * K4.r +
                       c5 * K5.r + c6 * K6.r)};
  };
  const State z = {0, 0};
  const State k2 = f(x + h / 5.0, adv(1.0 / 5, 0, 0, 0, 0, 0, k1, z, z, z, z, z));
  const State k3 = f(x + 3.0 * h / 10.0,
                     adv(3.0 / 40, 9.0 / 40, 0, 0, 0, 0, k1, k2, z, z, z, z));
  const State k4 = f(x + 4.0 * h / 5.0,
                     adv(44.0 / 45, -56.0 / 15, 32.0 / 9, 0, 0, 0, k1, k2, k3,
                         z, z, z));
  const State k5 =
      f(x + 8.0 * h / 9.0,
        adv(19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729, 0,
            0, k1, k2, k3, k4, z, z));
  const State k6 =
      f(x + h, adv(9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
                   -5103.0 / 18656, 0, k1, k2, k3, k4, k5, z));
  const State y5 = adv(35.0 / 384, 0, 500.0 / 1113, 125.0 / 192,
                       -2187.0 / 6784, 11.0 / 84, k1, k2, k3, k4, k5, k6);
  const State k7 = f(x + h, y5);
  const double e_l = h * ((35.0 / 384 - 5179.0 / 57600) * k1.l +
                          (500.0 / 1113 - 7571.0 / 16695) * k3.l +
                          (125.0 / 192 - 393.0 / 640) * k4.l +
                          (-2187.0 / 6784 + 92097.0 / 339200) * k5.l +
                          (11.0 / 84 - 187.0 / 2100) * k6.l -
                          1.0 / 40 * k7.l);
  const double e_r = h * ((35.0 / 384 - 5179.0 / 57600) * k1.r +
                          (500.0 / 1113 - 7571.0 / 16695) * k3.r +
                          (125.0 / 192 - 393.0 / 640) * k4.r +
                          (-2187.0 / 6784 + 92097.0 / 339200) * k5.r +
                          (11.0 / 84 - 187.0 / 2100) * k6.r -
                          1.0 / 40 * k7.r);
  err = std::max(std::abs(e_l), std::abs(e_r));
  return y5;
}

// Integrates from x0 to x1 (either direction), adapting the internal step.
template <typename Rhs>
State integrate_to(const Rhs& rhs, double x0, double x1, State y, double tol) {
  const double dir = x1 >= x0 ? 1.0 : -1.0;
  double x = x0;
  double h = dir * (x1 - x0 == 0.0 ? 0.0 : (x1 - x0) * dir / 4.0);
  if (h == 0.0) return y;
  int guard = 0;
  while (dir * (x1 - x) > 0.0) {
    if (++guard > 1000000)
      throw std::runtime_error("solve_phi: step-size underflow in integrator");
    if (dir * (x + h - x1) > 0.0) h = x1 - x;
    double err;
    State yn = dp45_step(rhs, x, y, h, err);
    const double scale =
        tol * std::max({1.0, std::abs(y.l), std::abs(y.r)});
    if (err <= scale || std::abs(h) < 1e-14 * (std::abs(x) + 1.0)) {
      x += h;
      y = yn;
      if (err > 0.0) h *= std::min(5.0, 0.9 * std::pow(scale / err, 0.2));
    } else {
      h *= std::max(0.1, 0.9 * std::pow(scale / err, 0.2));
    }
  }
  return y;
}

struct GridResult {
  std::vector<double> x, l, r, rd;
};

// Tabulates (l, r) on a uniform grid, integrating node to node.
GridResult tabulate(const DiffusionModel& m, double q, Interval domain, int n,
                    double rk_tol, bool increasing) {
  auto rhs = [&](double x, double r) {
    const double s = m.sigma(x);
    const double s2 = s * s;
    if (!(s2 > 0.0))
      throw std::domain_error("solve_phi: sigma(x) must be positive");
    return 2.0 * (q - m.mu(x) * r) / s2 - r * r;
  };
  GridResult g;
  g.x.resize(n);
  g.l.resize(n);
  g.r.resize(n);
  g.rd.resize(n);
  const double h = domain.width() / (n - 1);
  for (int i = 0; i < n; ++i) g.x[i] = domain.lo + i * h;
  g.x.back() = domain.hi;

  State y{0.0, 0.0};
  if (increasing) {
    y.r = q > 0.0 ? 0.0 : 1.0;  // q = 0: slope 1 seed gives 1 + int e^{-I}
    g.l[0] = y.l;
    g.r[0] = y.r;
    g.rd[0] = rhs(g.x[0], y.r);
    for (int i = 1; i < n; ++i) {
      y = integrate_to(rhs, g.x[i - 1], g.x[i], y, rk_tol);
      g.l[i] = y.l;
      g.r[i] = y.r;
      g.rd[i] = rhs(g.x[i], y.r);
    }
  } else {
    g.l[n - 1] = y.l;
    g.r[n - 1] = y.r;
    g.rd[n - 1] = rhs(g.x[n - 1], y.r);
    for (int i = n - 2; i >= 0; --i) {
      y = integrate_to(rhs, g.x[i + 1], g.x[i], y, rk_tol);
      g.l[i] = y.l;
      g.r[i] = y.r;
      g.rd[i] = rhs(g.x[i], y.r);
    }
  }
  // Anchor phi at the midpoint: phi(mid) = 1.
  const double lmid = g.l[(n - 1) / 2];
  for (double& v : g.l) v -= lmid;
  return g;
}

double fd_residual(const GridResult& g, const DiffusionModel& m, double q) {
  // Five-point central difference of r vs the Riccati right-hand side.
  double worst = 0.0;
  const std::size_t n = g.x.size();
  const double h = g.x[1] - g.x[0];
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double rd_fd = (-g.r[i + 2] + 8.0 * g.r[i + 1] - 8.0 * g.r[i - 1] +
                          g.r[i - 2]) /
                         (12.0 * h);
    const double s = m.sigma(g.x[i]);
    const double res =
        0.5 * s * s * (rd_fd + g.r[i] * g.r[i]) + m.mu(g.x[i]) * g.r[i] - q;
    const double scale = std::max(
        {1.0, q, std::abs(m.mu(g.x[i]) * g.r[i]),
         0.5 * s * s * (std::abs(rd_fd) + g.r[i] * g.r[i])});
    worst = std::max(worst, std::abs(res) / scale);
  }
  return worst;
}

}  // namespace

double SLSolution::interp(const std::vector<double>& v,
                          const std::vector<double>& dv, double x) const {
  const double slack = 1e-12 * (std::abs(domain_.lo) + std::abs(domain_.hi) + 1.0);
  if (x < domain_.lo - slack || x > domain_.hi + slack)
    throw std::domain_error("SLSolution: point outside working interval");
  x = std::clamp(x, domain_.lo, domain_.hi);
  std::size_t i =
      static_cast<std::size_t>(std::floor((x - domain_.lo) / h_));
  if (i >= x_.size() - 1) i = x_.size() - 2;
  const double t = (x - x_[i]) / h_;
  const double a = v[i], b = dv[i] * h_, c = v[i + 1], d = dv[i + 1] * h_;
  // Cubic Hermite basis.
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * a + (t3 - 2 * t2 + t) * b +
         (-2 * t3 + 3 * t2) * c + (t3 - t2) * d;
}

double SLSolution::lp(double x) const { return interp(lp_, rp_, x); }
double SLSolution::rp(double x) const { return interp(rp_, rpd_, x); }
double SLSolution::lm(double x) const { return interp(lm_, rm_, x); }
double SLSolution::rm(double x) const { return interp(rm_, rmd_, x); }

namespace {
double checked_exp(double t) {
  if (std::abs(t) > 700.0)
    throw std::range_error(
        "SLSolution: phi value exceeds floating-point range; work with the "
        "ratio interface instead");
  return std::exp(t);
}
}  // namespace

double SLSolution::phi_plus(double x) const { return checked_exp(lp(x)); }
double SLSolution::phi_minus(double x) const { return checked_exp(lm(x)); }

PhiTriple SLSolution::phi_big(double x, double y) const {
  const double A = lp(x) + lm(y);
  const double B = lp(y) + lm(x);
  PhiTriple out;
  if (A >= B)
    out.phi = -checked_exp(A) * std::expm1(B - A);
  else
    out.phi = checked_exp(B) * std::expm1(A - B);
  out.d1 = rp(x) * checked_exp(A) - rm(x) * checked_exp(B);
  out.d2 = rm(y) * checked_exp(A) - rp(y) * checked_exp(B);
  return out;
}

double SLSolution::ratio_b(double u, double x) const {
  const double A = lp(u) + lm(x);
  const double B = lp(x) + lm(u);
  const double m = std::max(A, B);
  const double ea = std::exp(A - m), eb = std::exp(B - m);
  const double phi = ea - eb;
  if (phi == 0.0)
    throw std::runtime_error("diffusion ratio: Phi vanished (u == x?)");
  return (rm(x) * ea - rp(x) * eb) / phi;
}

double SLSolution::ratio_c(double u, double x) const {
  const double A = lp(u) + lm(x);
  const double B = lp(x) + lm(u);
  const double m = std::max(A, B);
  const double ea = std::exp(A - m), eb = std::exp(B - m);
  const double phi = ea - eb;
  if (phi == 0.0)
    throw std::runtime_error("diffusion ratio: Phi vanished (u == x?)");
  const double diag = (rm(x) - rp(x)) * std::exp(lp(x) + lm(x) - m);
  return diag / phi;
}

void SLSolution::export_csv(std::ostream& os) const {
  os << "x,phi_plus,dphi_plus,phi_minus,dphi_minus\n";
  char buf[256];
  for (std::size_t i = 0; i < x_.size(); ++i) {
    const double pp = checked_exp(lp_[i]), pm = checked_exp(lm_[i]);
    std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g\n", x_[i],
                  pp, rp_[i] * pp, pm, rm_[i] * pm);
    os << buf;
  }
}

SLSolution solve_phi(const DiffusionModel& m, double q, Interval domain,
                     const SLOptions& opts) {
  validate_model(ProcessModel{m});
  if (!(q >= 0.0)) throw std::invalid_argument("solve_phi: q must be >= 0");
  if (!(domain.hi > domain.lo))
    throw std::invalid_argument("solve_phi: empty working interval");

  int n = std::max(opts.grid_n, 33);
  GridResult p = tabulate(m, q, domain, n, opts.rk_tol, true);
  GridResult d = tabulate(m, q, domain, n, opts.rk_tol, false);
  for (int pass = 0; pass < opts.max_refine; ++pass) {
    const int n2 = 2 * n - 1;
    GridResult p2 = tabulate(m, q, domain, n2, opts.rk_tol, true);
    GridResult d2 = tabulate(m, q, domain, n2, opts.rk_tol, false);
    double move = 0.0;
    for (int i = 0; i < n; ++i) {
      move = std::max(move, std::abs(p2.l[2 * i] - p.l[i]));
      move = std::max(move, std::abs(p2.r[2 * i] - p.r[i]));
      move = std::max(move, std::abs(d2.l[2 * i] - d.l[i]));
      move = std::max(move, std::abs(d2.r[2 * i] - d.r[i]));
    }
    n = n2;
    p = std::move(p2);
    d = std::move(d2);
    const double res =
        std::max(fd_residual(p, m, q), fd_residual(d, m, q));
    if (move < opts.stable_tol && res < opts.residual_tol) {
      SLSolution sol;
      sol.q_ = q;
      sol.domain_ = domain;
      sol.h_ = (domain.hi - domain.lo) / (n - 1);
      sol.residual_ = res;
      sol.x_ = std::move(p.x);
      sol.lp_ = std::move(p.l);
      sol.rp_ = std::move(p.r);
      sol.rpd_ = std::move(p.rd);
      sol.lm_ = std::move(d.l);
      sol.rm_ = std::move(d.r);
      sol.rmd_ = std::move(d.rd);
      return sol;
    }
  }
  throw std::runtime_error(
      "solve_phi: residual tolerance unmet after adaptive refinement");
}

double diffusion_b(const SLSolution& sol, const DrawdownBoundary& f, double x) {
  const BoundaryValue bv = boundary_eval(f, x);
  if (bv.f < sol.domain().lo || x > sol.domain().hi)
    throw std::domain_error(
        "diffusion_b: working interval does not cover [f(x), x]");
  return sol.ratio_b(bv.f, x);
}

double diffusion_c(const SLSolution& sol, const DrawdownBoundary& f, double x) {
  const BoundaryValue bv = boundary_eval(f, x);
  if (bv.f < sol.domain().lo || x > sol.domain().hi)
    throw std::domain_error(
        "diffusion_c: working interval does not cover [f(x), x]");
  return sol.ratio_c(bv.f, x);
}

}  // namespace ddtax
