#include "ddtax/levy.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ddtax/quad.hpp"

namespace ddtax {

namespace {

constexpr double kExpCap = 700.0;  // beyond this exp() overflows double

void check_exponent(double t) {
  if (std::abs(t) > kExpCap) {
    std::ostringstream os;
    os << "scale function: exponent " << t
       << " exceeds the floating-point range; reduce q, s or the level span";
    throw std::range_error(os.str());
  }
}

// (e^t - 1)/t and (t e^t - e^t + 1)/t^2 with series fallbacks near 0.
double em1(double t) {
  if (std::abs(t) < 1e-4)
    return 1.0 + t / 2.0 + t * t / 6.0 + t * t * t / 24.0;
  return std::expm1(t) / t;
}
double em2(double t) {
  if (std::abs(t) < 1e-4)
    return 0.5 + t / 3.0 + t * t / 8.0 + t * t * t / 30.0;
  return (std::expm1(t) * (t - 1.0) + t) / (t * t);
}

// Stable real-quadratic solve a x^2 + b x + c, both roots returned.
void quadratic_roots(double a, double b, double c, double& r1, double& r2) {
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0)
    throw std::runtime_error("quadratic_roots: complex roots encountered");
  const double sq = std::sqrt(disc);
  const double t = b >= 0.0 ? -0.5 * (b + sq) : -0.5 * (b - sq);
  if (t == 0.0) {
    r1 = 0.0;
    r2 = 0.0;
    return;
  }
  r1 = t / a;
  r2 = c / t;
  if (r1 > r2) std::swap(r1, r2);
}

}  // namespace

double ExpPoly::eval(double x) const {
  CompensatedSum acc;
  for (const Term& t : terms) {
    check_exponent(t.rate * x);
    acc.add((t.c0 + t.c1 * x) * std::exp(t.rate * x));
  }
  return acc.value();
}

double ExpPoly::deriv(double x) const {
  CompensatedSum acc;
  for (const Term& t : terms) {
    check_exponent(t.rate * x);
    acc.add((t.c1 + t.rate * (t.c0 + t.c1 * x)) * std::exp(t.rate * x));
  }
  return acc.value();
}

double ExpPoly::integral0(double x) const {
  CompensatedSum acc;
  for (const Term& t : terms) {
    const double a = t.rate * x;
    check_exponent(a);
    // int_0^x (c0 + c1 y) e^{rate y} dy = c0 x em1(a) + c1 x^2 em2(a)
    acc.add(t.c0 * x * em1(a) + t.c1 * x * x * em2(a));
  }
  return acc.value();
}

ExpPoly ExpPoly::tilt(double s) const {
  ExpPoly out = *this;
  for (Term& t : out.terms) t.rate -= s;
  return out;
}

double laplace_exponent(const LevyModel& m, double s) {
  if (m.lambda > 0.0 && s == -m.eta)
    throw std::domain_error("laplace_exponent: pole at s = -eta");
  double v = m.mu * s + 0.5 * m.sigma * m.sigma * s * s;
  if (m.lambda > 0.0) v += m.lambda * (m.eta / (m.eta + s) - 1.0);
  return v;
}

double laplace_exponent_deriv(const LevyModel& m, double s) {
  if (m.lambda > 0.0 && s == -m.eta)
    throw std::domain_error("laplace_exponent_deriv: pole at s = -eta");
  double v = m.mu + m.sigma * m.sigma * s;
  if (m.lambda > 0.0) v -= m.lambda * m.eta / ((m.eta + s) * (m.eta + s));
  return v;
}

std::vector<double> psi_roots(const LevyModel& m, double q) {
  validate_model(ProcessModel{m});
  if (!(q >= 0.0)) throw std::invalid_argument("psi_roots: q must be >= 0");
  const double a = 0.5 * m.sigma * m.sigma;
  switch (levy_family(m)) {
    case LevyFamily::PureDrift:
      return {q / m.mu};
    case LevyFamily::Brownian: {
      if (q == 0.0) {
        if (m.mu == 0.0) return {0.0};  // double root
        double r = -2.0 * m.mu / (m.sigma * m.sigma);
        return r < 0.0 ? std::vector<double>{r, 0.0}
                       : std::vector<double>{0.0, r};
      }
      double r1, r2;
      quadratic_roots(a, m.mu, -q, r1, r2);
      return {r1, r2};
    }
    case LevyFamily::CramerLundberg: {
      // (psi(s) - q)(eta + s) = mu s^2 + (mu eta - lambda - q) s - q eta
      const double b = m.mu * m.eta - m.lambda - q;
      if (q == 0.0) {
        if (b == 0.0) return {0.0};  // critical: double root at 0
        const double r = -b / m.mu;  // other root: s (mu s + b) = 0
        return r < 0.0 ? std::vector<double>{r, 0.0}
                       : std::vector<double>{0.0, r};
      }
      double r1, r2;
      quadratic_roots(m.mu, b, -q * m.eta, r1, r2);
      return {r1, r2};
    }
    case LevyFamily::JumpDiffusion: {
      // (psi(s) - q)(eta + s) = c3 s^3 + c2 s^2 + c1 s + c0
      const double c3 = a;
      const double c2 = m.mu + a * m.eta;
      const double c1 = m.mu * m.eta - m.lambda - q;
      const double c0 = -q * m.eta;
      auto P = [&](double s) { return ((c3 * s + c2) * s + c1) * s + c0; };
      auto dP = [&](double s) { return (3.0 * c3 * s + 2.0 * c2) * s + c1; };
      if (q == 0.0) {
        if (c1 == 0.0) {
          // double root at 0 plus s1 = -c2/c3
          return {-c2 / c3, 0.0};
        }
        double r1, r2;
        quadratic_roots(c3, c2, c1, r1, r2);
        std::vector<double> rs{r1, r2, 0.0};
        std::sort(rs.begin(), rs.end());
        return rs;
      }
      // q > 0: three simple real roots, one in each of
      // (-inf, -eta), (-eta, 0), (0, inf);  P(-eta) = lambda eta > 0.
      double hi = 1.0;
      while (P(hi) <= 0.0) hi *= 2.0;
      const double s3 = newton_bisect(P, dP, 0.0, hi);
      const double s2 = newton_bisect(P, dP, -m.eta, 0.0);
      double lo = -m.eta - 1.0;
      while (P(lo) >= 0.0) lo = -m.eta + 2.0 * (lo + m.eta);
      const double s1 = newton_bisect(P, dP, lo, -m.eta);
      return {s1, s2, s3};
    }
  }
  return {};
}

ExpPoly scale_poly(const LevyModel& m, double q) {
  validate_model(ProcessModel{m});
  if (!(q >= 0.0)) throw std::invalid_argument("scale_poly: q must be >= 0");
  ExpPoly w;
  const double a = 0.5 * m.sigma * m.sigma;
  const LevyFamily fam = levy_family(m);

  if (fam == LevyFamily::PureDrift) {
    w.terms.push_back({q / m.mu, 1.0 / m.mu, 0.0});
    return w;
  }
  if (fam == LevyFamily::Brownian && q == 0.0 && m.mu == 0.0) {
    w.terms.push_back({0.0, 0.0, 2.0 / (m.sigma * m.sigma)});
    return w;
  }
  if (fam == LevyFamily::CramerLundberg && q == 0.0 &&
      m.mu * m.eta - m.lambda == 0.0) {
    w.terms.push_back({0.0, 1.0 / m.mu, m.eta / m.mu});
    return w;
  }
  if (fam == LevyFamily::JumpDiffusion && q == 0.0 &&
      m.mu * m.eta - m.lambda == 0.0) {
    // (psi(s))(eta + s) = c3 s^2 (s - s1): double root at 0.
    const double c3 = a;
    const double c2 = m.mu + a * m.eta;
    const double s1 = -c2 / c3;
    const double g0 = -m.eta / (c3 * s1);                // (eta+s)/(c3(s-s1)) at 0
    const double g1 = (-s1 - m.eta) / (c3 * s1 * s1);    // its derivative at 0
    const double res1 = (m.eta + s1) / (c3 * s1 * s1);   // residue at s1
    w.terms.push_back({0.0, g1, g0});
    w.terms.push_back({s1, res1, 0.0});
    return w;
  }

  for (double r : psi_roots(m, q)) {
    const double d = laplace_exponent_deriv(m, r);
    if (d == 0.0)
      throw std::runtime_error(
          "scale_poly: degenerate root (near-critical parameters)");
    w.terms.push_back({r, 1.0 / d, 0.0});
  }
  return w;
}

double scale_w(const LevyModel& m, double q, double x) {
  if (x < 0.0) return 0.0;
  return scale_poly(m, q).eval(x);
}

double scale_w_prime(const LevyModel& m, double q, double x) {
  if (x < 0.0) return 0.0;
  return scale_poly(m, q).deriv(x);
}

double scale_w_tilted(const LevyModel& m, double q, double s, double y) {
  return LevyScale(m, q, s).ws(y);
}

double scale_z(const LevyModel& m, double q, double s, double y) {
  return LevyScale(m, q, s).zs(y);
}

double scale_z_prime(const LevyModel& m, double q, double s, double y) {
  return LevyScale(m, q, s).zs_prime(y);
}

LevyScale::LevyScale(const LevyModel& m, double q, double s)
    : m_(m), q_(q), s_(s) {
  if (!(s >= 0.0)) throw std::invalid_argument("LevyScale: s must be >= 0");
  p_ = q - laplace_exponent(m, s);
  w_ = scale_poly(m, q);
  ws_ = w_.tilt(s);
}

double two_sided_B(const LevyModel& m, double q, double x, double u, double v) {
  if (!(u < v)) throw std::invalid_argument("two_sided_B: requires u < v");
  if (x <= u) return 0.0;
  if (x >= v) return 1.0;
  const ExpPoly w = scale_poly(m, q);
  return w.eval(x - u) / w.eval(v - u);
}

double two_sided_C(const LevyModel& m, double q, double s, double x, double u,
                   double v) {
  if (!(u < v)) throw std::invalid_argument("two_sided_C: requires u < v");
  if (x <= u) return 1.0;
  if (x >= v) return 0.0;
  const LevyScale ls(m, q, s);
  const double yu = x - u, vu = v - u;
  check_exponent(s * yu);
  return std::exp(s * yu) *
         (ls.zs(yu) - ls.zs(vu) * ls.ws(yu) / ls.ws(vu));
}

double levy_b(const LevyScale& ls, const DrawdownBoundary& f, double x) {
  const BoundaryValue bv = boundary_eval(f, x);
  const double w = ls.w(bv.fbar);
  if (!(w > 0.0))
    throw std::runtime_error("levy_b: scale function not positive at the gap");
  return ls.w_prime(bv.fbar) / w;
}

double levy_c(const LevyScale& ls, const DrawdownBoundary& f, double x) {
  const BoundaryValue bv = boundary_eval(f, x);
  const double ws = ls.ws(bv.fbar);
  if (!(ws > 0.0))
    throw std::runtime_error("levy_c: scale function not positive at the gap");
  check_exponent(ls.s() * bv.fbar);
  return std::exp(ls.s() * bv.fbar) *
         (ls.zs(bv.fbar) * ls.ws_prime(bv.fbar) / ws - ls.zs_prime(bv.fbar));
}

}  // namespace ddtax
