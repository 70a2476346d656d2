// Closed-form scale functions for spectrally negative Levy processes with
// Brownian part and exponential downward jumps, and the induced drawdown
// exit coefficients.
#pragma once

#include <vector>

#include "ddtax/model.hpp"

namespace ddtax {

// Sum of (c0 + c1 x) e^{rate x} terms; closed-form representation of the
// q-scale function for every sub-family, including double-root cases.
struct ExpPoly {
  struct Term {
    double rate = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
  };
  std::vector<Term> terms;

  double eval(double x) const;
  double deriv(double x) const;
  // int_0^x eval(y) dy, stable for small rate*x.
  double integral0(double x) const;
  // e^{-s x} * this (rates shift by -s).
  ExpPoly tilt(double s) const;
};

// psi(s) = mu s + sigma^2 s^2 / 2 + lambda (eta / (eta + s) - 1).  The
// Laplace exponent proper lives on s > -eta; below the pole the same
// rational expression is returned (the partial-fraction residues of the
// scale function need it there, since one root of psi = q can sit left of
// -eta when sigma > 0 and lambda > 0).
double laplace_exponent(const LevyModel& m, double s);
double laplace_exponent_deriv(const LevyModel& m, double s);

// All real solutions of psi(s) = q (ascending).  q >= 0.  Double roots are
// reported once; scale_poly handles their contribution analytically.
std::vector<double> psi_roots(const LevyModel& m, double q);

// W^{(q)} as an ExpPoly (exact partial-fraction inversion).
ExpPoly scale_poly(const LevyModel& m, double q);

double scale_w(const LevyModel& m, double q, double x);        // 0 for x < 0
double scale_w_prime(const LevyModel& m, double q, double x);

// Tilted-measure scale pair at p = q - psi(s):
//   ws(y) = e^{-s y} W^{(q)}(y),  zs(y) = 1 + p int_0^y ws.
double scale_w_tilted(const LevyModel& m, double q, double s, double y);
double scale_z(const LevyModel& m, double q, double s, double y);
double scale_z_prime(const LevyModel& m, double q, double s, double y);

// Two-sided exit transforms from x in [u, v]:
//   B: reach v before passing below u, discounted at q;
//   C: pass below u before v, discounted at q with e^{-s (u - X)} on the
//      shortfall below u.
double two_sided_B(const LevyModel& m, double q, double x, double u, double v);
double two_sided_C(const LevyModel& m, double q, double s, double x, double u,
                   double v);

// Cached factorization for one (model, q, s); reused across many levels.
class LevyScale {
 public:
  LevyScale(const LevyModel& m, double q, double s);

  const LevyModel& model() const { return m_; }
  double q() const { return q_; }
  double s() const { return s_; }
  double p() const { return p_; }

  double w(double y) const { return y < 0 ? 0.0 : w_.eval(y); }
  double w_prime(double y) const { return y < 0 ? 0.0 : w_.deriv(y); }
  double ws(double y) const { return y < 0 ? 0.0 : ws_.eval(y); }
  double ws_prime(double y) const { return y < 0 ? 0.0 : ws_.deriv(y); }
  double zs(double y) const { return y <= 0 ? 1.0 : 1.0 + p_ * ws_.integral0(y); }
  double zs_prime(double y) const { return y <= 0 ? 0.0 : p_ * ws_.eval(y); }

 private:
  LevyModel m_;
  double q_, s_, p_;
  ExpPoly w_, ws_;
};

// Differential exit coefficients against a drawdown boundary:
//   b(x) = W'(gap)/W(gap), gap = x - f(x);
//   c(x) = e^{s gap} (zs(gap) ws'(gap)/ws(gap) - zs'(gap)).
double levy_b(const LevyScale& ls, const DrawdownBoundary& f, double x);
double levy_c(const LevyScale& ls, const DrawdownBoundary& f, double x);

}  // namespace ddtax
