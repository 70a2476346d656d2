// First-passage machinery for the mean-reverting jump-diffusion
//   dX = theta (mu - X) dt + sigma dW - dJ   (downward Exp(eta) jumps, rate
// lambda > 0).  Two-sided exit transforms are assembled from eigenfunction
// integrals over three z-contours split by the integrand's singularities at
// z = 0 and z = eta:
//   F_i(x) = int_{G_i} phi_q(z) e^{-x z} dz,
//   C_i(x) = -int_{G_i} eta/(z - eta) phi_q(z) e^{-x z} dz,
//   phi_q(z) = |z|^{q/theta - 1} e^{mu z - sigma^2 z^2/(4 theta)}
//              |z - eta|^{lambda/theta},
// with G_1 = (0, eta), G_2 = (eta, inf), G_3 = (-inf, 0).
//
// The contour rules are built once per (model, q, level range): power
// substitutions absorb the endpoint singularities analytically, panels are
// refined geometrically at the substitution layers and the tails truncated
// where the worst-case integrand falls 1e-16 below its peak.  A level
// evaluation is then a plain weighted sum of e^{-x z_j}, smooth in x, which
// keeps central differences of the exit transforms clean.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <unordered_map>
#include <vector>

#include "ddtax/model.hpp"

namespace ddtax {

namespace detail {
struct OURules;  // cached contour quadrature (nodes + F/C weights)
}

struct OUOptions {
  int gl_order = 24;        // Gauss-Legendre order per panel
  double exp_margin = 45.0; // tails cut this far (in log) below the peak
  double rule_tol = 1e-10;  // construction-time self-consistency target
  double diff_rel_tol = 1e-5;  // Richardson spread allowed in b/c
  double qmin_factor = 1e-3;   // q_min = qmin_factor * theta
  int max_rule_refine = 3;
};

class OUJumpKernel {
 public:
  // Throws std::invalid_argument for lambda <= 0 (use the diffusion solver)
  // and for q below q_min (the z^{q/theta - 1} endpoint becomes
  // non-integrable as q -> 0; use the extrapolating factory instead).
  OUJumpKernel(const OUJumpModel& m, double q, Interval levels,
               const OUOptions& opts = {});

  struct FCSet {
    double f1, f2, f3, c1, c2, c3;
  };

  const OUJumpModel& model() const { return m_; }
  double q() const { return q_; }
  double q_min() const { return opts_.qmin_factor * m_.theta; }
  Interval levels() const { return levels_; }
  double tail_upper() const { return z2_max_; }   // recorded truncation bounds
  double tail_lower() const { return z3_min_; }
  double rule_error() const { return rule_err_; } // observed refinement gap

  // All six contour integrals at level x, cached per x.
  const FCSet& eval(double x) const;

  // F3 alone, valid for any x <= levels().hi: the lower-contour rule was
  // truncated against the top of the range and only gains accuracy further
  // down.  Lets the jump-convolution cross-check probe far below levels().lo.
  double f3_at(double x) const;

  const OUOptions& options() const { return opts_; }

  // Writes x, F1..F3, C1..C3 for a grid of levels (debug aid).
  void dump_csv(std::ostream& os, const std::vector<double>& levels) const;

 private:
  void check_level(double x) const;
  FCSet eval_raw(const detail::OURules& r, double x) const;

  OUJumpModel m_;
  double q_ = 0.0;
  Interval levels_;
  OUOptions opts_;
  double z2_max_ = 0.0, z3_min_ = 0.0, rule_err_ = 0.0;
  std::shared_ptr<const detail::OURules> rules_;
  mutable std::unordered_map<std::uint64_t, FCSet> cache_;
};

struct OUFirstPassage {
  double I1 = 0.0;  // creeping part of the lower exit at u
  double I2 = 0.0;  // jump part of the lower exit at u
  double B = 0.0;   // reach v before passing below u, discounted
  double C = 0.0;   // pass below u first, with e^{-s (u - X)} on the deficit
  double up = 0.0;  // one-sided: E_x e^{-q tau_v^+} = F3(x)/F3(v)
};

// Requires u < x <= v inside the kernel's level range (with small slack for
// the difference probes).
OUFirstPassage ou_first_passage(const OUJumpKernel& k, double s, double x,
                                double u, double v);

struct OUDiffDiagnostics {
  double b_spread = 0.0;  // Richardson disagreement, relative
  double c_spread = 0.0;
  double h = 0.0;
};

struct OUBC {
  double b = 0.0;
  double c = 0.0;
};

// Differential exit coefficients at x against boundary f via Richardson
// central differences in the upper level.  Throws std::runtime_error when
// the two step sizes disagree beyond opts.diff_rel_tol.
OUBC ou_b_c(const OUJumpKernel& k, double s, const DrawdownBoundary& f,
            double x, OUDiffDiagnostics* diag = nullptr);

// Second route to the creep/jump convolution: direct quadrature of
// int_0^infty eta e^{-eta y} F3(u - y) dy, which must match C3(u).
double ou_jump_convolution(const OUJumpKernel& k, double u,
                           double abs_tol = 1e-12);

}  // namespace ddtax
