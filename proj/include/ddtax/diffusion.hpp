// Minimal two-sided solver for (sigma^2/2) phi'' + mu phi' = q phi on a
// working interval: increasing and decreasing positive solutions are
// integrated in log space (l = log phi, r = phi'/phi) so magnitudes never
// overflow, then combined into the exit kernel
//   Phi_q(x, y) = phi_plus(x) phi_minus(y) - phi_plus(y) phi_minus(x).
#pragma once

#include <iosfwd>
#include <vector>

#include "ddtax/model.hpp"

namespace ddtax {

struct SLOptions {
  int grid_n = 1001;          // output nodes (uniform); refined automatically
  double rk_tol = 1e-12;      // local error target of the adaptive integrator
  double stable_tol = 1e-8;   // grid accepted when l/r move less than this
  double residual_tol = 1e-8; // finite-difference ODE residual bound
  int max_refine = 5;
};

struct PhiTriple {
  double phi = 0.0;  // Phi_q(x, y); negative for x < y
  double d1 = 0.0;   // d/dx
  double d2 = 0.0;   // d/dy
};

class SLSolution {
 public:
  double q() const { return q_; }
  Interval domain() const { return domain_; }
  double residual() const { return residual_; }

  // log phi and phi'/phi for the increasing (+) / decreasing (-) solutions.
  double lp(double x) const;
  double rp(double x) const;
  double lm(double x) const;
  double rm(double x) const;

  double phi_plus(double x) const;
  double phi_minus(double x) const;

  PhiTriple phi_big(double x, double y) const;

  // Ratios Phi_2(u,x)/Phi(u,x) and Phi_2(x,x)/Phi(u,x) evaluated in a shared
  // scale, so they stay finite even when phi itself would overflow.
  double ratio_b(double u, double x) const;
  double ratio_c(double u, double x) const;

  // Columns: x, phi_plus, dphi_plus, phi_minus, dphi_minus.
  void export_csv(std::ostream& os) const;

 private:
  friend SLSolution solve_phi(const DiffusionModel&, double, Interval,
                              const SLOptions&);
  double interp(const std::vector<double>& v, const std::vector<double>& dv,
                double x) const;

  double q_ = 0.0;
  Interval domain_;
  double h_ = 0.0;
  double residual_ = 0.0;
  std::vector<double> x_, lp_, rp_, rpd_, lm_, rm_, rmd_;
};

// Throws std::runtime_error when the residual bound cannot be met within
// max_refine grid doublings.
SLSolution solve_phi(const DiffusionModel& m, double q, Interval domain,
                     const SLOptions& opts = {});

// Differential drawdown coefficients; require domain coverage of [f(x), x].
double diffusion_b(const SLSolution& sol, const DrawdownBoundary& f, double x);
double diffusion_c(const SLSolution& sol, const DrawdownBoundary& f, double x);

}  // namespace ddtax
