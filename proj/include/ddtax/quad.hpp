// Small numerical toolkit: compensated sums, Gauss-Kronrod / Gauss-Legendre
// quadrature, bracketed root finding and Richardson-extrapolated derivatives.
#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

namespace ddtax {

// Neumaier variant of Kahan summation.  Deterministic for a fixed add order.
class CompensatedSum {
 public:
  void add(double v) {
    double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;  // estimated absolute error
};

// 15-point Kronrod rule with embedded 7-point Gauss rule on [a, b].
QuadResult gk15(const std::function<double(double)>& f, double a, double b);

// Adaptive bisection with gk15 leaves.  abs_tol applies per accepted leaf.
// Throws std::runtime_error when max_intervals is exhausted.
QuadResult integrate_adaptive(const std::function<double(double)>& f, double a,
                              double b, double abs_tol = 1e-10,
                              std::size_t max_intervals = 200000);

// Prefix integral y -> int_a^y f(z) dz with the partition produced by the
// adaptive pass cached; evaluations reuse the stored leaf sums so repeated
// queries are cheap and order-independent (compensated prefix sums).
class CumulativeIntegral {
 public:
  CumulativeIntegral(std::function<double(double)> f, double a, double b,
                     double abs_tol = 1e-10, std::size_t max_intervals = 200000);

  double lower() const { return a_; }
  double upper() const { return b_; }
  double total() const { return prefix_.back(); }
  // Requires a <= y <= b (small slack tolerated and clipped).
  double eval(double y) const;
  const std::vector<double>& breakpoints() const { return nodes_; }
  // Extends the upper limit (used for open-ended drawdown laws).
  void extend(double new_b);

 private:
  void build(double lo, double hi, std::vector<double>& nodes,
             std::vector<double>& sums) const;

  std::function<double(double)> f_;
  double a_, b_, tol_;
  std::size_t max_intervals_;
  std::vector<double> nodes_;   // partition a = z0 < z1 < ... < zn = b
  std::vector<double> prefix_;  // prefix_[i] = int_a^{z_i}
};

// Nodes/weights of the n-point Gauss-Legendre rule on [-1, 1].
// Computed once per n and cached.
struct GaussLegendre {
  std::vector<double> x;
  std::vector<double> w;
};
const GaussLegendre& gauss_legendre(int n);

// Safeguarded Newton iteration constrained to a bracket [lo, hi] where the
// function changes sign; falls back to bisection whenever the Newton step
// leaves the bracket or stalls.  rel_tol applies to the root location.
double newton_bisect(const std::function<double(double)>& f,
                     const std::function<double(double)>& df, double lo,
                     double hi, double rel_tol = 1e-12, int max_iter = 200);

// Bracketed root find without derivative information (bisection/secant mix).
double brent_root(const std::function<double(double)>& f, double lo, double hi,
                  double rel_tol = 1e-13, int max_iter = 300);

struct DerivResult {
  double value = 0.0;     // Richardson-extrapolated central difference
  double rel_spread = 0.0;  // |D(h/2) - D(h)| / max(|value|, floor)
};

// Central differences at steps h and h/2 with one Richardson step.
DerivResult central_derivative(const std::function<double(double)>& f, double x,
                               double h);

}  // namespace ddtax
