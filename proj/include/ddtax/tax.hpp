// Loss-carry-forward taxation: the taxed process pays gamma(latent max) on
// every increment of the running maximum,
//   U_t = X_t - int_0^t gamma(Xbar_s) dXbar_s,
// so the taxed maximum is Ubar = gbar(Xbar) with
//   gbar_x(m) = x + int_x^m (1 - gamma(r)) dr,
// and a drawdown boundary f applied to U pulls back to the latent-maximum
// boundary fstar(m) = f(gbar(m)) + (m - gbar(m)) for the untaxed process.
// Every taxed functional is then an untaxed functional under fstar with the
// upper level lifted to gbar^{-1}(K).
#pragma once

#include <vector>

#include "ddtax/engine.hpp"
#include "ddtax/model.hpp"

namespace ddtax {

// Exact piecewise evaluation of gbar and its inverse.  All schedule kinds
// have piecewise-linear rates, so segment integrals are trapezoids (exact)
// and the inverse solves a quadratic per segment (safeguarded Newton).
class TaxContext {
 public:
  TaxContext(TaxSchedule schedule, double x);

  double x() const { return x_; }
  const TaxSchedule& schedule() const { return schedule_; }
  double rate(double m) const { return tax_rate_at(schedule_, m); }

  // Taxed running maximum when the latent maximum is m (requires m >= x).
  double gbar(double m) const;
  // Cumulative tax paid on the way to latent maximum m.
  double paid(double m) const { return m - gbar(m); }
  // Latent maximum needed to lift the taxed maximum to `level` (>= x).
  double gbar_inv(double level) const;

  // Segment endpoints where the rate may kink or jump (includes x).
  const std::vector<double>& knots() const { return knots_; }

 private:
  double segment_integral(double a, double b) const;

  TaxSchedule schedule_;
  double x_;
  std::vector<double> knots_;
  std::vector<double> prefix_;  // prefix_[i] = gbar(knots_[i])
};

// Materializes fstar over latent maxima [x, m_hi] as a tabulated boundary:
// exact knots at every rate/boundary kink, then adaptive midpoint refinement
// until linear interpolation reproduces fstar to ~1e-10 (piecewise-linear
// rates make fstar piecewise quadratic, so refinement terminates fast; for
// classic boundaries fstar == f exactly and f is returned unchanged).
DrawdownBoundary latent_boundary(const TaxContext& ctx,
                                 const DrawdownBoundary& f, double m_hi);

struct TaxSetup {
  ProcessModel model;
  DrawdownBoundary f;
  TaxSchedule tax;
  double x = 0.0;  // start level; taxed and latent maxima both begin here
  FactoryOptions factory;
  EngineConfig engine;
};

struct TaxValue {
  double value = 0.0;
  double quad_error = 0.0;
  bool extrapolated = false;
  double latent_upper = 0.0;  // gbar^{-1}(K) actually used
};

// E_x[e^{-q T_K} ; the taxed maximum reaches K before the taxed drawdown].
TaxValue tax_exit(const TaxSetup& st, double q, double K);

// E_x[e^{-q tau - s Y} ; taxed maximum at the crossing <= K], with Y the
// deficit below the boundary at the crossing.
TaxValue tax_drawdown_law(const TaxSetup& st, double q, double s, double K);

enum class TaxEpvMode {
  UntilEither,  // tax collected until the drawdown or the upper exit
  OnUpperExit,  // tax counted only on paths that complete the upper exit
};

// Expected present value of the tax stream, int gamma(latent max) dXbar.
TaxValue tax_epv(const TaxSetup& st, double q, double K, TaxEpvMode mode);

}  // namespace ddtax
