// Assembly layer: each model family reduces two-sided exit to a pair of
// differential coefficients
//   b(z)  — hazard of the lower boundary catching the process before the
//           running maximum advances past z,
//   c(z)  — density weight for crossing at maximum level z (with the
//           overshoot discounted by e^{-s Y}),
// after which every functional is a one-dimensional integral:
//   reach K first:        exp(-int_x^K b)
//   cross first, max<=K:  int_x^K exp(-int_x^y b) c(y) dy.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ddtax/diffusion.hpp"
#include "ddtax/model.hpp"
#include "ddtax/oujump.hpp"

namespace ddtax {

struct ExitParams {
  std::function<double(double)> b;
  std::function<double(double)> c;
  std::string provenance;     // model/boundary/q/s tag for error reports
  bool extrapolated = false;  // true when a q->0 limit was taken numerically
};

struct EngineConfig {
  double abs_tol = 1e-10;      // per-integral quadrature budget
  double tail_tol = 1e-10;     // K = inf: acceptable unresolved tail mass
  double exp_cap = 700.0;      // refuse exponents beyond this (reported)
  int max_doublings = 60;      // K = inf: range extension limit
};

struct EngineResult {
  double value = 0.0;
  double quad_error = 0.0;
  bool extrapolated = false;
};

// exp(-int_x^K b): discounted probability of reaching K before the drawdown
// boundary bites.  K must be finite.  Equals 1 at K == x.
EngineResult exit_transform(const ExitParams& p, double x, double K,
                            const EngineConfig& cfg = {});

// int_x^K e^{-int_x^y b} c(y) dy: joint transform of the crossing time,
// overshoot and running maximum.  K = +inf is served by doubling the range
// until the unresolved tail drops below cfg.tail_tol (throws when it will
// not close within cfg.max_doublings).
EngineResult drawdown_law(const ExitParams& p, double x, double K,
                          const EngineConfig& cfg = {});

// d/dK of drawdown_law: e^{-int_x^K b} c(K), the (defective) density of the
// running maximum at the crossing time.
EngineResult drawdown_density(const ExitParams& p, double x, double K,
                              const EngineConfig& cfg = {});

// Batched variants sharing one cumulative integral of b across an ascending
// grid of upper levels (the CLI table path).
std::vector<EngineResult> exit_transform_curve(const ExitParams& p, double x,
                                               const std::vector<double>& Ks,
                                               const EngineConfig& cfg = {});
std::vector<EngineResult> drawdown_law_curve(const ExitParams& p, double x,
                                             const std::vector<double>& Ks,
                                             const EngineConfig& cfg = {});

struct FactoryOptions {
  SLOptions sl;
  OUOptions ou;
};

// A reusable maker of exit coefficients for one model over one working level
// range; the boundary, discount rate and overshoot tilt vary per call (the
// tax layer re-enters with a modified boundary at both q and 0).
using ParamsFactory =
    std::function<ExitParams(const DrawdownBoundary& f, double q, double s)>;

// Builds the factory for the given model.  Spectrally one-sided jump models
// use closed-form scale functions; diffusions solve the two-sided
// Sturm-Liouville problem over `working` (cached per q); mean-reverting
// jump models build contour kernels over `working` (cached per q, with
// q = 0 served by Richardson extrapolation from q_min and 2 q_min and
// flagged as extrapolated).
ParamsFactory make_params_factory(const ProcessModel& m, Interval working,
                                  const FactoryOptions& fo = {});

// One-shot convenience wrapper around make_params_factory.
ExitParams make_params(const ProcessModel& m, const DrawdownBoundary& f,
                       double q, double s, Interval working,
                       const FactoryOptions& fo = {});

}  // namespace ddtax
