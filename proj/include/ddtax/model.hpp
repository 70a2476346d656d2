// Model, boundary, tax-schedule and query types shared by every engine,
// plus their validation rules.
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace ddtax {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
};

// ---------------------------------------------------------------------------
// Process models.  All are upward skip-free: no positive jumps.

// Spectrally negative Levy process: drift mu, Brownian coefficient sigma,
// compound Poisson downward jumps at rate lambda with Exp(eta) sizes.
// sigma = 0 and/or lambda = 0 select the degenerate sub-families.
struct LevyModel {
  double mu = 0.0;
  double sigma = 0.0;
  double lambda = 0.0;
  double eta = 1.0;
};

enum class LevyFamily { PureDrift, Brownian, CramerLundberg, JumpDiffusion };
LevyFamily levy_family(const LevyModel& m);

// Time-homogeneous scalar diffusion dX = mu(X) dt + sigma(X) dW.
struct DiffusionModel {
  std::function<double(double)> mu;
  std::function<double(double)> sigma;
  std::string label = "diffusion";
};

// Mean-reverting diffusion with downward Exp(eta) jumps:
// dX = theta (mu - X) dt + sigma dW - dJ, jump rate lambda.
struct OUJumpModel {
  double theta = 1.0;
  double mu = 0.0;
  double sigma = 1.0;
  double lambda = 1.0;
  double eta = 1.0;
};

using ProcessModel = std::variant<LevyModel, DiffusionModel, OUJumpModel>;

std::string model_label(const ProcessModel& m);
void validate_model(const ProcessModel& m);  // throws std::invalid_argument

// ---------------------------------------------------------------------------
// Drawdown boundaries.  f maps the running maximum m to the lower exit level
// f(m); always f(m) < m, and f nondecreasing on its working interval.

enum class BoundaryKind { Ruin, Classic, Proportional, Affine, Tabulated };

struct DrawdownBoundary {
  BoundaryKind kind = BoundaryKind::Ruin;
  double xi = 0.0;  // slope (Proportional/Affine)
  double d = 0.0;   // offset (Classic/Affine)
  // Tabulated: nondecreasing piecewise-linear interpolation through (m_i, f_i).
  std::vector<double> grid_m;
  std::vector<double> grid_f;

  static DrawdownBoundary ruin() { return {}; }
  static DrawdownBoundary classic(double d);
  static DrawdownBoundary proportional(double xi);
  static DrawdownBoundary affine(double xi, double d);
  static DrawdownBoundary tabulated(std::vector<double> m, std::vector<double> f);
};

struct BoundaryValue {
  double f = 0.0;     // lower exit level f(m)
  double fbar = 0.0;  // gap m - f(m)
};

// Throws std::domain_error when m is outside the boundary's domain
// (e.g. Ruin/Proportional need m > 0, Tabulated needs m inside its grid).
BoundaryValue boundary_eval(const DrawdownBoundary& b, double m);

// Lowest exit level over running maxima in [lo, inf). Boundaries are
// nondecreasing, so this is f at the left end -- clamped into the boundary's
// own domain, which may start above lo (Ruin/Proportional/Tabulated).
double boundary_floor(const DrawdownBoundary& b, double lo);

struct ValidationIssue {
  std::string what;
  double where = 0.0;  // witness level, when meaningful
};

struct ValidationReport {
  bool ok = true;
  std::vector<ValidationIssue> issues;
};

// Checks f(m) < m and monotonicity of f over [iv.lo, iv.hi]; affine cases are
// checked analytically at the endpoints, tabulated ones per segment.
ValidationReport validate_boundary(const DrawdownBoundary& b, Interval iv);

std::string boundary_label(const DrawdownBoundary& b);

// ---------------------------------------------------------------------------
// Tax schedules: rate gamma(m) in [0, 1), nondecreasing in m.

enum class TaxKind { None, Constant, PiecewiseConstant, Tabulated };

struct TaxSchedule {
  TaxKind kind = TaxKind::None;
  double rate = 0.0;                 // Constant
  std::vector<double> breaks;        // PiecewiseConstant: ascending thresholds
  std::vector<double> values;        // rates; size = breaks.size() + 1
  std::vector<double> grid_m;        // Tabulated: linear interpolation
  std::vector<double> grid_rate;

  static TaxSchedule none() { return {}; }
  static TaxSchedule constant(double gamma);
  static TaxSchedule piecewise_constant(std::vector<double> breaks,
                                        std::vector<double> values);
  static TaxSchedule tabulated(std::vector<double> m, std::vector<double> rate);
};

double tax_rate_at(const TaxSchedule& s, double m);
ValidationReport validate_tax(const TaxSchedule& s, Interval iv);
std::string tax_label(const TaxSchedule& s);

// ---------------------------------------------------------------------------
// Query point for the first-passage functionals.

struct FunctionalQuery {
  double x = 0.0;  // starting level (= starting running maximum)
  double K = 0.0;  // upper target for the running maximum; may be +infinity
  double q = 0.0;  // discount rate, >= 0
  double s = 0.0;  // shortfall exponent, >= 0
};

void validate_query(const FunctionalQuery& f);  // throws std::invalid_argument

}  // namespace ddtax
