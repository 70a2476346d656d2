#include "ddtax/oujump.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "ddtax/quad.hpp"

namespace ddtax {

namespace {

double checked_exp(double t, const char* where) {
  if (!(t <= 650.0)) {
    std::ostringstream os;
    os << where << ": exponent " << t << " exceeds the floating-point range";
    throw std::range_error(os.str());
  }
  return std::exp(t);
}

// Dyadic breakpoints of [0, T] refined toward both endpoints.
std::vector<double> dyadic_breaks(double T, int depth) {
  std::vector<double> ts{0.0};
  for (int k = depth; k >= 1; --k) ts.push_back(T * std::ldexp(1.0, -k));
  for (int k = 2; k <= depth; ++k)
    ts.push_back(T * (1.0 - std::ldexp(1.0, -k)));
  ts.push_back(T);
  return ts;
}

}  // namespace

namespace detail {

struct OUPiece {
  std::vector<double> z, wf, wc;
};

struct OURules {
  std::vector<OUPiece> g1, g2, g3;
  double z2_max = 0.0, z3_min = 0.0;
};

}  // namespace detail

namespace {

using detail::OUPiece;
using detail::OURules;

struct RuleParams {
  int depth;
  int gl;
  double de_step;     // max worst-case log-variation per plain panel
  double margin;      // tail cutoff below the peak, in log units
};

class RuleBuilder {
 public:
  RuleBuilder(const OUJumpModel& m, double q, double xlo, double xhi,
              const RuleParams& p)
      : m_(m), q_(q), xlo_(xlo), xhi_(xhi), p_(p), qt_(q / m.theta),
        lt_(m.lambda / m.theta) {}

  void build(OURules& r) {
    const double eta = m_.eta;
    // G1 = (0, eta): zero-side then eta-side.
    r.g1.push_back(zero_end_piece(+1.0, 0.5 * eta));
    r.g1.push_back(eta_end_piece(-1.0, 0.5 * eta));
    // G2 = (eta, inf): eta-side, then plain panels to the Gaussian cutoff.
    const double w2 = std::min(1.0, eta);
    r.g2.push_back(eta_end_piece(+1.0, w2));
    double peak2, z2max = upper_cutoff(eta + w2, peak2);
    r.z2_max = z2max;
    append_plain(r.g2, eta + w2, z2max, true);
    // G3 = (-inf, 0): plain tail then zero-side.
    const double w3 = std::min(1.0, eta);
    double peak3, z3min = lower_cutoff(-w3, peak3);
    r.z3_min = z3min;
    append_plain(r.g3, z3min, -w3, false);
    r.g3.push_back(zero_end_piece(-1.0, w3));
  }

 private:
  double log_gauss(double z) const {
    return m_.mu * z - m_.sigma * m_.sigma * z * z / (4.0 * m_.theta);
  }
  // Worst-case envelope exponents used for truncation and panel sizing.
  double env_upper(double z) const {
    return -m_.sigma * m_.sigma * z * z / (4.0 * m_.theta) +
           (m_.mu - xlo_) * z + lt_ * std::log1p(std::abs(z - m_.eta)) +
           std::max(qt_ - 1.0, 0.0) * std::log1p(std::abs(z));
  }
  double env_lower(double z) const {
    return -m_.sigma * m_.sigma * z * z / (4.0 * m_.theta) +
           (m_.mu - xhi_) * z + lt_ * std::log1p(std::abs(z - m_.eta)) +
           std::max(qt_ - 1.0, 0.0) * std::log1p(std::abs(z));
  }

  double upper_cutoff(double zstart, double& peak) const {
    const double s2 = m_.sigma * m_.sigma;
    const double zp =
        std::max(zstart, 2.0 * m_.theta * (m_.mu - xlo_) / s2);
    peak = std::max(env_upper(zstart), env_upper(zp));
    double z = zp + 1.0;
    for (int i = 0; i < 400 && env_upper(z) > peak - p_.margin; ++i)
      z = zp + 2.0 * (z - zp);
    return z;
  }
  double lower_cutoff(double zstart, double& peak) const {
    const double s2 = m_.sigma * m_.sigma;
    const double zp =
        std::min(zstart, 2.0 * m_.theta * (m_.mu - xhi_) / s2);
    peak = std::max(env_lower(zstart), env_lower(zp));
    double z = zp - 1.0;
    for (int i = 0; i < 400 && env_lower(z) > peak - p_.margin; ++i)
      z = zp + 2.0 * (z - zp);
    return z;
  }

  // Absorbs |z|^{q/theta - 1}: z = sgn * t^{theta/q} over t in [0, T].
  OUPiece zero_end_piece(double sgn, double zwidth) const {
    const double a = m_.theta / q_;
    const double T = std::pow(zwidth, q_ / m_.theta);
    OUPiece piece;
    const GaussLegendre& gl = gauss_legendre(p_.gl);
    const std::vector<double> ts = dyadic_breaks(T, p_.depth);
    for (std::size_t seg = 0; seg + 1 < ts.size(); ++seg) {
      const double half = 0.5 * (ts[seg + 1] - ts[seg]);
      const double mid = 0.5 * (ts[seg + 1] + ts[seg]);
      for (int j = 0; j < p_.gl; ++j) {
        const double t = mid + half * gl.x[j];
        const double z = sgn * std::pow(t, a);
        const double lrest = lt_ * std::log(std::abs(z - m_.eta)) + log_gauss(z);
        const double wf =
            gl.w[j] * half * a * checked_exp(lrest, "ou kernel weights");
        piece.z.push_back(z);
        piece.wf.push_back(wf);
        piece.wc.push_back(wf * (-m_.eta / (z - m_.eta)));
      }
    }
    return piece;
  }

  // Absorbs |z - eta|^{lambda/theta - 1}: z = eta + sgn * t^{theta/lambda}.
  OUPiece eta_end_piece(double sgn, double zwidth) const {
    const double b = m_.theta / m_.lambda;
    const double T = std::pow(zwidth, m_.lambda / m_.theta);
    OUPiece piece;
    const GaussLegendre& gl = gauss_legendre(p_.gl);
    const std::vector<double> ts = dyadic_breaks(T, p_.depth);
    for (std::size_t seg = 0; seg + 1 < ts.size(); ++seg) {
      const double half = 0.5 * (ts[seg + 1] - ts[seg]);
      const double mid = 0.5 * (ts[seg + 1] + ts[seg]);
      for (int j = 0; j < p_.gl; ++j) {
        const double t = mid + half * gl.x[j];
        const double z = m_.eta + sgn * std::pow(t, b);
        const double lrest =
            (qt_ - 1.0) * std::log(std::abs(z)) + log_gauss(z);
        const double base =
            gl.w[j] * half * b * checked_exp(lrest, "ou kernel weights");
        piece.z.push_back(z);
        // jacobian t^{b-1} times |z - eta|^{lambda/theta} = t leaves t^b;
        // for the creep weight the -eta/(z - eta) factor cancels it exactly.
        piece.wf.push_back(base * std::pow(t, b));
        piece.wc.push_back(base * (-sgn) * m_.eta);
      }
    }
    return piece;
  }

  void append_plain(std::vector<OUPiece>& out, double za,
                    double zb, bool upper) const {
    auto env = [&](double z) { return upper ? env_upper(z) : env_lower(z); };
    OUPiece piece;
    const GaussLegendre& gl = gauss_legendre(p_.gl);
    double a = za;
    int guard = 0;
    while (a < zb - 1e-14 * (std::abs(zb) + 1.0)) {
      if (++guard > 100000)
        throw std::runtime_error("ou kernel: plain panel walk stalled");
      double step = std::min(zb - a, std::max(0.25, 0.25 * m_.eta));
      while (step > 1e-6 && std::abs(env(a + step) - env(a)) > p_.de_step)
        step *= 0.5;
      while (a + 2.0 * step <= zb &&
             std::abs(env(a + 2.0 * step) - env(a)) <= p_.de_step)
        step *= 2.0;
      step = std::min(step, zb - a);
      const double half = 0.5 * step;
      const double mid = a + half;
      for (int j = 0; j < p_.gl; ++j) {
        const double z = mid + half * gl.x[j];
        const double lw = (qt_ - 1.0) * std::log(std::abs(z)) +
                          lt_ * std::log(std::abs(z - m_.eta)) + log_gauss(z);
        const double wf = gl.w[j] * half * checked_exp(lw, "ou kernel weights");
        piece.z.push_back(z);
        piece.wf.push_back(wf);
        piece.wc.push_back(wf * (-m_.eta / (z - m_.eta)));
      }
      a += step;
    }
    out.push_back(std::move(piece));
  }

  const OUJumpModel& m_;
  double q_, xlo_, xhi_;
  RuleParams p_;
  double qt_, lt_;
};

double sum_contour(const std::vector<OUPiece>& pieces, double x,
                   bool creep_weight) {
  CompensatedSum acc;
  for (const auto& piece : pieces) {
    const std::vector<double>& w = creep_weight ? piece.wc : piece.wf;
    for (std::size_t j = 0; j < piece.z.size(); ++j) {
      const double arg = -x * piece.z[j];
      if (!(arg <= 680.0))
        throw std::range_error("ou kernel: e^{-xz} exceeds range");
      acc.add(w[j] * std::exp(arg));
    }
  }
  return acc.value();
}

}  // namespace

OUJumpKernel::OUJumpKernel(const OUJumpModel& m, double q, Interval levels,
                           const OUOptions& opts)
    : m_(m), q_(q), levels_(levels), opts_(opts) {
  validate_model(ProcessModel{m});
  if (!(m.lambda > 0.0))
    throw std::invalid_argument(
        "ou kernel: lambda must be > 0 (for the pure diffusion use the "
        "Sturm-Liouville engine)");
  if (!(q >= q_min())) {
    std::ostringstream os;
    os << "ou kernel: q = " << q << " is below q_min = " << q_min()
       << "; small-q values are only available through extrapolation";
    throw std::invalid_argument(os.str());
  }
  if (!(levels.hi > levels.lo))
    throw std::invalid_argument("ou kernel: empty level range");

  const double pad = 0.05 * levels.width() + 0.01;
  const double xlo = levels.lo - pad, xhi = levels.hi + pad;
  levels_ = {xlo, xhi};

  RuleParams p;
  p.depth = std::min(
      40, std::max(8, 2 + static_cast<int>(std::ceil(std::log2(
                           std::max(m.theta / q, q / m.theta))))));
  p.depth = std::max(
      p.depth, 2 + static_cast<int>(std::ceil(std::log2(std::max(
                       m.theta / m.lambda, m.lambda / m.theta)))));
  p.gl = opts.gl_order;
  p.de_step = 8.0;
  p.margin = opts.exp_margin;

  auto build = [&](const RuleParams& rp) {
    auto r = std::make_shared<detail::OURules>();
    RuleBuilder(m_, q_, xlo, xhi, rp).build(*r);
    return r;
  };

  std::shared_ptr<detail::OURules> cur = build(p);
  for (int pass = 0;; ++pass) {
    RuleParams pr = p;
    pr.depth = p.depth + 1 + pass;
    pr.gl = p.gl + 8 * (pass + 1);
    pr.de_step = p.de_step / (2 << pass);
    pr.margin = p.margin + 10.0 * (pass + 1);
    std::shared_ptr<detail::OURules> ref = build(pr);
    double worst = 0.0;
    for (double x : {xlo, 0.5 * (xlo + xhi), xhi}) {
      auto cmp = [&](const std::vector<OUPiece>& pc, const std::vector<OUPiece>& pr2,
                     bool creep) {
        const double a = sum_contour(pc, x, creep);
        const double b = sum_contour(pr2, x, creep);
        worst = std::max(worst,
                         std::abs(a - b) / std::max(std::abs(b), 1e-280));
      };
      cmp(cur->g1, ref->g1, false);
      cmp(cur->g2, ref->g2, false);
      cmp(cur->g3, ref->g3, false);
      cmp(cur->g1, ref->g1, true);
      cmp(cur->g2, ref->g2, true);
      cmp(cur->g3, ref->g3, true);
    }
    rule_err_ = worst;
    if (worst <= opts.rule_tol) break;
    if (pass + 1 >= opts.max_rule_refine) {
      std::ostringstream os;
      os << "ou kernel: contour rules did not converge (relative gap "
         << worst << " after " << pass + 1 << " refinements)";
      throw std::runtime_error(os.str());
    }
    cur = ref;
    p = pr;
  }
  z2_max_ = cur->z2_max;
  z3_min_ = cur->z3_min;
  rules_ = cur;
}

void OUJumpKernel::check_level(double x) const {
  if (!(x >= levels_.lo && x <= levels_.hi)) {
    std::ostringstream os;
    os << "ou kernel: level " << x << " outside the constructed range ["
       << levels_.lo << ", " << levels_.hi << "]";
    throw std::domain_error(os.str());
  }
}

OUJumpKernel::FCSet OUJumpKernel::eval_raw(const detail::OURules& r, double x) const {
  FCSet s;
  s.f1 = sum_contour(r.g1, x, false);
  s.f2 = sum_contour(r.g2, x, false);
  s.f3 = sum_contour(r.g3, x, false);
  s.c1 = sum_contour(r.g1, x, true);
  s.c2 = sum_contour(r.g2, x, true);
  s.c3 = sum_contour(r.g3, x, true);
  return s;
}

const OUJumpKernel::FCSet& OUJumpKernel::eval(double x) const {
  check_level(x);
  const std::uint64_t key = std::bit_cast<std::uint64_t>(x);
  auto it = cache_.find(key);
  if (it != cache_.end()) return it->second;
  return cache_.emplace(key, eval_raw(*rules_, x)).first->second;
}

void OUJumpKernel::dump_csv(std::ostream& os,
                            const std::vector<double>& levels) const {
  os << "x,F1,F2,F3,C1,C2,C3\n";
  char buf[320];
  for (double x : levels) {
    const FCSet& s = eval(x);
    std::snprintf(buf, sizeof(buf),
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", x, s.f1, s.f2,
                  s.f3, s.c1, s.c2, s.c3);
    os << buf;
  }
}

namespace {

struct Assembled {
  double I1, I2, M, J;
};

Assembled assemble(const OUJumpKernel::FCSet& at,
                   const OUJumpKernel::FCSet& atu, double eta, double s) {
  const double D = atu.c2 * atu.f1 - atu.c1 * atu.f2;
  if (D == 0.0)
    throw std::runtime_error("ou kernel: degenerate creep/jump system");
  Assembled a;
  a.I1 = (atu.c2 * at.f1 - atu.c1 * at.f2) / D;
  a.I2 = (atu.f1 * at.f2 - atu.f2 * at.f1) / D;
  a.M = at.f3 - a.I1 * atu.f3 - a.I2 * atu.c3;
  a.J = a.I1 + a.I2 * eta / (eta + s);
  return a;
}

}  // namespace

OUFirstPassage ou_first_passage(const OUJumpKernel& k, double s, double x,
                                double u, double v) {
  if (!(u < x && x <= v))
    throw std::invalid_argument("ou_first_passage: requires u < x <= v");
  if (!(s >= 0.0)) throw std::invalid_argument("ou_first_passage: s < 0");
  const auto& U = k.eval(u);
  const Assembled ax = assemble(k.eval(x), U, k.model().eta, s);
  const Assembled av = assemble(k.eval(v), U, k.model().eta, s);
  OUFirstPassage out;
  out.I1 = ax.I1;
  out.I2 = ax.I2;
  if (av.M == 0.0)
    throw std::runtime_error("ou_first_passage: vanishing denominator");
  out.B = ax.M / av.M;
  out.C = ax.J - out.B * av.J;
  out.up = k.eval(x).f3 / k.eval(v).f3;
  return out;
}

OUBC ou_b_c(const OUJumpKernel& k, double s, const DrawdownBoundary& f,
            double x, OUDiffDiagnostics* diag) {
  const BoundaryValue bv = boundary_eval(f, x);
  const double u = bv.f;
  double h = std::max(1e-4, 1e-4 * std::abs(x));
  h = std::min(h, 0.125 * (x - u));  // probes must stay above u
  const auto& U = k.eval(u);
  const double eta = k.model().eta;
  const Assembled ax = assemble(k.eval(x), U, eta, s);

  auto probe = [&](double v) {
    const Assembled av = assemble(k.eval(v), U, eta, s);
    if (av.M == 0.0)
      throw std::runtime_error("ou_b_c: vanishing denominator at a probe");
    const double B = ax.M / av.M;
    return std::pair<double, double>{B, ax.J - B * av.J};
  };

  const auto [Bp, Cp] = probe(x + h);
  const auto [Bm, Cm] = probe(x - h);
  const auto [Bp2, Cp2] = probe(x + 0.5 * h);
  const auto [Bm2, Cm2] = probe(x - 0.5 * h);

  const double db1 = (Bp - Bm) / (2.0 * h);
  const double db2 = (Bp2 - Bm2) / h;
  const double dc1 = (Cp - Cm) / (2.0 * h);
  const double dc2 = (Cp2 - Cm2) / h;
  double b = -(4.0 * db2 - db1) / 3.0;
  double c = (4.0 * dc2 - dc1) / 3.0;
  const double b_spread = std::abs(db2 - db1) / std::max(std::abs(b), 1e-6);
  const double c_spread = std::abs(dc2 - dc1) / std::max(std::abs(c), 1e-6);
  if (diag) {
    diag->b_spread = b_spread;
    diag->c_spread = c_spread;
    diag->h = h;
  }
  const double tol = k.options().diff_rel_tol;
  if (b_spread > tol || c_spread > tol) {
    std::ostringstream os;
    os << "ou_b_c: difference step h = " << h
       << " failed the two-step consistency check (spreads " << b_spread
       << ", " << c_spread << ")";
    throw std::runtime_error(os.str());
  }
  auto clamp_nonneg = [](double& v, const char* what) {
    if (v < 0.0) {
      if (v < -1e-5) {
        std::ostringstream os;
        os << what << " came out negative (" << v << ")";
        throw std::runtime_error(os.str());
      }
      v = 0.0;
    }
  };
  clamp_nonneg(b, "ou_b_c: b");
  clamp_nonneg(c, "ou_b_c: c");
  return {b, c};
}

double OUJumpKernel::f3_at(double x) const {
  if (!(x <= levels_.hi)) {
    std::ostringstream os;
    os << "ou kernel: f3_at(" << x << ") above the constructed range top "
       << levels_.hi;
    throw std::domain_error(os.str());
  }
  return sum_contour(rules_->g3, x, false);
}

double ou_jump_convolution(const OUJumpKernel& k, double u, double abs_tol) {
  const double eta = k.model().eta;
  // F3 only needs the built-in upper truncation bound, so very low levels
  // are safe; cap the y-range where e^{-eta y} has fallen far below scale.
  const double Y = 50.0 / eta;
  auto f = [&](double y) { return eta * std::exp(-eta * y) * k.f3_at(u - y); };
  return integrate_adaptive(f, 0.0, Y, abs_tol).value;
}

}  // namespace ddtax
