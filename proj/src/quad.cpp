#include "ddtax/quad.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace ddtax {

namespace {

// Abscissae/weights of the 7-15 Gauss-Kronrod pair (positive half).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

}  // namespace

QuadResult gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  double fv[15];
  for (int i = 0; i < 7; ++i) {
    fv[i] = f(c - h * kXgk[i]);
    fv[14 - i] = f(c + h * kXgk[i]);
  }
  fv[7] = f(c);
  double res_k = kWgk[7] * fv[7];
  double res_g = kWg[3] * fv[7];
  for (int i = 0; i < 7; ++i) {
    res_k += kWgk[i] * (fv[i] + fv[14 - i]);
    if (i % 2 == 1) res_g += kWg[i / 2] * (fv[i] + fv[14 - i]);
  }
  QuadResult r;
  r.value = res_k * h;
  // |K - G| is a conservative bound on the Kronrod value's error.
  const double diff = std::abs(res_k - res_g) * std::abs(h);
  r.error = std::max(diff, std::abs(r.value) * 1e-15);
  return r;
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, double a,
                              double b, double abs_tol,
                              std::size_t max_intervals) {
  if (a == b) return {0.0, 0.0};
  struct Seg {
    double a, b;
    QuadResult r;
  };
  std::vector<Seg> stack{{a, b, gk15(f, a, b)}};
  std::vector<Seg> done;
  while (!stack.empty()) {
    Seg s = stack.back();
    stack.pop_back();
    if (s.r.error <= abs_tol || std::abs(s.b - s.a) <
                                    1e-14 * (std::abs(s.a) + std::abs(s.b) + 1.0)) {
      done.push_back(s);
      continue;
    }
    if (done.size() + stack.size() >= max_intervals)
      throw std::runtime_error(
          "integrate_adaptive: interval budget exhausted (integrand may be "
          "divergent or too rough)");
    const double m = 0.5 * (s.a + s.b);
    stack.push_back({s.a, m, gk15(f, s.a, m)});
    stack.push_back({m, s.b, gk15(f, m, s.b)});
  }
  std::sort(done.begin(), done.end(),
            [](const Seg& l, const Seg& r) { return l.a < r.a; });
  CompensatedSum v, e;
  for (const Seg& s : done) {
    v.add(s.r.value);
    e.add(s.r.error);
  }
  return {v.value(), e.value()};
}

CumulativeIntegral::CumulativeIntegral(std::function<double(double)> f,
                                       double a, double b, double abs_tol,
                                       std::size_t max_intervals)
    : f_(std::move(f)), a_(a), b_(b), tol_(abs_tol),
      max_intervals_(max_intervals) {
  if (!(b >= a)) throw std::invalid_argument("CumulativeIntegral: b < a");
  std::vector<double> nodes{a_};
  std::vector<double> sums;
  if (b > a) build(a, b, nodes, sums);
  nodes_ = std::move(nodes);
  prefix_.resize(nodes_.size());
  CompensatedSum acc;
  prefix_[0] = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    acc.add(sums[i]);
    prefix_[i + 1] = acc.value();
  }
}

void CumulativeIntegral::build(double lo, double hi, std::vector<double>& nodes,
                               std::vector<double>& sums) const {
  QuadResult r = gk15(f_, lo, hi);
  if (r.error <= tol_ ||
      std::abs(hi - lo) < 1e-14 * (std::abs(lo) + std::abs(hi) + 1.0)) {
    nodes.push_back(hi);
    sums.push_back(r.value);
    return;
  }
  if (nodes.size() >= max_intervals_)
    throw std::runtime_error(
        "CumulativeIntegral: interval budget exhausted (integrand may be "
        "divergent near an endpoint)");
  const double m = 0.5 * (lo + hi);
  build(lo, m, nodes, sums);
  build(m, hi, nodes, sums);
}

double CumulativeIntegral::eval(double y) const {
  const double slack = 1e-12 * (std::abs(a_) + std::abs(b_) + 1.0);
  if (y < a_ - slack || y > b_ + slack)
    throw std::domain_error("CumulativeIntegral::eval: point outside range");
  y = std::clamp(y, a_, b_);
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), y);
  std::size_t i = static_cast<std::size_t>(it - nodes_.begin());
  if (i == 0) return 0.0;
  --i;
  if (i + 1 >= nodes_.size()) return prefix_.back();
  if (y == nodes_[i]) return prefix_[i];
  return prefix_[i] + gk15(f_, nodes_[i], y).value;
}

void CumulativeIntegral::extend(double new_b) {
  if (new_b <= b_) return;
  std::vector<double> nodes{b_};
  std::vector<double> sums;
  build(b_, new_b, nodes, sums);
  CompensatedSum acc;
  // Resume compensation from the stored tail value; adequate because the
  // extension pieces are themselves compensated.
  double base = prefix_.back();
  for (std::size_t i = 0; i < sums.size(); ++i) {
    acc.add(sums[i]);
    nodes_.push_back(nodes[i + 1]);
    prefix_.push_back(base + acc.value());
  }
  b_ = new_b;
}

const GaussLegendre& gauss_legendre(int n) {
  static std::map<int, GaussLegendre> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1 || n > 512) throw std::invalid_argument("gauss_legendre: bad n");
  GaussLegendre gl;
  gl.x.resize(n);
  gl.w.resize(n);
  const int m = (n + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Chebyshev-based initial guess, Newton iteration on P_n.
    double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    gl.x[i] = -z;
    gl.x[n - 1 - i] = z;
    gl.w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
    gl.w[n - 1 - i] = gl.w[i];
  }
  return cache.emplace(n, std::move(gl)).first->second;
}

double newton_bisect(const std::function<double(double)>& f,
                     const std::function<double(double)>& df, double lo,
                     double hi, double rel_tol, int max_iter) {
  double flo = f(lo);
  const double fhi0 = f(hi);
  if (flo == 0.0) return lo;
  if (fhi0 == 0.0) return hi;
  if ((flo > 0) == (fhi0 > 0))
    throw std::invalid_argument("newton_bisect: endpoints do not bracket");
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < max_iter; ++it) {
    double fx = f(x);
    if (fx == 0.0) return x;
    if ((fx > 0) == (flo > 0)) {
      lo = x;
      flo = fx;
    } else {
      hi = x;
    }
    double d = df(x);
    double xn = d != 0.0 ? x - fx / d : 0.5 * (lo + hi);
    if (!(xn > lo && xn < hi)) xn = 0.5 * (lo + hi);
    const double scale = std::max({std::abs(lo), std::abs(hi), 1.0});
    if (std::abs(xn - x) <= rel_tol * scale || hi - lo <= rel_tol * scale)
      return xn;
    x = xn;
  }
  return x;
}

double brent_root(const std::function<double(double)>& f, double lo, double hi,
                  double rel_tol, int max_iter) {
  double a = lo, b = hi, fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if ((fa > 0) == (fb > 0))
    throw std::invalid_argument("brent_root: endpoints do not bracket");
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < max_iter; ++it) {
    if (std::abs(fc) < std::abs(fb)) {
      a = b; b = c; c = a;
      fa = fb; fb = fc; fc = fa;
    }
    double scale = std::max({std::abs(b), std::abs(c), 1.0});
    double tol = 2.0 * rel_tol * scale;
    double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) < tol || std::abs(fa) <= std::abs(fb)) {
      d = m; e = m;
    } else {
      double s = fb / fa, p, q;
      if (a == c) {
        p = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        double r = fb / fc, t = fa / fc;
        p = s * (2.0 * m * t * (t - r) - (b - a) * (r - 1.0));
        q = (t - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0) q = -q; else p = -p;
      if (2.0 * p < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d; d = p / q;
      } else {
        d = m; e = m;
      }
    }
    a = b; fa = fb;
    b += std::abs(d) > tol ? d : (m > 0 ? tol : -tol);
    fb = f(b);
    if ((fb > 0) == (fc > 0)) {
      c = a; fc = fa; d = b - a; e = d;
    }
  }
  return b;
}

DerivResult central_derivative(const std::function<double(double)>& f, double x,
                               double h) {
  const double d1 = (f(x + h) - f(x - h)) / (2.0 * h);
  const double h2 = 0.5 * h;
  const double d2 = (f(x + h2) - f(x - h2)) / (2.0 * h2);
  DerivResult r;
  r.value = (4.0 * d2 - d1) / 3.0;
  r.rel_spread = std::abs(d2 - d1) / std::max(std::abs(r.value), 1e-12);
  return r;
}

}  // namespace ddtax
