#include "ddtax/engine.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <utility>
#include <variant>

#include "ddtax/levy.hpp"
#include "ddtax/quad.hpp"

namespace ddtax {

namespace {

std::function<double(double)> memoized(std::function<double(double)> f) {
  auto cache = std::make_shared<std::unordered_map<std::uint64_t, double>>();
  return [f = std::move(f), cache](double z) {
    const auto key = std::bit_cast<std::uint64_t>(z);
    if (auto it = cache->find(key); it != cache->end()) return it->second;
    const double v = f(z);
    cache->emplace(key, v);
    return v;
  };
}

void check_rates(double q, double s) {
  if (!(q >= 0.0) || !std::isfinite(q))
    throw std::invalid_argument("exit params: q must be finite and >= 0");
  if (!(s >= 0.0) || !std::isfinite(s))
    throw std::invalid_argument("exit params: s must be finite and >= 0");
}

std::string tag(const ProcessModel& m, const DrawdownBoundary& f, double q,
                double s) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), " q=%g s=%g", q, s);
  return model_label(m) + " / " + boundary_label(f) + buf;
}

[[noreturn]] void throw_negative_exponent(const ExitParams& p, double t,
                                          double cap) {
  std::ostringstream os;
  os << "drawdown engine: hazard integral " << t
     << " is negative beyond the cap " << cap << " for " << p.provenance;
  throw std::range_error(os.str());
}

}  // namespace

EngineResult exit_transform(const ExitParams& p, double x, double K,
                            const EngineConfig& cfg) {
  if (!std::isfinite(x) || !std::isfinite(K) || !(K >= x))
    throw std::invalid_argument("exit_transform: requires finite x <= K");
  EngineResult r;
  r.extrapolated = p.extrapolated;
  if (K == x) {
    r.value = 1.0;
    return r;
  }
  CumulativeIntegral I(p.b, x, K, cfg.abs_tol);
  const double T = I.total();
  if (-T > cfg.exp_cap) throw_negative_exponent(p, T, cfg.exp_cap);
  r.value = std::exp(-T);
  r.quad_error = r.value * cfg.abs_tol;
  return r;
}

namespace {

EngineResult law_finite(const ExitParams& p, double x, double K,
                        const EngineConfig& cfg) {
  EngineResult r;
  r.extrapolated = p.extrapolated;
  CumulativeIntegral I(p.b, x, K, cfg.abs_tol);
  auto integrand = [&](double y) {
    const double e = I.eval(y);
    if (-e > cfg.exp_cap) throw_negative_exponent(p, e, cfg.exp_cap);
    return std::exp(-e) * p.c(y);
  };
  const QuadResult qr = integrate_adaptive(integrand, x, K, cfg.abs_tol);
  r.value = qr.value;
  r.quad_error = qr.error;
  return r;
}

EngineResult law_open_ended(const ExitParams& p, double x,
                            const EngineConfig& cfg) {
  EngineResult r;
  r.extrapolated = p.extrapolated;
  double span = std::max(1.0, 0.5 * std::abs(x));
  double lo = x, hi = x + span;
  CumulativeIntegral I(p.b, x, hi, cfg.abs_tol);
  CompensatedSum total;
  double err = 0.0, prev_T = 0.0, prev_dI = -1.0;
  for (int it = 0; it <= cfg.max_doublings; ++it) {
    if (it > 0) I.extend(hi);
    auto integrand = [&](double y) {
      const double e = I.eval(y);
      if (-e > cfg.exp_cap) throw_negative_exponent(p, e, cfg.exp_cap);
      return std::exp(-e) * p.c(y);
    };
    const QuadResult qr = integrate_adaptive(integrand, lo, hi, cfg.abs_tol);
    total.add(qr.value);
    err += qr.error;
    // Whatever lands beyond hi must first reach hi (factor e^{-I}) and then
    // cross before the hazard integral stops growing; geometric decay of the
    // per-segment hazard growth bounds that second factor.
    const double T = I.total();
    const double dI = T - prev_T;
    double tail = std::exp(-std::min(T, 745.0));
    if (prev_dI > 0.0 && dI < 0.95 * prev_dI && dI >= 0.0) {
      const double rho = dI / prev_dI;
      tail *= std::min(1.0, dI * rho / (1.0 - rho));
    }
    if (tail < cfg.tail_tol * std::max(1.0, std::abs(total.value()))) {
      r.value = total.value();
      r.quad_error = err + tail;
      return r;
    }
    prev_T = T;
    prev_dI = dI;
    lo = hi;
    span *= 2.0;
    hi += span;
  }
  std::ostringstream os;
  os << "drawdown law: open-ended tail did not close after "
     << cfg.max_doublings << " range doublings for " << p.provenance
     << " (the boundary hazard decays too slowly)";
  throw std::runtime_error(os.str());
}

}  // namespace

EngineResult drawdown_law(const ExitParams& p, double x, double K,
                          const EngineConfig& cfg) {
  if (!std::isfinite(x) || std::isnan(K) || !(K >= x))
    throw std::invalid_argument("drawdown_law: requires x <= K (K may be inf)");
  if (K == x) return {0.0, 0.0, p.extrapolated};
  if (std::isfinite(K)) return law_finite(p, x, K, cfg);
  return law_open_ended(p, x, cfg);
}

EngineResult drawdown_density(const ExitParams& p, double x, double K,
                              const EngineConfig& cfg) {
  if (!std::isfinite(x) || !std::isfinite(K) || !(K >= x))
    throw std::invalid_argument("drawdown_density: requires finite x <= K");
  EngineResult r;
  r.extrapolated = p.extrapolated;
  const double cK = p.c(K);
  if (K == x) {
    r.value = cK;
    return r;
  }
  CumulativeIntegral I(p.b, x, K, cfg.abs_tol);
  const double T = I.total();
  if (-T > cfg.exp_cap) throw_negative_exponent(p, T, cfg.exp_cap);
  r.value = std::exp(-T) * cK;
  r.quad_error = std::abs(r.value) * cfg.abs_tol;
  return r;
}

namespace {

void check_grid(double x, const std::vector<double>& Ks) {
  if (Ks.empty()) throw std::invalid_argument("level grid is empty");
  double prev = x;
  for (double K : Ks) {
    if (!std::isfinite(K) || !(K >= prev))
      throw std::invalid_argument(
          "level grid must be finite, ascending and >= x");
    prev = K;
  }
}

}  // namespace

std::vector<EngineResult> exit_transform_curve(const ExitParams& p, double x,
                                               const std::vector<double>& Ks,
                                               const EngineConfig& cfg) {
  check_grid(x, Ks);
  std::vector<EngineResult> out(Ks.size());
  if (Ks.back() == x) {
    for (auto& r : out) r = {1.0, 0.0, p.extrapolated};
    return out;
  }
  CumulativeIntegral I(p.b, x, Ks.back(), cfg.abs_tol);
  for (std::size_t i = 0; i < Ks.size(); ++i) {
    const double T = I.eval(Ks[i]);
    if (-T > cfg.exp_cap) throw_negative_exponent(p, T, cfg.exp_cap);
    out[i] = {std::exp(-T), std::exp(-T) * cfg.abs_tol, p.extrapolated};
  }
  return out;
}

std::vector<EngineResult> drawdown_law_curve(const ExitParams& p, double x,
                                             const std::vector<double>& Ks,
                                             const EngineConfig& cfg) {
  check_grid(x, Ks);
  std::vector<EngineResult> out(Ks.size());
  if (Ks.back() == x) {
    for (auto& r : out) r = {0.0, 0.0, p.extrapolated};
    return out;
  }
  CumulativeIntegral I(p.b, x, Ks.back(), cfg.abs_tol);
  auto integrand = [&](double y) {
    const double e = I.eval(y);
    if (-e > cfg.exp_cap) throw_negative_exponent(p, e, cfg.exp_cap);
    return std::exp(-e) * p.c(y);
  };
  CompensatedSum acc;
  double err = 0.0, lo = x;
  for (std::size_t i = 0; i < Ks.size(); ++i) {
    if (Ks[i] > lo) {
      const QuadResult qr = integrate_adaptive(integrand, lo, Ks[i], cfg.abs_tol);
      acc.add(qr.value);
      err += qr.error;
      lo = Ks[i];
    }
    out[i] = {acc.value(), err, p.extrapolated};
  }
  return out;
}

namespace {

// Coarse rounding of the needed lower level so kernels and diffusion grids
// are shared across boundaries with similar extents.
double floor_grid(double v, double step) {
  return step * std::floor(v / step);
}

ParamsFactory levy_factory(const LevyModel& lm) {
  return [lm](const DrawdownBoundary& f, double q, double s) {
    check_rates(q, s);
    auto ls = std::make_shared<LevyScale>(lm, q, s);
    ExitParams p;
    p.provenance = tag(ProcessModel{lm}, f, q, s);
    p.b = memoized([ls, f](double z) { return levy_b(*ls, f, z); });
    p.c = memoized([ls, f](double z) { return levy_c(*ls, f, z); });
    return p;
  };
}

ParamsFactory diffusion_factory(const DiffusionModel& dmodel, Interval working,
                                const SLOptions& sl) {
  auto dm = std::make_shared<const DiffusionModel>(dmodel);
  using Key = std::pair<std::uint64_t, long long>;
  auto cache =
      std::make_shared<std::map<Key, std::shared_ptr<const SLSolution>>>();
  return [dm, working, sl, cache](const DrawdownBoundary& f, double q,
                                  double s) {
    check_rates(q, s);
    (void)s;  // paths are continuous: zero overshoot, the tilt drops out
    const double lo_req = std::min(working.lo, boundary_floor(f, working.lo));
    const double step = std::max(0.25, 0.01 * working.width());
    const double lo = floor_grid(lo_req, step);
    const Key key{std::bit_cast<std::uint64_t>(q),
                  static_cast<long long>(std::llround(lo / step))};
    std::shared_ptr<const SLSolution> sol;
    if (auto it = cache->find(key); it != cache->end()) {
      sol = it->second;
    } else {
      sol = std::make_shared<const SLSolution>(
          solve_phi(*dm, q, {lo, working.hi}, sl));
      cache->emplace(key, sol);
    }
    ExitParams p;
    p.provenance = tag(ProcessModel{*dm}, f, q, s);
    p.b = memoized([sol, f](double z) { return diffusion_b(*sol, f, z); });
    p.c = memoized([sol, f](double z) { return diffusion_c(*sol, f, z); });
    return p;
  };
}

ParamsFactory oujump_factory(const OUJumpModel& om, Interval working,
                             const OUOptions& ou) {
  using Key = std::pair<std::uint64_t, long long>;
  auto cache =
      std::make_shared<std::map<Key, std::shared_ptr<const OUJumpKernel>>>();
  return [om, working, ou, cache](const DrawdownBoundary& f, double q,
                                  double s) {
    check_rates(q, s);
    const double qmin = ou.qmin_factor * om.theta;
    const double lo_req = std::min(working.lo, boundary_floor(f, working.lo));
    const double step = std::max(0.25, 0.01 * working.width());
    const double lo = floor_grid(lo_req, step);
    auto kernel_at = [&](double qq) {
      const Key key{std::bit_cast<std::uint64_t>(qq),
                    static_cast<long long>(std::llround(lo / step))};
      if (auto it = cache->find(key); it != cache->end()) return it->second;
      auto k = std::make_shared<const OUJumpKernel>(
          om, qq, Interval{lo, working.hi}, ou);
      cache->emplace(key, k);
      return std::shared_ptr<const OUJumpKernel>(k);
    };
    ExitParams p;
    p.provenance = tag(ProcessModel{om}, f, q, s);
    if (q == 0.0) {
      // Richardson step towards q = 0 from the two smallest usable rates.
      auto k1 = kernel_at(qmin);
      auto k2 = kernel_at(2.0 * qmin);
      auto pair_cache =
          std::make_shared<std::unordered_map<std::uint64_t, OUBC>>();
      auto get = [k1, k2, f, s, pair_cache](double z) {
        const auto key = std::bit_cast<std::uint64_t>(z);
        if (auto it = pair_cache->find(key); it != pair_cache->end())
          return it->second;
        const OUBC v1 = ou_b_c(*k1, s, f, z);
        const OUBC v2 = ou_b_c(*k2, s, f, z);
        const OUBC v{std::max(0.0, 2.0 * v1.b - v2.b),
                     std::max(0.0, 2.0 * v1.c - v2.c)};
        pair_cache->emplace(key, v);
        return v;
      };
      p.b = [get](double z) { return get(z).b; };
      p.c = [get](double z) { return get(z).c; };
      p.extrapolated = true;
      return p;
    }
    if (q < qmin) {
      std::ostringstream os;
      os << "mean-reverting jump model: q = " << q
         << " lies in (0, q_min = " << qmin
         << "); evaluate at q >= q_min, or at q = 0 exactly (served by "
            "extrapolation)";
      throw std::invalid_argument(os.str());
    }
    auto k = kernel_at(q);
    auto pair_cache =
        std::make_shared<std::unordered_map<std::uint64_t, OUBC>>();
    auto get = [k, f, s, pair_cache](double z) {
      const auto key = std::bit_cast<std::uint64_t>(z);
      if (auto it = pair_cache->find(key); it != pair_cache->end())
        return it->second;
      const OUBC v = ou_b_c(*k, s, f, z);
      pair_cache->emplace(key, v);
      return v;
    };
    p.b = [get](double z) { return get(z).b; };
    p.c = [get](double z) { return get(z).c; };
    return p;
  };
}

}  // namespace

ParamsFactory make_params_factory(const ProcessModel& m, Interval working,
                                  const FactoryOptions& fo) {
  validate_model(m);
  if (!(working.hi > working.lo))
    throw std::invalid_argument("make_params_factory: empty working interval");
  if (const auto* lm = std::get_if<LevyModel>(&m)) return levy_factory(*lm);
  if (const auto* dm = std::get_if<DiffusionModel>(&m))
    return diffusion_factory(*dm, working, fo.sl);
  return oujump_factory(std::get<OUJumpModel>(m), working, fo.ou);
}

ExitParams make_params(const ProcessModel& m, const DrawdownBoundary& f,
                       double q, double s, Interval working,
                       const FactoryOptions& fo) {
  return make_params_factory(m, working, fo)(f, q, s);
}

}  // namespace ddtax
