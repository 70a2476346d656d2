// Monte Carlo oracle for the analytic functionals.  Paths are simulated on a
// dt-grid unioned with the exact jump times (jumps land on nodes, so jump
// crossings and their deficits are exact); between nodes Brownian-bridge
// weights account for unseen diffusive crossings of the drawdown boundary
// and unseen touches of the upper target.  Per-path contributions are
// reduced serially in path order, so the result is independent of the
// worker count, bit for bit.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ddtax/model.hpp"

namespace ddtax {

struct McConfig {
  std::uint64_t seed = 1;
  std::size_t n_paths = 100000;
  double dt = 1e-4;
  double t_max = 50.0;   // horizon cap; leftover alive weight is reported
  bool parallel = true;  // false selects the serial reference loop
  int jobs = 0;          // OpenMP worker cap; <= 0 takes the runtime default
};

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

struct McFunctionals {
  McEstimate g;          // e^{-q t} on reaching the upper target first
  McEstimate h;          // e^{-q t - s Y} on crossing first, max <= target
  McEstimate epv;        // discounted tax stream until either stop
  McEstimate epv_upper;  // tax stream credited only on completed up-exits
  double unresolved = 0.0;  // mean discounted weight still alive at t_max
  std::size_t n = 0;
};

// With a tax schedule the boundary applies to the taxed process and K to the
// taxed maximum; both are mapped to the latent scale exactly, so the walker
// never approximates the tax accounting itself.
McFunctionals mc_functionals(const ProcessModel& m, const DrawdownBoundary& f,
                             const TaxSchedule& tax, const FunctionalQuery& fq,
                             const McConfig& cfg);

struct PathwiseReport {
  std::size_t paths = 0;      // resolved paths inspected
  std::size_t unresolved = 0; // hit t_max before any verdict
  std::size_t violations = 0;
  std::string first_issue;
};

// Discrete-path identities that hold exactly at node granularity (no
// tolerance beyond explicit 1-ulp tie handling):
//  - boundary-freezing sandwich: against the frozen barriers f(x) and
//    f(x + eps), the crossing of the moving barrier f(max) is bracketed
//    node-by-node until the maximum first exceeds x + eps;
//  - definitional recomputation of every first-passage index;
//  - the taxed walk agrees with the latent walk: taxed max target and
//    taxed drawdown pull back to the exact latent threshold and boundary.
PathwiseReport check_pathwise(const ProcessModel& m, const DrawdownBoundary& f,
                              const TaxSchedule& tax, double x, double K,
                              const McConfig& cfg);

}  // namespace ddtax
