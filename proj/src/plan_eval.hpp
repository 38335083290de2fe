#pragma once

// Shared pricing path for a fully decided plan: run the flow solvers, check
// operating limits and the emission cap, and produce the yearly cost. The
// exhaustive search and the exact node fathoming in the solver must agree on
// these semantics, so they both call this.

#include <string>

#include "decnet/costing.hpp"
#include "decnet/physics.hpp"

namespace decnet::detail {

struct PlanPrice {
  bool feasible = false;
  double objective = 0;
  CostBreakdown cost;
  SimulationResult sim;
  std::string reason;
};

inline PlanPrice price_plan(const Instance& inst, const Plan& plan,
                            const SimulateOptions& opts) {
  PlanPrice out;
  out.sim = simulate(inst, plan, opts);
  if (!out.sim.feasible) {
    out.reason = out.sim.violations.empty() ? "flow solve failed"
                                            : out.sim.violations.front();
    return out;
  }
  out.cost = evaluate_cost(inst, plan, out.sim);
  double cap = inst.costs.E_target;
  if (out.cost.emission > cap + 1e-9 * std::max(1.0, std::abs(cap))) {
    out.reason = "emission cap exceeded";
    return out;
  }
  out.feasible = true;
  out.objective = out.cost.total();
  return out;
}

}  // namespace decnet::detail
