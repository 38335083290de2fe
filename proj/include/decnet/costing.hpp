#pragma once

// Yearly energy bookkeeping and the cost model evaluated directly on a plan,
// independent of the optimization model. Used to price incumbents and to
// cross-check model points.

#include "decnet/physics.hpp"

namespace decnet {

struct YearlyLoads {
  double s0_Esum = 0;     // purchased electricity over the year
  double s0_Gsum = 0;     // purchased gas over the year
  double s_chp_Esum = 0;  // electricity self-produced by CHP units
};

YearlyLoads yearly_loads(const Instance& inst, const Plan& plan);

struct CostBreakdown {
  double energy = 0;
  double tax = 0;
  double allocation = 0;  // priced on the peak injections
  double grid = 0;        // pipe construction
  double grid_e = 0;      // cable construction, only with cable sizing
  double tech = 0;
  double renovation = 0;
  double emission = 0;    // yearly CO2, reported alongside but not a cost

  double total() const {
    return energy + tax + allocation + grid + grid_e + tech + renovation;
  }
};

/// Prices a plan. Peak-driven terms use the flow solution in `sim`.
CostBreakdown evaluate_cost(const Instance& inst, const Plan& plan,
                            const SimulationResult& sim);

/// Smallest yearly emission any technology and renovation choice can reach,
/// ignoring all other constraints. A target below this value is unreachable.
double emission_floor(const Instance& inst);

}  // namespace decnet
