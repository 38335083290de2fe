#pragma once

// Bridges between the three plan representations: the discrete TechChoice
// list, its JSON form used by the CLI, and the full model point checked by
// evaluate_residuals.

#include <string>
#include <vector>

#include "decnet/costing.hpp"
#include "decnet/formulation.hpp"

namespace decnet {

std::string plan_to_json(const Instance& inst, const Plan& plan);
Plan plan_from_json(const Instance& inst, const std::string& text);

/// Expands a simulated and priced plan into a value for every model variable.
PlanPoint assemble_plan(const Instance& inst, const Formulation& f, const Plan& plan,
                        const SimulationResult& sim, const CostBreakdown& cost);

/// Reads the discrete choices back out of a model point, rounding binaries.
Plan plan_from_point(const Instance& inst, const Formulation& f,
                     const std::vector<double>& x);

}  // namespace decnet
