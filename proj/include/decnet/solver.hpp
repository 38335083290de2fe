#pragma once

// Global solver for the network design model: branch and bound over the
// linear outer approximation. Binary variables are branched to integrality;
// remaining envelope gaps are closed by spatial branching on the factor
// boxes. Nodes whose discrete part is fully fixed are finished exactly by
// the flow solvers instead of another round of relaxations, which both
// tightens the bound to the true value and prices an incumbent.

#include <optional>
#include <string>

#include "decnet/costing.hpp"
#include "decnet/lp.hpp"
#include "decnet/physics.hpp"
#include "decnet/relaxation.hpp"

namespace decnet {

enum class SolveStatus {
  Optimal,             // incumbent proven within gap_tol
  Feasible,            // stopped at a limit with an incumbent
  NodeLimit,           // stopped at a limit without an incumbent
  Infeasible,          // no plan satisfies the constraints
  EmissionInfeasible,  // the emission target alone is unreachable
};

const char* solve_status_name(SolveStatus s);

struct SolveOptions {
  double gap_tol = 1e-6;      // relative optimality gap
  long node_limit = 1000000;  // maximum search nodes
  int threads = 1;            // nodes processed per batch; 1 is serial
  double integrality_tol = 1e-6;
  double lift_gap_tol = 1e-7;  // envelope gap treated as closed
  FormulationOptions formulation;
  RelaxOptions relax;
  LpOptions lp;
  SimulateOptions sim;
};

struct SolveResult {
  SolveStatus status = SolveStatus::NodeLimit;
  std::optional<Plan> plan;
  double objective = 0;       // incumbent cost, when plan is set
  double lower_bound = 0;     // certified bound on the optimal cost
  double root_objective = 0;  // root relaxation value
  long nodes = 0;
  std::string message;

  double gap() const;
};

SolveResult solve(const Instance& inst, const SolveOptions& opts = {});

}  // namespace decnet
