#pragma once

// Self-contained linear programming solver for the relaxations: a bounded
// variable revised simplex with a two-phase start, eta-file basis updates and
// periodic refactorization. Deterministic by construction.

#include "decnet/relaxation.hpp"

namespace decnet {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit, Breakdown };

const char* lp_status_name(LpStatus s);

struct LpOptions {
  double tol = 1e-9;        // reduced-cost and pivot tolerances
  int max_iter = 200000;
  int refactor_every = 64;  // basis updates between refactorizations
};

struct LpSolution {
  LpStatus status = LpStatus::Breakdown;
  std::vector<double> x;         // structural column values
  double objective = 0;
  int iterations = 0;
  double max_infeasibility = 0;  // worst row or bound violation at the end
};

LpSolution solve_lp(const LinearProgram& lp, const LpOptions& opts = {});

}  // namespace decnet
