#pragma once

// Exhaustive reference optimizer for tree instances. Every combination of
// technology and renovation grid point is priced through the exact flow
// solvers; on a tree the pipe set is implied, because gas can only reach a
// consumer over the unique source path. Intended as the ground truth the
// global solver is cross-checked against, not as a practical solver.

#include <optional>
#include <string>

#include "decnet/costing.hpp"
#include "decnet/physics.hpp"

namespace decnet {

struct OracleOptions {
  long combo_limit = 1000000;  // refuse larger search spaces
  int threads = 0;             // 0 uses the OpenMP default
  SimulateOptions sim;
};

struct OracleResult {
  bool feasible = false;
  double objective = 0;
  Plan plan;
  // Best objective over combinations whose technology assignment differs
  // from the winner; tells a caller whether the winner is unique.
  std::optional<double> other_tech_objective;
  long evaluated = 0;
  long feasible_count = 0;
  std::string message;
};

OracleResult enumerate_exact(const Instance& inst, const OracleOptions& opts = {});

/// Same search, plain loop. Kept as the reference the parallel kernel is
/// tested and benchmarked against.
OracleResult enumerate_exact_serial(const Instance& inst,
                                    const OracleOptions& opts = {});

}  // namespace decnet
