#pragma once

// Linear outer approximation of the mixed-integer nonlinear model. Bilinear
// terms are lifted into auxiliary columns wrapped in McCormick envelopes,
// squares get supporting tangents from below and a secant from above. The
// envelopes depend on the variable box, so the search tree rebuilds them
// whenever branching narrows a bound.

#include <utility>
#include <vector>

#include "decnet/formulation.hpp"

namespace decnet {

/// Per-variable bounds, the only thing branching changes.
struct Box {
  std::vector<double> lo, hi;

  bool empty() const {
    for (size_t i = 0; i < lo.size(); ++i)
      if (lo[i] > hi[i]) return true;
    return false;
  }
};

Box initial_box(const Formulation& f);

/// Plain linear program over columns 0..n-1 with two-sided variable bounds.
struct LinearProgram {
  int n = 0;
  std::vector<double> lo, hi, obj;
  struct Row {
    std::vector<std::pair<int, double>> coef;
    double rhs = 0;
    bool eq = false;  // otherwise <=
  };
  std::vector<Row> rows;
};

struct Relaxation {
  LinearProgram lp;
  int base_vars = 0;  // columns below this index mirror the catalog order

  /// One auxiliary column per distinct product or square.
  struct Lifted {
    int col;
    VarId a, b;  // b == a marks a square
  };
  std::vector<Lifted> lifted;
};

struct RelaxOptions {
  int tangents = 3;  // supporting lines under each square term
};

Relaxation build_relaxation(const Formulation& f, const Box& box,
                            const RelaxOptions& opts = {});

/// Largest gap between an auxiliary column value and the product it stands
/// for; the spatial branching rule targets the worst one.
struct LiftGap {
  int lifted_index = -1;
  double amount = 0;
};
LiftGap worst_lift_gap(const Relaxation& rel, const std::vector<double>& x);

}  // namespace decnet
