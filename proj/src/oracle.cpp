#include "decnet/oracle.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "plan_eval.hpp"

namespace decnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// The renovation grid: nothing, first stage only, both stages.
constexpr int kRenoGrid = 3;
constexpr double kGridX1[kRenoGrid] = {0.0, 1.0, 1.0};
constexpr double kGridX2[kRenoGrid] = {0.0, 0.0, 1.0};

struct Enumeration {
  std::vector<int> heat_arcs;
  std::vector<int> parent_arc;  // per node, arc toward the source, -1 at root
  long combos = 0;
};

bool prepare(const Instance& inst, const OracleOptions& opts, Enumeration& en,
             std::string& message) {
  if (!inst.is_tree) {
    message = "exhaustive search requires a tree network";
    return false;
  }
  if (inst.options.cable_sizing || inst.options.pipe_sizing) {
    message = "exhaustive search does not cover sizing catalogs";
    return false;
  }
  for (int e = 0; e < inst.arc_count(); ++e)
    if (inst.arcs[e].has_heat()) en.heat_arcs.push_back(e);

  double space = 1;
  for (size_t k = 0; k < en.heat_arcs.size(); ++k) space *= 3 * kRenoGrid;
  if (space > static_cast<double>(opts.combo_limit)) {
    message = "search space exceeds combo_limit";
    return false;
  }
  en.combos = static_cast<long>(space);

  // Arc toward the source for every node, by walking out from node 0.
  en.parent_arc.assign(inst.node_count, -1);
  std::vector<char> seen(inst.node_count, 0);
  std::vector<int> stack = {0};
  seen[0] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    auto visit = [&](int e, int w) {
      if (!seen[w]) {
        seen[w] = 1;
        en.parent_arc[w] = e;
        stack.push_back(w);
      }
    };
    for (int e : inst.out_arcs[v]) visit(e, inst.arcs[e].j);
    for (int e : inst.in_arcs[v]) visit(e, inst.arcs[e].i);
  }
  return true;
}

/// Decodes a combination index into a plan; pipes follow from gas demand.
Plan decode(const Instance& inst, const Enumeration& en, long combo) {
  Plan plan(inst.arc_count());
  std::vector<char> pipe(inst.arc_count(), 0);
  auto need_gas_at = [&](int node) {
    for (int e = en.parent_arc[node]; e >= 0;) {
      pipe[e] = 1;
      int up = inst.arcs[e].i;
      // parent_arc stores the arc, not its orientation; step to whichever
      // endpoint is closer to the source.
      e = en.parent_arc[up] == e ? en.parent_arc[inst.arcs[e].j] : en.parent_arc[up];
    }
  };
  for (int e : en.heat_arcs) {
    Tech t = static_cast<Tech>(combo % 3);
    combo /= 3;
    int g = static_cast<int>(combo % kRenoGrid);
    combo /= kRenoGrid;
    plan[e].tech = t;
    plan[e].x1 = kGridX1[g];
    plan[e].x2 = kGridX2[g];
    if (inst.arcs[e].demand.sgl(t) > 0 || inst.arcs[e].demand.mgl(t) > 0) {
      need_gas_at(inst.arcs[e].i);
      need_gas_at(inst.arcs[e].j);
    }
  }
  for (int e = 0; e < inst.arc_count(); ++e) plan[e].pipe = pipe[e] != 0;
  return plan;
}

std::vector<int> tech_key(const Instance& inst, const Plan& plan) {
  std::vector<int> key;
  key.reserve(plan.size());
  for (size_t e = 0; e < plan.size(); ++e)
    key.push_back(plan[e].tech ? static_cast<int>(*plan[e].tech) : -1);
  (void)inst;
  return key;
}

struct Candidate {
  double obj = kInf;
  long combo = -1;
  std::vector<int> key;

  bool better_than(const Candidate& o) const {
    if (obj != o.obj) return obj < o.obj;
    return combo < o.combo;  // deterministic tie-break
  }
};

/// Best and best-with-a-different-technology, a two-entry leaderboard.
struct Partial {
  Candidate first, second;
  long evaluated = 0, feasible = 0;

  void offer(const Candidate& c) {
    if (c.better_than(first)) {
      if (first.combo >= 0 && first.key != c.key) second = first;
      first = c;
    } else if (first.key != c.key && c.better_than(second)) {
      second = c;
    }
  }

  void merge(const Partial& o) {
    evaluated += o.evaluated;
    feasible += o.feasible;
    if (o.first.combo >= 0) offer(o.first);
    if (o.second.combo >= 0) offer(o.second);
  }
};

Partial evaluate_range(const Instance& inst, const Enumeration& en,
                       const OracleOptions& opts, long lo, long hi) {
  Partial part;
  for (long c = lo; c < hi; ++c) {
    Plan plan = decode(inst, en, c);
    detail::PlanPrice price = detail::price_plan(inst, plan, opts.sim);
    ++part.evaluated;
    if (!price.feasible) continue;
    ++part.feasible;
    part.offer(Candidate{price.objective, c, tech_key(inst, plan)});
  }
  return part;
}

OracleResult finish(const Instance& inst, const Enumeration& en,
                    const Partial& part) {
  OracleResult out;
  out.evaluated = part.evaluated;
  out.feasible_count = part.feasible;
  if (part.first.combo < 0) {
    out.message = "no combination passes the flow and emission checks";
    return out;
  }
  out.feasible = true;
  out.objective = part.first.obj;
  out.plan = decode(inst, en, part.first.combo);
  if (part.second.combo >= 0) out.other_tech_objective = part.second.obj;
  return out;
}

}  // namespace

OracleResult enumerate_exact_serial(const Instance& inst,
                                    const OracleOptions& opts) {
  Enumeration en;
  OracleResult out;
  if (!prepare(inst, opts, en, out.message)) return out;
  return finish(inst, en, evaluate_range(inst, en, opts, 0, en.combos));
}

OracleResult enumerate_exact(const Instance& inst, const OracleOptions& opts) {
  Enumeration en;
  OracleResult out;
  if (!prepare(inst, opts, en, out.message)) return out;

  int nthreads = opts.threads > 0 ? opts.threads : omp_get_max_threads();
  nthreads = std::max<int>(1, static_cast<int>(std::min<long>(nthreads, en.combos)));
  std::vector<Partial> parts(nthreads);
#pragma omp parallel for schedule(static) num_threads(nthreads)
  for (int t = 0; t < nthreads; ++t) {
    long chunk = (en.combos + nthreads - 1) / nthreads;
    long lo = t * chunk, hi = std::min(en.combos, lo + chunk);
    if (lo < hi) parts[t] = evaluate_range(inst, en, opts, lo, hi);
  }
  Partial total;
  for (const Partial& p : parts) total.merge(p);
  return finish(inst, en, total);
}

}  // namespace decnet
