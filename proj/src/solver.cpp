#include "decnet/solver.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "decnet/plan.hpp"
#include "plan_eval.hpp"

namespace decnet {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct QNode {
  Box box;
  double bound = -kInf;
  long seq = 0;
};

struct QNodeOrder {
  bool operator()(const QNode& a, const QNode& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // smallest bound first
    return a.seq > b.seq;
  }
};

struct Candidate {
  Plan plan;
  double objective = kInf;
};

struct Outcome {
  double bound = kInf;  // certified bound for the subtree when pruned
  std::optional<Candidate> cand;
  std::vector<Box> children;
  double child_bound = -kInf;
  bool solved_lp = false;
  double lp_objective = 0;
};

class BranchAndBound {
 public:
  BranchAndBound(const Instance& inst, const SolveOptions& opts)
      : inst_(inst), opts_(opts), f_(build_formulation(inst, opts.formulation)) {
    const auto& cat = f_.catalog;
    for (VarId v = 0; v < cat.size(); ++v)
      if (cat.info(v).kind == VarKind::Binary) binary_.push_back(v);
    rank_.assign(cat.size(), 5);
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const ArcVars& av = cat.arc[e];
      for (int t = 0; t < 3; ++t) {
        if (av.x[t] != kNoVar) rank_[av.x[t]] = 0;
        if (av.z[t] != kNoVar) rank_[av.z[t]] = 2;
        if (av.x1[t] != kNoVar) rank_[av.x1[t]] = 3;
        if (av.x2[t] != kNoVar) rank_[av.x2[t]] = 3;
      }
      rank_[av.y_g] = 1;
      rank_[av.y_gp] = 4;
      rank_[av.y_gm] = 4;
    }
  }

  SolveResult run() {
    SolveResult res;
    if (emission_floor(inst_) >
        inst_.costs.E_target +
            1e-9 * std::max(1.0, std::abs(inst_.costs.E_target))) {
      res.status = SolveStatus::EmissionInfeasible;
      res.lower_bound = kInf;
      res.message = "the emission target is below the reachable minimum";
      return res;
    }

    std::priority_queue<QNode, std::vector<QNode>, QNodeOrder> open;
    open.push(QNode{initial_box(f_), -kInf, next_seq_++});

    int threads = std::max(1, opts_.threads);
    double ub = kInf;
    std::optional<Candidate> best;
    bool cut_used = false;
    bool root_seen = false;
    long processed = 0;

    while (!open.empty() && processed < opts_.node_limit) {
      double cutoff = ub < kInf ? ub - opts_.gap_tol * std::max(1.0, std::abs(ub))
                                : kInf;
      std::vector<QNode> batch;
      while (static_cast<int>(batch.size()) < threads && !open.empty() &&
             processed + static_cast<long>(batch.size()) < opts_.node_limit) {
        QNode n = open.top();
        open.pop();
        if (n.bound >= cutoff) {
          cut_used = true;
          continue;
        }
        batch.push_back(std::move(n));
      }
      if (batch.empty()) continue;

      std::vector<Outcome> out(batch.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads) if (threads > 1)
      for (int i = 0; i < static_cast<int>(batch.size()); ++i)
        out[i] = process(batch[i], cutoff);

      processed += static_cast<long>(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) {
        if (batch[i].seq == 0 && out[i].solved_lp) {
          res.root_objective = out[i].lp_objective;
          root_seen = true;
        }
        if (out[i].cand && out[i].cand->objective < ub) {
          ub = out[i].cand->objective;
          best = out[i].cand;
        }
        if (out[i].children.empty() && out[i].bound < kInf && out[i].bound >= cutoff)
          cut_used = true;
        for (Box& child : out[i].children)
          open.push(QNode{std::move(child), out[i].child_bound, next_seq_++});
      }
    }

    res.nodes = processed;
    if (best) {
      res.plan = best->plan;
      res.objective = best->objective;
    }
    if (open.empty() && processed <= opts_.node_limit) {
      if (best) {
        res.status = SolveStatus::Optimal;
        res.lower_bound =
            cut_used ? ub - opts_.gap_tol * std::max(1.0, std::abs(ub)) : ub;
      } else {
        res.status = SolveStatus::Infeasible;
        res.lower_bound = kInf;
        res.message = "search exhausted without a feasible plan";
      }
    } else {
      res.status = best ? SolveStatus::Feasible : SolveStatus::NodeLimit;
      res.lower_bound = open.empty() ? -kInf : open.top().bound;
      if (ub < kInf)
        res.lower_bound = std::min(
            res.lower_bound,
            ub - opts_.gap_tol * std::max(1.0, std::abs(ub)));
      res.message = "node limit reached";
    }
    if (!root_seen) res.root_objective = res.lower_bound;
    return res;
  }

 private:
  const Instance& inst_;
  SolveOptions opts_;
  Formulation f_;
  std::vector<VarId> binary_;
  std::vector<int> rank_;
  long next_seq_ = 0;

  static bool fix(Box& b, VarId v, double val) {
    if (v == kNoVar) return true;
    if (b.lo[v] > val + 1e-9 || b.hi[v] < val - 1e-9) return false;
    b.lo[v] = val;
    b.hi[v] = val;
    return true;
  }

  static bool fixed_at(const Box& b, VarId v, double val) {
    return v != kNoVar && b.lo[v] == b.hi[v] && b.lo[v] == val;
  }

  /// Bound tightenings entailed by the model rows for the fixed binaries.
  bool propagate(Box& b) const {
    const auto& cat = f_.catalog;
    for (int pass = 0; pass < 8; ++pass) {
      bool changed = false;
      auto apply = [&](VarId v, double val) {
        if (v == kNoVar || (b.lo[v] == b.hi[v] && b.lo[v] == val)) return true;
        if (!fix(b, v, val)) return false;
        changed = true;
        return true;
      };
      for (int e = 0; e < inst_.arc_count(); ++e) {
        const ArcVars& av = cat.arc[e];
        if (inst_.arcs[e].has_heat()) {
          int ones = -1, zeros = 0;
          for (int t = 0; t < 3; ++t) {
            if (fixed_at(b, av.x[t], 1)) ones = t;
            if (fixed_at(b, av.x[t], 0)) ++zeros;
          }
          if (ones >= 0)
            for (int t = 0; t < 3; ++t)
              if (t != ones && !apply(av.x[t], 0)) return false;
          if (zeros == 2 && ones < 0)
            for (int t = 0; t < 3; ++t)
              if (!fixed_at(b, av.x[t], 0) && !apply(av.x[t], 1)) return false;
          if (zeros == 3) return false;  // exactly one technology is required
          for (int t = 0; t < 3; ++t) {
            if (fixed_at(b, av.x[t], 0)) {
              if (!apply(av.x1[t], 0) || !apply(av.x2[t], 0) || !apply(av.z[t], 0))
                return false;
            }
            if (av.z[t] != kNoVar) {
              if (fixed_at(b, av.z[t], 1) && !apply(av.x1[t], 1)) return false;
              if (fixed_at(b, av.z[t], 0) && !apply(av.x2[t], 0)) return false;
              if (fixed_at(b, av.x1[t], 0) && !apply(av.z[t], 0)) return false;
              if (av.x2[t] != kNoVar && b.lo[av.x2[t]] > 1e-9 &&
                  !apply(av.z[t], 1))
                return false;
            }
          }
          // A gas-burning technology needs flow on this arc when the network
          // is a tree: the deeper endpoint has no other supply path.
          if (inst_.is_tree &&
              (fixed_at(b, av.x[0], 1) || fixed_at(b, av.x[1], 1)) &&
              !apply(av.y_g, 1))
            return false;
        }
        if (fixed_at(b, av.y_gp, 1) && !apply(av.y_gm, 0)) return false;
        if (fixed_at(b, av.y_gp, 0) && !apply(av.y_gm, 1)) return false;
        if (fixed_at(b, av.y_gm, 1) && !apply(av.y_gp, 0)) return false;
        if (fixed_at(b, av.y_gm, 0) && !apply(av.y_gp, 1)) return false;
      }
      if (!changed) break;
    }
    return !b.empty();
  }

  bool discrete_fixed(const Box& b) const {
    for (VarId v : binary_)
      if (b.lo[v] != b.hi[v]) return false;
    const auto& cat = f_.catalog;
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const ArcVars& av = cat.arc[e];
      for (int t = 0; t < 3; ++t) {
        if (av.x1[t] != kNoVar && b.lo[av.x1[t]] != b.hi[av.x1[t]]) return false;
        if (av.x2[t] != kNoVar && b.lo[av.x2[t]] != b.hi[av.x2[t]]) return false;
      }
    }
    return true;
  }

  Plan plan_from_box(const Box& b, bool& ok) const {
    const auto& cat = f_.catalog;
    Plan plan(inst_.arc_count());
    ok = true;
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const ArcVars& av = cat.arc[e];
      TechChoice& c = plan[e];
      if (inst_.arcs[e].has_heat()) {
        int chosen = -1;
        for (int t = 0; t < 3; ++t)
          if (b.lo[av.x[t]] > 0.5) chosen = t;
        if (chosen < 0) {
          ok = false;
          return plan;
        }
        c.tech = static_cast<Tech>(chosen);
        c.x1 = av.x1[chosen] != kNoVar ? b.lo[av.x1[chosen]] : 0.0;
        c.x2 = av.x2[chosen] != kNoVar ? b.lo[av.x2[chosen]] : 0.0;
      }
      c.pipe = b.lo[av.y_g] > 0.5;
    }
    return plan;
  }

  /// Rounds an LP point into a consistent plan worth pricing.
  Plan plan_from_relaxed(const std::vector<double>& x) const {
    Plan plan = plan_from_point(inst_, f_, x);
    for (TechChoice& c : plan) {
      if (opts_.formulation.renovation_binary) {
        c.x1 = c.x1 >= 0.5 ? 1.0 : 0.0;
        c.x2 = c.x2 >= 0.5 ? 1.0 : 0.0;
      }
      // Second-stage work cannot precede a finished first stage.
      if (c.x2 > 1e-12 && c.x1 < 1.0 - 1e-9) {
        if (c.x1 >= 0.999)
          c.x1 = 1.0;
        else
          c.x2 = 0.0;
      }
    }
    if (inst_.is_tree) {
      // Pipes cost money and a tree has unique supply paths, so the cheapest
      // pipe set serving the gas demand is implied by the technology choice.
      std::vector<int> parent(inst_.node_count, -1);
      std::vector<char> seen(inst_.node_count, 0), pipe(inst_.arc_count(), 0);
      std::vector<int> stack = {0};
      seen[0] = 1;
      while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        auto visit = [&](int e, int w) {
          if (!seen[w]) {
            seen[w] = 1;
            parent[w] = e;
            stack.push_back(w);
          }
        };
        for (int e : inst_.out_arcs[v]) visit(e, inst_.arcs[e].j);
        for (int e : inst_.in_arcs[v]) visit(e, inst_.arcs[e].i);
      }
      auto mark_path = [&](int node) {
        for (int e = parent[node]; e >= 0;) {
          pipe[e] = 1;
          int i = inst_.arcs[e].i, j = inst_.arcs[e].j;
          e = parent[i] == e ? parent[j] : parent[i];
        }
      };
      for (int e = 0; e < inst_.arc_count(); ++e) {
        const TechChoice& c = plan[e];
        if (c.tech && *c.tech != Tech::HP) {
          mark_path(inst_.arcs[e].i);
          mark_path(inst_.arcs[e].j);
        }
      }
      for (int e = 0; e < inst_.arc_count(); ++e) plan[e].pipe = pipe[e] != 0;
    }
    return plan;
  }

  Outcome process(const QNode& node, double cutoff) const {
    Outcome out;
    Box box = node.box;
    if (!propagate(box)) return out;  // conflict: prune as infeasible

    if (discrete_fixed(box)) {
      bool ok = false;
      Plan plan = plan_from_box(box, ok);
      if (!ok) return out;
      detail::PlanPrice price = detail::price_plan(inst_, plan, opts_.sim);
      if (price.feasible) {
        out.bound = price.objective;
        out.cand = Candidate{std::move(plan), price.objective};
      }
      return out;
    }

    Relaxation rel = build_relaxation(f_, box, opts_.relax);
    LpSolution sol = solve_lp(rel.lp, opts_.lp);
    if (sol.status == LpStatus::Infeasible) return out;

    if (sol.status == LpStatus::Optimal) {
      out.solved_lp = true;
      out.lp_objective = sol.objective;
      out.child_bound = std::max(node.bound, sol.objective);
      if (sol.objective >= cutoff) {
        out.bound = sol.objective;
        return out;
      }

      // Price the rounded point; exactness is not needed for an incumbent.
      Plan rounded = plan_from_relaxed(sol.x);
      detail::PlanPrice price = detail::price_plan(inst_, rounded, opts_.sim);
      if (price.feasible)
        out.cand = Candidate{std::move(rounded), price.objective};

      // Most fractional binary first.
      VarId branch = kNoVar;
      double score = opts_.integrality_tol;
      for (VarId v : binary_) {
        if (box.lo[v] == box.hi[v]) continue;
        double frac = std::abs(sol.x[v] - std::round(sol.x[v]));
        if (frac > score ||
            (branch != kNoVar && frac == score && rank_[v] < rank_[branch])) {
          score = frac;
          branch = v;
        }
      }
      if (branch != kNoVar) {
        Box lo = box, hi = box;
        lo.hi[branch] = 0;
        lo.lo[branch] = 0;
        hi.lo[branch] = 1;
        hi.hi[branch] = 1;
        out.children.push_back(std::move(lo));
        out.children.push_back(std::move(hi));
        out.bound = kInf;
        return out;
      }

      // All binaries integral: close the worst envelope gap spatially.
      int worst = -1;
      double worst_rel = opts_.lift_gap_tol;
      for (size_t i = 0; i < rel.lifted.size(); ++i) {
        const auto& lf = rel.lifted[i];
        double wa = box.hi[lf.a] - box.lo[lf.a];
        double wb = box.hi[lf.b] - box.lo[lf.b];
        if (std::max(wa, wb) <= 0) continue;  // both factors pinned: closed
        double prod = sol.x[lf.a] * sol.x[lf.b];
        double rel_gap =
            std::abs(sol.x[lf.col] - prod) / (1.0 + std::abs(prod));
        if (rel_gap > worst_rel) {
          worst_rel = rel_gap;
          worst = static_cast<int>(i);
        }
      }
      if (worst < 0) {
        // The relaxed optimum already satisfies the products: exact here.
        out.bound = sol.objective;
        return out;
      }
      const auto& lf = rel.lifted[worst];
      VarId fac = lf.a;
      if (lf.b != lf.a) {
        double wa = (box.hi[lf.a] - box.lo[lf.a]) * std::abs(sol.x[lf.b]);
        double wb = (box.hi[lf.b] - box.lo[lf.b]) * std::abs(sol.x[lf.a]);
        if (wb > wa) fac = lf.b;
      }
      double width = box.hi[fac] - box.lo[fac];
      double split = std::clamp(sol.x[fac], box.lo[fac] + 0.1 * width,
                                box.hi[fac] - 0.1 * width);
      Box left = box, right = box;
      left.hi[fac] = split;
      right.lo[fac] = split;
      out.children.push_back(std::move(left));
      out.children.push_back(std::move(right));
      out.bound = kInf;
      return out;
    }

    // No certificate from the relaxation: split on the widest undecided
    // variable and keep the inherited bound.
    out.child_bound = node.bound;
    VarId widest = kNoVar;
    double width = 0;
    for (VarId v : binary_)
      if (box.hi[v] - box.lo[v] > width) {
        width = box.hi[v] - box.lo[v];
        widest = v;
      }
    if (widest != kNoVar) {
      Box lo = box, hi = box;
      lo.hi[widest] = 0;
      lo.lo[widest] = 0;
      hi.lo[widest] = 1;
      hi.hi[widest] = 1;
      out.children.push_back(std::move(lo));
      out.children.push_back(std::move(hi));
      out.bound = kInf;
      return out;
    }
    for (const auto& lf : rel.lifted) {
      for (VarId v : {lf.a, lf.b})
        if (box.hi[v] - box.lo[v] > width) {
          width = box.hi[v] - box.lo[v];
          widest = v;
        }
    }
    if (widest == kNoVar) {
      // Nothing left to split; fall back to the exact pricing path.
      bool ok = false;
      Plan plan = plan_from_box(box, ok);
      if (ok) {
        detail::PlanPrice price = detail::price_plan(inst_, plan, opts_.sim);
        if (price.feasible) {
          out.bound = price.objective;
          out.cand = Candidate{std::move(plan), price.objective};
        }
      }
      return out;
    }
    Box left = box, right = box;
    double mid = 0.5 * (box.lo[widest] + box.hi[widest]);
    left.hi[widest] = mid;
    right.lo[widest] = mid;
    out.children.push_back(std::move(left));
    out.children.push_back(std::move(right));
    out.bound = kInf;
    return out;
  }
};

}  // namespace

const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::NodeLimit: return "node-limit";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::EmissionInfeasible: return "emission-infeasible";
  }
  return "?";
}

double SolveResult::gap() const {
  if (!plan) return kInf;
  return (objective - lower_bound) / std::max(1.0, std::abs(objective));
}

SolveResult solve(const Instance& inst, const SolveOptions& opts) {
  BranchAndBound bnb(inst, opts);
  return bnb.run();
}

}  // namespace decnet
