#include <doctest.h>

#include <cmath>
#include <vector>

#include "decnet/costing.hpp"
#include "decnet/oracle.hpp"
#include "decnet/physics.hpp"
#include "decnet/plan.hpp"
#include "decnet/solver.hpp"
#include "sample_instances.hpp"

using namespace decnet;
using decnet::testing::paper_1arc;

namespace {

SolveOptions grid_options() {
  SolveOptions so;
  so.formulation.renovation_binary = true;
  return so;
}

bool same_tech(const Plan& a, const Plan& b) {
  if (a.size() != b.size()) return false;
  for (size_t e = 0; e < a.size(); ++e)
    if (a[e].tech != b[e].tech) return false;
  return true;
}

}  // namespace

TEST_CASE("branch and bound matches exhaustive search on small trees") {
  struct Case {
    int n;
    std::uint64_t seed;
    double scale;
  };
  const std::vector<Case> cases = {
      {3, 11, 1.0}, {3, 23, 0.6}, {4, 5, 1.0},  {4, 31, 1.4},
      {5, 7, 1.0},  {5, 19, 0.8}, {5, 45, 1.0},
  };
  for (const Case& c : cases) {
    GenSpec gs;
    gs.n = c.n;
    gs.seed = c.seed;
    gs.demand_scale = c.scale;
    Instance inst = generate_instance(gs);
    CAPTURE(c.n);
    CAPTURE(c.seed);

    SolveResult sr = solve(inst, grid_options());
    OracleResult orc = enumerate_exact(inst, {});

    REQUIRE(orc.feasible);
    REQUIRE(sr.status == SolveStatus::Optimal);
    REQUIRE(sr.plan.has_value());
    double tol = 1e-6 * std::max(1.0, std::abs(orc.objective));
    CHECK(std::abs(sr.objective - orc.objective) <= tol);

    // When the best competing technology mix is clearly worse, the plans
    // must agree arc by arc.
    if (orc.other_tech_objective &&
        *orc.other_tech_objective - orc.objective > 1e-4)
      CHECK(same_tech(*sr.plan, orc.plan));
  }
}

TEST_CASE("the root relaxation never exceeds the true optimum") {
  for (std::uint64_t seed : {2, 9, 27}) {
    GenSpec gs;
    gs.n = 4;
    gs.seed = seed;
    Instance inst = generate_instance(gs);
    CAPTURE(seed);

    SolveResult sr = solve(inst, grid_options());
    OracleResult orc = enumerate_exact(inst, {});
    REQUIRE(orc.feasible);
    REQUIRE(sr.status == SolveStatus::Optimal);
    CHECK(sr.root_objective <=
          orc.objective + 1e-9 * std::max(1.0, std::abs(orc.objective)));
    CHECK(sr.lower_bound >=
          orc.objective - 1e-6 * std::max(1.0, std::abs(orc.objective)));
    CHECK(sr.lower_bound <= sr.objective);
  }
}

TEST_CASE("a returned plan survives the physics check end to end") {
  GenSpec gs;
  gs.n = 5;
  gs.seed = 13;
  Instance inst = generate_instance(gs);

  SolveResult sr = solve(inst, grid_options());
  REQUIRE(sr.status == SolveStatus::Optimal);
  REQUIRE(sr.plan.has_value());

  SimulationResult sim = simulate(inst, *sr.plan, {});
  REQUIRE(sim.feasible);
  CostBreakdown cost = evaluate_cost(inst, *sr.plan, sim);
  CHECK(cost.total() == doctest::Approx(sr.objective).epsilon(1e-12));

  Formulation f = build_formulation(inst, grid_options().formulation);
  PlanPoint pt = assemble_plan(inst, f, *sr.plan, sim, cost);
  ViolationReport rep = evaluate_residuals(f, pt, 1e-6);
  CHECK(rep.ok());
  CHECK(rep.max_violation <= 1e-6);
}

TEST_CASE("tightening the emission target raises cost then cuts feasibility") {
  Instance inst = paper_1arc();
  OracleResult free_best = enumerate_exact(inst, {});
  REQUIRE(free_best.feasible);

  // The all-heat-pump floor is the least carbon any plan can emit.
  double floor = emission_floor(inst);
  std::vector<double> targets = {inst.costs.E_target, floor * 1.02, floor * 0.9};
  double prev = -1;
  for (size_t k = 0; k < targets.size(); ++k) {
    Instance copy = inst;
    copy.costs.E_target = targets[k];
    SolveResult sr = solve(copy, grid_options());
    CAPTURE(targets[k]);
    if (k + 1 < targets.size()) {
      REQUIRE(sr.status == SolveStatus::Optimal);
      CHECK(sr.objective >= prev);
      prev = sr.objective;
    } else {
      CHECK(sr.status == SolveStatus::EmissionInfeasible);
      CHECK_FALSE(sr.plan.has_value());
    }
  }
}

TEST_CASE("continuous renovation can only improve on the grid restriction") {
  for (std::uint64_t seed : {11, 23}) {
    GenSpec gs;
    gs.n = 4;
    gs.seed = seed;
    Instance inst = generate_instance(gs);
    CAPTURE(seed);

    SolveResult grid = solve(inst, grid_options());
    SolveOptions cont;
    SolveResult rel = solve(inst, cont);
    REQUIRE(grid.status == SolveStatus::Optimal);
    REQUIRE(rel.status == SolveStatus::Optimal);
    CHECK(rel.objective <=
          grid.objective + 1e-6 * std::max(1.0, std::abs(grid.objective)));

    REQUIRE(rel.plan.has_value());
    SimulationResult sim = simulate(inst, *rel.plan, {});
    CHECK(sim.feasible);
  }
}

TEST_CASE("an instance beyond its physics limits is reported infeasible") {
  Instance inst = paper_1arc();
  inst.physical.u_min = 399.99;
  inst.physical.p_min = 59.999;
  inst.finalize();
  SolveResult sr = solve(inst, grid_options());
  CHECK(sr.status == SolveStatus::Infeasible);
  CHECK_FALSE(sr.plan.has_value());
}

TEST_CASE("the node limit stops the search with a truthful bound") {
  GenSpec gs;
  gs.n = 5;
  gs.seed = 45;
  Instance inst = generate_instance(gs);

  SolveOptions so = grid_options();
  so.node_limit = 1;
  SolveResult sr = solve(inst, so);
  OracleResult orc = enumerate_exact(inst, {});
  REQUIRE(orc.feasible);
  CHECK(sr.nodes <= 1);
  if (sr.status != SolveStatus::Optimal) {
    CHECK((sr.status == SolveStatus::Feasible ||
           sr.status == SolveStatus::NodeLimit));
    CHECK(sr.lower_bound <=
          orc.objective + 1e-9 * std::max(1.0, std::abs(orc.objective)));
  }
  if (sr.plan) CHECK(sr.objective >= orc.objective - 1e-9);
}

TEST_CASE("more worker threads do not change the answer") {
  GenSpec gs;
  gs.n = 5;
  gs.seed = 19;
  Instance inst = generate_instance(gs);

  SolveOptions one = grid_options();
  SolveOptions four = grid_options();
  four.threads = 4;
  SolveResult a = solve(inst, one);
  SolveResult b = solve(inst, four);
  REQUIRE(a.status == SolveStatus::Optimal);
  REQUIRE(b.status == SolveStatus::Optimal);
  CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-12));
  REQUIRE(a.plan.has_value());
  REQUIRE(b.plan.has_value());
  CHECK(same_tech(*a.plan, *b.plan));
}
