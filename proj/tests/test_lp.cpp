// Tests for the bounded-variable simplex solver.
//
// Alongside hand-checked fixtures, random boxed LPs are cross-checked against
// a brute-force vertex enumerator: every choice of n active constraints
// (rows taken as equalities plus variable bounds) yields a candidate vertex,
// and the best feasible candidate is the exact optimum of a bounded LP.

#include "doctest.h"

#include "decnet/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

using namespace decnet;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

LinearProgram boxed(int n) {
  LinearProgram lp;
  lp.n = n;
  lp.lo.assign(n, 0.0);
  lp.hi.assign(n, kInf);
  lp.obj.assign(n, 0.0);
  return lp;
}

void add_row(LinearProgram& lp, std::vector<std::pair<int, double>> coef,
             double rhs, bool eq = false) {
  LinearProgram::Row row;
  row.coef = std::move(coef);
  row.rhs = rhs;
  row.eq = eq;
  lp.rows.push_back(std::move(row));
}

// Dense Gaussian elimination with partial pivoting; returns false when the
// active-set system is singular.
bool gauss_solve(std::vector<double> a, std::vector<double> b, int n,
                 std::vector<double>& x) {
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int i = k + 1; i < n; ++i)
      if (std::abs(a[i * n + k]) > std::abs(a[piv * n + k])) piv = i;
    if (std::abs(a[piv * n + k]) < 1e-11) return false;
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(a[k * n + c], a[piv * n + c]);
      std::swap(b[k], b[piv]);
    }
    for (int i = k + 1; i < n; ++i) {
      double f = a[i * n + k] / a[k * n + k];
      if (f == 0.0) continue;
      for (int c = k; c < n; ++c) a[i * n + c] -= f * a[k * n + c];
      b[i] -= f * b[k];
    }
  }
  x.assign(n, 0.0);
  for (int i = n - 1; i >= 0; --i) {
    double s = b[i];
    for (int c = i + 1; c < n; ++c) s -= a[i * n + c] * x[c];
    x[i] = s / a[i * n + i];
  }
  return true;
}

struct VertexOptimum {
  bool feasible = false;
  double objective = 0.0;
};

// Enumerates all vertices of {lo <= x <= hi, rows} and returns the best
// objective value.  Only valid for fully boxed variables (bounded polytope).
VertexOptimum enumerate_vertices(const LinearProgram& lp) {
  const int n = lp.n;
  const int m = static_cast<int>(lp.rows.size());
  // Constraint list: rows 0..m-1, then lower bounds, then upper bounds.
  const int total = m + 2 * n;
  std::vector<int> pick(n, 0);
  VertexOptimum best;

  std::vector<int> comb(n);
  for (int i = 0; i < n; ++i) comb[i] = i;
  auto advance = [&]() {
    int i = n - 1;
    while (i >= 0 && comb[i] == total - n + i) --i;
    if (i < 0) return false;
    ++comb[i];
    for (int k = i + 1; k < n; ++k) comb[k] = comb[k - 1] + 1;
    return true;
  };

  std::vector<double> a(n * n), b(n), x;
  do {
    // Mandatory equality rows must all be active.
    bool ok = true;
    for (int r = 0; r < m; ++r)
      if (lp.rows[r].eq &&
          std::find(comb.begin(), comb.end(), r) == comb.end())
        ok = false;
    if (!ok) continue;
    std::fill(a.begin(), a.end(), 0.0);
    for (int k = 0; k < n; ++k) {
      int c = comb[k];
      if (c < m) {
        for (const auto& [j, v] : lp.rows[c].coef) a[k * n + j] = v;
        b[k] = lp.rows[c].rhs;
      } else if (c < m + n) {
        a[k * n + (c - m)] = 1.0;
        b[k] = lp.lo[c - m];
      } else {
        a[k * n + (c - m - n)] = 1.0;
        b[k] = lp.hi[c - m - n];
      }
    }
    if (!gauss_solve(a, b, n, x)) continue;
    bool feas = true;
    for (int j = 0; j < n && feas; ++j)
      if (x[j] < lp.lo[j] - 1e-7 || x[j] > lp.hi[j] + 1e-7) feas = false;
    for (int r = 0; r < m && feas; ++r) {
      double act = 0.0;
      for (const auto& [j, v] : lp.rows[r].coef) act += v * x[j];
      if (lp.rows[r].eq ? std::abs(act - lp.rows[r].rhs) > 1e-7
                        : act > lp.rows[r].rhs + 1e-7)
        feas = false;
    }
    if (!feas) continue;
    double obj = 0.0;
    for (int j = 0; j < n; ++j) obj += lp.obj[j] * x[j];
    if (!best.feasible || obj < best.objective) {
      best.feasible = true;
      best.objective = obj;
    }
  } while (advance());
  (void)pick;
  return best;
}

}  // namespace

TEST_CASE("two-variable inequality LP reaches the shared vertex") {
  LinearProgram lp = boxed(2);
  lp.hi = {1.0, 1.0};
  lp.obj = {-1.0, -1.0};
  add_row(lp, {{0, 1.0}, {1, 1.0}}, 1.5);
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-1.5).epsilon(1e-9));
  CHECK(sol.x[0] + sol.x[1] == doctest::Approx(1.5).epsilon(1e-9));
  CHECK(sol.max_infeasibility < 1e-9);
}

TEST_CASE("equality row forces the cheap variable to its upper bound") {
  LinearProgram lp = boxed(2);
  lp.hi = {4.0, 8.0};
  lp.obj = {1.0, 2.0};
  add_row(lp, {{0, 1.0}, {1, 1.0}}, 10.0, true);
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(16.0).epsilon(1e-9));
  CHECK(sol.x[0] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK(sol.x[1] == doctest::Approx(6.0).epsilon(1e-9));
}

TEST_CASE("inconsistent equality system is reported infeasible") {
  LinearProgram lp = boxed(2);
  lp.hi = {4.0, 4.0};
  add_row(lp, {{0, 1.0}, {1, 1.0}}, 10.0, true);
  LpSolution sol = solve_lp(lp);
  CHECK(sol.status == LpStatus::Infeasible);
}

TEST_CASE("row-free LP is solved by bound flips alone") {
  LinearProgram lp = boxed(3);
  lp.hi = {5.0, 2.0, 7.0};
  lp.obj = {-1.0, 3.0, -2.0};
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-19.0).epsilon(1e-12));
  CHECK(sol.x[0] == doctest::Approx(5.0));
  CHECK(sol.x[1] == doctest::Approx(0.0));
  CHECK(sol.x[2] == doctest::Approx(7.0));
}

TEST_CASE("negative lower bounds and a mixed-sign objective") {
  LinearProgram lp = boxed(2);
  lp.lo = {-3.0, -2.0};
  lp.hi = {3.0, 2.0};
  lp.obj = {1.0, -1.0};
  add_row(lp, {{0, 1.0}, {1, -1.0}}, 1.0);   // x0 - x1 <= 1
  add_row(lp, {{0, -1.0}, {1, 1.0}}, 4.0);   // x1 - x0 <= 4
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  // Optimum at x0 = -3 (its bound), x1 = min(2, x0 + 4) = 1... the second row
  // allows x1 <= x0 + 4 = 1, so objective = -3 - 1 = -4.
  CHECK(sol.objective == doctest::Approx(-4.0).epsilon(1e-9));
  CHECK(sol.x[0] == doctest::Approx(-3.0).epsilon(1e-9));
  CHECK(sol.x[1] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("degenerate overlapping rows still terminate at the optimum") {
  LinearProgram lp = boxed(3);
  lp.hi = {10.0, 10.0, 10.0};
  lp.obj = {-2.0, -3.0, -1.0};
  add_row(lp, {{0, 1.0}, {1, 1.0}}, 4.0);
  add_row(lp, {{0, 1.0}, {1, 1.0}}, 4.0);  // duplicate
  add_row(lp, {{0, 2.0}, {1, 2.0}}, 8.0);  // scaled duplicate
  add_row(lp, {{1, 1.0}, {2, 1.0}}, 6.0);
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  // x1 = 4, x0 = 0, x2 = 2: objective -12 - 2 = -14.
  CHECK(sol.objective == doctest::Approx(-14.0).epsilon(1e-9));
}

TEST_CASE("equality rows with negative right-hand sides") {
  LinearProgram lp = boxed(2);
  lp.lo = {-10.0, -10.0};
  lp.hi = {10.0, 10.0};
  lp.obj = {1.0, 1.0};
  add_row(lp, {{0, 1.0}, {1, 1.0}}, -3.0, true);
  add_row(lp, {{0, 1.0}, {1, -1.0}}, 5.0);
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-3.0).epsilon(1e-9));
  CHECK(sol.x[0] + sol.x[1] == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("random boxed LPs match brute-force vertex enumeration") {
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_int_distribution<int> nrows(1, 4);
  int solved = 0, infeasible = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 3);  // 2..4 variables
    LinearProgram lp = boxed(n);
    for (int j = 0; j < n; ++j) {
      double a = coef(rng), b = coef(rng);
      lp.lo[j] = std::min(a, b);
      lp.hi[j] = std::max(a, b) + 0.5;
      lp.obj[j] = coef(rng);
    }
    const int m = nrows(rng);
    for (int r = 0; r < m; ++r) {
      std::vector<std::pair<int, double>> row;
      for (int j = 0; j < n; ++j) {
        double c = coef(rng);
        if (std::abs(c) > 0.3) row.emplace_back(j, c);
      }
      if (row.empty()) row.emplace_back(0, 1.0);
      add_row(lp, std::move(row), coef(rng));
    }
    VertexOptimum oracle = enumerate_vertices(lp);
    LpSolution sol = solve_lp(lp);
    if (!oracle.feasible) {
      CHECK(sol.status == LpStatus::Infeasible);
      ++infeasible;
      continue;
    }
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective ==
          doctest::Approx(oracle.objective).epsilon(1e-7).scale(1.0));
    CHECK(sol.max_infeasibility < 1e-7);
    ++solved;
  }
  // The generator should exercise both outcomes.
  CHECK(solved >= 30);
  CHECK(infeasible >= 1);
}

TEST_CASE("anti-cycling fallback copes with many degenerate ties") {
  // A cone of rows all active at the origin, optimum pushed away from it.
  LinearProgram lp = boxed(4);
  lp.hi = {1.0, 1.0, 1.0, 1.0};
  lp.obj = {-1.0, -1.0, -1.0, -1.0};
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b)
      add_row(lp, {{a, 1.0}, {b, -1.0}}, 0.0);
  add_row(lp, {{0, 1.0}, {1, 1.0}, {2, 1.0}, {3, 1.0}}, 2.0);
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpStatus::Optimal);
  // The chain x0 <= x1 <= x2 <= x3 admits many optima; the value is unique.
  CHECK(sol.objective == doctest::Approx(-2.0).epsilon(1e-9));
  CHECK(sol.max_infeasibility < 1e-9);
  for (int j = 0; j + 1 < 4; ++j) CHECK(sol.x[j] <= sol.x[j + 1] + 1e-9);
  CHECK(sol.x[0] + sol.x[1] + sol.x[2] + sol.x[3] ==
        doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("iteration limit is surfaced instead of spinning") {
  LinearProgram lp = boxed(3);
  lp.hi = {1.0, 1.0, 1.0};
  lp.obj = {-1.0, -1.0, -1.0};
  add_row(lp, {{0, 1.0}, {1, 1.0}, {2, 1.0}}, 2.0);
  LpOptions opts;
  opts.max_iter = 1;
  LpSolution sol = solve_lp(lp, opts);
  CHECK((sol.status == LpStatus::IterationLimit ||
         sol.status == LpStatus::Optimal));
}
