#include "decnet/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace decnet {

Box initial_box(const Formulation& f) {
  Box box;
  box.lo.reserve(f.catalog.size());
  box.hi.reserve(f.catalog.size());
  for (const auto& v : f.catalog.vars) {
    box.lo.push_back(v.lo);
    box.hi.push_back(v.hi);
  }
  return box;
}

Relaxation build_relaxation(const Formulation& f, const Box& box,
                            const RelaxOptions& opts) {
  Relaxation rel;
  rel.base_vars = f.catalog.size();
  LinearProgram& lp = rel.lp;
  lp.lo = box.lo;
  lp.hi = box.hi;

  // Collect the distinct nonlinear terms; each gets one auxiliary column.
  std::map<std::pair<VarId, VarId>, int> index_of;
  auto lift = [&](VarId a, VarId b) {
    auto key = std::minmax(a, b);
    auto it = index_of.find(key);
    if (it != index_of.end()) return it->second;
    int idx = static_cast<int>(rel.lifted.size());
    index_of.emplace(key, idx);
    rel.lifted.push_back({rel.base_vars + idx, key.first, key.second});
    return idx;
  };
  for (const auto& r : f.rows) {
    for (const auto& p : r.products) lift(p.a, p.b);
    for (const auto& s : r.squares) lift(s.v, s.v);
  }

  lp.n = rel.base_vars + static_cast<int>(rel.lifted.size());
  lp.lo.resize(lp.n);
  lp.hi.resize(lp.n);
  lp.obj.assign(lp.n, 0.0);
  for (auto [v, c] : f.objective) lp.obj[v] += c;

  // Auxiliary bounds come from interval products over the box.
  for (const auto& lf : rel.lifted) {
    double al = box.lo[lf.a], ah = box.hi[lf.a];
    double bl = box.lo[lf.b], bh = box.hi[lf.b];
    double c1 = al * bl, c2 = al * bh, c3 = ah * bl, c4 = ah * bh;
    double wl = std::min(std::min(c1, c2), std::min(c3, c4));
    double wh = std::max(std::max(c1, c2), std::max(c3, c4));
    if (lf.a == lf.b) wl = (al <= 0 && ah >= 0) ? 0.0 : std::min(al * al, ah * ah);
    lp.lo[lf.col] = wl;
    lp.hi[lf.col] = wh;
  }

  // Model rows with nonlinear terms replaced by their auxiliary columns.
  for (const auto& r : f.rows) {
    LinearProgram::Row row;
    row.rhs = r.rhs;
    row.eq = r.is_equality();
    for (auto [v, c] : r.lin) row.coef.emplace_back(v, c);
    for (const auto& p : r.products) {
      auto key = std::minmax(p.a, p.b);
      row.coef.emplace_back(rel.lifted[index_of[key]].col, p.coef);
    }
    for (const auto& s : r.squares)
      row.coef.emplace_back(rel.lifted[index_of[{s.v, s.v}]].col, s.coef);
    lp.rows.push_back(std::move(row));
  }

  // Envelope rows tying each auxiliary column to its term.
  for (const auto& lf : rel.lifted) {
    int w = lf.col;
    if (lf.a != lf.b) {
      double xl = box.lo[lf.a], xu = box.hi[lf.a];
      double yl = box.lo[lf.b], yu = box.hi[lf.b];
      auto under = [&](double xb, double yb) {
        // w >= xb*y + x*yb - xb*yb  ->  -w + xb*y + yb*x <= xb*yb
        LinearProgram::Row e;
        e.coef = {{w, -1.0}, {lf.b, xb}, {lf.a, yb}};
        e.rhs = xb * yb;
        lp.rows.push_back(std::move(e));
      };
      auto over = [&](double xb, double yb) {
        // w <= xb*y + x*yb - xb*yb
        LinearProgram::Row e;
        e.coef = {{w, 1.0}, {lf.b, -xb}, {lf.a, -yb}};
        e.rhs = -xb * yb;
        lp.rows.push_back(std::move(e));
      };
      under(xl, yl);
      under(xu, yu);
      over(xu, yl);
      over(xl, yu);
    } else {
      double xl = box.lo[lf.a], xu = box.hi[lf.a];
      // Tangents from below: w >= 2*t*x - t^2.
      std::vector<double> pts;
      pts.push_back(xl);
      if (opts.tangents >= 3 && xl < 0 && xu > 0) pts.push_back(0.0);
      if (opts.tangents >= 2 && xu > xl) pts.push_back(xu);
      for (double t : pts) {
        LinearProgram::Row e;
        e.coef = {{w, -1.0}, {lf.a, 2.0 * t}};
        e.rhs = t * t;
        lp.rows.push_back(std::move(e));
      }
      // Secant from above: w <= (xl + xu)*x - xl*xu.
      LinearProgram::Row e;
      e.coef = {{w, 1.0}, {lf.a, -(xl + xu)}};
      e.rhs = -xl * xu;
      lp.rows.push_back(std::move(e));
    }
  }
  return rel;
}

LiftGap worst_lift_gap(const Relaxation& rel, const std::vector<double>& x) {
  LiftGap out;
  for (int i = 0; i < static_cast<int>(rel.lifted.size()); ++i) {
    const auto& lf = rel.lifted[i];
    double gap = std::abs(x[lf.col] - x[lf.a] * x[lf.b]);
    if (gap > out.amount) {
      out.amount = gap;
      out.lifted_index = i;
    }
  }
  return out;
}

}  // namespace decnet
