#include "decnet/formulation.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace decnet {

VarId VariableCatalog::find(const std::string& name) const {
  for (int v = 0; v < size(); ++v)
    if (vars[v].name == name) return v;
  return kNoVar;
}

int Formulation::count_tag(const std::string& tag) const {
  int n = 0;
  for (const auto& r : rows)
    if (r.tag == tag) ++n;
  return n;
}

double Formulation::objective_value(const std::vector<double>& x) const {
  double v = 0;
  for (auto [var, c] : objective) v += c * x[var];
  return v;
}

double row_residual(const ConstraintRow& row, const std::vector<double>& x) {
  double lhs = 0;
  for (auto [v, c] : row.lin) lhs += c * x[v];
  for (const auto& p : row.products) lhs += p.coef * x[p.a] * x[p.b];
  for (const auto& s : row.squares) lhs += s.coef * x[s.v] * x[s.v];
  return lhs - row.rhs;
}

namespace {

struct Interval {
  double lo = 0;
  double hi = 0;
};

Interval imul(Interval a, Interval b) {
  double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return {std::min(std::min(p1, p2), std::min(p3, p4)),
          std::max(std::max(p1, p2), std::max(p3, p4))};
}

std::string sfx(const Arc& a) {
  return "[" + std::to_string(a.i) + "," + std::to_string(a.j) + "]";
}

std::string sfx(int i) { return "[" + std::to_string(i) + "]"; }

class Builder {
 public:
  Builder(const Instance& inst, const FormulationOptions& opts) : inst_(inst) {
    f_.options = opts;
  }

  Formulation build() {
    compute_bounds();
    make_catalog();
    emit_technology();
    emit_renovation();
    emit_demand_coupling();
    emit_electric();
    emit_gas();
    emit_costs();
    f_.objective = {{f_.catalog.C_total, 1.0}};
    f_.rows.assign(std::move_iterator(rows_.begin()), std::move_iterator(rows_.end()));
    return std::move(f_);
  }

 private:
  const Instance& inst_;
  Formulation f_;
  // Rows are accumulated in a deque: emitters hold references to several
  // rows at once while adding more, and deque growth leaves them valid.
  std::deque<ConstraintRow> rows_;

  // Precomputed upper bounds per arc/node used for variable boxes and big-M.
  struct ArcBounds {
    std::array<double, 3> sEsum_t{}, sEmax_t{};
    double sEsum = 0, sEmax = 0, sGsum = 0, sGmax = 0;
    Interval ubar, f_in, f_out;
    double f_g_abs = 0;
    double R_e_min = 0;  // effective resistance used for flow bounds
  };
  std::vector<ArcBounds> ab_;
  std::vector<double> sbarE_ub_, sbarG_ub_;
  double s0Esum_ub_ = 0, s0Gsum_ub_ = 0, s0Emax_ub_ = 0, s0Gmax_ub_ = 0;
  double schp_ub_ = 0;

  Interval u_box(int node) const {
    const auto& ph = inst_.physical;
    if (node == 0) return {ph.u_max, ph.u_max};
    return {ph.u_min, ph.u_max};
  }

  Interval p_box(int node) const {
    const auto& ph = inst_.physical;
    if (node == 0) return {ph.p_max, ph.p_max};
    return {ph.p_min, ph.p_max};
  }

  void compute_bounds() {
    const auto& ph = inst_.physical;
    ab_.resize(inst_.arc_count());
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      const ArcDemand& d = a.demand;
      ArcBounds& b = ab_[e];
      for (Tech t : kAllTechs) {
        int ti = static_cast<int>(t);
        b.sEsum_t[ti] = std::max(d.SEL, d.sel(t));
        b.sEmax_t[ti] = std::max(d.MEL, d.mel(t));
      }
      b.sEsum = *std::max_element(b.sEsum_t.begin(), b.sEsum_t.end());
      b.sEmax = *std::max_element(b.sEmax_t.begin(), b.sEmax_t.end());
      b.sGsum = std::max(d.sgl(Tech::CB), d.sgl(Tech::CHP));
      b.sGmax = std::max(d.mgl(Tech::CB), d.mgl(Tech::CHP));

      Interval ui = u_box(a.i), uj = u_box(a.j);
      b.ubar = {ui.lo - uj.hi, ui.hi - uj.lo};
      if (inst_.options.cable_sizing) {
        double rmin = inst_.cable_catalog->types.front().R_per_m;
        for (const auto& t : inst_.cable_catalog->types) rmin = std::min(rmin, t.R_per_m);
        b.R_e_min = rmin * a.length_m;
      } else {
        b.R_e_min = *a.R_e;
      }
      double scale = ph.a_e / b.R_e_min;
      Interval in = imul(uj, b.ubar), out = imul(ui, b.ubar);
      b.f_in = {scale * in.lo, scale * in.hi};
      b.f_out = {scale * out.lo, scale * out.hi};

      double rg_min;
      if (inst_.options.pipe_sizing) {
        const auto& cat = *inst_.pipe_catalog;
        rg_min = pipe_resistance(cat.types.front().diameter_m, a.length_m,
                                 cat.gas_density, cat.gas_velocity);
        for (const auto& t : cat.types)
          rg_min = std::min(rg_min, pipe_resistance(t.diameter_m, a.length_m,
                                                    cat.gas_density, cat.gas_velocity));
      } else {
        rg_min = *a.R_g;
      }
      b.f_g_abs = ph.a_g * std::min(ph.q_bar_max, std::sqrt(ph.p_bar_max() / rg_min));
    }

    sbarE_ub_.assign(inst_.node_count, 0.0);
    sbarG_ub_.assign(inst_.node_count, 0.0);
    for (int e = 0; e < inst_.arc_count(); ++e) {
      for (int n : {inst_.arcs[e].i, inst_.arcs[e].j}) {
        sbarE_ub_[n] += 0.5 * ab_[e].sEmax;
        sbarG_ub_[n] += 0.5 * ab_[e].sGmax;
      }
      s0Esum_ub_ += ab_[e].sEsum;
      s0Gsum_ub_ += ab_[e].sGsum;
      const ArcDemand& d = inst_.arcs[e].demand;
      schp_ub_ += d.SEL - d.sel(Tech::CHP);
    }
    s0Emax_ub_ = sbarE_ub_[0];
    s0Gmax_ub_ = sbarG_ub_[0];
    for (int e : inst_.out_arcs[0]) {
      s0Emax_ub_ += std::max(0.0, ab_[e].f_out.hi);
      s0Gmax_ub_ += ab_[e].f_g_abs;
    }
    for (int e : inst_.in_arcs[0]) {
      s0Emax_ub_ += std::max(0.0, -ab_[e].f_in.lo);
      s0Gmax_ub_ += ab_[e].f_g_abs;
    }
  }

  VarId add(std::string name, double lo, double hi, VarKind k = VarKind::Continuous) {
    f_.catalog.vars.push_back({std::move(name), lo, hi, k});
    return static_cast<VarId>(f_.catalog.vars.size()) - 1;
  }

  void make_catalog() {
    auto& cat = f_.catalog;
    const auto& ph = inst_.physical;
    const auto& co = inst_.costs;

    cat.node.resize(inst_.node_count);
    for (int i = 0; i < inst_.node_count; ++i) {
      Interval u = u_box(i), p = p_box(i);
      cat.node[i].u = add("u" + sfx(i), u.lo, u.hi);
      cat.node[i].p = add("p" + sfx(i), p.lo, p.hi);
      cat.node[i].sbar_Emax = add("sbar_Emax" + sfx(i), 0, sbarE_ub_[i]);
      cat.node[i].sbar_Gmax = add("sbar_Gmax" + sfx(i), 0, sbarG_ub_[i]);
    }

    VarKind reno_kind =
        f_.options.renovation_binary ? VarKind::Binary : VarKind::Continuous;
    cat.arc.resize(inst_.arc_count());
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      ArcVars& av = cat.arc[e];
      std::string s = sfx(a);
      bool heat = a.has_heat();
      for (Tech t : kAllTechs) {
        int ti = static_cast<int>(t);
        double hi = heat ? 1.0 : 0.0;
        av.x[ti] = add(std::string("x_") + tech_name(t) + s, 0, hi, VarKind::Binary);
      }
      if (heat) {
        for (Tech t : kAllTechs) {
          int ti = static_cast<int>(t);
          std::string tn = tech_name(t);
          av.x1[ti] = add("x1_" + tn + s, 0, 1, reno_kind);
          av.x2[ti] = add("x2_" + tn + s, 0, 1, reno_kind);
          av.z[ti] = add("z_" + tn + s, 0, 1, VarKind::Binary);
        }
      }
      av.y_g = add("y_g" + s, 0, 1, VarKind::Binary);
      av.y_gp = add("y_gp" + s, 0, 1, VarKind::Binary);
      av.y_gm = add("y_gm" + s, 0, 1, VarKind::Binary);
      if (inst_.options.cable_sizing) {
        int r = static_cast<int>(inst_.cable_catalog->types.size());
        for (int k = 0; k < r; ++k)
          av.y_cable.push_back(add("y_e_k" + std::to_string(k) + s, 0, 1, VarKind::Binary));
      }
      if (inst_.options.pipe_sizing) {
        int r = static_cast<int>(inst_.pipe_catalog->types.size());
        for (int k = 0; k < r; ++k)
          av.y_pipe.push_back(add("y_g_k" + std::to_string(k) + s, 0, 1, VarKind::Binary));
      }
      av.s_Esum = add("s_Esum" + s, 0, ab_[e].sEsum);
      av.s_Emax = add("s_Emax" + s, 0, ab_[e].sEmax);
      av.s_Gsum = add("s_Gsum" + s, 0, ab_[e].sGsum);
      av.s_Gmax = add("s_Gmax" + s, 0, ab_[e].sGmax);
      for (Tech t : kAllTechs) {
        int ti = static_cast<int>(t);
        std::string tn = tech_name(t);
        av.s_Esum_t[ti] = add("s_Esum_" + tn + s, 0, ab_[e].sEsum_t[ti]);
        av.s_Emax_t[ti] = add("s_Emax_" + tn + s, 0, ab_[e].sEmax_t[ti]);
      }
      av.f_e_in = add("f_e_in" + s, ab_[e].f_in.lo, ab_[e].f_in.hi);
      av.f_e_out = add("f_e_out" + s, ab_[e].f_out.lo, ab_[e].f_out.hi);
      av.f_g = add("f_g" + s, -ab_[e].f_g_abs, ab_[e].f_g_abs);
      double q_abs = ab_[e].f_g_abs / ph.a_g;
      av.q_bar = add("q_bar" + s, -q_abs, q_abs);
      Interval pi = p_box(a.i), pj = p_box(a.j);
      av.p_bar = add("p_bar" + s, pi.lo - pj.hi, pi.hi - pj.lo);
      av.p_bar_plus = add("p_bar_plus" + s, 0, ph.p_bar_max());
      av.u_bar = add("u_bar" + s, ab_[e].ubar.lo, ab_[e].ubar.hi);
    }

    cat.s0_Esum = add("s0_Esum", 0, s0Esum_ub_);
    cat.s0_Gsum = add("s0_Gsum", 0, s0Gsum_ub_);
    cat.s0_Emax = add("s0_Emax", 0, s0Emax_ub_);
    cat.s0_Gmax = add("s0_Gmax", 0, s0Gmax_ub_);
    cat.s_chp_Esum = add("s_chp_Esum", 0, schp_ub_);

    double energy_ub = co.alpha_p_e * s0Esum_ub_ + co.alpha_p_g * s0Gsum_ub_;
    double tax_ub = co.beta_e * (s0Esum_ub_ + co.t_adv * schp_ub_) + co.beta_g * s0Gsum_ub_;
    double alloc_ub = co.alpha_a_e * s0Emax_ub_ + co.alpha_a_g * s0Gmax_ub_;
    double grid_ub = 0, grid_e_ub = 0, tech_ub = 0, renov_ub = 0;
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      if (inst_.options.pipe_sizing) {
        double z = 0;
        for (const auto& t : inst_.pipe_catalog->types)
          z = std::max(z, t.cost_per_m * a.length_m);
        grid_ub += z;
      } else {
        grid_ub += *a.zeta_g;
      }
      if (inst_.options.cable_sizing) {
        double z = 0;
        for (const auto& t : inst_.cable_catalog->types)
          z = std::max(z, t.cost_per_m * a.length_m);
        grid_e_ub += z;
      }
      if (a.has_heat()) {
        tech_ub += *std::max_element(co.gamma.begin(), co.gamma.end());
        renov_ub += a.demand.SHL * (co.nu1 + co.nu2);
      }
    }
    double carbon_ub = co.kappa_e * s0Esum_ub_ + co.kappa_g * s0Gsum_ub_;

    cat.C_energy = add("C_energy", 0, energy_ub);
    cat.C_tax = add("C_tax", 0, tax_ub);
    cat.C_allocation = add("C_allocation", 0, alloc_ub);
    cat.C_grid = add("C_grid", 0, grid_ub);
    if (inst_.options.cable_sizing) cat.C_grid_e = add("C_grid_e", 0, grid_e_ub);
    cat.C_tech = add("C_tech", 0, tech_ub);
    cat.C_renov = add("C_renov", 0, renov_ub);
    cat.E_carbon = add("E_carbon", 0, carbon_ub);
    double total_ub = energy_ub + tax_ub + alloc_ub + grid_ub + grid_e_ub + tech_ub + renov_ub;
    cat.C_total = add("C_total", 0, total_ub);
  }

  ConstraintRow& row(std::string id, RowKind k, std::string tag) {
    rows_.push_back(ConstraintRow{std::move(id), k, {}, {}, {}, 0.0, std::move(tag)});
    return rows_.back();
  }

  static void lin(ConstraintRow& r, VarId v, double c) {
    assert(v != kNoVar);
    if (c == 0) return;
    // Merge repeated mentions of a variable so each row carries one
    // coefficient per column; consumers may index rows densely.
    for (auto& [pv, pc] : r.lin) {
      if (pv == v) {
        pc += c;
        return;
      }
    }
    r.lin.emplace_back(v, c);
  }

  void emit_technology() {
    for (int e = 0; e < inst_.arc_count(); ++e) {
      if (!inst_.arcs[e].has_heat()) continue;
      auto& r = row("atmost1MECT" + sfx(inst_.arcs[e]), RowKind::LinEq, "atmost1MECT");
      for (VarId x : f_.catalog.arc[e].x) lin(r, x, 1);
      r.rhs = 1;
    }
  }

  void emit_renovation() {
    for (int e = 0; e < inst_.arc_count(); ++e) {
      if (!inst_.arcs[e].has_heat()) continue;
      std::string s = sfx(inst_.arcs[e]);
      const ArcVars& av = f_.catalog.arc[e];
      for (Tech t : kAllTechs) {
        int ti = static_cast<int>(t);
        std::string tn = tech_name(t);
        auto& r1 = row("installreno_" + tn + s, RowKind::LinIneq, "installreno");
        lin(r1, av.x1[ti], 1);
        lin(r1, av.x[ti], -1);
        auto& r2 = row("firstsecren_a_" + tn + s, RowKind::LinIneq, "firstsecren");
        lin(r2, av.x2[ti], 1);
        lin(r2, av.x1[ti], -1);
        auto& r3 = row("firstsecren_b_" + tn + s, RowKind::LinIneq, "firstsecren");
        lin(r3, av.z[ti], 1);
        lin(r3, av.x1[ti], -1);
        auto& r4 = row("firstsecren_c_" + tn + s, RowKind::LinIneq, "firstsecren");
        lin(r4, av.x2[ti], 1);
        lin(r4, av.z[ti], -1);
      }
    }
  }

  // Renovation-discounted demand bracket: coefficient set for
  // x_t - mu1*x1_t - mu2*x2_t scaled by `c`.
  void bracket(ConstraintRow& r, int e, Tech t, double c) {
    const ArcVars& av = f_.catalog.arc[e];
    int ti = static_cast<int>(t);
    lin(r, av.x[ti], c);
    if (av.x1[ti] != kNoVar) {
      lin(r, av.x1[ti], -c * inst_.costs.mu1);
      lin(r, av.x2[ti], -c * inst_.costs.mu2);
    }
  }

  void emit_demand_coupling() {
    const auto& cat = f_.catalog;
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      std::string s = sfx(a);
      auto& rs = row("gasrenored_sum" + s, RowKind::LinEq, "gasrenored");
      lin(rs, cat.arc[e].s_Gsum, 1);
      for (Tech t : {Tech::CB, Tech::CHP}) bracket(rs, e, t, -a.demand.sgl(t));
      auto& rm = row("gasrenored_max" + s, RowKind::LinEq, "gasrenored");
      lin(rm, cat.arc[e].s_Gmax, 1);
      for (Tech t : {Tech::CB, Tech::CHP}) bracket(rm, e, t, -a.demand.mgl(t));
    }
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      std::string s = sfx(a);
      for (Tech t : kAllTechs) {
        int ti = static_cast<int>(t);
        std::string tn = tech_name(t);
        auto& rs = row("ereno_sum_" + tn + s, RowKind::LinEq, "ereno");
        lin(rs, cat.arc[e].s_Esum_t[ti], 1);
        lin(rs, cat.arc[e].x[ti], -a.demand.SEL);
        bracket(rs, e, t, -(a.demand.sel(t) - a.demand.SEL));
        auto& rm = row("ereno_max_" + tn + s, RowKind::LinEq, "ereno");
        lin(rm, cat.arc[e].s_Emax_t[ti], 1);
        lin(rm, cat.arc[e].x[ti], -a.demand.MEL);
        bracket(rm, e, t, -(a.demand.mel(t) - a.demand.MEL));
      }
    }
    for (int e = 0; e < inst_.arc_count(); ++e) {
      std::string s = sfx(inst_.arcs[e]);
      auto& rs = row("redelec_sum" + s, RowKind::LinEq, "redelec");
      lin(rs, cat.arc[e].s_Esum, 1);
      for (VarId v : cat.arc[e].s_Esum_t) lin(rs, v, -1);
      auto& rm = row("redelec_max" + s, RowKind::LinEq, "redelec");
      lin(rm, cat.arc[e].s_Emax, 1);
      for (VarId v : cat.arc[e].s_Emax_t) lin(rm, v, -1);
    }
    for (int i = 0; i < inst_.node_count; ++i) {
      auto& re = row("artmove_e" + sfx(i), RowKind::LinEq, "artmove");
      lin(re, cat.node[i].sbar_Emax, 1);
      auto& rg = row("artmove_g" + sfx(i), RowKind::LinEq, "artmove");
      lin(rg, cat.node[i].sbar_Gmax, 1);
      for (int e : inst_.in_arcs[i]) {
        lin(re, cat.arc[e].s_Emax, -0.5);
        lin(rg, cat.arc[e].s_Gmax, -0.5);
      }
      for (int e : inst_.out_arcs[i]) {
        lin(re, cat.arc[e].s_Emax, -0.5);
        lin(rg, cat.arc[e].s_Gmax, -0.5);
      }
    }
    auto& rie = row("injconst_e", RowKind::LinEq, "injconst");
    lin(rie, cat.s0_Esum, 1);
    auto& rig = row("injconst_g", RowKind::LinEq, "injconst");
    lin(rig, cat.s0_Gsum, 1);
    for (int e = 0; e < inst_.arc_count(); ++e) {
      lin(rie, cat.arc[e].s_Esum, -1);
      lin(rig, cat.arc[e].s_Gsum, -1);
    }
  }

  void emit_electric() {
    const auto& cat = f_.catalog;
    const auto& ph = inst_.physical;
    auto& rsv = row("sourcevolt", RowKind::LinEq, "sourcevolt");
    lin(rsv, cat.node[0].u, 1);
    rsv.rhs = ph.u_max;
    for (int i = 1; i < inst_.node_count; ++i) {
      auto& rlo = row("voltbounds_lo" + sfx(i), RowKind::LinIneq, "voltbounds");
      lin(rlo, cat.node[i].u, -1);
      rlo.rhs = -ph.u_min;
      auto& rhi = row("voltbounds_hi" + sfx(i), RowKind::LinIneq, "voltbounds");
      lin(rhi, cat.node[i].u, 1);
      rhi.rhs = ph.u_max;
    }
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      auto& r = row("voltdrop" + sfx(a), RowKind::LinEq, "voltdrop");
      lin(r, cat.arc[e].u_bar, 1);
      lin(r, cat.node[a.i].u, -1);
      lin(r, cat.node[a.j].u, 1);
    }
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      std::string s = sfx(a);
      const ArcVars& av = cat.arc[e];
      if (!inst_.options.cable_sizing) {
        double R = *a.R_e;
        auto& rin = row("ohmic_in" + s, RowKind::BilinEq, "ohmic");
        lin(rin, av.f_e_in, R);
        rin.products.push_back({cat.node[a.j].u, av.u_bar, -ph.a_e});
        auto& rout = row("ohmic_out" + s, RowKind::BilinEq, "ohmic");
        lin(rout, av.f_e_out, R);
        rout.products.push_back({cat.node[a.i].u, av.u_bar, -ph.a_e});
      } else {
        auto& rsel = row("cablesel" + s, RowKind::LinEq, "cablesel");
        for (VarId y : av.y_cable) lin(rsel, y, 1);
        rsel.rhs = 1;
        const auto& types = inst_.cable_catalog->types;
        for (int k = 0; k < static_cast<int>(types.size()); ++k) {
          double R = types[k].R_per_m * a.length_m;
          // |R*f - a_e*u*ubar| <= M*(1 - y_k), one pair per flow direction
          auto bigm = [&](Interval fb, Interval ub) {
            Interval uu = imul(ub, ab_[e].ubar);
            double m1 = std::max(std::abs(R * fb.lo - ph.a_e * uu.hi),
                                 std::abs(R * fb.hi - ph.a_e * uu.lo));
            double m2 = std::max(std::abs(R * fb.hi - ph.a_e * uu.hi),
                                 std::abs(R * fb.lo - ph.a_e * uu.lo));
            return std::max(m1, m2);
          };
          double Min = bigm(ab_[e].f_in, u_box(a.j));
          double Mout = bigm(ab_[e].f_out, u_box(a.i));
          std::string ks = "_k" + std::to_string(k);
          auto cond = [&](const std::string& id, VarId fvar, int unode, double sign,
                          double M) {
            auto& r = row(id, RowKind::BilinIneq, "ohmic");
            lin(r, fvar, sign * R);
            r.products.push_back({cat.node[unode].u, av.u_bar, -sign * ph.a_e});
            lin(r, av.y_cable[k], M);
            r.rhs = M;
          };
          cond("ohmic_in_hi" + ks + s, av.f_e_in, a.j, 1.0, Min);
          cond("ohmic_in_lo" + ks + s, av.f_e_in, a.j, -1.0, Min);
          cond("ohmic_out_hi" + ks + s, av.f_e_out, a.i, 1.0, Mout);
          cond("ohmic_out_lo" + ks + s, av.f_e_out, a.i, -1.0, Mout);
        }
      }
    }
    for (int i = 1; i < inst_.node_count; ++i) {
      auto& r = row("elecbalansink" + sfx(i), RowKind::LinEq, "elecbalansink");
      for (int e : inst_.in_arcs[i]) lin(r, cat.arc[e].f_e_in, 1);
      for (int e : inst_.out_arcs[i]) lin(r, cat.arc[e].f_e_out, -1);
      lin(r, cat.node[i].sbar_Emax, -1);
    }
    auto& rsrc = row("elecbalansource", RowKind::LinEq, "elecbalansource");
    lin(rsrc, cat.s0_Emax, 1);
    for (int e : inst_.in_arcs[0]) lin(rsrc, cat.arc[e].f_e_in, 1);
    for (int e : inst_.out_arcs[0]) lin(rsrc, cat.arc[e].f_e_out, -1);
    lin(rsrc, cat.node[0].sbar_Emax, -1);
    auto& rim = row("injectmax", RowKind::LinIneq, "injectmax");
    for (int i = 0; i < inst_.node_count; ++i) lin(rim, cat.node[i].sbar_Emax, 1);
    lin(rim, cat.s0_Emax, -1);
  }

  void emit_gas() {
    const auto& cat = f_.catalog;
    const auto& ph = inst_.physical;
    double pbmax = ph.p_bar_max(), pbmin = ph.p_bar_min();
    double ag2 = ph.a_g * ph.a_g;

    auto& rps = row("gpsource", RowKind::LinEq, "gpsource");
    lin(rps, cat.node[0].p, 1);
    rps.rhs = ph.p_max;
    for (int i = 1; i < inst_.node_count; ++i) {
      auto& rlo = row("gpbounds_lo" + sfx(i), RowKind::LinIneq, "gpbounds");
      lin(rlo, cat.node[i].p, -1);
      rlo.rhs = -ph.p_min;
      auto& rhi = row("gpbounds_hi" + sfx(i), RowKind::LinIneq, "gpbounds");
      lin(rhi, cat.node[i].p, 1);
      rhi.rhs = ph.p_max;
    }
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      std::string s = sfx(a);
      const ArcVars& av = cat.arc[e];
      auto& r1 = row("pipebuild_cb" + s, RowKind::LinIneq, "pipebuild");
      lin(r1, av.x[0], 1);
      lin(r1, av.y_g, -1);
      auto& r2 = row("pipebuild_chp" + s, RowKind::LinIneq, "pipebuild");
      lin(r2, av.x[1], 1);
      lin(r2, av.y_g, -1);
      auto& rl = row("gploss" + s, RowKind::LinEq, "gploss");
      lin(rl, av.p_bar, 1);
      lin(rl, cat.node[a.i].p, -1);
      lin(rl, cat.node[a.j].p, 1);
    }
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      std::string s = sfx(a);
      const ArcVars& av = cat.arc[e];
      // (1-y+)q_min <= q <= (1-y-)q_max, same for p_bar, plus y+ + y- = 1
      auto& rql = row("refgflow_q_lo" + s, RowKind::LinIneq, "refgflow");
      lin(rql, av.q_bar, -1);
      lin(rql, av.y_gp, -ph.q_bar_min());
      rql.rhs = -ph.q_bar_min();
      auto& rqh = row("refgflow_q_hi" + s, RowKind::LinIneq, "refgflow");
      lin(rqh, av.q_bar, 1);
      lin(rqh, av.y_gm, ph.q_bar_max);
      rqh.rhs = ph.q_bar_max;
      auto& rpl = row("refgflow_p_lo" + s, RowKind::LinIneq, "refgflow");
      lin(rpl, av.p_bar, -1);
      lin(rpl, av.y_gp, -pbmin);
      rpl.rhs = -pbmin;
      auto& rph = row("refgflow_p_hi" + s, RowKind::LinIneq, "refgflow");
      lin(rph, av.p_bar, 1);
      lin(rph, av.y_gm, pbmax);
      rph.rhs = pbmax;
      auto& rd = row("refgflow_dir" + s, RowKind::LinEq, "refgflow");
      lin(rd, av.y_gp, 1);
      lin(rd, av.y_gm, 1);
      rd.rhs = 1;

      auto& m1 = row("pbarref_1" + s, RowKind::LinIneq, "pbarref");
      lin(m1, av.y_gp, pbmax);
      lin(m1, av.y_gm, -pbmax);
      lin(m1, av.p_bar, 1);
      lin(m1, av.p_bar_plus, -1);
      m1.rhs = pbmax;
      auto& m2 = row("pbarref_2" + s, RowKind::LinIneq, "pbarref");
      lin(m2, av.y_gp, pbmin);
      lin(m2, av.y_gm, -pbmin);
      lin(m2, av.p_bar, -1);
      lin(m2, av.p_bar_plus, -1);
      m2.rhs = -pbmin;
      auto& m3 = row("pbarref_3" + s, RowKind::LinIneq, "pbarref");
      lin(m3, av.p_bar_plus, 1);
      lin(m3, av.y_gp, -pbmin);
      lin(m3, av.y_gm, pbmin);
      lin(m3, av.p_bar, -1);
      m3.rhs = -pbmin;
      auto& m4 = row("pbarref_4" + s, RowKind::LinIneq, "pbarref");
      lin(m4, av.p_bar_plus, 1);
      lin(m4, av.y_gp, -pbmax);
      lin(m4, av.y_gm, pbmax);
      lin(m4, av.p_bar, 1);
      m4.rhs = pbmax;

      if (!inst_.options.pipe_sizing) {
        double R = *a.R_g;
        auto& d1 = row("DWfinal_lo" + s, RowKind::QuadIneq, "DWfinal");
        lin(d1, av.p_bar_plus, ag2);
        lin(d1, av.y_g, ag2 * pbmax);
        d1.squares.push_back({av.f_g, -R});
        d1.rhs = ag2 * pbmax;
        auto& d2 = row("DWfinal_hi" + s, RowKind::QuadIneq, "DWfinal");
        d2.squares.push_back({av.f_g, R});
        lin(d2, av.p_bar_plus, -ag2);
        auto& d3 = row("DWfinal_cap" + s, RowKind::QuadIneq, "DWfinal");
        d3.squares.push_back({av.f_g, R});
        lin(d3, av.y_g, -ag2 * pbmax);
      } else {
        auto& rsel = row("pipesel" + s, RowKind::LinEq, "pipesel");
        for (VarId y : av.y_pipe) lin(rsel, y, 1);
        lin(rsel, av.y_g, -1);
        const auto& pc = *inst_.pipe_catalog;
        for (int k = 0; k < static_cast<int>(pc.types.size()); ++k) {
          double R = pipe_resistance(pc.types[k].diameter_m, a.length_m, pc.gas_density,
                                     pc.gas_velocity);
          std::string ks = "_k" + std::to_string(k);
          double f2 = ab_[e].f_g_abs * ab_[e].f_g_abs;
          double Mlo = ag2 * pbmax + R * f2;
          auto& d1 = row("DWfinal_lo" + ks + s, RowKind::QuadIneq, "DWfinal");
          lin(d1, av.p_bar_plus, ag2);
          lin(d1, av.y_g, ag2 * pbmax);
          d1.squares.push_back({av.f_g, -R});
          lin(d1, av.y_pipe[k], Mlo);
          d1.rhs = ag2 * pbmax + Mlo;
          double Mhi = R * f2;
          auto& d2 = row("DWfinal_hi" + ks + s, RowKind::QuadIneq, "DWfinal");
          d2.squares.push_back({av.f_g, R});
          lin(d2, av.p_bar_plus, -ag2);
          lin(d2, av.y_pipe[k], Mhi);
          d2.rhs = Mhi;
          auto& d3 = row("DWfinal_cap" + ks + s, RowKind::QuadIneq, "DWfinal");
          d3.squares.push_back({av.f_g, R});
          lin(d3, av.y_g, -ag2 * pbmax);
          lin(d3, av.y_pipe[k], Mhi);
          d3.rhs = Mhi;
        }
      }

      double fmax = ph.a_g * ph.q_bar_max;
      auto& b1 = row("builgaspiperel_lo" + s, RowKind::LinIneq, "builgaspiperel");
      lin(b1, av.f_g, -1);
      lin(b1, av.y_g, -fmax);
      auto& b2 = row("builgaspiperel_hi" + s, RowKind::LinIneq, "builgaspiperel");
      lin(b2, av.f_g, 1);
      lin(b2, av.y_g, -fmax);

      auto& rq = row("qcouple" + s, RowKind::LinEq, "qcouple");
      lin(rq, av.q_bar, 1);
      lin(rq, av.f_g, -1.0 / ph.a_g);
    }
    for (int i = 1; i < inst_.node_count; ++i) {
      auto& r = row("gasbalansink" + sfx(i), RowKind::LinEq, "gasbalansink");
      for (int e : inst_.in_arcs[i]) lin(r, cat.arc[e].f_g, 1);
      for (int e : inst_.out_arcs[i]) lin(r, cat.arc[e].f_g, -1);
      lin(r, cat.node[i].sbar_Gmax, -1);
    }
    auto& rsrc = row("gasbalansource", RowKind::LinEq, "gasbalansource");
    lin(rsrc, cat.s0_Gmax, 1);
    for (int e : inst_.in_arcs[0]) lin(rsrc, cat.arc[e].f_g, 1);
    for (int e : inst_.out_arcs[0]) lin(rsrc, cat.arc[e].f_g, -1);
    lin(rsrc, cat.node[0].sbar_Gmax, -1);
  }

  void emit_costs() {
    const auto& cat = f_.catalog;
    const auto& co = inst_.costs;

    auto& rchp = row("schp_def", RowKind::LinEq, "encontax");
    lin(rchp, cat.s_chp_Esum, 1);
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const ArcDemand& d = inst_.arcs[e].demand;
      bracket(rchp, e, Tech::CHP, -(d.SEL - d.sel(Tech::CHP)));
    }

    auto& re = row("enconpur", RowKind::LinEq, "enconpur");
    lin(re, cat.C_energy, 1);
    lin(re, cat.s0_Esum, -co.alpha_p_e);
    lin(re, cat.s0_Gsum, -co.alpha_p_g);

    auto& rt = row("encontax", RowKind::LinEq, "encontax");
    lin(rt, cat.C_tax, 1);
    lin(rt, cat.s0_Esum, -co.beta_e);
    lin(rt, cat.s_chp_Esum, -co.beta_e * co.t_adv);
    lin(rt, cat.s0_Gsum, -co.beta_g);

    auto& ra = row("allocos", RowKind::LinEq, "allocos");
    lin(ra, cat.C_allocation, 1);
    lin(ra, cat.s0_Emax, -co.alpha_a_e);
    lin(ra, cat.s0_Gmax, -co.alpha_a_g);

    auto& rg = row("gridcosts", RowKind::LinEq, "gridcosts");
    lin(rg, cat.C_grid, 1);
    for (int e = 0; e < inst_.arc_count(); ++e) {
      const Arc& a = inst_.arcs[e];
      if (inst_.options.pipe_sizing) {
        const auto& types = inst_.pipe_catalog->types;
        for (int k = 0; k < static_cast<int>(types.size()); ++k)
          lin(rg, cat.arc[e].y_pipe[k], -types[k].cost_per_m * a.length_m);
      } else {
        lin(rg, cat.arc[e].y_g, -*a.zeta_g);
      }
    }

    if (inst_.options.cable_sizing) {
      auto& rge = row("cablecosts", RowKind::LinEq, "cablecosts");
      lin(rge, cat.C_grid_e, 1);
      for (int e = 0; e < inst_.arc_count(); ++e) {
        const auto& types = inst_.cable_catalog->types;
        for (int k = 0; k < static_cast<int>(types.size()); ++k)
          lin(rge, cat.arc[e].y_cable[k],
              -types[k].cost_per_m * inst_.arcs[e].length_m);
      }
    }

    auto& rtc = row("techcosts", RowKind::LinEq, "techcosts");
    lin(rtc, cat.C_tech, 1);
    for (int e = 0; e < inst_.arc_count(); ++e)
      for (Tech t : kAllTechs)
        lin(rtc, cat.arc[e].x[static_cast<int>(t)], -co.gamma_t(t));

    auto& rr = row("renocosts", RowKind::LinEq, "renocosts");
    lin(rr, cat.C_renov, 1);
    for (int e = 0; e < inst_.arc_count(); ++e) {
      if (!inst_.arcs[e].has_heat()) continue;
      double shl = inst_.arcs[e].demand.SHL;
      for (int ti = 0; ti < 3; ++ti) {
        lin(rr, cat.arc[e].x1[ti], -co.nu1 * shl);
        lin(rr, cat.arc[e].x2[ti], -co.nu2 * shl);
      }
    }

    auto& rc = row("carbon", RowKind::LinEq, "carbon");
    lin(rc, cat.E_carbon, 1);
    lin(rc, cat.s0_Esum, -co.kappa_e);
    lin(rc, cat.s0_Gsum, -co.kappa_g);

    auto& rct = row("carbontar", RowKind::LinIneq, "carbontar");
    lin(rct, cat.E_carbon, 1);
    rct.rhs = co.E_target;

    auto& rm = row("model", RowKind::LinEq, "model");
    lin(rm, cat.C_total, 1);
    for (VarId v : {cat.C_energy, cat.C_tax, cat.C_allocation, cat.C_grid, cat.C_tech,
                    cat.C_renov})
      lin(rm, v, -1);
    if (cat.C_grid_e != kNoVar) lin(rm, cat.C_grid_e, -1);
  }
};

}  // namespace

Formulation build_formulation(const Instance& inst, const FormulationOptions& opts) {
  ValidationReport rep = validate_instance(inst);
  if (!rep.ok()) throw ValidationError(rep.violations.front());
  return Builder(inst, opts).build();
}

ViolationReport evaluate_residuals(const Formulation& f, const PlanPoint& pt, double tol) {
  if (static_cast<int>(pt.x.size()) != f.catalog.size())
    throw std::invalid_argument("evaluate_residuals: point does not assign every variable");
  ViolationReport rep;
  for (int v = 0; v < f.catalog.size(); ++v) {
    const VarInfo& vi = f.catalog.vars[v];
    double bv = std::max(vi.lo - pt.x[v], pt.x[v] - vi.hi);
    if (bv > tol) rep.bounds.push_back({vi.name, bv});
    rep.max_violation = std::max(rep.max_violation, bv);
    if (vi.kind == VarKind::Binary) {
      double iv = std::abs(pt.x[v] - std::round(pt.x[v]));
      if (iv > tol) rep.integrality.push_back({vi.name, iv});
      rep.max_violation = std::max(rep.max_violation, iv);
    }
  }
  for (const auto& r : f.rows) {
    double res = row_residual(r, pt.x);
    double viol = r.is_equality() ? std::abs(res) : std::max(0.0, res);
    if (viol > tol) rep.rows.push_back({r.id, viol});
    rep.max_violation = std::max(rep.max_violation, viol);
  }
  return rep;
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

const char* kind_name(RowKind k) {
  switch (k) {
    case RowKind::LinEq: return "lin-eq";
    case RowKind::LinIneq: return "lin-ineq";
    case RowKind::BilinEq: return "bilin-eq";
    case RowKind::BilinIneq: return "bilin-ineq";
    case RowKind::QuadIneq: return "quad-ineq";
  }
  return "?";
}

}  // namespace

std::string export_text(const Formulation& f) {
  std::ostringstream out;
  const auto& vars = f.catalog.vars;
  out << "# variables: " << vars.size() << " rows: " << f.rows.size() << "\n";
  for (const auto& v : vars)
    out << "var " << v.name << " in [" << num(v.lo) << ", " << num(v.hi) << "]"
        << (v.kind == VarKind::Binary ? " binary" : "") << "\n";
  for (const auto& r : f.rows) {
    out << r.id << " " << kind_name(r.kind) << " :";
    for (auto [v, c] : r.lin) out << " " << num(c) << "*" << vars[v].name;
    for (const auto& p : r.products)
      out << " " << num(p.coef) << "*" << vars[p.a].name << "*" << vars[p.b].name;
    for (const auto& s : r.squares) out << " " << num(s.coef) << "*" << vars[s.v].name << "^2";
    out << (r.is_equality() ? " = " : " <= ") << num(r.rhs) << " # " << r.tag << "\n";
  }
  out << "minimize :";
  for (auto [v, c] : f.objective) out << " " << num(c) << "*" << vars[v].name;
  out << "\n";
  return out.str();
}

std::string export_json(const Formulation& f) {
  nlohmann::ordered_json doc;
  doc["variables"] = nlohmann::ordered_json::array();
  for (const auto& v : f.catalog.vars)
    doc["variables"].push_back({{"name", v.name},
                                {"lo", v.lo},
                                {"hi", v.hi},
                                {"binary", v.kind == VarKind::Binary}});
  doc["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : f.rows) {
    nlohmann::ordered_json jr;
    jr["id"] = r.id;
    jr["kind"] = kind_name(r.kind);
    jr["lin"] = nlohmann::ordered_json::array();
    for (auto [v, c] : r.lin) jr["lin"].push_back({{"var", f.catalog.vars[v].name}, {"coef", c}});
    if (!r.products.empty()) {
      jr["products"] = nlohmann::ordered_json::array();
      for (const auto& p : r.products)
        jr["products"].push_back({{"a", f.catalog.vars[p.a].name},
                                  {"b", f.catalog.vars[p.b].name},
                                  {"coef", p.coef}});
    }
    if (!r.squares.empty()) {
      jr["squares"] = nlohmann::ordered_json::array();
      for (const auto& s : r.squares)
        jr["squares"].push_back({{"var", f.catalog.vars[s.v].name}, {"coef", s.coef}});
    }
    jr["rhs"] = r.rhs;
    jr["tag"] = r.tag;
    doc["rows"].push_back(jr);
  }
  doc["objective"] = nlohmann::ordered_json::array();
  for (auto [v, c] : f.objective)
    doc["objective"].push_back({{"var", f.catalog.vars[v].name}, {"coef", c}});
  return doc.dump(2) + "\n";
}

}  // namespace decnet
