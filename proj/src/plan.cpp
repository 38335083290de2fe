#include "decnet/plan.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace decnet {

using nlohmann::ordered_json;

std::string plan_to_json(const Instance& inst, const Plan& plan) {
  if (static_cast<int>(plan.size()) != inst.arc_count())
    throw std::invalid_argument("plan_to_json: plan must cover every arc");
  ordered_json doc;
  doc["arcs"] = ordered_json::array();
  for (int e = 0; e < inst.arc_count(); ++e) {
    const Arc& arc = inst.arcs[e];
    const TechChoice& c = plan[e];
    ordered_json ja;
    ja["i"] = arc.i;
    ja["j"] = arc.j;
    if (c.tech)
      ja["tech"] = tech_name(*c.tech);
    else
      ja["tech"] = nullptr;
    ja["x1"] = c.x1;
    ja["x2"] = c.x2;
    ja["pipe"] = c.pipe;
    if (inst.options.cable_sizing) ja["cable_type"] = c.cable_type;
    if (inst.options.pipe_sizing && c.pipe) ja["pipe_type"] = c.pipe_type;
    doc["arcs"].push_back(std::move(ja));
  }
  return doc.dump(2) + "\n";
}

Plan plan_from_json(const Instance& inst, const std::string& text) {
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ParseError(std::string("plan: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("arcs") || !doc["arcs"].is_array())
    throw ParseError("plan: expected an object with an \"arcs\" array");
  const auto& arr = doc["arcs"];
  if (static_cast<int>(arr.size()) != inst.arc_count())
    throw ParseError("plan: expected " + std::to_string(inst.arc_count()) +
                     " arc entries, got " + std::to_string(arr.size()));
  Plan plan(inst.arc_count());
  for (int e = 0; e < inst.arc_count(); ++e) {
    const auto& ja = arr[e];
    const Arc& arc = inst.arcs[e];
    std::string where = "plan.arcs[" + std::to_string(e) + "]";
    if (!ja.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& [key, value] : ja.items()) {
      (void)value;
      static const char* allowed[] = {"i", "j", "tech", "x1", "x2", "pipe",
                                      "cable_type", "pipe_type"};
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) throw ParseError(where + ": unknown key \"" + key + "\"");
    }
    if (!ja.contains("i") || !ja.contains("j") || ja["i"] != arc.i || ja["j"] != arc.j)
      throw ParseError(where + ": endpoints do not match arc (" +
                       std::to_string(arc.i) + "," + std::to_string(arc.j) + ")");
    TechChoice& c = plan[e];
    if (ja.contains("tech") && !ja["tech"].is_null()) {
      if (!ja["tech"].is_string()) throw ParseError(where + ".tech: expected a string");
      auto t = tech_from_name(ja["tech"].get<std::string>());
      if (!t) throw ParseError(where + ".tech: unknown technology \"" +
                               ja["tech"].get<std::string>() + "\"");
      c.tech = t;
    }
    auto num = [&](const char* key, double fallback) {
      if (!ja.contains(key)) return fallback;
      if (!ja[key].is_number())
        throw ParseError(where + "." + key + ": expected a number");
      return ja[key].get<double>();
    };
    c.x1 = num("x1", 0.0);
    c.x2 = num("x2", 0.0);
    if (ja.contains("pipe")) {
      if (!ja["pipe"].is_boolean()) throw ParseError(where + ".pipe: expected a boolean");
      c.pipe = ja["pipe"].get<bool>();
    }
    if (ja.contains("cable_type")) {
      if (!ja["cable_type"].is_number_integer())
        throw ParseError(where + ".cable_type: expected an integer");
      c.cable_type = ja["cable_type"].get<int>();
    }
    if (ja.contains("pipe_type")) {
      if (!ja["pipe_type"].is_number_integer())
        throw ParseError(where + ".pipe_type: expected an integer");
      c.pipe_type = ja["pipe_type"].get<int>();
    }
  }
  return plan;
}

PlanPoint assemble_plan(const Instance& inst, const Formulation& f, const Plan& plan,
                        const SimulationResult& sim, const CostBreakdown& cost) {
  if (static_cast<int>(plan.size()) != inst.arc_count())
    throw std::invalid_argument("assemble_plan: plan must cover every arc");
  const auto& cat = f.catalog;
  PlanPoint pt;
  pt.x.assign(cat.size(), 0.0);
  auto set = [&](VarId v, double val) {
    if (v != kNoVar) pt.x[v] = val;
  };

  for (int n = 0; n < inst.node_count; ++n) {
    set(cat.node[n].u, sim.electric.u[n]);
    set(cat.node[n].p, sim.gas.p[n]);
    set(cat.node[n].sbar_Emax, sim.loads.elec_peak[n]);
    set(cat.node[n].sbar_Gmax, sim.loads.gas_peak[n]);
  }

  double s0_Esum = 0, s0_Gsum = 0, s_chp = 0;
  const double mu1 = inst.costs.mu1, mu2 = inst.costs.mu2;
  for (int e = 0; e < inst.arc_count(); ++e) {
    const Arc& arc = inst.arcs[e];
    const ArcDemand& d = arc.demand;
    const TechChoice& c = plan[e];
    const ArcVars& av = cat.arc[e];

    if (c.tech) {
      int ti = static_cast<int>(*c.tech);
      set(av.x[ti], 1.0);
      set(av.x1[ti], c.x1);
      set(av.x2[ti], c.x2);
      set(av.z[ti], c.x2 > 1e-9 ? 1.0 : 0.0);
      double b = 1.0 - mu1 * c.x1 - mu2 * c.x2;
      double esum = d.SEL + (d.sel(*c.tech) - d.SEL) * b;
      double emax = d.MEL + (d.mel(*c.tech) - d.MEL) * b;
      set(av.s_Esum_t[ti], esum);
      set(av.s_Emax_t[ti], emax);
      set(av.s_Esum, esum);
      set(av.s_Emax, emax);
      set(av.s_Gsum, d.sgl(*c.tech) * b);
      set(av.s_Gmax, d.mgl(*c.tech) * b);
      s0_Esum += esum;
      s0_Gsum += d.sgl(*c.tech) * b;
      if (*c.tech == Tech::CHP) s_chp += (d.SEL - d.sel(Tech::CHP)) * b;
    }

    set(av.y_g, c.pipe ? 1.0 : 0.0);
    double pbar = sim.gas.p[arc.i] - sim.gas.p[arc.j];
    set(av.p_bar, pbar);
    set(av.p_bar_plus, std::abs(pbar));
    set(av.y_gp, pbar >= 0 ? 1.0 : 0.0);
    set(av.y_gm, pbar >= 0 ? 0.0 : 1.0);
    set(av.f_g, sim.gas.f_g[e]);
    set(av.q_bar, sim.gas.q_bar[e]);
    set(av.u_bar, sim.electric.u[arc.i] - sim.electric.u[arc.j]);
    set(av.f_e_in, sim.electric.f_in[e]);
    set(av.f_e_out, sim.electric.f_out[e]);
    if (!av.y_cable.empty() && c.cable_type >= 0 &&
        c.cable_type < static_cast<int>(av.y_cable.size()))
      set(av.y_cable[c.cable_type], 1.0);
    if (c.pipe && !av.y_pipe.empty() && c.pipe_type >= 0 &&
        c.pipe_type < static_cast<int>(av.y_pipe.size()))
      set(av.y_pipe[c.pipe_type], 1.0);
  }

  set(cat.s0_Esum, s0_Esum);
  set(cat.s0_Gsum, s0_Gsum);
  set(cat.s0_Emax, sim.electric.source_peak);
  set(cat.s0_Gmax, sim.gas.source_peak);
  set(cat.s_chp_Esum, s_chp);
  set(cat.C_energy, cost.energy);
  set(cat.C_tax, cost.tax);
  set(cat.C_allocation, cost.allocation);
  set(cat.C_grid, cost.grid);
  set(cat.C_grid_e, cost.grid_e);
  set(cat.C_tech, cost.tech);
  set(cat.C_renov, cost.renovation);
  set(cat.E_carbon, cost.emission);
  set(cat.C_total, cost.total());
  return pt;
}

Plan plan_from_point(const Instance& inst, const Formulation& f,
                     const std::vector<double>& x) {
  const auto& cat = f.catalog;
  Plan plan(inst.arc_count());
  for (int e = 0; e < inst.arc_count(); ++e) {
    const ArcVars& av = cat.arc[e];
    TechChoice& c = plan[e];
    if (inst.arcs[e].has_heat()) {
      int best = 0;
      for (int ti = 1; ti < 3; ++ti)
        if (x[av.x[ti]] > x[av.x[best]]) best = ti;
      c.tech = static_cast<Tech>(best);
      c.x1 = std::clamp(x[av.x1[best]], 0.0, 1.0);
      c.x2 = std::clamp(x[av.x2[best]], 0.0, 1.0);
    }
    c.pipe = x[av.y_g] > 0.5;
    if (!av.y_cable.empty()) {
      int best = 0;
      for (int k = 1; k < static_cast<int>(av.y_cable.size()); ++k)
        if (x[av.y_cable[k]] > x[av.y_cable[best]]) best = k;
      c.cable_type = best;
    }
    if (c.pipe && !av.y_pipe.empty()) {
      int best = 0;
      for (int k = 1; k < static_cast<int>(av.y_pipe.size()); ++k)
        if (x[av.y_pipe[k]] > x[av.y_pipe[best]]) best = k;
      c.pipe_type = best;
    }
  }
  return plan;
}

}  // namespace decnet
