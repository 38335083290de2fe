#include "decnet/costing.hpp"

#include <algorithm>

namespace decnet {

YearlyLoads yearly_loads(const Instance& inst, const Plan& plan) {
  YearlyLoads yl;
  for (int e = 0; e < inst.arc_count(); ++e) {
    const TechChoice& c = plan[e];
    if (!c.tech) continue;
    const ArcDemand& d = inst.arcs[e].demand;
    double b = 1.0 - inst.costs.mu1 * c.x1 - inst.costs.mu2 * c.x2;
    yl.s0_Esum += d.SEL + (d.sel(*c.tech) - d.SEL) * b;
    yl.s0_Gsum += d.sgl(*c.tech) * b;
    if (*c.tech == Tech::CHP) yl.s_chp_Esum += (d.SEL - d.sel(Tech::CHP)) * b;
  }
  return yl;
}

CostBreakdown evaluate_cost(const Instance& inst, const Plan& plan,
                            const SimulationResult& sim) {
  const CostParams& co = inst.costs;
  YearlyLoads yl = yearly_loads(inst, plan);
  CostBreakdown out;
  out.energy = co.alpha_p_e * yl.s0_Esum + co.alpha_p_g * yl.s0_Gsum;
  out.tax = co.beta_e * (yl.s0_Esum + co.t_adv * yl.s_chp_Esum) + co.beta_g * yl.s0_Gsum;
  out.allocation =
      co.alpha_a_e * sim.electric.source_peak + co.alpha_a_g * sim.gas.source_peak;
  out.emission = co.kappa_e * yl.s0_Esum + co.kappa_g * yl.s0_Gsum;
  for (int e = 0; e < inst.arc_count(); ++e) {
    const Arc& arc = inst.arcs[e];
    const TechChoice& c = plan[e];
    if (c.pipe) {
      if (inst.options.pipe_sizing)
        out.grid += inst.pipe_catalog->types[c.pipe_type].cost_per_m * arc.length_m;
      else
        out.grid += *arc.zeta_g;
    }
    if (inst.options.cable_sizing)
      out.grid_e += inst.cable_catalog->types[c.cable_type].cost_per_m * arc.length_m;
    if (c.tech) out.tech += co.gamma_t(*c.tech);
    if (arc.has_heat())
      out.renovation += arc.demand.SHL * (co.nu1 * c.x1 + co.nu2 * c.x2);
  }
  return out;
}

double emission_floor(const Instance& inst) {
  const CostParams& co = inst.costs;
  double floor = 0;
  for (const Arc& arc : inst.arcs) {
    if (!arc.has_heat()) continue;
    const ArcDemand& d = arc.demand;
    double best = 0;
    bool first = true;
    for (Tech t : kAllTechs) {
      // Emission is linear in the renovation bracket, so only its ends matter.
      for (double b : {1.0, 1.0 - co.mu1, 1.0 - co.mu1 - co.mu2}) {
        double em = co.kappa_e * (d.SEL + (d.sel(t) - d.SEL) * b) +
                    co.kappa_g * d.sgl(t) * b;
        if (first || em < best) {
          best = em;
          first = false;
        }
      }
    }
    floor += best;
  }
  return floor;
}

}  // namespace decnet
