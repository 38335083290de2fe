#include "decnet/physics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "dense_lu.hpp"

namespace decnet {

namespace {

double reduction(const Instance& inst, const TechChoice& c) {
  return 1.0 - inst.costs.mu1 * c.x1 - inst.costs.mu2 * c.x2;
}

}  // namespace

NodeLoads node_peak_loads(const Instance& inst, const Plan& plan) {
  NodeLoads loads;
  loads.elec_peak.assign(inst.node_count, 0.0);
  loads.gas_peak.assign(inst.node_count, 0.0);
  for (int e = 0; e < inst.arc_count(); ++e) {
    const TechChoice& c = plan[e];
    if (!c.tech) continue;
    const ArcDemand& d = inst.arcs[e].demand;
    double b = reduction(inst, c);
    double se = d.MEL + (d.mel(*c.tech) - d.MEL) * b;
    double sg = d.mgl(*c.tech) * b;
    for (int n : {inst.arcs[e].i, inst.arcs[e].j}) {
      loads.elec_peak[n] += 0.5 * se;
      loads.gas_peak[n] += 0.5 * sg;
    }
  }
  return loads;
}

ElectricState solve_electric_peaks(const Instance& inst, const std::vector<double>& R_e,
                                   const std::vector<double>& node_peak,
                                   const NewtonOptions& opts) {
  const int N = inst.node_count;
  const int m = N - 1;  // unknowns: all sink voltages
  const double a = inst.physical.a_e;
  ElectricState st;
  st.u.assign(N, inst.physical.u_max);
  st.f_in.assign(inst.arc_count(), 0.0);
  st.f_out.assign(inst.arc_count(), 0.0);

  auto residual = [&](const std::vector<double>& u, std::vector<double>& F) {
    double worst = 0;
    for (int n = 1; n < N; ++n) {
      double acc = 0;
      for (int e : inst.in_arcs[n]) acc += (u[inst.arcs[e].i] - u[n]) / R_e[e];
      for (int e : inst.out_arcs[n]) acc += (u[inst.arcs[e].j] - u[n]) / R_e[e];
      F[n - 1] = a * u[n] * acc - node_peak[n];
      worst = std::max(worst, std::abs(F[n - 1]));
    }
    return worst;
  };

  std::vector<double> F(m), Ft(m), step(m);
  std::vector<double> utrial = st.u;
  double norm = residual(st.u, F);
  int it = 0;
  for (; it < opts.max_iter && norm > opts.tol; ++it) {
    // Jacobian of the nodal balances with respect to sink voltages.
    std::vector<double> J(static_cast<size_t>(m) * m, 0.0);
    for (int n = 1; n < N; ++n) {
      double acc = 0, inv = 0;
      auto touch = [&](int other, double r) {
        acc += (st.u[other] - st.u[n]) / r;
        inv += 1.0 / r;
        if (other >= 1) J[(n - 1) * static_cast<size_t>(m) + (other - 1)] += a * st.u[n] / r;
      };
      for (int e : inst.in_arcs[n]) touch(inst.arcs[e].i, R_e[e]);
      for (int e : inst.out_arcs[n]) touch(inst.arcs[e].j, R_e[e]);
      J[(n - 1) * static_cast<size_t>(m) + (n - 1)] += a * (acc - st.u[n] * inv);
    }
    detail::Lu lu = detail::lu_factor(std::move(J), m);
    if (!lu.ok) {
      st.message = "singular Jacobian in the electric solve";
      break;
    }
    for (int k = 0; k < m; ++k) step[k] = -F[k];
    detail::lu_solve(lu, step);

    // Damped update: halve the step until the residual stops growing.
    double lambda = 1.0, trial_norm = norm;
    bool improved = false;
    for (int h = 0; h < 40; ++h) {
      for (int n = 1; n < N; ++n) utrial[n] = st.u[n] + lambda * step[n - 1];
      trial_norm = residual(utrial, Ft);
      if (trial_norm < norm) {
        improved = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!improved) {
      st.message = "electric residual stalled; requested peak may exceed what the "
                   "network can carry";
      break;
    }
    for (int n = 1; n < N; ++n) st.u[n] = utrial[n];
    F = Ft;
    norm = trial_norm;
  }
  st.iterations = it;
  st.max_residual = norm;
  st.converged = norm <= opts.tol;
  if (!st.converged && st.message.empty())
    st.message = "electric solve hit the iteration limit";

  for (int e = 0; e < inst.arc_count(); ++e) {
    const Arc& arc = inst.arcs[e];
    double drop = st.u[arc.i] - st.u[arc.j];
    st.f_out[e] = a * st.u[arc.i] * drop / R_e[e];
    st.f_in[e] = a * st.u[arc.j] * drop / R_e[e];
    st.loss += st.f_out[e] - st.f_in[e];
  }
  st.source_peak = node_peak[0];
  for (int e : inst.out_arcs[0]) st.source_peak += st.f_out[e];
  for (int e : inst.in_arcs[0]) st.source_peak -= st.f_in[e];
  return st;
}

GasState solve_gas_peaks(const Instance& inst, const std::vector<double>& R_g,
                         const std::vector<char>& built,
                         const std::vector<double>& node_peak,
                         const NewtonOptions& opts) {
  const int N = inst.node_count;
  const double a = inst.physical.a_g;
  GasState st;
  st.p.assign(N, inst.physical.p_max);
  st.f_g.assign(inst.arc_count(), 0.0);
  st.q_bar.assign(inst.arc_count(), 0.0);

  // Reachability over built pipes decides which pressures are unknowns.
  std::vector<char> reached(N, 0);
  reached[0] = 1;
  std::deque<int> queue{0};
  while (!queue.empty()) {
    int n = queue.front();
    queue.pop_front();
    auto visit = [&](int e, int other) {
      if (built[e] && !reached[other]) {
        reached[other] = 1;
        queue.push_back(other);
      }
    };
    for (int e : inst.out_arcs[n]) visit(e, inst.arcs[e].j);
    for (int e : inst.in_arcs[n]) visit(e, inst.arcs[e].i);
  }
  for (int n = 0; n < N; ++n)
    if (!reached[n] && node_peak[n] > 1e-12) st.unreachable.push_back(n);
  if (!st.unreachable.empty()) {
    std::ostringstream msg;
    msg << "gas demand with no pipe path to the source at node";
    for (int n : st.unreachable) msg << " " << n;
    st.message = msg.str();
  }

  std::vector<int> idx(N, -1);
  std::vector<int> nodes;  // solved sink nodes
  for (int n = 1; n < N; ++n)
    if (reached[n]) {
      idx[n] = static_cast<int>(nodes.size());
      nodes.push_back(n);
    }
  const int m = static_cast<int>(nodes.size());

  auto flow_exact = [&](double x, int e) {
    return (x >= 0 ? 1.0 : -1.0) * a * std::sqrt(std::abs(x) / R_g[e]);
  };
  auto flow_smooth = [&](double x, int e) {
    return a * x / (std::pow(x * x + opts.epsilon, 0.25) * std::sqrt(R_g[e]));
  };
  auto dflow_smooth = [&](double x, int e) {
    double s = x * x + opts.epsilon;
    return a * (0.5 * x * x + opts.epsilon) * std::pow(s, -1.25) / std::sqrt(R_g[e]);
  };
  auto dflow_exact = [&](double x, int e) {
    return a / (2.0 * std::sqrt(R_g[e] * std::max(std::abs(x), opts.deriv_floor)));
  };

  // Work in drops below the source pressure. Typical drops are many orders of
  // magnitude smaller than the pressure itself, and differencing absolute
  // pressures would cancel away the digits the square-root law depends on.
  std::vector<double> drop(N, 0.0);

  auto residual = [&](const std::vector<double>& d, std::vector<double>& F, bool exact) {
    double worst = 0;
    for (int k = 0; k < m; ++k) {
      int n = nodes[k];
      double acc = -node_peak[n];
      for (int e : inst.in_arcs[n])
        if (built[e]) {
          double x = d[n] - d[inst.arcs[e].i];
          acc += exact ? flow_exact(x, e) : flow_smooth(x, e);
        }
      for (int e : inst.out_arcs[n])
        if (built[e]) {
          double x = d[inst.arcs[e].j] - d[n];
          acc -= exact ? flow_exact(x, e) : flow_smooth(x, e);
        }
      F[k] = acc;
      worst = std::max(worst, std::abs(F[k]));
    }
    return worst;
  };

  std::vector<double> F(m), Ft(m), step(m);
  std::vector<double> dtrial = drop;
  int it = 0;
  bool stalled = false;
  // Phase one irons out the square-root kink with a smoothed law; phase two
  // polishes on the exact law so reported residuals are true ones.
  for (int phase = 0; phase < 2 && m > 0 && !stalled; ++phase) {
    bool exact = phase == 1;
    int budget = exact ? opts.max_iter : opts.max_iter / 2;
    double norm = residual(drop, F, exact);
    while (it < budget && norm > opts.tol) {
      ++it;
      std::vector<double> J(static_cast<size_t>(m) * m, 0.0);
      for (int k = 0; k < m; ++k) {
        int n = nodes[k];
        auto couple = [&](int e, int other, double x) {
          double d = exact ? dflow_exact(x, e) : dflow_smooth(x, e);
          // dF/d(drop_n) carries the opposite sign of dF/d(p_n).
          J[k * static_cast<size_t>(m) + k] -= d;
          if (idx[other] >= 0) J[k * static_cast<size_t>(m) + idx[other]] += d;
        };
        for (int e : inst.in_arcs[n])
          if (built[e]) couple(e, inst.arcs[e].i, drop[n] - drop[inst.arcs[e].i]);
        for (int e : inst.out_arcs[n])
          if (built[e]) couple(e, inst.arcs[e].j, drop[inst.arcs[e].j] - drop[n]);
      }
      detail::Lu lu = detail::lu_factor(std::move(J), m);
      if (!lu.ok) {
        st.message = "singular Jacobian in the gas solve";
        stalled = true;
        break;
      }
      for (int k = 0; k < m; ++k) step[k] = F[k];
      detail::lu_solve(lu, step);
      double lambda = 1.0, trial_norm = norm;
      bool improved = false;
      for (int h = 0; h < 40; ++h) {
        for (int k = 0; k < m; ++k) dtrial[nodes[k]] = drop[nodes[k]] + lambda * step[k];
        trial_norm = residual(dtrial, Ft, exact);
        if (trial_norm < norm) {
          improved = true;
          break;
        }
        lambda *= 0.5;
      }
      if (!improved) {
        if (exact) {
          st.message = "gas residual stalled on the exact pressure-loss law";
          stalled = true;
        }
        break;  // leave the smoothed phase early and let the polish take over
      }
      for (int k = 0; k < m; ++k) drop[nodes[k]] = dtrial[nodes[k]];
      F = Ft;
      norm = trial_norm;
    }
  }
  st.iterations = it;
  st.max_residual = m > 0 ? residual(drop, F, true) : 0.0;
  st.converged = st.max_residual <= opts.tol;
  if (!st.converged && st.message.empty())
    st.message = "gas solve hit the iteration limit";

  for (int n = 0; n < N; ++n)
    if (reached[n]) st.p[n] = inst.physical.p_max - drop[n];
  for (int e = 0; e < inst.arc_count(); ++e) {
    if (!built[e] || !reached[inst.arcs[e].i]) continue;
    double x = drop[inst.arcs[e].j] - drop[inst.arcs[e].i];
    st.f_g[e] = flow_exact(x, e);
    st.q_bar[e] = st.f_g[e] / a;
  }
  st.source_peak = node_peak[0];
  for (int e : inst.out_arcs[0]) st.source_peak += st.f_g[e];
  for (int e : inst.in_arcs[0]) st.source_peak -= st.f_g[e];
  return st;
}

namespace {

std::string arc_label(const Arc& a) {
  return "(" + std::to_string(a.i) + "," + std::to_string(a.j) + ")";
}

}  // namespace

SimulationResult simulate(const Instance& inst, const Plan& plan,
                          const SimulateOptions& opts) {
  if (static_cast<int>(plan.size()) != inst.arc_count())
    throw std::invalid_argument("simulate: plan must cover every arc");
  SimulationResult res;
  auto flag = [&](std::string v) { res.violations.push_back(std::move(v)); };

  bool resistances_ok = true;
  res.R_e.assign(inst.arc_count(), 1.0);
  res.R_g.assign(inst.arc_count(), 1.0);
  std::vector<char> built(inst.arc_count(), 0);

  for (int e = 0; e < inst.arc_count(); ++e) {
    const Arc& arc = inst.arcs[e];
    const TechChoice& c = plan[e];
    std::string at = " on arc " + arc_label(arc);

    if (arc.has_heat() && !c.tech) flag("no technology chosen" + at);
    if (!arc.has_heat() && c.tech) flag("technology assigned without heat demand" + at);
    if (c.x1 < -1e-12 || c.x1 > 1 + 1e-12 || c.x2 < -1e-12 || c.x2 > 1 + 1e-12)
      flag("renovation level outside [0, 1]" + at);
    if (c.x2 > 1e-12 && c.x1 < 1 - 1e-9)
      flag("second renovation stage before the first is complete" + at);
    if (c.tech && *c.tech != Tech::HP && !c.pipe) flag("gas technology without a pipe" + at);

    built[e] = c.pipe ? 1 : 0;
    if (inst.options.cable_sizing) {
      int r = static_cast<int>(inst.cable_catalog->types.size());
      if (c.cable_type < 0 || c.cable_type >= r) {
        flag("no cable type selected" + at);
        resistances_ok = false;
      } else {
        res.R_e[e] = inst.cable_catalog->types[c.cable_type].R_per_m * arc.length_m;
      }
    } else {
      res.R_e[e] = *arc.R_e;
    }
    if (c.pipe) {
      if (inst.options.pipe_sizing) {
        int r = static_cast<int>(inst.pipe_catalog->types.size());
        if (c.pipe_type < 0 || c.pipe_type >= r) {
          flag("no pipe type selected" + at);
          resistances_ok = false;
        } else {
          const auto& cat = *inst.pipe_catalog;
          res.R_g[e] = pipe_resistance(cat.types[c.pipe_type].diameter_m, arc.length_m,
                                       cat.gas_density, cat.gas_velocity);
        }
      } else {
        res.R_g[e] = *arc.R_g;
      }
    }
  }

  res.loads = node_peak_loads(inst, plan);
  if (!resistances_ok) {
    res.feasible = false;
    return res;
  }

  res.electric = solve_electric_peaks(inst, res.R_e, res.loads.elec_peak, opts.newton);
  res.gas = solve_gas_peaks(inst, res.R_g, built, res.loads.gas_peak, opts.newton);

  if (!res.electric.converged) flag("electric solve failed: " + res.electric.message);
  if (!res.gas.converged) flag("gas solve failed: " + res.gas.message);
  for (int n : res.gas.unreachable)
    flag("gas demand with no pipe path to the source at node " + std::to_string(n));

  const auto& ph = inst.physical;
  if (res.electric.converged)
    for (int n = 1; n < inst.node_count; ++n)
      if (res.electric.u[n] < ph.u_min - opts.bound_tol)
        flag("voltage below the minimum at node " + std::to_string(n));
  if (res.gas.converged) {
    for (int n = 1; n < inst.node_count; ++n)
      if (res.gas.p[n] < ph.p_min - opts.bound_tol)
        flag("pressure below the minimum at node " + std::to_string(n));
    for (int e = 0; e < inst.arc_count(); ++e)
      if (std::abs(res.gas.q_bar[e]) > ph.q_bar_max + opts.bound_tol)
        flag("gas speed above the limit on arc " + arc_label(inst.arcs[e]));
  }

  res.feasible = res.violations.empty();
  return res;
}

}  // namespace decnet
