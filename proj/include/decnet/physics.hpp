#pragma once

// Steady-state network physics: lossy electric power flow on the full cable
// network and pressure-driven gas flow on the built pipe subnetwork. These
// solvers work on an already-decided plan (technology, renovation, pipes) and
// are the ground truth the optimization model is checked against.

#include <optional>
#include <string>
#include <vector>

#include "decnet/instance.hpp"

namespace decnet {

/// Discrete part of a plan for one arc.
struct TechChoice {
  std::optional<Tech> tech;  // empty on arcs without heat demand
  double x1 = 0;             // first renovation stage in [0, 1]
  double x2 = 0;             // second renovation stage in [0, 1]
  bool pipe = false;         // gas pipe present on this arc
  int cable_type = -1;       // catalog index, used only with cable sizing
  int pipe_type = -1;        // catalog index, used only with pipe sizing
};

using Plan = std::vector<TechChoice>;

/// Peak loads moved from arcs onto nodes: each endpoint carries half of the
/// renovation-discounted arc peak.
struct NodeLoads {
  std::vector<double> elec_peak;
  std::vector<double> gas_peak;
};

NodeLoads node_peak_loads(const Instance& inst, const Plan& plan);

struct NewtonOptions {
  double tol = 1e-8;          // max residual accepted as converged
  int max_iter = 100;
  double epsilon = 1e-12;     // smoothing of the square root near zero flow
  double deriv_floor = 1e-10; // pressure-drop floor for the exact derivative
};

struct ElectricState {
  std::vector<double> u;               // per node
  std::vector<double> f_in, f_out;     // per arc, at head and tail
  double source_peak = 0;              // injection implied by the balance
  double loss = 0;                     // total resistive loss
  int iterations = 0;
  bool converged = false;
  double max_residual = 0;
  std::string message;
};

/// Solves a_e * u_i * (u_j - u_i) / R_e branch flows against the given node
/// peaks with the source held at u_max. R_e is one resistance per arc.
ElectricState solve_electric_peaks(const Instance& inst, const std::vector<double>& R_e,
                                   const std::vector<double>& node_peak,
                                   const NewtonOptions& opts = {});

struct GasState {
  std::vector<double> p;               // per node; p_max where no pipe reaches
  std::vector<double> f_g, q_bar;      // per arc, zero off the built network
  double source_peak = 0;
  int iterations = 0;
  bool converged = false;
  double max_residual = 0;
  std::vector<int> unreachable;        // nodes with demand but no pipe path
  std::string message;
};

/// Solves sign(p_i - p_j) * a_g * sqrt(|p_i - p_j| / R_g) flows on the built
/// subnetwork with the source held at p_max. `built` marks arcs with a pipe.
GasState solve_gas_peaks(const Instance& inst, const std::vector<double>& R_g,
                         const std::vector<char>& built,
                         const std::vector<double>& node_peak,
                         const NewtonOptions& opts = {});

struct SimulateOptions {
  NewtonOptions newton;
  double bound_tol = 1e-7;  // slack when checking voltage/pressure/speed limits
};

struct SimulationResult {
  NodeLoads loads;
  ElectricState electric;
  GasState gas;
  std::vector<double> R_e, R_g;        // resistances actually used
  bool feasible = false;
  std::vector<std::string> violations;
};

/// Full plan check: plan consistency, both flow solves, and operating limits.
SimulationResult simulate(const Instance& inst, const Plan& plan,
                          const SimulateOptions& opts = {});

}  // namespace decnet
