#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "decnet/instance.hpp"

namespace decnet {

using VarId = int;
inline constexpr VarId kNoVar = -1;

enum class VarKind { Continuous, Binary };

struct VarInfo {
  std::string name;
  double lo = 0;
  double hi = 0;
  VarKind kind = VarKind::Continuous;
};

/// Row kinds. Inequalities are normalized to lhs <= rhs. Bilinear
/// inequalities only appear in the cable-sizing option (conditional Ohmic
/// rows); the base model has bilinear equalities and quadratic inequalities.
enum class RowKind { LinEq, LinIneq, BilinEq, BilinIneq, QuadIneq };

struct ProductTerm {
  VarId a = kNoVar;
  VarId b = kNoVar;
  double coef = 0;  // coef * x_a * x_b
};

struct SquareTerm {
  VarId v = kNoVar;
  double coef = 0;  // coef * x_v^2
};

struct ConstraintRow {
  std::string id;
  RowKind kind = RowKind::LinEq;
  std::vector<std::pair<VarId, double>> lin;
  std::vector<ProductTerm> products;
  std::vector<SquareTerm> squares;
  double rhs = 0;
  std::string tag;  // constraint family, used by audits and reports

  bool is_equality() const { return kind == RowKind::LinEq || kind == RowKind::BilinEq; }
  bool is_linear() const { return products.empty() && squares.empty(); }
};

/// Per-arc and per-node variable ids. Ids are kNoVar where a variable does
/// not exist (renovation variables on arcs without heat demand, catalog
/// selection variables when the sizing options are off).
struct ArcVars {
  std::array<VarId, 3> x{kNoVar, kNoVar, kNoVar};
  std::array<VarId, 3> x1{kNoVar, kNoVar, kNoVar};
  std::array<VarId, 3> x2{kNoVar, kNoVar, kNoVar};
  std::array<VarId, 3> z{kNoVar, kNoVar, kNoVar};
  VarId y_g = kNoVar;
  VarId y_gp = kNoVar;
  VarId y_gm = kNoVar;
  std::vector<VarId> y_cable;  // per cable type, cable_sizing only
  std::vector<VarId> y_pipe;   // per pipe type, pipe_sizing only
  VarId s_Esum = kNoVar;
  VarId s_Emax = kNoVar;
  VarId s_Gsum = kNoVar;
  VarId s_Gmax = kNoVar;
  std::array<VarId, 3> s_Esum_t{kNoVar, kNoVar, kNoVar};
  std::array<VarId, 3> s_Emax_t{kNoVar, kNoVar, kNoVar};
  VarId f_e_in = kNoVar;
  VarId f_e_out = kNoVar;
  VarId f_g = kNoVar;
  VarId q_bar = kNoVar;
  VarId p_bar = kNoVar;
  VarId p_bar_plus = kNoVar;
  VarId u_bar = kNoVar;
};

struct NodeVars {
  VarId u = kNoVar;
  VarId p = kNoVar;
  VarId sbar_Emax = kNoVar;
  VarId sbar_Gmax = kNoVar;
};

struct VariableCatalog {
  std::vector<VarInfo> vars;
  std::vector<NodeVars> node;
  std::vector<ArcVars> arc;
  VarId s0_Esum = kNoVar;
  VarId s0_Gsum = kNoVar;
  VarId s0_Emax = kNoVar;
  VarId s0_Gmax = kNoVar;
  VarId s_chp_Esum = kNoVar;
  VarId C_energy = kNoVar;
  VarId C_tax = kNoVar;
  VarId C_allocation = kNoVar;
  VarId C_grid = kNoVar;
  VarId C_grid_e = kNoVar;  // cable_sizing only
  VarId C_tech = kNoVar;
  VarId C_renov = kNoVar;
  VarId E_carbon = kNoVar;
  VarId C_total = kNoVar;

  int size() const { return static_cast<int>(vars.size()); }
  const VarInfo& info(VarId v) const { return vars[v]; }
  /// Lookup by name; kNoVar if absent.
  VarId find(const std::string& name) const;
};

struct FormulationOptions {
  // Restrict renovation progress variables to {0,1}. The model keeps them
  // continuous; the restriction makes the search space enumerable so the
  // solver can be cross-checked against the exhaustive oracle.
  bool renovation_binary = false;
};

struct Formulation {
  VariableCatalog catalog;
  std::vector<ConstraintRow> rows;
  std::vector<std::pair<VarId, double>> objective;
  FormulationOptions options;

  int count_tag(const std::string& tag) const;
  double objective_value(const std::vector<double>& x) const;
};

/// A full assignment of every catalog variable, indexed by VarId.
struct PlanPoint {
  std::vector<double> x;
};

struct Violation {
  std::string id;  // row id or variable name
  double amount = 0;
};

struct ViolationReport {
  std::vector<Violation> rows;
  std::vector<Violation> bounds;
  std::vector<Violation> integrality;
  double max_violation = 0;
  bool ok() const { return rows.empty() && bounds.empty() && integrality.empty(); }
};

Formulation build_formulation(const Instance& inst, const FormulationOptions& opts = {});

/// Signed row residual: lhs - rhs. Violation is |residual| for equalities
/// and max(0, residual) for inequalities.
double row_residual(const ConstraintRow& row, const std::vector<double>& x);

ViolationReport evaluate_residuals(const Formulation& f, const PlanPoint& pt, double tol);

/// One row per line: id, kind, linear/product/square terms, rhs, tag.
std::string export_text(const Formulation& f);
std::string export_json(const Formulation& f);

}  // namespace decnet
