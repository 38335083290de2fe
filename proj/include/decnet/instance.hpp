#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace decnet {

/// Micro energy conversion technologies that can serve the heat demand of an arc.
enum class Tech : int { CB = 0, CHP = 1, HP = 2 };

inline constexpr std::array<Tech, 3> kAllTechs = {Tech::CB, Tech::CHP, Tech::HP};

const char* tech_name(Tech t);
std::optional<Tech> tech_from_name(const std::string& s);

/// Yearly and peak demand data of one arc, total and per technology.
/// Yearly figures are kWh/a, peaks are kW.
struct ArcDemand {
  double SEL = 0;  // yearly electricity, non-heating
  double SHL = 0;  // yearly heat
  double MEL = 0;  // peak electricity, non-heating
  double MHL = 0;  // peak heat
  std::array<double, 3> SEL_t{};  // yearly electricity if tech t installed
  std::array<double, 3> MEL_t{};  // peak electricity if tech t installed
  std::array<double, 3> SGL_t{};  // yearly gas if tech t installed
  std::array<double, 3> MGL_t{};  // peak gas if tech t installed

  double sel(Tech t) const { return SEL_t[static_cast<int>(t)]; }
  double mel(Tech t) const { return MEL_t[static_cast<int>(t)]; }
  double sgl(Tech t) const { return SGL_t[static_cast<int>(t)]; }
  double mgl(Tech t) const { return MGL_t[static_cast<int>(t)]; }
};

struct Arc {
  int i = 0;
  int j = 0;
  double length_m = 0;
  ArcDemand demand;
  // Base model: per-arc electric resistance [Ohm], gas resistance
  // [mbar/(m^3/h)^2] and annualized pipe cost [EUR/a]. When the corresponding
  // sizing option is on these must be absent (the catalog supplies them);
  // giving both is rejected.
  std::optional<double> R_e;
  std::optional<double> R_g;
  std::optional<double> zeta_g;

  bool has_heat() const { return demand.SHL > 0; }
};

/// Electric and gas network physics parameters. Arithmetic is unit-free;
/// the annotated units document the intended calibration.
struct PhysicalParams {
  double u_max = 0;      // source potential [V]
  double u_min = 0;      // minimal node potential [V]
  double a_e = 1;        // calorific multiplier of three-phase electric flow
  double p_max = 0;      // source gas pressure [mbar]
  double p_min = 0;      // minimal node pressure [mbar]
  double a_g = 1;        // calorific multiplier of gas flow [J/m^3]
  double q_bar_max = 0;  // maximal gas volume flow [m^3/h]

  double q_bar_min() const { return -q_bar_max; }
  double p_bar_max() const { return p_max - p_min; }
  double p_bar_min() const { return -(p_max - p_min); }
};

struct CostParams {
  double alpha_p_e = 0;  // electricity purchase price [EUR/kWh]
  double alpha_p_g = 0;  // gas purchase price [EUR/kWh]
  double beta_e = 0;     // electricity tax [EUR/kWh]
  double beta_g = 0;     // gas tax [EUR/kWh]
  double t_adv = 0.5;    // tax advantage factor for self-produced electricity
  double alpha_a_e = 0;  // electricity allocation price [EUR/kWa]
  double alpha_a_g = 0;  // gas allocation price [EUR/kWa]
  std::array<double, 3> gamma{};  // annualized tech install cost [EUR/a]
  double nu1 = 0;        // first-stage renovation unit cost [EUR/kWh]
  double nu2 = 0;        // second-stage renovation unit cost [EUR/kWh]
  double kappa_e = 0;    // CO2 per kWh electricity [kg/kWh]
  double kappa_g = 0;    // CO2 per kWh gas [kg/kWh]
  double E_target = 0;   // emission cap [kg/a]
  double mu1 = 0;        // savings fraction of completed first-stage renovation
  double mu2 = 0;        // savings fraction of completed second-stage renovation

  double gamma_t(Tech t) const { return gamma[static_cast<int>(t)]; }
};

struct CableType {
  double R_per_m = 0;    // [Ohm/m]
  double cost_per_m = 0; // [EUR/m]
};

struct PipeType {
  double diameter_m = 0; // [m]
  double cost_per_m = 0; // [EUR/m]
};

struct CableCatalog {
  std::vector<CableType> types;
};

struct PipeCatalog {
  std::vector<PipeType> types;
  double gas_density = 0.7;  // [kg/m^3]
  double gas_velocity = 6.0; // [m/s]
};

struct InstanceOptions {
  bool cable_sizing = false;
  bool pipe_sizing = false;
};

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  /// True if any violation message contains the given fragment.
  bool mentions(const std::string& fragment) const;
};

/// A full network design instance. Immutable after load; safe to share
/// across threads without synchronization.
struct Instance {
  std::string name = "instance";
  int node_count = 0;  // node ids are 0..node_count-1, node 0 is the source
  std::vector<Arc> arcs;
  PhysicalParams physical;
  CostParams costs;
  std::optional<CableCatalog> cable_catalog;
  std::optional<PipeCatalog> pipe_catalog;
  InstanceOptions options;

  // Derived, filled by finalize().
  bool is_tree = false;
  std::vector<std::vector<int>> out_arcs;  // per node: indices into arcs
  std::vector<std::vector<int>> in_arcs;

  void finalize();

  int arc_count() const { return static_cast<int>(arcs.size()); }
  int heat_arc_count() const;
  bool connected() const;

  /// Base-model electric resistance of arc e. Throws when cable sizing is on
  /// (the resistance then depends on the chosen type).
  double arc_R_e(int e) const;
  /// Base-model gas resistance of arc e (only meaningful with pipe built).
  double arc_R_g(int e) const;
  /// Base-model annualized pipe cost of arc e.
  double arc_zeta_g(int e) const;
};

class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Parse and validate an instance document (see README for the schema).
/// Throws ParseError on malformed documents (unknown keys included) and
/// ValidationError naming the first violated invariant.
Instance load_instance(const std::string& text);
Instance load_instance_file(const std::string& path);

/// Serialize back to the document format. load(save(x)) == x on the data model.
std::string save_instance(const Instance& inst);

/// Run all structural and demand-consistency checks.
ValidationReport validate_instance(const Instance& inst);

enum class Topology { Tree, Ring, Grid };

struct GenSpec {
  int n = 2;  // node count
  Topology topology = Topology::Tree;
  std::uint64_t seed = 1;
  double demand_scale = 1.0;
};

/// Deterministic synthetic instance generator. All demand invariants hold by
/// construction; physical and cost parameters are synthetic defaults.
Instance generate_instance(const GenSpec& spec);

/// Resistance of a pipe with diameter d over length l, using the
/// Darcy friction coefficient lambda = 0.3164/(v*rho*d)^0.25 and
/// R = lambda * 8*rho*l / (pi^2 * d^5).
double pipe_resistance(double diameter_m, double length_m,
                       double density = 0.7, double velocity = 6.0);

}  // namespace decnet
