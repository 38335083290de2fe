#include "decnet/instance.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

namespace decnet {

using json = nlohmann::ordered_json;

const char* tech_name(Tech t) {
  switch (t) {
    case Tech::CB: return "cb";
    case Tech::CHP: return "chp";
    case Tech::HP: return "hp";
  }
  return "?";
}

std::optional<Tech> tech_from_name(const std::string& s) {
  for (Tech t : kAllTechs)
    if (s == tech_name(t)) return t;
  return std::nullopt;
}

bool ValidationReport::mentions(const std::string& fragment) const {
  for (const auto& v : violations)
    if (v.find(fragment) != std::string::npos) return true;
  return false;
}

void Instance::finalize() {
  out_arcs.assign(node_count, {});
  in_arcs.assign(node_count, {});
  for (int e = 0; e < arc_count(); ++e) {
    out_arcs[arcs[e].i].push_back(e);
    in_arcs[arcs[e].j].push_back(e);
  }
  is_tree = connected() && arc_count() == node_count - 1;
}

int Instance::heat_arc_count() const {
  int n = 0;
  for (const auto& a : arcs)
    if (a.has_heat()) ++n;
  return n;
}

bool Instance::connected() const {
  if (node_count <= 0) return false;
  std::vector<std::vector<int>> adj(node_count);
  for (const auto& a : arcs) {
    adj[a.i].push_back(a.j);
    adj[a.j].push_back(a.i);
  }
  std::vector<char> seen(node_count, 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int visited = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : adj[v])
      if (!seen[w]) {
        seen[w] = 1;
        ++visited;
        q.push(w);
      }
  }
  return visited == node_count;
}

double Instance::arc_R_e(int e) const {
  if (options.cable_sizing)
    throw std::logic_error("arc_R_e: cable sizing enabled, resistance is type-dependent");
  return *arcs[e].R_e;
}

double Instance::arc_R_g(int e) const {
  if (options.pipe_sizing)
    throw std::logic_error("arc_R_g: pipe sizing enabled, resistance is type-dependent");
  return *arcs[e].R_g;
}

double Instance::arc_zeta_g(int e) const {
  if (options.pipe_sizing)
    throw std::logic_error("arc_zeta_g: pipe sizing enabled, cost is type-dependent");
  return *arcs[e].zeta_g;
}

double pipe_resistance(double diameter_m, double length_m,
                       double density, double velocity) {
  const double pi = 3.14159265358979323846;
  double lambda = 0.3164 / std::pow(velocity * density * diameter_m, 0.25);
  return lambda * 8.0 * density * length_m / (pi * pi * std::pow(diameter_m, 5));
}

namespace {

[[noreturn]] void fail_parse(const std::string& where, const std::string& what) {
  throw ParseError(where + ": " + what);
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail_parse(where, "unknown key '" + it.key() + "'");
  }
}

const json& get_field(const json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail_parse(where, std::string("missing key '") + key + "'");
  return *it;
}

double get_num(const json& obj, const std::string& where, const char* key) {
  const json& v = get_field(obj, where, key);
  if (!v.is_number()) fail_parse(where + "." + key, "expected a number");
  return v.get<double>();
}

std::optional<double> get_opt_num(const json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) return std::nullopt;
  if (!it->is_number()) fail_parse(where + "." + key, "expected a number");
  return it->get<double>();
}

int get_int(const json& obj, const std::string& where, const char* key) {
  const json& v = get_field(obj, where, key);
  if (!v.is_number_integer()) fail_parse(where + "." + key, "expected an integer");
  return v.get<int>();
}

bool get_opt_bool(const json& obj, const std::string& where, const char* key, bool dflt) {
  auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_boolean()) fail_parse(where + "." + key, "expected a boolean");
  return it->get<bool>();
}

ArcDemand parse_demand(const json& d, const std::string& where) {
  if (!d.is_object()) fail_parse(where, "expected an object");
  reject_unknown(d, where,
                 {"SEL", "SHL", "MEL", "MHL", "SEL_cb", "MEL_cb", "SEL_chp", "MEL_chp",
                  "SEL_hp", "MEL_hp", "SGL_cb", "MGL_cb", "SGL_chp", "MGL_chp", "SGL_hp",
                  "MGL_hp"});
  ArcDemand out;
  out.SEL = get_num(d, where, "SEL");
  out.SHL = get_num(d, where, "SHL");
  out.MEL = get_num(d, where, "MEL");
  out.MHL = get_num(d, where, "MHL");
  // CB electricity and HP gas are forced; the keys are accepted for symmetry
  // and cross-checked during validation.
  out.SEL_t = {get_opt_num(d, where, "SEL_cb").value_or(out.SEL),
               get_num(d, where, "SEL_chp"), get_num(d, where, "SEL_hp")};
  out.MEL_t = {get_opt_num(d, where, "MEL_cb").value_or(out.MEL),
               get_num(d, where, "MEL_chp"), get_num(d, where, "MEL_hp")};
  out.SGL_t = {get_num(d, where, "SGL_cb"), get_num(d, where, "SGL_chp"),
               get_opt_num(d, where, "SGL_hp").value_or(0.0)};
  out.MGL_t = {get_num(d, where, "MGL_cb"), get_num(d, where, "MGL_chp"),
               get_opt_num(d, where, "MGL_hp").value_or(0.0)};
  return out;
}

json demand_to_json(const ArcDemand& d) {
  json out;
  out["SEL"] = d.SEL;
  out["SHL"] = d.SHL;
  out["MEL"] = d.MEL;
  out["MHL"] = d.MHL;
  out["SEL_chp"] = d.sel(Tech::CHP);
  out["MEL_chp"] = d.mel(Tech::CHP);
  out["SEL_hp"] = d.sel(Tech::HP);
  out["MEL_hp"] = d.mel(Tech::HP);
  out["SGL_cb"] = d.sgl(Tech::CB);
  out["MGL_cb"] = d.mgl(Tech::CB);
  out["SGL_chp"] = d.sgl(Tech::CHP);
  out["MGL_chp"] = d.mgl(Tech::CHP);
  return out;
}

}  // namespace

Instance load_instance(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("document is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail_parse("document", "expected a JSON object");
  reject_unknown(doc, "document",
                 {"name", "nodes", "arcs", "physical", "costs", "cable_catalog",
                  "pipe_catalog", "options"});

  Instance inst;
  if (auto it = doc.find("name"); it != doc.end()) {
    if (!it->is_string()) fail_parse("name", "expected a string");
    inst.name = it->get<std::string>();
  }
  inst.node_count = get_int(doc, "document", "nodes");

  const json& arcs = get_field(doc, "document", "arcs");
  if (!arcs.is_array()) fail_parse("arcs", "expected an array");
  for (std::size_t k = 0; k < arcs.size(); ++k) {
    std::string where = "arcs[" + std::to_string(k) + "]";
    const json& a = arcs[k];
    if (!a.is_object()) fail_parse(where, "expected an object");
    reject_unknown(a, where, {"i", "j", "length_m", "demand", "R_e", "R_g", "zeta_g"});
    Arc arc;
    arc.i = get_int(a, where, "i");
    arc.j = get_int(a, where, "j");
    arc.length_m = get_num(a, where, "length_m");
    arc.demand = parse_demand(get_field(a, where, "demand"), where + ".demand");
    arc.R_e = get_opt_num(a, where, "R_e");
    arc.R_g = get_opt_num(a, where, "R_g");
    arc.zeta_g = get_opt_num(a, where, "zeta_g");
    inst.arcs.push_back(arc);
  }

  const json& ph = get_field(doc, "document", "physical");
  if (!ph.is_object()) fail_parse("physical", "expected an object");
  reject_unknown(ph, "physical", {"u_max", "u_min", "a_e", "p_max", "p_min", "a_g", "q_bar_max"});
  inst.physical.u_max = get_num(ph, "physical", "u_max");
  inst.physical.u_min = get_num(ph, "physical", "u_min");
  inst.physical.a_e = get_num(ph, "physical", "a_e");
  inst.physical.p_max = get_num(ph, "physical", "p_max");
  inst.physical.p_min = get_num(ph, "physical", "p_min");
  inst.physical.a_g = get_num(ph, "physical", "a_g");
  inst.physical.q_bar_max = get_num(ph, "physical", "q_bar_max");

  const json& co = get_field(doc, "document", "costs");
  if (!co.is_object()) fail_parse("costs", "expected an object");
  reject_unknown(co, "costs",
                 {"alpha_p_e", "alpha_p_g", "beta_e", "beta_g", "t_adv", "alpha_a_e",
                  "alpha_a_g", "gamma", "nu1", "nu2", "kappa_e", "kappa_g", "E_target",
                  "mu1", "mu2"});
  CostParams& c = inst.costs;
  c.alpha_p_e = get_num(co, "costs", "alpha_p_e");
  c.alpha_p_g = get_num(co, "costs", "alpha_p_g");
  c.beta_e = get_num(co, "costs", "beta_e");
  c.beta_g = get_num(co, "costs", "beta_g");
  c.t_adv = get_num(co, "costs", "t_adv");
  c.alpha_a_e = get_num(co, "costs", "alpha_a_e");
  c.alpha_a_g = get_num(co, "costs", "alpha_a_g");
  const json& g = get_field(co, "costs", "gamma");
  if (!g.is_object()) fail_parse("costs.gamma", "expected an object");
  reject_unknown(g, "costs.gamma", {"cb", "chp", "hp"});
  c.gamma = {get_num(g, "costs.gamma", "cb"), get_num(g, "costs.gamma", "chp"),
             get_num(g, "costs.gamma", "hp")};
  c.nu1 = get_num(co, "costs", "nu1");
  c.nu2 = get_num(co, "costs", "nu2");
  c.kappa_e = get_num(co, "costs", "kappa_e");
  c.kappa_g = get_num(co, "costs", "kappa_g");
  c.E_target = get_num(co, "costs", "E_target");
  c.mu1 = get_num(co, "costs", "mu1");
  c.mu2 = get_num(co, "costs", "mu2");

  if (auto it = doc.find("cable_catalog"); it != doc.end()) {
    if (!it->is_object()) fail_parse("cable_catalog", "expected an object");
    reject_unknown(*it, "cable_catalog", {"types"});
    const json& types = get_field(*it, "cable_catalog", "types");
    if (!types.is_array()) fail_parse("cable_catalog.types", "expected an array");
    CableCatalog cat;
    for (std::size_t k = 0; k < types.size(); ++k) {
      std::string where = "cable_catalog.types[" + std::to_string(k) + "]";
      reject_unknown(types[k], where, {"R_per_m", "cost_per_m"});
      cat.types.push_back({get_num(types[k], where, "R_per_m"),
                           get_num(types[k], where, "cost_per_m")});
    }
    inst.cable_catalog = cat;
  }
  if (auto it = doc.find("pipe_catalog"); it != doc.end()) {
    if (!it->is_object()) fail_parse("pipe_catalog", "expected an object");
    reject_unknown(*it, "pipe_catalog", {"types", "gas_density", "gas_velocity"});
    const json& types = get_field(*it, "pipe_catalog", "types");
    if (!types.is_array()) fail_parse("pipe_catalog.types", "expected an array");
    PipeCatalog cat;
    for (std::size_t k = 0; k < types.size(); ++k) {
      std::string where = "pipe_catalog.types[" + std::to_string(k) + "]";
      reject_unknown(types[k], where, {"diameter_m", "cost_per_m"});
      cat.types.push_back({get_num(types[k], where, "diameter_m"),
                           get_num(types[k], where, "cost_per_m")});
    }
    cat.gas_density = get_opt_num(*it, "pipe_catalog", "gas_density").value_or(0.7);
    cat.gas_velocity = get_opt_num(*it, "pipe_catalog", "gas_velocity").value_or(6.0);
    inst.pipe_catalog = cat;
  }
  if (auto it = doc.find("options"); it != doc.end()) {
    if (!it->is_object()) fail_parse("options", "expected an object");
    reject_unknown(*it, "options", {"cable_sizing", "pipe_sizing"});
    inst.options.cable_sizing = get_opt_bool(*it, "options", "cable_sizing", false);
    inst.options.pipe_sizing = get_opt_bool(*it, "options", "pipe_sizing", false);
  }

  inst.finalize();
  ValidationReport report = validate_instance(inst);
  if (!report.ok()) throw ValidationError(report.violations.front());
  return inst;
}

Instance load_instance_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_instance(buf.str());
}

std::string save_instance(const Instance& inst) {
  json doc;
  doc["name"] = inst.name;
  doc["nodes"] = inst.node_count;
  doc["arcs"] = json::array();
  for (const auto& a : inst.arcs) {
    json ja;
    ja["i"] = a.i;
    ja["j"] = a.j;
    ja["length_m"] = a.length_m;
    ja["demand"] = demand_to_json(a.demand);
    if (a.R_e) ja["R_e"] = *a.R_e;
    if (a.R_g) ja["R_g"] = *a.R_g;
    if (a.zeta_g) ja["zeta_g"] = *a.zeta_g;
    doc["arcs"].push_back(ja);
  }
  json ph;
  ph["u_max"] = inst.physical.u_max;
  ph["u_min"] = inst.physical.u_min;
  ph["a_e"] = inst.physical.a_e;
  ph["p_max"] = inst.physical.p_max;
  ph["p_min"] = inst.physical.p_min;
  ph["a_g"] = inst.physical.a_g;
  ph["q_bar_max"] = inst.physical.q_bar_max;
  doc["physical"] = ph;
  json co;
  co["alpha_p_e"] = inst.costs.alpha_p_e;
  co["alpha_p_g"] = inst.costs.alpha_p_g;
  co["beta_e"] = inst.costs.beta_e;
  co["beta_g"] = inst.costs.beta_g;
  co["t_adv"] = inst.costs.t_adv;
  co["alpha_a_e"] = inst.costs.alpha_a_e;
  co["alpha_a_g"] = inst.costs.alpha_a_g;
  co["gamma"] = {{"cb", inst.costs.gamma[0]},
                 {"chp", inst.costs.gamma[1]},
                 {"hp", inst.costs.gamma[2]}};
  co["nu1"] = inst.costs.nu1;
  co["nu2"] = inst.costs.nu2;
  co["kappa_e"] = inst.costs.kappa_e;
  co["kappa_g"] = inst.costs.kappa_g;
  co["E_target"] = inst.costs.E_target;
  co["mu1"] = inst.costs.mu1;
  co["mu2"] = inst.costs.mu2;
  doc["costs"] = co;
  if (inst.cable_catalog) {
    json cat;
    cat["types"] = json::array();
    for (const auto& t : inst.cable_catalog->types)
      cat["types"].push_back({{"R_per_m", t.R_per_m}, {"cost_per_m", t.cost_per_m}});
    doc["cable_catalog"] = cat;
  }
  if (inst.pipe_catalog) {
    json cat;
    cat["types"] = json::array();
    for (const auto& t : inst.pipe_catalog->types)
      cat["types"].push_back({{"diameter_m", t.diameter_m}, {"cost_per_m", t.cost_per_m}});
    cat["gas_density"] = inst.pipe_catalog->gas_density;
    cat["gas_velocity"] = inst.pipe_catalog->gas_velocity;
    doc["pipe_catalog"] = cat;
  }
  json opt;
  opt["cable_sizing"] = inst.options.cable_sizing;
  opt["pipe_sizing"] = inst.options.pipe_sizing;
  doc["options"] = opt;
  return doc.dump(2) + "\n";
}

namespace {

void check(ValidationReport& rep, bool ok, const std::string& msg) {
  if (!ok) rep.violations.push_back(msg);
}

}  // namespace

ValidationReport validate_instance(const Instance& inst) {
  ValidationReport rep;
  check(rep, inst.node_count >= 2, "at least two nodes required");
  if (inst.node_count < 2) return rep;

  std::set<std::pair<int, int>> seen;
  for (int e = 0; e < inst.arc_count(); ++e) {
    const Arc& a = inst.arcs[e];
    std::string where = "arcs[" + std::to_string(e) + "]";
    if (a.i < 0 || a.i >= inst.node_count || a.j < 0 || a.j >= inst.node_count) {
      check(rep, false, where + ": endpoint out of range");
      continue;
    }
    check(rep, a.i != a.j, where + ": self-loop");
    auto key = std::minmax(a.i, a.j);
    check(rep, seen.insert(key).second, where + ": duplicate arc");
    check(rep, a.length_m > 0, where + ": length must be positive");

    const ArcDemand& d = a.demand;
    bool nonneg = d.SEL >= 0 && d.SHL >= 0 && d.MEL >= 0 && d.MHL >= 0;
    for (Tech t : kAllTechs)
      nonneg = nonneg && d.sel(t) >= 0 && d.mel(t) >= 0 && d.sgl(t) >= 0 && d.mgl(t) >= 0;
    check(rep, nonneg, where + ": demand values must be >= 0");
    check(rep, d.sel(Tech::CB) == d.SEL, where + ": SEL_CB must equal SEL");
    check(rep, d.mel(Tech::CB) == d.MEL, where + ": MEL_CB must equal MEL");
    check(rep, d.sgl(Tech::HP) == 0, where + ": SGL_HP must be 0");
    check(rep, d.mgl(Tech::HP) == 0, where + ": MGL_HP must be 0");
    for (Tech t : {Tech::CB, Tech::CHP}) {
      std::string tn = tech_name(t);
      check(rep, d.sgl(t) >= d.SHL, where + ": SGL_" + tn + " below SHL");
      check(rep, d.mgl(t) >= d.MHL, where + ": MGL_" + tn + " below MHL");
    }
    check(rep, d.sel(Tech::HP) >= d.SEL, where + ": SEL_hp below SEL");
    check(rep, d.mel(Tech::HP) >= d.MEL, where + ": MEL_hp below MEL");
    check(rep, d.sel(Tech::CHP) <= d.SEL, where + ": SEL_chp exceeds SEL (CHP self-production)");
    check(rep, d.mel(Tech::CHP) <= d.MEL, where + ": MEL_chp exceeds MEL (CHP self-production)");

    if (inst.options.cable_sizing)
      check(rep, !a.R_e.has_value(), where + ": R_e given but cable sizing enabled");
    else {
      check(rep, a.R_e.has_value(), where + ": R_e required (no cable catalog in use)");
      if (a.R_e) check(rep, *a.R_e > 0, where + ": R_e must be positive");
    }
    if (inst.options.pipe_sizing) {
      check(rep, !a.R_g.has_value(), where + ": R_g given but pipe sizing enabled");
      check(rep, !a.zeta_g.has_value(), where + ": zeta_g given but pipe sizing enabled");
    } else {
      check(rep, a.R_g.has_value(), where + ": R_g required (no pipe catalog in use)");
      if (a.R_g) check(rep, *a.R_g > 0, where + ": R_g must be positive");
      check(rep, a.zeta_g.has_value(), where + ": zeta_g required (no pipe catalog in use)");
      if (a.zeta_g) check(rep, *a.zeta_g >= 0, where + ": zeta_g must be >= 0");
    }
  }

  check(rep, inst.connected(), "graph not connected");

  const PhysicalParams& ph = inst.physical;
  check(rep, ph.u_min >= 0, "u_min must be >= 0");
  check(rep, ph.u_max > ph.u_min, "u_max must exceed u_min");
  check(rep, ph.p_min >= 0, "p_min must be >= 0");
  check(rep, ph.p_max > ph.p_min, "p_max must exceed p_min");
  check(rep, ph.a_e > 0, "a_e must be positive");
  check(rep, ph.a_g > 0, "a_g must be positive");
  check(rep, ph.q_bar_max > 0, "q_bar_max must be positive");

  const CostParams& c = inst.costs;
  check(rep, c.mu2 > 0, "mu2 must be positive");
  check(rep, c.mu1 > c.mu2, "mu1 > mu2 violated");
  check(rep, c.mu1 + c.mu2 <= 1, "mu1 + mu2 must not exceed 1");
  check(rep, c.t_adv > 0 && c.t_adv < 1, "t_adv must lie in (0,1)");
  bool prices_ok = c.alpha_p_e >= 0 && c.alpha_p_g >= 0 && c.beta_e >= 0 && c.beta_g >= 0 &&
                   c.alpha_a_e >= 0 && c.alpha_a_g >= 0 && c.nu1 >= 0 && c.nu2 >= 0 &&
                   c.kappa_e >= 0 && c.kappa_g >= 0 && c.E_target >= 0;
  for (Tech t : kAllTechs) prices_ok = prices_ok && c.gamma_t(t) >= 0;
  check(rep, prices_ok, "prices and rates must be >= 0");

  if (inst.options.cable_sizing)
    check(rep, inst.cable_catalog.has_value(), "cable sizing enabled but no cable_catalog");
  if (inst.options.pipe_sizing)
    check(rep, inst.pipe_catalog.has_value(), "pipe sizing enabled but no pipe_catalog");
  if (inst.cable_catalog) {
    const auto& ts = inst.cable_catalog->types;
    check(rep, !ts.empty(), "cable_catalog must list at least one type");
    for (std::size_t k = 0; k < ts.size(); ++k) {
      check(rep, ts[k].R_per_m > 0 && ts[k].cost_per_m > 0,
            "cable type " + std::to_string(k) + ": resistance and cost must be positive");
      if (k > 0)
        check(rep, ts[k].R_per_m < ts[k - 1].R_per_m,
              "cable types must be sorted by capacity (decreasing resistance)");
    }
  }
  if (inst.pipe_catalog) {
    const auto& ts = inst.pipe_catalog->types;
    check(rep, !ts.empty(), "pipe_catalog must list at least one type");
    check(rep, inst.pipe_catalog->gas_density > 0, "gas_density must be positive");
    check(rep, inst.pipe_catalog->gas_velocity > 0, "gas_velocity must be positive");
    for (std::size_t k = 0; k < ts.size(); ++k) {
      check(rep, ts[k].diameter_m > 0 && ts[k].cost_per_m > 0,
            "pipe type " + std::to_string(k) + ": diameter and cost must be positive");
      if (k > 0)
        check(rep, ts[k].diameter_m > ts[k - 1].diameter_m,
              "pipe types must be sorted by capacity (increasing diameter)");
    }
  }
  return rep;
}

namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  // Top 53 bits give a uniform double in [0,1); keeps output identical
  // across standard library implementations.
  double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + u * (hi - lo);
}

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

}  // namespace

Instance generate_instance(const GenSpec& spec) {
  if (spec.n < 2) throw std::invalid_argument("generate_instance: n must be >= 2");
  std::mt19937_64 rng(spec.seed);

  Instance inst;
  inst.node_count = spec.n;
  std::vector<std::pair<int, int>> edges;
  switch (spec.topology) {
    case Topology::Tree:
      for (int i = 1; i < spec.n; ++i) edges.emplace_back(uniform_int(rng, 0, i - 1), i);
      inst.name = "tree" + std::to_string(spec.n);
      break;
    case Topology::Ring:
      if (spec.n < 3) throw std::invalid_argument("generate_instance: ring needs n >= 3");
      for (int i = 0; i + 1 < spec.n; ++i) edges.emplace_back(i, i + 1);
      edges.emplace_back(spec.n - 1, 0);
      inst.name = "ring" + std::to_string(spec.n);
      break;
    case Topology::Grid: {
      int r = static_cast<int>(std::sqrt(static_cast<double>(spec.n)));
      while (spec.n % r != 0) --r;
      int cgrid = spec.n / r;
      auto id = [&](int a, int b) { return a * cgrid + b; };
      for (int a = 0; a < r; ++a)
        for (int b = 0; b < cgrid; ++b) {
          if (b + 1 < cgrid) edges.emplace_back(id(a, b), id(a, b + 1));
          if (a + 1 < r) edges.emplace_back(id(a, b), id(a + 1, b));
        }
      inst.name = "grid" + std::to_string(spec.n);
      break;
    }
  }

  double total_emission_cb = 0;
  double peak_gas = 0;
  const double a_g = 10.0;
  for (auto [i, j] : edges) {
    Arc arc;
    arc.i = i;
    arc.j = j;
    arc.length_m = uniform(rng, 30, 120);
    ArcDemand& d = arc.demand;
    d.SHL = spec.demand_scale * uniform(rng, 40000, 90000);
    d.SEL = spec.demand_scale * uniform(rng, 8000, 20000);
    d.MHL = d.SHL / uniform(rng, 800, 1400);
    d.MEL = d.SEL / uniform(rng, 2500, 4000);
    d.SEL_t = {d.SEL, d.SEL * uniform(rng, 0.3, 0.9), d.SEL + d.SHL * uniform(rng, 0.25, 0.45)};
    d.MEL_t = {d.MEL, d.MEL * uniform(rng, 0.3, 0.9), d.MEL + d.MHL * uniform(rng, 0.25, 0.45)};
    d.SGL_t = {d.SHL * uniform(rng, 1.05, 1.25), d.SHL * uniform(rng, 1.15, 1.45), 0};
    d.MGL_t = {d.MHL * uniform(rng, 1.05, 1.25), d.MHL * uniform(rng, 1.15, 1.45), 0};
    arc.R_e = uniform(rng, 0.2, 1.0) * arc.length_m / 100.0;
    arc.R_g = uniform(rng, 1e-6, 1e-5) * arc.length_m / 100.0;
    arc.zeta_g = 2.5 * arc.length_m;
    total_emission_cb += 0.40 * d.SEL + 0.20 * d.sgl(Tech::CB);
    peak_gas += std::max(d.mgl(Tech::CB), d.mgl(Tech::CHP));
    inst.arcs.push_back(arc);
  }

  inst.physical = {400, 360, 1.0, 60, 30, a_g, 1.5 * peak_gas / a_g + 10};
  CostParams& c = inst.costs;
  c.alpha_p_e = 0.30;
  c.alpha_p_g = 0.08;
  c.beta_e = 0.05;
  c.beta_g = 0.01;
  c.t_adv = 0.5;
  c.alpha_a_e = 40;
  c.alpha_a_g = 15;
  c.gamma = {900, 1800, 1400};
  c.nu1 = 0.04;
  c.nu2 = 0.07;
  c.kappa_e = 0.40;
  c.kappa_g = 0.20;
  c.E_target = 2.0 * total_emission_cb;
  c.mu1 = 0.3;
  c.mu2 = 0.15;

  inst.finalize();
  return inst;
}

}  // namespace decnet
