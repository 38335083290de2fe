#include "decnet/cli.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "decnet/costing.hpp"
#include "decnet/formulation.hpp"
#include "decnet/instance.hpp"
#include "decnet/oracle.hpp"
#include "decnet/physics.hpp"
#include "decnet/plan.hpp"
#include "decnet/solver.hpp"

namespace decnet {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text,
                  std::ostream& out) {
  if (path.empty()) {
    out << text;
    if (text.empty() || text.back() != '\n') out << '\n';
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << text;
}

Instance load_from(const std::string& path) {
  return load_instance(read_file(path));
}

json cost_json(const CostBreakdown& cb) {
  json j;
  j["energy"] = cb.energy;
  j["tax"] = cb.tax;
  j["allocation"] = cb.allocation;
  j["grid"] = cb.grid;
  if (cb.grid_e > 0) j["grid_e"] = cb.grid_e;
  j["tech"] = cb.tech;
  j["renovation"] = cb.renovation;
  j["total"] = cb.total();
  j["emission"] = cb.emission;
  return j;
}

int cmd_validate(const std::string& path, std::ostream& out) {
  Instance inst = load_from(path);
  ValidationReport rep = validate_instance(inst);
  json j;
  j["ok"] = rep.ok();
  j["violations"] = rep.violations;
  out << j.dump(2) << '\n';
  return rep.ok() ? 0 : 1;
}

struct GenArgs {
  int nodes = 5;
  std::uint64_t seed = 1;
  double scale = 1.0;
  std::string topology = "tree";
  std::string output;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  GenSpec gs;
  gs.n = a.nodes;
  gs.seed = a.seed;
  gs.demand_scale = a.scale;
  if (a.topology == "tree")
    gs.topology = Topology::Tree;
  else if (a.topology == "ring")
    gs.topology = Topology::Ring;
  else if (a.topology == "grid")
    gs.topology = Topology::Grid;
  else
    throw std::runtime_error("unknown topology " + a.topology);
  Instance inst = generate_instance(gs);
  write_output(a.output, save_instance(inst), out);
  return 0;
}

struct FormulateArgs {
  std::string instance;
  std::string output;
  bool renovation_binary = false;
  bool as_json = false;
};

int cmd_formulate(const FormulateArgs& a, std::ostream& out) {
  Instance inst = load_from(a.instance);
  FormulationOptions fo;
  fo.renovation_binary = a.renovation_binary;
  Formulation f = build_formulation(inst, fo);
  write_output(a.output, a.as_json ? export_json(f) : export_text(f), out);
  return 0;
}

struct SolveArgs {
  std::string instance;
  std::string plan_out;
  double gap = 1e-6;
  long node_limit = 1000000;
  int threads = 1;
  bool renovation_binary = false;
};

int cmd_solve(const SolveArgs& a, std::ostream& out) {
  Instance inst = load_from(a.instance);
  SolveOptions so;
  so.gap_tol = a.gap;
  so.node_limit = a.node_limit;
  so.threads = a.threads;
  so.formulation.renovation_binary = a.renovation_binary;
  SolveResult sr = solve(inst, so);

  json j;
  j["status"] = solve_status_name(sr.status);
  j["nodes"] = sr.nodes;
  j["lower_bound"] = sr.lower_bound;
  j["root_objective"] = sr.root_objective;
  if (!sr.message.empty()) j["message"] = sr.message;
  if (sr.plan) {
    j["objective"] = sr.objective;
    j["gap"] = sr.gap();
    j["plan"] = json::parse(plan_to_json(inst, *sr.plan));
    if (!a.plan_out.empty())
      write_output(a.plan_out, plan_to_json(inst, *sr.plan), out);
  }
  out << j.dump(2) << '\n';
  return sr.plan ? 0 : 1;
}

struct SimulateArgs {
  std::string instance;
  std::string plan;
  double tol = 1e-6;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  Instance inst = load_from(a.instance);
  Plan plan = plan_from_json(inst, read_file(a.plan));
  SimulationResult sim = simulate(inst, plan, {});

  json j;
  j["feasible"] = sim.feasible;
  j["violations"] = sim.violations;
  j["node_voltage"] = sim.electric.u;
  j["node_pressure"] = sim.gas.p;
  bool residual_ok = false;
  if (sim.feasible) {
    CostBreakdown cb = evaluate_cost(inst, plan, sim);
    j["cost"] = cost_json(cb);
    Formulation f = build_formulation(inst, {});
    PlanPoint pt = assemble_plan(inst, f, plan, sim, cb);
    ViolationReport rep = evaluate_residuals(f, pt, a.tol);
    residual_ok = rep.ok();
    json rj;
    rj["ok"] = rep.ok();
    rj["max_violation"] = rep.max_violation;
    json bad = json::array();
    for (const auto& v : rep.rows) {
      json b;
      b["row"] = v.id;
      b["amount"] = v.amount;
      bad.push_back(b);
    }
    rj["rows"] = bad;
    j["residuals"] = rj;
  }
  out << j.dump(2) << '\n';
  return sim.feasible && residual_ok ? 0 : 1;
}

struct OracleArgs {
  std::string instance;
  std::string plan_out;
  long limit = 1000000;
  int threads = 0;
};

int cmd_oracle(const OracleArgs& a, std::ostream& out) {
  Instance inst = load_from(a.instance);
  OracleOptions oo;
  oo.combo_limit = a.limit;
  oo.threads = a.threads;
  OracleResult orc = enumerate_exact(inst, oo);

  json j;
  j["feasible"] = orc.feasible;
  j["evaluated"] = orc.evaluated;
  j["feasible_count"] = orc.feasible_count;
  if (!orc.message.empty()) j["message"] = orc.message;
  if (orc.feasible) {
    j["objective"] = orc.objective;
    if (orc.other_tech_objective)
      j["other_tech_objective"] = *orc.other_tech_objective;
    j["plan"] = json::parse(plan_to_json(inst, orc.plan));
    if (!a.plan_out.empty())
      write_output(a.plan_out, plan_to_json(inst, orc.plan), out);
  }
  out << j.dump(2) << '\n';
  return orc.feasible ? 0 : 1;
}

struct ReportArgs {
  std::string instance;
  bool renovation_binary = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  Instance inst = load_from(a.instance);
  FormulationOptions fo;
  fo.renovation_binary = a.renovation_binary;
  Formulation f = build_formulation(inst, fo);

  std::map<std::string, int> tags;
  for (const auto& r : f.rows) ++tags[r.tag];
  int binaries = 0;
  for (const auto& v : f.catalog.vars)
    binaries += v.kind == VarKind::Binary ? 1 : 0;

  json j;
  j["nodes"] = inst.node_count;
  j["arcs"] = inst.arc_count();
  j["variables"] = f.catalog.size();
  j["binaries"] = binaries;
  j["rows"] = f.rows.size();
  j["tags"] = tags;
  out << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Design toolkit for coupled electric and gas supply networks"};
  app.require_subcommand(1);

  std::string val_path;
  auto* validate = app.add_subcommand("validate", "Check an instance file");
  validate->add_option("instance", val_path, "instance JSON file")->required();

  GenArgs gen;
  auto* generate = app.add_subcommand("gen", "Generate a synthetic instance");
  generate->add_option("--nodes", gen.nodes, "node count")->check(CLI::Range(2, 1000));
  generate->add_option("--seed", gen.seed, "random seed");
  generate->add_option("--scale", gen.scale, "demand scale factor");
  generate->add_option("--topology", gen.topology, "tree, ring or grid");
  generate->add_option("-o,--output", gen.output, "write to file instead of stdout");

  FormulateArgs form;
  auto* formulate = app.add_subcommand("formulate", "Print the optimization model");
  formulate->add_option("instance", form.instance, "instance JSON file")->required();
  formulate->add_flag("--renovation-binary", form.renovation_binary,
                      "restrict renovation stages to {0,1}");
  formulate->add_flag("--json", form.as_json, "emit JSON instead of text");
  formulate->add_option("-o,--output", form.output, "write to file instead of stdout");

  SolveArgs sol;
  auto* solve_cmd = app.add_subcommand("solve", "Optimize technology and routing");
  solve_cmd->add_option("instance", sol.instance, "instance JSON file")->required();
  solve_cmd->add_option("--gap", sol.gap, "relative optimality gap");
  solve_cmd->add_option("--node-limit", sol.node_limit, "search node budget");
  solve_cmd->add_option("--threads", sol.threads, "parallel node workers");
  solve_cmd->add_flag("--renovation-binary", sol.renovation_binary,
                      "restrict renovation stages to {0,1}");
  solve_cmd->add_option("--plan-out", sol.plan_out, "write the plan JSON here");

  SimulateArgs simargs;
  auto* simulate_cmd = app.add_subcommand("simulate", "Check a plan against the physics");
  simulate_cmd->add_option("instance", simargs.instance, "instance JSON file")->required();
  simulate_cmd->add_option("--plan", simargs.plan, "plan JSON file")->required();
  simulate_cmd->add_option("--tol", simargs.tol, "residual tolerance");

  OracleArgs orc;
  auto* oracle_cmd = app.add_subcommand("oracle", "Exhaustive reference search");
  oracle_cmd->add_option("instance", orc.instance, "instance JSON file")->required();
  oracle_cmd->add_option("--limit", orc.limit, "largest combination count accepted");
  oracle_cmd->add_option("--threads", orc.threads, "worker threads, 0 = all");
  oracle_cmd->add_option("--plan-out", orc.plan_out, "write the best plan JSON here");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Model size and row families");
  report_cmd->add_option("instance", rep.instance, "instance JSON file")->required();
  report_cmd->add_flag("--renovation-binary", rep.renovation_binary,
                       "restrict renovation stages to {0,1}");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (validate->parsed()) return cmd_validate(val_path, out);
    if (generate->parsed()) return cmd_gen(gen, out);
    if (formulate->parsed()) return cmd_formulate(form, out);
    if (solve_cmd->parsed()) return cmd_solve(sol, out);
    if (simulate_cmd->parsed()) return cmd_simulate(simargs, out);
    if (oracle_cmd->parsed()) return cmd_oracle(orc, out);
    if (report_cmd->parsed()) return cmd_report(rep, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace decnet
