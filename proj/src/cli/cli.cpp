#include "meshreconf/cli/cli.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "meshreconf/io/io.hpp"
#include "meshreconf/milp/lp_format.hpp"
#include "meshreconf/planner/planner.hpp"

namespace meshreconf::cli {

namespace fs = std::filesystem;

namespace {

// Carries an exit code out of a command body.
struct Failure {
  int code;
  std::string message;
};

struct SolverFlags {
  double time_limit = std::numeric_limits<double>::infinity();
  std::int64_t node_limit = std::numeric_limits<std::int64_t>::max();
  bool deterministic = false;
  std::string branching = "first-index";
  bool verbose = false;

  solver::SolveConfig config() const {
    solver::SolveConfig c;
    c.time_limit_s = time_limit;
    c.node_limit = node_limit;
    c.deterministic = deterministic;
    c.branching = branching == "first-index" ? solver::BranchingRule::kFirstIndex
                                             : solver::BranchingRule::kMostFractional;
    c.verbose = verbose;
    return c;
  }
};

void add_solver_flags(CLI::App* app, SolverFlags& f) {
  app->add_option("--time-limit", f.time_limit, "Solver wall-clock limit in seconds")
      ->check(CLI::PositiveNumber);
  app->add_option("--node-limit", f.node_limit, "Branch-and-bound node limit")
      ->check(CLI::PositiveNumber);
  app->add_flag("--deterministic", f.deterministic,
                "First-index branching and fixed node order");
  app->add_option("--branching", f.branching, "Branching rule")
      ->check(CLI::IsMember({"most-fractional", "first-index"}));
  app->add_flag("--verbose", f.verbose, "Solver progress on stderr");
}

// Slot-related overrides shared by gen, plan, export-lp and sweep.
struct ScenarioFlags {
  std::optional<int> slots;
  std::optional<double> tau;
  std::optional<std::string> weight;
  std::optional<double> loss_threshold;
  std::string threshold_window = "half";
};

// Sweeps take --slots and --weight as lists instead.
void add_scenario_flags(CLI::App* app, ScenarioFlags& f, bool single_cell) {
  if (single_cell) {
    app->add_option("--slots,-K", f.slots, "Number of time slots K (0: smallest feasible)")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--weight", f.weight, "Slot weight m_k")
        ->check(CLI::IsMember({"constant", "linear", "exp"}));
  }
  app->add_option("--tau", f.tau, "Slot duration in seconds")->check(CLI::PositiveNumber);
  app->add_option("--loss-threshold", f.loss_threshold,
                  "Largest loss fraction allowed inside the threshold window")
      ->check(CLI::Range(0.0, 1.0));
  app->add_option("--threshold-window", f.threshold_window,
                  "half: slots ceil(K/2)..K; all: every slot")
      ->check(CLI::IsMember({"half", "all"}));
}

scenario::Scenario with_threshold(scenario::Scenario s, const ScenarioFlags& f) {
  if (!f.loss_threshold) return s;
  if (f.threshold_window == "all") {
    return scenario::apply_loss_thresholds(
        std::move(s), std::vector<double>(s.slots, *f.loss_threshold));
  }
  return scenario::apply_loss_thresholds(std::move(s), *f.loss_threshold);
}

// Changing K resets the threshold profile to all ones unless a threshold is
// given on the command line.
scenario::Scenario apply_overrides(scenario::Scenario s, const ScenarioFlags& f) {
  if (f.slots && *f.slots != s.slots) {
    int k = *f.slots;
    if (k == 0) k = scenario::min_horizon(s.a0, s.x_end, s.topology.v, s.topology.theta);
    s.slots = k;
    s.loss_threshold.assign(k, 1.0);
  }
  if (f.tau) s.tau = *f.tau;
  if (f.weight) s.weight = scenario::parse_weight_kind(*f.weight);
  s = with_threshold(std::move(s), f);
  s.validate();
  return s;
}

struct TopologyFlags {
  std::string kind = "simple";
  std::optional<int> users;
  std::uint64_t seed = 1;
  int interfaces = 2;
  double theta = 10.0;
  int rows = 4;
  int cols = 4;
  double spacing = 180.0;
  double sigma = 1.0 / 8.0;
  double range_factor = 1.5;
  double hex_spacing = 140.0;
  double max_range = 0.0;
  std::optional<int> fiber_node;
};

void add_topology_flags(CLI::App* app, TopologyFlags& f, bool with_seed_and_interfaces) {
  app->add_option("--topology", f.kind, "Topology kind")
      ->check(CLI::IsMember({"simple", "grid", "hexagon"}));
  app->add_option("--users", f.users, "Users per demand draw")->check(CLI::NonNegativeNumber);
  if (with_seed_and_interfaces) {
    app->add_option("--seed", f.seed, "Scenario seed");
    app->add_option("--interfaces,-N", f.interfaces, "Interfaces per node")
        ->check(CLI::PositiveNumber);
  }
  app->add_option("--theta", f.theta, "Rotation quantum in degrees")
      ->check(CLI::PositiveNumber);
  app->add_option("--rows", f.rows, "Grid rows")->check(CLI::PositiveNumber);
  app->add_option("--cols", f.cols, "Grid columns")->check(CLI::PositiveNumber);
  app->add_option("--spacing", f.spacing, "Grid spacing in meters")
      ->check(CLI::PositiveNumber);
  app->add_option("--sigma", f.sigma, "Grid jitter as a fraction of the spacing")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--range-factor", f.range_factor, "Grid range as a multiple of the spacing")
      ->check(CLI::PositiveNumber);
  app->add_option("--hex-spacing", f.hex_spacing, "Hexagon spacing in meters")
      ->check(CLI::PositiveNumber);
  app->add_option("--max-range", f.max_range, "Link range in meters (overrides defaults)")
      ->check(CLI::NonNegativeNumber);
  app->add_option("--fiber-node", f.fiber_node, "Fiber-connected node (grid, hexagon)")
      ->check(CLI::NonNegativeNumber);
}

scenario::GenerateOptions generate_options(const TopologyFlags& t, const ScenarioFlags& s,
                                           const SolverFlags& solver_flags) {
  scenario::GenerateOptions g;
  g.kind = scenario::parse_topology_kind(t.kind);
  g.topology.interfaces = t.interfaces;
  g.topology.theta = t.theta;
  g.topology.max_range = t.max_range;
  g.grid.rows = t.rows;
  g.grid.cols = t.cols;
  g.grid.spacing = t.spacing;
  g.grid.sigma_fraction = t.sigma;
  g.grid.range_factor = t.range_factor;
  g.hex_spacing = t.hex_spacing;
  g.fiber_node = t.fiber_node;
  g.users = t.users;
  g.seed = t.seed;
  if (s.slots) g.slots = *s.slots;
  if (s.tau) g.tau = *s.tau;
  if (s.weight) g.weight = scenario::parse_weight_kind(*s.weight);
  // Snapshot ties must not depend on the branching flags.
  g.snapshot_solver = solver_flags.config();
  g.snapshot_solver.deterministic = true;
  g.snapshot_solver.branching = solver::BranchingRule::kFirstIndex;
  return g;
}

scenario::Scenario load_scenario(const std::string& path) {
  try {
    return io::scenario_from_json(io::read_file(path));
  } catch (const io::FormatError& e) {
    throw Failure{kExitParse, path + ": " + e.what()};
  }
}

planner::TransitionPlan load_plan(const std::string& path) {
  try {
    return io::plan_from_json(io::read_file(path));
  } catch (const io::FormatError& e) {
    throw Failure{kExitParse, path + ": " + e.what()};
  }
}

void report_violations(const std::vector<planner::Violation>& violations,
                       std::ostream& err) {
  for (const auto& v : violations) {
    err << "violation [" << planner::to_string(v.kind) << "]";
    if (v.slot > 0) err << " k=" << v.slot;
    err << ": " << v.message << "\n";
  }
}

int exit_for(solver::Status status) {
  switch (status) {
    case solver::Status::kInfeasible: return kExitInfeasible;
    case solver::Status::kLimitReached: return kExitLimit;
    default: return kExitError;
  }
}

std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  std::ostringstream ss;
  ss.precision(12);
  ss << v;
  return ss.str();
}

// ---- commands ----

int cmd_gen(const TopologyFlags& t, const ScenarioFlags& sf, const SolverFlags& solver_flags,
            const fs::path& out_dir, const std::string& file, std::ostream& out) {
  scenario::Scenario s = scenario::generate(generate_options(t, sf, solver_flags));
  s = with_threshold(std::move(s), sf);
  const fs::path path = out_dir / file;
  io::write_file(path, io::scenario_to_json(s));
  out << "scenario " << s.name << ": D=" << s.topology.num_nodes()
      << " N=" << s.topology.interfaces << " K=" << s.slots << " -> " << path.string()
      << "\n";
  return kExitOk;
}

int cmd_export_lp(const scenario::Scenario& s, const planner::BuildOptions& build,
                  const fs::path& out_dir, std::ostream& out) {
  const planner::BuiltModel built = planner::build_model(s, build);
  const fs::path path = out_dir / "model.lp";
  io::write_file(path, milp::write_lp(built.model));
  out << "model: " << built.model.num_variables() << " variables, "
      << built.model.num_constraints() << " rows -> " << path.string() << "\n";
  return kExitOk;
}

int cmd_plan(const scenario::Scenario& s, const SolverFlags& solver_flags,
             const planner::BuildOptions& build, const fs::path& out_dir,
             std::ostream& out, std::ostream& err) {
  const planner::BuiltModel built = planner::build_model(s, build);
  const solver::Solution sol = solver::solve_milp(built.model, solver_flags.config());

  io::SolveReport report;
  report.solution = sol;
  report.variables = built.model.num_variables();
  report.constraints = built.model.num_constraints();
  report.integer_variables = built.model.num_integral();
  report.big_m = built.big_m;

  std::optional<planner::TransitionPlan> plan;
  std::vector<planner::Violation> violations;
  if (sol.has_assignment()) {
    plan = planner::extract_plan(s, built.model, sol);
    violations = planner::validate_plan(s, *plan);
    report.violations = violations.size();
  }
  io::write_file(out_dir / "report.json", io::report_to_json(report));
  out << "status " << solver::to_string(sol.status) << " objective "
      << format_double(sol.objective) << " bound " << format_double(sol.bound)
      << " nodes " << sol.stats.nodes << " time " << sol.stats.wall_time_s << "s\n";
  if (!plan) {
    err << "no plan: solver status " << solver::to_string(sol.status) << "\n";
    return exit_for(sol.status);
  }
  io::write_file(out_dir / "plan.json", io::plan_to_json(*plan));
  std::ostringstream solution_text;
  milp::write_solution(built.model, sol.values, solution_text);
  io::write_file(out_dir / "solution.txt", solution_text.str());
  if (!violations.empty()) {
    report_violations(violations, err);
    return kExitInvalid;
  }
  return kExitOk;
}

int cmd_validate(const scenario::Scenario& s, const planner::TransitionPlan& plan,
                 std::ostream& out, std::ostream& err) {
  const auto violations = planner::validate_plan(s, plan);
  if (!violations.empty()) {
    report_violations(violations, err);
    return kExitInvalid;
  }
  out << "valid\n";
  return kExitOk;
}

int cmd_metrics(const scenario::Scenario& s, const planner::TransitionPlan& plan,
                const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  const auto violations = planner::validate_plan(s, plan);
  if (!violations.empty()) {
    report_violations(violations, err);
    return kExitInvalid;
  }
  const planner::PlanMetrics metrics = planner::compute_metrics(s, plan);
  std::ostringstream csv;
  io::write_metrics_csv(metrics, csv);
  io::write_file(out_dir / "metrics.csv", csv.str());
  io::write_file(out_dir / "metrics.json", io::metrics_to_json(metrics));
  out << "total loss " << metrics.total_loss_mb << " Mb ("
      << metrics.total_loss_gb << " GB)\n";
  return kExitOk;
}

// "min", "min+j" or an integer.
int resolve_slots(const std::string& token, int k_min) {
  if (token == "min") return k_min;
  if (token.rfind("min+", 0) == 0) return k_min + std::stoi(token.substr(4));
  std::size_t used = 0;
  const int k = std::stoi(token, &used);
  if (used != token.size()) throw std::invalid_argument(token);
  return k;
}

struct SweepAxes {
  std::vector<int> interfaces{2};
  std::vector<std::string> slots{"min"};
  std::vector<std::string> weights{"constant"};
  std::vector<std::uint64_t> seeds{1};
};

int cmd_sweep(const TopologyFlags& t, const ScenarioFlags& sf, const SolverFlags& solver_flags,
              const SweepAxes& axes, const planner::BuildOptions& build,
              const fs::path& out_dir, std::ostream& out, std::ostream& err) {
  std::ostringstream cells, slots;
  cells << "topology,N,K,weight,seed,status,objective,bound,total_loss_Mb,total_loss_GB,"
           "weighted_loss,slots_to_lossless,wall_time_s,error\n";
  slots << "topology,N,K,weight,seed,k,loss_Mbps,loss_fraction,active_links\n";
  cells.precision(12);
  slots.precision(12);
  int failures = 0;
  for (const int n : axes.interfaces) {
    for (const std::uint64_t seed : axes.seeds) {
      TopologyFlags cell_topology = t;
      cell_topology.interfaces = n;
      cell_topology.seed = seed;
      ScenarioFlags base_flags = sf;
      base_flags.slots = 0;
      std::optional<scenario::Scenario> base;
      std::string base_error;
      try {
        base = scenario::generate(generate_options(cell_topology, base_flags, solver_flags));
      } catch (const std::exception& e) {
        base_error = e.what();
      }
      for (const std::string& slot_token : axes.slots) {
        for (const std::string& w : axes.weights) {
          int k = 0;
          std::string error = base_error;
          std::string status = "error";
          double objective = NAN, bound = NAN;
          std::optional<planner::PlanMetrics> metrics;
          double wall = 0.0;
          if (base) {
            try {
              k = resolve_slots(slot_token, base->slots);
              scenario::Scenario s = *base;
              s.slots = k;
              s.loss_threshold.assign(k, 1.0);
              s.weight = scenario::parse_weight_kind(w);
              s = with_threshold(std::move(s), sf);
              const planner::PlanResult r = planner::plan(s, solver_flags.config(), build);
              status = std::string(solver::to_string(r.solution.status));
              objective = r.solution.objective;
              bound = r.solution.bound;
              wall = r.solution.stats.wall_time_s;
              if (r.plan) {
                if (!r.violations.empty()) {
                  error = "plan failed validation";
                } else {
                  metrics = planner::compute_metrics(s, *r.plan);
                }
              }
            } catch (const std::exception& e) {
              error = e.what();
            }
          }
          if (!error.empty()) ++failures;
          for (char& c : error) {
            if (c == ',' || c == '\n') c = ';';
          }
          cells << t.kind << ',' << n << ',' << k << ',' << w << ',' << seed << ','
                << status << ',' << format_double(objective) << ','
                << format_double(bound) << ',';
          if (metrics) {
            cells << metrics->total_loss_mb << ',' << metrics->total_loss_gb << ','
                  << metrics->weighted_loss << ',';
            if (metrics->slots_to_lossless) cells << *metrics->slots_to_lossless;
            for (const auto& m : metrics->slots) {
              slots << t.kind << ',' << n << ',' << k << ',' << w << ',' << seed << ','
                    << m.k << ',' << m.loss_mbps << ',' << m.loss_fraction << ','
                    << m.active_links << '\n';
            }
          } else {
            cells << ",,,";
          }
          cells << ',' << wall << ',' << error << '\n';
          out << "N=" << n << " K=" << k << " weight=" << w << " seed=" << seed << ": "
              << status;
          if (metrics) out << " total loss " << metrics->total_loss_mb << " Mb";
          out << "\n";
          if (!error.empty()) err << "cell failed: " << error << "\n";
        }
      }
    }
  }
  io::write_file(out_dir / "sweep.csv", cells.str());
  io::write_file(out_dir / "sweep_slots.csv", slots.str());
  out << "sweep: " << failures << " failed cells -> " << (out_dir / "sweep.csv").string()
      << "\n";
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Transition planning for steerable mmWave mesh backhaul"};
  app.require_subcommand(1);

  std::string out_dir = ".";
  SolverFlags solver_flags;
  ScenarioFlags scenario_flags;
  TopologyFlags topology_flags;
  planner::BuildOptions build;
  std::string scenario_path, plan_path, file_name = "scenario.json";
  bool export_only = false;
  SweepAxes axes;

  auto* gen = app.add_subcommand("gen", "Generate a scenario");
  add_topology_flags(gen, topology_flags, true);
  add_scenario_flags(gen, scenario_flags, true);
  add_solver_flags(gen, solver_flags);
  gen->add_option("--out", out_dir, "Output directory");
  gen->add_option("--name", file_name, "Scenario file name");

  auto* plan = app.add_subcommand("plan", "Solve a scenario");
  plan->add_option("scenario", scenario_path, "Scenario JSON")->required();
  add_scenario_flags(plan, scenario_flags, true);
  add_solver_flags(plan, solver_flags);
  plan->add_flag("--export-lp", export_only, "Only write the LP model");
  plan->add_flag("--explicit-rate", build.explicit_rate, "Keep per-link rate variables");
  plan->add_option("--out", out_dir, "Output directory");

  auto* export_lp = app.add_subcommand("export-lp", "Write the model in LP format");
  export_lp->add_option("scenario", scenario_path, "Scenario JSON")->required();
  add_scenario_flags(export_lp, scenario_flags, true);
  export_lp->add_flag("--explicit-rate", build.explicit_rate, "Keep per-link rate variables");
  export_lp->add_option("--out", out_dir, "Output directory");

  auto* validate = app.add_subcommand("validate", "Check a plan against a scenario");
  validate->add_option("scenario", scenario_path, "Scenario JSON")->required();
  validate->add_option("plan", plan_path, "Plan JSON")->required();

  auto* metrics = app.add_subcommand("metrics", "Per-slot loss CSV and JSON summary");
  metrics->add_option("scenario", scenario_path, "Scenario JSON")->required();
  metrics->add_option("plan", plan_path, "Plan JSON")->required();
  metrics->add_option("--out", out_dir, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Solve a grid of (N, K, weight, seed) cells");
  add_topology_flags(sweep, topology_flags, false);
  add_scenario_flags(sweep, scenario_flags, false);
  add_solver_flags(sweep, solver_flags);
  sweep->add_option("--interfaces,-N", axes.interfaces, "Interface counts")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  sweep->add_option("--slots,-K", axes.slots, "Slot counts: integers, min or min+j")
      ->delimiter(',');
  sweep->add_option("--weight", axes.weights, "Weight kinds")
      ->delimiter(',')
      ->check(CLI::IsMember({"constant", "linear", "exp"}));
  sweep->add_option("--seed", axes.seeds, "Seeds")->delimiter(',');
  sweep->add_flag("--explicit-rate", build.explicit_rate, "Keep per-link rate variables");
  sweep->add_option("--out", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitParse;
  }

  try {
    const fs::path dir(out_dir);
    if (*gen) {
      return cmd_gen(topology_flags, scenario_flags, solver_flags, dir, file_name, out);
    }
    if (*sweep) {
      return cmd_sweep(topology_flags, scenario_flags, solver_flags, axes, build, dir, out,
                       err);
    }
    scenario::Scenario s = load_scenario(scenario_path);
    if (*plan || *export_lp) {
      try {
        s = apply_overrides(std::move(s), scenario_flags);
      } catch (const scenario::ScenarioError& e) {
        throw Failure{kExitParse, e.what()};
      }
      if (*export_lp || export_only) return cmd_export_lp(s, build, dir, out);
      return cmd_plan(s, solver_flags, build, dir, out, err);
    }
    const planner::TransitionPlan p = load_plan(plan_path);
    if (*validate) return cmd_validate(s, p, out, err);
    return cmd_metrics(s, p, dir, out, err);
  } catch (const Failure& f) {
    err << "error: " << f.message << "\n";
    return f.code;
  } catch (const planner::HorizonError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const scenario::SnapshotError& e) {
    err << "error: " << e.what() << "\n";
    return exit_for(e.status());
  } catch (const scenario::ScenarioError& e) {
    err << "error: " << e.what() << "\n";
    return kExitParse;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
}

}  // namespace meshreconf::cli
