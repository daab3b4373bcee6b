#include "meshreconf/io/io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace meshreconf::io {

using nlohmann::json;

namespace {

// Reads fields off an object and rejects anything left unread.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw FormatError(where_ + ": expected an object");
  }

  const json& at(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) throw FormatError(where_ + ": missing field '" + key + "'");
    seen_.insert(key);
    return *it;
  }

  const json* optional(const std::string& key) {
    auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  double number(const std::string& key) { return as_number(at(key), key); }
  int integer(const std::string& key) { return as_int(at(key), key); }

  std::string string(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw FormatError(where_ + "." + key + ": expected a string");
    return v.get<std::string>();
  }

  double as_number(const json& v, const std::string& key) const {
    if (!v.is_number()) throw FormatError(where_ + "." + key + ": expected a number");
    return v.get<double>();
  }

  int as_int(const json& v, const std::string& key) const {
    if (!v.is_number_integer()) {
      throw FormatError(where_ + "." + key + ": expected an integer");
    }
    return v.get<int>();
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) {
        throw FormatError(where_ + ": unknown field '" + it.key() + "'");
      }
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

json parse_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("invalid JSON: ") + e.what());
  }
}

void check_version(Fields& f, int expected) {
  const int version = f.integer("schema_version");
  if (version != expected) {
    throw FormatError(f.where() + ": unsupported schema_version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(expected) + ")");
  }
}

const json& array(const json& v, const std::string& where) {
  if (!v.is_array()) throw FormatError(where + ": expected an array");
  return v;
}

std::vector<double> numbers(const json& v, const std::string& where) {
  std::vector<double> out;
  for (const json& e : array(v, where)) {
    if (!e.is_number()) throw FormatError(where + ": expected numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<int> integers(const json& v, const std::string& where) {
  std::vector<int> out;
  for (const json& e : array(v, where)) {
    if (!e.is_number_integer()) throw FormatError(where + ": expected integers");
    out.push_back(e.get<int>());
  }
  return out;
}

template <typename T, typename Read>
std::vector<std::vector<T>> matrix(const json& v, const std::string& where, Read read) {
  std::vector<std::vector<T>> out;
  for (const json& row : array(v, where)) out.push_back(read(row, where));
  return out;
}

json link_json(const scenario::Link& l) { return json::array({l.d, l.n, l.d2, l.n2}); }

scenario::LinkConfig links_from(const json& v, const std::string& where) {
  scenario::LinkConfig out;
  for (const json& e : array(v, where)) {
    std::vector<int> q = integers(e, where);
    if (q.size() != 4) throw FormatError(where + ": a link is [d, n, d2, n2]");
    out.push_back({q[0], q[1], q[2], q[3]});
  }
  return out;
}

// Non-finite values have no JSON literal.
json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json phy_json(const geometry::PhyParams& p) {
  return {{"tx_power_dbm", p.tx_power_dbm},
          {"tx_gain_dbi", p.tx_gain_dbi},
          {"rx_gain_dbi", p.rx_gain_dbi},
          {"bandwidth_mhz", p.bandwidth_mhz},
          {"noise_figure_db", p.noise_figure_db},
          {"pl0_db", p.pl0_db},
          {"d0_m", p.d0_m},
          {"path_loss_exponent", p.path_loss_exponent},
          {"atmospheric_db_per_m", p.atmospheric_db_per_m},
          {"min_rate_mbps", p.min_rate_mbps},
          {"max_rate_mbps", p.max_rate_mbps}};
}

geometry::PhyParams phy_from(const json& v) {
  Fields f(v, "topology.phy");
  geometry::PhyParams p;
  p.tx_power_dbm = f.number("tx_power_dbm");
  p.tx_gain_dbi = f.number("tx_gain_dbi");
  p.rx_gain_dbi = f.number("rx_gain_dbi");
  p.bandwidth_mhz = f.number("bandwidth_mhz");
  p.noise_figure_db = f.number("noise_figure_db");
  p.pl0_db = f.number("pl0_db");
  p.d0_m = f.number("d0_m");
  p.path_loss_exponent = f.number("path_loss_exponent");
  p.atmospheric_db_per_m = f.number("atmospheric_db_per_m");
  p.min_rate_mbps = f.number("min_rate_mbps");
  p.max_rate_mbps = f.number("max_rate_mbps");
  f.finish();
  return p;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

std::string scenario_to_json(const scenario::Scenario& s) {
  const auto& t = s.topology;
  json positions = json::array();
  for (const auto& p : t.positions) positions.push_back({p.x, p.y});
  json x_init = json::array(), x_end = json::array();
  for (const auto& l : s.x_init) x_init.push_back(link_json(l));
  for (const auto& l : s.x_end) x_end.push_back(link_json(l));

  json j;
  j["schema_version"] = kScenarioSchemaVersion;
  j["name"] = s.name;
  j["seed"] = s.seed;
  j["topology"] = {{"positions", positions},
                   {"fiber_nodes", t.fiber_nodes},
                   {"interfaces", t.interfaces},
                   {"max_range", t.max_range},
                   {"theta", t.theta},
                   {"phy", phy_json(t.phy)}};
  j["demand"] = s.demand;
  j["x_init"] = x_init;
  j["x_end"] = x_end;
  j["a0"] = s.a0;
  j["slots"] = s.slots;
  j["tau"] = s.tau;
  j["weight"] = std::string(scenario::to_string(s.weight));
  j["loss_threshold"] = s.loss_threshold;
  return dump(j);
}

scenario::Scenario scenario_from_json(const std::string& text) {
  const json root = parse_text(text);
  Fields f(root, "scenario");
  check_version(f, kScenarioSchemaVersion);

  scenario::Scenario s;
  s.name = f.string("name");
  const json& seed = f.at("seed");
  if (!seed.is_number_unsigned()) throw FormatError("scenario.seed: expected an unsigned integer");
  s.seed = seed.get<std::uint64_t>();

  Fields t(f.at("topology"), "topology");
  std::vector<geometry::NodePosition> positions;
  for (const json& p : array(t.at("positions"), "topology.positions")) {
    std::vector<double> xy = numbers(p, "topology.positions");
    if (xy.size() != 2) throw FormatError("topology.positions: a position is [x, y]");
    positions.push_back({xy[0], xy[1]});
  }
  std::vector<int> fiber = integers(t.at("fiber_nodes"), "topology.fiber_nodes");
  const int interfaces = t.integer("interfaces");
  const double range = t.number("max_range");
  const double theta = t.number("theta");
  const geometry::PhyParams phy = phy_from(t.at("phy"));
  t.finish();

  s.demand = numbers(f.at("demand"), "scenario.demand");
  s.x_init = links_from(f.at("x_init"), "scenario.x_init");
  s.x_end = links_from(f.at("x_end"), "scenario.x_end");
  s.a0 = matrix<double>(f.at("a0"), "scenario.a0", numbers);
  s.slots = f.integer("slots");
  s.tau = f.number("tau");
  try {
    s.weight = scenario::parse_weight_kind(f.string("weight"));
  } catch (const scenario::ScenarioError& e) {
    throw FormatError(std::string("scenario.weight: ") + e.what());
  }
  s.loss_threshold = numbers(f.at("loss_threshold"), "scenario.loss_threshold");
  f.finish();

  try {
    s.topology = scenario::make_topology(std::move(positions), std::move(fiber),
                                         interfaces, range, theta, phy);
    s.validate();
  } catch (const std::runtime_error& e) {
    throw FormatError(std::string("scenario: ") + e.what());
  }
  return s;
}

std::string plan_to_json(const planner::TransitionPlan& plan) {
  json slots = json::array();
  for (std::size_t i = 0; i < plan.slots.size(); ++i) {
    const auto& slot = plan.slots[i];
    json links = json::array();
    for (const auto& lf : slot.links) {
      links.push_back({{"link", link_json(lf.link)}, {"flow", lf.flow}});
    }
    slots.push_back({{"k", static_cast<int>(i) + 1},
                     {"orientation", slot.orientation},
                     {"cw", slot.cw},
                     {"ccw", slot.ccw},
                     {"links", links},
                     {"loss", slot.loss},
                     {"ingress", slot.ingress}});
  }
  json j;
  j["schema_version"] = kPlanSchemaVersion;
  j["status"] = plan.status;
  j["objective"] = finite_or_null(plan.objective);
  j["slots"] = slots;
  return dump(j);
}

planner::TransitionPlan plan_from_json(const std::string& text) {
  const json root = parse_text(text);
  Fields f(root, "plan");
  check_version(f, kPlanSchemaVersion);
  planner::TransitionPlan plan;
  plan.status = f.string("status");
  const json& obj = f.at("objective");
  if (obj.is_null()) {
    plan.objective = std::nan("");
  } else {
    plan.objective = f.as_number(obj, "objective");
  }
  int expected_k = 1;
  for (const json& js : array(f.at("slots"), "plan.slots")) {
    const std::string where = "plan.slots[" + std::to_string(expected_k - 1) + "]";
    Fields sf(js, where);
    if (sf.integer("k") != expected_k) {
      throw FormatError(where + ": slots must be numbered 1..K in order");
    }
    planner::SlotState slot;
    slot.orientation = matrix<double>(sf.at("orientation"), where + ".orientation", numbers);
    slot.cw = matrix<int>(sf.at("cw"), where + ".cw", integers);
    slot.ccw = matrix<int>(sf.at("ccw"), where + ".ccw", integers);
    for (const json& jl : array(sf.at("links"), where + ".links")) {
      Fields lf(jl, where + ".links[]");
      scenario::LinkConfig one = links_from(json::array({lf.at("link")}), where + ".links");
      slot.links.push_back({one.front(), lf.number("flow")});
      lf.finish();
    }
    slot.loss = numbers(sf.at("loss"), where + ".loss");
    slot.ingress = numbers(sf.at("ingress"), where + ".ingress");
    sf.finish();
    plan.slots.push_back(std::move(slot));
    ++expected_k;
  }
  f.finish();
  return plan;
}

void write_metrics_csv(const planner::PlanMetrics& metrics, std::ostream& out) {
  out << "k,loss_Mbps,loss_fraction,active_links\n";
  const auto old = out.precision(12);
  for (const auto& m : metrics.slots) {
    out << m.k << ',' << m.loss_mbps << ',' << m.loss_fraction << ','
        << m.active_links << '\n';
  }
  out.precision(old);
}

std::string metrics_to_json(const planner::PlanMetrics& metrics) {
  json slots = json::array();
  for (const auto& m : metrics.slots) {
    slots.push_back({{"k", m.k},
                     {"loss_Mbps", m.loss_mbps},
                     {"loss_fraction", m.loss_fraction},
                     {"active_links", m.active_links}});
  }
  json j;
  j["total_loss_Mb"] = metrics.total_loss_mb;
  j["total_loss_GB"] = metrics.total_loss_gb;
  j["weighted_loss"] = metrics.weighted_loss;
  j["slots_to_lossless"] =
      metrics.slots_to_lossless ? json(*metrics.slots_to_lossless) : json(nullptr);
  j["slots"] = slots;
  return dump(j);
}

std::string report_to_json(const SolveReport& report) {
  const auto& sol = report.solution;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["status"] = std::string(solver::to_string(sol.status));
  j["objective"] = sol.has_assignment() ? finite_or_null(sol.objective) : json(nullptr);
  j["bound"] = finite_or_null(sol.bound);
  if (sol.has_assignment() && std::isfinite(sol.bound) && std::isfinite(sol.objective)) {
    j["gap"] = sol.objective - sol.bound;
  } else {
    j["gap"] = nullptr;
  }
  j["stats"] = {{"nodes", sol.stats.nodes},
                {"lp_iterations", sol.stats.lp_iterations},
                {"wall_time_s", sol.stats.wall_time_s}};
  j["model"] = {{"variables", report.variables},
                {"constraints", report.constraints},
                {"integer_variables", report.integer_variables},
                {"big_m", report.big_m}};
  j["violations"] = report.violations;
  return dump(j);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace meshreconf::io
