#include "meshreconf/scenario/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <string>

namespace meshreconf::scenario {

using geometry::NodePosition;

namespace {

bool on_grid(double angle, double theta) {
  const double q = angle / theta;
  return std::abs(q - std::round(q)) < 1e-9;
}

std::string link_text(const Link& l) {
  return "(" + std::to_string(l.d) + "," + std::to_string(l.n) + ")->(" +
         std::to_string(l.d2) + "," + std::to_string(l.n2) + ")";
}

}  // namespace

bool Topology::is_fiber(int d) const {
  return std::find(fiber_nodes.begin(), fiber_nodes.end(), d) != fiber_nodes.end();
}

void Topology::validate() const {
  const int n = num_nodes();
  if (n < 1) throw ScenarioError("topology has no nodes");
  if (interfaces < 1) throw ScenarioError("interfaces per node must be >= 1");
  if (fiber_nodes.empty()) throw ScenarioError("topology needs a fiber node");
  std::set<int> seen;
  for (int f : fiber_nodes) {
    if (f < 0 || f >= n) throw ScenarioError("fiber node index out of range");
    if (!seen.insert(f).second) throw ScenarioError("duplicate fiber node");
  }
  geometry::check_rotation_quantum(theta);
  auto square = [n](const auto& m) {
    if (static_cast<int>(m.size()) != n) return false;
    for (const auto& row : m) {
      if (static_cast<int>(row.size()) != n) return false;
    }
    return true;
  };
  if (!square(delta) || !square(v) || !square(r)) {
    throw ScenarioError("topology matrices must be D x D");
  }
  for (int d = 0; d < n; ++d) {
    if (delta[d][d] != 0) throw ScenarioError("connectivity diagonal must be zero");
    for (int e = 0; e < n; ++e) {
      if (delta[d][e] != delta[e][d]) throw ScenarioError("connectivity must be symmetric");
      if (d == e || !delta[d][e]) continue;
      if (r[d][e] != r[e][d]) throw ScenarioError("capacity must be symmetric");
      if (!(r[d][e] > 0)) throw ScenarioError("capacity must be positive on links");
      if (!on_grid(v[d][e], theta) || v[d][e] < 0 || v[d][e] >= 360) {
        throw ScenarioError("alignment angle off the rotation grid");
      }
      if (geometry::wrap_angle(v[d][e] + 180.0) != v[e][d]) {
        throw ScenarioError("alignment angles must be reciprocal");
      }
    }
  }
}

Topology make_topology(std::vector<NodePosition> positions,
                       std::vector<int> fiber_nodes, int interfaces,
                       double max_range, double theta,
                       const geometry::PhyParams& phy) {
  Topology t;
  t.positions = std::move(positions);
  t.fiber_nodes = std::move(fiber_nodes);
  t.interfaces = interfaces;
  t.max_range = max_range;
  t.theta = theta;
  t.phy = phy;
  t.delta = geometry::connectivity(t.positions, max_range);
  t.v = geometry::alignment_matrix(t.positions, theta);
  t.r = geometry::capacity_matrix(t.positions, t.delta, phy);
  t.validate();
  return t;
}

LinkConfig canonical(LinkConfig links) {
  std::sort(links.begin(), links.end());
  return links;
}

void validate_links(const LinkConfig& links, const Topology& topology,
                    std::string_view what) {
  const int n = topology.num_nodes();
  std::set<std::pair<int, int>> used;
  for (const Link& l : links) {
    const std::string where = std::string(what) + " link " + link_text(l);
    if (l.d < 0 || l.d >= n || l.d2 < 0 || l.d2 >= n || l.n < 0 ||
        l.n >= topology.interfaces || l.n2 < 0 || l.n2 >= topology.interfaces) {
      throw ScenarioError(where + ": index out of range");
    }
    if (!topology.delta[l.d][l.d2]) {
      throw ScenarioError(where + ": nodes are not within range");
    }
    if (!used.insert({l.d, l.n}).second || !used.insert({l.d2, l.n2}).second) {
      throw ScenarioError(where + ": interface already used by another link");
    }
  }
}

std::string_view to_string(WeightKind kind) {
  switch (kind) {
    case WeightKind::kConstant: return "constant";
    case WeightKind::kLinear: return "linear";
    case WeightKind::kExponential: return "exp";
  }
  return "constant";
}

WeightKind parse_weight_kind(std::string_view text) {
  if (text == "constant") return WeightKind::kConstant;
  if (text == "linear") return WeightKind::kLinear;
  if (text == "exp" || text == "exponential") return WeightKind::kExponential;
  throw ScenarioError("unknown weight kind '" + std::string(text) + "'");
}

double weight(WeightKind kind, int k) {
  if (k < 1) throw ScenarioError("slot index must be >= 1");
  switch (kind) {
    case WeightKind::kConstant: return 1.0;
    case WeightKind::kLinear: return 2.0 * k;
    case WeightKind::kExponential: return std::exp(static_cast<double>(k));
  }
  return 1.0;
}

double Scenario::total_demand() const {
  double total = 0.0;
  for (double v : demand) total += v;
  return total;
}

void Scenario::validate() const {
  topology.validate();
  const int nodes = topology.num_nodes();
  const int ifaces = topology.interfaces;
  if (static_cast<int>(demand.size()) != nodes) {
    throw ScenarioError("demand vector must have one entry per node");
  }
  for (double v : demand) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw ScenarioError("demand must be >= 0");
  }
  validate_links(x_init, topology, "initial");
  validate_links(x_end, topology, "final");
  if (slots < 1) throw ScenarioError("slot count must be >= 1");
  if (!(tau > 0.0)) throw ScenarioError("slot duration must be positive");
  if (static_cast<int>(loss_threshold.size()) != slots) {
    throw ScenarioError("loss threshold profile must have one entry per slot");
  }
  for (double v : loss_threshold) {
    if (!(v >= 0.0 && v <= 1.0)) throw ScenarioError("loss thresholds must lie in [0, 1]");
  }
  if (static_cast<int>(a0.size()) != nodes) {
    throw ScenarioError("initial orientations must be D x N");
  }
  for (const auto& row : a0) {
    if (static_cast<int>(row.size()) != ifaces) {
      throw ScenarioError("initial orientations must be D x N");
    }
    for (double a : row) {
      if (!std::isfinite(a) || !on_grid(a, topology.theta)) {
        throw ScenarioError("initial orientations must be multiples of theta");
      }
    }
  }
  for (const Link& l : x_init) {
    const bool ok = geometry::wrap_angle(a0[l.d][l.n]) == topology.v[l.d][l.d2] &&
                    geometry::wrap_angle(a0[l.d2][l.n2]) == topology.v[l.d2][l.d];
    if (!ok) {
      throw ScenarioError("initial link " + link_text(l) +
                          " is not aligned by the initial orientations");
    }
  }
}

Topology gen_simple(const TopologyOptions& options) {
  if (options.interfaces < 2) {
    throw ScenarioError("the simple topology needs at least 2 interfaces");
  }
  // Fiber node on top, two 3-hop chains down to the bottom pair, and one
  // spare node between the chains.
  std::vector<NodePosition> positions = {
      {0, 300},    // 0 fiber
      {-80, 220},  // 1 left chain
      {-80, 110},  // 2
      {-40, 0},    // 3 bottom left
      {80, 220},   // 4 right chain
      {80, 110},   // 5
      {40, 0},     // 6 bottom right
      {0, 60},     // 7 spare
  };
  const double range = options.max_range > 0 ? options.max_range : 125.0;
  return make_topology(std::move(positions), {0}, options.interfaces, range,
                       options.theta, options.phy);
}

LinkConfig simple_initial_links() {
  return canonical({{0, 0, 1, 0}, {1, 1, 2, 0}, {2, 1, 3, 0},
                    {0, 1, 4, 0}, {4, 1, 5, 0}, {5, 1, 6, 0}});
}

LinkConfig simple_final_links() {
  return canonical({{0, 0, 1, 0}, {1, 1, 2, 0}, {2, 1, 7, 0}, {7, 1, 3, 0},
                    {0, 1, 4, 0}, {4, 1, 5, 0}, {5, 1, 6, 0}});
}

std::vector<double> simple_demand() {
  return {0, 600, 700, 900, 600, 700, 900, 600};
}

Topology gen_grid(const GridOptions& grid, std::uint64_t seed,
                  const TopologyOptions& options) {
  if (grid.rows < 1 || grid.cols < 1) throw ScenarioError("grid needs rows, cols >= 1");
  if (!(grid.spacing > 0)) throw ScenarioError("grid spacing must be positive");
  if (!(grid.sigma_fraction >= 0)) throw ScenarioError("jitter must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, grid.sigma_fraction * grid.spacing);
  std::vector<NodePosition> positions;
  for (int j = 0; j < grid.rows; ++j) {
    for (int i = 0; i < grid.cols; ++i) {
      NodePosition p{i * grid.spacing, j * grid.spacing};
      if (grid.sigma_fraction > 0) {
        p.x += jitter(rng);
        p.y += jitter(rng);
      }
      positions.push_back(p);
    }
  }
  const int fiber = grid.fiber_node.value_or(0);
  if (fiber < 0 || fiber >= grid.rows * grid.cols) {
    throw ScenarioError("fiber node index out of range");
  }
  const double range = options.max_range > 0 ? options.max_range
                                             : grid.range_factor * grid.spacing;
  return make_topology(std::move(positions), {fiber}, options.interfaces, range,
                       options.theta, options.phy);
}

Topology gen_hexagon(double spacing, const TopologyOptions& options,
                     std::optional<int> fiber_node) {
  if (!(spacing > 0)) throw ScenarioError("hexagon spacing must be positive");
  // Rows of 3-4-5-4-3 nodes, alternate rows shifted by half the spacing.
  const int counts[] = {3, 4, 5, 4, 3};
  std::vector<NodePosition> positions;
  for (int row = 0; row < 5; ++row) {
    const int m = counts[row];
    for (int i = 0; i < m; ++i) {
      positions.push_back({(i - (m - 1) / 2.0) * spacing, (2 - row) * spacing});
    }
  }
  const int fiber = fiber_node.value_or(9);  // center of the middle row
  if (fiber < 0 || fiber >= 19) throw ScenarioError("fiber node index out of range");
  const double range = options.max_range > 0 ? options.max_range : 1.5 * spacing;
  return make_topology(std::move(positions), {fiber}, options.interfaces, range,
                       options.theta, options.phy);
}

std::vector<double> gen_demands(int num_users, int num_nodes, std::uint64_t seed) {
  if (num_users < 0) throw ScenarioError("user count must be >= 0");
  if (num_nodes < 1) throw ScenarioError("need at least one node");
  const int low = static_cast<int>(std::lround(0.7 * num_users));
  const int mid = std::min(static_cast<int>(std::lround(0.2 * num_users)),
                           num_users - low);
  std::vector<double> users;
  users.insert(users.end(), low, 50.0);
  users.insert(users.end(), mid, 75.0);
  users.insert(users.end(), num_users - low - mid, 100.0);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, num_nodes - 1);
  std::vector<double> demand(num_nodes, 0.0);
  for (double u : users) demand[pick(rng)] += u;
  return demand;
}

Orientations init_orientations(const Topology& topology, const LinkConfig& x_init,
                               double theta, std::uint64_t seed) {
  validate_links(x_init, topology, "initial");
  geometry::check_rotation_quantum(theta);
  const int positions = static_cast<int>(std::lround(360.0 / theta));
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, positions - 1);
  Orientations a0(topology.num_nodes(), std::vector<double>(topology.interfaces));
  for (auto& row : a0) {
    for (double& a : row) a = pick(rng) * theta;
  }
  for (const Link& l : x_init) {
    a0[l.d][l.n] = topology.v[l.d][l.d2];
    a0[l.d2][l.n2] = topology.v[l.d2][l.d];
  }
  return a0;
}

std::vector<std::vector<std::optional<double>>> required_orientations(
    const Topology& topology, const LinkConfig& links) {
  std::vector<std::vector<std::optional<double>>> out(
      topology.num_nodes(),
      std::vector<std::optional<double>>(topology.interfaces));
  for (const Link& l : links) {
    out[l.d][l.n] = topology.v[l.d][l.d2];
    out[l.d2][l.n2] = topology.v[l.d2][l.d];
  }
  return out;
}

int rotation_steps(double from, double to, double theta) {
  const double diff = geometry::wrap_angle(to - from);
  const double arc = std::min(diff, 360.0 - diff);
  return static_cast<int>(std::lround(arc / theta));
}

int min_horizon(const Orientations& a0, const LinkConfig& x_end,
                const geometry::AlignmentMatrix& v, double theta) {
  geometry::check_rotation_quantum(theta);
  int steps = 0;
  for (const Link& l : x_end) {
    steps = std::max(steps, rotation_steps(a0.at(l.d).at(l.n), v[l.d][l.d2], theta));
    steps = std::max(steps, rotation_steps(a0.at(l.d2).at(l.n2), v[l.d2][l.d], theta));
  }
  return 1 + steps;
}

double full_rotation_time(double theta, double tau) {
  geometry::check_rotation_quantum(theta);
  if (!(tau > 0.0)) throw ScenarioError("slot duration must be positive");
  return 360.0 / theta * tau;
}

Scenario apply_loss_thresholds(Scenario scenario, double value) {
  if (!(value >= 0.0 && value <= 1.0)) {
    throw ScenarioError("loss threshold must lie in [0, 1]");
  }
  const int k_first = (scenario.slots + 1) / 2;  // ceil(K/2)
  std::vector<double> profile(scenario.slots, 1.0);
  for (int k = k_first; k <= scenario.slots; ++k) profile[k - 1] = value;
  scenario.loss_threshold = std::move(profile);
  return scenario;
}

Scenario apply_loss_thresholds(Scenario scenario,
                               const std::vector<double>& profile) {
  if (static_cast<int>(profile.size()) != scenario.slots) {
    throw ScenarioError("loss threshold profile must have one entry per slot");
  }
  for (double v : profile) {
    if (!(v >= 0.0 && v <= 1.0)) throw ScenarioError("loss thresholds must lie in [0, 1]");
  }
  scenario.loss_threshold = profile;
  return scenario;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined value.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string_view to_string(TopologyKind kind) {
  switch (kind) {
    case TopologyKind::kSimple: return "simple";
    case TopologyKind::kGrid: return "grid";
    case TopologyKind::kHexagon: return "hexagon";
  }
  return "simple";
}

TopologyKind parse_topology_kind(std::string_view text) {
  if (text == "simple") return TopologyKind::kSimple;
  if (text == "grid") return TopologyKind::kGrid;
  if (text == "hexagon") return TopologyKind::kHexagon;
  throw ScenarioError("unknown topology '" + std::string(text) + "'");
}

Scenario generate(const GenerateOptions& options) {
  Scenario s;
  s.seed = options.seed;
  s.tau = options.tau;
  s.weight = options.weight;
  s.name = std::string(to_string(options.kind));
  switch (options.kind) {
    case TopologyKind::kSimple:
      s.topology = gen_simple(options.topology);
      break;
    case TopologyKind::kGrid: {
      GridOptions grid = options.grid;
      if (options.fiber_node) grid.fiber_node = options.fiber_node;
      s.topology = gen_grid(grid, derive_seed(options.seed, 0), options.topology);
      break;
    }
    case TopologyKind::kHexagon:
      s.topology = gen_hexagon(options.hex_spacing, options.topology,
                               options.fiber_node);
      break;
  }
  const int nodes = s.topology.num_nodes();
  if (options.kind == TopologyKind::kSimple && !options.users) {
    s.x_init = simple_initial_links();
    s.x_end = simple_final_links();
    s.demand = simple_demand();
  } else {
    const int users = options.users.value_or(
        options.kind == TopologyKind::kGrid      ? 100
        : options.kind == TopologyKind::kHexagon ? 105
                                                 : 80);
    const std::vector<double> first = gen_demands(users, nodes, derive_seed(options.seed, 1));
    s.demand = gen_demands(users, nodes, derive_seed(options.seed, 2));
    if (options.kind == TopologyKind::kSimple) {
      s.x_init = simple_initial_links();
    } else {
      s.x_init = canonical(static_snapshot(s.topology, first, options.snapshot_solver));
    }
    s.x_end = canonical(static_snapshot(s.topology, s.demand, options.snapshot_solver));
  }
  s.a0 = init_orientations(s.topology, s.x_init, s.topology.theta,
                           derive_seed(options.seed, 3));
  const int k_min = min_horizon(s.a0, s.x_end, s.topology.v, s.topology.theta);
  if (options.slots == 0) {
    s.slots = k_min;
  } else if (options.slots < k_min) {
    throw ScenarioError("horizon too short: " + std::to_string(options.slots) +
                        " slots given, at least " + std::to_string(k_min) +
                        " needed");
  } else {
    s.slots = options.slots;
  }
  s.loss_threshold.assign(s.slots, 1.0);
  s.validate();
  return s;
}

}  // namespace meshreconf::scenario
