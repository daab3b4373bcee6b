#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "meshreconf/geometry/geometry.hpp"
#include "meshreconf/solver/solver.hpp"

namespace meshreconf::scenario {

class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A static snapshot solve ended without a configuration.
class SnapshotError : public ScenarioError {
 public:
  SnapshotError(solver::Status status, const std::string& what)
      : ScenarioError(what), status_(status) {}
  solver::Status status() const { return status_; }

 private:
  solver::Status status_;
};

// Node and interface indices are 0-based; slots run 1..K.
struct Topology {
  std::vector<geometry::NodePosition> positions;
  std::vector<int> fiber_nodes;
  int interfaces = 1;
  double max_range = 0.0;
  double theta = 10.0;  // rotation quantum used to snap V
  geometry::PhyParams phy;
  geometry::ConnectivityMatrix delta;
  geometry::AlignmentMatrix v;
  geometry::CapacityMatrix r;

  int num_nodes() const { return static_cast<int>(positions.size()); }
  bool is_fiber(int d) const;
  void validate() const;
};

// Derives delta, V and R from positions, range, theta and phy parameters.
Topology make_topology(std::vector<geometry::NodePosition> positions,
                       std::vector<int> fiber_nodes, int interfaces,
                       double max_range, double theta,
                       const geometry::PhyParams& phy = {});

// Directed interface-level link (d, n) -> (d2, n2).
struct Link {
  int d = 0;
  int n = 0;
  int d2 = 0;
  int n2 = 0;

  auto operator<=>(const Link&) const = default;
};

using LinkConfig = std::vector<Link>;

// Sorted copy; the canonical form used for comparisons.
LinkConfig canonical(LinkConfig links);

// Throws ScenarioError on out-of-range indices, delta violations or an
// interface used by more than one link.
void validate_links(const LinkConfig& links, const Topology& topology,
                    std::string_view what);

enum class WeightKind { kConstant, kLinear, kExponential };

std::string_view to_string(WeightKind kind);
WeightKind parse_weight_kind(std::string_view text);

// m_k for k >= 1.
double weight(WeightKind kind, int k);

using Orientations = std::vector<std::vector<double>>;  // [d][n], degrees

struct Scenario {
  std::string name;
  std::uint64_t seed = 0;
  Topology topology;
  std::vector<double> demand;  // Mbps per node
  LinkConfig x_init;
  LinkConfig x_end;
  Orientations a0;
  int slots = 1;
  double tau = 0.2;  // seconds per slot
  WeightKind weight = WeightKind::kConstant;
  std::vector<double> loss_threshold;  // v^k, size K, entries in [0, 1]

  double theta() const { return topology.theta; }
  double total_demand() const;
  void validate() const;
};

// Topology generators. `theta` snaps the alignment matrix.
struct TopologyOptions {
  int interfaces = 2;
  double theta = 10.0;
  geometry::PhyParams phy;
  // Overrides the generator's default range when positive.
  double max_range = 0.0;
};

Topology gen_simple(const TopologyOptions& options = {});

struct GridOptions {
  int rows = 4;
  int cols = 4;
  double spacing = 180.0;
  double sigma_fraction = 1.0 / 8.0;
  double range_factor = 1.5;
  // Default: the corner at the origin.
  std::optional<int> fiber_node;
};

Topology gen_grid(const GridOptions& grid, std::uint64_t seed,
                  const TopologyOptions& options = {});

Topology gen_hexagon(double spacing = 140.0,
                     const TopologyOptions& options = {},
                     std::optional<int> fiber_node = std::nullopt);

// Users get 50/75/100 Mbps with a 70/20/10 split and attach to uniformly
// random nodes.
std::vector<double> gen_demands(int num_users, int num_nodes, std::uint64_t seed);

// Fixed link sets and demand of the simple topology.
LinkConfig simple_initial_links();
LinkConfig simple_final_links();
std::vector<double> simple_demand();

// Single-slot loss-minimizing link configuration (no movement, boundary or
// alignment constraints). Links that carry no flow are dropped.
LinkConfig static_snapshot(const Topology& topology,
                           const std::vector<double>& demand,
                           const solver::SolveConfig& config = {});

// Interfaces used by `x_init` face their peers; all others get a uniformly
// random multiple of theta.
Orientations init_orientations(const Topology& topology, const LinkConfig& x_init,
                               double theta, std::uint64_t seed);

// Orientation each interface must hold in the final slot, if any.
std::vector<std::vector<std::optional<double>>> required_orientations(
    const Topology& topology, const LinkConfig& links);

// Number of theta steps along the shorter arc between two angles.
int rotation_steps(double from, double to, double theta);

// 1 + the largest number of theta steps any interface needs to reach its
// final orientation.
int min_horizon(const Orientations& a0, const LinkConfig& x_end,
                const geometry::AlignmentMatrix& v, double theta);

// Seconds for a full 360 degree turn at one theta step per slot of tau
// seconds.
double full_rotation_time(double theta, double tau);

// Sets v^k = value for k in [ceil(K/2), K] and 1 elsewhere.
Scenario apply_loss_thresholds(Scenario scenario, double value);
Scenario apply_loss_thresholds(Scenario scenario,
                               const std::vector<double>& profile);

// Independent stream of a base seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

enum class TopologyKind { kSimple, kGrid, kHexagon };

std::string_view to_string(TopologyKind kind);
TopologyKind parse_topology_kind(std::string_view text);

struct GenerateOptions {
  TopologyKind kind = TopologyKind::kSimple;
  TopologyOptions topology;
  GridOptions grid;
  double hex_spacing = 140.0;
  std::optional<int> fiber_node;  // grid and hexagon only
  // Users per demand draw; defaults to the topology's table value.
  std::optional<int> users;
  std::uint64_t seed = 1;
  // 0 selects the smallest feasible horizon.
  int slots = 21;
  double tau = 0.2;
  WeightKind weight = WeightKind::kConstant;
  solver::SolveConfig snapshot_solver;
};

// Full scenario: two independent demand draws give the initial and final
// snapshots, the final draw becomes the demand vector. The simple topology
// uses its fixed snapshots and demand instead.
Scenario generate(const GenerateOptions& options);

}  // namespace meshreconf::scenario
