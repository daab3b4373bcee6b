#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshreconf/milp/model.hpp"
#include "meshreconf/scenario/scenario.hpp"
#include "meshreconf/solver/solver.hpp"

namespace meshreconf::planner {

class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// K is below the smallest horizon any interface needs to reach its final
// orientation.
class HorizonError : public PlannerError {
 public:
  using PlannerError::PlannerError;
};

struct BuildOptions {
  // Keep the per-link rate r next to z with the full linearization instead
  // of folding r into z.
  bool explicit_rate = false;
  // Emit loss-threshold rows for every slot, also where v^k = 1.
  bool all_threshold_rows = false;
  // Single-slot variant used for snapshots: no orientation, movement,
  // alignment or boundary constraints.
  bool static_slot = false;
  // Fix the final slot's movement flags to 0; they have no effect on any
  // orientation inside the horizon.
  bool fix_final_movement = true;
  // Zero p where the target bearing cannot be reached at that slot.
  bool reachability_bounds = true;
  // Extra rows for alignment targets reachable at a single orientation: p
  // then fixes a and beta, and such targets are mutually exclusive. They
  // remove no integer solution.
  bool alignment_tightening = true;
  // Replaces the computed big-M.
  std::optional<double> big_m;
  // plan() only: start the solver from the best plan found for K-1 slots
  // with its final slot repeated, recursively down to the smallest horizon.
  bool extend_shorter_horizon = true;
};

// Variable naming: node and interface indices are 0-based, slots 1-based.
//   x_d_n_d2_n2_k, z_..., r_..., p_d_n_d2_k, a_d_n_k, b_d_n_k (wrap count),
//   cw_d_n_k / ccw_d_n_k (movement), l_d_k (loss), in_d_k (ingress).
std::string x_name(int d, int n, int d2, int n2, int k);
std::string z_name(int d, int n, int d2, int n2, int k);
std::string r_name(int d, int n, int d2, int n2, int k);
std::string p_name(int d, int n, int d2, int k);
std::string a_name(int d, int n, int k);
std::string beta_name(int d, int n, int k);
std::string cw_name(int d, int n, int k);
std::string ccw_name(int d, int n, int k);
std::string loss_name(int d, int k);
std::string ingress_name(int d, int k);

// Per-interface orientation interval at slot k implied by the initial angle
// and the rotation speed.
struct AngleRange {
  double lower;
  double upper;
};
AngleRange orientation_range(const scenario::Scenario& s, int d, int n, int k);

// Smallest M valid for every alignment row of the scenario.
double big_m_value(const scenario::Scenario& s);

struct BuiltModel {
  milp::Model model;
  double big_m = 0.0;
};

// Throws HorizonError when K < min_horizon.
BuiltModel build_model(const scenario::Scenario& s, const BuildOptions& options = {});

struct LinkFlow {
  scenario::Link link;
  double flow = 0.0;  // Mbps
};

struct SlotState {
  std::vector<std::vector<double>> orientation;  // raw degrees [d][n]
  std::vector<std::vector<int>> cw;              // psi
  std::vector<std::vector<int>> ccw;             // omega
  std::vector<LinkFlow> links;                   // active links, sorted
  std::vector<double> loss;                      // per node, Mbps
  std::vector<double> ingress;                   // per node, Mbps
};

struct TransitionPlan {
  std::vector<SlotState> slots;
  double objective = 0.0;
  std::string status;
};

// Decodes the solver assignment by variable name.
TransitionPlan extract_plan(const scenario::Scenario& s, const milp::Model& model,
                            const solver::Solution& solution);

enum class ViolationKind {
  kShape,
  kConnectivity,
  kInterfaceConflict,
  kCapacity,
  kConservation,
  kLossBounds,
  kLossThreshold,
  kIngress,
  kMovement,
  kDynamics,
  kAlignment,
  kBoundary,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  int slot = 0;  // 0 when not tied to a slot
  std::string message;
};

// Checks the plan against the scenario alone; empty result means feasible.
std::vector<Violation> validate_plan(const scenario::Scenario& s,
                                     const TransitionPlan& plan,
                                     double tolerance = 1e-6);

struct SlotMetrics {
  int k = 0;
  double loss_mbps = 0.0;
  double loss_fraction = 0.0;
  int active_links = 0;
};

struct PlanMetrics {
  std::vector<SlotMetrics> slots;
  double total_loss_mb = 0.0;  // megabits, tau * sum of per-slot loss
  double total_loss_gb = 0.0;  // gigabytes
  double weighted_loss = 0.0;  // sum_k m_k sum_d l
  // Smallest k such that every slot from k on is lossless.
  std::optional<int> slots_to_lossless;
};

PlanMetrics compute_metrics(const scenario::Scenario& s, const TransitionPlan& plan,
                            double lossless_tol = 1e-6);

struct PlanResult {
  solver::Solution solution;
  std::optional<TransitionPlan> plan;
  std::vector<Violation> violations;
};

// Appends a copy of the final slot, without movement, to a plan.
TransitionPlan extend_plan(const TransitionPlan& plan);

// Builds, solves, decodes and validates. The reported wall time includes
// the shorter-horizon solves; node and iteration counts cover the final
// solve only.
PlanResult plan(const scenario::Scenario& s, const solver::SolveConfig& config = {},
                const BuildOptions& options = {});

}  // namespace meshreconf::planner
