#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "meshreconf/milp/model.hpp"
#include "meshreconf/planner/planner.hpp"
#include "meshreconf/scenario/scenario.hpp"
#include "meshreconf/solver/solver.hpp"

namespace meshreconf::io {

// Malformed input: bad JSON, wrong schema version, unknown or missing fields,
// or values that fail the scenario/plan invariants.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kScenarioSchemaVersion = 1;
inline constexpr int kPlanSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

// Connectivity, alignment and capacity are not stored; they are recomputed
// from positions, range, theta and phy parameters on load.
std::string scenario_to_json(const scenario::Scenario& s);
scenario::Scenario scenario_from_json(const std::string& text);

std::string plan_to_json(const planner::TransitionPlan& plan);
planner::TransitionPlan plan_from_json(const std::string& text);

// Per-slot rows: k,loss_Mbps,loss_fraction,active_links
void write_metrics_csv(const planner::PlanMetrics& metrics, std::ostream& out);
std::string metrics_to_json(const planner::PlanMetrics& metrics);

struct SolveReport {
  solver::Solution solution;
  std::size_t variables = 0;
  std::size_t constraints = 0;
  std::size_t integer_variables = 0;
  double big_m = 0.0;
  std::size_t violations = 0;
};

std::string report_to_json(const SolveReport& report);

// Throws std::runtime_error, not FormatError, when the file cannot be read.
std::string read_file(const std::filesystem::path& path);
// Creates parent directories as needed.
void write_file(const std::filesystem::path& path, const std::string& text);

}  // namespace meshreconf::io
