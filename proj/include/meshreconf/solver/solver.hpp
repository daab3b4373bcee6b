#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "meshreconf/milp/model.hpp"

namespace meshreconf::solver {

enum class Status {
  kOptimal,
  kFeasible,
  kInfeasible,
  kUnbounded,
  kLimitReached,
  kNumericalError,
};

std::string_view to_string(Status status);

enum class BranchingRule { kMostFractional, kFirstIndex };

struct SolveConfig {
  double time_limit_s = std::numeric_limits<double>::infinity();
  double abs_gap = 1e-6;
  double rel_gap = 1e-9;
  double integrality_tol = 1e-6;
  BranchingRule branching = BranchingRule::kFirstIndex;
  // Forces first-index branching and serial, fixed-order node exploration.
  bool deterministic = true;
  std::int64_t node_limit = std::numeric_limits<std::int64_t>::max();
  // Candidate assignments must satisfy every row/bound within this tolerance.
  double feasibility_tol = 1e-6;
  bool verbose = false;
  // Optional full assignment, one value per model variable. It becomes the
  // first incumbent when it satisfies the model.
  std::vector<double> start;

  void validate() const;
};

struct SolveStats {
  std::int64_t nodes = 0;
  std::int64_t lp_iterations = 0;
  double wall_time_s = 0.0;
};

struct Solution {
  Status status = Status::kInfeasible;
  // One value per model variable; empty unless a feasible point is known.
  std::vector<double> values;
  double objective = std::numeric_limits<double>::infinity();
  double bound = -std::numeric_limits<double>::infinity();
  SolveStats stats;

  bool has_assignment() const { return !values.empty(); }
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// LP relaxation (integrality ignored) by bounded dual simplex.
Solution solve_lp(const milp::Model& model, double time_limit_s =
                                                std::numeric_limits<double>::infinity());

// LP-based branch and bound with bound propagation at every node.
Solution solve_milp(const milp::Model& model, const SolveConfig& config = {});

struct BruteForceConfig {
  // Maximum number of integer/binary variables left free after the model's
  // own bounds are applied. Fixed variables (lower == upper) do not count.
  std::size_t max_free_integers = 24;
  double time_limit_s = std::numeric_limits<double>::infinity();
  double feasibility_tol = 1e-6;
};

// Exhaustive enumeration oracle: walks every integral assignment of the
// integer variables (pruning only partial assignments that violate a row
// outright) and solves the continuous residual LP at each leaf.
// Throws SolverError when the model exceeds max_free_integers.
Solution brute_force(const milp::Model& model, const BruteForceConfig& config = {});

std::size_t count_free_integers(const milp::Model& model);

}  // namespace meshreconf::solver
