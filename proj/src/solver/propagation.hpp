#pragma once

#include <span>
#include <vector>

#include "solver/lp_problem.hpp"

namespace meshreconf::solver::internal {

// Activity-based bound tightening over the rows of an LpProblem. Integer
// columns are rounded inward. Used at the root and at every search node.
class BoundPropagator {
 public:
  explicit BoundPropagator(const LpProblem& lp);

  // Tightens `lower`/`upper` in place. `seed_cols` limits the initial work to
  // rows touching those columns; an empty span seeds every row. Returns false
  // when the bounds are proven infeasible.
  bool propagate(std::vector<double>& lower, std::vector<double>& upper,
                 std::span<const int> seed_cols = {});

 private:
  bool process_row(int row, std::vector<double>& lower,
                   std::vector<double>& upper);
  void enqueue_column(int col);

  const LpProblem& lp_;
  std::vector<int> queue_;
  std::vector<char> queued_;
};

// Root presolve: propagation, removal of fixed columns and of rows that can
// no longer bind. The reduced problem keeps the original column order.
struct ReducedProblem {
  LpProblem lp;
  std::vector<int> original_col;      // reduced column -> original column
  std::vector<double> fixed_value;    // per original column; NaN if kept
  double objective_offset = 0.0;
  bool infeasible = false;

  std::vector<double> expand(std::span<const double> reduced_values) const;
};

ReducedProblem presolve(const LpProblem& lp);

}  // namespace meshreconf::solver::internal
