#include "solver/lp_problem.hpp"

#include <cmath>

namespace meshreconf::solver::internal {

void LpProblem::build_row_view() {
  row_start.assign(num_rows + 1, 0);
  for (int idx : col_index) ++row_start[idx + 1];
  for (int i = 0; i < num_rows; ++i) row_start[i + 1] += row_start[i];
  row_index.assign(col_index.size(), 0);
  row_value.assign(col_index.size(), 0.0);
  std::vector<int> fill(row_start.begin(), row_start.end() - 1);
  for (int j = 0; j < num_cols; ++j) {
    for (int k = col_start[j]; k < col_start[j + 1]; ++k) {
      const int slot = fill[col_index[k]]++;
      row_index[slot] = j;
      row_value[slot] = col_value[k];
    }
  }
}

LpProblem lp_from_model(const milp::Model& model) {
  LpProblem lp;
  lp.num_rows = static_cast<int>(model.num_constraints());
  lp.num_cols = static_cast<int>(model.num_variables());
  lp.cost = model.objective();
  lp.col_lower.reserve(lp.num_cols);
  lp.col_upper.reserve(lp.num_cols);
  lp.integral.reserve(lp.num_cols);
  for (const milp::Variable& v : model.variables()) {
    lp.col_lower.push_back(v.lower);
    lp.col_upper.push_back(v.upper);
    lp.integral.push_back(v.is_integral());
  }
  std::vector<int> count(lp.num_cols + 1, 0);
  for (const milp::LinearConstraint& row : model.constraints()) {
    for (const milp::Term& t : row.terms) ++count[t.var.index + 1];
  }
  lp.col_start.assign(lp.num_cols + 1, 0);
  for (int j = 0; j < lp.num_cols; ++j) {
    lp.col_start[j + 1] = lp.col_start[j] + count[j + 1];
  }
  lp.col_index.assign(lp.col_start.back(), 0);
  lp.col_value.assign(lp.col_start.back(), 0.0);
  std::vector<int> fill(lp.col_start.begin(), lp.col_start.end() - 1);
  lp.row_lower.reserve(lp.num_rows);
  lp.row_upper.reserve(lp.num_rows);
  for (int i = 0; i < lp.num_rows; ++i) {
    const milp::LinearConstraint& row = model.constraints()[i];
    for (const milp::Term& t : row.terms) {
      const int slot = fill[t.var.index]++;
      lp.col_index[slot] = i;
      lp.col_value[slot] = t.coef;
    }
    switch (row.sense) {
      case milp::Sense::kLessEqual:
        lp.row_lower.push_back(-milp::kInfinity);
        lp.row_upper.push_back(row.rhs);
        break;
      case milp::Sense::kGreaterEqual:
        lp.row_lower.push_back(row.rhs);
        lp.row_upper.push_back(milp::kInfinity);
        break;
      case milp::Sense::kEqual:
        lp.row_lower.push_back(row.rhs);
        lp.row_upper.push_back(row.rhs);
        break;
    }
  }
  lp.build_row_view();
  return lp;
}

Deadline::Deadline(double seconds)
    : start_(std::chrono::steady_clock::now()), limit_(seconds) {}

bool Deadline::expired() const {
  return std::isfinite(limit_) && elapsed() > limit_;
}

double Deadline::elapsed() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start_)
      .count();
}

}  // namespace meshreconf::solver::internal
