#pragma once

#include <chrono>
#include <cstdint>
#include <vector>

#include "meshreconf/milp/model.hpp"

namespace meshreconf::solver::internal {

// Column- and row-compressed view of a linear program
//   min c'x  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.
struct LpProblem {
  int num_rows = 0;
  int num_cols = 0;
  std::vector<int> col_start, col_index;  // CSC: row indices per column
  std::vector<double> col_value;
  std::vector<int> row_start, row_index;  // CSR: column indices per row
  std::vector<double> row_value;
  std::vector<double> cost;
  std::vector<double> col_lower, col_upper;
  std::vector<double> row_lower, row_upper;
  std::vector<bool> integral;

  // Rebuilds the CSR arrays from the CSC arrays.
  void build_row_view();
};

LpProblem lp_from_model(const milp::Model& model);

class Deadline {
 public:
  explicit Deadline(double seconds);
  bool expired() const;
  double elapsed() const;

 private:
  std::chrono::steady_clock::time_point start_;
  double limit_;
};

}  // namespace meshreconf::solver::internal
