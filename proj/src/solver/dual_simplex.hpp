#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "solver/lp_problem.hpp"

namespace meshreconf::solver::internal {

enum class LpStatus {
  kOptimal,
  kInfeasible,
  kUnbounded,
  kTimeLimit,
  kIterationLimit,
  kNumericalError,
};

// Basis inverse as a sparse LU of the last refactored basis followed by a
// product-form eta file.
class BasisFactor {
 public:
  // `basis[p]` is the variable occupying position p; variables >= num_cols are
  // row logicals with column -e_i.
  bool factorize(const LpProblem& lp, const std::vector<int>& basis);
  void ftran(std::vector<double>& v) const;
  void btran(std::vector<double>& v) const;
  void push_eta(int position, const std::vector<double>& column);
  int num_etas() const { return static_cast<int>(etas_.size()); }

 private:
  struct Eta {
    int position;
    double pivot;
    std::vector<int> index;
    std::vector<double> value;
  };

  int m_ = 0;
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  mutable Eigen::VectorXd work_;
};

// Bounded dual simplex. Rows are modeled as A x - s = 0 with bounded
// logicals s. Infinite bounds are replaced by +-kArtificialBound so every
// variable is boxed; this makes any basis dual feasible after bound flips,
// which lets callers change column bounds and re-solve from the previous basis.
class DualSimplex {
 public:
  static constexpr double kArtificialBound = 1e8;

  explicit DualSimplex(const LpProblem& lp);

  void set_col_bounds(int col, double lower, double upper);
  double col_lower(int col) const { return true_lower_[col]; }
  double col_upper(int col) const { return true_upper_[col]; }

  LpStatus solve(const Deadline& deadline, std::int64_t max_iterations = 200000);

  double objective() const;
  std::vector<double> column_values() const;
  std::int64_t iterations() const { return total_iterations_; }

 private:
  enum class State : std::uint8_t { kBasic, kAtLower, kAtUpper };

 public:
  // Basis and bounds, to resume from an earlier point after exploratory solves.
  struct WarmStart {
    std::vector<State> state;
    std::vector<int> basis;
    std::vector<double> weight;
    std::vector<double> lower, upper, true_lower, true_upper;
  };
  WarmStart save() const;
  void restore(const WarmStart& warm);

 private:

  int total() const { return n_ + m_; }
  bool refactor();
  void reset_to_slack_basis();
  void compute_primal();
  void compute_duals();
  int flip_to_dual_feasible();
  int choose_leaving() const;
  void column_of(int var, std::vector<double>& dense) const;
  bool artificially_unbounded() const;
  LpStatus solve_without_rows();

  const LpProblem& lp_;
  int n_;
  int m_;
  std::vector<double> cost_;
  std::vector<double> lower_, upper_;            // boxed working bounds
  std::vector<double> true_lower_, true_upper_;  // as given
  std::vector<double> x_;
  std::vector<double> d_;
  std::vector<State> state_;
  std::vector<int> basis_;
  std::vector<int> position_;
  std::vector<double> weight_;
  BasisFactor factor_;
  bool factor_valid_ = false;
  std::int64_t total_iterations_ = 0;

  // Scratch buffers reused across iterations.
  std::vector<double> rho_, alpha_row_, alpha_col_, tau_, work_;
};

}  // namespace meshreconf::solver::internal
