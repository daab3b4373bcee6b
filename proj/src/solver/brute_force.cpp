#include <cmath>
#include <string>
#include <vector>

#include "meshreconf/solver/solver.hpp"
#include "solver/dual_simplex.hpp"
#include "solver/lp_problem.hpp"

namespace meshreconf::solver {
namespace {

using internal::Deadline;
using internal::DualSimplex;
using internal::LpStatus;

// Interval reasoning over the model rows. Kept deliberately simple and
// separate from the branch-and-bound propagator: it only shrinks intervals
// and reports rows that no point in the box can satisfy.
class Intervals {
 public:
  explicit Intervals(const milp::Model& model) : model_(model) {
    const auto& rows = model.constraints();
    rows_of_.resize(model.num_variables());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (const milp::Term& t : rows[i].terms) {
        rows_of_[t.var.index].push_back(static_cast<int>(i));
      }
    }
  }

  // Returns false when some row cannot be satisfied within the box.
  bool tighten(std::vector<double>& lo, std::vector<double>& hi) const {
    const auto& rows = model_.constraints();
    for (int sweep = 0; sweep < 8; ++sweep) {
      bool changed = false;
      for (const milp::LinearConstraint& row : rows) {
        double min_sum = 0.0, max_sum = 0.0;
        for (const milp::Term& t : row.terms) {
          const double a = t.coef;
          const double l = lo[t.var.index], h = hi[t.var.index];
          min_sum += a > 0 ? a * l : a * h;
          max_sum += a > 0 ? a * h : a * l;
        }
        const bool has_upper = row.sense != milp::Sense::kGreaterEqual;
        const bool has_lower = row.sense != milp::Sense::kLessEqual;
        const double slack = 1e-7 * (1.0 + std::abs(row.rhs));
        if (has_upper && min_sum > row.rhs + slack) return false;
        if (has_lower && max_sum < row.rhs - slack) return false;
        for (const milp::Term& t : row.terms) {
          const int j = t.var.index;
          if (!model_.variables()[j].is_integral()) continue;
          const double a = t.coef;
          const double own_min = a > 0 ? a * lo[j] : a * hi[j];
          const double own_max = a > 0 ? a * hi[j] : a * lo[j];
          double new_lo = lo[j], new_hi = hi[j];
          if (has_upper && std::isfinite(min_sum)) {
            const double limit = (row.rhs - (min_sum - own_min)) / a;
            if (a > 0) new_hi = std::min(new_hi, std::floor(limit + 1e-6));
            else new_lo = std::max(new_lo, std::ceil(limit - 1e-6));
          }
          if (has_lower && std::isfinite(max_sum)) {
            const double limit = (row.rhs - (max_sum - own_max)) / a;
            if (a > 0) new_lo = std::max(new_lo, std::ceil(limit - 1e-6));
            else new_hi = std::min(new_hi, std::floor(limit + 1e-6));
          }
          if (new_lo > new_hi) return false;
          if (new_lo != lo[j] || new_hi != hi[j]) {
            lo[j] = new_lo;
            hi[j] = new_hi;
            changed = true;
            break;  // sums are stale; revisit the row next sweep
          }
        }
      }
      if (!changed) break;
    }
    return true;
  }

 private:
  const milp::Model& model_;
  std::vector<std::vector<int>> rows_of_;
};

class Enumerator {
 public:
  Enumerator(const milp::Model& model, const BruteForceConfig& config)
      : model_(model),
        config_(config),
        deadline_(config.time_limit_s),
        lp_(internal::lp_from_model(model)),
        simplex_(lp_),
        intervals_(model) {
    for (std::size_t j = 0; j < model.num_variables(); ++j) {
      if (model.variables()[j].is_integral()) integers_.push_back(static_cast<int>(j));
    }
  }

  Solution run() {
    std::vector<double> lo(model_.num_variables()), hi(model_.num_variables());
    for (std::size_t j = 0; j < lo.size(); ++j) {
      const milp::Variable& v = model_.variables()[j];
      lo[j] = v.is_integral() ? std::ceil(v.lower - 1e-9) : v.lower;
      hi[j] = v.is_integral() ? std::floor(v.upper + 1e-9) : v.upper;
    }
    descend(0, lo, hi);
    Solution out;
    out.stats.nodes = leaves_;
    out.stats.lp_iterations = simplex_.iterations();
    out.stats.wall_time_s = deadline_.elapsed();
    if (unbounded_) {
      out.status = Status::kUnbounded;
      out.objective = -milp::kInfinity;
    } else if (timed_out_) {
      out.status = Status::kLimitReached;
    } else if (best_.empty()) {
      out.status = lp_trouble_ ? Status::kNumericalError : Status::kInfeasible;
    } else {
      out.status = lp_trouble_ ? Status::kFeasible : Status::kOptimal;
    }
    if (!best_.empty()) {
      out.values = best_;
      out.objective = best_obj_;
      if (out.status == Status::kOptimal) out.bound = best_obj_;
    }
    return out;
  }

 private:
  void descend(std::size_t depth, std::vector<double> lo, std::vector<double> hi) {
    if (timed_out_ || unbounded_) return;
    if (deadline_.expired()) {
      timed_out_ = true;
      return;
    }
    if (!intervals_.tighten(lo, hi)) return;
    while (depth < integers_.size() && lo[integers_[depth]] == hi[integers_[depth]]) {
      ++depth;
    }
    if (depth == integers_.size()) {
      leaf(lo, hi);
      return;
    }
    const int j = integers_[depth];
    if (!std::isfinite(lo[j]) || !std::isfinite(hi[j])) {
      throw SolverError("brute force needs finite bounds on integer variable " +
                        model_.variables()[j].name);
    }
    for (double v = lo[j]; v <= hi[j]; v += 1.0) {
      std::vector<double> child_lo = lo, child_hi = hi;
      child_lo[j] = child_hi[j] = v;
      descend(depth + 1, std::move(child_lo), std::move(child_hi));
    }
  }

  void leaf(const std::vector<double>& lo, const std::vector<double>& hi) {
    ++leaves_;
    for (int j = 0; j < lp_.num_cols; ++j) {
      if (lp_.integral[j]) {
        simplex_.set_col_bounds(j, lo[j], hi[j]);
      } else {
        simplex_.set_col_bounds(j, lp_.col_lower[j], lp_.col_upper[j]);
      }
    }
    const LpStatus status = simplex_.solve(deadline_);
    if (status == LpStatus::kInfeasible) return;
    if (status == LpStatus::kUnbounded) {
      unbounded_ = true;
      return;
    }
    if (status == LpStatus::kTimeLimit) {
      timed_out_ = true;
      return;
    }
    if (status != LpStatus::kOptimal) {
      lp_trouble_ = true;
      return;
    }
    std::vector<double> values = simplex_.column_values();
    for (int j : integers_) values[j] = lo[j];
    if (milp::check_assignment(model_, values).worst() > config_.feasibility_tol) {
      lp_trouble_ = true;
      return;
    }
    const double obj = model_.evaluate_objective(values);
    if (obj < best_obj_) {
      best_obj_ = obj;
      best_ = std::move(values);
    }
  }

  const milp::Model& model_;
  const BruteForceConfig& config_;
  Deadline deadline_;
  internal::LpProblem lp_;
  DualSimplex simplex_;
  Intervals intervals_;
  std::vector<int> integers_;
  std::vector<double> best_;
  double best_obj_ = milp::kInfinity;
  std::int64_t leaves_ = 0;
  bool timed_out_ = false;
  bool unbounded_ = false;
  bool lp_trouble_ = false;
};

}  // namespace

std::size_t count_free_integers(const milp::Model& model) {
  std::size_t count = 0;
  for (const milp::Variable& v : model.variables()) {
    if (!v.is_integral()) continue;
    if (std::ceil(v.lower - 1e-9) < std::floor(v.upper + 1e-9)) ++count;
  }
  return count;
}

Solution brute_force(const milp::Model& model, const BruteForceConfig& config) {
  const std::size_t free = count_free_integers(model);
  if (free > config.max_free_integers) {
    throw SolverError("brute force limited to " +
                      std::to_string(config.max_free_integers) +
                      " free integer variables, model has " + std::to_string(free));
  }
  Enumerator enumerator(model, config);
  return enumerator.run();
}

}  // namespace meshreconf::solver
