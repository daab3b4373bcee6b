#include "solver/propagation.hpp"

#include <cmath>
#include <limits>

namespace meshreconf::solver::internal {
namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kIntTol = 1e-6;
constexpr double kInf = milp::kInfinity;

// Minimum change that counts as a tightening of a continuous bound.
bool meaningful(double old_bound, double new_bound, double lower,
                double upper) {
  const double delta = std::abs(new_bound - old_bound);
  if (!std::isfinite(old_bound)) return std::isfinite(new_bound);
  if (delta <= 1e-7 * std::max(1.0, std::abs(old_bound))) return false;
  if (std::isfinite(lower) && std::isfinite(upper)) {
    return delta > 1e-3 * (upper - lower);
  }
  return true;
}

}  // namespace

BoundPropagator::BoundPropagator(const LpProblem& lp)
    : lp_(lp), queued_(lp.num_rows, 0) {}

void BoundPropagator::enqueue_column(int col) {
  for (int k = lp_.col_start[col]; k < lp_.col_start[col + 1]; ++k) {
    const int row = lp_.col_index[k];
    if (!queued_[row]) {
      queued_[row] = 1;
      queue_.push_back(row);
    }
  }
}

bool BoundPropagator::propagate(std::vector<double>& lower,
                                std::vector<double>& upper,
                                std::span<const int> seed_cols) {
  queue_.clear();
  std::fill(queued_.begin(), queued_.end(), 0);
  for (int j = 0; j < lp_.num_cols; ++j) {
    if (lp_.integral[j]) {
      lower[j] = std::ceil(lower[j] - kIntTol);
      upper[j] = std::floor(upper[j] + kIntTol);
    }
    if (lower[j] > upper[j] + kFeasTol) return false;
  }
  if (seed_cols.empty()) {
    for (int i = 0; i < lp_.num_rows; ++i) {
      queued_[i] = 1;
      queue_.push_back(i);
    }
  } else {
    for (int col : seed_cols) enqueue_column(col);
  }
  // Bounded amount of work; propagation is a heuristic strengthening only.
  const std::size_t budget = 40 * static_cast<std::size_t>(lp_.num_rows) + 1000;
  std::size_t processed = 0;
  for (std::size_t head = 0; head < queue_.size(); ++head) {
    const int row = queue_[head];
    queued_[row] = 0;
    if (!process_row(row, lower, upper)) return false;
    if (++processed > budget) break;
    // Compact the queue occasionally.
    if (head > 4096 && head * 2 > queue_.size()) {
      queue_.erase(queue_.begin(), queue_.begin() + static_cast<long>(head) + 1);
      head = static_cast<std::size_t>(-1);
    }
  }
  return true;
}

bool BoundPropagator::process_row(int row, std::vector<double>& lower,
                                  std::vector<double>& upper) {
  const double rlo = lp_.row_lower[row];
  const double rhi = lp_.row_upper[row];
  double min_act = 0.0, max_act = 0.0;
  int min_inf = 0, max_inf = 0;
  const int begin = lp_.row_start[row];
  const int end = lp_.row_start[row + 1];
  for (int k = begin; k < end; ++k) {
    const int j = lp_.row_index[k];
    const double a = lp_.row_value[k];
    const double lo = a > 0 ? lower[j] : upper[j];
    const double hi = a > 0 ? upper[j] : lower[j];
    if (std::isfinite(lo)) min_act += a * lo; else ++min_inf;
    if (std::isfinite(hi)) max_act += a * hi; else ++max_inf;
  }
  const double scale = 1.0 + std::abs(rlo == -kInf ? 0.0 : rlo) +
                       std::abs(rhi == kInf ? 0.0 : rhi);
  if (min_inf == 0 && min_act > rhi + 1e-9 * scale + 1e-9) return false;
  if (max_inf == 0 && max_act < rlo - 1e-9 * scale - 1e-9) return false;

  for (int k = begin; k < end; ++k) {
    const int j = lp_.row_index[k];
    const double a = lp_.row_value[k];
    const double lo_c = a > 0 ? lower[j] : upper[j];
    const double hi_c = a > 0 ? upper[j] : lower[j];
    // Residual activities without column j.
    double res_min = -kInf, res_max = kInf;
    if (min_inf == 0) res_min = min_act - a * lo_c;
    else if (min_inf == 1 && !std::isfinite(lo_c)) res_min = min_act;
    if (max_inf == 0) res_max = max_act - a * hi_c;
    else if (max_inf == 1 && !std::isfinite(hi_c)) res_max = max_act;

    double new_lo = -kInf, new_hi = kInf;
    if (std::isfinite(rhi) && std::isfinite(res_min)) {
      const double bound = (rhi - res_min) / a;
      if (a > 0) new_hi = bound; else new_lo = bound;
    }
    if (std::isfinite(rlo) && std::isfinite(res_max)) {
      const double bound = (rlo - res_max) / a;
      if (a > 0) new_lo = std::max(new_lo, bound);
      else new_hi = std::min(new_hi, bound);
    }
    bool changed = false;
    if (lp_.integral[j]) {
      if (std::isfinite(new_hi)) new_hi = std::floor(new_hi + kIntTol);
      if (std::isfinite(new_lo)) new_lo = std::ceil(new_lo - kIntTol);
      if (new_hi < upper[j]) {
        upper[j] = new_hi;
        changed = true;
      }
      if (new_lo > lower[j]) {
        lower[j] = new_lo;
        changed = true;
      }
    } else {
      if (new_hi < upper[j] && meaningful(upper[j], new_hi, lower[j], upper[j])) {
        upper[j] = new_hi;
        changed = true;
      }
      if (new_lo > lower[j] && meaningful(lower[j], new_lo, lower[j], upper[j])) {
        lower[j] = new_lo;
        changed = true;
      }
      if (lower[j] > upper[j] && lower[j] <= upper[j] + 1e-7 * (1.0 + std::abs(upper[j]))) {
        const double mid = 0.5 * (lower[j] + upper[j]);
        lower[j] = upper[j] = mid;
      }
    }
    if (lower[j] > upper[j] + kFeasTol * (1.0 + std::abs(upper[j]))) return false;
    if (changed) {
      enqueue_column(j);
      // Refresh the activities of this row for the remaining columns.
      return process_row(row, lower, upper);
    }
  }
  return true;
}

std::vector<double> ReducedProblem::expand(
    std::span<const double> reduced_values) const {
  std::vector<double> out = fixed_value;
  for (std::size_t c = 0; c < original_col.size(); ++c) {
    out[original_col[c]] = reduced_values[c];
  }
  return out;
}

ReducedProblem presolve(const LpProblem& lp) {
  ReducedProblem out;
  std::vector<double> lower = lp.col_lower;
  std::vector<double> upper = lp.col_upper;
  BoundPropagator propagator(lp);
  if (!propagator.propagate(lower, upper)) {
    out.infeasible = true;
    return out;
  }

  const double nan = std::numeric_limits<double>::quiet_NaN();
  out.fixed_value.assign(lp.num_cols, nan);
  std::vector<int> new_index(lp.num_cols, -1);
  for (int j = 0; j < lp.num_cols; ++j) {
    const bool fixed = upper[j] - lower[j] <= 1e-9 * (1.0 + std::abs(lower[j]));
    if (fixed) {
      const double v = lp.integral[j] ? std::round(lower[j]) : lower[j];
      out.fixed_value[j] = v;
      out.objective_offset += lp.cost[j] * v;
    } else {
      new_index[j] = static_cast<int>(out.original_col.size());
      out.original_col.push_back(j);
    }
  }

  // Row bounds after substituting fixed columns; drop rows that cannot bind.
  std::vector<int> kept_rows;
  std::vector<double> row_lo, row_hi;
  for (int i = 0; i < lp.num_rows; ++i) {
    double shift = 0.0;
    double min_act = 0.0, max_act = 0.0;
    bool min_finite = true, max_finite = true;
    int free_terms = 0;
    for (int k = lp.row_start[i]; k < lp.row_start[i + 1]; ++k) {
      const int j = lp.row_index[k];
      const double a = lp.row_value[k];
      if (new_index[j] < 0) {
        shift += a * out.fixed_value[j];
        continue;
      }
      ++free_terms;
      const double lo = a > 0 ? lower[j] : upper[j];
      const double hi = a > 0 ? upper[j] : lower[j];
      if (std::isfinite(lo)) min_act += a * lo; else min_finite = false;
      if (std::isfinite(hi)) max_act += a * hi; else max_finite = false;
    }
    const double lo = lp.row_lower[i] - shift;
    const double hi = lp.row_upper[i] - shift;
    const double tol = 1e-9 * (1.0 + std::abs(std::isfinite(lo) ? lo : 0.0) +
                               std::abs(std::isfinite(hi) ? hi : 0.0));
    if (free_terms == 0) {
      if (0.0 < lo - tol || 0.0 > hi + tol) {
        out.infeasible = true;
        return out;
      }
      continue;
    }
    const bool lower_slack = !std::isfinite(lo) || (min_finite && min_act >= lo);
    const bool upper_slack = !std::isfinite(hi) || (max_finite && max_act <= hi);
    if (lower_slack && upper_slack) continue;
    kept_rows.push_back(i);
    row_lo.push_back(lo);
    row_hi.push_back(hi);
  }

  LpProblem& r = out.lp;
  r.num_cols = static_cast<int>(out.original_col.size());
  r.num_rows = static_cast<int>(kept_rows.size());
  std::vector<int> row_new(lp.num_rows, -1);
  for (int i = 0; i < r.num_rows; ++i) row_new[kept_rows[i]] = i;
  r.col_start.assign(r.num_cols + 1, 0);
  for (int c = 0; c < r.num_cols; ++c) {
    const int j = out.original_col[c];
    r.cost.push_back(lp.cost[j]);
    r.col_lower.push_back(lower[j]);
    r.col_upper.push_back(upper[j]);
    r.integral.push_back(lp.integral[j]);
    for (int k = lp.col_start[j]; k < lp.col_start[j + 1]; ++k) {
      const int row = row_new[lp.col_index[k]];
      if (row < 0) continue;
      r.col_index.push_back(row);
      r.col_value.push_back(lp.col_value[k]);
    }
    r.col_start[c + 1] = static_cast<int>(r.col_index.size());
  }
  r.row_lower = std::move(row_lo);
  r.row_upper = std::move(row_hi);
  r.build_row_view();
  return out;
}

}  // namespace meshreconf::solver::internal
