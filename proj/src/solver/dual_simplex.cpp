#include "solver/dual_simplex.hpp"

#include <algorithm>
#include <cmath>

namespace meshreconf::solver::internal {
namespace {

constexpr double kPrimalTol = 1e-7;
constexpr double kDualTol = 1e-7;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-13;
constexpr int kRefactorInterval = 80;

double clamp_bound(double v) {
  if (v == -milp::kInfinity) return -DualSimplex::kArtificialBound;
  if (v == milp::kInfinity) return DualSimplex::kArtificialBound;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// BasisFactor

bool BasisFactor::factorize(const LpProblem& lp, const std::vector<int>& basis) {
  m_ = lp.num_rows;
  etas_.clear();
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(basis.size() * 3);
  for (int p = 0; p < m_; ++p) {
    const int var = basis[p];
    if (var >= lp.num_cols) {
      triplets.emplace_back(var - lp.num_cols, p, -1.0);
    } else {
      for (int k = lp.col_start[var]; k < lp.col_start[var + 1]; ++k) {
        triplets.emplace_back(lp.col_index[k], p, lp.col_value[k]);
      }
    }
  }
  Eigen::SparseMatrix<double> b(m_, m_);
  b.setFromTriplets(triplets.begin(), triplets.end());
  b.makeCompressed();
  lu_.isSymmetric(false);
  lu_.compute(b);
  work_.resize(m_);
  return lu_.info() == Eigen::Success;
}

void BasisFactor::ftran(std::vector<double>& v) const {
  for (int i = 0; i < m_; ++i) work_[i] = v[i];
  Eigen::VectorXd solved = lu_.solve(work_);
  for (int i = 0; i < m_; ++i) v[i] = solved[i];
  for (const Eta& e : etas_) {
    const double t = v[e.position] / e.pivot;
    v[e.position] = t;
    if (t == 0.0) continue;
    for (std::size_t k = 0; k < e.index.size(); ++k) {
      v[e.index[k]] -= e.value[k] * t;
    }
  }
}

void BasisFactor::btran(std::vector<double>& v) const {
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double acc = v[it->position];
    for (std::size_t k = 0; k < it->index.size(); ++k) {
      acc -= v[it->index[k]] * it->value[k];
    }
    v[it->position] = acc / it->pivot;
  }
  for (int i = 0; i < m_; ++i) work_[i] = v[i];
  Eigen::VectorXd solved = lu_.transpose().solve(work_);
  for (int i = 0; i < m_; ++i) v[i] = solved[i];
}

void BasisFactor::push_eta(int position, const std::vector<double>& column) {
  Eta e;
  e.position = position;
  e.pivot = column[position];
  for (int i = 0; i < m_; ++i) {
    if (i == position) continue;
    if (std::abs(column[i]) > kDropTol) {
      e.index.push_back(i);
      e.value.push_back(column[i]);
    }
  }
  etas_.push_back(std::move(e));
}

// ---------------------------------------------------------------------------
// DualSimplex

DualSimplex::DualSimplex(const LpProblem& lp)
    : lp_(lp), n_(lp.num_cols), m_(lp.num_rows) {
  cost_.assign(total(), 0.0);
  std::copy(lp.cost.begin(), lp.cost.end(), cost_.begin());
  true_lower_.resize(total());
  true_upper_.resize(total());
  for (int j = 0; j < n_; ++j) {
    true_lower_[j] = lp.col_lower[j];
    true_upper_[j] = lp.col_upper[j];
  }
  for (int i = 0; i < m_; ++i) {
    true_lower_[n_ + i] = lp.row_lower[i];
    true_upper_[n_ + i] = lp.row_upper[i];
  }
  lower_.resize(total());
  upper_.resize(total());
  for (int j = 0; j < total(); ++j) {
    lower_[j] = clamp_bound(true_lower_[j]);
    upper_[j] = clamp_bound(true_upper_[j]);
  }
  x_.assign(total(), 0.0);
  d_.assign(total(), 0.0);
  state_.assign(total(), State::kAtLower);
  rho_.assign(m_, 0.0);
  alpha_col_.assign(m_, 0.0);
  tau_.assign(m_, 0.0);
  work_.assign(m_, 0.0);
  alpha_row_.assign(total(), 0.0);
  reset_to_slack_basis();
}

void DualSimplex::reset_to_slack_basis() {
  basis_.resize(m_);
  position_.assign(total(), -1);
  for (int i = 0; i < m_; ++i) {
    basis_[i] = n_ + i;
    position_[n_ + i] = i;
    state_[n_ + i] = State::kBasic;
  }
  for (int j = 0; j < n_; ++j) {
    state_[j] = cost_[j] >= 0.0 ? State::kAtLower : State::kAtUpper;
    x_[j] = state_[j] == State::kAtLower ? lower_[j] : upper_[j];
  }
  weight_.assign(m_, 1.0);
  factor_valid_ = false;
}

void DualSimplex::set_col_bounds(int col, double lower, double upper) {
  true_lower_[col] = lower;
  true_upper_[col] = upper;
  lower_[col] = clamp_bound(lower);
  upper_[col] = clamp_bound(upper);
  if (state_[col] == State::kAtLower) x_[col] = lower_[col];
  if (state_[col] == State::kAtUpper) x_[col] = upper_[col];
}

bool DualSimplex::refactor() {
  if (factor_.factorize(lp_, basis_)) {
    factor_valid_ = true;
    return true;
  }
  // Singular basis: fall back to the all-logical basis, which is always
  // nonsingular. Dual feasibility is restored by bound flips.
  reset_to_slack_basis();
  factor_valid_ = factor_.factorize(lp_, basis_);
  return factor_valid_;
}

void DualSimplex::column_of(int var, std::vector<double>& dense) const {
  std::fill(dense.begin(), dense.end(), 0.0);
  if (var >= n_) {
    dense[var - n_] = -1.0;
    return;
  }
  for (int k = lp_.col_start[var]; k < lp_.col_start[var + 1]; ++k) {
    dense[lp_.col_index[k]] = lp_.col_value[k];
  }
}

void DualSimplex::compute_primal() {
  std::fill(work_.begin(), work_.end(), 0.0);
  for (int j = 0; j < n_; ++j) {
    if (state_[j] == State::kBasic) continue;
    const double xj = x_[j];
    if (xj == 0.0) continue;
    for (int k = lp_.col_start[j]; k < lp_.col_start[j + 1]; ++k) {
      work_[lp_.col_index[k]] -= lp_.col_value[k] * xj;
    }
  }
  for (int i = 0; i < m_; ++i) {
    if (state_[n_ + i] != State::kBasic) work_[i] += x_[n_ + i];
  }
  factor_.ftran(work_);
  for (int p = 0; p < m_; ++p) x_[basis_[p]] = work_[p];
}

void DualSimplex::compute_duals() {
  for (int p = 0; p < m_; ++p) work_[p] = cost_[basis_[p]];
  factor_.btran(work_);  // work_ now holds the row duals y
  for (int j = 0; j < n_; ++j) {
    if (state_[j] == State::kBasic) {
      d_[j] = 0.0;
      continue;
    }
    double dj = cost_[j];
    for (int k = lp_.col_start[j]; k < lp_.col_start[j + 1]; ++k) {
      dj -= lp_.col_value[k] * work_[lp_.col_index[k]];
    }
    d_[j] = dj;
  }
  for (int i = 0; i < m_; ++i) {
    d_[n_ + i] = state_[n_ + i] == State::kBasic ? 0.0 : work_[i];
  }
}

int DualSimplex::flip_to_dual_feasible() {
  int flips = 0;
  for (int j = 0; j < total(); ++j) {
    if (state_[j] == State::kBasic) continue;
    if (upper_[j] <= lower_[j]) {
      state_[j] = State::kAtLower;
      x_[j] = lower_[j];
      continue;
    }
    if (state_[j] == State::kAtLower && d_[j] < -kDualTol) {
      state_[j] = State::kAtUpper;
      x_[j] = upper_[j];
      ++flips;
    } else if (state_[j] == State::kAtUpper && d_[j] > kDualTol) {
      state_[j] = State::kAtLower;
      x_[j] = lower_[j];
      ++flips;
    } else {
      x_[j] = state_[j] == State::kAtLower ? lower_[j] : upper_[j];
    }
  }
  return flips;
}

int DualSimplex::choose_leaving() const {
  int best = -1;
  double best_score = 0.0;
  for (int p = 0; p < m_; ++p) {
    const int var = basis_[p];
    const double v = x_[var];
    double infeas = 0.0;
    if (v < lower_[var] - kPrimalTol) {
      infeas = lower_[var] - v;
    } else if (v > upper_[var] + kPrimalTol) {
      infeas = v - upper_[var];
    } else {
      continue;
    }
    const double score = infeas * infeas / weight_[p];
    if (score > best_score) {
      best_score = score;
      best = p;
    }
  }
  return best;
}

bool DualSimplex::artificially_unbounded() const {
  for (int j = 0; j < total(); ++j) {
    if (state_[j] == State::kAtLower && true_lower_[j] == -milp::kInfinity &&
        d_[j] > kDualTol) {
      return true;
    }
    if (state_[j] == State::kAtUpper && true_upper_[j] == milp::kInfinity &&
        d_[j] < -kDualTol) {
      return true;
    }
  }
  return false;
}

LpStatus DualSimplex::solve_without_rows() {
  for (int j = 0; j < n_; ++j) {
    if (true_lower_[j] > true_upper_[j]) return LpStatus::kInfeasible;
    if (cost_[j] > 0.0) {
      if (true_lower_[j] == -milp::kInfinity) return LpStatus::kUnbounded;
      x_[j] = true_lower_[j];
    } else if (cost_[j] < 0.0) {
      if (true_upper_[j] == milp::kInfinity) return LpStatus::kUnbounded;
      x_[j] = true_upper_[j];
    } else {
      x_[j] = std::isfinite(true_lower_[j])   ? true_lower_[j]
              : std::isfinite(true_upper_[j]) ? true_upper_[j]
                                              : 0.0;
    }
  }
  return LpStatus::kOptimal;
}

DualSimplex::WarmStart DualSimplex::save() const {
  return {state_, basis_, weight_, lower_, upper_, true_lower_, true_upper_};
}

void DualSimplex::restore(const WarmStart& warm) {
  state_ = warm.state;
  basis_ = warm.basis;
  weight_ = warm.weight;
  lower_ = warm.lower;
  upper_ = warm.upper;
  true_lower_ = warm.true_lower;
  true_upper_ = warm.true_upper;
  std::fill(position_.begin(), position_.end(), -1);
  for (int r = 0; r < m_; ++r) position_[basis_[r]] = r;
  factor_valid_ = false;
}

LpStatus DualSimplex::solve(const Deadline& deadline,
                            std::int64_t max_iterations) {
  for (int j = 0; j < total(); ++j) {
    if (true_lower_[j] > true_upper_[j] + kPrimalTol) {
      return LpStatus::kInfeasible;
    }
  }
  if (m_ == 0) return solve_without_rows();
  if (!factor_valid_ && !refactor()) return LpStatus::kNumericalError;

  compute_duals();
  flip_to_dual_feasible();
  compute_primal();

  struct Candidate {
    double ratio;
    int var;
    double abs_alpha;
  };
  std::vector<Candidate> candidates;
  std::vector<int> flipped;
  int numerical_retries = 0;
  std::int64_t iterations = 0;
  bool confirmed = false;

  auto fresh_start = [&]() -> bool {
    if (!refactor()) return false;
    compute_duals();
    flip_to_dual_feasible();
    compute_primal();
    return true;
  };

  while (true) {
    if ((iterations & 31) == 0 && deadline.expired()) {
      return LpStatus::kTimeLimit;
    }
    if (iterations >= max_iterations) return LpStatus::kIterationLimit;
    if (factor_.num_etas() >= kRefactorInterval) {
      if (!fresh_start()) return LpStatus::kNumericalError;
    }

    const int r = choose_leaving();
    if (r >= 0) confirmed = false;
    if (r < 0) {
      if (factor_.num_etas() > 0 && !confirmed) {
        // Confirm optimality with recomputed values; refactor only when the
        // eta file is long.
        confirmed = true;
        if (factor_.num_etas() >= kRefactorInterval / 4) {
          if (!fresh_start()) return LpStatus::kNumericalError;
        } else {
          compute_duals();
          flip_to_dual_feasible();
          compute_primal();
        }
        if (choose_leaving() >= 0) continue;
      }
      if (flip_to_dual_feasible() > 0) {
        compute_primal();
        continue;
      }
      if (artificially_unbounded()) return LpStatus::kUnbounded;
      return LpStatus::kOptimal;
    }

    const int leaving = basis_[r];
    const double xr = x_[leaving];
    const bool to_lower = xr < lower_[leaving];
    const double sign = to_lower ? -1.0 : 1.0;
    const double target = to_lower ? lower_[leaving] : upper_[leaving];
    const double infeasibility = std::abs(xr - target);

    // Row r of B^-1 [A | -I].
    std::fill(rho_.begin(), rho_.end(), 0.0);
    rho_[r] = 1.0;
    factor_.btran(rho_);
    std::fill(alpha_row_.begin(), alpha_row_.end(), 0.0);
    for (int i = 0; i < m_; ++i) {
      const double ri = rho_[i];
      if (std::abs(ri) <= kDropTol) continue;
      for (int k = lp_.row_start[i]; k < lp_.row_start[i + 1]; ++k) {
        alpha_row_[lp_.row_index[k]] += ri * lp_.row_value[k];
      }
      alpha_row_[n_ + i] = -ri;
    }

    candidates.clear();
    for (int j = 0; j < total(); ++j) {
      const State st = state_[j];
      if (st == State::kBasic || upper_[j] <= lower_[j]) continue;
      const double a = sign * alpha_row_[j];
      if (st == State::kAtLower && a > kPivotTol) {
        candidates.push_back({std::max(d_[j], 0.0) / a, j, a});
      } else if (st == State::kAtUpper && a < -kPivotTol) {
        candidates.push_back({std::min(d_[j], 0.0) / a, j, -a});
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.ratio != b.ratio) return a.ratio < b.ratio;
                return a.var < b.var;
              });

    // Bound flipping: pass breakpoints while the leaving row stays infeasible.
    double slope = infeasibility;
    std::size_t k = 0;
    while (k < candidates.size()) {
      const Candidate& c = candidates[k];
      const double next = slope - c.abs_alpha * (upper_[c.var] - lower_[c.var]);
      if (next <= kPrimalTol) break;
      slope = next;
      ++k;
    }
    if (k == candidates.size()) {
      if (factor_.num_etas() > 0 && numerical_retries < 3) {
        ++numerical_retries;
        if (!fresh_start()) return LpStatus::kNumericalError;
        continue;
      }
      return LpStatus::kInfeasible;
    }

    // Harris pass among the remaining breakpoints.
    double harris = milp::kInfinity;
    for (std::size_t l = k; l < candidates.size(); ++l) {
      const Candidate& c = candidates[l];
      harris = std::min(harris, (std::abs(d_[c.var]) + kDualTol) / c.abs_alpha);
    }
    std::size_t chosen = k;
    for (std::size_t l = k; l < candidates.size(); ++l) {
      const Candidate& c = candidates[l];
      if (c.ratio > harris) continue;
      if (c.abs_alpha > candidates[chosen].abs_alpha) chosen = l;
    }
    const int entering = candidates[chosen].var;
    const double step = candidates[chosen].ratio;

    // Entering column.
    column_of(entering, alpha_col_);
    factor_.ftran(alpha_col_);
    const double pivot = alpha_col_[r];
    const double row_pivot = alpha_row_[entering];
    if (std::abs(pivot) < kPivotTol ||
        std::abs(pivot - row_pivot) > 1e-7 * (1.0 + std::abs(pivot))) {
      if (numerical_retries++ > 10) return LpStatus::kNumericalError;
      if (!fresh_start()) return LpStatus::kNumericalError;
      continue;
    }

    // Dual update.
    for (int j = 0; j < total(); ++j) {
      if (state_[j] == State::kBasic) continue;
      if (alpha_row_[j] != 0.0) d_[j] -= step * sign * alpha_row_[j];
    }
    d_[entering] = 0.0;
    d_[leaving] = -sign * step;

    // Bound flips for passed breakpoints.
    flipped.clear();
    for (std::size_t l = 0; l < k; ++l) flipped.push_back(candidates[l].var);
    if (!flipped.empty()) {
      std::fill(work_.begin(), work_.end(), 0.0);
      for (int j : flipped) {
        double delta;
        if (state_[j] == State::kAtLower) {
          state_[j] = State::kAtUpper;
          delta = upper_[j] - lower_[j];
          x_[j] = upper_[j];
        } else {
          state_[j] = State::kAtLower;
          delta = lower_[j] - upper_[j];
          x_[j] = lower_[j];
        }
        if (j >= n_) {
          work_[j - n_] -= delta;
        } else {
          for (int q = lp_.col_start[j]; q < lp_.col_start[j + 1]; ++q) {
            work_[lp_.col_index[q]] += lp_.col_value[q] * delta;
          }
        }
      }
      factor_.ftran(work_);
      for (int p = 0; p < m_; ++p) x_[basis_[p]] -= work_[p];
    }

    // Primal step.
    const double theta = (x_[leaving] - target) / pivot;
    for (int p = 0; p < m_; ++p) {
      if (alpha_col_[p] != 0.0) x_[basis_[p]] -= theta * alpha_col_[p];
    }
    x_[entering] += theta;
    x_[leaving] = target;

    // Dual steepest-edge weights.
    double rho_norm = 0.0;
    for (int i = 0; i < m_; ++i) rho_norm += rho_[i] * rho_[i];
    tau_ = rho_;
    factor_.ftran(tau_);
    for (int p = 0; p < m_; ++p) {
      if (p == r || alpha_col_[p] == 0.0) continue;
      const double ratio = alpha_col_[p] / pivot;
      weight_[p] = std::max(
          weight_[p] + ratio * (ratio * rho_norm - 2.0 * tau_[p]), 1e-6);
    }
    weight_[r] = std::max(rho_norm / (pivot * pivot), 1e-6);

    // Basis change.
    state_[leaving] = to_lower ? State::kAtLower : State::kAtUpper;
    position_[leaving] = -1;
    state_[entering] = State::kBasic;
    position_[entering] = r;
    basis_[r] = entering;
    factor_.push_eta(r, alpha_col_);

    ++iterations;
    ++total_iterations_;
  }
}

double DualSimplex::objective() const {
  double total_cost = 0.0;
  for (int j = 0; j < n_; ++j) total_cost += cost_[j] * x_[j];
  return total_cost;
}

std::vector<double> DualSimplex::column_values() const {
  return std::vector<double>(x_.begin(), x_.begin() + n_);
}

}  // namespace meshreconf::solver::internal
