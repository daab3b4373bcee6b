#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <set>
#include <vector>

#include "meshreconf/solver/solver.hpp"
#include "solver/dual_simplex.hpp"
#include "solver/lp_problem.hpp"
#include "solver/propagation.hpp"

namespace meshreconf::solver {

using internal::BoundPropagator;
using internal::Deadline;
using internal::DualSimplex;
using internal::LpProblem;
using internal::LpStatus;
using internal::ReducedProblem;

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "optimal";
    case Status::kFeasible: return "feasible";
    case Status::kInfeasible: return "infeasible";
    case Status::kUnbounded: return "unbounded";
    case Status::kLimitReached: return "limit-reached";
    case Status::kNumericalError: return "numerical-error";
  }
  return "unknown";
}

void SolveConfig::validate() const {
  if (!(time_limit_s > 0.0)) throw SolverError("time limit must be positive");
  if (!(abs_gap >= 0.0) || !(rel_gap >= 0.0)) {
    throw SolverError("gap tolerances must be non-negative");
  }
  if (!(integrality_tol > 0.0 && integrality_tol < 0.5)) {
    throw SolverError("integrality tolerance must lie in (0, 0.5)");
  }
  if (!(feasibility_tol > 0.0)) {
    throw SolverError("feasibility tolerance must be positive");
  }
  if (node_limit < 1) throw SolverError("node limit must be at least 1");
}

Solution solve_lp(const milp::Model& model, double time_limit_s) {
  Deadline deadline(time_limit_s);
  Solution out;
  const LpProblem lp = internal::lp_from_model(model);
  for (int j = 0; j < lp.num_cols; ++j) {
    if (lp.col_lower[j] > lp.col_upper[j]) {
      out.stats.wall_time_s = deadline.elapsed();
      return out;
    }
  }
  DualSimplex simplex(lp);
  const LpStatus status = simplex.solve(deadline);
  out.stats.lp_iterations = simplex.iterations();
  out.stats.wall_time_s = deadline.elapsed();
  switch (status) {
    case LpStatus::kOptimal:
      out.status = Status::kOptimal;
      out.values = simplex.column_values();
      out.objective = simplex.objective() + model.objective_offset();
      out.bound = out.objective;
      break;
    case LpStatus::kInfeasible:
      out.status = Status::kInfeasible;
      break;
    case LpStatus::kUnbounded:
      out.status = Status::kUnbounded;
      out.objective = -milp::kInfinity;
      break;
    case LpStatus::kTimeLimit:
    case LpStatus::kIterationLimit:
      out.status = Status::kLimitReached;
      break;
    case LpStatus::kNumericalError:
      out.status = Status::kNumericalError;
      break;
  }
  return out;
}

namespace {

constexpr double kDiveShare = 0.3;

struct BoundChange {
  int col;
  double lower;
  double upper;
};

struct Node {
  std::vector<BoundChange> changes;
  double bound;
  // Bound plus the pseudocost guess of the cost of integrality.
  double estimate;
  // bound and estimate on a fixed grid, so that near-equal values compare
  // as equal while the ordering stays transitive.
  std::int64_t bound_key = 0;
  std::int64_t estimate_key = 0;
  std::int64_t id;
  int depth = 0;
};

// Ties on the key go to the deeper node, then to the older one.
template <std::int64_t Node::*Key>
struct BetterNode {
  bool operator()(const Node* a, const Node* b) const {
    if (a->*Key != b->*Key) return a->*Key < b->*Key;
    if (a->depth != b->depth) return a->depth > b->depth;
    return a->id < b->id;
  }
};

struct Pseudocosts {
  std::vector<double> down_sum, up_sum;
  std::vector<int> down_count, up_count;
  double down_total = 0.0, up_total = 0.0;
  int down_total_count = 0, up_total_count = 0;

  explicit Pseudocosts(int n)
      : down_sum(n, 0.0), up_sum(n, 0.0), down_count(n, 0), up_count(n, 0) {}

  void record(int col, bool up, double gain_per_unit) {
    if (up) {
      up_sum[col] += gain_per_unit;
      ++up_count[col];
      up_total += gain_per_unit;
      ++up_total_count;
    } else {
      down_sum[col] += gain_per_unit;
      ++down_count[col];
      down_total += gain_per_unit;
      ++down_total_count;
    }
  }
  double down(int col) const {
    if (down_count[col] > 0) return down_sum[col] / down_count[col];
    return down_total_count > 0 ? down_total / down_total_count : 0.0;
  }
  double up(int col) const {
    if (up_count[col] > 0) return up_sum[col] / up_count[col];
    return up_total_count > 0 ? up_total / up_total_count : 0.0;
  }
};

class BranchAndBound {
 public:
  BranchAndBound(const milp::Model& model, const SolveConfig& config)
      : model_(model),
        config_(config),
        deadline_(config.time_limit_s),
        original_(internal::lp_from_model(model)) {}

  Solution run();

 private:
  enum class NodeResult { kPruned, kBranched, kIntegral, kAborted };

  NodeResult process(const Node& node, Node& down, Node& up, bool& prefer_up);
  int select_branch(const std::vector<double>& x) const;
  void try_incumbent(const std::vector<double>& x);
  void accept_start();
  // Fractional diving from the current node's LP point.
  void dive(std::vector<double> x);
  // Bound of the child with `col` restricted; infinity when it is empty.
  double child_bound(const std::vector<double>& lower,
                     const std::vector<double>& upper, int col, double col_lower,
                     double col_upper, double parent_bound);
  void sync_bounds(const std::vector<double>& lower,
                   const std::vector<double>& upper);
  double cutoff() const;
  double open_bound() const;
  void push(Node* node);
  Node* pop(bool best_bound);
  std::int64_t grid_key(double value) const;
  void log_progress(bool force);

  const milp::Model& model_;
  const SolveConfig& config_;
  Deadline deadline_;
  LpProblem original_;
  ReducedProblem reduced_;
  std::unique_ptr<DualSimplex> simplex_;
  std::unique_ptr<BoundPropagator> propagator_;
  std::vector<double> lp_lower_, lp_upper_;  // bounds currently in simplex_
  std::vector<double> node_lower_, node_upper_;

  std::vector<double> incumbent_;
  double incumbent_obj_ = milp::kInfinity;
  std::set<Node*, BetterNode<&Node::bound_key>> by_bound_;
  std::set<Node*, BetterNode<&Node::estimate_key>> by_estimate_;
  std::unique_ptr<Pseudocosts> pseudocosts_;
  double key_quantum_ = 1e-9;
  double root_lp_bound_ = -milp::kInfinity;
  std::vector<std::unique_ptr<Node>> pool_;
  std::int64_t nodes_ = 0;
  std::int64_t next_id_ = 0;
  bool lost_nodes_ = false;
  bool unbounded_ = false;
  bool aborted_ = false;
  double last_log_ = 0.0;
  std::int64_t dive_iterations_ = 0;
  std::int64_t next_dive_node_ = 1;
};

double BranchAndBound::cutoff() const {
  if (!std::isfinite(incumbent_obj_)) return milp::kInfinity;
  const double gap = std::max(config_.abs_gap,
                              config_.rel_gap * std::abs(incumbent_obj_));
  return incumbent_obj_ - gap;
}

double BranchAndBound::open_bound() const {
  if (by_bound_.empty()) return milp::kInfinity;
  const Node* top = *by_bound_.begin();
  if (!std::isfinite(top->bound)) return top->bound;
  // Every node in the first grid cell has a bound at least this large.
  return std::min(top->bound,
                  (static_cast<double>(top->bound_key) - 0.5) * key_quantum_);
}

std::int64_t BranchAndBound::grid_key(double value) const {
  constexpr double kLimit = 9e18;
  const double scaled = value / key_quantum_;
  if (scaled <= -kLimit) return std::numeric_limits<std::int64_t>::min();
  if (scaled >= kLimit) return std::numeric_limits<std::int64_t>::max();
  return std::llround(scaled);
}

void BranchAndBound::push(Node* node) {
  node->bound_key = grid_key(node->bound);
  node->estimate_key = grid_key(node->estimate);
  by_bound_.insert(node);
  by_estimate_.insert(node);
}

Node* BranchAndBound::pop(bool best_bound) {
  Node* node = best_bound ? *by_bound_.begin() : *by_estimate_.begin();
  by_bound_.erase(node);
  by_estimate_.erase(node);
  return node;
}

void BranchAndBound::sync_bounds(const std::vector<double>& lower,
                                 const std::vector<double>& upper) {
  for (int j = 0; j < reduced_.lp.num_cols; ++j) {
    if (lower[j] != lp_lower_[j] || upper[j] != lp_upper_[j]) {
      simplex_->set_col_bounds(j, lower[j], upper[j]);
      lp_lower_[j] = lower[j];
      lp_upper_[j] = upper[j];
    }
  }
}

int BranchAndBound::select_branch(const std::vector<double>& x) const {
  const LpProblem& lp = reduced_.lp;
  const bool first_index = config_.deterministic ||
                           config_.branching == BranchingRule::kFirstIndex;
  int best = -1;
  double best_score = -1.0;
  for (int j = 0; j < lp.num_cols; ++j) {
    if (!lp.integral[j]) continue;
    const double frac = x[j] - std::floor(x[j]);
    const double dist = std::min(frac, 1.0 - frac);
    if (dist <= config_.integrality_tol) continue;
    if (first_index) return j;
    if (dist > best_score + 1e-12) {
      best_score = dist;
      best = j;
    }
  }
  return best;
}

void BranchAndBound::try_incumbent(const std::vector<double>& x) {
  const LpProblem& lp = reduced_.lp;
  // Round integers, fix them and re-solve the continuous part.
  std::vector<double> lower = node_lower_, upper = node_upper_;
  for (int j = 0; j < lp.num_cols; ++j) {
    if (!lp.integral[j]) continue;
    const double v = std::round(x[j]);
    lower[j] = upper[j] = std::clamp(v, node_lower_[j], node_upper_[j]);
  }
  sync_bounds(lower, upper);
  const LpStatus status = simplex_->solve(deadline_);
  if (status != LpStatus::kOptimal) return;
  std::vector<double> values = reduced_.expand(simplex_->column_values());
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (model_.variables()[j].is_integral()) values[j] = std::round(values[j]);
  }
  const milp::FeasibilityReport report = milp::check_assignment(model_, values);
  if (report.worst() > config_.feasibility_tol) return;
  const double obj = model_.evaluate_objective(values);
  if (obj < incumbent_obj_) {
    incumbent_obj_ = obj;
    incumbent_ = std::move(values);
    if (config_.verbose) {
      std::fprintf(stderr, "  incumbent %.9g at node %lld (%.2fs)\n", obj,
                   static_cast<long long>(nodes_), deadline_.elapsed());
    }
  }
}

void BranchAndBound::accept_start() {
  if (config_.start.size() != model_.variables().size()) {
    throw SolverError("start has " + std::to_string(config_.start.size()) +
                      " values but the model has " +
                      std::to_string(model_.variables().size()) + " variables");
  }
  std::vector<double> values = config_.start;
  for (std::size_t j = 0; j < values.size(); ++j) {
    if (model_.variables()[j].is_integral()) values[j] = std::round(values[j]);
  }
  if (milp::check_assignment(model_, values).worst() > config_.feasibility_tol) return;
  incumbent_obj_ = model_.evaluate_objective(values);
  incumbent_ = std::move(values);
  if (config_.verbose) std::fprintf(stderr, "  start accepted, objective %.9g\n", incumbent_obj_);
}

void BranchAndBound::dive(std::vector<double> x) {
  const LpProblem& lp = reduced_.lp;
  const std::int64_t start_iterations = simplex_->iterations();
  const std::vector<double> node_lower = node_lower_, node_upper = node_upper_;
  const DualSimplex::WarmStart warm = simplex_->save();
  const std::vector<double> lp_lower = lp_lower_, lp_upper = lp_upper_;
  std::vector<double> lower = node_lower_, upper = node_upper_;
  while (!deadline_.expired()) {
    // Least fractional first, rounded to the nearer value.
    int col = -1;
    double best = 1.0;
    for (int j = 0; j < lp.num_cols; ++j) {
      if (!lp.integral[j]) continue;
      const double f = x[j] - std::floor(x[j]);
      const double dist = std::min(f, 1.0 - f);
      if (dist <= config_.integrality_tol) continue;
      if (dist < best - 1e-12) {
        best = dist;
        col = j;
      }
    }
    if (col < 0) {
      node_lower_ = lower;
      node_upper_ = upper;
      try_incumbent(x);
      break;
    }
    const double v = x[col];
    const double nearest = std::round(v);
    bool moved = false;
    for (const double target : {nearest, v < nearest ? nearest - 1.0 : nearest + 1.0}) {
      std::vector<double> l = lower, u = upper;
      if (target < l[col] || target > u[col]) continue;
      if (target <= v) {
        u[col] = target;
      } else {
        l[col] = target;
      }
      const int seed[] = {col};
      if (!propagator_->propagate(l, u, seed)) continue;
      sync_bounds(l, u);
      const LpStatus status = simplex_->solve(deadline_);
      if (status != LpStatus::kOptimal) continue;
      const double obj = simplex_->objective() + reduced_.objective_offset +
                         model_.objective_offset();
      if (obj >= cutoff()) continue;
      lower = std::move(l);
      upper = std::move(u);
      x = simplex_->column_values();
      moved = true;
      break;
    }
    if (!moved) break;
  }
  node_lower_ = node_lower;
  node_upper_ = node_upper;
  simplex_->restore(warm);
  lp_lower_ = lp_lower;
  lp_upper_ = lp_upper;
  dive_iterations_ += simplex_->iterations() - start_iterations;
}

BranchAndBound::NodeResult BranchAndBound::process(const Node& node, Node& down,
                                                   Node& up, bool& prefer_up) {
  const LpProblem& lp = reduced_.lp;
  node_lower_ = lp.col_lower;
  node_upper_ = lp.col_upper;
  std::vector<int> touched;
  touched.reserve(node.changes.size());
  for (const BoundChange& c : node.changes) {
    node_lower_[c.col] = std::max(node_lower_[c.col], c.lower);
    node_upper_[c.col] = std::min(node_upper_[c.col], c.upper);
    touched.push_back(c.col);
  }
  if (!touched.empty() &&
      !propagator_->propagate(node_lower_, node_upper_, touched)) {
    return NodeResult::kPruned;
  }
  sync_bounds(node_lower_, node_upper_);
  LpStatus status = simplex_->solve(deadline_);
  if (status == LpStatus::kNumericalError) {
    // Retry from a fresh basis before giving up on the node.
    simplex_ = std::make_unique<DualSimplex>(lp);
    lp_lower_ = lp.col_lower;
    lp_upper_ = lp.col_upper;
    sync_bounds(node_lower_, node_upper_);
    status = simplex_->solve(deadline_);
  }
  switch (status) {
    case LpStatus::kOptimal: break;
    case LpStatus::kInfeasible: return NodeResult::kPruned;
    case LpStatus::kUnbounded:
      unbounded_ = true;
      return NodeResult::kAborted;
    case LpStatus::kTimeLimit:
      aborted_ = true;
      return NodeResult::kAborted;
    case LpStatus::kIterationLimit:
    case LpStatus::kNumericalError:
      lost_nodes_ = true;
      return NodeResult::kPruned;
  }
  const double bound = simplex_->objective() + reduced_.objective_offset +
                       model_.objective_offset();
  if (node.depth == 0) root_lp_bound_ = bound;
  if (bound >= cutoff()) return NodeResult::kPruned;
  const std::vector<double> x = simplex_->column_values();
  const int col = select_branch(x);
  if (col < 0) {
    try_incumbent(x);
    return NodeResult::kIntegral;
  }
  // Dive at the root and then at exponentially spaced nodes while the
  // dives stay below a share of the total LP effort.
  if (nodes_ >= next_dive_node_ &&
      dive_iterations_ <= kDiveShare * simplex_->iterations()) {
    next_dive_node_ = 2 * nodes_ + 16;
    dive(x);
  }
  const double v = x[col];
  down.changes = node.changes;
  up.changes = node.changes;
  down.changes.push_back({col, -milp::kInfinity, std::floor(v)});
  up.changes.push_back({col, std::ceil(v), milp::kInfinity});
  const std::vector<double> lower = node_lower_, upper = node_upper_;
  down.bound = child_bound(lower, upper, col, lower[col], std::floor(v), bound);
  up.bound = child_bound(lower, upper, col, std::ceil(v), upper[col], bound);
  node_lower_ = lower;
  node_upper_ = upper;
  if (aborted_) return NodeResult::kAborted;
  down.id = next_id_++;
  up.id = next_id_++;
  down.depth = up.depth = node.depth + 1;
  const double frac = v - std::floor(v);
  if (std::isfinite(down.bound)) pseudocosts_->record(col, false, (down.bound - bound) / frac);
  if (std::isfinite(up.bound)) pseudocosts_->record(col, true, (up.bound - bound) / (1.0 - frac));
  double guess = 0.0;
  for (int j = 0; j < lp.num_cols; ++j) {
    if (!lp.integral[j] || j == col) continue;
    const double f = x[j] - std::floor(x[j]);
    if (std::min(f, 1.0 - f) <= config_.integrality_tol) continue;
    guess += std::min(pseudocosts_->down(j) * f, pseudocosts_->up(j) * (1.0 - f));
  }
  down.estimate = down.bound + guess;
  up.estimate = up.bound + guess;
  const double tol = 1e-9 * (1.0 + std::abs(bound));
  if (std::abs(up.bound - down.bound) > tol) {
    prefer_up = up.bound < down.bound;
  } else {
    prefer_up = v - std::floor(v) >= 0.5;
  }
  return NodeResult::kBranched;
}

double BranchAndBound::child_bound(const std::vector<double>& lower,
                                   const std::vector<double>& upper, int col,
                                   double col_lower, double col_upper,
                                   double parent_bound) {
  node_lower_ = lower;
  node_upper_ = upper;
  node_lower_[col] = col_lower;
  node_upper_[col] = col_upper;
  const int seed[] = {col};
  if (!propagator_->propagate(node_lower_, node_upper_, seed)) return milp::kInfinity;
  sync_bounds(node_lower_, node_upper_);
  const LpStatus status = simplex_->solve(deadline_);
  if (status == LpStatus::kInfeasible) return milp::kInfinity;
  if (status == LpStatus::kTimeLimit) aborted_ = true;
  if (status != LpStatus::kOptimal) return parent_bound;
  const double bound = simplex_->objective() + reduced_.objective_offset +
                       model_.objective_offset();
  const std::vector<double> x = simplex_->column_values();
  if (select_branch(x) < 0) try_incumbent(x);
  return std::max(bound, parent_bound);
}

void BranchAndBound::log_progress(bool force) {
  if (!config_.verbose) return;
  const double now = deadline_.elapsed();
  if (!force && now - last_log_ < 2.0) return;
  last_log_ = now;
  std::fprintf(stderr, "  nodes %lld open %zu bound %.9g incumbent %.9g (%.1fs)\n",
               static_cast<long long>(nodes_), by_bound_.size(),
               open_bound(), incumbent_obj_, now);
}

Solution BranchAndBound::run() {
  config_.validate();
  Solution out;
  reduced_ = internal::presolve(original_);
  if (reduced_.infeasible) {
    out.status = Status::kInfeasible;
    out.stats.wall_time_s = deadline_.elapsed();
    return out;
  }
  if (!config_.start.empty()) accept_start();
  const LpProblem& lp = reduced_.lp;
  simplex_ = std::make_unique<DualSimplex>(lp);
  propagator_ = std::make_unique<BoundPropagator>(lp);
  pseudocosts_ = std::make_unique<Pseudocosts>(lp.num_cols);
  lp_lower_ = lp.col_lower;
  lp_upper_ = lp.col_upper;

  auto make_node = [this]() {
    pool_.push_back(std::make_unique<Node>());
    return pool_.back().get();
  };
  Node* root = make_node();
  root->bound = root->estimate = -milp::kInfinity;
  root->id = next_id_++;

  // Best estimate with the deeper node first among ties, which plunges
  // while the estimate holds; every few picks take the best bound instead.
  constexpr std::int64_t kBoundPickInterval = 8;
  double root_bound = -milp::kInfinity;
  Node* current = root;
  std::int64_t picks = 0;
  while (true) {
    if (current == nullptr) {
      if (by_bound_.empty()) break;
      current = pop(++picks % kBoundPickInterval == 0);
    }
    if (current->bound >= cutoff()) {
      current = nullptr;
      continue;
    }
    if (nodes_ >= config_.node_limit || deadline_.expired()) {
      push(current);
      aborted_ = true;
      break;
    }
    ++nodes_;
    Node* down = make_node();
    Node* up = make_node();
    bool prefer_up = false;
    const NodeResult result = process(*current, *down, *up, prefer_up);
    if (nodes_ == 1) {
      root_bound = root_lp_bound_;
      if (std::isfinite(root_bound)) key_quantum_ = 1e-8 * (1.0 + std::abs(root_bound));
    }
    if (result == NodeResult::kAborted) {
      push(current);
      break;
    }
    current->changes.clear();
    current->changes.shrink_to_fit();
    current = nullptr;
    log_progress(false);
    if (result != NodeResult::kBranched) continue;
    Node* first = prefer_up ? up : down;
    Node* second = prefer_up ? down : up;
    if (first->id > second->id) std::swap(first->id, second->id);
    push(first);
    push(second);
  }
  log_progress(true);

  out.stats.nodes = nodes_;
  out.stats.lp_iterations = simplex_->iterations();
  out.stats.wall_time_s = deadline_.elapsed();
  if (unbounded_) {
    out.status = Status::kUnbounded;
    out.objective = -milp::kInfinity;
    return out;
  }
  const bool open = !by_bound_.empty();
  if (std::isfinite(incumbent_obj_)) {
    out.values = incumbent_;
    out.objective = incumbent_obj_;
    if (open) {
      out.status = Status::kLimitReached;
      out.bound = std::min(open_bound(), incumbent_obj_);
    } else {
      out.status = lost_nodes_ ? Status::kFeasible : Status::kOptimal;
      out.bound = lost_nodes_ ? root_bound : incumbent_obj_;
    }
    return out;
  }
  if (open || aborted_) {
    out.status = Status::kLimitReached;
    out.bound = open_bound();
  } else {
    out.status = lost_nodes_ ? Status::kNumericalError : Status::kInfeasible;
  }
  return out;
}

}  // namespace

Solution solve_milp(const milp::Model& model, const SolveConfig& config) {
  BranchAndBound search(model, config);
  return search.run();
}

}  // namespace meshreconf::solver
