#include "meshreconf/milp/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace meshreconf::milp {

std::string_view to_string(Domain domain) {
  switch (domain) {
    case Domain::kContinuous:
      return "continuous";
    case Domain::kInteger:
      return "integer";
    case Domain::kBinary:
      return "binary";
  }
  return "?";
}

std::string_view to_string(Sense sense) {
  switch (sense) {
    case Sense::kLessEqual:
      return "<=";
    case Sense::kEqual:
      return "=";
    case Sense::kGreaterEqual:
      return ">=";
  }
  return "?";
}

VarId Model::add_variable(Variable var) {
  if (std::isnan(var.lower) || std::isnan(var.upper) ||
      var.lower > var.upper) {
    throw ModelError("invalid bounds for variable '" + var.name + "'");
  }
  if (var.lower == kInfinity || var.upper == -kInfinity) {
    throw ModelError("empty domain for variable '" + var.name + "'");
  }
  if (var.domain == Domain::kBinary) {
    if (var.lower < 0.0 || var.upper > 1.0) {
      throw ModelError("binary variable '" + var.name +
                       "' must have bounds within [0, 1]");
    }
  }
  const auto index = static_cast<std::int32_t>(variables_.size());
  if (var.name.empty()) var.name = "v" + std::to_string(index);
  if (!name_index_.emplace(var.name, index).second) {
    throw ModelError("duplicate variable name '" + var.name + "'");
  }
  variables_.push_back(std::move(var));
  objective_.push_back(0.0);
  return VarId{index};
}

VarId Model::add_continuous(std::string name, double lower, double upper) {
  return add_variable({std::move(name), Domain::kContinuous, lower, upper});
}

VarId Model::add_binary(std::string name) {
  return add_variable({std::move(name), Domain::kBinary, 0.0, 1.0});
}

VarId Model::add_integer(std::string name, double lower, double upper) {
  return add_variable({std::move(name), Domain::kInteger, lower, upper});
}

void Model::check_id(VarId id) const {
  if (id.index < 0 || static_cast<std::size_t>(id.index) >= variables_.size()) {
    throw ModelError("unknown variable id " + std::to_string(id.index));
  }
}

ConstraintId Model::add_constraint(std::span<const Term> terms, Sense sense,
                                   double rhs, std::string name) {
  std::map<std::int32_t, double> merged;
  for (const Term& t : terms) {
    check_id(t.var);
    if (!std::isfinite(t.coef)) {
      throw ModelError("non-finite coefficient in constraint '" + name + "'");
    }
    merged[t.var.index] += t.coef;
  }
  if (std::isnan(rhs)) throw ModelError("NaN right-hand side in '" + name + "'");
  LinearConstraint row;
  row.sense = sense;
  row.rhs = rhs;
  row.terms.reserve(merged.size());
  // Keep first-appearance order so exported text mirrors construction order.
  for (const Term& t : terms) {
    auto it = merged.find(t.var.index);
    if (it == merged.end()) continue;
    if (it->second != 0.0) row.terms.push_back({it->second, t.var});
    merged.erase(it);
  }
  const auto index = static_cast<std::int32_t>(constraints_.size());
  row.name = name.empty() ? "c" + std::to_string(index) : std::move(name);
  constraints_.push_back(std::move(row));
  return ConstraintId{index};
}

void Model::add_objective_term(double coef, VarId var) {
  check_id(var);
  objective_[var.index] += coef;
}

void Model::set_objective(std::span<const Term> terms, double offset) {
  std::fill(objective_.begin(), objective_.end(), 0.0);
  for (const Term& t : terms) add_objective_term(t.coef, t.var);
  objective_offset_ = offset;
}

void Model::set_bounds(VarId var, double lower, double upper) {
  check_id(var);
  Variable& v = variables_[var.index];
  if (lower > upper || std::isnan(lower) || std::isnan(upper)) {
    throw ModelError("invalid bounds for variable '" + v.name + "'");
  }
  if (v.domain == Domain::kBinary && (lower < 0.0 || upper > 1.0)) {
    throw ModelError("binary variable '" + v.name +
                     "' must have bounds within [0, 1]");
  }
  v.lower = lower;
  v.upper = upper;
}

std::size_t Model::num_integral() const {
  return static_cast<std::size_t>(
      std::count_if(variables_.begin(), variables_.end(),
                    [](const Variable& v) { return v.is_integral(); }));
}

std::optional<VarId> Model::find_variable(std::string_view name) const {
  auto it = name_index_.find(std::string(name));
  if (it == name_index_.end()) return std::nullopt;
  return VarId{it->second};
}

double Model::evaluate_objective(std::span<const double> values) const {
  double total = objective_offset_;
  for (std::size_t j = 0; j < objective_.size(); ++j) {
    if (objective_[j] != 0.0) total += objective_[j] * values[j];
  }
  return total;
}

std::vector<Diagnostic> validate_model(const Model& model) {
  std::vector<Diagnostic> out;
  const auto& vars = model.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const double c = model.objective()[j];
    const Variable& v = vars[j];
    if (v.domain != Domain::kContinuous || c == 0.0) continue;
    const bool unbounded_dir = (c < 0.0 && v.upper == kInfinity) ||
                               (c > 0.0 && v.lower == -kInfinity);
    if (unbounded_dir) {
      out.push_back({DiagnosticKind::kUnboundedObjectiveVariable, v.name,
                     "continuous variable '" + v.name +
                         "' has an infinite bound in its improving direction"});
    }
  }
  for (const LinearConstraint& row : model.constraints()) {
    if (!row.terms.empty()) continue;
    bool satisfied = false;
    switch (row.sense) {
      case Sense::kLessEqual:
        satisfied = 0.0 <= row.rhs;
        break;
      case Sense::kEqual:
        satisfied = row.rhs == 0.0;
        break;
      case Sense::kGreaterEqual:
        satisfied = 0.0 >= row.rhs;
        break;
    }
    if (satisfied) {
      out.push_back({DiagnosticKind::kEmptyConstraint, row.name,
                     "constraint '" + row.name + "' has no terms"});
    } else {
      out.push_back({DiagnosticKind::kTriviallyInfeasible, row.name,
                     "constraint '" + row.name +
                         "' has no terms and an unsatisfiable right-hand side"});
    }
  }
  return out;
}

double FeasibilityReport::worst() const {
  return std::max({max_bound_violation, max_row_violation,
                   max_integrality_violation});
}

FeasibilityReport check_assignment(const Model& model,
                                   std::span<const double> values) {
  if (values.size() != model.num_variables()) {
    throw ModelError("assignment size does not match the model");
  }
  FeasibilityReport report;
  const auto& vars = model.variables();
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const double x = values[j];
    if (!std::isfinite(x)) {
      report.max_bound_violation = kInfinity;
      continue;
    }
    report.max_bound_violation =
        std::max({report.max_bound_violation, vars[j].lower - x,
                  x - vars[j].upper});
    if (vars[j].is_integral()) {
      report.max_integrality_violation = std::max(
          report.max_integrality_violation, std::abs(x - std::round(x)));
    }
  }
  for (const LinearConstraint& row : model.constraints()) {
    double activity = 0.0;
    for (const Term& t : row.terms) activity += t.coef * values[t.var.index];
    double violation = 0.0;
    switch (row.sense) {
      case Sense::kLessEqual:
        violation = activity - row.rhs;
        break;
      case Sense::kEqual:
        violation = std::abs(activity - row.rhs);
        break;
      case Sense::kGreaterEqual:
        violation = row.rhs - activity;
        break;
    }
    if (violation > report.max_row_violation) {
      report.max_row_violation = violation;
      report.worst_row = row.name;
    }
  }
  return report;
}

}  // namespace meshreconf::milp
