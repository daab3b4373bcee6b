#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace meshreconf::milp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VarId {
  std::int32_t index = -1;
  auto operator<=>(const VarId&) const = default;
};

struct ConstraintId {
  std::int32_t index = -1;
  auto operator<=>(const ConstraintId&) const = default;
};

enum class Domain { kContinuous, kInteger, kBinary };
enum class Sense { kLessEqual, kEqual, kGreaterEqual };

std::string_view to_string(Domain domain);
std::string_view to_string(Sense sense);

struct Variable {
  std::string name;
  Domain domain = Domain::kContinuous;
  double lower = 0.0;
  double upper = kInfinity;

  bool is_integral() const { return domain != Domain::kContinuous; }
};

struct Term {
  double coef = 0.0;
  VarId var;
};

struct LinearConstraint {
  std::string name;
  std::vector<Term> terms;
  Sense sense = Sense::kLessEqual;
  double rhs = 0.0;
};

// Append-only container for a minimization MILP. Ids stay valid for the
// lifetime of the model.
class Model {
 public:
  VarId add_variable(Variable var);
  VarId add_continuous(std::string name, double lower, double upper);
  VarId add_binary(std::string name);
  VarId add_integer(std::string name, double lower, double upper);

  // Terms referencing the same variable are merged. Zero coefficients that
  // result from merging are dropped.
  ConstraintId add_constraint(std::span<const Term> terms, Sense sense,
                              double rhs, std::string name = {});
  ConstraintId add_constraint(std::initializer_list<Term> terms, Sense sense,
                              double rhs, std::string name = {}) {
    return add_constraint(std::span<const Term>(terms.begin(), terms.size()),
                          sense, rhs, std::move(name));
  }

  void add_objective_term(double coef, VarId var);
  void set_objective(std::span<const Term> terms, double offset = 0.0);
  double objective_offset() const { return objective_offset_; }

  // Bound tightening after creation; the new bounds must be valid.
  void set_bounds(VarId var, double lower, double upper);

  const Variable& variable(VarId id) const { return variables_.at(id.index); }
  const LinearConstraint& constraint(ConstraintId id) const {
    return constraints_.at(id.index);
  }
  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<LinearConstraint>& constraints() const {
    return constraints_;
  }
  // Dense objective coefficients, one per variable.
  const std::vector<double>& objective() const { return objective_; }

  std::size_t num_variables() const { return variables_.size(); }
  std::size_t num_constraints() const { return constraints_.size(); }
  std::size_t num_integral() const;

  std::optional<VarId> find_variable(std::string_view name) const;

  // Objective value of a full assignment (offset included).
  double evaluate_objective(std::span<const double> values) const;

 private:
  void check_id(VarId id) const;

  std::vector<Variable> variables_;
  std::vector<LinearConstraint> constraints_;
  std::vector<double> objective_;
  double objective_offset_ = 0.0;
  std::unordered_map<std::string, std::int32_t> name_index_;
};

enum class DiagnosticKind {
  kUnboundedObjectiveVariable,
  kEmptyConstraint,
  kTriviallyInfeasible,
};

struct Diagnostic {
  DiagnosticKind kind;
  std::string subject;
  std::string message;
};

std::vector<Diagnostic> validate_model(const Model& model);

// Largest absolute violation of any bound, integrality requirement or row of
// `model` by `values`. Computed directly from the model rows.
struct FeasibilityReport {
  double max_bound_violation = 0.0;
  double max_row_violation = 0.0;
  double max_integrality_violation = 0.0;
  std::string worst_row;

  double worst() const;
};

FeasibilityReport check_assignment(const Model& model,
                                   std::span<const double> values);

}  // namespace meshreconf::milp
