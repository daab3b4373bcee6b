#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "meshreconf/milp/lp_format.hpp"
#include "meshreconf/milp/model.hpp"

namespace meshreconf::milp {
namespace {

TEST(Model, MergesDuplicateTerms) {
  Model m;
  VarId x = m.add_continuous("x", 0, 10);
  VarId y = m.add_continuous("y", 0, 10);
  m.add_constraint({{1, x}, {2, y}, {3, x}}, Sense::kLessEqual, 5, "row");
  const LinearConstraint& row = m.constraints()[0];
  ASSERT_EQ(row.terms.size(), 2u);
  EXPECT_EQ(row.terms[0].var, x);
  EXPECT_DOUBLE_EQ(row.terms[0].coef, 4);

  m.add_constraint({{1, x}, {-1, x}, {1, y}}, Sense::kEqual, 1);
  EXPECT_EQ(m.constraints()[1].terms.size(), 1u);
}

TEST(Model, RejectsDuplicateNamesAndBadBounds) {
  Model m;
  m.add_binary("b");
  EXPECT_THROW(m.add_binary("b"), ModelError);
  EXPECT_THROW(m.add_continuous("c", 2, 1), ModelError);
  EXPECT_THROW(m.add_variable({"d", Domain::kBinary, 0, 2}), ModelError);
}

TEST(Model, CheckAssignmentReportsWorstRow) {
  Model m;
  VarId x = m.add_integer("x", 0, 5);
  VarId y = m.add_continuous("y", 0, kInfinity);
  m.add_constraint({{1, x}, {1, y}}, Sense::kLessEqual, 4, "cap");
  m.add_constraint({{1, y}}, Sense::kGreaterEqual, 1, "floor");

  std::vector<double> ok = {3, 1};
  EXPECT_EQ(check_assignment(m, ok).worst(), 0.0);

  std::vector<double> bad = {3.5, 2};
  FeasibilityReport r = check_assignment(m, bad);
  EXPECT_NEAR(r.max_row_violation, 1.5, 1e-12);
  EXPECT_NEAR(r.max_integrality_violation, 0.5, 1e-12);
  EXPECT_EQ(r.worst_row, "cap");
}

TEST(Model, ValidateFlagsEmptyAndInfeasibleRows) {
  Model m;
  VarId x = m.add_continuous("x", -kInfinity, kInfinity);
  m.add_objective_term(1, x);
  m.add_constraint({}, Sense::kGreaterEqual, 1, "never");
  auto diags = validate_model(m);
  bool unbounded = false, infeasible = false;
  for (const auto& d : diags) {
    unbounded |= d.kind == DiagnosticKind::kUnboundedObjectiveVariable;
    infeasible |= d.kind == DiagnosticKind::kTriviallyInfeasible;
  }
  EXPECT_TRUE(unbounded);
  EXPECT_TRUE(infeasible);
}

TEST(LpFormat, SanitizesNames) {
  EXPECT_EQ(sanitize_lp_name("x_1_2"), "x_1_2");
  EXPECT_EQ(sanitize_lp_name("a b:c"), "a_b_c");
  EXPECT_EQ(sanitize_lp_name("3x"), "_3x");
  EXPECT_EQ(sanitize_lp_name("e12"), "_e12");
  EXPECT_EQ(sanitize_lp_name("free"), "_free");
}

TEST(LpFormat, ParsesHandWrittenFile) {
  const char* text = R"(\ a comment
Maximize
 obj: 3 a + 2 b
Subject To
 cap: 2 a + 2 b <= 2
 lo: a - b >= -1
Bounds
 -inf <= f <= 4
 g free
Binaries
 a b
End
)";
  Model m = parse_lp_string(text);
  ASSERT_EQ(m.num_variables(), 4u);
  auto a = m.find_variable("a");
  ASSERT_TRUE(a.has_value());
  EXPECT_EQ(m.variable(*a).domain, Domain::kBinary);
  EXPECT_DOUBLE_EQ(m.objective()[a->index], -3.0);
  auto f = m.find_variable("f");
  ASSERT_TRUE(f.has_value());
  EXPECT_EQ(m.variable(*f).lower, -kInfinity);
  EXPECT_EQ(m.variable(*f).upper, 4);
  EXPECT_EQ(m.constraints()[1].sense, Sense::kGreaterEqual);
  EXPECT_DOUBLE_EQ(m.constraints()[1].rhs, -1);
}

TEST(LpFormat, ReportsLineOfSyntaxError) {
  const char* text = "Minimize\n obj: x\nSubject To\n c1: x <= \nEnd\n";
  try {
    parse_lp_string(text);
    FAIL() << "expected parse error";
  } catch (const LpParseError& e) {
    EXPECT_GE(e.line(), 4);
  }
}

Model random_model(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 8);
  std::uniform_real_distribution<double> coef(-50, 50);
  std::uniform_int_distribution<int> kind(0, 2);
  Model m;
  const int n = count(rng);
  for (int j = 0; j < n; ++j) {
    switch (kind(rng)) {
      case 0: m.add_binary("b" + std::to_string(j)); break;
      case 1: m.add_integer("i" + std::to_string(j), -3, 7); break;
      default: m.add_continuous("c" + std::to_string(j), -coef(rng) * 1e-3, kInfinity);
    }
    m.add_objective_term(coef(rng) / 7.0, VarId{j});
  }
  const int rows = count(rng);
  for (int i = 0; i < rows; ++i) {
    std::vector<Term> terms;
    for (int j = 0; j < n; ++j) {
      if (rng() % 2) terms.push_back({coef(rng) / 3.0, VarId{j}});
    }
    m.add_constraint(terms, static_cast<Sense>(kind(rng)), coef(rng) * 1.234567,
                     "r" + std::to_string(i));
  }
  return m;
}

TEST(LpFormat, RoundTripPreservesModel) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    Model m = random_model(rng);
    Model back = parse_lp_string(write_lp(m));
    ASSERT_EQ(back.num_variables(), m.num_variables());
    ASSERT_EQ(back.num_constraints(), m.num_constraints());
    for (std::size_t j = 0; j < m.num_variables(); ++j) {
      const Variable& u = m.variables()[j];
      auto id = back.find_variable(u.name);
      ASSERT_TRUE(id.has_value()) << u.name;
      const Variable& v = back.variable(*id);
      EXPECT_EQ(u.domain, v.domain);
      EXPECT_NEAR(u.lower, v.lower, 1e-11 * (1 + std::abs(u.lower)));
      EXPECT_EQ(u.upper, v.upper);
      EXPECT_NEAR(m.objective()[j], back.objective()[id->index],
                  1e-11 * (1 + std::abs(m.objective()[j])));
    }
    for (std::size_t i = 0; i < m.num_constraints(); ++i) {
      const auto& r = m.constraints()[i];
      const auto& s = back.constraints()[i];
      EXPECT_EQ(r.name, s.name);
      EXPECT_EQ(r.sense, s.sense);
      EXPECT_NEAR(r.rhs, s.rhs, 1e-11 * (1 + std::abs(r.rhs)));
      ASSERT_EQ(r.terms.size(), s.terms.size());
    }
  }
}

TEST(SolutionText, RoundTripsByName) {
  Model m;
  m.add_binary("z");
  m.add_continuous("flow_1", 0, 10);
  std::vector<double> values = {1, 0.1 + 0.2};
  std::stringstream ss;
  write_solution(m, values, ss);
  auto named = read_solution(ss);
  auto back = assignment_from_named(m, named);
  EXPECT_EQ(back, values);

  named.pop_back();
  EXPECT_THROW(assignment_from_named(m, named), ModelError);
}

}  // namespace
}  // namespace meshreconf::milp
