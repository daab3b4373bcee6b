#include <cmath>
#include <string>

#include <gtest/gtest.h>

#include "meshreconf/io/io.hpp"
#include "meshreconf/planner/planner.hpp"

namespace meshreconf::planner {
namespace {

using scenario::Link;
using scenario::Scenario;

// Capacity of the 180 m hop under the default link budget.
constexpr double kR180 = 2816.3942054311788;

// Node 1 sits 180 m north of the fiber node 0: V[0][1] = 0, V[1][0] = 180.
Scenario two_node(double demand, int slots = 1) {
  Scenario s;
  s.name = "toy";
  s.topology = scenario::make_topology({{0, 0}, {0, 180}}, {0}, 1, 200, 10);
  s.demand = {0, demand};
  s.x_init = {{0, 0, 1, 0}};
  s.x_end = {{0, 0, 1, 0}};
  s.a0 = {{0}, {180}};
  s.slots = slots;
  s.loss_threshold.assign(slots, 1.0);
  return s;
}

// Fiber node 0 in the middle of a vertical line of three.
Scenario three_node(int interfaces, int slots, std::vector<double> a0_top = {}) {
  Scenario s;
  s.name = "line";
  s.topology = scenario::make_topology({{0, 0}, {0, 150}, {0, -150}}, {0}, interfaces,
                                       200, 90);
  s.demand = {0, 2500, 1500};
  s.x_init = {{0, 0, 1, 0}};
  s.x_end = {{0, 0, 2, 0}};
  const int n = interfaces;
  s.a0.assign(3, std::vector<double>(n, 0.0));
  s.a0[0][0] = 0;
  s.a0[1][0] = 180;
  if (!a0_top.empty()) s.a0[2] = a0_top;
  s.slots = slots;
  s.loss_threshold.assign(slots, 1.0);
  return s;
}

solver::SolveConfig exact() {
  solver::SolveConfig c;
  c.time_limit_s = 120;
  return c;
}

TEST(Names, Format) {
  EXPECT_EQ(x_name(0, 1, 2, 0, 3), "x_0_1_2_0_3");
  EXPECT_EQ(p_name(1, 0, 2, 4), "p_1_0_2_4");
  EXPECT_EQ(loss_name(3, 2), "l_3_2");
}

TEST(BuildModel, LinkVariableCount) {
  for (int n = 1; n <= 2; ++n) {
    for (int k = 1; k <= 3; ++k) {
      Scenario s = three_node(n, k, std::vector<double>(n, 180.0));
      s.x_end = s.x_init;
      const BuiltModel b = build_model(s);
      int count = 0;
      for (const auto& v : b.model.variables()) count += v.name.rfind("x_", 0) == 0;
      EXPECT_EQ(count, 3 * 3 * n * n * k) << "N=" << n << " K=" << k;
    }
  }
}

TEST(BuildModel, HorizonTooShort) {
  // Node 2 needs a 180 degree turn in 90 degree steps: K >= 3.
  Scenario s = three_node(1, 2, {0});
  EXPECT_THROW(build_model(s), HorizonError);
  s.slots = 3;
  s.loss_threshold.assign(3, 1.0);
  EXPECT_NO_THROW(build_model(s));
}

TEST(Plan, TwoNodeToyLoss) {
  for (double demand : {1000.0, 3000.0}) {
    const Scenario s = two_node(demand);
    const PlanResult r = plan(s, exact());
    ASSERT_EQ(r.solution.status, solver::Status::kOptimal);
    EXPECT_NEAR(r.solution.objective, std::max(0.0, demand - kR180), 1e-6);
    ASSERT_TRUE(r.plan);
    ASSERT_EQ(r.plan->slots.size(), 1u);
    ASSERT_EQ(r.plan->slots[0].links.size(), 1u);
    EXPECT_EQ(r.plan->slots[0].links[0].link, (Link{0, 0, 1, 0}));
    EXPECT_NEAR(r.plan->slots[0].links[0].flow, std::min(demand, kR180), 1e-6);
    EXPECT_TRUE(r.violations.empty());
  }
}

TEST(BigM, WithinReachableSpan) {
  for (int k : {1, 3, 5}) {
    const Scenario s = three_node(2, k, {180, 90});
    const double m = big_m_value(s);
    EXPECT_LE(m, 360.0 + (k - 1) * s.theta());
    if (k == 1) EXPECT_LE(m, 360.0);
  }
}

TEST(BigM, SmallerValueCutsFeasiblePlans) {
  // No links at all: node 1 idles at 0 degrees while it would face node 0
  // at 180, so its alignment row needs M >= 180.
  Scenario s = two_node(0.0);
  s.x_init.clear();
  s.x_end.clear();
  s.a0 = {{0}, {0}};
  EXPECT_GE(big_m_value(s), 180.0);
  const PlanResult ok = plan(s, exact());
  EXPECT_EQ(ok.solution.status, solver::Status::kOptimal);
  BuildOptions tight;
  tight.big_m = 170.0;
  const PlanResult cut = plan(s, exact(), tight);
  EXPECT_EQ(cut.solution.status, solver::Status::kInfeasible);
}

TEST(Plan, ThresholdMakesOverloadInfeasible) {
  Scenario s = two_node(3000.0);
  s.loss_threshold = {0.0};
  EXPECT_EQ(plan(s, exact()).solution.status, solver::Status::kInfeasible);
  s = two_node(2000.0);
  s.loss_threshold = {0.0};
  EXPECT_EQ(plan(s, exact()).solution.status, solver::Status::kOptimal);
}

TEST(Plan, ReformulationsAgree) {
  for (int k : {3, 4}) {
    const Scenario s = three_node(2, k, {180, 0});
    const double base = plan(s, exact()).solution.objective;
    BuildOptions rate;
    rate.explicit_rate = true;
    BuildOptions loose;
    loose.alignment_tightening = false;
    loose.reachability_bounds = false;
    loose.fix_final_movement = false;
    BuildOptions rows;
    rows.all_threshold_rows = true;
    for (const BuildOptions& o : {rate, loose, rows}) {
      const PlanResult r = plan(s, exact(), o);
      ASSERT_EQ(r.solution.status, solver::Status::kOptimal);
      EXPECT_NEAR(r.solution.objective, base, 1e-6 * (1 + std::abs(base))) << "K=" << k;
      EXPECT_TRUE(r.violations.empty());
    }
  }
}

TEST(Extract, RoundsNearlyIntegralBinaries) {
  const Scenario s = two_node(1000.0);
  const BuiltModel b = build_model(s);
  solver::Solution sol = solver::solve_milp(b.model, exact());
  ASSERT_TRUE(sol.has_assignment());
  const auto id = b.model.find_variable(x_name(0, 0, 1, 0, 1));
  ASSERT_TRUE(id);
  sol.values[id->index] = 0.9999997;
  const TransitionPlan p = extract_plan(s, b.model, sol);
  ASSERT_EQ(p.slots[0].links.size(), 1u);
}

TransitionPlan toy_plan(const Scenario& s) {
  TransitionPlan p;
  SlotState slot;
  slot.orientation = {{0}, {180}};
  slot.cw = {{0}, {0}};
  slot.ccw = {{0}, {0}};
  slot.links = {{{0, 0, 1, 0}, std::min(s.demand[1], kR180)}};
  slot.loss = {0, std::max(0.0, s.demand[1] - kR180)};
  slot.ingress = {std::min(s.demand[1], kR180), 0};
  for (int k = 0; k < s.slots; ++k) p.slots.push_back(slot);
  return p;
}

int count(const std::vector<Violation>& v, ViolationKind kind) {
  int c = 0;
  for (const auto& x : v) c += x.kind == kind;
  return c;
}

TEST(Validate, HandBuiltPlan) {
  const Scenario s = two_node(1000.0, 2);
  TransitionPlan p = toy_plan(s);
  EXPECT_TRUE(validate_plan(s, p).empty());

  TransitionPlan over = p;
  over.slots[0].links[0].flow = kR180 + 10;
  auto v = validate_plan(s, over);
  ASSERT_EQ(count(v, ViolationKind::kCapacity), 1);
  for (const auto& x : v) {
    if (x.kind != ViolationKind::kCapacity) continue;
    EXPECT_EQ(x.slot, 1);
    EXPECT_NE(x.message.find("(0,0)->(1,0)"), std::string::npos);
    EXPECT_NE(x.message.find("k=1"), std::string::npos);
  }

  // Final slot turned away: the active link loses alignment.
  TransitionPlan turned = p;
  turned.slots[0].cw[1][0] = 1;
  turned.slots[1].orientation[1][0] = 190;
  v = validate_plan(s, turned);
  EXPECT_EQ(count(v, ViolationKind::kAlignment), 1);
  EXPECT_EQ(count(v, ViolationKind::kDynamics), 0);

  TransitionPlan both = p;
  both.slots[0].cw[0][0] = 1;
  both.slots[0].ccw[0][0] = 1;
  EXPECT_GE(count(validate_plan(s, both), ViolationKind::kMovement), 1);

  TransitionPlan dropped = p;
  dropped.slots[1].links.clear();
  dropped.slots[1].loss = {0, 1000};
  dropped.slots[1].ingress = {0, 0};
  EXPECT_EQ(count(validate_plan(s, dropped), ViolationKind::kBoundary), 1);

  TransitionPlan short_plan = p;
  short_plan.slots.pop_back();
  EXPECT_EQ(count(validate_plan(s, short_plan), ViolationKind::kShape), 1);
}

TEST(Metrics, UnitsAndLosslessIndex) {
  Scenario s = two_node(1000.0, 3);
  s.tau = 0.2;
  TransitionPlan p = toy_plan(s);
  PlanMetrics m = compute_metrics(s, p);
  EXPECT_DOUBLE_EQ(m.total_loss_gb, 0.0);
  EXPECT_EQ(m.slots_to_lossless, 1);

  p.slots[0].loss = {0, 1000};
  m = compute_metrics(s, p);
  EXPECT_NEAR(m.total_loss_mb, 200.0, 1e-12);
  EXPECT_NEAR(m.total_loss_gb, 0.025, 1e-15);
  EXPECT_NEAR(m.slots[0].loss_fraction, 1.0, 1e-15);
  EXPECT_EQ(m.slots[0].active_links, 1);
  EXPECT_EQ(m.slots_to_lossless, 2);

  s.weight = scenario::WeightKind::kLinear;
  p.slots[2].loss = {0, 10};
  m = compute_metrics(s, p);
  EXPECT_NEAR(m.weighted_loss, 2 * 1000 + 6 * 10, 1e-9);
  EXPECT_FALSE(m.slots_to_lossless);
}

TEST(Plan, ExtendedPlanStaysValid) {
  const Scenario s = three_node(2, 3, {180, 0});
  const PlanResult r = plan(s, exact());
  ASSERT_TRUE(r.plan);
  Scenario longer = s;
  longer.slots = 4;
  longer.loss_threshold.assign(4, 1.0);
  const TransitionPlan extended = extend_plan(*r.plan);
  ASSERT_EQ(extended.slots.size(), 4u);
  EXPECT_TRUE(validate_plan(longer, extended).empty());

  BuildOptions cold;
  cold.extend_shorter_horizon = false;
  const PlanResult warm_result = plan(longer, exact());
  const PlanResult cold_result = plan(longer, exact(), cold);
  ASSERT_EQ(warm_result.solution.status, solver::Status::kOptimal);
  ASSERT_EQ(cold_result.solution.status, solver::Status::kOptimal);
  EXPECT_NEAR(warm_result.solution.objective, cold_result.solution.objective, 1e-6);
  EXPECT_LE(warm_result.solution.objective,
            compute_metrics(longer, extended).weighted_loss + 1e-6);
}

TEST(PlanJson, RoundTrip) {
  const Scenario s = three_node(2, 4, {180, 0});
  const PlanResult r = plan(s, exact());
  ASSERT_TRUE(r.plan);
  const std::string text = io::plan_to_json(*r.plan);
  const TransitionPlan back = io::plan_from_json(text);
  EXPECT_EQ(io::plan_to_json(back), text);
  EXPECT_TRUE(validate_plan(s, back).empty());
  EXPECT_THROW(io::plan_from_json(R"({"schema_version": 1, "status": "optimal"})"),
               io::FormatError);
}

}  // namespace
}  // namespace meshreconf::planner
