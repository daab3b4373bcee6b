#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "meshreconf/geometry/geometry.hpp"
#include "meshreconf/planner/planner.hpp"

namespace meshreconf::planner {

using scenario::Link;
using scenario::Scenario;

namespace {

std::string describe(const Link& l) {
  std::ostringstream os;
  os << "(" << l.d << "," << l.n << ")->(" << l.d2 << "," << l.n2 << ")";
  return os.str();
}

std::string describe_iface(int d, int n) {
  return "(" + std::to_string(d) + "," + std::to_string(n) + ")";
}

// Distance of an angle to the nearest multiple of 360 after subtracting `v`.
double angular_gap(double a, double v) {
  const double diff = std::fmod(a - v, 360.0);
  const double r = diff < 0 ? diff + 360.0 : diff;
  return std::min(r, 360.0 - r);
}

}  // namespace

TransitionPlan extract_plan(const Scenario& s, const milp::Model& model,
                            const solver::Solution& solution) {
  if (!solution.has_assignment()) {
    throw PlannerError("solution carries no assignment");
  }
  if (solution.values.size() != model.num_variables()) {
    throw PlannerError("assignment size does not match the model");
  }
  const auto& topo = s.topology;
  const int D = topo.num_nodes();
  const int N = topo.interfaces;
  auto value = [&](const std::string& name) {
    const auto id = model.find_variable(name);
    if (!id) throw PlannerError("assignment lacks variable " + name);
    return solution.values[id->index];
  };
  auto optional_value = [&](const std::string& name) -> std::optional<double> {
    const auto id = model.find_variable(name);
    if (!id) return std::nullopt;
    return solution.values[id->index];
  };

  TransitionPlan plan;
  plan.objective = solution.objective;
  plan.status = std::string(solver::to_string(solution.status));
  for (int k = 1; k <= s.slots; ++k) {
    SlotState slot;
    slot.orientation.assign(D, std::vector<double>(N, 0.0));
    slot.cw.assign(D, std::vector<int>(N, 0));
    slot.ccw.assign(D, std::vector<int>(N, 0));
    for (int d = 0; d < D; ++d) {
      for (int n = 0; n < N; ++n) {
        slot.orientation[d][n] = value(a_name(d, n, k));
        slot.cw[d][n] = value(cw_name(d, n, k)) > 0.5 ? 1 : 0;
        slot.ccw[d][n] = value(ccw_name(d, n, k)) > 0.5 ? 1 : 0;
        for (int d2 = 0; d2 < D; ++d2) {
          for (int n2 = 0; n2 < N; ++n2) {
            if (value(x_name(d, n, d2, n2, k)) <= 0.5) continue;
            const double flow = optional_value(z_name(d, n, d2, n2, k)).value_or(0.0);
            slot.links.push_back({{d, n, d2, n2}, flow});
          }
        }
      }
    }
    slot.loss.assign(D, 0.0);
    slot.ingress.assign(D, 0.0);
    for (int d = 0; d < D; ++d) {
      slot.loss[d] = value(loss_name(d, k));
      if (topo.is_fiber(d)) slot.ingress[d] = value(ingress_name(d, k));
    }
    plan.slots.push_back(std::move(slot));
  }
  return plan;
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::kShape: return "shape";
    case ViolationKind::kConnectivity: return "connectivity";
    case ViolationKind::kInterfaceConflict: return "interface-conflict";
    case ViolationKind::kCapacity: return "capacity";
    case ViolationKind::kConservation: return "conservation";
    case ViolationKind::kLossBounds: return "loss-bounds";
    case ViolationKind::kLossThreshold: return "loss-threshold";
    case ViolationKind::kIngress: return "ingress";
    case ViolationKind::kMovement: return "movement";
    case ViolationKind::kDynamics: return "dynamics";
    case ViolationKind::kAlignment: return "alignment";
    case ViolationKind::kBoundary: return "boundary";
  }
  return "unknown";
}

std::vector<Violation> validate_plan(const Scenario& s, const TransitionPlan& plan,
                                     double tol) {
  std::vector<Violation> out;
  auto report = [&out](ViolationKind kind, int k, std::string message) {
    out.push_back({kind, k, std::move(message)});
  };
  const auto& topo = s.topology;
  const int D = topo.num_nodes();
  const int N = topo.interfaces;
  const int K = s.slots;
  const double theta = s.theta();

  if (static_cast<int>(plan.slots.size()) != K) {
    report(ViolationKind::kShape, 0,
           "plan has " + std::to_string(plan.slots.size()) + " slots, scenario " +
               std::to_string(K));
    return out;
  }
  for (int k = 1; k <= K; ++k) {
    const SlotState& slot = plan.slots[k - 1];
    auto dn_shape = [&](const auto& m) {
      if (static_cast<int>(m.size()) != D) return false;
      for (const auto& row : m) {
        if (static_cast<int>(row.size()) != N) return false;
      }
      return true;
    };
    if (!dn_shape(slot.orientation) || !dn_shape(slot.cw) || !dn_shape(slot.ccw) ||
        static_cast<int>(slot.loss.size()) != D ||
        static_cast<int>(slot.ingress.size()) != D) {
      report(ViolationKind::kShape, k, "slot arrays do not match D x N");
      return out;
    }
    for (const LinkFlow& lf : slot.links) {
      const Link& l = lf.link;
      if (l.d < 0 || l.d >= D || l.d2 < 0 || l.d2 >= D || l.n < 0 || l.n >= N ||
          l.n2 < 0 || l.n2 >= N) {
        report(ViolationKind::kShape, k, "link " + describe(l) + " out of range");
        return out;
      }
    }
  }

  for (int k = 1; k <= K; ++k) {
    const SlotState& slot = plan.slots[k - 1];
    std::map<std::pair<int, int>, int> uses;
    std::vector<double> inflow(D, 0.0), outflow(D, 0.0);
    for (const LinkFlow& lf : slot.links) {
      const Link& l = lf.link;
      if (l.d == l.d2 || !topo.delta[l.d][l.d2]) {
        report(ViolationKind::kConnectivity, k, "link " + describe(l) + " not allowed");
      }
      ++uses[{l.d, l.n}];
      ++uses[{l.d2, l.n2}];
      const double cap = l.d == l.d2 ? 0.0 : topo.r[l.d][l.d2];
      if (lf.flow > cap + tol) {
        std::ostringstream os;
        os << "flow " << lf.flow << " on " << describe(l) << " at k=" << k
           << " exceeds capacity " << cap;
        report(ViolationKind::kCapacity, k, os.str());
      }
      if (lf.flow < -tol) {
        report(ViolationKind::kCapacity, k, "negative flow on " + describe(l));
      }
      outflow[l.d] += lf.flow;
      inflow[l.d2] += lf.flow;
    }
    for (const auto& [key, count] : uses) {
      if (count > 1) {
        report(ViolationKind::kInterfaceConflict, k,
               "interface " + describe_iface(key.first, key.second) + " used by " +
                   std::to_string(count) + " links");
      }
    }
    double total_ingress = 0.0, total_loss = 0.0;
    for (int d = 0; d < D; ++d) {
      const double l = slot.loss[d];
      if (l < -tol || l > s.demand[d] + tol) {
        std::ostringstream os;
        os << "loss " << l << " at node " << d << " outside [0, " << s.demand[d] << "]";
        report(ViolationKind::kLossBounds, k, os.str());
      }
      const double in = slot.ingress[d];
      if (!topo.is_fiber(d) && std::abs(in) > tol) {
        report(ViolationKind::kIngress, k,
               "ingress at non-fiber node " + std::to_string(d));
      }
      if (in < -tol) {
        report(ViolationKind::kIngress, k, "negative ingress at node " + std::to_string(d));
      }
      total_ingress += in;
      total_loss += l;
      const double residual = inflow[d] + l + in - outflow[d] - s.demand[d];
      const double scale = 1.0 + s.demand[d] + inflow[d] + outflow[d];
      if (std::abs(residual) > tol * scale) {
        std::ostringstream os;
        os << "node " << d << " flow balance off by " << residual;
        report(ViolationKind::kConservation, k, os.str());
      }
    }
    const double total_demand = s.total_demand();
    if (total_ingress > total_demand + tol * (1.0 + total_demand)) {
      report(ViolationKind::kIngress, k, "total ingress exceeds total demand");
    }
    const double cap = s.loss_threshold[k - 1] * total_demand;
    if (total_loss > cap + tol * (1.0 + total_demand)) {
      std::ostringstream os;
      os << "total loss " << total_loss << " exceeds threshold " << cap;
      report(ViolationKind::kLossThreshold, k, os.str());
    }

    for (int d = 0; d < D; ++d) {
      for (int n = 0; n < N; ++n) {
        const int cw = slot.cw[d][n], ccw = slot.ccw[d][n];
        if (cw < 0 || cw > 1 || ccw < 0 || ccw > 1 || cw + ccw > 1) {
          report(ViolationKind::kMovement, k,
                 "interface " + describe_iface(d, n) + " moves both ways");
        }
        if (k < K) {
          const double expected = slot.orientation[d][n] + (cw - ccw) * theta;
          const double next = plan.slots[k].orientation[d][n];
          if (std::abs(next - expected) > tol) {
            std::ostringstream os;
            os << "interface " << describe_iface(d, n) << " turns from "
               << slot.orientation[d][n] << " to " << next;
            report(ViolationKind::kDynamics, k, os.str());
          }
        }
      }
    }
    for (const LinkFlow& lf : slot.links) {
      const Link& l = lf.link;
      if (l.d == l.d2 || !topo.delta[l.d][l.d2]) continue;
      const double gap_a = angular_gap(slot.orientation[l.d][l.n], topo.v[l.d][l.d2]);
      const double gap_b = angular_gap(slot.orientation[l.d2][l.n2], topo.v[l.d2][l.d]);
      if (gap_a > tol || gap_b > tol) {
        report(ViolationKind::kAlignment, k, "link " + describe(l) + " not aligned");
      }
    }
  }

  auto link_set = [](const SlotState& slot) {
    std::set<Link> links;
    for (const LinkFlow& lf : slot.links) links.insert(lf.link);
    return links;
  };
  if (link_set(plan.slots.front()) != std::set<Link>(s.x_init.begin(), s.x_init.end())) {
    report(ViolationKind::kBoundary, 1, "first slot differs from the initial links");
  }
  if (link_set(plan.slots.back()) != std::set<Link>(s.x_end.begin(), s.x_end.end())) {
    report(ViolationKind::kBoundary, K, "last slot differs from the final links");
  }
  for (int d = 0; d < D; ++d) {
    for (int n = 0; n < N; ++n) {
      if (std::abs(plan.slots.front().orientation[d][n] - s.a0[d][n]) > tol) {
        report(ViolationKind::kBoundary, 1,
               "interface " + describe_iface(d, n) + " does not start at its initial angle");
      }
    }
  }
  return out;
}

PlanMetrics compute_metrics(const Scenario& s, const TransitionPlan& plan,
                            double lossless_tol) {
  PlanMetrics m;
  const double total_demand = s.total_demand();
  const int K = static_cast<int>(plan.slots.size());
  for (int k = 1; k <= K; ++k) {
    const SlotState& slot = plan.slots[k - 1];
    SlotMetrics row;
    row.k = k;
    for (double l : slot.loss) row.loss_mbps += l;
    row.loss_fraction = total_demand > 0 ? row.loss_mbps / total_demand : 0.0;
    row.active_links = static_cast<int>(slot.links.size());
    m.total_loss_mb += s.tau * row.loss_mbps;
    m.weighted_loss += scenario::weight(s.weight, k) * row.loss_mbps;
    m.slots.push_back(row);
  }
  m.total_loss_gb = m.total_loss_mb / 8000.0;
  int first = K + 1;
  for (int k = K; k >= 1; --k) {
    if (m.slots[k - 1].loss_mbps > lossless_tol) break;
    first = k;
  }
  if (first <= K) m.slots_to_lossless = first;
  return m;
}

TransitionPlan extend_plan(const TransitionPlan& plan) {
  TransitionPlan out = plan;
  if (out.slots.empty()) return out;
  for (auto* flags : {&out.slots.back().cw, &out.slots.back().ccw}) {
    for (auto& row : *flags) std::fill(row.begin(), row.end(), 0);
  }
  out.slots.push_back(out.slots.back());
  return out;
}

namespace {

// Full assignment of `built` that follows the links, orientations and
// movements of `p`; empty when none is found.
std::vector<double> complete_plan(const Scenario& s, const BuiltModel& built,
                                  const TransitionPlan& p, solver::SolveConfig config) {
  milp::Model model = built.model;
  auto fix = [&model](const std::string& name, double value) {
    if (const auto id = model.find_variable(name)) model.set_bounds(*id, value, value);
  };
  const auto& t = s.topology;
  for (int k = 1; k <= s.slots; ++k) {
    const SlotState& slot = p.slots[k - 1];
    std::set<Link> active;
    for (const LinkFlow& lf : slot.links) active.insert(lf.link);
    for (int d = 0; d < t.num_nodes(); ++d) {
      for (int n = 0; n < t.interfaces; ++n) {
        fix(a_name(d, n, k), slot.orientation[d][n]);
        fix(cw_name(d, n, k), slot.cw[d][n]);
        fix(ccw_name(d, n, k), slot.ccw[d][n]);
        for (int d2 = 0; d2 < t.num_nodes(); ++d2) {
          for (int n2 = 0; n2 < t.interfaces; ++n2) {
            fix(x_name(d, n, d2, n2, k), active.count({d, n, d2, n2}) ? 1.0 : 0.0);
          }
        }
      }
    }
  }
  config.start.clear();
  config.node_limit = std::min<std::int64_t>(config.node_limit, 200);
  const solver::Solution sol = solver::solve_milp(model, config);
  return sol.values;
}

}  // namespace

PlanResult plan(const Scenario& s, const solver::SolveConfig& config,
                const BuildOptions& options) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  auto remaining = [&]() {
    return config.time_limit_s - std::chrono::duration<double>(Clock::now() - start).count();
  };
  PlanResult result;
  const BuiltModel built = build_model(s, options);
  solver::SolveConfig main = config;
  const bool shorter_fits =
      s.slots > 1 &&
      scenario::min_horizon(s.a0, s.x_end, s.topology.v, s.theta()) <= s.slots - 1;
  if (options.extend_shorter_horizon && !options.static_slot && shorter_fits &&
      config.start.empty()) {
    // The K-1 threshold profile keeps the extended plan inside this one.
    Scenario shorter = s;
    shorter.slots = s.slots - 1;
    shorter.loss_threshold.pop_back();
    double& last = shorter.loss_threshold.back();
    last = std::min(last, s.loss_threshold.back());
    solver::SolveConfig sub = config;
    sub.time_limit_s = 0.5 * config.time_limit_s;
    if (sub.node_limit != std::numeric_limits<std::int64_t>::max()) sub.node_limit /= 2;
    sub.node_limit = std::max<std::int64_t>(sub.node_limit, 1);
    const PlanResult prior = plan(shorter, sub, options);
    if (prior.plan && prior.violations.empty() && remaining() > 0.0) {
      solver::SolveConfig fill = config;
      fill.time_limit_s = std::max(1e-3, 0.1 * remaining());
      main.start = complete_plan(s, built, extend_plan(*prior.plan), fill);
    }
  }
  main.time_limit_s = std::max(1e-3, remaining());
  result.solution = solver::solve_milp(built.model, main);
  result.solution.stats.wall_time_s = std::chrono::duration<double>(Clock::now() - start).count();
  if (result.solution.has_assignment()) {
    result.plan = extract_plan(s, built.model, result.solution);
    result.violations = validate_plan(s, *result.plan);
  }
  return result;
}

}  // namespace meshreconf::planner

namespace meshreconf::scenario {

LinkConfig static_snapshot(const Topology& topology, const std::vector<double>& demand,
                           const solver::SolveConfig& config) {
  Scenario s;
  s.topology = topology;
  s.demand = demand;
  s.slots = 1;
  s.loss_threshold = {1.0};
  s.a0.assign(topology.num_nodes(), std::vector<double>(topology.interfaces, 0.0));
  planner::BuildOptions options;
  options.static_slot = true;
  const planner::BuiltModel built = planner::build_model(s, options);
  const solver::Solution sol = solver::solve_milp(built.model, config);
  if (!sol.has_assignment()) {
    throw SnapshotError(sol.status, "static snapshot solve failed: " +
                        std::string(solver::to_string(sol.status)));
  }
  const milp::Model& m = built.model;
  const int D = topology.num_nodes();
  const int N = topology.interfaces;
  LinkConfig links;
  for (int d = 0; d < D; ++d) {
    for (int n = 0; n < N; ++n) {
      for (int d2 = 0; d2 < D; ++d2) {
        if (!topology.delta[d][d2]) continue;
        for (int n2 = 0; n2 < N; ++n2) {
          const auto x = m.find_variable(planner::x_name(d, n, d2, n2, 1));
          const auto z = m.find_variable(planner::z_name(d, n, d2, n2, 1));
          if (sol.values[x->index] > 0.5 && sol.values[z->index] > 1e-6) {
            links.push_back({d, n, d2, n2});
          }
        }
      }
    }
  }
  validate_links(links, topology, "snapshot");
  return canonical(std::move(links));
}

}  // namespace meshreconf::scenario
