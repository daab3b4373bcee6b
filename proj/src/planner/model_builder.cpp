#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "meshreconf/geometry/geometry.hpp"
#include "meshreconf/planner/planner.hpp"

namespace meshreconf::planner {

using milp::Sense;
using milp::Term;
using milp::VarId;
using scenario::Link;
using scenario::Scenario;

namespace {

std::string join(std::initializer_list<int> parts) {
  std::string out;
  for (int p : parts) {
    out += '_';
    out += std::to_string(p);
  }
  return out;
}

// Angles reachable by interface (d, n) at slot k, as step offsets j from the
// initial orientation (a = A0 + j theta), that can still reach the final
// orientation by slot K.
std::vector<int> reachable_steps(const Scenario& s, int d, int n, int k,
                                 const std::optional<double>& target) {
  const double theta = s.theta();
  const int K = s.slots;
  const double a0 = s.a0[d][n];
  const int turns = static_cast<int>(std::lround(360.0 / theta));
  std::vector<int> steps;
  for (int j = -(k - 1); j <= k - 1; ++j) {
    if (target) {
      // Need some j_end with A0 + j_end theta == target (mod 360),
      // |j_end| <= K - 1 and |j_end - j| <= K - k.
      const double offset = geometry::wrap_angle(*target - a0) / theta;
      const int base = static_cast<int>(std::lround(offset));
      const int reach = K / turns + 2;
      bool ok = false;
      for (int t = -reach; t <= reach && !ok; ++t) {
        const int j_end = base + t * turns;
        ok = std::abs(j_end) <= K - 1 && std::abs(j_end - j) <= K - k;
      }
      if (!ok) continue;
    }
    steps.push_back(j);
  }
  return steps;
}

bool angle_reachable(const Scenario& s, int d, int n, int k, double angle,
                     const std::optional<double>& target) {
  for (int j : reachable_steps(s, d, n, k, target)) {
    if (geometry::wrap_angle(s.a0[d][n] + j * s.theta()) == angle) return true;
  }
  return false;
}

// Unwrapped orientations at slot k that point at `angle`.
std::vector<double> aligned_orientations(const Scenario& s, int d, int n, int k,
                                         double angle,
                                         const std::optional<double>& target) {
  std::vector<double> out;
  for (int j : reachable_steps(s, d, n, k, target)) {
    const double a = s.a0[d][n] + j * s.theta();
    if (geometry::wrap_angle(a) == angle) out.push_back(a);
  }
  return out;
}

}  // namespace

std::string x_name(int d, int n, int d2, int n2, int k) {
  return "x" + join({d, n, d2, n2, k});
}
std::string z_name(int d, int n, int d2, int n2, int k) {
  return "z" + join({d, n, d2, n2, k});
}
std::string r_name(int d, int n, int d2, int n2, int k) {
  return "r" + join({d, n, d2, n2, k});
}
std::string p_name(int d, int n, int d2, int k) { return "p" + join({d, n, d2, k}); }
std::string a_name(int d, int n, int k) { return "a" + join({d, n, k}); }
std::string beta_name(int d, int n, int k) { return "b" + join({d, n, k}); }
std::string cw_name(int d, int n, int k) { return "cw" + join({d, n, k}); }
std::string ccw_name(int d, int n, int k) { return "ccw" + join({d, n, k}); }
std::string loss_name(int d, int k) { return "l" + join({d, k}); }
std::string ingress_name(int d, int k) { return "in" + join({d, k}); }

AngleRange orientation_range(const Scenario& s, int d, int n, int k) {
  const double span = (k - 1) * s.theta();
  return {s.a0[d][n] - span, s.a0[d][n] + span};
}

double big_m_value(const Scenario& s) {
  const auto& topo = s.topology;
  const int D = topo.num_nodes();
  double m = 0.0;
  for (int d = 0; d < D; ++d) {
    std::vector<double> targets;
    for (int e = 0; e < D; ++e) {
      if (topo.delta[d][e]) targets.push_back(topo.v[d][e]);
    }
    if (targets.empty()) continue;
    // Aligned with one neighbor: the other rows see differences of bearings.
    for (double v1 : targets) {
      for (double v2 : targets) m = std::max(m, std::abs(v1 - v2));
    }
    // Aligned with none: beta = floor(a / 360) leaves a mod 360 - V.
    for (int n = 0; n < topo.interfaces; ++n) {
      for (int j = -(s.slots - 1); j <= s.slots - 1; ++j) {
        const double angle = geometry::wrap_angle(s.a0[d][n] + j * s.theta());
        for (double v : targets) m = std::max(m, std::abs(angle - v));
      }
    }
  }
  return std::max(m, s.theta());
}

BuiltModel build_model(const Scenario& s, const BuildOptions& options) {
  s.validate();
  const auto& topo = s.topology;
  const int D = topo.num_nodes();
  const int N = topo.interfaces;
  const int K = options.static_slot ? 1 : s.slots;
  const double theta = s.theta();
  const bool dynamic = !options.static_slot;

  if (dynamic) {
    const int k_min = scenario::min_horizon(s.a0, s.x_end, topo.v, theta);
    if (s.slots < k_min) {
      throw HorizonError("horizon too short: K=" + std::to_string(s.slots) +
                         " but the final configuration needs at least " +
                         std::to_string(k_min) + " slots");
    }
  }

  BuiltModel out;
  milp::Model& m = out.model;
  const double big_m = options.big_m.value_or(big_m_value(s));
  out.big_m = big_m;

  auto iface = [N](int d, int n) { return d * N + n; };
  auto pair_index = [D, N](int d, int n, int d2, int n2) {
    return ((d * N + n) * D + d2) * N + n2;
  };
  const auto end_target = scenario::required_orientations(topo, s.x_end);

  // Variable creation order doubles as the branching order: aims, links, then
  // movements.
  std::vector<std::vector<VarId>> cw(K + 1), ccw(K + 1), beta(K + 1), angle(K + 1);
  std::vector<std::vector<VarId>> x(K + 1), z(K + 1), r(K + 1), p(K + 1);
  std::vector<std::vector<VarId>> loss(K + 1), ingress(K + 1);

  if (dynamic) {
    for (int k = 1; k <= K; ++k) {
      p[k].assign(D * N * D, VarId{});
      for (int d = 0; d < D; ++d) {
        for (int n = 0; n < N; ++n) {
          for (int d2 = 0; d2 < D; ++d2) {
            if (!topo.delta[d][d2]) continue;
            double ub = 1.0;
            if (options.reachability_bounds &&
                !angle_reachable(s, d, n, k, topo.v[d][d2], end_target[d][n])) {
              ub = 0.0;
            }
            p[k][(d * N + n) * D + d2] = m.add_variable(
                {p_name(d, n, d2, k), milp::Domain::kBinary, 0.0, ub});
          }
        }
      }
    }
  }
  for (int k = 1; k <= K; ++k) {
    x[k].resize(D * N * D * N);
    for (int d = 0; d < D; ++d) {
      for (int n = 0; n < N; ++n) {
        for (int d2 = 0; d2 < D; ++d2) {
          for (int n2 = 0; n2 < N; ++n2) {
            const double ub = topo.delta[d][d2] ? 1.0 : 0.0;
            x[k][pair_index(d, n, d2, n2)] = m.add_variable(
                {x_name(d, n, d2, n2, k), milp::Domain::kBinary, 0.0, ub});
          }
        }
      }
    }
  }
  if (dynamic) {
    for (int k = 1; k <= K; ++k) {
      for (int d = 0; d < D; ++d) {
        for (int n = 0; n < N; ++n) {
          const bool frozen = options.fix_final_movement && k == K;
          cw[k].push_back(m.add_variable(
              {cw_name(d, n, k), milp::Domain::kBinary, 0.0, frozen ? 0.0 : 1.0}));
          ccw[k].push_back(m.add_variable(
              {ccw_name(d, n, k), milp::Domain::kBinary, 0.0, frozen ? 0.0 : 1.0}));
        }
      }
    }
  }
  if (dynamic) {
    for (int k = 1; k <= K; ++k) {
      for (int d = 0; d < D; ++d) {
        for (int n = 0; n < N; ++n) {
          const AngleRange range = orientation_range(s, d, n, k);
          beta[k].push_back(m.add_integer(beta_name(d, n, k),
                                          std::floor(range.lower / 360.0),
                                          std::floor(range.upper / 360.0)));
        }
      }
    }
    for (int k = 1; k <= K; ++k) {
      for (int d = 0; d < D; ++d) {
        for (int n = 0; n < N; ++n) {
          const AngleRange range = orientation_range(s, d, n, k);
          angle[k].push_back(m.add_continuous(a_name(d, n, k), range.lower, range.upper));
        }
      }
    }
  }
  for (int k = 1; k <= K; ++k) {
    z[k].resize(D * N * D * N);
    if (options.explicit_rate) r[k].resize(D * N * D * N);
    for (int d = 0; d < D; ++d) {
      for (int n = 0; n < N; ++n) {
        for (int d2 = 0; d2 < D; ++d2) {
          for (int n2 = 0; n2 < N; ++n2) {
            if (!topo.delta[d][d2]) continue;
            const int idx = pair_index(d, n, d2, n2);
            z[k][idx] = m.add_continuous(z_name(d, n, d2, n2, k), 0.0, topo.r[d][d2]);
            if (options.explicit_rate) {
              r[k][idx] = m.add_continuous(r_name(d, n, d2, n2, k), 0.0, topo.r[d][d2]);
            }
          }
        }
      }
    }
  }
  for (int k = 1; k <= K; ++k) {
    for (int d = 0; d < D; ++d) {
      loss[k].push_back(m.add_continuous(loss_name(d, k), 0.0, s.demand[d]));
    }
    ingress[k].assign(D, VarId{});
    for (int d : topo.fiber_nodes) {
      ingress[k][d] = m.add_continuous(ingress_name(d, k), 0.0, milp::kInfinity);
    }
  }

  // Objective: weighted loss.
  for (int k = 1; k <= K; ++k) {
    const double w = scenario::weight(s.weight, k);
    for (int d = 0; d < D; ++d) m.add_objective_term(w, loss[k][d]);
  }

  const double total_demand = s.total_demand();
  for (int k = 1; k <= K; ++k) {
    const std::string slot = "_" + std::to_string(k);
    // One link per interface, counting both endpoint roles.
    for (int d = 0; d < D; ++d) {
      for (int n = 0; n < N; ++n) {
        std::vector<Term> terms;
        for (int d2 = 0; d2 < D; ++d2) {
          if (!topo.delta[d][d2]) continue;
          for (int n2 = 0; n2 < N; ++n2) {
            terms.push_back({1.0, x[k][pair_index(d, n, d2, n2)]});
            terms.push_back({1.0, x[k][pair_index(d2, n2, d, n)]});
          }
        }
        if (!terms.empty()) {
          m.add_constraint(terms, Sense::kLessEqual, 1.0,
                           "iface" + join({d, n}) + slot);
        }
      }
    }
    // Total ingress bounded by total demand.
    {
      std::vector<Term> terms;
      for (int d : topo.fiber_nodes) terms.push_back({1.0, ingress[k][d]});
      m.add_constraint(terms, Sense::kLessEqual, total_demand, "ingress" + slot);
    }
    // Flow only on active links, up to capacity.
    for (int d = 0; d < D; ++d) {
      for (int n = 0; n < N; ++n) {
        for (int d2 = 0; d2 < D; ++d2) {
          if (!topo.delta[d][d2]) continue;
          for (int n2 = 0; n2 < N; ++n2) {
            const int idx = pair_index(d, n, d2, n2);
            const double cap = topo.r[d][d2];
            const std::string tag = join({d, n, d2, n2}) + slot;
            m.add_constraint({{1.0, z[k][idx]}, {-cap, x[k][idx]}}, Sense::kLessEqual,
                             0.0, "zx" + tag);
            if (options.explicit_rate) {
              m.add_constraint({{1.0, z[k][idx]}, {-1.0, r[k][idx]}},
                               Sense::kLessEqual, 0.0, "zr" + tag);
              // z >= r - (1 - x) R
              m.add_constraint({{1.0, z[k][idx]}, {-1.0, r[k][idx]}, {-cap, x[k][idx]}},
                               Sense::kGreaterEqual, -cap, "zrx" + tag);
            }
          }
        }
      }
    }
    // Loss threshold.
    if (!options.static_slot) {
      const double v = s.loss_threshold[k - 1];
      if (v < 1.0 || options.all_threshold_rows) {
        std::vector<Term> terms;
        for (int d = 0; d < D; ++d) terms.push_back({1.0, loss[k][d]});
        m.add_constraint(terms, Sense::kLessEqual, v * total_demand, "threshold" + slot);
      }
    }
    // Flow conservation: in + loss (+ ingress) = out + demand.
    for (int d = 0; d < D; ++d) {
      std::vector<Term> terms;
      for (int d2 = 0; d2 < D; ++d2) {
        if (!topo.delta[d][d2]) continue;
        for (int n = 0; n < N; ++n) {
          for (int n2 = 0; n2 < N; ++n2) {
            terms.push_back({1.0, z[k][pair_index(d2, n2, d, n)]});
            terms.push_back({-1.0, z[k][pair_index(d, n, d2, n2)]});
          }
        }
      }
      terms.push_back({1.0, loss[k][d]});
      if (topo.is_fiber(d)) terms.push_back({1.0, ingress[k][d]});
      m.add_constraint(terms, Sense::kEqual, s.demand[d], "flow" + join({d}) + slot);
    }
    if (!dynamic) continue;
    for (int d = 0; d < D; ++d) {
      for (int n = 0; n < N; ++n) {
        const int i = iface(d, n);
        const std::string tag = join({d, n}) + slot;
        m.add_constraint({{1.0, cw[k][i]}, {1.0, ccw[k][i]}}, Sense::kLessEqual, 1.0,
                         "move" + tag);
        if (k < K) {
          // a^{k+1} - a^k - theta psi + theta omega = 0
          m.add_constraint({{1.0, angle[k + 1][i]},
                            {-1.0, angle[k][i]},
                            {-theta, cw[k][i]},
                            {theta, ccw[k][i]}},
                           Sense::kEqual, 0.0, "dyn" + tag);
        }
        std::vector<std::pair<double, VarId>> unique_targets;
        for (int d2 = 0; d2 < D; ++d2) {
          if (!topo.delta[d][d2]) continue;
          const VarId pv = p[k][(d * N + n) * D + d2];
          const double vdd = topo.v[d][d2];
          const std::string ptag = join({d, n, d2}) + slot;
          // a - 360 beta - V <= M (1 - p)
          m.add_constraint({{1.0, angle[k][i]}, {-360.0, beta[k][i]}, {big_m, pv}},
                           Sense::kLessEqual, vdd + big_m, "alup" + ptag);
          // a - 360 beta - V >= -M (1 - p)
          m.add_constraint({{1.0, angle[k][i]}, {-360.0, beta[k][i]}, {-big_m, pv}},
                           Sense::kGreaterEqual, vdd - big_m, "allo" + ptag);
          for (int n2 = 0; n2 < N; ++n2) {
            m.add_constraint({{1.0, x[k][pair_index(d, n, d2, n2)]},
                              {1.0, x[k][pair_index(d2, n2, d, n)]},
                              {-1.0, pv}},
                             Sense::kLessEqual, 0.0, "pair" + join({d, n, d2, n2}) + slot);
          }
          if (!options.alignment_tightening || m.variables()[pv.index].upper <= 0.0) {
            continue;
          }
          const std::optional<double> target =
              options.reachability_bounds ? end_target[d][n] : std::nullopt;
          const auto aligned = aligned_orientations(s, d, n, k, vdd, target);
          if (aligned.size() != 1) continue;
          // Only one reachable orientation points at d2: p = 1 pins a and beta.
          const double a_star = aligned.front();
          const double b_star = std::round((a_star - vdd) / 360.0);
          const AngleRange range = orientation_range(s, d, n, k);
          const milp::Variable& bvar = m.variables()[beta[k][i].index];
          auto pin = [&](VarId var, double lower, double upper, double value,
                         const std::string& name) {
            if (upper > value) {
              m.add_constraint({{1.0, var}, {upper - value, pv}}, Sense::kLessEqual,
                               upper, name + "up" + ptag);
            }
            if (lower < value) {
              m.add_constraint({{1.0, var}, {lower - value, pv}},
                               Sense::kGreaterEqual, lower, name + "lo" + ptag);
            }
          };
          pin(angle[k][i], range.lower, range.upper, a_star, "at");
          pin(beta[k][i], bvar.lower, bvar.upper, b_star, "bt");
          unique_targets.emplace_back(a_star, pv);
        }
        // Pinned to pairwise different orientations: at most one holds.
        std::vector<milp::Term> clique;
        for (const auto& [a_star, pv] : unique_targets) {
          const auto same = std::count_if(
              unique_targets.begin(), unique_targets.end(),
              [&](const auto& other) { return other.first == a_star; });
          if (same == 1) clique.push_back({1.0, pv});
        }
        if (clique.size() >= 2) {
          m.add_constraint(clique, Sense::kLessEqual, 1.0, "aim" + tag);
        }
      }
    }
  }

  if (dynamic) {
    // Boundary conditions on the link sets and the initial orientation.
    const std::set<Link> init(s.x_init.begin(), s.x_init.end());
    const std::set<Link> end(s.x_end.begin(), s.x_end.end());
    for (int d = 0; d < D; ++d) {
      for (int n = 0; n < N; ++n) {
        for (int d2 = 0; d2 < D; ++d2) {
          if (!topo.delta[d][d2]) continue;
          for (int n2 = 0; n2 < N; ++n2) {
            const int idx = pair_index(d, n, d2, n2);
            const std::string tag = join({d, n, d2, n2});
            m.add_constraint({{1.0, x[1][idx]}}, Sense::kEqual,
                             init.count({d, n, d2, n2}) ? 1.0 : 0.0, "init_x" + tag);
            m.add_constraint({{1.0, x[K][idx]}}, Sense::kEqual,
                             end.count({d, n, d2, n2}) ? 1.0 : 0.0, "end_x" + tag);
          }
        }
        m.add_constraint({{1.0, angle[1][iface(d, n)]}}, Sense::kEqual, s.a0[d][n],
                         "init_a" + join({d, n}));
      }
    }
  }
  return out;
}

}  // namespace meshreconf::planner
