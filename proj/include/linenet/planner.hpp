#pragma once

// Congestion classification of relays and greedy buffer allocation driven by
// the approximate solver.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linenet/approx_solver.hpp"
#include "linenet/delay_model.hpp"
#include "linenet/error.hpp"
#include "linenet/network_config.hpp"

namespace linenet {

inline constexpr double kDefaultRateTolerance = 0.02;

// Type1: offered faster than it can forward (congested, usually full).
// Type2: balanced. Type3: forwards faster than it is fed (starved).
enum class NodeType { kType1 = 1, kType2 = 2, kType3 = 3 };

inline std::string to_string(NodeType t) { return "Type" + std::to_string(static_cast<int>(t)); }

struct NodeClass {
  int node = 0;  // 1-based relay index
  NodeType type = NodeType::kType2;
  double in_rate = 0.0;
  double out_rate = 0.0;
};

inline std::vector<NodeClass> classify(const NetworkConfig& config, const ApproxSolution& sol,
                                       double delta = kDefaultRateTolerance) {
  std::vector<NodeClass> out;
  for (int i = 1; i < config.hops; ++i) {
    const double pb_next = sol.blocking_probs[static_cast<std::size_t>(i)];
    NodeClass c;
    c.node = i;
    c.in_rate = sol.arrival_rates[static_cast<std::size_t>(i - 1)];
    c.out_rate = (1.0 - config.erasures[static_cast<std::size_t>(i)]) * (1.0 - pb_next);
    if (c.in_rate > c.out_rate + delta) {
      c.type = NodeType::kType1;
    } else if (c.in_rate < c.out_rate - delta) {
      c.type = NodeType::kType3;
    } else {
      c.type = NodeType::kType2;
    }
    out.push_back(c);
  }
  return out;
}

struct PlannerOptions {
  double delta = kDefaultRateTolerance;
  SolverOptions solver;
  DelayOptions delay;
};

// Capacity and analytic mean delay of one configuration. The mean delay is
// +inf when the network delivers nothing.
struct OperatingPoint {
  double capacity = 0.0;
  double mean_delay = std::numeric_limits<double>::infinity();
};

inline OperatingPoint evaluate(const NetworkConfig& config, const PlannerOptions& options = {}) {
  const ApproxSolution sol = solve(config, options.solver);
  OperatingPoint point;
  point.capacity = sol.capacity;
  try {
    point.mean_delay = total_delay(config, sol, options.delay).mean();
  } catch (const DegenerateError&) {
    point.mean_delay = std::numeric_limits<double>::infinity();
  }
  return point;
}

struct AllocationStep {
  int node = 0;  // relay that received the unit
  double capacity = 0.0;
  double mean_delay = 0.0;
};

struct AllocationPlan {
  std::vector<int> increments;  // per relay
  std::vector<int> buffers;     // resulting buffer sizes
  OperatingPoint baseline;
  double capacity = 0.0;
  double mean_delay = 0.0;
  std::vector<AllocationStep> trajectory;
};

// Hands out `budget` extra buffer slots one at a time, each to the relay
// whose increment raises the predicted capacity the most (lowest index on
// ties).
inline AllocationPlan allocate(const NetworkConfig& config, int budget,
                               const PlannerOptions& options = {}) {
  if (budget < 0) throw ConfigError("allocation budget must be non-negative");
  NetworkConfig current = validate(config);
  AllocationPlan plan;
  plan.increments.assign(current.buffers.size(), 0);
  plan.baseline = evaluate(current, options);
  plan.capacity = plan.baseline.capacity;
  plan.mean_delay = plan.baseline.mean_delay;

  constexpr double kTieTolerance = 1e-12;
  for (int step = 0; step < budget; ++step) {
    int best = -1;
    double best_capacity = -1.0;
    for (std::size_t i = 0; i < current.buffers.size(); ++i) {
      NetworkConfig candidate = current;
      ++candidate.buffers[i];
      const double cap = solve(candidate, options.solver).capacity;
      if (cap > best_capacity + kTieTolerance) {
        best_capacity = cap;
        best = static_cast<int>(i);
      }
    }
    ++current.buffers[static_cast<std::size_t>(best)];
    ++plan.increments[static_cast<std::size_t>(best)];
    const OperatingPoint point = evaluate(current, options);
    plan.trajectory.push_back(AllocationStep{best + 1, point.capacity, point.mean_delay});
    plan.capacity = point.capacity;
    plan.mean_delay = point.mean_delay;
  }
  plan.buffers = current.buffers;
  return plan;
}

struct TradeoffRow {
  int buffer = 0;
  double capacity = 0.0;
  double mean_delay = 0.0;
};

// Re-solves the network for each buffer size of relay `node` (1-based),
// holding every other relay fixed.
inline std::vector<TradeoffRow> tradeoff_sweep(const NetworkConfig& config, int node,
                                               const std::vector<int>& buffer_values,
                                               const PlannerOptions& options = {}) {
  if (node < 1 || node > config.hops - 1) {
    throw ConfigError("relay index out of range: " + std::to_string(node));
  }
  if (buffer_values.empty()) throw ConfigError("empty buffer range");
  std::vector<TradeoffRow> rows;
  for (int m : buffer_values) {
    NetworkConfig c = config;
    c.buffers[static_cast<std::size_t>(node - 1)] = m;
    const OperatingPoint point = evaluate(validate(c), options);
    rows.push_back(TradeoffRow{m, point.capacity, point.mean_delay});
  }
  return rows;
}

inline void to_json(nlohmann::json& j, const NodeClass& c) {
  j = nlohmann::json{{"node", c.node},
                     {"type", to_string(c.type)},
                     {"in_rate", c.in_rate},
                     {"out_rate", c.out_rate}};
}

inline void to_json(nlohmann::json& j, const AllocationStep& s) {
  j = nlohmann::json{{"node", s.node}, {"capacity", s.capacity}, {"mean_delay", s.mean_delay}};
}

inline void to_json(nlohmann::json& j, const AllocationPlan& p) {
  j = nlohmann::json{{"increments", p.increments},
                     {"buffers", p.buffers},
                     {"baseline_capacity", p.baseline.capacity},
                     {"baseline_mean_delay", p.baseline.mean_delay},
                     {"capacity", p.capacity},
                     {"mean_delay", p.mean_delay},
                     {"trajectory", p.trajectory}};
}

inline void to_json(nlohmann::json& j, const TradeoffRow& r) {
  j = nlohmann::json{{"buffer", r.buffer}, {"capacity", r.capacity}, {"mean_delay", r.mean_delay}};
}

}  // namespace linenet
