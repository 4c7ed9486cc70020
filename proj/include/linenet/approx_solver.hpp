#pragma once

// Decoupled single-node approximation of a finite-buffer erasure line network.
//
// Each relay v_i is modelled as a birth-death chain on {0..m_i}: it climbs
// with probability alpha0 out of the empty state, alpha out of the interior
// states, and falls with probability beta out of every non-empty state. The
// arrival rates R and the blocking probabilities P seen on each link are
// coupled through these chains and solved as a fixed point by alternating a
// forward sweep (R from P) and a backward sweep (P from R).

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linenet/error.hpp"
#include "linenet/network_config.hpp"

namespace linenet {

struct NodeChainParams {
  double alpha0 = 0.0;  // 0 -> 1
  double alpha = 0.0;   // k -> k+1, 1 <= k < m
  double beta = 0.0;    // k -> k-1, 1 <= k <= m
};

struct OccupancyPMF {
  std::vector<double> masses;  // P[n = k], k = 0..m

  int capacity() const { return static_cast<int>(masses.size()) - 1; }
  double full() const { return masses.back(); }
  double empty() const { return masses.front(); }
};

struct ApproxSolution {
  std::vector<double> arrival_rates;   // r_1..r_h
  std::vector<double> blocking_probs;  // p_b1..p_bh, last is 0
  std::vector<OccupancyPMF> occupancies;  // nodes v_1..v_{h-1}
  double capacity = 0.0;
  long iterations = 0;
  bool converged = false;
  double residual = std::numeric_limits<double>::infinity();
  double tolerance = 0.0;
};

struct SolverOptions {
  double tolerance = 1e-10;
  long max_iterations = 100000;
  // Starting blocking vector; all zeros when absent. The last entry is
  // forced to zero regardless.
  std::optional<std::vector<double>> initial_blocking;
};

// Probability that a packet reaching a node fails to leave over the next
// link in a given epoch: the link erases it or the next node blocks it.
inline double departure_failure(double eps_out, double pb_next) {
  return eps_out + (1.0 - eps_out) * pb_next;
}

inline NodeChainParams chain_params(double r, double eps_out, double pb_next) {
  const double stall = departure_failure(eps_out, pb_next);
  return NodeChainParams{r, r * stall, (1.0 - r) * (1.0 - pb_next) * (1.0 - eps_out)};
}

namespace detail {

inline OccupancyPMF point_mass(int m, int k) {
  OccupancyPMF pmf;
  pmf.masses.assign(static_cast<std::size_t>(m) + 1, 0.0);
  pmf.masses[static_cast<std::size_t>(k)] = 1.0;
  return pmf;
}

inline OccupancyPMF normalized(std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  for (double& w : weights) w /= total;
  return OccupancyPMF{std::move(weights)};
}

inline OccupancyPMF log_space_stationary(int m, const NodeChainParams& p) {
  std::vector<double> logw(static_cast<std::size_t>(m) + 1);
  const double step = std::log(p.alpha) - std::log(p.beta);
  logw[0] = 0.0;
  logw[1] = std::log(p.alpha0) - std::log(p.beta);
  for (int k = 2; k <= m; ++k) logw[k] = logw[k - 1] + step;
  const double top = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(logw.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::exp(logw[k] - top);
  return normalized(std::move(w));
}

}  // namespace detail

// Stationary distribution of the (m+1)-state node chain.
inline OccupancyPMF node_stationary(int m, const NodeChainParams& p) {
  if (m < 1) throw ConfigError("node buffer must be at least 1");
  if (p.alpha0 <= 0.0) return detail::point_mass(m, 0);
  if (p.beta <= 0.0) {
    // Recurrent class of the chain without departures.
    return detail::point_mass(m, p.alpha > 0.0 ? m : 1);
  }
  const double ratio = p.alpha / p.beta;
  if (ratio > 1.0 && m > 64) return detail::log_space_stationary(m, p);

  std::vector<double> w(static_cast<std::size_t>(m) + 1);
  w[0] = 1.0;
  w[1] = p.alpha0 / p.beta;
  for (int k = 2; k <= m; ++k) w[k] = w[k - 1] * ratio;
  if (!std::isfinite(w[static_cast<std::size_t>(m)]) || !std::isfinite(w[1])) {
    return detail::log_space_stationary(m, p);
  }
  return detail::normalized(std::move(w));
}

inline OccupancyPMF node_occupancy(int m, double r, double eps_out, double pb_next) {
  return node_stationary(m, chain_params(r, eps_out, pb_next));
}

// Blocking probability a node with buffer m imposes on its upstream sender.
inline double blocking_prob(int m, double r, double eps_out, double pb_next) {
  return departure_failure(eps_out, pb_next) * node_occupancy(m, r, eps_out, pb_next).full();
}

inline std::vector<double> forward_arrival_sweep(const NetworkConfig& config,
                                                 const std::vector<double>& blocking) {
  const int h = config.hops;
  if (static_cast<int>(blocking.size()) != h) {
    throw ConfigError("blocking vector must have one entry per link");
  }
  std::vector<double> r(static_cast<std::size_t>(h));
  r[0] = 1.0 - config.erasures[0];
  for (int i = 1; i < h; ++i) {
    const double eps_out = config.erasures[i];
    const double pb_next = (i == h - 1) ? 0.0 : blocking[i];
    const double empty = node_occupancy(config.buffers[i - 1], r[i - 1], eps_out, pb_next).empty();
    r[i] = (1.0 - eps_out) * (1.0 - empty);
  }
  return r;
}

inline std::vector<double> backward_blocking_sweep(const NetworkConfig& config,
                                                   const std::vector<double>& arrivals) {
  const int h = config.hops;
  if (static_cast<int>(arrivals.size()) != h) {
    throw ConfigError("arrival vector must have one entry per link");
  }
  std::vector<double> pb(static_cast<std::size_t>(h), 0.0);
  for (int i = h - 1; i >= 1; --i) {
    pb[i - 1] = blocking_prob(config.buffers[i - 1], arrivals[i - 1], config.erasures[i], pb[i]);
  }
  return pb;
}

namespace detail {

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = std::abs(a[i] - b[i]);
    if (!(x <= d)) d = x;  // propagates NaN as "not converged"
  }
  return d;
}

inline std::vector<OccupancyPMF> occupancies_at(const NetworkConfig& config,
                                                const std::vector<double>& r,
                                                const std::vector<double>& pb) {
  std::vector<OccupancyPMF> out;
  out.reserve(static_cast<std::size_t>(config.hops - 1));
  for (int i = 1; i < config.hops; ++i) {
    out.push_back(node_occupancy(config.buffers[i - 1], r[i - 1], config.erasures[i], pb[i]));
  }
  return out;
}

}  // namespace detail

// Runs the sweep alternation; never throws on non-convergence (inspect
// `converged`). See solve() for the throwing variant.
inline ApproxSolution iterate_fixed_point(const NetworkConfig& config,
                                          const SolverOptions& options = {}) {
  if (!(options.tolerance > 0.0)) throw ConfigError("tolerance must be positive");
  const auto h = static_cast<std::size_t>(config.hops);

  std::vector<double> pb(h, 0.0);
  if (options.initial_blocking) {
    if (options.initial_blocking->size() != h) {
      throw ConfigError("initial blocking vector must have one entry per link");
    }
    pb = *options.initial_blocking;
    for (double& p : pb) p = std::clamp(p, 0.0, 1.0);
  }
  pb.back() = 0.0;
  std::vector<double> r(h, std::numeric_limits<double>::quiet_NaN());

  ApproxSolution sol;
  sol.tolerance = options.tolerance;
  for (long it = 1; it <= options.max_iterations; ++it) {
    std::vector<double> r_next = forward_arrival_sweep(config, pb);
    std::vector<double> pb_next = backward_blocking_sweep(config, r_next);
    const double residual =
        std::max(detail::max_abs_diff(r_next, r), detail::max_abs_diff(pb_next, pb));
    r = std::move(r_next);
    pb = std::move(pb_next);
    sol.iterations = it;
    sol.residual = residual;
    if (residual < options.tolerance) {
      sol.converged = true;
      break;
    }
  }

  sol.occupancies = detail::occupancies_at(config, r, pb);
  sol.capacity = has_severed_link(config) ? 0.0 : r.back();
  sol.arrival_rates = std::move(r);
  sol.blocking_probs = std::move(pb);
  return sol;
}

// Fixed-point solution of the decoupled model. Throws ConvergenceError when
// the tolerance is not reached within max_iterations.
inline ApproxSolution solve(const NetworkConfig& config, const SolverOptions& options = {}) {
  ApproxSolution sol = iterate_fixed_point(config, options);
  if (!sol.converged) {
    throw ConvergenceError("fixed-point iteration did not converge after " +
                               std::to_string(sol.iterations) +
                               " rounds (residual " + std::to_string(sol.residual) + ")",
                           sol.residual, sol.iterations);
  }
  return sol;
}

// Largest deviation of r_i (1 - p_bi) from the solution's capacity.
inline double flow_conservation_error(const ApproxSolution& sol) {
  double worst = 0.0;
  for (std::size_t i = 0; i < sol.arrival_rates.size(); ++i) {
    const double flow = sol.arrival_rates[i] * (1.0 - sol.blocking_probs[i]);
    worst = std::max(worst, std::abs(flow - sol.capacity));
  }
  return worst;
}

inline double capacity(const ApproxSolution& sol) {
  const double err = flow_conservation_error(sol);
  if (!(err <= 10.0 * sol.tolerance)) {
    throw InternalError("flow conservation violated by " + std::to_string(err));
  }
  return sol.capacity;
}

inline void to_json(nlohmann::json& j, const OccupancyPMF& pmf) { j = pmf.masses; }

inline void to_json(nlohmann::json& j, const ApproxSolution& sol) {
  j = nlohmann::json{{"r", sol.arrival_rates},
                     {"pb", sol.blocking_probs},
                     {"capacity", sol.capacity},
                     {"occupancy", sol.occupancies},
                     {"iterations", sol.iterations},
                     {"converged", sol.converged},
                     {"residual", sol.residual}};
}

}  // namespace linenet
