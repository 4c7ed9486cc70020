#pragma once

// Analytic end-to-end packet delay built on an approximate solution.
//
// A packet spends a geometric number of epochs getting into v_1, then at
// each relay waits for the k packets queued ahead of it plus itself to cross
// the outgoing link, where k is the occupancy seen by the arriving packet.
// Hops are treated as independent and their delays are convolved.

#include <string>
#include <vector>

#include "linenet/approx_solver.hpp"
#include "linenet/discrete_pmf.hpp"
#include "linenet/error.hpp"
#include "linenet/network_config.hpp"

namespace linenet {

// Which occupancy a packet arriving at a relay is taken to observe.
enum class ArrivalView {
  // Occupancy after the relay's own transmission in the arrival epoch.
  kPostDeparture,
  // Time-stationary occupancy at the start of the epoch.
  kTimeStationary,
};

inline const char* to_string(ArrivalView view) {
  return view == ArrivalView::kPostDeparture ? "post-departure" : "time-stationary";
}

struct DelayOptions {
  double tail_budget = kDefaultTailBudget;
  ArrivalView view = ArrivalView::kPostDeparture;
};

// theta_j: occupancy of relay j (1-based) as seen by a packet delivered to it.
inline OccupancyPMF arrival_view_occupancy(const NetworkConfig& config, const ApproxSolution& sol,
                                           int j, ArrivalView view) {
  const OccupancyPMF& phi = sol.occupancies.at(static_cast<std::size_t>(j - 1));
  if (view == ArrivalView::kTimeStationary) return phi;

  // A non-empty relay forwards its head packet with probability `leave`.
  const double pb_next = (j == config.hops - 1) ? 0.0 : sol.blocking_probs[static_cast<std::size_t>(j)];
  const double leave = 1.0 - departure_failure(config.erasures[static_cast<std::size_t>(j)], pb_next);
  const int m = phi.capacity();
  OccupancyPMF theta{std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0)};
  theta.masses[0] = phi.masses[0];
  for (int k = 1; k <= m; ++k) {
    theta.masses[k] += phi.masses[k] * (1.0 - leave);
    theta.masses[k - 1] += phi.masses[k] * leave;
  }
  return theta;
}

// eps'_i = eps_i + theta_i(m_i)(1 - eps_i) for links entering relays;
// eps'_h = eps_h.
inline std::vector<double> effective_erasures(const NetworkConfig& config, const ApproxSolution& sol,
                                              ArrivalView view = ArrivalView::kPostDeparture) {
  std::vector<double> eff(config.erasures);
  for (int i = 1; i < config.hops; ++i) {
    const double full = arrival_view_occupancy(config, sol, i, view).full();
    eff[i - 1] = config.erasures[i - 1] + full * (1.0 - config.erasures[i - 1]);
  }
  return eff;
}

// pi(i) = theta(i) / (1 - theta(m)) for i < m; pi(m) = 0.
inline std::vector<double> arrival_occupancy(const OccupancyPMF& theta) {
  const double full = theta.full();
  if (!(full < 1.0)) throw DegenerateError("node permanently full; delay undefined");
  std::vector<double> pi(theta.masses.size(), 0.0);
  for (std::size_t i = 0; i + 1 < theta.masses.size(); ++i) pi[i] = theta.masses[i] / (1.0 - full);
  return pi;
}

// Delay added by relay j: time from arrival at v_j until delivery at v_{j+1}.
inline DiscretePMF node_delay(int j, const NetworkConfig& config, const ApproxSolution& sol,
                              const DelayOptions& options = {}) {
  if (j < 1 || j > config.hops - 1) throw ConfigError("relay index out of range: " + std::to_string(j));
  const std::vector<double> eff = effective_erasures(config, sol, options.view);
  const double service = 1.0 - eff[static_cast<std::size_t>(j)];
  if (!(service > 0.0)) throw DegenerateError("zero throughput; delay undefined");
  const std::vector<double> pi = arrival_occupancy(arrival_view_occupancy(config, sol, j, options.view));

  std::vector<double> weights;
  std::vector<DiscretePMF> parts;
  for (std::size_t i = 0; i + 1 < pi.size(); ++i) {
    if (pi[i] <= 0.0) continue;
    weights.push_back(pi[i]);
    parts.push_back(k_fold_geometric(static_cast<int>(i) + 1, service, options.tail_budget));
  }
  return mixture(weights, parts);
}

// G(1/(1-eps'_1)) convolved with every relay delay.
inline DiscretePMF total_delay(const NetworkConfig& config, const ApproxSolution& sol,
                               const DelayOptions& options = {}) {
  const std::vector<double> eff = effective_erasures(config, sol, options.view);
  for (double e : eff) {
    if (!(e < 1.0)) throw DegenerateError("zero throughput; delay undefined");
  }
  DiscretePMF total = geometric(1.0 - eff[0], options.tail_budget);
  for (int j = 1; j < config.hops; ++j) total = convolve(total, node_delay(j, config, sol, options));
  return total;
}

}  // namespace linenet
