#pragma once

// Exact joint Markov chain of the buffer occupancies under the hop-by-hop
// ACK scheme. Joint states are indexed mixed-radix over the digits
// (m_i + 1), with node v_1 as the most significant digit.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "linenet/approx_solver.hpp"
#include "linenet/error.hpp"
#include "linenet/network_config.hpp"

namespace linenet {

// X_i = 1 when link i delivers in this epoch. outcomes[0] is link 1.
struct ErasurePattern {
  std::vector<int> outcomes;
};

// Y_i = 1 when a packet moves across link i in this epoch.
struct TransferVector {
  std::vector<int> transfers;

  bool operator==(const TransferVector&) const = default;
};

using TransitionMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct ExactChainResult {
  std::vector<double> stationary;  // by mixed-radix state index
  double throughput = 0.0;
  std::vector<OccupancyPMF> marginals;  // nodes v_1..v_{h-1}
};

struct ExactChainOptions {
  std::uint64_t state_cap = std::uint64_t{1} << 20;
  std::size_t dense_limit = 2000;
  double tolerance = 1e-12;  // L1 residual of pi P - pi for power iteration
  long max_iterations = 2000000;
};

// --- state indexing -------------------------------------------------------

inline std::uint64_t state_index(const NetworkConfig& config, const JointState& state) {
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < config.buffers.size(); ++i) {
    index = index * static_cast<std::uint64_t>(config.buffers[i] + 1) +
            static_cast<std::uint64_t>(state.occupancies[i]);
  }
  return index;
}

inline JointState state_from_index(const NetworkConfig& config, std::uint64_t index) {
  JointState state;
  state.occupancies.assign(config.buffers.size(), 0);
  for (std::size_t i = config.buffers.size(); i-- > 0;) {
    const auto radix = static_cast<std::uint64_t>(config.buffers[i] + 1);
    state.occupancies[i] = static_cast<int>(index % radix);
    index /= radix;
  }
  return state;
}

// --- one-epoch dynamics ---------------------------------------------------

inline TransferVector transfer_vector(const JointState& state, const ErasurePattern& pattern,
                                      const NetworkConfig& config) {
  const int h = config.hops;
  const auto& n = state.occupancies;
  const auto& x = pattern.outcomes;
  if (static_cast<int>(x.size()) != h || static_cast<int>(n.size()) != h - 1) {
    throw ConfigError("state or erasure pattern has the wrong length");
  }
  auto positive = [](int v) { return v > 0 ? 1 : 0; };

  TransferVector y;
  y.transfers.assign(static_cast<std::size_t>(h), 0);
  // Link h: the last relay sends whenever it holds a packet.
  y.transfers[h - 1] = positive(n[h - 2]) * x[h - 1];
  // Link i enters relay v_i; the source (i = 1) always has a packet.
  for (int i = h - 1; i >= 1; --i) {
    const int sender_ready = (i == 1) ? 1 : positive(n[i - 2]);
    const int room = positive(config.buffers[i - 1] - n[i - 1] + y.transfers[i]);
    y.transfers[i - 1] = sender_ready * x[i - 1] * room;
  }
  return y;
}

inline JointState next_state(const JointState& state, const TransferVector& transfer,
                             const NetworkConfig& config) {
  JointState next = state;
  for (std::size_t i = 0; i < next.occupancies.size(); ++i) {
    next.occupancies[i] += transfer.transfers[i] - transfer.transfers[i + 1];
    if (next.occupancies[i] < 0 || next.occupancies[i] > config.buffers[i]) {
      throw InternalError("buffer bound violated at node " + std::to_string(i + 1));
    }
  }
  return next;
}

// --- chain construction ---------------------------------------------------

inline TransitionMatrix build_transition_matrix(const NetworkConfig& config,
                                                std::uint64_t state_cap = std::uint64_t{1} << 20) {
  const std::uint64_t count = state_count(config);
  if (count > state_cap) {
    throw StateCapExceeded("joint chain has " + std::to_string(count) +
                               " states, above the cap of " + std::to_string(state_cap),
                           count);
  }
  const int h = config.hops;
  if (h > 30) throw ConfigError("too many hops to enumerate erasure patterns");

  // Patterns with zero probability are dropped up front.
  struct WeightedPattern {
    ErasurePattern pattern;
    double weight;
  };
  std::vector<WeightedPattern> patterns;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << h); ++bits) {
    WeightedPattern wp{ErasurePattern{std::vector<int>(static_cast<std::size_t>(h))}, 1.0};
    for (int i = 0; i < h; ++i) {
      const int delivered = static_cast<int>((bits >> i) & 1U);
      wp.pattern.outcomes[i] = delivered;
      wp.weight *= delivered ? 1.0 - config.erasures[i] : config.erasures[i];
    }
    if (wp.weight > 0.0) patterns.push_back(std::move(wp));
  }

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(count) * std::min<std::size_t>(patterns.size(), 8));
  for (std::uint64_t s = 0; s < count; ++s) {
    const JointState state = state_from_index(config, s);
    for (const auto& wp : patterns) {
      const JointState next = next_state(state, transfer_vector(state, wp.pattern, config), config);
      triplets.emplace_back(static_cast<int>(s), static_cast<int>(state_index(config, next)),
                            wp.weight);
    }
  }
  TransitionMatrix matrix(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(count));
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  matrix.makeCompressed();
  return matrix;
}

inline void write_coo(std::ostream& os, const TransitionMatrix& matrix) {
  const auto old_precision = os.precision(17);
  for (Eigen::Index row = 0; row < matrix.outerSize(); ++row) {
    for (TransitionMatrix::InnerIterator it(matrix, row); it; ++it) {
      os << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
    }
  }
  os.precision(old_precision);
}

// --- stationary distribution ---------------------------------------------

namespace detail {

inline double stationary_residual(const TransitionMatrix& matrix, const Eigen::VectorXd& pi) {
  const Eigen::VectorXd next = matrix.transpose() * pi;
  return (next - pi).lpNorm<1>();
}

inline std::vector<double> to_probabilities(const Eigen::VectorXd& v) {
  std::vector<double> out(static_cast<std::size_t>(v.size()));
  double total = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out[static_cast<std::size_t>(i)] = std::max(0.0, v[i]);
    total += out[static_cast<std::size_t>(i)];
  }
  for (double& p : out) p /= total;
  return out;
}

// Solves pi (P - I) = 0, sum(pi) = 1. Empty result when the system is
// singular (more than one recurrent class).
inline std::vector<double> dense_stationary(const TransitionMatrix& matrix) {
  const Eigen::Index n = matrix.rows();
  Eigen::MatrixXd a = Eigen::MatrixXd(matrix).transpose();
  a -= Eigen::MatrixXd::Identity(n, n);
  a.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b[n - 1] = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (!lu.isInvertible()) return {};
  return to_probabilities(lu.solve(b));
}

}  // namespace detail

// Stationary distribution of a row-stochastic matrix. Small chains use a
// dense solve; larger ones use power iteration from the uniform vector on
// the lazy chain (P + I) / 2, which shares P's stationary vectors and is
// aperiodic even when P has no self-loops.
inline std::vector<double> stationary(const TransitionMatrix& matrix,
                                      const ExactChainOptions& options = {}) {
  const Eigen::Index n = matrix.rows();
  if (n == 0) throw ConfigError("empty transition matrix");
  if (static_cast<std::size_t>(n) <= options.dense_limit) {
    std::vector<double> pi = detail::dense_stationary(matrix);
    if (!pi.empty()) return pi;
  }

  const TransitionMatrix transposed = matrix.transpose();
  Eigen::VectorXd pi = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd next(n);
  double residual = std::numeric_limits<double>::infinity();
  for (long it = 0; it < options.max_iterations; ++it) {
    next.noalias() = transposed * pi;
    residual = (next - pi).lpNorm<1>();
    if (residual <= options.tolerance) return detail::to_probabilities(next);
    pi = 0.5 * (pi + next);
    pi /= pi.sum();
  }
  throw ConvergenceError("power iteration did not converge (residual " +
                             std::to_string(residual) + ")",
                         residual, options.max_iterations);
}

inline std::vector<double> stationary(const std::vector<std::vector<double>>& dense,
                                      const ExactChainOptions& options = {}) {
  const auto n = static_cast<Eigen::Index>(dense.size());
  TransitionMatrix matrix(n, n);
  std::vector<Eigen::Triplet<double>> triplets;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = dense[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      if (v != 0.0) triplets.emplace_back(static_cast<int>(i), static_cast<int>(j), v);
    }
  }
  matrix.setFromTriplets(triplets.begin(), triplets.end());
  return stationary(matrix, options);
}

inline double exact_throughput(const NetworkConfig& config, const std::vector<double>& pi) {
  // The last relay's digit is the least significant one.
  const auto radix = static_cast<std::uint64_t>(config.buffers.back() + 1);
  double nonempty = 0.0;
  for (std::uint64_t s = 0; s < pi.size(); ++s) {
    if (s % radix != 0) nonempty += pi[s];
  }
  return nonempty * (1.0 - config.erasures.back());
}

inline std::vector<OccupancyPMF> exact_marginals(const NetworkConfig& config,
                                                 const std::vector<double>& pi) {
  std::vector<OccupancyPMF> marginals;
  for (int m : config.buffers) {
    marginals.push_back(OccupancyPMF{std::vector<double>(static_cast<std::size_t>(m) + 1, 0.0)});
  }
  for (std::uint64_t s = 0; s < pi.size(); ++s) {
    const JointState state = state_from_index(config, s);
    for (std::size_t i = 0; i < marginals.size(); ++i) {
      marginals[i].masses[static_cast<std::size_t>(state.occupancies[i])] += pi[s];
    }
  }
  return marginals;
}

inline ExactChainResult solve_exact(const NetworkConfig& config,
                                    const ExactChainOptions& options = {}) {
  const TransitionMatrix matrix = build_transition_matrix(config, options.state_cap);
  ExactChainResult result;
  result.stationary = stationary(matrix, options);
  result.throughput = exact_throughput(config, result.stationary);
  result.marginals = exact_marginals(config, result.stationary);
  return result;
}

inline void to_json(nlohmann::json& j, const ExactChainResult& result) {
  j = nlohmann::json{{"throughput", result.throughput},
                     {"states", result.stationary.size()},
                     {"marginals", result.marginals},
                     {"stationary", result.stationary}};
}

}  // namespace linenet
