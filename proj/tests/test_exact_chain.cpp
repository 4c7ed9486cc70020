#include <random>
#include <sstream>

#include <catch_amalgamated.hpp>

#include "linenet/exact_chain.hpp"
#include "oracles.hpp"

using Catch::Approx;
using namespace linenet;

namespace {

NetworkConfig make(std::vector<double> eps, std::vector<int> buffers) {
  NetworkConfig c;
  c.hops = static_cast<int>(eps.size());
  c.erasures = std::move(eps);
  c.buffers = std::move(buffers);
  return c;
}

oracle::Matrix dense_rows(const TransitionMatrix& m) {
  const Eigen::MatrixXd d(m);
  oracle::Matrix out(static_cast<std::size_t>(d.rows()), std::vector<double>(static_cast<std::size_t>(d.cols())));
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < d.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = d(i, j);
  }
  return out;
}

}  // namespace

TEST_CASE("mixed-radix state indexing", "[exact]") {
  const auto c = make({0.1, 0.1, 0.1}, {2, 3});
  CHECK(state_index(c, JointState{{1, 2}}) == 6);
  CHECK(state_from_index(c, 6) == JointState{{1, 2}});
  for (std::uint64_t s = 0; s < state_count(c); ++s) CHECK(state_index(c, state_from_index(c, s)) == s);
}

TEST_CASE("transfer_vector follows the destination-first recursion", "[exact]") {
  const auto c = make({0.5, 0.5}, {1});
  CHECK(transfer_vector(JointState{{1}}, ErasurePattern{{1, 1}}, c) == TransferVector{{1, 1}});
  CHECK(transfer_vector(JointState{{1}}, ErasurePattern{{1, 0}}, c) == TransferVector{{0, 0}});
  CHECK(transfer_vector(JointState{{0}}, ErasurePattern{{1, 1}}, c) == TransferVector{{1, 0}});

  const auto c4 = make({0.2, 0.2, 0.2, 0.2}, {2, 1, 3});
  for (const auto& n : {JointState{{0, 0, 0}}, JointState{{2, 1, 3}}, JointState{{1, 0, 2}}}) {
    CHECK(transfer_vector(n, ErasurePattern{{0, 0, 0, 0}}, c4) == TransferVector{{0, 0, 0, 0}});
  }
  // Full chain of relays all forwarding: every link moves a packet.
  CHECK(transfer_vector(JointState{{2, 1, 3}}, ErasurePattern{{1, 1, 1, 1}}, c4) ==
        TransferVector{{1, 1, 1, 1}});
  // Last link erased: the full middle relay cannot accept from v_1.
  CHECK(transfer_vector(JointState{{2, 1, 3}}, ErasurePattern{{1, 1, 1, 0}}, c4) ==
        TransferVector{{0, 0, 0, 0}});
}

TEST_CASE("next_state applies n + Y_i - Y_{i+1}", "[exact]") {
  const auto c2 = make({0.5, 0.5}, {1});
  CHECK(next_state(JointState{{1}}, TransferVector{{1, 1}}, c2) == JointState{{1}});
  CHECK(next_state(JointState{{1}}, TransferVector{{0, 1}}, c2) == JointState{{0}});
  const auto c3 = make({0.5, 0.5, 0.5}, {1, 1});
  CHECK(next_state(JointState{{0, 0}}, TransferVector{{1, 0, 0}}, c3) == JointState{{1, 0}});
  CHECK_THROWS_AS(next_state(JointState{{1}}, TransferVector{{1, 0}}, c2), InternalError);
  CHECK_THROWS_AS(next_state(JointState{{0}}, TransferVector{{0, 1}}, c2), InternalError);
}

TEST_CASE("two-hop transition matrix by hand", "[exact]") {
  const auto p = dense_rows(build_transition_matrix(make({0.5, 0.5}, {1})));
  CHECK(p == oracle::Matrix{{0.5, 0.5}, {0.25, 0.75}});
}

TEST_CASE("lossless three-hop pipeline is deterministic", "[exact]") {
  const auto p = dense_rows(build_transition_matrix(make({0.0, 0.0, 0.0}, {1, 1})));
  // (0,0) -> (1,0); (0,1) -> (1,0); (1,0) -> (1,1); (1,1) -> (1,1).
  const oracle::Matrix expected{{0, 0, 1, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}, {0, 0, 0, 1}};
  CHECK(p == expected);
}

TEST_CASE("transition matrices are row-stochastic", "[exact][property]") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> eps(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    NetworkConfig c;
    c.hops = 2 + static_cast<int>(rng() % 4);
    for (int i = 0; i < c.hops; ++i) c.erasures.push_back(trial % 5 == 0 ? 0.0 : eps(rng));
    for (int i = 1; i < c.hops; ++i) c.buffers.push_back(1 + static_cast<int>(rng() % 4));
    const auto m = build_transition_matrix(c);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      double row = 0.0;
      for (TransitionMatrix::InnerIterator it(m, r); it; ++it) row += it.value();
      REQUIRE(std::abs(row - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("state cap refuses large chains", "[exact]") {
  const auto c = make_uniform_config(8, 0.25, 5);
  try {
    build_transition_matrix(c, 100000);
    FAIL("expected refusal");
  } catch (const StateCapExceeded& e) {
    CHECK(e.state_count() == 279936);
    CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("279936"));
  }
}

TEST_CASE("stationary solves", "[exact]") {
  const auto pi = stationary(std::vector<std::vector<double>>{{0.5, 0.5}, {0.25, 0.75}});
  CHECK(pi[0] == Approx(1.0 / 3).epsilon(1e-12));
  CHECK(pi[1] == Approx(2.0 / 3).epsilon(1e-12));

  const std::vector<std::vector<double>> doubly{{0.2, 0.5, 0.3}, {0.3, 0.2, 0.5}, {0.5, 0.3, 0.2}};
  for (double x : stationary(doubly)) CHECK(x == Approx(1.0 / 3).epsilon(1e-12));

  // Same answer through power iteration.
  ExactChainOptions power;
  power.dense_limit = 0;
  for (double x : stationary(doubly, power)) CHECK(x == Approx(1.0 / 3).epsilon(1e-10));
}

TEST_CASE("dense and power iteration agree with the oracle", "[exact]") {
  const auto c = make({0.3, 0.45, 0.2, 0.6}, {2, 3, 2});
  const auto matrix = build_transition_matrix(c);
  const auto brute = oracle::stationary(dense_rows(matrix));
  ExactChainOptions power;
  power.dense_limit = 0;
  const auto dense = stationary(matrix);
  const auto iterated = stationary(matrix, power);
  for (std::size_t s = 0; s < brute.size(); ++s) {
    CHECK(std::abs(dense[s] - brute[s]) < 1e-12);
    CHECK(std::abs(iterated[s] - brute[s]) < 1e-10);
  }
  Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(dense.data(), static_cast<Eigen::Index>(dense.size()));
  CHECK(detail::stationary_residual(matrix, v) < 1e-12);
}

TEST_CASE("power iteration gives up with a residual", "[exact]") {
  ExactChainOptions o;
  o.dense_limit = 0;
  o.max_iterations = 2;
  const auto matrix = build_transition_matrix(make({0.3, 0.3, 0.3}, {4, 4}));
  CHECK_THROWS_AS(stationary(matrix, o), ConvergenceError);
}

TEST_CASE("exact throughput", "[exact]") {
  CHECK(solve_exact(make({0.5, 0.5}, {1})).throughput == Approx(1.0 / 3).epsilon(1e-12));
  CHECK(solve_exact(make({0.2, 0.4, 1.0}, {2, 2})).throughput == 0.0);

  const auto lossless = solve_exact(make({0.0, 0.0, 0.0}, {1, 1}));
  CHECK(lossless.throughput == Approx(1.0).epsilon(1e-12));
  CHECK(lossless.stationary[3] == Approx(1.0).epsilon(1e-12));

  // Lossless pipelines too big for the dense path still settle.
  ExactChainOptions power;
  power.dense_limit = 0;
  const auto c = make({0.0, 0.0, 0.0, 0.0}, {2, 1, 2});
  const auto pi = stationary(build_transition_matrix(c), power);
  CHECK(exact_throughput(c, pi) == Approx(1.0).epsilon(1e-9));
}

TEST_CASE("marginals are distributions within bounds", "[exact]") {
  const auto c = make({0.25, 0.5, 0.3, 0.1}, {3, 1, 2});
  const auto result = solve_exact(c);
  REQUIRE(result.marginals.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(result.marginals[i].masses.size() == static_cast<std::size_t>(c.buffers[i]) + 1);
    double sum = 0.0;
    for (double p : result.marginals[i].masses) {
      CHECK(p >= 0.0);
      sum += p;
    }
    CHECK(sum == Approx(1.0).epsilon(1e-12));
  }
  double total = 0.0;
  for (double p : result.stationary) total += p;
  CHECK(total == Approx(1.0).epsilon(1e-10));
  CHECK(result.throughput <= 1.0 - c.erasures.back());
}

TEST_CASE("coordinate dump lists every stored entry", "[exact][io]") {
  const auto matrix = build_transition_matrix(make({0.5, 0.5}, {1}));
  std::ostringstream os;
  write_coo(os, matrix);
  CHECK(os.str() == "0 0 0.5\n0 1 0.5\n1 0 0.25\n1 1 0.75\n");
}
