#include <algorithm>

#include <catch_amalgamated.hpp>

#include "linenet/planner.hpp"

using Catch::Approx;
using namespace linenet;

namespace {

NetworkConfig section_network(int m) { return NetworkConfig{4, {0.2, 0.5, 0.5, 0.2}, {m, m, m}, std::nullopt}; }

std::vector<NodeType> types_of(const NetworkConfig& c) {
  std::vector<NodeType> out;
  for (const auto& n : classify(c, solve(c))) out.push_back(n.type);
  return out;
}

}  // namespace

TEST_CASE("bottleneck-in-the-middle network types", "[planner]") {
  const auto c = section_network(10);
  const auto classes = classify(c, solve(c));
  REQUIRE(classes.size() == 3);
  CHECK(classes[0].type == NodeType::kType1);
  CHECK(classes[1].type == NodeType::kType2);
  CHECK(classes[2].type == NodeType::kType3);
  CHECK(classes[0].node == 1);
  CHECK(classes[0].in_rate == Approx(0.8));
  CHECK(classes[2].out_rate == Approx(0.8));
  CHECK(to_string(classes[1].type) == "Type2");
}

TEST_CASE("classification of symmetric and skewed lines", "[planner]") {
  // Uniform erasures: the middle relay sees balanced in and out rates.
  CHECK(types_of(make_uniform_config(3, 0.5, 10))[0] == NodeType::kType2);
  CHECK(types_of(make_uniform_config(5, 0.5, 10))[1] == NodeType::kType2);
  // A terrible first link starves the first relay.
  CHECK(types_of(NetworkConfig{3, {0.9, 0.1, 0.1}, {5, 5}, std::nullopt})[0] == NodeType::kType3);
  // Setting delta wide enough makes everything Type2.
  const auto c = section_network(10);
  for (const auto& n : classify(c, solve(c), 1.0)) CHECK(n.type == NodeType::kType2);
}

TEST_CASE("reversing the line mirrors the types", "[planner][property]") {
  const auto forward = types_of(NetworkConfig{5, {0.1, 0.3, 0.6, 0.3, 0.15}, {6, 6, 6, 6}, std::nullopt});
  const auto backward = types_of(NetworkConfig{5, {0.15, 0.3, 0.6, 0.3, 0.1}, {6, 6, 6, 6}, std::nullopt});
  REQUIRE(forward.size() == backward.size());
  for (std::size_t i = 0; i < forward.size(); ++i) {
    const NodeType mirrored = backward[backward.size() - 1 - i];
    const NodeType expected = forward[i] == NodeType::kType1   ? NodeType::kType3
                              : forward[i] == NodeType::kType3 ? NodeType::kType1
                                                               : NodeType::kType2;
    CHECK(mirrored == expected);
  }
}

TEST_CASE("zero budget returns the baseline", "[planner]") {
  const auto c = section_network(5);
  const auto plan = allocate(c, 0);
  CHECK(plan.increments == std::vector<int>{0, 0, 0});
  CHECK(plan.buffers == c.buffers);
  CHECK(plan.trajectory.empty());
  CHECK(plan.capacity == Approx(solve(c).capacity).epsilon(1e-12));
  CHECK_THROWS_AS(allocate(c, -1), ConfigError);
}

TEST_CASE("allocation favours the balanced relay", "[planner]") {
  for (int base : {5, 10}) {
    const auto plan = allocate(section_network(base), 10);
    CHECK(plan.increments[1] > 5);
    CHECK(plan.increments[0] + plan.increments[1] + plan.increments[2] == 10);
    CHECK(plan.capacity > plan.baseline.capacity);
  }
}

TEST_CASE("greedy allocation never loses capacity", "[planner][property]") {
  const auto plan = allocate(NetworkConfig{5, {0.3, 0.45, 0.2, 0.5, 0.35}, {2, 1, 3, 2}, std::nullopt}, 8);
  double prev = plan.baseline.capacity;
  for (const auto& step : plan.trajectory) {
    CHECK(step.capacity >= prev - 1e-12);
    prev = step.capacity;
  }
  REQUIRE(plan.trajectory.size() == 8);
  CHECK(plan.capacity == plan.trajectory.back().capacity);
}

TEST_CASE("symmetric lines get symmetric allocations", "[planner]") {
  const auto plan = allocate(make_uniform_config(4, 0.5, 2), 3);
  CHECK(plan.increments == std::vector<int>{1, 1, 1});
  const auto p2 = allocate(make_uniform_config(5, 0.3, 2), 4);
  auto rev = p2.increments;
  std::reverse(rev.begin(), rev.end());
  CHECK(rev == p2.increments);
}

TEST_CASE("capacity does not drop as a buffer grows", "[planner][property]") {
  const auto rows = tradeoff_sweep(NetworkConfig{4, {0.3, 0.4, 0.25, 0.35}, {3, 3, 3}, std::nullopt}, 2,
                                   {1, 2, 3, 5, 8, 13, 21});
  REQUIRE(rows.size() == 7);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i].buffer == std::vector<int>{1, 2, 3, 5, 8, 13, 21}[i]);
    CHECK(rows[i].capacity >= rows[i - 1].capacity - 1e-12);
  }
  CHECK_THROWS_AS(tradeoff_sweep(section_network(5), 0, {1}), ConfigError);
  CHECK_THROWS_AS(tradeoff_sweep(section_network(5), 4, {1}), ConfigError);
  CHECK_THROWS_AS(tradeoff_sweep(section_network(5), 1, {}), ConfigError);
  CHECK_THROWS_AS(tradeoff_sweep(section_network(5), 1, {0}), ConfigError);
}

TEST_CASE("buffer sweeps by node type", "[planner]") {
  const std::vector<int> sizes{5, 10, 15, 20, 25, 30};
  const auto c = section_network(5);
  const auto type1 = tradeoff_sweep(c, 1, sizes);
  const auto type2 = tradeoff_sweep(c, 2, sizes);
  const auto type3 = tradeoff_sweep(c, 3, sizes);

  // Type1: throughput barely moves, delay climbs.
  CHECK(type1.back().capacity - type1.front().capacity < 0.01 * type1.front().capacity);
  for (std::size_t i = 1; i < sizes.size(); ++i) CHECK(type1[i].mean_delay > type1[i - 1].mean_delay);
  CHECK(type1.back().mean_delay > 2 * type1.front().mean_delay);

  // Type3: nothing changes.
  CHECK(type3.back().capacity - type3.front().capacity < 0.01 * type3.front().capacity);
  CHECK(std::abs(type3.back().mean_delay - type3.front().mean_delay) < 0.01 * type3.front().mean_delay);

  // Type2: throughput keeps improving.
  for (std::size_t i = 1; i < sizes.size(); ++i) CHECK(type2[i].capacity > type2[i - 1].capacity);
  CHECK(type2.back().capacity > 1.05 * type2.front().capacity);
}

TEST_CASE("degenerate networks evaluate to infinite delay", "[planner]") {
  const auto point = evaluate(NetworkConfig{3, {0.2, 1.0, 0.2}, {2, 2}, std::nullopt});
  CHECK(point.capacity == 0.0);
  CHECK(std::isinf(point.mean_delay));
}

TEST_CASE("planner JSON", "[planner][io]") {
  const auto c = section_network(10);
  const nlohmann::json cls = classify(c, solve(c));
  CHECK(cls[0].at("type") == "Type1");
  const nlohmann::json plan = allocate(c, 1);
  for (const char* key : {"increments", "buffers", "capacity", "mean_delay", "trajectory"}) CHECK(plan.contains(key));
  const nlohmann::json rows = tradeoff_sweep(c, 2, {3, 4});
  CHECK(rows[1].at("buffer") == 4);
}
