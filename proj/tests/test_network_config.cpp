#include <catch_amalgamated.hpp>

#include "linenet/network_config.hpp"

using linenet::ConfigError;
using linenet::NetworkConfig;

namespace {

NetworkConfig make(int hops, std::vector<double> eps, std::vector<int> buffers) {
  NetworkConfig c;
  c.hops = hops;
  c.erasures = std::move(eps);
  c.buffers = std::move(buffers);
  return c;
}

}  // namespace

TEST_CASE("validate accepts legal networks", "[core]") {
  CHECK_NOTHROW(linenet::validate(make(2, {0.5, 0.5}, {1})));
  CHECK_NOTHROW(linenet::validate(make(4, {0.2, 0.5, 0.5, 0.2}, {10, 10, 10})));
  // Degenerate erasures are kept as-is.
  const auto c = linenet::validate(make(3, {0.0, 1.0, 0.0}, {1, 2}));
  CHECK(c.erasures == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("validate reports the first violated invariant", "[core]") {
  CHECK_THROWS_WITH(linenet::validate(make(2, {0.5, 1.2}, {1})),
                    Catch::Matchers::ContainsSubstring("erasure out of range"));
  CHECK_THROWS_WITH(linenet::validate(make(1, {0.5}, {})),
                    Catch::Matchers::ContainsSubstring("at least 2"));
  CHECK_THROWS_WITH(linenet::validate(make(3, {0.5, 0.5}, {1, 1})),
                    Catch::Matchers::ContainsSubstring("length mismatch"));
  CHECK_THROWS_WITH(linenet::validate(make(3, {0.5, 0.5, 0.5}, {1})),
                    Catch::Matchers::ContainsSubstring("length mismatch"));
  CHECK_THROWS_WITH(linenet::validate(make(3, {0.5, 0.5, 0.5}, {1, 0})),
                    Catch::Matchers::ContainsSubstring("buffer size"));
  CHECK_THROWS_AS(linenet::validate(make(2, {-0.1, 0.5}, {1})), ConfigError);
  CHECK_THROWS_AS(linenet::validate(make(2, {std::nan(""), 0.5}, {1})), ConfigError);
}

TEST_CASE("validate is idempotent", "[core]") {
  auto c = make(4, {0.2, 0.5, 0.5, 0.2}, {3, 1, 7});
  c.packet_size_bytes = 1500;
  const auto once = linenet::validate(c);
  CHECK(linenet::validate(once) == once);
}

TEST_CASE("state_count is the product of (m_i + 1)", "[core]") {
  CHECK(linenet::state_count(make(2, {0.5, 0.5}, {1})) == 2);
  CHECK(linenet::state_count(make(4, {0, 0, 0, 0}, {2, 2, 2})) == 27);
  CHECK(linenet::state_count(linenet::make_uniform_config(8, 0.25, 5)) == 279936);

  // Appending a relay multiplies the count by m + 1.
  auto c = make(3, {0.1, 0.1, 0.1}, {4, 2});
  const auto before = linenet::state_count(c);
  c.hops = 4;
  c.erasures.push_back(0.1);
  c.buffers.push_back(6);
  CHECK(linenet::state_count(c) == before * 7);
}

TEST_CASE("config JSON round trip", "[core][io]") {
  auto c = make(3, {0.25, 0.5, 0.125}, {2, 9});
  c.packet_size_bytes = 1024;
  const nlohmann::json j = c;
  CHECK(j.at("hops") == 3);
  CHECK(j.contains("packet_size_bytes"));
  CHECK(linenet::parse_config(j.dump()) == c);

  const auto bare = linenet::parse_config(R"({"hops":2,"erasures":[0.5,0.5],"buffers":[1]})");
  CHECK_FALSE(bare.packet_size_bytes.has_value());
  CHECK_THROWS_AS(linenet::parse_config(R"({"hops":2,"erasures":[0.5,0.5]})"), ConfigError);
  CHECK_THROWS_AS(linenet::parse_config("not json"), ConfigError);
  CHECK_THROWS_AS(linenet::parse_config(R"({"hops":2,"erasures":[0.5,2.0],"buffers":[1]})"),
                  ConfigError);
}
