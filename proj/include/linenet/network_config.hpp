#pragma once

// Line network description: v_0 (source) -> v_1 -> ... -> v_{h-1} -> v_h
// (destination). Link i joins v_{i-1} to v_i and erases a packet with
// probability erasures[i-1]. Intermediate node v_i holds at most
// buffers[i-1] packets.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linenet/error.hpp"

namespace linenet {

struct NetworkConfig {
  int hops = 0;
  std::vector<double> erasures;
  std::vector<int> buffers;
  std::optional<std::int64_t> packet_size_bytes;

  bool operator==(const NetworkConfig&) const = default;

  // Erasure probability of link i, 1-based (link i enters node v_i).
  double link_erasure(int i) const { return erasures.at(i - 1); }
  // Buffer capacity of intermediate node v_i, 1-based.
  int buffer(int i) const { return buffers.at(i - 1); }
  int relay_count() const { return hops - 1; }
};

// Occupancy vector (n_1, ..., n_{h-1}) of the intermediate nodes.
struct JointState {
  std::vector<int> occupancies;

  bool operator==(const JointState&) const = default;
};

// Returns the config unchanged if it is legal, otherwise throws ConfigError
// naming the first violated invariant.
inline NetworkConfig validate(NetworkConfig config) {
  if (config.hops < 2) {
    throw ConfigError("hop count must be at least 2, got " + std::to_string(config.hops));
  }
  if (static_cast<int>(config.erasures.size()) != config.hops) {
    throw ConfigError("length mismatch: expected " + std::to_string(config.hops) +
                      " erasure probabilities, got " + std::to_string(config.erasures.size()));
  }
  if (static_cast<int>(config.buffers.size()) != config.hops - 1) {
    throw ConfigError("length mismatch: expected " + std::to_string(config.hops - 1) +
                      " buffer sizes, got " + std::to_string(config.buffers.size()));
  }
  for (std::size_t i = 0; i < config.erasures.size(); ++i) {
    const double e = config.erasures[i];
    if (!(e >= 0.0 && e <= 1.0)) {
      std::ostringstream os;
      os << "erasure out of range: link " << (i + 1) << " has " << e;
      throw ConfigError(os.str());
    }
  }
  for (std::size_t i = 0; i < config.buffers.size(); ++i) {
    if (config.buffers[i] < 1) {
      throw ConfigError("buffer size must be at least 1: node " + std::to_string(i + 1) +
                        " has " + std::to_string(config.buffers[i]));
    }
  }
  if (config.packet_size_bytes && *config.packet_size_bytes <= 0) {
    throw ConfigError("packet size must be positive");
  }
  return config;
}

// Number of joint buffer states, prod_i (m_i + 1). Saturates at UINT64_MAX.
inline std::uint64_t state_count(const NetworkConfig& config) {
  std::uint64_t count = 1;
  for (int m : config.buffers) {
    const auto radix = static_cast<std::uint64_t>(m) + 1;
    if (count > UINT64_MAX / radix) return UINT64_MAX;
    count *= radix;
  }
  return count;
}

inline NetworkConfig make_uniform_config(int hops, double erasure, int buffer) {
  NetworkConfig config;
  config.hops = hops;
  config.erasures.assign(static_cast<std::size_t>(std::max(hops, 0)), erasure);
  config.buffers.assign(static_cast<std::size_t>(std::max(hops - 1, 0)), buffer);
  return config;
}

inline bool has_severed_link(const NetworkConfig& config) {
  for (double e : config.erasures) {
    if (e >= 1.0) return true;
  }
  return false;
}

inline void to_json(nlohmann::json& j, const NetworkConfig& config) {
  j = nlohmann::json{{"hops", config.hops},
                     {"erasures", config.erasures},
                     {"buffers", config.buffers}};
  if (config.packet_size_bytes) j["packet_size_bytes"] = *config.packet_size_bytes;
}

inline void from_json(const nlohmann::json& j, NetworkConfig& config) {
  try {
    config.hops = j.at("hops").get<int>();
    config.erasures = j.at("erasures").get<std::vector<double>>();
    config.buffers = j.at("buffers").get<std::vector<int>>();
    config.packet_size_bytes.reset();
    if (j.contains("packet_size_bytes") && !j["packet_size_bytes"].is_null()) {
      config.packet_size_bytes = j["packet_size_bytes"].get<std::int64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed network config: ") + e.what());
  }
}

inline NetworkConfig parse_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return validate(j.get<NetworkConfig>());
}

}  // namespace linenet
