#pragma once

// Seeded Monte Carlo simulation of a line network running the hop-by-hop
// ACK scheme: every non-empty node sends its head-of-line packet each epoch,
// a packet is removed from the sender once the receiver acknowledges it, and
// a receiver accepts whenever it has room after its own transmission in the
// same epoch. Buffers are FIFO and the source always has a packet waiting.
//
// Seeds: replication k of base seed s draws from std::mt19937_64 seeded with
// derive_seed(s, k), the (k+1)-th output of a SplitMix64 stream started at s.
// Link i delivers in an epoch iff a uniform double u = (draw >> 11) * 2^-53
// satisfies u >= eps_i; links are sampled in order 1..h each epoch.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linenet/approx_solver.hpp"
#include "linenet/error.hpp"
#include "linenet/network_config.hpp"

namespace linenet {

inline constexpr std::uint64_t kDefaultSeed = 20100613;

struct SimSettings {
  std::uint64_t epochs = 1000000;
  // Defaults to max(10 * sum(m_i), 10^4) when unset.
  std::optional<std::uint64_t> warmup_epochs;
  std::uint64_t seed = kDefaultSeed;
  int replications = 1;
};

struct SimReport {
  double throughput = 0.0;
  double stderr_throughput = 0.0;
  std::map<long, std::uint64_t> delay_histogram;
  std::vector<OccupancyPMF> occupancy_freq;  // relays v_1..v_{h-1}
  std::uint64_t delivered = 0;               // after warmup
  std::vector<std::uint64_t> blocked_events;  // per relay, after warmup
  std::uint64_t measured_epochs = 0;
  int replications = 1;

  double delay_mean() const {
    double s = 0.0;
    for (const auto& [d, c] : delay_histogram) s += static_cast<double>(d) * static_cast<double>(c);
    return s / static_cast<double>(delivered);
  }

  double delay_variance() const {
    const double mu = delay_mean();
    double s = 0.0;
    for (const auto& [d, c] : delay_histogram) {
      s += (static_cast<double>(d) - mu) * (static_cast<double>(d) - mu) * static_cast<double>(c);
    }
    return s / static_cast<double>(delivered);
  }
};

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, int replication) {
  std::uint64_t state = base;
  std::uint64_t out = 0;
  for (int k = 0; k <= replication; ++k) out = splitmix64_next(state);
  return out;
}

inline std::uint64_t default_warmup(const NetworkConfig& config) {
  std::uint64_t total = 0;
  for (int m : config.buffers) total += static_cast<std::uint64_t>(m);
  return std::max<std::uint64_t>(10 * total, 10000);
}

struct Packet {
  std::uint64_t sequence = 0;
  std::uint64_t stamp = 0;  // epoch of the first transmission attempt
};

// Fixed-capacity FIFO ring.
class PacketQueue {
 public:
  explicit PacketQueue(int capacity) : slots_(static_cast<std::size_t>(capacity)) {}

  int size() const { return size_; }
  int capacity() const { return static_cast<int>(slots_.size()); }
  bool empty() const { return size_ == 0; }

  void push(const Packet& p) {
    if (size_ == capacity()) throw InternalError("push onto a full relay buffer");
    slots_[(head_ + static_cast<std::size_t>(size_)) % slots_.size()] = p;
    ++size_;
  }

  Packet pop() {
    if (size_ == 0) throw InternalError("pop from an empty relay buffer");
    Packet p = slots_[head_];
    head_ = (head_ + 1) % slots_.size();
    --size_;
    return p;
  }

 private:
  std::vector<Packet> slots_;
  std::size_t head_ = 0;
  int size_ = 0;
};

class LineSimulation {
 public:
  LineSimulation(NetworkConfig config, std::uint64_t seed)
      : config_(validate(std::move(config))), rng_(seed) {
    for (int m : config_.buffers) queues_.emplace_back(m);
    moves_.assign(static_cast<std::size_t>(config_.hops), 0);
    pattern_.assign(static_cast<std::size_t>(config_.hops), 0);
  }

  const NetworkConfig& config() const { return config_; }
  std::uint64_t epoch() const { return epoch_; }
  std::uint64_t accepted() const { return accepted_; }
  std::uint64_t delivered() const { return delivered_; }
  std::uint64_t buffered() const {
    std::uint64_t s = 0;
    for (const auto& q : queues_) s += static_cast<std::uint64_t>(q.size());
    return s;
  }

  JointState state() const {
    JointState s;
    for (const auto& q : queues_) s.occupancies.push_back(q.size());
    return s;
  }

  // Samples link outcomes and runs one epoch.
  void step() {
    for (std::size_t i = 0; i < pattern_.size(); ++i) {
      const double u = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
      pattern_[i] = u >= config_.erasures[i] ? 1 : 0;
    }
    advance(pattern_);
  }

  // Runs one epoch with the given link outcomes (1 = delivered).
  void advance(const std::vector<int>& delivered_links) {
    const int h = config_.hops;
    // Resolve moves destination-first so a relay's departure frees a slot
    // for a same-epoch arrival.
    moves_[h - 1] = (!queues_[h - 2].empty() && delivered_links[h - 1]) ? 1 : 0;
    for (int link = h - 1; link >= 1; --link) {
      const bool sender_ready = link == 1 || !queues_[link - 2].empty();
      const PacketQueue& receiver = queues_[link - 1];
      const bool room = receiver.size() < receiver.capacity() || moves_[link] == 1;
      const bool arrived = sender_ready && delivered_links[link - 1] == 1;
      moves_[link - 1] = (arrived && room) ? 1 : 0;
      if (arrived && !room && measuring_) ++blocked_[static_cast<std::size_t>(link - 1)];
    }

    if (moves_[h - 1]) deliver(queues_[h - 2].pop());
    for (int link = h - 1; link >= 2; --link) {
      if (moves_[link - 1]) queues_[link - 1].push(queues_[link - 2].pop());
    }
    if (moves_[0]) {
      queues_[0].push(Packet{accepted_, source_stamp_});
      ++accepted_;
      source_stamp_ = epoch_ + 1;
    }
    ++epoch_;
  }

  const std::vector<int>& last_transfers() const { return moves_; }

  SimReport run(std::uint64_t epochs, std::uint64_t warmup) {
    if (epochs == 0) throw ConfigError("simulation needs at least one epoch");
    if (warmup >= epochs) throw ConfigError("warmup epochs must be fewer than total epochs");
    const std::size_t relays = queues_.size();
    std::vector<std::vector<std::uint64_t>> occupancy_counts(relays);
    for (std::size_t i = 0; i < relays; ++i) {
      occupancy_counts[i].assign(static_cast<std::size_t>(queues_[i].capacity()) + 1, 0);
    }
    blocked_.assign(relays, 0);

    // Throughput batches for a batch-means standard error.
    constexpr std::uint64_t kBatches = 32;
    const std::uint64_t measured = epochs - warmup;
    std::vector<std::uint64_t> batch_delivered(kBatches, 0);
    std::vector<std::uint64_t> batch_epochs(kBatches, 0);

    for (std::uint64_t e = 0; e < epochs; ++e) {
      measuring_ = e >= warmup;
      if (measuring_) {
        for (std::size_t i = 0; i < relays; ++i) {
          ++occupancy_counts[i][static_cast<std::size_t>(queues_[i].size())];
        }
      }
      const std::uint64_t before = delivered_measured_;
      step();
      if (measuring_) {
        const std::uint64_t batch = (e - warmup) * kBatches / measured;
        batch_delivered[batch] += delivered_measured_ - before;
        ++batch_epochs[batch];
      }
    }
    measuring_ = false;

    SimReport report;
    report.measured_epochs = measured;
    report.delivered = delivered_measured_;
    report.throughput = static_cast<double>(delivered_measured_) / static_cast<double>(measured);
    report.blocked_events = blocked_;
    for (std::size_t d = 0; d < delay_counts_.size(); ++d) {
      if (delay_counts_[d] > 0) report.delay_histogram[static_cast<long>(d)] = delay_counts_[d];
    }
    for (std::size_t i = 0; i < relays; ++i) {
      OccupancyPMF freq;
      for (std::uint64_t c : occupancy_counts[i]) {
        freq.masses.push_back(static_cast<double>(c) / static_cast<double>(measured));
      }
      report.occupancy_freq.push_back(std::move(freq));
    }

    std::vector<double> rates;
    for (std::uint64_t b = 0; b < kBatches; ++b) {
      if (batch_epochs[b] > 0) {
        rates.push_back(static_cast<double>(batch_delivered[b]) / static_cast<double>(batch_epochs[b]));
      }
    }
    report.stderr_throughput = standard_error(rates);
    return report;
  }

  static double standard_error(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    const double n = static_cast<double>(xs.size());
    return std::sqrt(ss / (n - 1.0) / n);
  }

 private:
  void deliver(const Packet& p) {
    if (p.sequence != delivered_) throw InternalError("packet delivered out of order");
    ++delivered_;
    if (measuring_) {
      const auto delay = static_cast<std::size_t>(epoch_ - p.stamp + 1);
      if (delay >= delay_counts_.size()) delay_counts_.resize(delay + 1, 0);
      ++delay_counts_[delay];
      ++delivered_measured_;
    }
  }

  NetworkConfig config_;
  std::mt19937_64 rng_;
  std::vector<PacketQueue> queues_;
  std::vector<int> moves_;
  std::vector<int> pattern_;
  std::uint64_t epoch_ = 0;
  std::uint64_t accepted_ = 0;
  std::uint64_t delivered_ = 0;
  std::uint64_t source_stamp_ = 0;

  bool measuring_ = false;
  std::uint64_t delivered_measured_ = 0;
  std::vector<std::uint64_t> delay_counts_;
  std::vector<std::uint64_t> blocked_;
};

inline SimReport run_replication(const NetworkConfig& config, const SimSettings& settings,
                                 int replication) {
  LineSimulation sim(config, derive_seed(settings.seed, replication));
  return sim.run(settings.epochs, settings.warmup_epochs.value_or(default_warmup(config)));
}

// Runs settings.replications independent replications and pools them:
// throughput is their mean, its standard error is taken across replications,
// histograms and counters are summed, occupancy frequencies averaged.
inline SimReport replicate(const NetworkConfig& config, const SimSettings& settings) {
  if (settings.replications < 1) throw ConfigError("replications must be positive");
  if (settings.replications == 1) return run_replication(config, settings, 0);

  SimReport pooled;
  pooled.replications = settings.replications;
  std::vector<double> rates;
  for (int k = 0; k < settings.replications; ++k) {
    SimReport one = run_replication(config, settings, k);
    rates.push_back(one.throughput);
    if (k == 0) {
      pooled.occupancy_freq = one.occupancy_freq;
      pooled.blocked_events = one.blocked_events;
    } else {
      for (std::size_t i = 0; i < one.occupancy_freq.size(); ++i) {
        auto& acc = pooled.occupancy_freq[i].masses;
        for (std::size_t k2 = 0; k2 < acc.size(); ++k2) acc[k2] += one.occupancy_freq[i].masses[k2];
        pooled.blocked_events[i] += one.blocked_events[i];
      }
    }
    for (const auto& [d, c] : one.delay_histogram) pooled.delay_histogram[d] += c;
    pooled.delivered += one.delivered;
    pooled.measured_epochs += one.measured_epochs;
  }
  const double reps = static_cast<double>(settings.replications);
  for (auto& freq : pooled.occupancy_freq) {
    for (double& p : freq.masses) p /= reps;
  }
  double mean = 0.0;
  for (double r : rates) mean += r;
  pooled.throughput = mean / reps;
  pooled.stderr_throughput = LineSimulation::standard_error(rates);
  return pooled;
}

inline SimReport simulate(const NetworkConfig& config, const SimSettings& settings = {}) {
  return replicate(validate(config), settings);
}

inline void to_json(nlohmann::json& j, const SimReport& report) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& [d, c] : report.delay_histogram) hist.push_back({d, c});
  j = nlohmann::json{{"throughput", report.throughput},
                     {"stderr_throughput", report.stderr_throughput},
                     {"delivered", report.delivered},
                     {"measured_epochs", report.measured_epochs},
                     {"replications", report.replications},
                     {"blocked_events", report.blocked_events},
                     {"occupancy", report.occupancy_freq},
                     {"delay_histogram", hist}};
  if (report.delivered > 0) {
    j["delay_mean"] = report.delay_mean();
    j["delay_variance"] = report.delay_variance();
  }
}

inline void write_histogram_csv(std::ostream& os, const SimReport& report) {
  os << "delay_epochs,count\n";
  for (const auto& [d, c] : report.delay_histogram) os << d << ',' << c << '\n';
}

}  // namespace linenet
