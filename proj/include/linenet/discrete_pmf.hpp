#pragma once

// Finite probability mass functions over integer epochs with an explicit
// record of the probability mass truncated off the right tail.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "linenet/error.hpp"

namespace linenet {

inline constexpr double kDefaultTailBudget = 1e-9;

struct DiscretePMF {
  long min_support = 0;
  std::vector<double> masses;  // P[T = min_support + i]
  double tail_mass = 0.0;      // P[T > max_support()]

  long max_support() const { return min_support + static_cast<long>(masses.size()) - 1; }

  double captured_mass() const {
    double s = 0.0;
    for (double p : masses) s += p;
    return s;
  }

  double at(long t) const {
    if (t < min_support || t > max_support()) return 0.0;
    return masses[static_cast<std::size_t>(t - min_support)];
  }

  // Moments and quantiles are conditional on the captured support.
  double mean() const {
    double s = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
      s += static_cast<double>(min_support + static_cast<long>(i)) * masses[i];
    }
    return s / captured_mass();
  }

  double variance() const {
    const double mu = mean();
    double s = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
      const double d = static_cast<double>(min_support + static_cast<long>(i)) - mu;
      s += d * d * masses[i];
    }
    return s / captured_mass();
  }

  long quantile(double q) const {
    const double target = q * captured_mass();
    double cum = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
      cum += masses[i];
      if (cum >= target) return min_support + static_cast<long>(i);
    }
    return max_support();
  }
};

inline DiscretePMF point_mass(long value) { return DiscretePMF{value, {1.0}, 0.0}; }

// Geometric number of Bernoulli(success_prob) trials up to and including the
// first success. Truncated once the remaining tail drops below tail_budget.
inline DiscretePMF geometric(double success_prob, double tail_budget = kDefaultTailBudget) {
  if (!(success_prob > 0.0)) throw DegenerateError("infinite expected delay (success probability 0)");
  if (success_prob > 1.0) throw ConfigError("success probability above 1");
  if (!(tail_budget > 0.0)) throw ConfigError("tail budget must be positive");
  if (success_prob == 1.0) return point_mass(1);

  const double fail = 1.0 - success_prob;
  DiscretePMF pmf;
  pmf.min_support = 1;
  double survive = 1.0;  // (1-p)^(t-1)
  while (survive >= tail_budget) {
    pmf.masses.push_back(success_prob * survive);
    survive *= fail;
  }
  pmf.tail_mass = survive;
  return pmf;
}

// Number of trials up to and including the k-th success (negative binomial),
// P(t) = C(t-1, k-1) p^k (1-p)^(t-k), t >= k.
inline DiscretePMF k_fold_geometric(int k, double success_prob,
                                    double tail_budget = kDefaultTailBudget) {
  if (k < 1) throw ConfigError("k-fold geometric needs k >= 1");
  if (!(success_prob > 0.0)) throw DegenerateError("infinite expected delay (success probability 0)");
  if (success_prob > 1.0) throw ConfigError("success probability above 1");
  if (!(tail_budget > 0.0)) throw ConfigError("tail budget must be positive");
  if (k == 1) return geometric(success_prob, tail_budget);
  if (success_prob == 1.0) return point_mass(k);

  const double log_fail = std::log1p(-success_prob);
  DiscretePMF pmf;
  pmf.min_support = k;
  double log_mass = k * std::log(success_prob);
  // Neumaier-compensated running sum so that 1 - sum stays accurate near 1.
  double sum = 0.0;
  double comp = 0.0;
  for (long t = k;; ++t) {
    const double p = std::exp(log_mass);
    pmf.masses.push_back(p);
    const double next = sum + p;
    comp += (std::abs(sum) >= p) ? (sum - next) + p : (p - next) + sum;
    sum = next;
    const double tail = 1.0 - (sum + comp);
    // Only stop past the mode, where the remaining masses are decreasing.
    if (tail < tail_budget && t > k) {
      pmf.tail_mass = std::max(tail, 0.0);
      break;
    }
    log_mass += std::log(static_cast<double>(t)) - std::log(static_cast<double>(t - k + 1)) +
                log_fail;
  }
  return pmf;
}

// Distribution of the sum of two independent variables. The result keeps
// every product term of the captured masses; missing mass is tracked as
// 1 - (1 - a.tail)(1 - b.tail).
inline DiscretePMF convolve(const DiscretePMF& a, const DiscretePMF& b) {
  if (a.masses.empty() || b.masses.empty()) throw ConfigError("cannot convolve an empty PMF");
  DiscretePMF out;
  out.min_support = a.min_support + b.min_support;
  out.masses.assign(a.masses.size() + b.masses.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.masses.size(); ++i) {
    const double ai = a.masses[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < b.masses.size(); ++j) out.masses[i + j] += ai * b.masses[j];
  }
  out.tail_mass = a.tail_mass + b.tail_mass - a.tail_mass * b.tail_mass;
  return out;
}

// Weighted mixture sum_i w_i * components_i; zero-weight components are skipped.
inline DiscretePMF mixture(const std::vector<double>& weights,
                           const std::vector<DiscretePMF>& components) {
  if (weights.size() != components.size()) throw ConfigError("mixture weight count mismatch");
  long lo = 0;
  long hi = 0;
  bool any = false;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    lo = any ? std::min(lo, components[i].min_support) : components[i].min_support;
    hi = any ? std::max(hi, components[i].max_support()) : components[i].max_support();
    any = true;
  }
  if (!any) throw ConfigError("mixture has no positive weight");
  DiscretePMF out;
  out.min_support = lo;
  out.masses.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    const auto& c = components[i];
    const auto offset = static_cast<std::size_t>(c.min_support - lo);
    for (std::size_t j = 0; j < c.masses.size(); ++j) out.masses[offset + j] += weights[i] * c.masses[j];
    out.tail_mass += weights[i] * c.tail_mass;
  }
  return out;
}

struct PMFSummary {
  double mean = 0.0;
  double variance = 0.0;
  long p50 = 0;
  long p90 = 0;
  long p99 = 0;
  double tail_mass = 0.0;
};

inline PMFSummary summarize(const DiscretePMF& pmf) {
  return PMFSummary{pmf.mean(),         pmf.variance(),     pmf.quantile(0.5),
                    pmf.quantile(0.9),  pmf.quantile(0.99), pmf.tail_mass};
}

inline void to_json(nlohmann::json& j, const PMFSummary& s) {
  j = nlohmann::json{{"mean", s.mean}, {"variance", s.variance}, {"p50", s.p50},
                     {"p90", s.p90},   {"p99", s.p99},           {"tail_mass", s.tail_mass}};
}

inline void to_json(nlohmann::json& j, const DiscretePMF& pmf) {
  j = nlohmann::json{{"min_support", pmf.min_support},
                     {"masses", pmf.masses},
                     {"tail_mass", pmf.tail_mass}};
}

inline void from_json(const nlohmann::json& j, DiscretePMF& pmf) {
  pmf.min_support = j.at("min_support").get<long>();
  pmf.masses = j.at("masses").get<std::vector<double>>();
  pmf.tail_mass = j.at("tail_mass").get<double>();
}

inline void write_csv(std::ostream& os, const DiscretePMF& pmf) {
  const auto old_precision = os.precision(17);
  os << "delay_epochs,probability\n";
  for (std::size_t i = 0; i < pmf.masses.size(); ++i) {
    os << pmf.min_support + static_cast<long>(i) << ',' << pmf.masses[i] << '\n';
  }
  os.precision(old_precision);
}

}  // namespace linenet
