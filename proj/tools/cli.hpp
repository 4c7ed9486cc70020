#pragma once

// linenet command-line front end. Exit codes: 0 success, 2 usage,
// 3 non-convergence, 4 infeasible (zero throughput, degenerate network,
// state space above the cap).

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "linenet/linenet.hpp"

namespace linenet::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNoConvergence = 3, kInfeasible = 4 };

struct UsageError : Error {
  using Error::Error;
};

struct ConfigFlags {
  std::string config_file;
  std::optional<int> hops;
  std::vector<double> eps;
  std::optional<double> eps_uniform;
  std::vector<int> buffers;
  std::optional<int> buffers_uniform;
  std::optional<std::int64_t> packet_size;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config_file, "JSON network config file");
    cmd->add_option("--hops", hops, "number of links h");
    cmd->add_option("--eps", eps, "per-link erasure probabilities")->delimiter(',');
    cmd->add_option("--eps-uniform", eps_uniform, "same erasure probability on every link");
    cmd->add_option("--buffers", buffers, "per-relay buffer sizes")->delimiter(',');
    cmd->add_option("--buffers-uniform", buffers_uniform, "same buffer size at every relay");
    cmd->add_option("--packet-size", packet_size, "packet size in bytes (metadata only)");
  }

  bool any_inline() const {
    return hops || !eps.empty() || eps_uniform || !buffers.empty() || buffers_uniform;
  }

  NetworkConfig resolve() const {
    if (!config_file.empty()) {
      if (any_inline()) throw UsageError("give either --config or inline network flags, not both");
      std::ifstream in(config_file);
      if (!in) throw UsageError("cannot read config file " + config_file);
      std::stringstream ss;
      ss << in.rdbuf();
      return parse_config(ss.str());
    }
    if (!hops) throw UsageError("missing network: pass --config or --hops with erasures and buffers");
    if (eps.empty() == !eps_uniform) throw UsageError("pass exactly one of --eps / --eps-uniform");
    if (buffers.empty() == !buffers_uniform) {
      throw UsageError("pass exactly one of --buffers / --buffers-uniform");
    }
    NetworkConfig config;
    config.hops = *hops;
    config.erasures = eps_uniform ? std::vector<double>(static_cast<std::size_t>(std::max(*hops, 0)), *eps_uniform) : eps;
    config.buffers = buffers_uniform
                         ? std::vector<int>(static_cast<std::size_t>(std::max(*hops - 1, 0)), *buffers_uniform)
                         : buffers;
    config.packet_size_bytes = packet_size;
    return validate(config);
  }
};

struct OutputFlags {
  std::string format = "table";
  std::string path = "-";

  void attach(CLI::App* cmd) {
    cmd->add_option("--format", format, "json, csv or table")
        ->check(CLI::IsMember({"json", "csv", "table"}));
    cmd->add_option("--output", path, "output file, '-' for stdout");
  }
};

class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw UsageError("cannot open output file " + path);
      out_ = file_.get();
    }
  }
  std::ostream& stream() { return *out_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

inline std::string join(const std::vector<double>& xs, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision);
  for (std::size_t i = 0; i < xs.size(); ++i) os << (i ? ", " : "") << xs[i];
  return os.str();
}

// Inclusive integer range "a:b" or comma list "a,b,c".
inline std::vector<int> parse_range(const std::string& text) {
  std::vector<int> values;
  try {
    const auto colon = text.find(':');
    if (colon != std::string::npos) {
      const int lo = std::stoi(text.substr(0, colon));
      const int hi = std::stoi(text.substr(colon + 1));
      for (int v = lo; v <= hi; ++v) values.push_back(v);
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (!item.empty()) values.push_back(std::stoi(item));
      }
    }
  } catch (const std::exception&) {
    throw UsageError("malformed range '" + text + "'");
  }
  if (values.empty()) throw UsageError("empty range '" + text + "'");
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return values;
}

struct SimFlags {
  std::uint64_t epochs = 1000000;
  std::optional<std::uint64_t> warmup;
  std::uint64_t seed = kDefaultSeed;
  int replications = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--epochs", epochs, "total simulated epochs per replication");
    cmd->add_option("--warmup", warmup, "epochs discarded before measuring");
    cmd->add_option("--seed", seed, "base seed");
    cmd->add_option("--replications", replications, "independent replications")
        ->check(CLI::PositiveNumber);
  }

  SimSettings settings() const {
    if (epochs == 0) throw UsageError("--epochs must be positive");
    if (warmup && *warmup >= epochs) throw UsageError("--warmup must be smaller than --epochs");
    return SimSettings{epochs, warmup, seed, replications};
  }
};

inline ArrivalView parse_view(const std::string& s) {
  return s == "time-stationary" ? ArrivalView::kTimeStationary : ArrivalView::kPostDeparture;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Throughput, occupancy and delay of finite-buffer erasure line networks", "linenet"};
  app.require_subcommand(1);

  ConfigFlags net;
  OutputFlags output;
  SimFlags sim;
  double tolerance = 1e-10;
  long max_iterations = 100000;
  std::uint64_t state_cap = std::uint64_t{1} << 20;
  std::string dump_matrix;
  double tail_budget = kDefaultTailBudget;
  std::string view = "post-departure";
  std::string vary;
  std::string range;
  bool with_sim = false;
  double delta = kDefaultRateTolerance;
  int budget = 0;

  auto add_solver = [&](CLI::App* cmd) {
    cmd->add_option("--tolerance", tolerance, "fixed-point tolerance (max-norm)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--max-iterations", max_iterations, "fixed-point round limit")
        ->check(CLI::PositiveNumber);
  };
  auto add_delay = [&](CLI::App* cmd) {
    cmd->add_option("--tail-budget", tail_budget, "truncation budget per elementary PMF")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--view", view, "occupancy seen by arrivals")
        ->check(CLI::IsMember({"post-departure", "time-stationary"}));
  };

  CLI::App* solve_cmd = app.add_subcommand("solve", "fixed-point capacity approximation");
  CLI::App* exact_cmd = app.add_subcommand("exact", "exact joint-chain throughput");
  CLI::App* sim_cmd = app.add_subcommand("simulate", "Monte Carlo simulation");
  CLI::App* delay_cmd = app.add_subcommand("delay", "analytic end-to-end delay distribution");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "capacity versus hop count or buffer size");
  CLI::App* classify_cmd = app.add_subcommand("classify", "relay congestion types");
  CLI::App* allocate_cmd = app.add_subcommand("allocate", "greedy buffer allocation");

  for (CLI::App* cmd : {solve_cmd, exact_cmd, sim_cmd, delay_cmd, sweep_cmd, classify_cmd, allocate_cmd}) {
    net.attach(cmd);
    output.attach(cmd);
  }
  for (CLI::App* cmd : {solve_cmd, delay_cmd, sweep_cmd, classify_cmd, allocate_cmd}) add_solver(cmd);
  exact_cmd->add_option("--state-cap", state_cap, "refuse chains with more states");
  exact_cmd->add_option("--dump-matrix", dump_matrix, "write the transition matrix as 'row col prob'");
  sim.attach(sim_cmd);
  add_delay(delay_cmd);
  add_delay(allocate_cmd);
  sweep_cmd->add_option("--vary", vary, "swept parameter")
      ->required()
      ->check(CLI::IsMember({"hops", "buffer"}));
  sweep_cmd->add_option("--range", range, "inclusive a:b or comma list")->required();
  sweep_cmd->add_flag("--simulate", with_sim, "add simulated capacity columns");
  sweep_cmd->add_option("--epochs", sim.epochs, "simulated epochs per point");
  sweep_cmd->add_option("--seed", sim.seed, "simulation seed");
  classify_cmd->add_option("--delta", delta, "rate tolerance for Type 2");
  allocate_cmd->add_option("--delta", delta, "rate tolerance for Type 2");
  allocate_cmd->add_option("--budget", budget, "extra buffer slots to distribute")
      ->check(CLI::NonNegativeNumber);
  allocate_cmd->add_flag("--simulate-verify", with_sim, "re-check the final plan by simulation");
  allocate_cmd->add_option("--epochs", sim.epochs, "simulated epochs for verification");
  allocate_cmd->add_option("--seed", sim.seed, "simulation seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    SolverOptions solver_options{tolerance, max_iterations, std::nullopt};
    DelayOptions delay_options{tail_budget, parse_view(view)};
    Sink sink(output.path, out);
    std::ostream& os = sink.stream();
    os << std::setprecision(10);
    const std::string& fmt = output.format;

    if (*solve_cmd) {
      const NetworkConfig config = net.resolve();
      const ApproxSolution sol = solve(config, solver_options);
      if (fmt == "json") {
        os << nlohmann::json(sol).dump(2) << '\n';
      } else if (fmt == "csv") {
        os << "link,arrival_rate,blocking_prob\n";
        for (std::size_t i = 0; i < sol.arrival_rates.size(); ++i) {
          os << i + 1 << ',' << sol.arrival_rates[i] << ',' << sol.blocking_probs[i] << '\n';
        }
      } else {
        os << "capacity:   " << sol.capacity << '\n'
           << "iterations: " << sol.iterations << "  (residual " << sol.residual << ")\n"
           << "r:          " << join(sol.arrival_rates) << '\n'
           << "p_b:        " << join(sol.blocking_probs) << '\n';
        for (std::size_t i = 0; i < sol.occupancies.size(); ++i) {
          os << "phi[v" << i + 1 << "]:   " << join(sol.occupancies[i].masses, 4) << '\n';
        }
      }
      return kOk;
    }

    if (*exact_cmd) {
      const NetworkConfig config = net.resolve();
      ExactChainOptions options;
      options.state_cap = state_cap;
      const TransitionMatrix matrix = build_transition_matrix(config, options.state_cap);
      if (!dump_matrix.empty()) {
        Sink dump(dump_matrix, out);
        write_coo(dump.stream(), matrix);
      }
      ExactChainResult result;
      result.stationary = stationary(matrix, options);
      result.throughput = exact_throughput(config, result.stationary);
      result.marginals = exact_marginals(config, result.stationary);
      if (fmt == "json") {
        os << nlohmann::json(result).dump(2) << '\n';
      } else if (fmt == "csv") {
        os << "state,probability\n";
        for (std::size_t s = 0; s < result.stationary.size(); ++s) {
          os << s << ',' << result.stationary[s] << '\n';
        }
      } else {
        os << "throughput: " << result.throughput << '\n'
           << "states:     " << result.stationary.size() << '\n';
        for (std::size_t i = 0; i < result.marginals.size(); ++i) {
          os << "marginal[v" << i + 1 << "]: " << join(result.marginals[i].masses, 4) << '\n';
        }
      }
      return kOk;
    }

    if (*sim_cmd) {
      const NetworkConfig config = net.resolve();
      const SimReport report = simulate(config, sim.settings());
      if (fmt == "json") {
        os << nlohmann::json(report).dump(2) << '\n';
      } else if (fmt == "csv") {
        write_histogram_csv(os, report);
      } else {
        os << "throughput: " << report.throughput << " +/- " << report.stderr_throughput << '\n'
           << "delivered:  " << report.delivered << " in " << report.measured_epochs << " epochs\n";
        if (report.delivered > 0) {
          os << "delay:      mean " << report.delay_mean() << ", variance " << report.delay_variance()
             << '\n';
        }
        for (std::size_t i = 0; i < report.occupancy_freq.size(); ++i) {
          os << "occupancy[v" << i + 1 << "]: " << join(report.occupancy_freq[i].masses, 4) << '\n';
        }
      }
      return kOk;
    }

    if (*delay_cmd) {
      const NetworkConfig config = net.resolve();
      const ApproxSolution sol = solve(config, solver_options);
      const DiscretePMF pmf = total_delay(config, sol, delay_options);
      const PMFSummary summary = summarize(pmf);
      if (fmt == "json") {
        nlohmann::json j = pmf;
        j["summary"] = summary;
        j["view"] = to_string(delay_options.view);
        os << j.dump(2) << '\n';
      } else if (fmt == "csv") {
        write_csv(os, pmf);
      } else {
        os << "mean:      " << summary.mean << '\n'
           << "variance:  " << summary.variance << '\n'
           << "p50/p90/p99: " << summary.p50 << " / " << summary.p90 << " / " << summary.p99 << '\n'
           << "support:   " << pmf.min_support << ".." << pmf.max_support() << '\n'
           << "tail mass: " << summary.tail_mass << '\n';
      }
      return kOk;
    }

    if (*sweep_cmd) {
      const std::vector<int> values = parse_range(range);
      std::vector<NetworkConfig> configs;
      if (vary == "hops") {
        if (!net.eps_uniform || !net.buffers_uniform) {
          throw UsageError("--vary hops needs --eps-uniform and --buffers-uniform");
        }
        for (int h : values) configs.push_back(validate(make_uniform_config(h, *net.eps_uniform, *net.buffers_uniform)));
      } else {
        NetworkConfig base = net.resolve();
        for (int m : values) {
          NetworkConfig c = base;
          std::fill(c.buffers.begin(), c.buffers.end(), m);
          configs.push_back(validate(c));
        }
      }
      nlohmann::json rows = nlohmann::json::array();
      if (fmt != "json") {
        os << "hops,buffer,capacity";
        if (with_sim) os << ",sim_capacity,sim_stderr";
        os << '\n';
      }
      for (std::size_t k = 0; k < configs.size(); ++k) {
        const NetworkConfig& c = configs[k];
        const double cap = solve(c, solver_options).capacity;
        const int m = vary == "hops" ? *net.buffers_uniform : values[k];
        nlohmann::json row{{"hops", c.hops}, {"buffer", m}, {"capacity", cap}};
        std::optional<SimReport> report;
        if (with_sim) {
          report = simulate(c, SimSettings{sim.epochs, std::nullopt, sim.seed, 1});
          row["sim_capacity"] = report->throughput;
          row["sim_stderr"] = report->stderr_throughput;
        }
        if (fmt == "json") {
          rows.push_back(row);
        } else {
          os << c.hops << ',' << m << ',' << cap;
          if (report) os << ',' << report->throughput << ',' << report->stderr_throughput;
          os << '\n';
        }
      }
      if (fmt == "json") os << rows.dump(2) << '\n';
      return kOk;
    }

    if (*classify_cmd) {
      const NetworkConfig config = net.resolve();
      const ApproxSolution sol = solve(config, solver_options);
      const std::vector<NodeClass> classes = classify(config, sol, delta);
      if (fmt == "json") {
        os << nlohmann::json(classes).dump(2) << '\n';
      } else {
        if (fmt == "csv") os << "node,type,in_rate,out_rate\n";
        for (const NodeClass& c : classes) {
          if (fmt == "csv") {
            os << c.node << ',' << to_string(c.type) << ',' << c.in_rate << ',' << c.out_rate << '\n';
          } else {
            os << 'v' << c.node << ": " << to_string(c.type) << "  in " << c.in_rate << "  out "
               << c.out_rate << '\n';
          }
        }
      }
      return kOk;
    }

    if (*allocate_cmd) {
      const NetworkConfig config = net.resolve();
      PlannerOptions options{delta, solver_options, delay_options};
      const AllocationPlan plan = allocate(config, budget, options);
      std::optional<SimReport> check;
      if (with_sim) {
        NetworkConfig planned = config;
        planned.buffers = plan.buffers;
        check = simulate(planned, SimSettings{sim.epochs, std::nullopt, sim.seed, 1});
      }
      if (fmt == "json") {
        nlohmann::json j = plan;
        if (check) {
          j["sim_capacity"] = check->throughput;
          j["sim_stderr"] = check->stderr_throughput;
        }
        os << j.dump(2) << '\n';
      } else if (fmt == "csv") {
        os << "step,node,capacity,mean_delay\n";
        os << 0 << ",," << plan.baseline.capacity << ',' << plan.baseline.mean_delay << '\n';
        for (std::size_t s = 0; s < plan.trajectory.size(); ++s) {
          const auto& st = plan.trajectory[s];
          os << s + 1 << ',' << st.node << ',' << st.capacity << ',' << st.mean_delay << '\n';
        }
      } else {
        os << "baseline:   capacity " << plan.baseline.capacity << ", mean delay "
           << plan.baseline.mean_delay << '\n';
        os << "increments:";
        for (int inc : plan.increments) os << ' ' << inc;
        os << "\nbuffers:   ";
        for (int b : plan.buffers) os << ' ' << b;
        os << "\nplanned:    capacity " << plan.capacity << ", mean delay " << plan.mean_delay << '\n';
        if (check) {
          os << "simulated:  capacity " << check->throughput << " +/- " << check->stderr_throughput
             << '\n';
        }
      }
      return kOk;
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const ConfigError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const ConvergenceError& e) {
    err << "not converged: " << e.what() << '\n';
    return kNoConvergence;
  } catch (const StateCapExceeded& e) {
    err << "refused: " << e.what() << '\n';
    return kInfeasible;
  } catch (const DegenerateError& e) {
    err << "infeasible: " << e.what() << '\n';
    return kInfeasible;
  }
  return kUsage;
}

}  // namespace linenet::cli
