#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "windex/config.hpp"
#include "windex/mdp.hpp"
#include "windex/metrics.hpp"
#include "windex/net.hpp"
#include "windex/scheduler.hpp"
#include "windex/trainer.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;
constexpr int kExitVerification = 3;

int cmd_train(const std::string& class_name, const std::string& config_path,
              const std::string& out_path, const std::string& log_path, std::uint64_t seed,
              int episodes_override, int jobs) {
  windex::TrainConfig cfg;
  if (!config_path.empty()) {
    cfg = windex::parse_train_config(config_path);
  } else {
    cfg.spec = windex::default_spec(windex::service_class_from_string(class_name));
    cfg.lr = windex::default_lr(cfg.spec.class_id);
  }
  if (!class_name.empty() && config_path.empty()) {
    // class already applied above
  } else if (!class_name.empty()) {
    const auto c = windex::service_class_from_string(class_name);
    if (c != cfg.spec.class_id) {
      throw windex::ConfigError("--class disagrees with the config file's class");
    }
  }
  cfg.seed = seed;
  if (episodes_override > 0) cfg.episodes_total = episodes_override;
  if (jobs > 0) cfg.jobs = jobs;

  windex::TrainResult result = windex::train(cfg);
  result.net.save(out_path);
  if (!log_path.empty()) windex::write_training_log_csv(result.log, log_path);
  if (result.diverged) {
    std::cerr << "training diverged; saved the last good checkpoint\n";
    return kExitRuntime;
  }
  std::cout << "trained " << windex::to_string(cfg.spec.class_id) << " model over "
            << cfg.episodes_total << " episodes -> " << out_path << "\n";
  return 0;
}

int cmd_run(const std::string& scenario_path, const std::string& policy_name,
            const std::string& slices_path, std::uint64_t seed, const std::string& out_path,
            const std::string& csv_path) {
  windex::ScenarioSpec spec = windex::parse_scenario_config(scenario_path);

  windex::Policy policy;
  if (!slices_path.empty()) {
    policy = windex::SlicedPolicy{windex::parse_slice_config(slices_path)};
  } else if (policy_name == "windex") {
    policy = windex::WindexPolicy{};
  } else if (policy_name == "oracle") {
    policy = windex::WindexPolicy{std::make_shared<windex::OracleIndexProvider>(
        spec.capacity, spec.rb_profile.high)};
  } else {
    policy = windex::baseline_from_string(policy_name);
  }

  const windex::MetricsReport report = windex::run_scenario(spec, policy, seed);
  if (!out_path.empty()) {
    windex::export_report(report, out_path, windex::ReportFormat::structured);
  }
  if (!csv_path.empty()) {
    windex::export_report(report, csv_path, windex::ReportFormat::csv);
  }
  std::cout << "policy=" << report.policy << " horizon=" << report.horizon
            << " summed_violation_frac=" << report.summed_violation_frac() << "\n";
  for (const auto& [name, agg] : report.per_class) {
    std::cout << "  " << name << ": mean_tpt=" << agg.mean_tpt_mbps
              << " Mbps, tpt_viol=" << agg.tpt_violation_frac
              << ", tsls_viol=" << agg.tsls_violation_frac << "\n";
  }
  return 0;
}

int cmd_verify_oracle(const std::string& config_path, bool verbose) {
  windex::OracleVerifyConfig cfg = config_path.empty()
                                       ? windex::default_oracle_config()
                                       : windex::parse_oracle_config(config_path);
  const auto grid = cfg.lambda_grid();
  windex::Rng rng(cfg.seed);

  int failures = 0;
  auto check_instance = [&](const windex::TabularMDP& mdp, int idx) {
    bool ok = true;
    for (double lambda : grid) {
      const windex::ValueTable vt = windex::value_iterate(mdp, lambda);
      const auto concave = windex::check_concavity(vt, cfg.slack);
      const auto threshold = windex::check_threshold(vt);
      if (!concave.ok || !threshold.ok) {
        ok = false;
        for (const auto& v : concave.violations) std::cerr << "instance " << idx << ": " << v << "\n";
        for (const auto& v : threshold.violations) std::cerr << "instance " << idx << ": " << v << "\n";
      }
    }
    const auto indexable = windex::check_indexability(mdp, grid, 1e-9, cfg.slack);
    if (!indexable.ok) {
      ok = false;
      for (const auto& v : indexable.violations) std::cerr << "instance " << idx << ": " << v << "\n";
    }
    if (verbose) {
      std::cout << "instance " << idx << " (max_queue=" << mdp.max_queue << ", beta=" << mdp.beta
                << ", gamma=" << mdp.gamma << "): " << (ok ? "ok" : "FAILED") << "\n";
    }
    if (!ok) ++failures;
  };

  int idx = 0;
  for (const auto& mdp : cfg.fixed) check_instance(mdp, idx++);
  for (int i = 0; i < cfg.instances; ++i) check_instance(cfg.sample_instance(rng), idx++);

  if (failures > 0) {
    std::cerr << failures << " of " << idx << " instances failed verification\n";
    return kExitVerification;
  }
  std::cout << "all " << idx << " instances pass concavity, threshold and indexability checks\n";
  return 0;
}

int cmd_bench_inference(int ues, int threads, int iters) {
  windex::Rng rng(42);
  const windex::WhittleNetwork net = windex::WhittleNetwork::init(rng);
  std::vector<std::array<double, windex::kNetInputs>> states(ues);
  for (auto& s : states) {
    s = {rng.uniform(0.0, 2e5), static_cast<double>(rng.uniform_int(1, 15)),
         static_cast<double>(rng.uniform_int(0, 50)), rng.uniform(), rng.uniform()};
  }

  // single forward pass latency
  std::vector<double> single_us;
  single_us.reserve(iters);
  volatile double sink = 0.0;
  for (int i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    sink = net.forward(states[i % ues]);
    const auto t1 = std::chrono::steady_clock::now();
    single_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }
  (void)sink;

  // full batch of `ues` forward passes split across `threads` workers
  std::vector<double> batch_us;
  batch_us.reserve(iters);
  for (int i = 0; i < iters; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    if (threads <= 1) {
      for (int u = 0; u < ues; ++u) sink = net.forward(states[u]);
    } else {
      std::vector<std::thread> workers;
      std::atomic<int> next{0};
      for (int w = 0; w < threads; ++w) {
        workers.emplace_back([&] {
          for (int u = next.fetch_add(1); u < ues; u = next.fetch_add(1)) {
            volatile double out = net.forward(states[u]);
            (void)out;
          }
        });
      }
      for (auto& w : workers) w.join();
    }
    const auto t1 = std::chrono::steady_clock::now();
    batch_us.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
  }

  auto percentile = [](std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const std::size_t k = static_cast<std::size_t>(p * (v.size() - 1));
    return v[k];
  };
  std::cout << "single forward pass: p50=" << percentile(single_us, 0.5)
            << " us, p99=" << percentile(single_us, 0.99) << " us\n";
  std::cout << ues << "-UE batch with " << threads << " threads: p50="
            << percentile(batch_us, 0.5) << " us, p99=" << percentile(batch_us, 0.99)
            << " us\n";
  return 0;
}

int cmd_index_table(const windex::TabularMDP& mdp, double lambda_max,
                    const std::string& out_path) {
  const windex::IndexTable table = windex::index_table(mdp, 0.0, lambda_max);
  windex::export_index_csv(table, out_path);
  std::cout << "wrote " << table.index.size() << " indices -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"windex: whittle-index MAC scheduling simulator, trainer and verifier"};
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "train an index network for one service class");
  std::string train_class, train_config, train_out = "model.net", train_log;
  std::uint64_t train_seed = 0;
  int train_episodes = 0, train_jobs = 0;
  train->add_option("--class", train_class, "service class: embb|urllc|mmtc|xr");
  train->add_option("--config", train_config, "training config file");
  train->add_option("--out", train_out, "output model file")->required();
  train->add_option("--log", train_log, "training log CSV");
  train->add_option("--seed", train_seed, "rng seed");
  train->add_option("--episodes", train_episodes, "override total episodes");
  train->add_option("--jobs", train_jobs, "episode workers per batch");

  // run
  auto* run = app.add_subcommand("run", "run a scheduling scenario");
  std::string run_scenario, run_policy = "windex", run_slices, run_out, run_csv;
  std::uint64_t run_seed = 0;
  run->add_option("--scenario", run_scenario, "scenario config file")->required();
  run->add_option("--policy", run_policy, "windex|oracle|maxweight|maxcqi|pf|rr");
  run->add_option("--slices", run_slices, "slice config file (sliced mode)");
  run->add_option("--seed", run_seed, "rng seed");
  run->add_option("--out", run_out, "structured report output");
  run->add_option("--csv", run_csv, "CSV report output");

  // verify-oracle
  auto* verify = app.add_subcommand("verify-oracle", "check the indexability theory numerically");
  std::string verify_config;
  bool verify_verbose = false;
  verify->add_option("--config", verify_config, "oracle sweep config file");
  verify->add_flag("--verbose", verify_verbose, "per-instance output");

  // bench-inference
  auto* bench = app.add_subcommand("bench-inference", "forward-pass latency percentiles");
  int bench_ues = 20, bench_threads = 2, bench_iters = 2000;
  bench->add_option("--ues", bench_ues, "number of UEs per batch");
  bench->add_option("--threads", bench_threads, "worker threads");
  bench->add_option("--iters", bench_iters, "measurement iterations");

  // index-table
  auto* table = app.add_subcommand("index-table", "export oracle whittle indices as CSV");
  windex::TabularMDP table_mdp;
  double table_lambda_max = 5.0;
  std::string table_out = "index.csv";
  table->add_option("--max-queue", table_mdp.max_queue);
  table->add_option("--r0", table_mdp.r0);
  table->add_option("--r1", table_mdp.r1);
  table->add_option("--beta", table_mdp.beta);
  table->add_option("--gamma", table_mdp.gamma);
  table->add_option("--mu-r", table_mdp.mu_r);
  table->add_option("--mu-l", table_mdp.mu_l);
  table->add_option("--lambda-max", table_lambda_max);
  table->add_option("--out", table_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (train->parsed()) {
      if (train_class.empty() && train_config.empty()) {
        std::cerr << "train: need --class or --config\n";
        return kExitValidation;
      }
      return cmd_train(train_class, train_config, train_out, train_log, train_seed,
                       train_episodes, train_jobs);
    }
    if (run->parsed()) {
      return cmd_run(run_scenario, run_policy, run_slices, run_seed, run_out, run_csv);
    }
    if (verify->parsed()) return cmd_verify_oracle(verify_config, verify_verbose);
    if (bench->parsed()) return cmd_bench_inference(bench_ues, bench_threads, bench_iters);
    if (table->parsed()) return cmd_index_table(table_mdp, table_lambda_max, table_out);
  } catch (const windex::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
