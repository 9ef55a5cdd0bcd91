#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "windex/mdp.hpp"
#include "windex/scheduler.hpp"
#include "windex/trainer.hpp"

namespace windex {

// Thrown for schema violations; message names the offending key.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario files ("windex-scenario-v1"): UE list, RBG budget, horizon and
// feedback parameters. Unknown keys are rejected.
ScenarioSpec parse_scenario_config(const std::string& path);

// Slicing files ("windex-slices-v1").
SliceConfig parse_slice_config(const std::string& path);

// Training files ("windex-train-v1").
TrainConfig parse_train_config(const std::string& path);

// Oracle verification files ("windex-oracle-v1").
struct OracleVerifyConfig {
  int instances = 50;
  int max_queue_min = 5;
  int max_queue_max = 30;
  double beta_min = 0.05;
  double beta_max = 0.9;
  double gamma_min = 0.8;
  double gamma_max = 0.99;
  double mu_min = 0.0;
  double mu_max = 2.0;
  int lambda_grid_points = 20;
  double lambda_max = 3.0;
  double slack = 1e-8;
  std::uint64_t seed = 0;
  std::vector<TabularMDP> fixed;  // instances checked before the random sweep

  TabularMDP sample_instance(Rng& rng) const;
  std::vector<double> lambda_grid() const;
};

OracleVerifyConfig parse_oracle_config(const std::string& path);
OracleVerifyConfig default_oracle_config();

}  // namespace windex
