#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "windex/env.hpp"
#include "windex/mdp.hpp"
#include "windex/net.hpp"

namespace windex {

// Which violation signal enters the per-step reward: the batch-constant
// context features, or realized running violation fractions.
enum class RewardViolations { constant, realized };

struct TrainConfig {
  ServiceClassSpec spec = default_spec(ServiceClass::eMBB);
  int episodes_total = 20000;
  int episode_len = 5000;  // T, in TTIs
  int batch_size = 20;     // R
  double lr = 0.1;         // per-class default, see default_lr()
  bool lr_decay = false;   // optional 1/sqrt(b) schedule
  double sigmoid_m = 5.0;
  double gamma = 0.99;
  std::uint64_t seed = 0;
  RewardViolations reward_violations = RewardViolations::constant;

  // Radio-mode environment.
  double max_queue_bytes = 2.0e5;  // buffer cap and normalization scale
  ChannelProcess channel = ChannelProcess::random_walk(kCqiMin, kCqiMax, 0.3, 10);
  CapacityModel capacity = CapacityModel::standard();
  int high_rbs = 9;
  int low_rbs = 2;

  // When set, episodes run on the tabular MDP instead of the radio
  // environment; used to cross-check learned indices against the oracle.
  std::optional<TabularMDP> tabular;

  int jobs = 1;  // episode workers per batch

  void validate() const;
};

// Table 4 learning rates.
double default_lr(ServiceClass c);

// Frozen per-batch context: initial state, activation cost and the violation
// features, all held fixed for every episode of the batch.
struct BatchContext {
  std::array<double, kNetInputs> s0{};
  double lambda = 0.0;
  double v_tpt = 0.0;
  double v_tsls = 0.0;
};

struct EpisodeRecord {
  double g = 0.0;              // discounted return G_e
  std::vector<double> h;       // policy-gradient accumulator h_e
  double mean_tpt_mbps = 0.0;
  std::uint64_t seed = 0;
};

struct BatchLog {
  int batch = 0;
  double mean_return = 0.0;
  double mean_tpt_mbps = 0.0;
  double grad_norm = 0.0;
};

struct TrainResult {
  WhittleNetwork net;
  std::vector<BatchLog> log;
  bool diverged = false;
};

BatchContext sample_batch_context(const WhittleNetwork& net, const TrainConfig& cfg, Rng& rng);

EpisodeRecord run_episode(const WhittleNetwork& net, const BatchContext& ctx,
                          const TrainConfig& cfg, std::uint64_t episode_seed);

TrainResult train(const TrainConfig& cfg);

// Input normalization matching the feature ranges of `cfg`.
InputNorm make_input_norm(const TrainConfig& cfg);

void write_training_log_csv(const std::vector<BatchLog>& log, const std::string& path);

}  // namespace windex
