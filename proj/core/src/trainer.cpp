#include "windex/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace windex {

void TrainConfig::validate() const {
  spec.validate();
  if (episodes_total < 1) throw std::invalid_argument("TrainConfig: episodes_total must be >= 1");
  if (episode_len < 1) throw std::invalid_argument("TrainConfig: episode_len must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (sigmoid_m <= 0.0) throw std::invalid_argument("TrainConfig: sigmoid_m must be > 0");
  if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("TrainConfig: gamma outside [0,1)");
  if (max_queue_bytes <= 0.0) throw std::invalid_argument("TrainConfig: max_queue_bytes <= 0");
  if (jobs < 1) throw std::invalid_argument("TrainConfig: jobs must be >= 1");
  if (tabular) tabular->validate();
}

double default_lr(ServiceClass c) {
  switch (c) {
    case ServiceClass::eMBB: return 0.1;
    case ServiceClass::URLLC: return 0.75;
    case ServiceClass::XR: return 0.1;
    case ServiceClass::mMTC: return 0.25;
  }
  return 0.1;
}

InputNorm make_input_norm(const TrainConfig& cfg) {
  InputNorm norm;
  if (cfg.tabular) {
    norm.scale[0] = 1.0 / cfg.tabular->max_queue;
  } else {
    norm.scale[0] = 1.0 / cfg.max_queue_bytes;
  }
  norm.scale[1] = 1.0 / kCqiMax;
  norm.scale[2] = 1.0 / cfg.spec.tsls_bound_L;
  // violation features already live in [0,1]
  return norm;
}

BatchContext sample_batch_context(const WhittleNetwork& net, const TrainConfig& cfg, Rng& rng) {
  BatchContext ctx;
  if (cfg.tabular) {
    ctx.s0[0] = static_cast<double>(rng.uniform_int(0, cfg.tabular->max_queue));
    ctx.s0[1] = 0.0;
    ctx.s0[2] = 0.0;
  } else {
    ctx.s0[0] = rng.uniform(0.0, cfg.max_queue_bytes);
    ctx.s0[1] = static_cast<double>(rng.uniform_int(kCqiMin, kCqiMax));
    ctx.s0[2] = static_cast<double>(rng.uniform_int(0, cfg.spec.tsls_bound_L));
  }
  if (cfg.tabular) {
    // oracle cross-check mode: the tabular MDP has no violation machinery
    ctx.v_tpt = 0.0;
    ctx.v_tsls = 0.0;
  } else {
    ctx.v_tpt = rng.uniform();
    ctx.v_tsls = rng.uniform();
  }
  ctx.s0[3] = ctx.v_tpt;
  ctx.s0[4] = ctx.v_tsls;
  ctx.lambda = net.forward(ctx.s0);
  return ctx;
}

namespace {

// One TTI of the tabular episode environment.
struct TabularEpisodeEnv {
  const TabularMDP& mdp;
  int s;

  double step(int action, Rng& rng, double& served_out) {
    const int served = mdp.served(s, action);
    served_out = served;
    const auto [s_stay, s_arr] = mdp.successors(s, action);
    s = rng.bernoulli(mdp.beta) ? s_arr : s_stay;
    return static_cast<double>(served);
  }
};

}  // namespace

EpisodeRecord run_episode(const WhittleNetwork& net, const BatchContext& ctx,
                          const TrainConfig& cfg, std::uint64_t episode_seed) {
  Rng rng(episode_seed);
  EpisodeRecord rec;
  rec.seed = episode_seed;
  rec.h.assign(kNetParams, 0.0);
  std::vector<double> scratch;

  const double lambda = ctx.lambda;
  double discount = 1.0;
  double tpt_sum_mbps = 0.0;

  if (cfg.tabular) {
    TabularEpisodeEnv env{*cfg.tabular, static_cast<int>(ctx.s0[0])};
    std::array<double, kNetInputs> state{0.0, 0.0, 0.0, ctx.s0[3], ctx.s0[4]};
    for (int t = 0; t < cfg.episode_len; ++t) {
      state[0] = static_cast<double>(env.s);
      const double f = net.forward(state);
      const double p = action_prob(f, lambda, cfg.sigmoid_m);
      const int a = rng.bernoulli(p) ? 1 : 0;
      logprob_grad(net, state, lambda, cfg.sigmoid_m, a, rec.h, scratch);
      double served = 0.0;
      env.step(a, rng, served);
      // reward mirrors the oracle MDP so returns are directly comparable;
      // the frozen violation features only shift it by a constant
      const double reward =
          cfg.spec.w_r * ((1.0 + cfg.tabular->mu_r) * served -
                          (a == 1 ? cfg.tabular->mu_l : 0.0)) +
          cfg.spec.w_tpt * ctx.v_tpt + cfg.spec.w_tsls * ctx.v_tsls - lambda * a;
      rec.g += discount * reward;
      discount *= cfg.gamma;
    }
    rec.mean_tpt_mbps = 0.0;
    return rec;
  }

  UEState ue;
  ue.buffer_bytes = rng.uniform(0.0, cfg.max_queue_bytes);
  ue.cqi = static_cast<int>(rng.uniform_int(kCqiMin, kCqiMax));
  ue.tsls = 0;
  ChannelProcess channel = cfg.channel;  // private copy, advanced per episode
  double carry = 0.0;
  // normalize realized throughput by the best-case high action so the
  // convex-combination terms share a scale
  const double tpt_norm = cfg.capacity.mean_bytes(kCqiMax, cfg.high_rbs);

  std::int64_t tpt_viol = 0, tsls_viol = 0;
  std::array<double, kNetInputs> state{};
  for (int t = 0; t < cfg.episode_len; ++t) {
    // reward terms come from the frozen batch context; network inputs come
    // from s0 so they stay decoupled from the reward shift
    double v_tpt = ctx.v_tpt, v_tsls = ctx.v_tsls;
    double in_tpt = ctx.s0[3], in_tsls = ctx.s0[4];
    if (cfg.reward_violations == RewardViolations::realized && t > 0) {
      v_tpt = static_cast<double>(tpt_viol) / t;
      v_tsls = static_cast<double>(tsls_viol) / t;
      in_tpt = v_tpt;
      in_tsls = v_tsls;
    }
    state = {ue.buffer_bytes, static_cast<double>(ue.cqi), static_cast<double>(ue.tsls),
             in_tpt, in_tsls};
    const double f = net.forward(state);
    const double p = action_prob(f, lambda, cfg.sigmoid_m);
    const int a = rng.bernoulli(p) ? 1 : 0;
    logprob_grad(net, state, lambda, cfg.sigmoid_m, a, rec.h, scratch);

    const int rbs = a == 1 ? cfg.high_rbs : cfg.low_rbs;
    const double tpt_threshold =
        cfg.spec.tpt_bound_B * cfg.capacity.mean_bytes(ue.cqi, cfg.high_rbs);
    const StepResult sr =
        step_ue(ue, channel, cfg.spec.traffic, cfg.capacity, rbs, a == 1, carry, rng);
    ue.buffer_bytes = std::min(ue.buffer_bytes, cfg.max_queue_bytes);
    if (sr.served_bytes < tpt_threshold) ++tpt_viol;
    if (ue.tsls > cfg.spec.tsls_bound_L) ++tsls_viol;

    const double r_norm = sr.served_bytes / tpt_norm;
    const double reward = cfg.spec.w_r * r_norm + cfg.spec.w_tpt * v_tpt +
                          cfg.spec.w_tsls * v_tsls - lambda * a;
    if (!std::isfinite(reward)) {
      throw std::runtime_error("run_episode: non-finite reward at t=" + std::to_string(t));
    }
    rec.g += discount * reward;
    discount *= cfg.gamma;
    tpt_sum_mbps += sr.realized_tpt_mbps;
  }
  rec.mean_tpt_mbps = tpt_sum_mbps / cfg.episode_len;
  return rec;
}

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();
  Rng master(cfg.seed);
  InputNorm norm = make_input_norm(cfg);
  Rng init_rng = master.spawn(0);
  TrainResult result;
  result.net = WhittleNetwork::init(init_rng, norm);
  result.net.set_class_tag(to_string(cfg.spec.class_id));

  const int num_batches = (cfg.episodes_total + cfg.batch_size - 1) / cfg.batch_size;
  std::vector<double> last_good = result.net.params();

  for (int b = 0; b < num_batches; ++b) {
    Rng batch_rng = master.spawn(static_cast<std::uint64_t>(b) + 1);
    const BatchContext ctx = sample_batch_context(result.net, cfg, batch_rng);

    std::vector<EpisodeRecord> episodes(cfg.batch_size);
    std::vector<std::uint64_t> seeds(cfg.batch_size);
    for (int e = 0; e < cfg.batch_size; ++e) seeds[e] = batch_rng.next_u64();

    if (cfg.jobs <= 1) {
      for (int e = 0; e < cfg.batch_size; ++e) {
        episodes[e] = run_episode(result.net, ctx, cfg, seeds[e]);
      }
    } else {
      std::vector<std::thread> workers;
      std::atomic<int> next{0};
      const int n_workers = std::min(cfg.jobs, cfg.batch_size);
      for (int w = 0; w < n_workers; ++w) {
        workers.emplace_back([&] {
          for (int e = next.fetch_add(1); e < cfg.batch_size; e = next.fetch_add(1)) {
            episodes[e] = run_episode(result.net, ctx, cfg, seeds[e]);
          }
        });
      }
      for (auto& w : workers) w.join();
    }

    double g_bar = 0.0, tpt_bar = 0.0;
    for (const auto& rec : episodes) {
      g_bar += rec.g;
      tpt_bar += rec.mean_tpt_mbps;
    }
    g_bar /= cfg.batch_size;
    tpt_bar /= cfg.batch_size;

    // deterministic merge order by episode index
    std::vector<double> grad(kNetParams, 0.0);
    for (const auto& rec : episodes) {
      const double adv = rec.g - g_bar;
      for (int i = 0; i < kNetParams; ++i) grad[i] += adv * rec.h[i];
    }
    double grad_norm = 0.0;
    for (double g : grad) grad_norm += g * g;
    grad_norm = std::sqrt(grad_norm);

    const double lr = cfg.lr_decay ? cfg.lr / std::sqrt(static_cast<double>(b) + 1.0) : cfg.lr;
    result.net.adam_step(grad, lr);

    double max_abs = 0.0;
    bool finite = true;
    for (double p : result.net.params()) {
      if (!std::isfinite(p)) finite = false;
      max_abs = std::max(max_abs, std::abs(p));
    }
    if (!finite || max_abs > 1e6) {
      result.net.mutable_params() = last_good;  // roll back to last checkpoint
      result.diverged = true;
      break;
    }
    last_good = result.net.params();

    result.log.push_back({b, g_bar, tpt_bar, grad_norm});
  }
  return result;
}

void write_training_log_csv(const std::vector<BatchLog>& log, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_training_log_csv: cannot open " + path);
  out << "batch,mean_return,mean_tpt_mbps,grad_norm\n";
  for (const auto& row : log) {
    out << row.batch << "," << row.mean_return << "," << row.mean_tpt_mbps << ","
        << row.grad_norm << "\n";
  }
}

}  // namespace windex
