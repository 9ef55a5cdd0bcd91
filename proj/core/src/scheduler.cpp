#include "windex/scheduler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace windex {

int ScenarioSpec::resolved_top_R() const {
  const int derived = rb_profile.high > 0 ? total_rbgs / rb_profile.high : 0;
  const int r = top_R > 0 ? top_R : derived;
  return std::min<int>(r, static_cast<int>(ues.size()));
}

void ScenarioSpec::validate() const {
  if (ues.empty()) throw std::invalid_argument("ScenarioSpec: no UEs");
  if (total_rbgs < 1) throw std::invalid_argument("ScenarioSpec: total_rbgs must be >= 1");
  if (rb_profile.high <= rb_profile.low || rb_profile.low < 0) {
    throw std::invalid_argument("ScenarioSpec: need high > low >= 0 in rb profile");
  }
  if (horizon < 0) throw std::invalid_argument("ScenarioSpec: negative horizon");
  if (window < 1) throw std::invalid_argument("ScenarioSpec: window must be >= 1");
  if (tpt_window < 1) throw std::invalid_argument("ScenarioSpec: tpt_window must be >= 1");
  const int r = resolved_top_R();
  if (r < 1) throw std::invalid_argument("ScenarioSpec: budget admits no high grant");
  if (r * rb_profile.high > total_rbgs) {
    throw std::invalid_argument("ScenarioSpec: top_R high grants exceed the RBG budget");
  }
  for (const auto& ue : ues) ue.spec.validate();
}

AllocationDecision allocate_top_r(const std::vector<double>& indices, int top_R,
                                  int total_rbgs, const RbProfile& profile) {
  const int n = static_cast<int>(indices.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (indices[a] != indices[b]) return indices[a] > indices[b];
    return a < b;
  });

  AllocationDecision d;
  d.grants.assign(n, Grant::zero);
  d.indices = indices;
  int budget = total_rbgs;
  const int highs = std::min(top_R, n);
  for (int k = 0; k < highs; ++k) {
    d.grants[order[k]] = Grant::high;
    budget -= profile.high;
  }
  if (budget < 0) throw std::logic_error("allocate_top_r: high grants exceed budget");
  for (int k = highs; k < n; ++k) {
    if (profile.low > 0 && budget >= profile.low) {
      d.grants[order[k]] = Grant::low;
      budget -= profile.low;
    }
  }
  return d;
}

double update_violation_feature(double v, double violation_frac, double eta) {
  if (violation_frac > 0.0) {
    v += eta * violation_frac;
  } else {
    v -= eta * v;
  }
  return std::clamp(v, 0.0, 1.0);
}

BaselineKind baseline_from_string(const std::string& name) {
  if (name == "maxcqi") return BaselineKind::max_cqi;
  if (name == "pf") return BaselineKind::prop_fair;
  if (name == "maxweight") return BaselineKind::max_weight;
  if (name == "rr") return BaselineKind::round_robin;
  throw std::invalid_argument("unknown baseline scheduler: " + name);
}

const char* to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::max_cqi: return "maxcqi";
    case BaselineKind::prop_fair: return "pf";
    case BaselineKind::max_weight: return "maxweight";
    case BaselineKind::round_robin: return "rr";
  }
  return "?";
}

AllocationDecision baseline_allocate(BaselineKind kind, const std::vector<UEState>& states,
                                     BaselineHistory& history, int top_R, int total_rbgs,
                                     const RbProfile& profile) {
  const int n = static_cast<int>(states.size());
  if (history.avg_cqi.empty()) {
    history.avg_cqi.resize(n);
    for (int i = 0; i < n; ++i) history.avg_cqi[i] = states[i].cqi;
  }

  std::vector<double> weights(n, 0.0);
  switch (kind) {
    case BaselineKind::max_cqi:
      for (int i = 0; i < n; ++i) weights[i] = states[i].cqi;
      break;
    case BaselineKind::prop_fair:
      for (int i = 0; i < n; ++i) {
        history.avg_cqi[i] =
            (1.0 - history.pf_alpha) * history.avg_cqi[i] + history.pf_alpha * states[i].cqi;
        weights[i] = states[i].cqi / history.avg_cqi[i];
      }
      break;
    case BaselineKind::max_weight:
      for (int i = 0; i < n; ++i) weights[i] = states[i].cqi * states[i].buffer_bytes;
      break;
    case BaselineKind::round_robin: {
      // rotation: cursor..cursor+top_R-1 get the highest weights
      for (int k = 0; k < n; ++k) {
        const int ue = (history.rr_cursor + k) % n;
        weights[ue] = n - k;
      }
      history.rr_cursor = (history.rr_cursor + top_R) % n;
      break;
    }
  }
  return allocate_top_r(weights, top_R, total_rbgs, profile);
}

NetIndexProvider::NetIndexProvider(std::vector<WhittleNetwork> nets) : nets_(std::move(nets)) {}

NetIndexProvider NetIndexProvider::from_scenario(const ScenarioSpec& spec) {
  std::vector<WhittleNetwork> nets;
  nets.reserve(spec.ues.size());
  for (std::size_t i = 0; i < spec.ues.size(); ++i) {
    const auto& ue = spec.ues[i];
    if (ue.model_file.empty()) {
      throw std::runtime_error("windex policy: ue " + std::to_string(i) + " has no model file");
    }
    WhittleNetwork net = WhittleNetwork::load(ue.model_file);
    const std::string expected = to_string(ue.spec.class_id);
    if (net.class_tag() != expected) {
      throw std::runtime_error("model " + ue.model_file + " is for class '" + net.class_tag() +
                               "' but ue " + std::to_string(i) + " is '" + expected + "'");
    }
    nets.push_back(std::move(net));
  }
  return NetIndexProvider(std::move(nets));
}

double NetIndexProvider::index(int ue_id, const UEState& state,
                               const ServiceClassSpec&) const {
  return nets_.at(ue_id).forward({state.buffer_bytes, static_cast<double>(state.cqi),
                                  static_cast<double>(state.tsls), state.v_tpt, state.v_tsls});
}

OracleIndexProvider::OracleIndexProvider(const CapacityModel& cap, int high_rbs)
    : OracleIndexProvider(cap, high_rbs, Params{}) {}

OracleIndexProvider::OracleIndexProvider(const CapacityModel& cap, int high_rbs, Params params)
    : cap_(cap), high_rbs_(high_rbs), params_(params) {
  TabularMDP mdp;
  mdp.max_queue = params.max_queue;
  mdp.r0 = 0;
  mdp.r1 = 1;
  mdp.beta = params.beta;
  mdp.gamma = params.gamma;
  table_ = index_table(mdp, 0.0, 5.0, 1e-4);
}

double OracleIndexProvider::index(int, const UEState& state,
                                  const ServiceClassSpec& spec) const {
  const int bucket = std::min<int>(params_.max_queue,
                                   static_cast<int>(state.buffer_bytes / params_.quantum_bytes));
  const double chan = cap_.mean_bytes(state.cqi, high_rbs_) / cap_.mean_bytes(kCqiMax, high_rbs_);
  const double tsls_ratio = static_cast<double>(state.tsls) / spec.tsls_bound_L;
  return table_.index[bucket] * chan + params_.tsls_gain * tsls_ratio * tsls_ratio +
         params_.v_tpt_gain * state.v_tpt + params_.v_tsls_gain * state.v_tsls;
}

namespace {

// Shared stepping engine: the policy only differs in how the per-window
// allocation is computed.
class ScenarioRunner {
 public:
  ScenarioRunner(const ScenarioSpec& spec, std::uint64_t seed)
      : spec_(spec), n_(static_cast<int>(spec.ues.size())), recorder_(n_, spec.horizon) {
    Rng master(seed);
    for (int i = 0; i < n_; ++i) {
      rngs_.push_back(master.spawn(static_cast<std::uint64_t>(i)));
      channels_.push_back(spec.ues[i].channel);
      UEState ue;
      ue.cqi = channels_.back().current_cqi();
      states_.push_back(ue);
      recorder_.set_class(i, spec.ues[i].spec.class_id);
    }
    carries_.assign(n_, 0.0);
    served_hist_.assign(n_, {});
    served_hist_sum_.assign(n_, 0.0);
    win_tpt_viol_.assign(n_, 0);
    win_tsls_viol_.assign(n_, 0);
  }

  const std::vector<UEState>& states() const { return states_; }

  void step_window(const AllocationDecision& decision, std::int64_t tti_base, int window_len,
                   bool feedback) {
    for (int t = 0; t < window_len; ++t) {
      const std::int64_t tti = tti_base + t;
      for (int i = 0; i < n_; ++i) {
        UEState& ue = states_[i];
        const auto& ue_spec = spec_.ues[i].spec;
        const int rbs = decision.rbs(spec_.rb_profile, i);
        const bool high = decision.grants[i] == Grant::high;
        const double threshold_mbps =
            ue_spec.tpt_bound_B * spec_.capacity.mean_bytes(ue.cqi, spec_.rb_profile.high) *
            8.0e-3;
        const StepResult sr = step_ue(ue, channels_[i], ue_spec.traffic, spec_.capacity, rbs,
                                      high, carries_[i], rngs_[i]);
        ue.buffer_bytes = std::min(ue.buffer_bytes, spec_.max_queue_bytes);

        // realized throughput = moving average over the last tpt_window TTIs
        auto& hist = served_hist_[i];
        hist.push_back(sr.realized_tpt_mbps);
        served_hist_sum_[i] += sr.realized_tpt_mbps;
        if (static_cast<int>(hist.size()) > spec_.tpt_window) {
          served_hist_sum_[i] -= hist.front();
          hist.erase(hist.begin());
        }
        const double realized = served_hist_sum_[i] / hist.size();

        recorder_.record(tti, i, realized, threshold_mbps, ue.tsls, ue_spec.tsls_bound_L);
        if (realized < threshold_mbps) ++win_tpt_viol_[i];
        if (ue.tsls > ue_spec.tsls_bound_L) ++win_tsls_viol_[i];
      }
    }
    for (int i = 0; i < n_; ++i) {
      if (feedback) {
        UEState& ue = states_[i];
        ue.v_tpt = update_violation_feature(
            ue.v_tpt, static_cast<double>(win_tpt_viol_[i]) / window_len, spec_.eta);
        ue.v_tsls = update_violation_feature(
            ue.v_tsls, static_cast<double>(win_tsls_viol_[i]) / window_len, spec_.eta);
      }
      win_tpt_viol_[i] = 0;
      win_tsls_viol_[i] = 0;
    }
  }

  void check_budget(const AllocationDecision& d) const {
    int used = 0;
    for (int i = 0; i < n_; ++i) used += d.rbs(spec_.rb_profile, i);
    if (used > spec_.total_rbgs) {
      throw std::logic_error("run_scenario: allocation exceeds the RBG budget");
    }
  }

  MetricsReport finalize(const std::string& policy, std::uint64_t seed) const {
    return recorder_.finalize(policy, seed);
  }

 private:
  const ScenarioSpec& spec_;
  int n_;
  MetricsRecorder recorder_;
  std::vector<Rng> rngs_;
  std::vector<ChannelProcess> channels_;
  std::vector<UEState> states_;
  std::vector<double> carries_;
  std::vector<std::vector<double>> served_hist_;
  std::vector<double> served_hist_sum_;
  std::vector<int> win_tpt_viol_;
  std::vector<int> win_tsls_viol_;
};

// Resolve slice membership: explicit classes first, then an empty class
// list catches everything unclaimed.
std::vector<std::vector<int>> slice_members(const ScenarioSpec& spec, const SliceConfig& cfg) {
  const int n = static_cast<int>(spec.ues.size());
  std::vector<int> owner(n, -1);
  for (std::size_t s = 0; s < cfg.slices.size(); ++s) {
    for (const ServiceClass c : cfg.slices[s].classes) {
      for (int i = 0; i < n; ++i) {
        if (owner[i] < 0 && spec.ues[i].spec.class_id == c) owner[i] = static_cast<int>(s);
      }
    }
  }
  for (std::size_t s = 0; s < cfg.slices.size(); ++s) {
    if (cfg.slices[s].classes.empty()) {
      for (int i = 0; i < n; ++i) {
        if (owner[i] < 0) owner[i] = static_cast<int>(s);
      }
    }
  }
  std::vector<std::vector<int>> members(cfg.slices.size());
  for (int i = 0; i < n; ++i) {
    if (owner[i] < 0) {
      throw std::invalid_argument("sliced policy: ue " + std::to_string(i) +
                                  " matches no slice");
    }
    members[owner[i]].push_back(i);
  }
  return members;
}

}  // namespace

MetricsReport run_scenario(const ScenarioSpec& spec, const Policy& policy, std::uint64_t seed) {
  spec.validate();
  const int n = static_cast<int>(spec.ues.size());
  const int top_R = spec.resolved_top_R();

  if (const auto* sliced = std::get_if<SlicedPolicy>(&policy)) {
    int total = 0;
    for (const auto& s : sliced->config.slices) total += s.rbgs;
    if (total != spec.total_rbgs) {
      throw std::invalid_argument("sliced policy: slice shares must sum to total_rbgs");
    }
  }

  // Fail fast on model/class mismatch before touching the simulation.
  std::shared_ptr<const IndexProvider> provider;
  if (const auto* wp = std::get_if<WindexPolicy>(&policy)) {
    provider = wp->provider;
    if (!provider) {
      provider =
          std::make_shared<NetIndexProvider>(NetIndexProvider::from_scenario(spec));
    }
  }

  ScenarioRunner runner(spec, seed);
  std::string label;

  if (provider) {
    label = "windex";
    const int window = spec.window;
    std::vector<double> indices(n);
    for (std::int64_t tti = 0; tti < spec.horizon; tti += window) {
      const int len = static_cast<int>(std::min<std::int64_t>(window, spec.horizon - tti));
      for (int i = 0; i < n; ++i) {
        indices[i] = provider->index(i, runner.states()[i], spec.ues[i].spec);
      }
      AllocationDecision d =
          allocate_top_r(indices, top_R, spec.total_rbgs, spec.rb_profile);
      d.tti = tti;
      runner.check_budget(d);
      runner.step_window(d, tti, len, /*feedback=*/true);
    }
  } else if (const auto* kind = std::get_if<BaselineKind>(&policy)) {
    label = to_string(*kind);
    BaselineHistory history;
    for (std::int64_t tti = 0; tti < spec.horizon; ++tti) {
      AllocationDecision d = baseline_allocate(*kind, runner.states(), history, top_R,
                                               spec.total_rbgs, spec.rb_profile);
      d.tti = tti;
      runner.check_budget(d);
      runner.step_window(d, tti, 1, /*feedback=*/false);
    }
  } else {
    const auto& sliced = std::get<SlicedPolicy>(policy);
    label = "sliced";
    const auto members = slice_members(spec, sliced.config);
    std::vector<BaselineHistory> histories(members.size());
    for (std::int64_t tti = 0; tti < spec.horizon; ++tti) {
      AllocationDecision d;
      d.grants.assign(n, Grant::zero);
      d.indices.assign(n, 0.0);
      d.tti = tti;
      for (std::size_t s = 0; s < members.size(); ++s) {
        if (members[s].empty()) continue;
        const auto& slice = sliced.config.slices[s];
        std::vector<UEState> slice_states;
        for (int ue : members[s]) slice_states.push_back(runner.states()[ue]);
        const int slice_top_R =
            std::min<int>(slice.rbgs / spec.rb_profile.high,
                          static_cast<int>(members[s].size()));
        if (slice_top_R < 1) {
          throw std::invalid_argument("sliced policy: slice " + std::to_string(s) +
                                      " cannot afford a high grant");
        }
        AllocationDecision sd = baseline_allocate(slice.inner, slice_states, histories[s],
                                                  slice_top_R, slice.rbgs, spec.rb_profile);
        for (std::size_t k = 0; k < members[s].size(); ++k) {
          d.grants[members[s][k]] = sd.grants[k];
          d.indices[members[s][k]] = sd.indices[k];
        }
      }
      runner.check_budget(d);
      runner.step_window(d, tti, 1, /*feedback=*/false);
    }
  }
  return runner.finalize(label, seed);
}

}  // namespace windex
