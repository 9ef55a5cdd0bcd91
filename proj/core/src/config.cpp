#include "windex/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

namespace windex {

using nlohmann::json;

namespace {

json load_json(const std::string& path, const std::string& schema) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError(path + ": top level must be an object");
  if (j.value("schema", "") != schema) {
    throw ConfigError(path + ": expected schema '" + schema + "', got '" +
                      j.value("schema", "<missing>") + "'");
  }
  return j;
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed,
                         const std::string& where) {
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T require(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

template <typename T>
T optional(const json& obj, const std::string& key, const std::string& where, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + ": key '" + key + "' has the wrong type");
  }
}

TrafficModel parse_traffic(const json& t, const std::string& where) {
  reject_unknown_keys(t, {"kind", "rate_mbps", "burst_prob"}, where);
  TrafficModel m;
  const auto kind = require<std::string>(t, "kind", where);
  if (kind == "cbr") {
    m.kind = TrafficModel::Kind::constant_bitrate;
  } else if (kind == "bursty") {
    m.kind = TrafficModel::Kind::bursty;
    m.burst_prob = optional<double>(t, "burst_prob", where, 0.01);
    if (m.burst_prob <= 0.0 || m.burst_prob > 1.0) {
      throw ConfigError(where + ": burst_prob must be in (0,1]");
    }
  } else {
    throw ConfigError(where + ": traffic kind must be 'cbr' or 'bursty'");
  }
  m.rate_mbps = require<double>(t, "rate_mbps", where);
  if (m.rate_mbps < 0.0) throw ConfigError(where + ": rate_mbps must be >= 0");
  return m;
}

ChannelProcess parse_channel(const json& c, const std::string& where) {
  const auto source = require<std::string>(c, "source", where);
  if (source == "constant") {
    reject_unknown_keys(c, {"source", "cqi"}, where);
    return ChannelProcess::constant(require<int>(c, "cqi", where));
  }
  if (source == "random_walk") {
    reject_unknown_keys(c, {"source", "cqi_min", "cqi_max", "step_prob", "start"}, where);
    return ChannelProcess::random_walk(optional<int>(c, "cqi_min", where, kCqiMin),
                                       optional<int>(c, "cqi_max", where, kCqiMax),
                                       require<double>(c, "step_prob", where),
                                       require<int>(c, "start", where));
  }
  if (source == "trace") {
    reject_unknown_keys(c, {"source", "files", "column"}, where);
    return load_traces(require<std::vector<std::string>>(c, "files", where),
                       require<std::string>(c, "column", where));
  }
  throw ConfigError(where + ": channel source must be constant, random_walk or trace");
}

void apply_weights(ServiceClassSpec& spec, const json& w, const std::string& where) {
  if (!w.is_array() || w.size() != 3) {
    throw ConfigError(where + ": weights must be an array of 3 numbers");
  }
  spec.w_r = w[0].get<double>();
  spec.w_tpt = w[1].get<double>();
  spec.w_tsls = w[2].get<double>();
  if (std::abs(spec.w_r + spec.w_tpt + spec.w_tsls - 1.0) > 1e-9) {
    throw ConfigError(where + ": weights must sum to 1");
  }
}

ServiceClassSpec parse_ue_spec(const json& u, const std::string& where) {
  ServiceClassSpec spec = default_spec(
      service_class_from_string(require<std::string>(u, "class", where)));
  if (u.contains("traffic")) spec.traffic = parse_traffic(u.at("traffic"), where + ".traffic");
  spec.tpt_bound_B = optional<double>(u, "tpt_bound_b", where, spec.tpt_bound_B);
  spec.tsls_bound_L = optional<int>(u, "tsls_bound_l", where, spec.tsls_bound_L);
  if (u.contains("weights")) apply_weights(spec, u.at("weights"), where);
  spec.validate();
  return spec;
}

}  // namespace

ScenarioSpec parse_scenario_config(const std::string& path) {
  const json j = load_json(path, "windex-scenario-v1");
  reject_unknown_keys(j,
                      {"schema", "total_rbgs", "rb_profile", "top_r", "horizon", "window",
                       "eta", "tpt_window", "max_queue_bytes", "seed", "sigma_frac", "ues"},
                      path);
  ScenarioSpec spec;
  spec.total_rbgs = require<int>(j, "total_rbgs", path);
  if (j.contains("rb_profile")) {
    const json& rp = j.at("rb_profile");
    reject_unknown_keys(rp, {"high", "low"}, path + ".rb_profile");
    spec.rb_profile.high = require<int>(rp, "high", path + ".rb_profile");
    spec.rb_profile.low = require<int>(rp, "low", path + ".rb_profile");
  }
  spec.top_R = optional<int>(j, "top_r", path, 0);
  spec.horizon = optional<std::int64_t>(j, "horizon", path, 10000);
  spec.window = optional<int>(j, "window", path, 1);
  spec.eta = optional<double>(j, "eta", path, 0.1);
  spec.tpt_window = optional<int>(j, "tpt_window", path, 100);
  spec.max_queue_bytes = optional<double>(j, "max_queue_bytes", path, 2.0e5);
  spec.seed = optional<std::uint64_t>(j, "seed", path, 0);
  spec.capacity.sigma_frac = optional<double>(j, "sigma_frac", path, spec.capacity.sigma_frac);

  if (!j.contains("ues") || !j.at("ues").is_array() || j.at("ues").empty()) {
    throw ConfigError(path + ": 'ues' must be a non-empty array");
  }
  int idx = 0;
  for (const auto& u : j.at("ues")) {
    const std::string where = path + ".ues[" + std::to_string(idx) + "]";
    reject_unknown_keys(u,
                        {"class", "traffic", "tpt_bound_b", "tsls_bound_l", "weights",
                         "channel", "model"},
                        where);
    UEConfig ue;
    ue.spec = parse_ue_spec(u, where);
    if (u.contains("channel")) ue.channel = parse_channel(u.at("channel"), where + ".channel");
    ue.model_file = optional<std::string>(u, "model", where, "");
    spec.ues.push_back(std::move(ue));
    ++idx;
  }
  spec.validate();
  return spec;
}

SliceConfig parse_slice_config(const std::string& path) {
  const json j = load_json(path, "windex-slices-v1");
  reject_unknown_keys(j, {"schema", "slices"}, path);
  if (!j.contains("slices") || !j.at("slices").is_array() || j.at("slices").empty()) {
    throw ConfigError(path + ": 'slices' must be a non-empty array");
  }
  SliceConfig cfg;
  int idx = 0;
  for (const auto& s : j.at("slices")) {
    const std::string where = path + ".slices[" + std::to_string(idx) + "]";
    reject_unknown_keys(s, {"classes", "rbgs", "inner"}, where);
    SliceSpec slice;
    for (const auto& c : optional<std::vector<std::string>>(s, "classes", where, {})) {
      slice.classes.push_back(service_class_from_string(c));
    }
    slice.rbgs = require<int>(s, "rbgs", where);
    slice.inner = baseline_from_string(optional<std::string>(s, "inner", where, "rr"));
    cfg.slices.push_back(std::move(slice));
    ++idx;
  }
  return cfg;
}

TrainConfig parse_train_config(const std::string& path) {
  const json j = load_json(path, "windex-train-v1");
  reject_unknown_keys(j,
                      {"schema", "class", "episodes_total", "episode_len", "batch_size", "lr",
                       "lr_decay", "sigmoid_m", "gamma", "seed", "max_queue_bytes", "high_rbs",
                       "low_rbs", "reward_violations", "channel", "traffic", "weights",
                       "tpt_bound_b", "tsls_bound_l", "jobs"},
                      path);
  TrainConfig cfg;
  cfg.spec = parse_ue_spec(j, path);
  cfg.lr = optional<double>(j, "lr", path, default_lr(cfg.spec.class_id));
  cfg.episodes_total = optional<int>(j, "episodes_total", path, 20000);
  cfg.episode_len = optional<int>(j, "episode_len", path, 5000);
  cfg.batch_size = optional<int>(j, "batch_size", path, 20);
  cfg.lr_decay = optional<bool>(j, "lr_decay", path, false);
  cfg.sigmoid_m = optional<double>(j, "sigmoid_m", path, 5.0);
  cfg.gamma = optional<double>(j, "gamma", path, 0.99);
  cfg.seed = optional<std::uint64_t>(j, "seed", path, 0);
  cfg.max_queue_bytes = optional<double>(j, "max_queue_bytes", path, 2.0e5);
  cfg.high_rbs = optional<int>(j, "high_rbs", path, 9);
  cfg.low_rbs = optional<int>(j, "low_rbs", path, 2);
  cfg.jobs = optional<int>(j, "jobs", path, 1);
  const auto rv = optional<std::string>(j, "reward_violations", path, "constant");
  if (rv == "constant") {
    cfg.reward_violations = RewardViolations::constant;
  } else if (rv == "realized") {
    cfg.reward_violations = RewardViolations::realized;
  } else {
    throw ConfigError(path + ": reward_violations must be 'constant' or 'realized'");
  }
  if (j.contains("channel")) cfg.channel = parse_channel(j.at("channel"), path + ".channel");
  cfg.validate();
  return cfg;
}

TabularMDP OracleVerifyConfig::sample_instance(Rng& rng) const {
  TabularMDP mdp;
  mdp.max_queue = static_cast<int>(rng.uniform_int(max_queue_min, max_queue_max));
  mdp.r0 = 0;
  mdp.r1 = 1;
  mdp.beta = rng.uniform(beta_min, beta_max);
  mdp.gamma = rng.uniform(gamma_min, gamma_max);
  mdp.mu_r = rng.uniform(mu_min, mu_max);
  mdp.mu_l = rng.uniform(mu_min, mu_max);
  return mdp;
}

std::vector<double> OracleVerifyConfig::lambda_grid() const {
  std::vector<double> grid;
  if (lambda_grid_points == 1) return {0.0};
  for (int i = 0; i < lambda_grid_points; ++i) {
    grid.push_back(lambda_max * i / (lambda_grid_points - 1));
  }
  return grid;
}

OracleVerifyConfig default_oracle_config() { return {}; }

OracleVerifyConfig parse_oracle_config(const std::string& path) {
  const json j = load_json(path, "windex-oracle-v1");
  reject_unknown_keys(j,
                      {"schema", "instances", "max_queue_range", "beta_range", "gamma_range",
                       "mu_range", "lambda_grid_points", "lambda_max", "slack", "seed",
                       "fixed"},
                      path);
  OracleVerifyConfig cfg;
  cfg.instances = optional<int>(j, "instances", path, cfg.instances);
  auto range = [&](const char* key, auto& lo, auto& hi) {
    if (!j.contains(key)) return;
    const json& r = j.at(key);
    if (!r.is_array() || r.size() != 2) {
      throw ConfigError(path + ": '" + key + "' must be [lo, hi]");
    }
    lo = r[0].get<std::decay_t<decltype(lo)>>();
    hi = r[1].get<std::decay_t<decltype(hi)>>();
  };
  range("max_queue_range", cfg.max_queue_min, cfg.max_queue_max);
  range("beta_range", cfg.beta_min, cfg.beta_max);
  range("gamma_range", cfg.gamma_min, cfg.gamma_max);
  range("mu_range", cfg.mu_min, cfg.mu_max);
  cfg.lambda_grid_points = optional<int>(j, "lambda_grid_points", path, cfg.lambda_grid_points);
  if (cfg.lambda_grid_points < 1) throw ConfigError(path + ": lambda_grid_points must be >= 1");
  cfg.lambda_max = optional<double>(j, "lambda_max", path, cfg.lambda_max);
  cfg.slack = optional<double>(j, "slack", path, cfg.slack);
  cfg.seed = optional<std::uint64_t>(j, "seed", path, cfg.seed);
  if (j.contains("fixed")) {
    for (const auto& f : j.at("fixed")) {
      const std::string where = path + ".fixed";
      reject_unknown_keys(f, {"max_queue", "r0", "r1", "beta", "gamma", "mu_r", "mu_l"}, where);
      TabularMDP mdp;
      mdp.max_queue = require<int>(f, "max_queue", where);
      mdp.r0 = optional<int>(f, "r0", where, 0);
      mdp.r1 = optional<int>(f, "r1", where, 1);
      mdp.beta = require<double>(f, "beta", where);
      mdp.gamma = require<double>(f, "gamma", where);
      mdp.mu_r = optional<double>(f, "mu_r", where, 0.0);
      mdp.mu_l = optional<double>(f, "mu_l", where, 0.0);
      mdp.validate();
      cfg.fixed.push_back(mdp);
    }
  }
  return cfg;
}

}  // namespace windex
