#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "windex/env.hpp"
#include "windex/mdp.hpp"
#include "windex/metrics.hpp"
#include "windex/net.hpp"

namespace windex {

enum class Grant { high, low, zero };

struct RbProfile {
  int high = 9;
  int low = 2;
};

struct UEConfig {
  ServiceClassSpec spec;
  ChannelProcess channel = ChannelProcess::constant(10);
  std::string model_file;  // windex policy only
};

struct ScenarioSpec {
  std::vector<UEConfig> ues;
  int total_rbgs = 17;
  RbProfile rb_profile;
  int top_R = 0;  // 0 -> floor(total_rbgs / rb_profile.high)
  std::int64_t horizon = 10000;
  int window = 1;         // decision window in TTIs (Algorithm-2 cadence when > 1)
  double eta = 0.1;       // violation-feature feedback step
  int tpt_window = 100;   // moving-average window for realized throughput
  double max_queue_bytes = 2.0e5;
  CapacityModel capacity = CapacityModel::standard();
  std::uint64_t seed = 0;

  int resolved_top_R() const;
  void validate() const;
};

struct AllocationDecision {
  std::vector<Grant> grants;    // per UE
  std::vector<double> indices;  // weights used for the decision
  std::int64_t tti = 0;

  int rbs(const RbProfile& profile, int ue) const {
    switch (grants[ue]) {
      case Grant::high: return profile.high;
      case Grant::low: return profile.low;
      case Grant::zero: return 0;
    }
    return 0;
  }
};

// Top-R selection by descending index, deterministic tie-break by UE id
// ascending. The top R get the high grant; the remainder get low grants in
// index order while the RBG budget allows, then zero.
AllocationDecision allocate_top_r(const std::vector<double>& indices, int top_R,
                                  int total_rbgs, const RbProfile& profile);

// Clamped proportional feedback on the violation fraction observed over the
// last decision window; decays when the window was clean.
double update_violation_feature(double v, double violation_frac, double eta);

enum class BaselineKind { max_cqi, prop_fair, max_weight, round_robin };

BaselineKind baseline_from_string(const std::string& name);
const char* to_string(BaselineKind kind);

// Carried across decisions: EWMA average CQI for proportional fairness and
// the round-robin cursor.
struct BaselineHistory {
  std::vector<double> avg_cqi;
  double pf_alpha = 0.01;
  int rr_cursor = 0;
};

AllocationDecision baseline_allocate(BaselineKind kind, const std::vector<UEState>& states,
                                     BaselineHistory& history, int top_R, int total_rbgs,
                                     const RbProfile& profile);

// Pluggable index source for the windex policy: trained networks in
// production, oracle tables in validation.
class IndexProvider {
 public:
  virtual ~IndexProvider() = default;
  virtual double index(int ue_id, const UEState& state, const ServiceClassSpec& spec) const = 0;
};

// Inference on one trained network per UE. Checks model class tags against
// the UE service classes up front.
class NetIndexProvider : public IndexProvider {
 public:
  explicit NetIndexProvider(std::vector<WhittleNetwork> nets);
  static NetIndexProvider from_scenario(const ScenarioSpec& spec);

  double index(int ue_id, const UEState& state, const ServiceClassSpec& spec) const override;
  const WhittleNetwork& net(int ue_id) const { return nets_.at(ue_id); }

 private:
  std::vector<WhittleNetwork> nets_;
};

// Ground-truth index tables from the tabular oracle, per service class, on
// a bucketed queue state, combined with channel quality, TSLS pressure and
// the violation-feedback features.
class OracleIndexProvider : public IndexProvider {
 public:
  struct Params {
    int max_queue = 30;          // oracle state buckets
    double quantum_bytes = 800;  // queue bytes per bucket
    double beta = 0.5;
    double gamma = 0.95;
    double tsls_gain = 2.0;      // weight on the (tsls/L)^2 pressure term
    double v_tpt_gain = 1.0;
    double v_tsls_gain = 1.0;
  };

  OracleIndexProvider(const CapacityModel& cap, int high_rbs);
  OracleIndexProvider(const CapacityModel& cap, int high_rbs, Params params);

  double index(int ue_id, const UEState& state, const ServiceClassSpec& spec) const override;

 private:
  IndexTable table_;
  CapacityModel cap_;
  int high_rbs_;
  Params params_;
};

struct WindexPolicy {
  std::shared_ptr<const IndexProvider> provider;
};

struct SliceSpec {
  std::vector<ServiceClass> classes;  // empty = all UEs not claimed elsewhere
  int rbgs = 0;
  BaselineKind inner = BaselineKind::round_robin;
};

struct SliceConfig {
  std::vector<SliceSpec> slices;
};

struct SlicedPolicy {
  SliceConfig config;
};

using Policy = std::variant<WindexPolicy, BaselineKind, SlicedPolicy>;

MetricsReport run_scenario(const ScenarioSpec& spec, const Policy& policy, std::uint64_t seed);

}  // namespace windex
