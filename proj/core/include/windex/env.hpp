#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "windex/rng.hpp"

namespace windex {

inline constexpr int kCqiMin = 1;
inline constexpr int kCqiMax = 15;
inline constexpr double kTtiSeconds = 1e-3;

enum class ServiceClass { eMBB, URLLC, mMTC, XR };

const char* to_string(ServiceClass c);
ServiceClass service_class_from_string(const std::string& name);

struct TrafficModel {
  enum class Kind { constant_bitrate, bursty };
  Kind kind = Kind::constant_bitrate;
  double rate_mbps = 5.8;
  double burst_prob = 0.01;  // per-TTI burst probability (bursty only)

  // Bytes per burst so the long-run average matches rate_mbps.
  double burst_bytes() const { return rate_mbps * 125.0 / burst_prob; }
};

// Per-class service contract: throughput target as a fraction of the
// high-action throughput, TSLS bound in TTIs, and reward weights.
struct ServiceClassSpec {
  ServiceClass class_id = ServiceClass::eMBB;
  TrafficModel traffic;
  double tpt_bound_B = 0.9;  // fraction of high-action throughput, in [0,1]
  int tsls_bound_L = 20;
  double w_r = 0.2;
  double w_tpt = 0.6;
  double w_tsls = 0.2;

  void validate() const;
};

ServiceClassSpec default_spec(ServiceClass c);

// CQI evolution: a constant value, a reflecting random walk, or a replayed
// trace (one value per TTI, wrapping at end-of-trace).
class ChannelProcess {
 public:
  static ChannelProcess constant(int cqi);
  static ChannelProcess random_walk(int cqi_min, int cqi_max, double step_prob, int start_cqi);
  static ChannelProcess trace(std::vector<int> values);

  int current_cqi() const { return cqi_; }
  int advance(Rng& rng);
  std::uint64_t clamp_warnings() const { return clamp_warnings_; }

 private:
  enum class Source { constant, random_walk, trace };
  Source source_ = Source::constant;
  int cqi_ = 15;
  int cqi_min_ = kCqiMin;
  int cqi_max_ = kCqiMax;
  double step_prob_ = 0.5;
  std::vector<int> trace_;
  std::size_t trace_pos_ = 0;
  std::uint64_t clamp_warnings_ = 0;
};

// Parse a CSV channel trace (header row of UE column names, one integer CQI
// row per TTI) and return the replay process for `column`. Out-of-range
// values clamp to [1,15] with a warning counter on the returned process.
ChannelProcess load_trace(const std::string& path, const std::string& column);

// Concatenation of several trace files, e.g. the mixed-trace scenario.
ChannelProcess load_traces(const std::vector<std::string>& paths, const std::string& column);

// CQI -> throughput map. Mean bytes per TTI per RB, monotone in CQI, derived
// from 3GPP spectral efficiencies and scaled so cqi=15 with 9 RBs is about
// 6.5 Mbps. Sampled capacity is Gaussian with sigma proportional to mean.
struct CapacityModel {
  std::array<double, kCqiMax + 1> mean_per_rb;  // index 1..15, [0] unused
  double sigma_frac = 0.05;

  static CapacityModel standard();

  double mean_bytes(int cqi, int rbs) const;
  // max(0, Normal(mean, sigma)); deterministic when sigma_frac == 0.
  double sample_bytes(int cqi, int rbs, Rng& rng) const;
};

// The five features fed to the index network.
struct UEState {
  double buffer_bytes = 0.0;
  int cqi = 15;
  int tsls = 0;  // TTIs since the last high-action grant
  double v_tpt = 0.0;
  double v_tsls = 0.0;
};

struct StepResult {
  double served_bytes = 0.0;
  double arrived_bytes = 0.0;
  double realized_tpt_mbps = 0.0;
};

// Advances one UE by one TTI: serve from the buffer given the grant, add
// traffic arrivals, update TSLS (reset only on the high action) and the CQI.
// `traffic_carry` accumulates fractional CBR bytes so the long-run arrival
// rate is exact.
StepResult step_ue(UEState& ue, ChannelProcess& channel, const TrafficModel& traffic,
                   const CapacityModel& cap, int rbs_granted, bool high_action,
                   double& traffic_carry, Rng& rng);

}  // namespace windex
