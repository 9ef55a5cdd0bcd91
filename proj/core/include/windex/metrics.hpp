#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "windex/env.hpp"

namespace windex {

struct UEMetrics {
  ServiceClass class_id = ServiceClass::eMBB;
  std::int64_t samples = 0;
  std::int64_t tpt_violations = 0;
  std::int64_t tsls_violations = 0;
  double tpt_sum_mbps = 0.0;
  int max_tsls = 0;

  double mean_tpt_mbps() const { return samples ? tpt_sum_mbps / samples : 0.0; }
  double tpt_violation_frac() const {
    return samples ? static_cast<double>(tpt_violations) / samples : 0.0;
  }
  double tsls_violation_frac() const {
    return samples ? static_cast<double>(tsls_violations) / samples : 0.0;
  }
};

struct ClassAggregate {
  double mean_tpt_mbps = 0.0;
  double tpt_violation_frac = 0.0;
  double tsls_violation_frac = 0.0;
  int ues = 0;
};

struct MetricsReport {
  std::vector<UEMetrics> per_ue;
  std::map<std::string, ClassAggregate> per_class;
  std::string policy;
  std::uint64_t seed = 0;
  std::int64_t horizon = 0;

  double summed_violation_frac() const;
};

// Per-scenario violation accounting. Throughput violation fires when the
// realized rate falls below the threshold; TSLS violation on strict
// excess of the bound (tsls == L is not a violation).
class MetricsRecorder {
 public:
  MetricsRecorder(int num_ues, std::int64_t horizon);

  void set_class(int ue_id, ServiceClass c);

  void record(std::int64_t tti, int ue_id, double realized_tpt_mbps,
              double tpt_threshold_mbps, int tsls, int tsls_bound);

  MetricsReport finalize(const std::string& policy, std::uint64_t seed) const;

  // Combines recorders from disjoint scenario instances; counters add.
  static MetricsReport merge(const MetricsReport& a, const MetricsReport& b);

 private:
  std::vector<UEMetrics> ue_;
  std::int64_t horizon_;
};

enum class ReportFormat { structured, csv };

void export_report(const MetricsReport& report, const std::string& path, ReportFormat format);
MetricsReport import_report(const std::string& path);

}  // namespace windex
