#include "windex/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace windex {

using nlohmann::json;

double MetricsReport::summed_violation_frac() const {
  double sum = 0.0;
  for (const auto& ue : per_ue) sum += ue.tpt_violation_frac() + ue.tsls_violation_frac();
  return sum;
}

MetricsRecorder::MetricsRecorder(int num_ues, std::int64_t horizon)
    : ue_(num_ues), horizon_(horizon) {}

void MetricsRecorder::set_class(int ue_id, ServiceClass c) {
  ue_.at(ue_id).class_id = c;
}

void MetricsRecorder::record(std::int64_t tti, int ue_id, double realized_tpt_mbps,
                             double tpt_threshold_mbps, int tsls, int tsls_bound) {
  if (tti < 0 || tti >= horizon_) {
    throw std::out_of_range("MetricsRecorder::record: tti outside horizon");
  }
  UEMetrics& m = ue_.at(ue_id);
  ++m.samples;
  m.tpt_sum_mbps += realized_tpt_mbps;
  if (realized_tpt_mbps < tpt_threshold_mbps) ++m.tpt_violations;
  if (tsls > tsls_bound) ++m.tsls_violations;
  if (tsls > m.max_tsls) m.max_tsls = tsls;
}

MetricsReport MetricsRecorder::finalize(const std::string& policy, std::uint64_t seed) const {
  MetricsReport rep;
  rep.per_ue = ue_;
  rep.policy = policy;
  rep.seed = seed;
  rep.horizon = horizon_;
  std::map<std::string, std::vector<const UEMetrics*>> by_class;
  for (const auto& m : ue_) by_class[to_string(m.class_id)].push_back(&m);
  for (const auto& [name, members] : by_class) {
    ClassAggregate agg;
    agg.ues = static_cast<int>(members.size());
    for (const UEMetrics* m : members) {
      agg.mean_tpt_mbps += m->mean_tpt_mbps();
      agg.tpt_violation_frac += m->tpt_violation_frac();
      agg.tsls_violation_frac += m->tsls_violation_frac();
    }
    agg.mean_tpt_mbps /= agg.ues;
    agg.tpt_violation_frac /= agg.ues;
    agg.tsls_violation_frac /= agg.ues;
    rep.per_class[name] = agg;
  }
  return rep;
}

MetricsReport MetricsRecorder::merge(const MetricsReport& a, const MetricsReport& b) {
  if (a.per_ue.size() != b.per_ue.size()) {
    throw std::invalid_argument("MetricsRecorder::merge: UE count mismatch");
  }
  MetricsRecorder rec(static_cast<int>(a.per_ue.size()), a.horizon + b.horizon);
  for (std::size_t i = 0; i < a.per_ue.size(); ++i) {
    UEMetrics m = a.per_ue[i];
    const UEMetrics& n = b.per_ue[i];
    if (m.class_id != n.class_id) {
      throw std::invalid_argument("MetricsRecorder::merge: class mismatch at ue " +
                                  std::to_string(i));
    }
    m.samples += n.samples;
    m.tpt_violations += n.tpt_violations;
    m.tsls_violations += n.tsls_violations;
    m.tpt_sum_mbps += n.tpt_sum_mbps;
    m.max_tsls = std::max(m.max_tsls, n.max_tsls);
    rec.ue_[i] = m;
  }
  return rec.finalize(a.policy, a.seed);
}

namespace {

json ue_to_json(const UEMetrics& m) {
  return json{{"class", to_string(m.class_id)},
              {"samples", m.samples},
              {"tpt_violations", m.tpt_violations},
              {"tsls_violations", m.tsls_violations},
              {"tpt_sum_mbps", m.tpt_sum_mbps},
              {"max_tsls", m.max_tsls},
              {"mean_tpt_mbps", m.mean_tpt_mbps()},
              {"tpt_violation_frac", m.tpt_violation_frac()},
              {"tsls_violation_frac", m.tsls_violation_frac()}};
}

}  // namespace

void export_report(const MetricsReport& report, const std::string& path, ReportFormat format) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_report: cannot open " + path);
  if (format == ReportFormat::structured) {
    json j;
    j["schema"] = "windex-report-v1";
    j["policy"] = report.policy;
    j["seed"] = report.seed;
    j["horizon"] = report.horizon;
    j["per_ue"] = json::array();
    for (const auto& m : report.per_ue) j["per_ue"].push_back(ue_to_json(m));
    j["per_class"] = json::object();
    for (const auto& [name, agg] : report.per_class) {
      j["per_class"][name] = {{"mean_tpt_mbps", agg.mean_tpt_mbps},
                              {"tpt_violation_frac", agg.tpt_violation_frac},
                              {"tsls_violation_frac", agg.tsls_violation_frac},
                              {"ues", agg.ues}};
    }
    out << j.dump(2) << "\n";
  } else {
    // fixed column order; covered by a golden-file test
    out << "ue,class,samples,mean_tpt_mbps,tpt_violation_frac,tsls_violation_frac,max_tsls\n";
    for (std::size_t i = 0; i < report.per_ue.size(); ++i) {
      const auto& m = report.per_ue[i];
      out << i << "," << to_string(m.class_id) << "," << m.samples << "," << m.mean_tpt_mbps()
          << "," << m.tpt_violation_frac() << "," << m.tsls_violation_frac() << ","
          << m.max_tsls << "\n";
    }
  }
  if (!out) throw std::runtime_error("export_report: write failed for " + path);
}

MetricsReport import_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("import_report: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("import_report: " + path + ": " + e.what());
  }
  if (j.value("schema", "") != "windex-report-v1") {
    throw std::runtime_error("import_report: unknown schema in " + path);
  }
  MetricsReport rep;
  rep.policy = j.at("policy").get<std::string>();
  rep.seed = j.at("seed").get<std::uint64_t>();
  rep.horizon = j.at("horizon").get<std::int64_t>();
  for (const auto& u : j.at("per_ue")) {
    UEMetrics m;
    m.class_id = service_class_from_string(u.at("class").get<std::string>());
    m.samples = u.at("samples").get<std::int64_t>();
    m.tpt_violations = u.at("tpt_violations").get<std::int64_t>();
    m.tsls_violations = u.at("tsls_violations").get<std::int64_t>();
    m.tpt_sum_mbps = u.at("tpt_sum_mbps").get<double>();
    m.max_tsls = u.at("max_tsls").get<int>();
    rep.per_ue.push_back(m);
  }
  for (const auto& [name, agg] : j.at("per_class").items()) {
    ClassAggregate a;
    a.mean_tpt_mbps = agg.at("mean_tpt_mbps").get<double>();
    a.tpt_violation_frac = agg.at("tpt_violation_frac").get<double>();
    a.tsls_violation_frac = agg.at("tsls_violation_frac").get<double>();
    a.ues = agg.at("ues").get<int>();
    rep.per_class[name] = a;
  }
  return rep;
}

}  // namespace windex
