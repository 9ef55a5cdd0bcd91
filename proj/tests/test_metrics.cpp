#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <sstream>

#include "windex/metrics.hpp"

using namespace windex;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("boundary rules: tsls == L is clean, strict throughput shortfall counts") {
  MetricsRecorder rec(1, 4);
  rec.set_class(0, ServiceClass::URLLC);
  rec.record(0, 0, 2.0, 2.0, 10, 10);  // both exactly at the bound
  rec.record(1, 0, 1.99, 2.0, 11, 10); // both violating
  rec.record(2, 0, 2.5, 2.0, 0, 10);
  rec.record(3, 0, 2.0, 2.0, 10, 10);
  const MetricsReport rep = rec.finalize("test", 1);
  CHECK(rep.per_ue[0].samples == 4);
  CHECK(rep.per_ue[0].tpt_violations == 1);
  CHECK(rep.per_ue[0].tsls_violations == 1);
  CHECK(rep.per_ue[0].max_tsls == 11);
}

TEST_CASE("all-violating horizon gives fraction 1") {
  MetricsRecorder rec(1, 10);
  rec.set_class(0, ServiceClass::eMBB);
  for (int t = 0; t < 10; ++t) rec.record(t, 0, 0.0, 5.0, 100, 10);
  const MetricsReport rep = rec.finalize("test", 1);
  CHECK(rep.per_ue[0].tpt_violation_frac() == 1.0);
  CHECK(rep.per_ue[0].tsls_violation_frac() == 1.0);
}

TEST_CASE("synthetic 37-of-100 violation stream") {
  MetricsRecorder rec(1, 100);
  rec.set_class(0, ServiceClass::eMBB);
  for (int t = 0; t < 100; ++t) {
    const bool violating = t < 37;
    rec.record(t, 0, violating ? 1.0 : 6.0, 5.0, 0, 10);
  }
  const MetricsReport rep = rec.finalize("test", 1);
  CHECK(rep.per_ue[0].tpt_violation_frac() == doctest::Approx(0.37));
  // counter arithmetic is exactly recoverable
  CHECK(rep.per_ue[0].tpt_violation_frac() * rep.per_ue[0].samples ==
        doctest::Approx(37.0));
}

TEST_CASE("empty run finalizes to an all-zero report") {
  MetricsRecorder rec(2, 0);
  rec.set_class(0, ServiceClass::eMBB);
  rec.set_class(1, ServiceClass::XR);
  const MetricsReport rep = rec.finalize("idle", 7);
  CHECK(rep.horizon == 0);
  for (const auto& ue : rep.per_ue) {
    CHECK(ue.samples == 0);
    CHECK(ue.mean_tpt_mbps() == 0.0);
    CHECK(ue.tpt_violation_frac() == 0.0);
  }
}

TEST_CASE("class aggregates average their member UEs") {
  MetricsRecorder rec(3, 2);
  rec.set_class(0, ServiceClass::eMBB);
  rec.set_class(1, ServiceClass::eMBB);
  rec.set_class(2, ServiceClass::URLLC);
  for (int t = 0; t < 2; ++t) {
    rec.record(t, 0, 4.0, 5.0, 0, 10);  // always violating tpt
    rec.record(t, 1, 6.0, 5.0, 0, 10);  // never violating
    rec.record(t, 2, 2.0, 1.0, 0, 10);
  }
  const MetricsReport rep = rec.finalize("test", 1);
  const auto& embb = rep.per_class.at("embb");
  CHECK(embb.ues == 2);
  CHECK(embb.mean_tpt_mbps == doctest::Approx(5.0));
  CHECK(embb.tpt_violation_frac == doctest::Approx(0.5));
  CHECK(rep.per_class.at("urllc").ues == 1);
}

TEST_CASE("merge equals recomputation on the concatenated stream") {
  MetricsRecorder left(2, 3), right(2, 2), both(2, 5);
  for (MetricsRecorder* r : {&left, &right, &both}) {
    r->set_class(0, ServiceClass::eMBB);
    r->set_class(1, ServiceClass::mMTC);
  }
  int t = 0;
  auto feed = [&](MetricsRecorder& r, int local_t) {
    r.record(local_t, 0, t % 2 ? 1.0 : 9.0, 5.0, t, 3);
    r.record(local_t, 1, 3.0, 2.0, 0, 3);
    ++t;
  };
  for (int i = 0; i < 3; ++i) feed(left, i);
  for (int i = 0; i < 2; ++i) feed(right, i);
  // replay the same global stream into `both`
  t = 0;
  for (int i = 0; i < 5; ++i) feed(both, i);

  const MetricsReport merged =
      MetricsRecorder::merge(left.finalize("p", 1), right.finalize("p", 1));
  const MetricsReport direct = both.finalize("p", 1);
  REQUIRE(merged.per_ue.size() == direct.per_ue.size());
  for (std::size_t u = 0; u < merged.per_ue.size(); ++u) {
    CHECK(merged.per_ue[u].samples == direct.per_ue[u].samples);
    CHECK(merged.per_ue[u].tpt_violations == direct.per_ue[u].tpt_violations);
    CHECK(merged.per_ue[u].tsls_violations == direct.per_ue[u].tsls_violations);
    CHECK(merged.per_ue[u].tpt_sum_mbps ==
          doctest::Approx(direct.per_ue[u].tpt_sum_mbps));
    CHECK(merged.per_ue[u].max_tsls == direct.per_ue[u].max_tsls);
  }
}

TEST_CASE("structured export round-trips losslessly") {
  MetricsRecorder rec(2, 50);
  rec.set_class(0, ServiceClass::XR);
  rec.set_class(1, ServiceClass::URLLC);
  for (int t = 0; t < 50; ++t) {
    rec.record(t, 0, 6.0 + 0.01 * t, 6.2, t % 7, 15);
    rec.record(t, 1, 2.1, 2.0, t % 3, 10);
  }
  const MetricsReport rep = rec.finalize("windex", 99);

  const std::string p1 = "report_rt1.json", p2 = "report_rt2.json";
  export_report(rep, p1, ReportFormat::structured);
  const MetricsReport back = import_report(p1);
  export_report(back, p2, ReportFormat::structured);
  CHECK(slurp(p1) == slurp(p2));
  CHECK(back.policy == "windex");
  CHECK(back.seed == 99);
  CHECK(back.per_ue[0].tpt_sum_mbps == rep.per_ue[0].tpt_sum_mbps);
  CHECK(back.summed_violation_frac() == rep.summed_violation_frac());
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("CSV golden format") {
  MetricsRecorder rec(1, 4);
  rec.set_class(0, ServiceClass::eMBB);
  rec.record(0, 0, 4.0, 5.0, 0, 10);
  rec.record(1, 0, 6.0, 5.0, 11, 10);
  rec.record(2, 0, 6.0, 5.0, 0, 10);
  rec.record(3, 0, 8.0, 5.0, 0, 10);
  const MetricsReport rep = rec.finalize("maxcqi", 3);

  const std::string path = "report_golden.csv";
  export_report(rep, path, ReportFormat::csv);
  CHECK(slurp(path) ==
        "ue,class,samples,mean_tpt_mbps,tpt_violation_frac,tsls_violation_frac,max_tsls\n"
        "0,embb,4,6,0.25,0.25,11\n");
  std::remove(path.c_str());
}

TEST_CASE("export surfaces I/O failures with the path") {
  MetricsRecorder rec(1, 0);
  rec.set_class(0, ServiceClass::eMBB);
  const MetricsReport rep = rec.finalize("x", 0);
  try {
    export_report(rep, "/no/such/dir/report.json", ReportFormat::structured);
    FAIL("expected an I/O error");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("/no/such/dir/report.json") != std::string::npos);
  }
}
