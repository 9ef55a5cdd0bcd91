#include "windex/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace windex {

const char* to_string(ServiceClass c) {
  switch (c) {
    case ServiceClass::eMBB: return "embb";
    case ServiceClass::URLLC: return "urllc";
    case ServiceClass::mMTC: return "mmtc";
    case ServiceClass::XR: return "xr";
  }
  return "?";
}

ServiceClass service_class_from_string(const std::string& name) {
  if (name == "embb") return ServiceClass::eMBB;
  if (name == "urllc") return ServiceClass::URLLC;
  if (name == "mmtc") return ServiceClass::mMTC;
  if (name == "xr") return ServiceClass::XR;
  throw std::invalid_argument("unknown service class: " + name);
}

void ServiceClassSpec::validate() const {
  if (std::abs(w_r + w_tpt + w_tsls - 1.0) > 1e-9) {
    throw std::invalid_argument("ServiceClassSpec: weights must sum to 1");
  }
  if (tpt_bound_B < 0.0 || tpt_bound_B > 1.0) {
    throw std::invalid_argument("ServiceClassSpec: tpt_bound_B outside [0,1]");
  }
  if (tsls_bound_L < 1) {
    throw std::invalid_argument("ServiceClassSpec: tsls_bound_L must be >= 1");
  }
}

ServiceClassSpec default_spec(ServiceClass c) {
  ServiceClassSpec spec;
  spec.class_id = c;
  switch (c) {
    case ServiceClass::eMBB:
      spec.traffic = {TrafficModel::Kind::constant_bitrate, 5.8, 0.0};
      spec.tpt_bound_B = 0.9;
      spec.tsls_bound_L = 50;
      spec.w_r = 0.2; spec.w_tpt = 0.6; spec.w_tsls = 0.2;
      break;
    case ServiceClass::URLLC:
      spec.traffic = {TrafficModel::Kind::bursty, 2.0, 0.01};
      spec.tpt_bound_B = 0.3;
      spec.tsls_bound_L = 10;
      spec.w_r = 0.2; spec.w_tpt = 0.2; spec.w_tsls = 0.6;
      break;
    case ServiceClass::mMTC:
      spec.traffic = {TrafficModel::Kind::bursty, 3.5, 0.01};
      spec.tpt_bound_B = 0.3;
      spec.tsls_bound_L = 40;
      spec.w_r = 0.2; spec.w_tpt = 0.2; spec.w_tsls = 0.6;
      break;
    case ServiceClass::XR:
      spec.traffic = {TrafficModel::Kind::constant_bitrate, 6.2, 0.0};
      spec.tpt_bound_B = 0.9;
      spec.tsls_bound_L = 15;
      spec.w_r = 0.2; spec.w_tpt = 0.6; spec.w_tsls = 0.2;
      break;
  }
  return spec;
}

ChannelProcess ChannelProcess::constant(int cqi) {
  ChannelProcess p;
  p.source_ = Source::constant;
  p.cqi_ = std::clamp(cqi, kCqiMin, kCqiMax);
  return p;
}

ChannelProcess ChannelProcess::random_walk(int cqi_min, int cqi_max, double step_prob,
                                           int start_cqi) {
  ChannelProcess p;
  p.source_ = Source::random_walk;
  p.cqi_min_ = std::clamp(cqi_min, kCqiMin, kCqiMax);
  p.cqi_max_ = std::clamp(cqi_max, p.cqi_min_, kCqiMax);
  p.step_prob_ = step_prob;
  p.cqi_ = std::clamp(start_cqi, p.cqi_min_, p.cqi_max_);
  return p;
}

ChannelProcess ChannelProcess::trace(std::vector<int> values) {
  if (values.empty()) throw std::invalid_argument("ChannelProcess::trace: empty trace");
  ChannelProcess p;
  p.source_ = Source::trace;
  for (int& v : values) {
    if (v < kCqiMin || v > kCqiMax) {
      v = std::clamp(v, kCqiMin, kCqiMax);
      ++p.clamp_warnings_;
    }
  }
  p.trace_ = std::move(values);
  p.cqi_ = p.trace_.front();
  p.trace_pos_ = 0;
  return p;
}

int ChannelProcess::advance(Rng& rng) {
  switch (source_) {
    case Source::constant:
      break;
    case Source::random_walk:
      if (rng.bernoulli(step_prob_)) {
        const int dir = rng.bernoulli(0.5) ? 1 : -1;
        int next = cqi_ + dir;
        // reflect at the bounds
        if (next < cqi_min_) next = cqi_min_ + 1;
        if (next > cqi_max_) next = cqi_max_ - 1;
        cqi_ = std::clamp(next, cqi_min_, cqi_max_);
      }
      break;
    case Source::trace:
      trace_pos_ = (trace_pos_ + 1) % trace_.size();
      cqi_ = trace_[trace_pos_];
      break;
  }
  return cqi_;
}

namespace {

std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    // trim surrounding whitespace
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  return cells;
}

void append_trace_values(const std::string& path, const std::string& column,
                         std::vector<int>& out) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trace: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_trace: empty file " + path);
  const auto header = split_csv_row(line);
  std::size_t col = header.size();
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == column) { col = i; break; }
  }
  if (col == header.size()) {
    throw std::runtime_error("load_trace: column '" + column + "' not found in " + path);
  }

  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_row(line);
    if (cells.size() <= col) {
      throw std::runtime_error("load_trace: " + path + " line " + std::to_string(line_no) +
                               ": row has too few columns");
    }
    try {
      std::size_t used = 0;
      const int v = std::stoi(cells[col], &used);
      if (used != cells[col].size()) throw std::invalid_argument("trailing chars");
      out.push_back(v);
    } catch (const std::exception&) {
      throw std::runtime_error("load_trace: " + path + " line " + std::to_string(line_no) +
                               ": non-integer CQI '" + cells[col] + "'");
    }
  }
  if (out.empty()) throw std::runtime_error("load_trace: no data rows in " + path);
}

}  // namespace

ChannelProcess load_trace(const std::string& path, const std::string& column) {
  std::vector<int> values;
  append_trace_values(path, column, values);
  return ChannelProcess::trace(std::move(values));
}

ChannelProcess load_traces(const std::vector<std::string>& paths, const std::string& column) {
  std::vector<int> values;
  for (const auto& p : paths) append_trace_values(p, column, values);
  return ChannelProcess::trace(std::move(values));
}

CapacityModel CapacityModel::standard() {
  // 3GPP 4-bit CQI spectral efficiencies (table 1), scaled so that cqi=15
  // with 9 RBs carries ~812.5 bytes per TTI (6.5 Mbps).
  static constexpr std::array<double, kCqiMax + 1> eff = {
      0.0, 0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766,
      1.9141, 2.4063, 2.7305, 3.3223, 3.9023, 4.5234, 5.1152, 5.5547};
  CapacityModel m;
  const double scale = 812.5 / (eff[kCqiMax] * 9.0);
  for (int c = 0; c <= kCqiMax; ++c) m.mean_per_rb[c] = eff[c] * scale;
  m.sigma_frac = 0.05;
  return m;
}

double CapacityModel::mean_bytes(int cqi, int rbs) const {
  cqi = std::clamp(cqi, kCqiMin, kCqiMax);
  if (rbs <= 0) return 0.0;
  return mean_per_rb[cqi] * rbs;
}

double CapacityModel::sample_bytes(int cqi, int rbs, Rng& rng) const {
  const double mean = mean_bytes(cqi, rbs);
  if (mean <= 0.0) return 0.0;
  if (sigma_frac == 0.0) return mean;
  return std::max(0.0, rng.gaussian(mean, sigma_frac * mean));
}

StepResult step_ue(UEState& ue, ChannelProcess& channel, const TrafficModel& traffic,
                   const CapacityModel& cap, int rbs_granted, bool high_action,
                   double& traffic_carry, Rng& rng) {
  if (rbs_granted < 0) rbs_granted = 0;

  StepResult res;
  const double capacity = cap.sample_bytes(ue.cqi, rbs_granted, rng);
  res.served_bytes = std::min(ue.buffer_bytes, capacity);
  ue.buffer_bytes -= res.served_bytes;

  switch (traffic.kind) {
    case TrafficModel::Kind::constant_bitrate: {
      traffic_carry += traffic.rate_mbps * 125.0;  // Mbps -> bytes per 1 ms TTI
      res.arrived_bytes = std::floor(traffic_carry);
      traffic_carry -= res.arrived_bytes;
      break;
    }
    case TrafficModel::Kind::bursty: {
      if (rng.bernoulli(traffic.burst_prob)) res.arrived_bytes = traffic.burst_bytes();
      break;
    }
  }
  ue.buffer_bytes += res.arrived_bytes;

  ue.tsls = high_action ? 0 : ue.tsls + 1;
  ue.cqi = channel.advance(rng);
  res.realized_tpt_mbps = res.served_bytes * 8.0 / 1000.0;  // bytes per 1 ms -> Mbps
  return res;
}

}  // namespace windex
