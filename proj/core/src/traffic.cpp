#include "handoff/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace handoff {

std::string_view user_kind_name(UserKind k) {
  switch (k) {
    case UserKind::U1: return "u1";
    case UserKind::U2: return "u2";
    case UserKind::U3: return "u3";
    case UserKind::U4: return "u4";
    case UserKind::Trace: return "trace";
  }
  return "?";
}

std::optional<UserKind> user_kind_from_name(std::string_view s) {
  if (s == "u1") return UserKind::U1;
  if (s == "u2") return UserKind::U2;
  if (s == "u3") return UserKind::U3;
  if (s == "u4") return UserKind::U4;
  if (s == "trace") return UserKind::Trace;
  return std::nullopt;
}

double sample_rate_kbps(double window_demand_bits, double window_s, bool greedy_in_window,
                        double capacity_kbps) {
  if (!(window_s > 0.0)) throw std::invalid_argument("sample_rate: window must be > 0");
  if (!(capacity_kbps > 0.0)) throw std::invalid_argument("sample_rate: capacity must be > 0");
  if (greedy_in_window) return capacity_kbps;
  double kbps = window_demand_bits / window_s / 1000.0;
  return std::min(kbps, capacity_kbps);
}

std::vector<std::string> DemandParams::validate() const {
  std::vector<std::string> errors;
  auto pos = [&](double v, const char* field) {
    if (!(std::isfinite(v) && v > 0.0)) errors.push_back(std::string(field) + ": must be > 0");
  };
  pos(u1_message_bytes, "demand.u1_message_bytes");
  pos(u1_mean_interval_s, "demand.u1_mean_interval_s");
  pos(u2_page_bytes, "demand.u2_page_bytes");
  pos(u2_interval_s, "demand.u2_interval_s");
  pos(u3_segment_bytes, "demand.u3_segment_bytes");
  pos(u3_interval_s, "demand.u3_interval_s");
  pos(u4_payload_bytes, "demand.u4_payload_bytes");
  return errors;
}

double DemandParams::mean_demand_kbps(UserKind k, double horizon_s) const {
  switch (k) {
    case UserKind::U1: return u1_message_bytes * 8.0 / u1_mean_interval_s / 1000.0;
    case UserKind::U2: return u2_page_bytes * 8.0 / u2_interval_s / 1000.0;
    case UserKind::U3: return u3_segment_bytes * 8.0 / u3_interval_s / 1000.0;
    case UserKind::U4: {
      if (!(horizon_s > 0.0)) throw std::invalid_argument("mean_demand: horizon must be > 0");
      return u4_payload_bytes * 8.0 / horizon_s / 1000.0 +
             mean_demand_kbps(UserKind::U1, horizon_s);
    }
    case UserKind::Trace: return 0.0;
  }
  return 0.0;
}

std::vector<TraceStep> load_demand_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  std::vector<TraceStep> steps;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string a, b;
    if (!std::getline(ss, a, ',') || !std::getline(ss, b))
      throw std::runtime_error("demand csv line " + std::to_string(lineno) +
                               ": expected t_s,kbps");
    char* end = nullptr;
    double t = std::strtod(a.c_str(), &end);
    double kbps = std::strtod(b.c_str(), &end);
    if (!std::isfinite(t) || !std::isfinite(kbps) || kbps < 0.0 || t < 0.0)
      throw std::runtime_error("demand csv line " + std::to_string(lineno) + ": bad values");
    if (!steps.empty() && t < steps.back().t_s)
      throw std::runtime_error("demand csv line " + std::to_string(lineno) +
                               ": timestamps must be non-decreasing");
    steps.push_back({t, kbps});
  }
  return steps;
}

DemandProcess::DemandProcess(UserKind kind, const DemandParams& params, std::uint64_t seed)
    : kind_(kind), params_(params), rng_(seed) {
  auto errors = params.validate();
  if (!errors.empty()) throw std::invalid_argument(errors.front());
  bulk_pending_ = (kind == UserKind::U4);
}

DemandProcess DemandProcess::from_trace(std::vector<TraceStep> steps) {
  DemandProcess p;
  p.kind_ = UserKind::Trace;
  p.trace_ = std::move(steps);
  return p;
}

double DemandProcess::initial_backlog_bits() const {
  return kind_ == UserKind::U4 ? params_.u4_payload_bytes * 8.0 : 0.0;
}

void DemandProcess::start_tail(double t_s) {
  if (kind_ != UserKind::U4 || tail_started_) return;
  bulk_pending_ = false;
  tail_started_ = true;
  next_t_ = t_s;
}

std::optional<Chunk> DemandProcess::next_chunk() {
  switch (kind_) {
    case UserKind::U1: {
      std::exponential_distribution<double> gap(1.0 / params_.u1_mean_interval_s);
      next_t_ += gap(rng_);
      return Chunk{next_t_, params_.u1_message_bytes * 8.0};
    }
    case UserKind::U2:
      next_t_ += params_.u2_interval_s;
      return Chunk{next_t_, params_.u2_page_bytes * 8.0};
    case UserKind::U3:
      next_t_ += params_.u3_interval_s;
      return Chunk{next_t_, params_.u3_segment_bytes * 8.0};
    case UserKind::U4: {
      if (!tail_started_) return std::nullopt;
      std::exponential_distribution<double> gap(1.0 / params_.u1_mean_interval_s);
      next_t_ += gap(rng_);
      return Chunk{next_t_, params_.u1_message_bytes * 8.0};
    }
    case UserKind::Trace: return std::nullopt;
  }
  return std::nullopt;
}

LinkQueue::LinkQueue(double capacity_kbps) : capacity_kbps_(capacity_kbps) {
  if (!(std::isfinite(capacity_kbps) && capacity_kbps > 0.0))
    throw std::invalid_argument("LinkQueue: capacity must be > 0");
}

void LinkQueue::advance(double t_s) {
  if (t_s < last_t_) throw std::logic_error("LinkQueue: time moved backwards");
  double dt = t_s - last_t_;
  const double cap_bps = capacity_kbps_ * 1000.0;
  const double in_bps = inflow_kbps_ * 1000.0;
  while (dt > 0.0) {
    if (backlog_bits_ > 0.0) {
      double step = dt;
      if (in_bps < cap_bps) {
        double to_empty = backlog_bits_ / (cap_bps - in_bps);
        step = std::min(dt, to_empty);
      }
      delivered_bits_ += cap_bps * step;
      backlog_bits_ += (in_bps - cap_bps) * step;
      // event times carry ~ulp(t) rounding; under a nanosecond of service is empty
      if (backlog_bits_ < 1e-9 * cap_bps) backlog_bits_ = 0.0;
      dt -= step;
    } else {
      if (in_bps > cap_bps) {
        delivered_bits_ += cap_bps * dt;
        backlog_bits_ += (in_bps - cap_bps) * dt;
      } else {
        delivered_bits_ += in_bps * dt;
      }
      dt = 0.0;
    }
  }
  last_t_ = t_s;
}

void LinkQueue::enqueue_bits(double t_s, double bits) {
  if (bits < 0.0) throw std::invalid_argument("enqueue_bits: bits must be >= 0");
  advance(t_s);
  backlog_bits_ += bits;
}

double LinkQueue::take_backlog_bits(double t_s) {
  advance(t_s);
  double bits = backlog_bits_;
  backlog_bits_ = 0.0;
  return bits;
}

void LinkQueue::set_inflow_kbps(double t_s, double kbps) {
  if (kbps < 0.0) throw std::invalid_argument("set_inflow: rate must be >= 0");
  advance(t_s);
  inflow_kbps_ = kbps;
}

std::optional<double> LinkQueue::next_empty_time() const {
  if (backlog_bits_ <= 0.0) return std::nullopt;
  double net = (capacity_kbps_ - inflow_kbps_) * 1000.0;
  if (net <= 0.0) return std::nullopt;
  return last_t_ + backlog_bits_ / net;
}

}  // namespace handoff
