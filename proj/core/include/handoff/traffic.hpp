#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace handoff {

// u1..u4 are the built-in workload shapes; trace replays a demand CSV.
enum class UserKind { U1, U2, U3, U4, Trace };

std::string_view user_kind_name(UserKind k);
std::optional<UserKind> user_kind_from_name(std::string_view s);

struct Threshold {
  double kbps = 0.0;
};

struct RateSample {
  double t_s = 0.0;
  double rate_kbps = 0.0;
};

// Switch when the measured rate reaches the threshold (boundary inclusive).
inline bool should_switch(const RateSample& r, Threshold b) { return r.rate_kbps >= b.kbps; }

// Windowed demand rate as the monitor reports it: average demand over the
// window clamped to link capacity; a bulk transfer outstanding anywhere in the
// window reads as the full capacity.
double sample_rate_kbps(double window_demand_bits, double window_s, bool greedy_in_window,
                        double capacity_kbps);

// Knobs behind the four workload shapes. Bytes are decimal (kB = 1000 B);
// kb/s = 1000 bit/s.
struct DemandParams {
  double u1_message_bytes = 1000.0;   // ~0.5 kb/s mean with 16 s gaps
  double u1_mean_interval_s = 16.0;
  double u2_page_bytes = 90000.0;     // 12 kb/s mean
  double u2_interval_s = 60.0;
  double u3_segment_bytes = 180000.0; // 24 kb/s mean
  double u3_interval_s = 60.0;
  double u4_payload_bytes = 50e6;     // bulk download, then u1-like trickle

  std::vector<std::string> validate() const;

  // Long-run mean demand in kb/s; for U4 the bulk phase is averaged over
  // `horizon_s`. Used by ordering checks, not by the simulator itself.
  double mean_demand_kbps(UserKind k, double horizon_s) const;
};

struct TraceStep {
  double t_s = 0.0;
  double kbps = 0.0;
};

std::vector<TraceStep> load_demand_csv(const std::filesystem::path& file);

struct Chunk {
  double t_s = 0.0;
  double bits = 0.0;
};

// Seeded arrival stream for one run. U1/U2/U3 yield chunks from t=0; U4 starts
// with a bulk backlog and yields trickle chunks only after start_tail().
class DemandProcess {
 public:
  DemandProcess(UserKind kind, const DemandParams& params, std::uint64_t seed);
  static DemandProcess from_trace(std::vector<TraceStep> steps);

  std::optional<Chunk> next_chunk();
  double initial_backlog_bits() const;
  bool bulk_pending() const { return bulk_pending_; }
  void start_tail(double t_s);

  const std::vector<TraceStep>& trace() const { return trace_; }
  UserKind kind() const { return kind_; }

 private:
  DemandProcess() = default;
  UserKind kind_ = UserKind::Trace;
  DemandParams params_;
  std::mt19937_64 rng_;
  double next_t_ = 0.0;
  bool bulk_pending_ = false;
  bool tail_started_ = false;
  std::vector<TraceStep> trace_;
};

// Fluid single-link queue: chunks and continuous inflow drain at capacity.
// The radio is considered transferring while the backlog or inflow is nonzero.
class LinkQueue {
 public:
  explicit LinkQueue(double capacity_kbps);

  void advance(double t_s);
  void enqueue_bits(double t_s, double bits);
  void set_inflow_kbps(double t_s, double kbps);

  // Drains the backlog without delivering it (link handover).
  double take_backlog_bits(double t_s);

  double backlog_bits() const { return backlog_bits_; }
  double delivered_bits() const { return delivered_bits_; }
  double inflow_kbps() const { return inflow_kbps_; }
  double capacity_kbps() const { return capacity_kbps_; }
  bool transferring() const { return backlog_bits_ > 0.0 || inflow_kbps_ > 0.0; }

  // Absolute time the backlog empties under current inflow; nullopt if it
  // never does (or is already empty).
  std::optional<double> next_empty_time() const;

 private:
  double capacity_kbps_;
  double inflow_kbps_ = 0.0;
  double backlog_bits_ = 0.0;
  double delivered_bits_ = 0.0;
  double last_t_ = 0.0;
};

}  // namespace handoff
