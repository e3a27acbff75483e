#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "handoff/ap_registry.hpp"
#include "handoff/geo.hpp"
#include "handoff/power.hpp"
#include "handoff/traffic.hpp"

namespace handoff {

enum class SchemeKind {
  AgpsSwitching,
  GsmSwitching,
  ScanningSwitching,
  GprsNonSwitching,
  WifiNonSwitching,
};

std::string_view scheme_name(SchemeKind s);
std::optional<SchemeKind> scheme_from_name(std::string_view s);

enum class ErrorModel { UniformDisk, Gaussian };

struct LocalizationSpec {
  double agps_accuracy_m = 10.0;
  double gsm_accuracy_m = 400.0;
  ErrorModel error_model = ErrorModel::UniformDisk;
};

struct Intervals {
  double t_measure_s = 30.0;
  double scan_interval_s = 60.0;
  double rescan_interval_s = 60.0;
};

struct Links {
  double gprs_kbps = 40.0;
  double wifi_kbps = 5000.0;
};

struct Toggles {
  bool idle_unused_wifi = false;   // unused Wi-Fi idles instead of powering off
  bool gsm_heads_to_truth = false; // noisy fix corrupts only timing, not heading
  bool use_sharing_service = false;
  std::string endpoint;            // host:port when use_sharing_service
  double query_payload_bytes = 256.0;
};

// Test hook: fixes consume these instead of drawing from the RNG.
struct ForcedFix {
  double bearing_rad = 0.0;
  double magnitude_m = 0.0;
};

struct Scenario {
  GeoPoint user_start;
  double v_user_mps = 1.4;
  std::vector<ApRecord> aps;  // ground truth; also seeds the log when none given
  std::optional<Registry> initial_registry;
  PowerProfile power;
  DemandParams demand;
  Links links;
  Intervals intervals;
  LocalizationSpec localization;
  Toggles toggles;
  double battery_j = 19980.0;
  bool run_to_depletion = false;
  double duration_s = 12000.0;  // ignored when run_to_depletion
  std::uint64_t seed = 42;
  std::vector<TraceStep> demand_trace;  // consumed by UserKind::Trace
  std::vector<ForcedFix> forced_fixes;  // test hook

  // Field-named problems; empty when runnable.
  std::vector<std::string> validate() const;
};

// The shipped example: a suburban campus with three APs, the nearest ~8 km out.
Scenario suburban_default();

struct RunSpec {
  SchemeKind scheme = SchemeKind::GprsNonSwitching;
  UserKind user = UserKind::U1;
  Threshold threshold{5.0};
  std::optional<std::uint64_t> seed;  // unset → scenario seed
};

struct SimReport {
  std::string scheme;
  std::string user;
  double threshold_kbps = 0.0;
  std::uint64_t seed = 0;

  double total_j = 0.0;
  double wifi_scan_j = 0.0;
  double wifi_active_j = 0.0;
  double wifi_idle_j = 0.0;
  double gprs_active_j = 0.0;
  double gprs_idle_j = 0.0;
  double loc_fix_j = 0.0;
  std::array<double, kRadioStateCount> buckets{};

  double bytes_delivered = 0.0;
  std::int64_t scan_count = 0;
  std::int64_t unnecessary_scan_count = 0;
  std::int64_t switch_episodes = 0;

  std::optional<double> depletion_time_s;
  double end_time_s = 0.0;
  double efficiency_bytes_per_j = 0.0;

  std::string error;  // non-empty when a grid cell failed (e.g. transport)
};

// Deterministic: identical (scenario, spec) pairs produce identical reports.
// Traffic draws depend only on (seed, user), so schemes and thresholds see the
// same workload for a given seed.
SimReport run(const Scenario& sc, const RunSpec& spec);

// Cross product in scheme-major, then user, then threshold order. parallel > 1
// farms cells out to threads; the result order is the same regardless.
std::vector<SimReport> compare(const Scenario& sc, const std::vector<SchemeKind>& schemes,
                               const std::vector<UserKind>& users,
                               const std::vector<Threshold>& thresholds, int parallel = 1);

}  // namespace handoff
