#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace handoff {

enum class RadioState {
  WifiOff,
  WifiIdle,
  WifiActive,
  WifiScan,
  GprsIdle,
  GprsActive,
  GpsFix,
  AgpsFix,
  GsmLoc,
};
inline constexpr std::size_t kRadioStateCount = 9;

std::string_view radio_state_name(RadioState s);

// Draw per state in watts. Wi-Fi and localization defaults are measured values;
// the GPRS pair and the assisted-fix draw have no measured source and must be
// set explicitly by the scenario (negative means unset).
struct PowerProfile {
  double wifi_scan_w = 1.4260;
  double wifi_active_w = 0.890;
  double wifi_idle_w = 0.256;
  double gprs_active_w = -1.0;
  double gprs_idle_w = -1.0;
  double gps_fix_w = 0.400;
  double agps_fix_w = -1.0;
  double gsm_loc_w = 0.060;

  double scan_duration_s = 2.0;
  double fix_duration_s = 5.0;

  double power_w(RadioState s) const;

  // Field-named problems; empty when usable.
  std::vector<std::string> validate() const;
};

// Per-state energy buckets. total_j() is always the fixed-order sum of the
// buckets, so conservation is structural.
class EnergyLedger {
 public:
  EnergyLedger() = default;
  explicit EnergyLedger(double budget_j) : budget_j_(budget_j) {}

  void accrue(const PowerProfile& p, RadioState s, double duration_s);

  double bucket_j(RadioState s) const { return joules_[std::size_t(s)]; }
  double total_j() const;
  double budget_j() const { return budget_j_; }
  double remaining_j() const { return budget_j_ - total_j(); }

 private:
  std::array<double, kRadioStateCount> joules_{};
  double budget_j_ = 19980.0;
};

// Seconds until a constant draw exhausts the budget; nullopt when power is 0.
std::optional<double> time_to_depletion_s(double budget_j, double power_w);

// Useful payload bytes per joule. joules must be > 0 unless bytes is also 0.
double energy_efficiency(double bytes, double joules);

}  // namespace handoff
