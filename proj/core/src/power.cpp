#include "handoff/power.hpp"

#include <cmath>
#include <stdexcept>

namespace handoff {

std::string_view radio_state_name(RadioState s) {
  switch (s) {
    case RadioState::WifiOff: return "wifi_off";
    case RadioState::WifiIdle: return "wifi_idle";
    case RadioState::WifiActive: return "wifi_active";
    case RadioState::WifiScan: return "wifi_scan";
    case RadioState::GprsIdle: return "gprs_idle";
    case RadioState::GprsActive: return "gprs_active";
    case RadioState::GpsFix: return "gps_fix";
    case RadioState::AgpsFix: return "agps_fix";
    case RadioState::GsmLoc: return "gsm_loc";
  }
  return "?";
}

double PowerProfile::power_w(RadioState s) const {
  switch (s) {
    case RadioState::WifiOff: return 0.0;
    case RadioState::WifiIdle: return wifi_idle_w;
    case RadioState::WifiActive: return wifi_active_w;
    case RadioState::WifiScan: return wifi_scan_w;
    case RadioState::GprsIdle: return gprs_idle_w;
    case RadioState::GprsActive: return gprs_active_w;
    case RadioState::GpsFix: return gps_fix_w;
    case RadioState::AgpsFix: return agps_fix_w;
    case RadioState::GsmLoc: return gsm_loc_w;
  }
  return 0.0;
}

std::vector<std::string> PowerProfile::validate() const {
  std::vector<std::string> errors;
  auto need = [&](double v, const char* field) {
    if (!(std::isfinite(v) && v >= 0.0))
      errors.push_back(std::string(field) + ": must be set to a finite value >= 0");
  };
  need(wifi_scan_w, "wifi_scan_w");
  need(wifi_active_w, "wifi_active_w");
  need(wifi_idle_w, "wifi_idle_w");
  need(gprs_active_w, "gprs_active_w");
  need(gprs_idle_w, "gprs_idle_w");
  need(gps_fix_w, "gps_fix_w");
  need(agps_fix_w, "agps_fix_w");
  need(gsm_loc_w, "gsm_loc_w");
  if (std::isfinite(agps_fix_w) && agps_fix_w >= 0.0 && agps_fix_w >= gps_fix_w)
    errors.push_back("agps_fix_w: must be < gps_fix_w");
  if (!(std::isfinite(scan_duration_s) && scan_duration_s > 0.0))
    errors.push_back("scan_duration_s: must be > 0");
  if (!(std::isfinite(fix_duration_s) && fix_duration_s > 0.0))
    errors.push_back("fix_duration_s: must be > 0");
  return errors;
}

void EnergyLedger::accrue(const PowerProfile& p, RadioState s, double duration_s) {
  if (!(duration_s >= 0.0)) throw std::invalid_argument("accrue: duration must be >= 0");
  joules_[std::size_t(s)] += p.power_w(s) * duration_s;
}

double EnergyLedger::total_j() const {
  double sum = 0.0;
  for (std::size_t i = 0; i < kRadioStateCount; ++i) sum += joules_[i];
  return sum;
}

std::optional<double> time_to_depletion_s(double budget_j, double power_w) {
  if (!(budget_j >= 0.0)) throw std::invalid_argument("time_to_depletion: budget must be >= 0");
  if (!(power_w >= 0.0)) throw std::invalid_argument("time_to_depletion: power must be >= 0");
  if (power_w == 0.0) return std::nullopt;
  return budget_j / power_w;
}

double energy_efficiency(double bytes, double joules) {
  if (bytes == 0.0) return 0.0;
  if (!(joules > 0.0))
    throw std::invalid_argument("energy_efficiency: joules must be > 0 for nonzero bytes");
  return bytes / joules;
}

}  // namespace handoff
