#pragma once

#include <optional>
#include <string>
#include <vector>

#include "handoff/sim.hpp"

namespace handoff {

// Decimal rendering shared by the JSON and CSV emitters; shortest string that
// parses back to the same double.
std::string render_number(double v);

std::string report_json(const SimReport& r);

std::string csv_header();
std::string csv_row(const SimReport& r, std::optional<double> ratio_wifi_gprs = std::nullopt);

struct GridCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct GridSummary {
  struct UserRatio {
    std::string user;
    double wifi_efficiency = 0.0;
    double gprs_efficiency = 0.0;
    double ratio = 0.0;
  };
  std::vector<UserRatio> ratios;
  std::vector<GridCheck> checks;
};

GridSummary summarize_grid(const std::vector<SimReport>& rows, const Scenario& sc);

struct GridOutput {
  std::string json;
  std::string csv;
  GridSummary summary;
};

GridOutput render_grid(const std::vector<SimReport>& rows, const Scenario& sc);

}  // namespace handoff
