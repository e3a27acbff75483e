#include "handoff/scenario_config.hpp"

#include <set>
#include <string>

#include <yaml-cpp/yaml.h>

namespace handoff {
namespace {

namespace fs = std::filesystem;

struct Ctx {
  std::vector<std::string> errs;
  fs::path base;

  void err(const std::string& path, const std::string& what) { errs.push_back(path + ": " + what); }
};

void check_keys(Ctx& c, const YAML::Node& node, const std::string& path,
                const std::set<std::string>& allowed) {
  if (!node.IsDefined() || node.IsNull()) return;
  if (!node.IsMap()) {
    c.err(path, "must be a mapping");
    return;
  }
  for (const auto& kv : node) {
    auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) c.err(path + "." + key, "unknown key");
  }
}

template <typename T>
bool read(Ctx& c, const YAML::Node& parent, const std::string& path, const std::string& key,
          T& out) {
  YAML::Node n = parent[key];
  if (!n.IsDefined() || n.IsNull()) return false;
  try {
    out = n.as<T>();
    return true;
  } catch (const YAML::Exception&) {
    c.err(path + "." + key, "has the wrong type");
    return false;
  }
}

fs::path resolve(const Ctx& c, const std::string& p) {
  fs::path fp(p);
  return fp.is_absolute() ? fp : c.base / fp;
}

std::optional<ApRecord> parse_ap(Ctx& c, const YAML::Node& n, const std::string& path) {
  check_keys(c, n, path, {"bssid", "ssid", "lat_deg", "lon_deg", "range_m", "auth", "t"});
  if (!n.IsMap()) return std::nullopt;
  ApRecord r;
  double lat = 0.0, lon = 0.0;
  bool ok = true;
  ok &= read(c, n, path, "bssid", r.bssid);
  ok &= read(c, n, path, "ssid", r.ssid);
  ok &= read(c, n, path, "lat_deg", lat);
  ok &= read(c, n, path, "lon_deg", lon);
  ok &= read(c, n, path, "range_m", r.range_m);
  if (!ok) {
    c.err(path, "needs bssid, ssid, lat_deg, lon_deg, range_m");
    return std::nullopt;
  }
  std::string auth;
  if (read(c, n, path, "auth", auth)) r.auth = auth;
  read(c, n, path, "t", r.timestamp_s);
  try {
    r.location = GeoPoint::from_degrees(lat, lon);
    validate_record(r);
  } catch (const std::exception& e) {
    c.err(path, e.what());
    return std::nullopt;
  }
  return r;
}

void parse_scenario_block(Ctx& c, const YAML::Node& n, Scenario& sc) {
  check_keys(c, n, "scenario",
             {"user_start", "v_user_mps", "seed", "battery_j", "mode", "duration_s"});
  if (!n.IsDefined()) return;
  if (YAML::Node us = n["user_start"]; us.IsDefined()) {
    check_keys(c, us, "scenario.user_start", {"lat_deg", "lon_deg"});
    double lat = 0.0, lon = 0.0;
    bool ok = read(c, us, "scenario.user_start", "lat_deg", lat);
    ok &= read(c, us, "scenario.user_start", "lon_deg", lon);
    if (ok) {
      try {
        sc.user_start = GeoPoint::from_degrees(lat, lon);
      } catch (const std::exception& e) {
        c.err("scenario.user_start", e.what());
      }
    } else {
      c.err("scenario.user_start", "needs lat_deg and lon_deg");
    }
  }
  read(c, n, "scenario", "v_user_mps", sc.v_user_mps);
  read(c, n, "scenario", "seed", sc.seed);
  read(c, n, "scenario", "battery_j", sc.battery_j);
  std::string mode;
  if (read(c, n, "scenario", "mode", mode)) {
    if (mode == "duration")
      sc.run_to_depletion = false;
    else if (mode == "depletion")
      sc.run_to_depletion = true;
    else
      c.err("scenario.mode", "must be \"duration\" or \"depletion\", got \"" + mode + "\"");
  }
  read(c, n, "scenario", "duration_s", sc.duration_s);
}

void parse_power(Ctx& c, const YAML::Node& n, PowerProfile& pw) {
  check_keys(c, n, "power",
             {"wifi_scan_w", "wifi_active_w", "wifi_idle_w", "gprs_active_w", "gprs_idle_w",
              "gps_fix_w", "agps_fix_w", "gsm_loc_w", "scan_duration_s"});
  if (!n.IsDefined()) return;
  read(c, n, "power", "wifi_scan_w", pw.wifi_scan_w);
  read(c, n, "power", "wifi_active_w", pw.wifi_active_w);
  read(c, n, "power", "wifi_idle_w", pw.wifi_idle_w);
  read(c, n, "power", "gprs_active_w", pw.gprs_active_w);
  read(c, n, "power", "gprs_idle_w", pw.gprs_idle_w);
  read(c, n, "power", "gps_fix_w", pw.gps_fix_w);
  read(c, n, "power", "agps_fix_w", pw.agps_fix_w);
  read(c, n, "power", "gsm_loc_w", pw.gsm_loc_w);
  read(c, n, "power", "scan_duration_s", pw.scan_duration_s);
}

void parse_intervals(Ctx& c, const YAML::Node& n, Scenario& sc) {
  check_keys(c, n, "intervals",
             {"t_measure_s", "scan_interval_s", "rescan_interval_s", "fix_duration_s"});
  if (!n.IsDefined()) return;
  read(c, n, "intervals", "t_measure_s", sc.intervals.t_measure_s);
  read(c, n, "intervals", "scan_interval_s", sc.intervals.scan_interval_s);
  read(c, n, "intervals", "rescan_interval_s", sc.intervals.rescan_interval_s);
  read(c, n, "intervals", "fix_duration_s", sc.power.fix_duration_s);
}

void parse_demand(Ctx& c, const YAML::Node& n, Scenario& sc) {
  check_keys(c, n, "demand",
             {"u1_message_bytes", "u1_mean_interval_s", "u2_page_bytes", "u2_interval_s",
              "u3_segment_bytes", "u3_interval_s", "u4_payload_bytes", "trace_csv"});
  if (!n.IsDefined()) return;
  read(c, n, "demand", "u1_message_bytes", sc.demand.u1_message_bytes);
  read(c, n, "demand", "u1_mean_interval_s", sc.demand.u1_mean_interval_s);
  read(c, n, "demand", "u2_page_bytes", sc.demand.u2_page_bytes);
  read(c, n, "demand", "u2_interval_s", sc.demand.u2_interval_s);
  read(c, n, "demand", "u3_segment_bytes", sc.demand.u3_segment_bytes);
  read(c, n, "demand", "u3_interval_s", sc.demand.u3_interval_s);
  read(c, n, "demand", "u4_payload_bytes", sc.demand.u4_payload_bytes);
  std::string csv;
  if (read(c, n, "demand", "trace_csv", csv)) {
    try {
      sc.demand_trace = load_demand_csv(resolve(c, csv));
    } catch (const std::exception& e) {
      c.err("demand.trace_csv", e.what());
    }
  }
}

void parse_localization(Ctx& c, const YAML::Node& n, Scenario& sc) {
  check_keys(c, n, "localization", {"agps_accuracy_m", "gsm_accuracy_m", "error_model"});
  if (!n.IsDefined()) return;
  read(c, n, "localization", "agps_accuracy_m", sc.localization.agps_accuracy_m);
  read(c, n, "localization", "gsm_accuracy_m", sc.localization.gsm_accuracy_m);
  std::string model;
  if (read(c, n, "localization", "error_model", model)) {
    if (model == "uniform")
      sc.localization.error_model = ErrorModel::UniformDisk;
    else if (model == "gaussian")
      sc.localization.error_model = ErrorModel::Gaussian;
    else
      c.err("localization.error_model", "must be \"uniform\" or \"gaussian\", got \"" + model + "\"");
  }
}

void parse_toggles(Ctx& c, const YAML::Node& n, Scenario& sc) {
  check_keys(c, n, "toggles",
             {"idle_unused_wifi", "gsm_heads_to_truth", "use_sharing_service", "endpoint",
              "query_payload_bytes"});
  if (!n.IsDefined()) return;
  read(c, n, "toggles", "idle_unused_wifi", sc.toggles.idle_unused_wifi);
  read(c, n, "toggles", "gsm_heads_to_truth", sc.toggles.gsm_heads_to_truth);
  read(c, n, "toggles", "use_sharing_service", sc.toggles.use_sharing_service);
  read(c, n, "toggles", "endpoint", sc.toggles.endpoint);
  read(c, n, "toggles", "query_payload_bytes", sc.toggles.query_payload_bytes);
}

void parse_registry(Ctx& c, const YAML::Node& n, Scenario& sc) {
  check_keys(c, n, "registry", {"file", "entries", "cell_size_deg"});
  if (!n.IsDefined()) return;
  double cell = 0.01;
  read(c, n, "registry", "cell_size_deg", cell);
  std::string file;
  bool has_file = read(c, n, "registry", "file", file);
  YAML::Node entries = n["entries"];
  if (has_file && entries.IsDefined()) {
    c.err("registry", "give either file or entries, not both");
    return;
  }
  if (has_file) {
    try {
      sc.initial_registry = Registry::load(resolve(c, file), cell);
    } catch (const std::exception& e) {
      c.err("registry.file", e.what());
    }
    return;
  }
  if (entries.IsDefined()) {
    if (!entries.IsSequence()) {
      c.err("registry.entries", "must be a sequence");
      return;
    }
    try {
      Registry reg(cell);
      for (std::size_t i = 0; i < entries.size(); ++i) {
        auto rec = parse_ap(c, entries[i], "registry.entries[" + std::to_string(i) + "]");
        if (rec) reg.insert(*rec);
      }
      sc.initial_registry = std::move(reg);
    } catch (const std::exception& e) {
      c.err("registry", e.what());
    }
  }
}

void parse_run(Ctx& c, const YAML::Node& n, ScenarioFile& out) {
  check_keys(c, n, "run", {"schemes", "users", "thresholds_kbps"});
  if (!n.IsDefined()) return;
  if (YAML::Node sn = n["schemes"]; sn.IsDefined()) {
    if (!sn.IsSequence()) {
      c.err("run.schemes", "must be a sequence");
    } else {
      out.schemes.clear();
      for (std::size_t i = 0; i < sn.size(); ++i) {
        auto name = sn[i].as<std::string>("");
        if (auto s = scheme_from_name(name))
          out.schemes.push_back(*s);
        else
          c.err("run.schemes[" + std::to_string(i) + "]", "unknown scheme \"" + name + "\"");
      }
    }
  }
  if (YAML::Node un = n["users"]; un.IsDefined()) {
    if (!un.IsSequence()) {
      c.err("run.users", "must be a sequence");
    } else {
      out.users.clear();
      for (std::size_t i = 0; i < un.size(); ++i) {
        auto name = un[i].as<std::string>("");
        if (auto u = user_kind_from_name(name))
          out.users.push_back(*u);
        else
          c.err("run.users[" + std::to_string(i) + "]", "unknown user \"" + name + "\"");
      }
    }
  }
  if (YAML::Node tn = n["thresholds_kbps"]; tn.IsDefined()) {
    if (!tn.IsSequence()) {
      c.err("run.thresholds_kbps", "must be a sequence");
    } else {
      out.thresholds.clear();
      for (std::size_t i = 0; i < tn.size(); ++i) {
        try {
          double v = tn[i].as<double>();
          if (!(v > 0.0)) throw std::invalid_argument("must be > 0");
          out.thresholds.push_back(Threshold{v});
        } catch (const std::exception&) {
          c.err("run.thresholds_kbps[" + std::to_string(i) + "]", "must be a number > 0");
        }
      }
    }
  }
}

}  // namespace

ScenarioFile load_scenario_file(const fs::path& path) {
  ScenarioFile out;
  out.scenario = suburban_default();
  out.scenario.aps.clear();
  out.schemes = {SchemeKind::AgpsSwitching, SchemeKind::GsmSwitching,
                 SchemeKind::ScanningSwitching, SchemeKind::GprsNonSwitching,
                 SchemeKind::WifiNonSwitching};
  out.users = {UserKind::U1, UserKind::U2, UserKind::U3, UserKind::U4};
  out.thresholds = {Threshold{5.0}, Threshold{10.0}, Threshold{15.0}, Threshold{20.0}};

  Ctx c;
  c.base = path.parent_path();

  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }

  check_keys(c, root, "config",
             {"scenario", "aps", "registry", "power", "intervals", "links", "demand",
              "localization", "toggles", "run"});

  parse_scenario_block(c, root["scenario"], out.scenario);

  if (YAML::Node aps = root["aps"]; aps.IsDefined()) {
    if (!aps.IsSequence()) {
      c.err("aps", "must be a sequence");
    } else {
      for (std::size_t i = 0; i < aps.size(); ++i) {
        auto rec = parse_ap(c, aps[i], "aps[" + std::to_string(i) + "]");
        if (rec) out.scenario.aps.push_back(*rec);
      }
    }
  }

  parse_registry(c, root["registry"], out.scenario);
  parse_power(c, root["power"], out.scenario.power);
  parse_intervals(c, root["intervals"], out.scenario);

  if (YAML::Node ln = root["links"]; ln.IsDefined()) {
    check_keys(c, ln, "links", {"gprs_kbps", "wifi_kbps"});
    read(c, ln, "links", "gprs_kbps", out.scenario.links.gprs_kbps);
    read(c, ln, "links", "wifi_kbps", out.scenario.links.wifi_kbps);
  }

  parse_demand(c, root["demand"], out.scenario);
  parse_localization(c, root["localization"], out.scenario);
  parse_toggles(c, root["toggles"], out.scenario);
  parse_run(c, root["run"], out);

  if (out.schemes.empty()) c.err("run.schemes", "must name at least one scheme");
  if (out.users.empty()) c.err("run.users", "must name at least one user");
  if (out.thresholds.empty()) c.err("run.thresholds_kbps", "must list at least one threshold");

  for (const auto& m : out.scenario.validate()) c.errs.push_back(m);

  if (!c.errs.empty()) {
    std::string msg = path.string() + " invalid:";
    for (const auto& e : c.errs) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return out;
}

}  // namespace handoff
