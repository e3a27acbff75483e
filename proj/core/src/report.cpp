#include "handoff/report.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

namespace handoff {
namespace {

using json = nlohmann::ordered_json;

json report_to_json_obj(const SimReport& r) {
  json j;
  j["scheme"] = r.scheme;
  j["user"] = r.user;
  j["threshold_kbps"] = r.threshold_kbps;
  j["seed"] = r.seed;
  j["total_j"] = r.total_j;
  j["wifi_scan_j"] = r.wifi_scan_j;
  j["wifi_active_j"] = r.wifi_active_j;
  j["wifi_idle_j"] = r.wifi_idle_j;
  j["gprs_active_j"] = r.gprs_active_j;
  j["gprs_idle_j"] = r.gprs_idle_j;
  j["loc_fix_j"] = r.loc_fix_j;
  j["bytes_delivered"] = r.bytes_delivered;
  j["scan_count"] = r.scan_count;
  j["unnecessary_scan_count"] = r.unnecessary_scan_count;
  j["switch_episodes"] = r.switch_episodes;
  if (r.depletion_time_s)
    j["depletion_time_s"] = *r.depletion_time_s;
  else
    j["depletion_time_s"] = nullptr;
  j["end_time_s"] = r.end_time_s;
  j["efficiency_bytes_per_j"] = r.efficiency_bytes_per_j;
  json buckets;
  for (std::size_t i = 0; i < kRadioStateCount; ++i)
    buckets[std::string(radio_state_name(RadioState(int(i))))] = r.buckets[i];
  j["buckets"] = buckets;
  if (!r.error.empty()) j["error"] = r.error;
  return j;
}

const SimReport* find_first(const std::vector<SimReport>& rows, const std::string& scheme,
                            const std::string& user) {
  for (const auto& r : rows)
    if (r.scheme == scheme && r.user == user && r.error.empty()) return &r;
  return nullptr;
}

const SimReport* find_last(const std::vector<SimReport>& rows, const std::string& scheme,
                           const std::string& user) {
  const SimReport* hit = nullptr;
  for (const auto& r : rows)
    if (r.scheme == scheme && r.user == user && r.error.empty()) hit = &r;
  return hit;
}

std::string fmt_j(double v) { return render_number(v) + " J"; }

}  // namespace

std::string render_number(double v) { return json(v).dump(); }

std::string report_json(const SimReport& r) { return report_to_json_obj(r).dump(2) + "\n"; }

std::string csv_header() {
  return "scheme,user,threshold_kbps,seed,total_j,wifi_scan_j,wifi_active_j,wifi_idle_j,"
         "gprs_active_j,gprs_idle_j,loc_fix_j,bytes_delivered,scan_count,"
         "unnecessary_scan_count,switch_episodes,depletion_time_s,efficiency_bytes_per_j,"
         "ratio_wifi_gprs";
}

std::string csv_row(const SimReport& r, std::optional<double> ratio_wifi_gprs) {
  std::ostringstream os;
  os << r.scheme << ',' << r.user << ',' << render_number(r.threshold_kbps) << ','
     << json(r.seed).dump() << ',' << render_number(r.total_j) << ','
     << render_number(r.wifi_scan_j) << ',' << render_number(r.wifi_active_j) << ','
     << render_number(r.wifi_idle_j) << ',' << render_number(r.gprs_active_j) << ','
     << render_number(r.gprs_idle_j) << ',' << render_number(r.loc_fix_j) << ','
     << render_number(r.bytes_delivered) << ',' << json(r.scan_count).dump() << ','
     << json(r.unnecessary_scan_count).dump() << ',' << json(r.switch_episodes).dump() << ',';
  if (r.depletion_time_s) os << render_number(*r.depletion_time_s);
  os << ',' << render_number(r.efficiency_bytes_per_j) << ',';
  if (ratio_wifi_gprs) os << render_number(*ratio_wifi_gprs);
  return os.str();
}

GridSummary summarize_grid(const std::vector<SimReport>& rows, const Scenario& sc) {
  GridSummary sum;

  static const char* kUserOrder[] = {"u1", "u2", "u3", "u4", "trace"};
  std::map<std::string, double> ratio_of;
  for (const char* u : kUserOrder) {
    const auto* w = find_first(rows, "wifi-non-switching", u);
    const auto* g = find_first(rows, "gprs-non-switching", u);
    if (!w || !g) continue;
    if (!(w->efficiency_bytes_per_j > 0.0 && g->efficiency_bytes_per_j > 0.0)) continue;
    GridSummary::UserRatio ur;
    ur.user = u;
    ur.wifi_efficiency = w->efficiency_bytes_per_j;
    ur.gprs_efficiency = g->efficiency_bytes_per_j;
    ur.ratio = w->efficiency_bytes_per_j / g->efficiency_bytes_per_j;
    ratio_of[ur.user] = ur.ratio;
    sum.ratios.push_back(ur);
  }

  // light traffic favors cellular, every heavier class flips the advantage and
  // widens it
  {
    std::vector<std::pair<std::string, double>> seq;
    for (const char* u : {"u1", "u2", "u3", "u4"})
      if (ratio_of.count(u)) seq.emplace_back(u, ratio_of[u]);
    if (seq.size() >= 2) {
      bool pass = true;
      std::string detail;
      for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i > 0) {
          detail += ", ";
          if (!(seq[i].second > seq[i - 1].second)) pass = false;
        }
        detail += seq[i].first + "=" + render_number(seq[i].second);
      }
      if (ratio_of.count("u1") && !(ratio_of["u1"] < 1.0)) pass = false;
      for (std::size_t i = 0; i < seq.size(); ++i)
        if (seq[i].first != "u1" && !(seq[i].second > 1.0)) pass = false;
      sum.checks.push_back(GridCheck{"ratio_trend", pass, detail});
    }
  }

  // switching schemes ranked by total energy for the demand classes that
  // actually trigger a switch
  for (const char* u : {"u3", "u4"}) {
    const auto* a = find_last(rows, "agps-switching", u);
    const auto* g = find_last(rows, "gsm-switching", u);
    const auto* s = find_last(rows, "scanning-switching", u);
    if (!a || !g || !s) continue;
    bool pass = a->total_j < g->total_j && g->total_j < s->total_j;
    sum.checks.push_back(GridCheck{std::string("scheme_energy_order_") + u, pass,
                                   "agps=" + fmt_j(a->total_j) + " gsm=" + fmt_j(g->total_j) +
                                       " scanning=" + fmt_j(s->total_j)});
  }
  {
    const auto* w = find_last(rows, "wifi-non-switching", "u4");
    const auto* a = find_last(rows, "agps-switching", "u4");
    if (w && a) {
      sum.checks.push_back(GridCheck{"wifi_cheapest_u4", w->total_j < a->total_j,
                                     "wifi=" + fmt_j(w->total_j) + " agps=" + fmt_j(a->total_j)});
    }
  }

  // a class that never crosses a threshold must cost the same as staying on
  // cellular, up to one fix plus monitoring slack
  {
    const auto* base = find_first(rows, "gprs-non-switching", "u1");
    if (base) {
      double max_fix_w =
          std::max({sc.power.gps_fix_w, std::max(sc.power.agps_fix_w, 0.0), sc.power.gsm_loc_w});
      double bound = sc.power.fix_duration_s * max_fix_w + 1.0;
      double worst = 0.0;
      bool have = false;
      for (const auto& r : rows) {
        if (r.user != "u1" || !r.error.empty()) continue;
        if (r.scheme != "agps-switching" && r.scheme != "gsm-switching" &&
            r.scheme != "scanning-switching")
          continue;
        have = true;
        worst = std::max(worst, std::abs(r.total_j - base->total_j));
      }
      if (have) {
        sum.checks.push_back(GridCheck{"u1_closeness", worst <= bound,
                                       "max deviation " + fmt_j(worst) + " of allowed " +
                                           fmt_j(bound)});
      }
    }
  }

  return sum;
}

GridOutput render_grid(const std::vector<SimReport>& rows, const Scenario& sc) {
  GridOutput out;
  out.summary = summarize_grid(rows, sc);

  json j;
  json jrows = json::array();
  for (const auto& r : rows) jrows.push_back(report_to_json_obj(r));
  j["rows"] = jrows;

  json jsum;
  json jratios = json::array();
  for (const auto& ur : out.summary.ratios) {
    json e;
    e["user"] = ur.user;
    e["wifi_efficiency_bytes_per_j"] = ur.wifi_efficiency;
    e["gprs_efficiency_bytes_per_j"] = ur.gprs_efficiency;
    e["ratio_wifi_gprs"] = ur.ratio;
    jratios.push_back(e);
  }
  jsum["ratios"] = jratios;
  json jchecks = json::array();
  for (const auto& ck : out.summary.checks) {
    json e;
    e["name"] = ck.name;
    e["pass"] = ck.pass;
    e["detail"] = ck.detail;
    jchecks.push_back(e);
  }
  jsum["checks"] = jchecks;
  j["summary"] = jsum;
  out.json = j.dump(2) + "\n";

  std::ostringstream csv;
  csv << csv_header() << "\n";
  for (const auto& r : rows) csv << csv_row(r) << "\n";
  for (const auto& ur : out.summary.ratios) {
    // 18 fixed fields; only scheme, user, and the trailing ratio are filled
    csv << "summary," << ur.user << std::string(15, ',') << ','
        << render_number(ur.ratio) << "\n";
  }
  out.csv = csv.str();
  return out;
}

}  // namespace handoff
