#include "handoff/sim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <thread>

#include "handoff/sharing.hpp"

namespace handoff {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPi = 3.14159265358979323846;

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

// Traffic depends on (seed, user) alone so every scheme and threshold replays
// the same workload for a given seed.
std::uint64_t traffic_seed(std::uint64_t master, UserKind u) {
  return mix(mix(master, 0x7452414646494301ull), std::uint64_t(u));
}

std::uint64_t localization_seed(std::uint64_t master, SchemeKind s, UserKind u, Threshold b) {
  std::uint64_t x = mix(master, 0x4c4f43464958ull);
  x = mix(x, std::uint64_t(s));
  x = mix(x, std::uint64_t(u));
  return mix(x, std::bit_cast<std::uint64_t>(b.kbps));
}

bool is_switching(SchemeKind s) {
  return s == SchemeKind::AgpsSwitching || s == SchemeKind::GsmSwitching ||
         s == SchemeKind::ScanningSwitching;
}

// Tie order at equal timestamps; arrivals land before the sample that reads
// the window they fall into.
enum EvKind : int {
  kQueueEmpty = 0,
  kChunkArrival = 1,
  kTraceStep = 2,
  kFixDone = 3,
  kScanEnd = 4,
  kScanBegin = 5,
  kRateSample = 6,
};

struct Ev {
  double t;
  int kind;
  std::uint64_t seq;
  std::uint64_t gen = 0;
  double a = 0.0;  // chunk bits or trace rate
};

struct EvAfter {
  bool operator()(const Ev& x, const Ev& y) const {
    if (x.t != y.t) return x.t > y.t;
    if (x.kind != y.kind) return x.kind > y.kind;
    return x.seq > y.seq;
  }
};

struct Engine {
  const Scenario& sc;
  SchemeKind scheme;
  UserKind user;
  Threshold thr;
  std::uint64_t master;

  PowerProfile pw;
  EnergyLedger ledger;
  Registry truth;
  Registry log;
  std::optional<DemandProcess> demand;
  LinkQueue gprs;
  LinkQueue wifi;
  std::mt19937_64 loc_rng;
  std::size_t forced_ix = 0;

  enum class Phase { Cellular, Wifi };
  Phase phase = Phase::Cellular;
  bool armed = false;
  bool fixing = false;
  bool scanning = false;
  std::optional<ApRecord> pending_hit;

  bool walking = false;
  GeoPoint cur_pos;
  GeoPoint walk_origin;
  GeoPoint walk_target;
  double walk_t0 = 0.0;

  double now = 0.0;
  std::optional<double> depleted_at;

  double cum_demand_bits = 0.0;
  double window_start_bits = 0.0;
  double bulk_complete_t = -kInf;
  double trace_rate_kbps = 0.0;

  std::int64_t episodes = 0;
  std::int64_t scan_count = 0;
  std::int64_t unnecessary = 0;

  std::uint64_t seq = 0;
  std::uint64_t egen = 0;
  std::priority_queue<Ev, std::vector<Ev>, EvAfter> evq;

  Engine(const Scenario& scenario, const RunSpec& spec)
      : sc(scenario),
        scheme(spec.scheme),
        user(spec.user),
        thr(spec.threshold),
        master(spec.seed.value_or(scenario.seed)),
        pw(scenario.power),
        ledger(scenario.battery_j),
        truth(),
        log(),
        gprs(scenario.links.gprs_kbps),
        wifi(scenario.links.wifi_kbps),
        loc_rng(localization_seed(master, spec.scheme, spec.user, spec.threshold)),
        cur_pos(scenario.user_start),
        walk_origin(scenario.user_start),
        walk_target(scenario.user_start) {
    for (const auto& rec : sc.aps) truth.insert(rec);
    log = sc.initial_registry ? *sc.initial_registry : truth;

    if (user == UserKind::Trace) {
      demand.emplace(DemandProcess::from_trace(sc.demand_trace));
    } else {
      demand.emplace(user, sc.demand, traffic_seed(master, user));
    }
    if (user == UserKind::U4) bulk_complete_t = kInf;

    phase = (scheme == SchemeKind::WifiNonSwitching) ? Phase::Wifi : Phase::Cellular;
    armed = is_switching(scheme);
  }

  LinkQueue& active_q() { return phase == Phase::Wifi ? wifi : gprs; }

  void push_ev(double t, int kind, double a = 0.0, std::uint64_t gen = 0) {
    evq.push(Ev{t, kind, ++seq, gen, a});
  }

  GeoPoint pos(double t) const {
    if (!walking) return cur_pos;
    return step_towards(walk_origin, walk_target, Distance{sc.v_user_mps * (t - walk_t0)});
  }

  void stop_walk(double t) {
    if (walking) {
      cur_pos = pos(t);
      walking = false;
    }
  }

  void start_walk(double t, const GeoPoint& target) {
    cur_pos = pos(t);
    walk_origin = cur_pos;
    walk_target = target;
    walk_t0 = t;
    walking = true;
  }

  RadioState wifi_state() const {
    if (scanning) return RadioState::WifiScan;
    if (phase == Phase::Wifi)
      return wifi.transferring() ? RadioState::WifiActive : RadioState::WifiIdle;
    return sc.toggles.idle_unused_wifi ? RadioState::WifiIdle : RadioState::WifiOff;
  }

  std::optional<RadioState> cell_state() const {
    if (phase == Phase::Wifi) return std::nullopt;
    return gprs.transferring() ? RadioState::GprsActive : RadioState::GprsIdle;
  }

  std::optional<RadioState> loc_state() const {
    if (!fixing) return std::nullopt;
    return scheme == SchemeKind::AgpsSwitching ? RadioState::AgpsFix : RadioState::GsmLoc;
  }

  double draw_w() const {
    double p = pw.power_w(wifi_state());
    if (auto c = cell_state()) p += pw.power_w(*c);
    if (auto l = loc_state()) p += pw.power_w(*l);
    return p;
  }

  void accrue_all(double dt) {
    ledger.accrue(pw, wifi_state(), dt);
    if (auto c = cell_state()) ledger.accrue(pw, *c, dt);
    if (auto l = loc_state()) ledger.accrue(pw, *l, dt);
    cum_demand_bits += trace_rate_kbps * 1000.0 * dt;
  }

  // Integrates [now, t_to]; stops early at the battery zero crossing.
  void advance_to(double t_to) {
    if (t_to < now) t_to = now;
    double dt = t_to - now;
    if (dt > 0.0) {
      double p = draw_w();
      double rem = ledger.remaining_j();
      if (p > 0.0 && p * dt >= rem) {
        double t_dep = now + rem / p;
        accrue_all(t_dep - now);
        now = t_dep;
        depleted_at = t_dep;
      } else {
        accrue_all(dt);
        now = t_to;
      }
    } else {
      now = t_to;
    }
    gprs.advance(now);
    wifi.advance(now);
  }

  // Lump-sum cost attached to the current instant (service round-trips).
  void charge(RadioState s, double duration_s) {
    ledger.accrue(pw, s, duration_s);
    if (!depleted_at && ledger.remaining_j() <= 0.0) depleted_at = now;
  }

  void resched_empty() {
    ++egen;
    if (auto te = active_q().next_empty_time()) push_ev(*te, kQueueEmpty, 0.0, egen);
  }

  void schedule_next_chunk() {
    if (auto c = demand->next_chunk()) push_ev(c->t_s, kChunkArrival, c->bits);
  }

  std::pair<double, double> draw_fix_error(double accuracy_m) {
    if (forced_ix < sc.forced_fixes.size()) {
      const auto& f = sc.forced_fixes[forced_ix++];
      return {f.bearing_rad, f.magnitude_m};
    }
    double brg = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(loc_rng);
    double mag = 0.0;
    if (accuracy_m > 0.0) {
      if (sc.localization.error_model == ErrorModel::UniformDisk)
        mag = std::uniform_real_distribution<double>(0.0, accuracy_m)(loc_rng);
      else
        mag = std::abs(std::normal_distribution<double>(0.0, accuracy_m / 2.0)(loc_rng));
    }
    return {brg, mag};
  }

  std::optional<NearestHit> lookup_nearest(const GeoPoint& perceived) {
    if (!sc.toggles.use_sharing_service) return log.nearest(perceived);
    charge(RadioState::GprsActive,
           2.0 * sc.toggles.query_payload_bytes * 8.0 / (gprs.capacity_kbps() * 1000.0));
    auto hits = client_nearest(sc.toggles.endpoint, perceived, 1);
    if (hits.empty()) return std::nullopt;
    return NearestHit{hits.front().record, hits.front().distance_m};
  }

  void start_episode() {
    ++episodes;
    armed = false;
    if (scheme == SchemeKind::ScanningSwitching) {
      if (auto n = truth.nearest(pos(now))) start_walk(now, n->record.location);
      push_ev(now + sc.intervals.scan_interval_s, kScanBegin);
    } else {
      fixing = true;
      push_ev(now + pw.fix_duration_s, kFixDone);
    }
  }

  void on_fix_done() {
    fixing = false;
    GeoPoint true_pos = pos(now);
    double acc = scheme == SchemeKind::AgpsSwitching ? sc.localization.agps_accuracy_m
                                                     : sc.localization.gsm_accuracy_m;
    auto [brg, mag] = draw_fix_error(acc);
    GeoPoint perceived = destination(true_pos, brg, Distance{mag});

    auto match = lookup_nearest(perceived);
    if (!match) {
      // nothing known near the fix: fall back to hunting blind
      if (auto n = truth.nearest(true_pos)) start_walk(now, n->record.location);
      push_ev(now + sc.intervals.scan_interval_s, kScanBegin);
      return;
    }

    double d_prime = haversine_distance(perceived, match->record.location).meters;
    double dist = d_prime;
    GeoPoint target = true_pos;
    if (scheme == SchemeKind::GsmSwitching && sc.toggles.gsm_heads_to_truth) {
      target = match->record.location;
      dist = haversine_distance(true_pos, target).meters;
    } else if (d_prime > 0.0) {
      // walk the perceived displacement: right heading and length relative to
      // the fix, so the landing point carries the fix error
      double heading = initial_bearing_rad(perceived, match->record.location);
      target = destination(true_pos, heading, Distance{d_prime});
    }
    if (dist > 0.0) start_walk(now, target);
    push_ev(now + switch_time_s(Distance{dist}, Speed{sc.v_user_mps}), kScanBegin);
  }

  void on_scan_begin() {
    if (phase == Phase::Wifi) return;
    scanning = true;
    ++scan_count;
    if (auto hit = truth.in_range(pos(now))) {
      pending_hit = hit->record;
    } else {
      pending_hit.reset();
      ++unnecessary;
    }
    push_ev(now + pw.scan_duration_s, kScanEnd);
  }

  void on_scan_end() {
    scanning = false;
    if (pending_hit) {
      connect(*pending_hit);
      pending_hit.reset();
      return;
    }
    double interval = scheme == SchemeKind::ScanningSwitching ? sc.intervals.scan_interval_s
                                                              : sc.intervals.rescan_interval_s;
    if (auto n = truth.nearest(pos(now))) start_walk(now, n->record.location);
    push_ev((now - pw.scan_duration_s) + interval, kScanBegin);
  }

  void connect(const ApRecord& rec) {
    stop_walk(now);
    phase = Phase::Wifi;
    double moved = gprs.take_backlog_bits(now);
    if (moved > 0.0) wifi.enqueue_bits(now, moved);
    if (trace_rate_kbps > 0.0) {
      gprs.set_inflow_kbps(now, 0.0);
      wifi.set_inflow_kbps(now, trace_rate_kbps);
    }
    resched_empty();
    if (sc.toggles.use_sharing_service) {
      ApRecord up = rec;
      up.timestamp_s = std::int64_t(now);
      charge(RadioState::WifiActive,
             sc.toggles.query_payload_bytes * 8.0 / (wifi.capacity_kbps() * 1000.0));
      client_upload(sc.toggles.endpoint, {up});
    }
  }

  void on_rate_sample() {
    if (!(armed && phase == Phase::Cellular)) return;
    double bits = cum_demand_bits - window_start_bits;
    bool greedy = (now - sc.intervals.t_measure_s) < bulk_complete_t;
    double r = sample_rate_kbps(bits, sc.intervals.t_measure_s, greedy, gprs.capacity_kbps());
    window_start_bits = cum_demand_bits;
    if (should_switch(RateSample{now, r}, thr)) {
      start_episode();
    } else {
      push_ev(now + sc.intervals.t_measure_s, kRateSample);
    }
  }

  void dispatch(const Ev& ev) {
    switch (ev.kind) {
      case kQueueEmpty:
        if (ev.gen != egen) break;
        if (demand->bulk_pending()) {
          demand->start_tail(now);
          if (bulk_complete_t == kInf) bulk_complete_t = now;
          schedule_next_chunk();
        }
        break;
      case kChunkArrival:
        active_q().enqueue_bits(now, ev.a);
        cum_demand_bits += ev.a;
        schedule_next_chunk();
        resched_empty();
        break;
      case kTraceStep:
        trace_rate_kbps = ev.a;
        active_q().set_inflow_kbps(now, ev.a);
        resched_empty();
        break;
      case kFixDone:
        on_fix_done();
        break;
      case kScanBegin:
        on_scan_begin();
        break;
      case kScanEnd:
        on_scan_end();
        break;
      case kRateSample:
        on_rate_sample();
        break;
      default:
        break;
    }
  }

  void run() {
    double ib = demand->initial_backlog_bits();
    if (ib > 0.0) active_q().enqueue_bits(0.0, ib);
    schedule_next_chunk();
    for (const auto& st : demand->trace()) push_ev(st.t_s, kTraceStep, st.kbps);
    if (armed) push_ev(sc.intervals.t_measure_s, kRateSample);
    resched_empty();

    const bool open_ended = sc.run_to_depletion;
    const double horizon = open_ended ? kInf : sc.duration_s;

    while (!depleted_at) {
      if (evq.empty()) {
        if (!open_ended) {
          advance_to(horizon);
          break;
        }
        double p = draw_w();
        if (p <= 0.0)
          throw std::runtime_error(
              "run_to_depletion: no pending events and zero draw; the battery never empties");
        advance_to(now + ledger.remaining_j() / p + 1.0);
        continue;
      }
      Ev ev = evq.top();
      if (!open_ended && ev.t >= horizon) {
        advance_to(horizon);
        break;
      }
      evq.pop();
      advance_to(ev.t);
      if (depleted_at) break;
      dispatch(ev);
    }
  }

  SimReport report() const {
    SimReport r;
    r.scheme = std::string(scheme_name(scheme));
    r.user = std::string(user_kind_name(user));
    r.threshold_kbps = thr.kbps;
    r.seed = master;
    for (std::size_t i = 0; i < kRadioStateCount; ++i)
      r.buckets[i] = ledger.bucket_j(RadioState(int(i)));
    r.wifi_scan_j = ledger.bucket_j(RadioState::WifiScan);
    r.wifi_active_j = ledger.bucket_j(RadioState::WifiActive);
    r.wifi_idle_j = ledger.bucket_j(RadioState::WifiIdle);
    r.gprs_active_j = ledger.bucket_j(RadioState::GprsActive);
    r.gprs_idle_j = ledger.bucket_j(RadioState::GprsIdle);
    r.loc_fix_j = ledger.bucket_j(RadioState::GpsFix) + ledger.bucket_j(RadioState::AgpsFix) +
                  ledger.bucket_j(RadioState::GsmLoc);
    r.total_j = ledger.total_j();
    r.bytes_delivered = (gprs.delivered_bits() + wifi.delivered_bits()) / 8.0;
    r.scan_count = scan_count;
    r.unnecessary_scan_count = unnecessary;
    r.switch_episodes = episodes;
    r.depletion_time_s = depleted_at;
    r.end_time_s = now;
    r.efficiency_bytes_per_j = energy_efficiency(r.bytes_delivered, r.total_j);
    return r;
  }
};

}  // namespace

std::string_view scheme_name(SchemeKind s) {
  switch (s) {
    case SchemeKind::AgpsSwitching: return "agps-switching";
    case SchemeKind::GsmSwitching: return "gsm-switching";
    case SchemeKind::ScanningSwitching: return "scanning-switching";
    case SchemeKind::GprsNonSwitching: return "gprs-non-switching";
    case SchemeKind::WifiNonSwitching: return "wifi-non-switching";
  }
  return "unknown";
}

std::optional<SchemeKind> scheme_from_name(std::string_view s) {
  if (s == "agps-switching") return SchemeKind::AgpsSwitching;
  if (s == "gsm-switching") return SchemeKind::GsmSwitching;
  if (s == "scanning-switching") return SchemeKind::ScanningSwitching;
  if (s == "gprs-non-switching") return SchemeKind::GprsNonSwitching;
  if (s == "wifi-non-switching") return SchemeKind::WifiNonSwitching;
  return std::nullopt;
}

std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> out;
  auto bad = [&](const std::string& m) { out.push_back(m); };

  for (const auto& m : power.validate()) bad("power." + m);
  for (const auto& m : demand.validate()) bad("demand." + m);

  if (!(std::isfinite(v_user_mps) && v_user_mps > 0.0)) bad("v_user_mps: must be > 0");
  if (!(std::isfinite(battery_j) && battery_j > 0.0)) bad("battery_j: must be > 0");
  if (!run_to_depletion && !(std::isfinite(duration_s) && duration_s > 0.0))
    bad("duration_s: must be > 0 unless run_to_depletion");
  if (!(std::isfinite(links.gprs_kbps) && links.gprs_kbps > 0.0))
    bad("links.gprs_kbps: must be > 0");
  if (!(std::isfinite(links.wifi_kbps) && links.wifi_kbps > 0.0))
    bad("links.wifi_kbps: must be > 0");
  if (!(std::isfinite(intervals.t_measure_s) && intervals.t_measure_s > 0.0))
    bad("intervals.t_measure_s: must be > 0");
  if (!(std::isfinite(intervals.scan_interval_s) && intervals.scan_interval_s > 0.0))
    bad("intervals.scan_interval_s: must be > 0");
  if (!(std::isfinite(intervals.rescan_interval_s) && intervals.rescan_interval_s > 0.0))
    bad("intervals.rescan_interval_s: must be > 0");
  if (!(std::isfinite(localization.agps_accuracy_m) && localization.agps_accuracy_m >= 0.0))
    bad("localization.agps_accuracy_m: must be >= 0");
  if (!(std::isfinite(localization.gsm_accuracy_m) && localization.gsm_accuracy_m >= 0.0))
    bad("localization.gsm_accuracy_m: must be >= 0");
  if (toggles.use_sharing_service && toggles.endpoint.empty())
    bad("toggles.endpoint: required when use_sharing_service");
  if (!(std::isfinite(toggles.query_payload_bytes) && toggles.query_payload_bytes >= 0.0))
    bad("toggles.query_payload_bytes: must be >= 0");

  for (std::size_t i = 0; i < aps.size(); ++i) {
    try {
      validate_record(aps[i]);
    } catch (const std::exception& e) {
      bad("aps[" + std::to_string(i) + "]: " + e.what());
    }
  }
  for (std::size_t i = 0; i < demand_trace.size(); ++i) {
    const auto& st = demand_trace[i];
    if (!(std::isfinite(st.t_s) && st.t_s >= 0.0 && std::isfinite(st.kbps) && st.kbps >= 0.0))
      bad("demand_trace[" + std::to_string(i) + "]: t_s and kbps must be finite and >= 0");
    else if (i > 0 && st.t_s < demand_trace[i - 1].t_s)
      bad("demand_trace[" + std::to_string(i) + "]: t_s must be non-decreasing");
  }
  for (std::size_t i = 0; i < forced_fixes.size(); ++i) {
    if (!(std::isfinite(forced_fixes[i].magnitude_m) && forced_fixes[i].magnitude_m >= 0.0))
      bad("forced_fixes[" + std::to_string(i) + "]: magnitude_m must be >= 0");
  }
  return out;
}

Scenario suburban_default() {
  Scenario sc;
  sc.user_start = GeoPoint::from_degrees(38.88, 121.53);
  sc.v_user_mps = 1.4;
  sc.aps = {
      ApRecord{0, "aa:bb:cc:00:00:01", "campus-east", GeoPoint::from_degrees(38.88, 121.622),
               120.0, "wpa2"},
      ApRecord{0, "aa:bb:cc:00:00:02", "ridge-north", GeoPoint::from_degrees(38.99, 121.53),
               120.0, std::nullopt},
      ApRecord{0, "aa:bb:cc:00:00:03", "harbor-west", GeoPoint::from_degrees(38.85, 121.38),
               120.0, "wpa2"},
  };
  sc.power.gprs_active_w = 0.9;
  sc.power.gprs_idle_w = 0.05;
  sc.power.agps_fix_w = 0.2;
  sc.battery_j = 19980.0;
  sc.run_to_depletion = false;
  sc.duration_s = 12000.0;
  sc.seed = 42;
  return sc;
}

SimReport run(const Scenario& sc, const RunSpec& spec) {
  auto problems = sc.validate();
  if (!problems.empty()) {
    std::string msg = "scenario invalid:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw std::invalid_argument(msg);
  }
  Engine eng(sc, spec);
  eng.run();
  return eng.report();
}

std::vector<SimReport> compare(const Scenario& sc, const std::vector<SchemeKind>& schemes,
                               const std::vector<UserKind>& users,
                               const std::vector<Threshold>& thresholds, int parallel) {
  struct Job {
    RunSpec spec;
  };
  std::vector<Job> jobs;
  for (auto s : schemes)
    for (auto u : users)
      for (auto b : thresholds) jobs.push_back(Job{RunSpec{s, u, b, std::nullopt}});

  std::vector<SimReport> out(jobs.size());
  auto work = [&](std::size_t i) {
    try {
      out[i] = run(sc, jobs[i].spec);
    } catch (const std::exception& e) {
      SimReport r;
      r.scheme = std::string(scheme_name(jobs[i].spec.scheme));
      r.user = std::string(user_kind_name(jobs[i].spec.user));
      r.threshold_kbps = jobs[i].spec.threshold.kbps;
      r.seed = sc.seed;
      r.error = e.what();
      out[i] = std::move(r);
    }
  };

  int n = std::clamp(parallel, 1, int(std::thread::hardware_concurrency() ? std::thread::hardware_concurrency() : 1u));
  if (n <= 1 || jobs.size() <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) work(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(std::size_t(n));
  for (int k = 0; k < n; ++k) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) work(i);
    });
  }
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace handoff
