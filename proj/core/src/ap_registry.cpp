#include "handoff/ap_registry.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace handoff {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool is_hex_lower(char c) { return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'); }

// Shortest round-trip rendering, matches JSON number output.
std::string render_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

// Central angle from q to the closest point with longitude gap dl and latitude
// within [phi_lo, phi_hi]. cos(sigma) = A sin(phi) + B cos(phi) is unimodal in
// phi, so the minimum over the band is at an endpoint or the interior peak.
double min_angle_lon_gap(double q_lat, double dl, double phi_lo, double phi_hi) {
  auto angle_at = [&](double phi) {
    double sdlat = std::sin((q_lat - phi) / 2.0);
    double sdlon = std::sin(dl / 2.0);
    double h = sdlat * sdlat + std::cos(q_lat) * std::cos(phi) * sdlon * sdlon;
    return 2.0 * std::asin(std::sqrt(std::clamp(h, 0.0, 1.0)));
  };
  double best = std::min(angle_at(phi_lo), angle_at(phi_hi));
  double a = std::sin(q_lat), b = std::cos(q_lat) * std::cos(dl);
  double peak = std::atan2(a, b);
  if (peak > phi_lo && peak < phi_hi) best = std::min(best, angle_at(peak));
  return best;
}

}  // namespace

bool is_canonical_bssid(std::string_view s) {
  if (s.size() != 17) return false;
  for (std::size_t i = 0; i < 17; ++i) {
    if (i % 3 == 2) {
      if (s[i] != ':') return false;
    } else if (!is_hex_lower(s[i])) {
      return false;
    }
  }
  return true;
}

void validate_record(const ApRecord& r) {
  if (!is_canonical_bssid(r.bssid))
    throw std::invalid_argument("bssid: not canonical lowercase aa:bb:cc:dd:ee:ff");
  if (r.ssid.empty()) throw std::invalid_argument("ssid: must be non-empty");
  if (!(std::isfinite(r.range_m) && r.range_m > 0.0))
    throw std::invalid_argument("range_m: must be a finite value > 0");
  if (r.timestamp_s < 0) throw std::invalid_argument("timestamp_s: must be >= 0");
  if (r.auth && r.auth->empty())
    throw std::invalid_argument("auth: must be non-empty when present");
}

Registry::Registry(double cell_size_deg) : cell_deg_(cell_size_deg) {
  if (!(std::isfinite(cell_size_deg) && cell_size_deg > 0.0 && cell_size_deg <= 45.0))
    throw std::invalid_argument("cell_size_deg: must be in (0, 45]");
  cols_ = std::max<std::int32_t>(1, std::int32_t(std::floor(360.0 / cell_deg_)));
  rows_ = std::max<std::int32_t>(1, std::int32_t(std::floor(180.0 / cell_deg_)));
}

Registry::Registry(const Registry& other)
    : cell_deg_(other.cell_deg_),
      cols_(other.cols_),
      rows_(other.rows_),
      max_range_m_(other.max_range_m_),
      records_(other.records_) {
  rebuild_grid();
}

Registry& Registry::operator=(const Registry& other) {
  if (this != &other) {
    cell_deg_ = other.cell_deg_;
    cols_ = other.cols_;
    rows_ = other.rows_;
    max_range_m_ = other.max_range_m_;
    records_ = other.records_;
    rebuild_grid();
  }
  return *this;
}

void Registry::rebuild_grid() {
  grid_.clear();
  for (const auto& [bssid, rec] : records_) grid_[cell_of(rec.location)].push_back(&rec);
}

Registry::Cell Registry::cell_of(const GeoPoint& p) const {
  auto clamp_idx = [](double v, std::int32_t n) {
    auto i = std::int32_t(std::floor(v));
    return std::clamp<std::int32_t>(i, 0, n - 1);
  };
  return Cell{clamp_idx((p.lat_deg() + 90.0) / cell_deg_, rows_),
              clamp_idx((p.lon_deg() + 180.0) / cell_deg_, cols_)};
}

bool Registry::insert(const ApRecord& r) {
  validate_record(r);
  auto it = records_.find(r.bssid);
  if (it != records_.end()) {
    if (r.timestamp_s <= it->second.timestamp_s) return false;  // ties keep incumbent
    Cell old = cell_of(it->second.location);
    auto& bucket = grid_[old];
    bucket.erase(std::remove(bucket.begin(), bucket.end(), &it->second), bucket.end());
    it->second = r;
    grid_[cell_of(r.location)].push_back(&it->second);
  } else {
    auto [pos, ok] = records_.emplace(r.bssid, r);
    (void)ok;
    grid_[cell_of(r.location)].push_back(&pos->second);
  }
  max_range_m_ = std::max(max_range_m_, r.range_m);
  return true;
}

// Expanding-ring sweep around the query cell. Longitude wraps; termination is
// justified by two lower bounds on anything not yet visited after ring k:
//   rows beyond +-k      : central angle >= k * cell
//   columns beyond +-k   : angle >= min_angle_lon_gap(lat, k*cell, band(+-(k+1)))
// The second bound degrades near the poles, where the column sweep wraps and
// finishes the scan instead.
template <typename V>
void Registry::search(const GeoPoint& p, V&& v) const {
  if (records_.empty()) return;
  const double cell_rad = deg2rad(cell_deg_);
  const Cell qc = cell_of(p);
  std::size_t cells_examined = 0;

  auto visit_cell = [&](std::int32_t row, std::int32_t col) {
    if (row < 0 || row >= rows_) return;
    std::int32_t wc = ((col % cols_) + cols_) % cols_;
    ++cells_examined;
    auto it = grid_.find(Cell{row, wc});
    if (it == grid_.end()) return;
    for (const ApRecord* r : it->second)
      v.record(*r, haversine_distance(p, r->location).meters);
  };

  visit_cell(qc.row, qc.col);
  for (std::int32_t k = 1;; ++k) {
    bool cols_wrapped = (2 * k + 1 >= cols_);
    std::int32_t cmin = qc.col - k, cmax = qc.col + k;
    if (cols_wrapped) {
      cmin = 0;
      cmax = cols_ - 1;
    }
    for (std::int32_t c = cmin; c <= cmax; ++c) {
      visit_cell(qc.row - k, c);
      visit_cell(qc.row + k, c);
    }
    if (!cols_wrapped) {
      for (std::int32_t r = qc.row - k + 1; r <= qc.row + k - 1; ++r) {
        visit_cell(r, qc.col - k);
        visit_cell(r, qc.col + k);
      }
    }

    bool rows_done = (qc.row - k < 0) && (qc.row + k >= rows_ - 1);
    if (rows_done && cols_wrapped) return;  // every cell seen

    if (cells_examined > 2 * records_.size() + 64) {
      // answer exhaustively from scratch; the sweep already recorded some of these
      v.reset();
      for (const auto& [bssid, rec] : records_)
        v.record(rec, haversine_distance(p, rec.location).meters);
      return;
    }

    double prune = v.prune();
    if (prune == std::numeric_limits<double>::infinity()) continue;
    double b_lat = kEarthRadiusM * double(k) * cell_rad;
    double b_lon = std::numeric_limits<double>::infinity();
    if (!cols_wrapped) {
      double phi_lo = std::max(-kPi / 2, p.lat_rad - (k + 1) * cell_rad);
      double phi_hi = std::min(kPi / 2, p.lat_rad + (k + 1) * cell_rad);
      b_lon = kEarthRadiusM * min_angle_lon_gap(p.lat_rad, k * cell_rad, phi_lo, phi_hi);
    }
    if (std::min(b_lat, b_lon) > prune) return;
  }
}

namespace {

struct NearestVisitor {
  std::optional<NearestHit> best;
  void record(const ApRecord& r, double d) {
    if (!best || d < best->distance_m ||
        (d == best->distance_m && r.bssid < best->record.bssid))
      best = NearestHit{r, d};
  }
  void reset() { best.reset(); }
  double prune() const {
    return best ? best->distance_m : std::numeric_limits<double>::infinity();
  }
};

struct InRangeVisitor {
  double max_range;
  std::optional<NearestHit> best;
  void record(const ApRecord& r, double d) {
    if (d > r.range_m) return;
    if (!best || d < best->distance_m ||
        (d == best->distance_m && r.bssid < best->record.bssid))
      best = NearestHit{r, d};
  }
  void reset() { best.reset(); }
  double prune() const { return best ? std::min(best->distance_m, max_range) : max_range; }
};

struct KNearestVisitor {
  std::size_t k;
  std::vector<NearestHit> hits;  // kept sorted by (distance, bssid)
  void record(const ApRecord& r, double d) {
    NearestHit h{r, d};
    auto pos = std::lower_bound(hits.begin(), hits.end(), h, [](const auto& a, const auto& b) {
      if (a.distance_m != b.distance_m) return a.distance_m < b.distance_m;
      return a.record.bssid < b.record.bssid;
    });
    if (hits.size() == k && pos == hits.end()) return;
    hits.insert(pos, std::move(h));
    if (hits.size() > k) hits.pop_back();
  }
  void reset() { hits.clear(); }
  double prune() const {
    return hits.size() == k ? hits.back().distance_m
                            : std::numeric_limits<double>::infinity();
  }
};

}  // namespace

std::optional<NearestHit> Registry::nearest(const GeoPoint& p) const {
  NearestVisitor v;
  search(p, v);
  return v.best;
}

std::optional<NearestHit> Registry::in_range(const GeoPoint& p) const {
  InRangeVisitor v{max_range_m_, std::nullopt};
  search(p, v);
  return v.best;
}

std::vector<NearestHit> Registry::nearest_k(const GeoPoint& p, std::size_t k) const {
  if (k == 0) return {};
  KNearestVisitor v{k, {}};
  search(p, v);
  return v.hits;
}

std::string escape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == ' ')
      out += "%20";
    else if (c == '\t')
      out += "%09";
    else if (c == '%')
      out += "%25";
    else
      out += c;
  }
  return out;
}

std::string unescape_field(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '%') {
      out += s[i];
      continue;
    }
    if (i + 2 >= s.size()) throw std::invalid_argument("truncated % escape");
    auto hex = [](char c) -> int {
      if (c >= '0' && c <= '9') return c - '0';
      if (c >= 'a' && c <= 'f') return c - 'a' + 10;
      if (c >= 'A' && c <= 'F') return c - 'A' + 10;
      throw std::invalid_argument("bad % escape digit");
    };
    out += char(hex(s[i + 1]) * 16 + hex(s[i + 2]));
    i += 2;
  }
  return out;
}

namespace {

double parse_double_token(const std::string& tok, const char* field) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + tok.size() || !std::isfinite(v))
    throw std::invalid_argument(std::string(field) + ": not a finite number");
  return v;
}

}  // namespace

Registry Registry::load(const std::filesystem::path& file, double cell_size_deg) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  Registry reg(cell_size_deg);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    std::string t;
    while (ss >> t) tok.push_back(t);
    if (tok.empty() || tok[0][0] == '#') continue;
    if (tok.size() != 6 && tok.size() != 7)
      throw AplogError(lineno, "expected 6 or 7 fields, got " + std::to_string(tok.size()));
    try {
      ApRecord r;
      {
        const char* begin = tok[0].c_str();
        char* end = nullptr;
        long long ts = std::strtoll(begin, &end, 10);
        if (end != begin + tok[0].size())
          throw std::invalid_argument("timestamp_s: not an integer");
        r.timestamp_s = ts;
      }
      r.bssid = tok[1];
      r.ssid = unescape_field(tok[2]);
      double lat = parse_double_token(tok[3], "lat_deg");
      double lon = parse_double_token(tok[4], "lon_deg");
      r.location = GeoPoint::from_degrees(lat, lon);
      r.range_m = parse_double_token(tok[5], "range_m");
      if (tok.size() == 7) r.auth = unescape_field(tok[6]);
      reg.insert(r);
    } catch (const std::invalid_argument& e) {
      throw AplogError(lineno, e.what());
    }
  }
  return reg;
}

void Registry::save(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  out << "# timestamp_s bssid ssid lat_deg lon_deg range_m [auth]\n";
  for (const auto& [bssid, r] : records_) {
    char coords[80];
    std::snprintf(coords, sizeof coords, "%.12f %.12f", r.location.lat_deg(),
                  r.location.lon_deg());
    out << r.timestamp_s << ' ' << bssid << ' ' << escape_field(r.ssid) << ' ' << coords
        << ' ' << render_double(r.range_m);
    if (r.auth) out << ' ' << escape_field(*r.auth);
    out << '\n';
  }
  if (!out.good()) throw std::runtime_error("short write to " + file.string());
}

}  // namespace handoff
