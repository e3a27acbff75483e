#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "handoff/ap_registry.hpp"
#include "support/oracles.hpp"

using handoff::ApRecord;
using handoff::GeoPoint;
using handoff::Registry;

namespace {

ApRecord make_ap(int n, double lat, double lon, double range_m = 100.0,
                 std::int64_t t = 0) {
  ApRecord r;
  char b[18];
  std::snprintf(b, sizeof b, "aa:bb:%02x:%02x:%02x:%02x", (n >> 24) & 0xff, (n >> 16) & 0xff,
                (n >> 8) & 0xff, n & 0xff);
  r.bssid = b;
  r.ssid = "net-" + std::to_string(n);
  r.location = GeoPoint::from_degrees(lat, lon);
  r.range_m = range_m;
  r.timestamp_s = t;
  return r;
}

std::vector<ApRecord> random_aps(std::mt19937_64& rng, int count, double lat0, double lon0,
                                 double span_deg) {
  std::uniform_real_distribution<double> dlat(-span_deg, span_deg), dlon(-span_deg, span_deg);
  std::uniform_real_distribution<double> range(20.0, 5000.0);
  std::vector<ApRecord> out;
  for (int i = 0; i < count; ++i)
    out.push_back(make_ap(i, lat0 + dlat(rng), lon0 + dlon(rng), range(rng)));
  return out;
}

struct TempFile {
  std::filesystem::path path;
  explicit TempFile(const std::string& name) {
    path = std::filesystem::temp_directory_path() / name;
  }
  ~TempFile() { std::filesystem::remove(path); }
};

}  // namespace

TEST_CASE("bssid canonical form is enforced") {
  CHECK(handoff::is_canonical_bssid("aa:bb:cc:dd:ee:ff"));
  CHECK(handoff::is_canonical_bssid("00:11:22:33:44:55"));
  CHECK(!handoff::is_canonical_bssid("AA:bb:cc:dd:ee:ff"));
  CHECK(!handoff::is_canonical_bssid("aa-bb-cc-dd-ee-ff"));
  CHECK(!handoff::is_canonical_bssid("aa:bb:cc:dd:ee"));
  CHECK(!handoff::is_canonical_bssid("aa:bb:cc:dd:ee:ff:00"));
  CHECK(!handoff::is_canonical_bssid(""));
}

TEST_CASE("validate_record names the offending field") {
  auto good = make_ap(1, 10.0, 20.0);
  CHECK_NOTHROW(handoff::validate_record(good));

  auto bad = good;
  bad.bssid = "nope";
  CHECK_THROWS_WITH_AS(handoff::validate_record(bad),
                       doctest::Contains("bssid"), std::invalid_argument);
  bad = good;
  bad.ssid.clear();
  CHECK_THROWS_WITH_AS(handoff::validate_record(bad),
                       doctest::Contains("ssid"), std::invalid_argument);
  bad = good;
  bad.range_m = -1.0;
  CHECK_THROWS_WITH_AS(handoff::validate_record(bad),
                       doctest::Contains("range_m"), std::invalid_argument);
  bad = good;
  bad.timestamp_s = -5;
  CHECK_THROWS_WITH_AS(handoff::validate_record(bad),
                       doctest::Contains("timestamp_s"), std::invalid_argument);
  bad = good;
  bad.auth = "";
  CHECK_THROWS_WITH_AS(handoff::validate_record(bad),
                       doctest::Contains("auth"), std::invalid_argument);
}

TEST_CASE("duplicate bssid keeps the newest record, ties keep the incumbent") {
  Registry reg;
  auto a = make_ap(1, 10.0, 20.0, 100.0, 50);
  CHECK(reg.insert(a));
  CHECK(reg.size() == 1);

  auto older = a;
  older.timestamp_s = 40;
  older.ssid = "stale";
  CHECK(!reg.insert(older));
  CHECK(reg.records().at(a.bssid).ssid == a.ssid);

  auto tie = a;
  tie.ssid = "tie";
  CHECK(!reg.insert(tie));
  CHECK(reg.records().at(a.bssid).ssid == a.ssid);

  auto newer = a;
  newer.timestamp_s = 60;
  newer.ssid = "fresh";
  newer.location = GeoPoint::from_degrees(11.0, 21.0);  // moves grid cell too
  CHECK(reg.insert(newer));
  CHECK(reg.size() == 1);
  CHECK(reg.records().at(a.bssid).ssid == "fresh");
  auto hit = reg.nearest(GeoPoint::from_degrees(11.0, 21.0));
  REQUIRE(hit.has_value());
  CHECK(hit->distance_m == 0.0);
}

TEST_CASE("empty registry answers with nothing") {
  Registry reg;
  CHECK(!reg.nearest(GeoPoint::from_degrees(0.0, 0.0)).has_value());
  CHECK(!reg.in_range(GeoPoint::from_degrees(0.0, 0.0)).has_value());
  CHECK(reg.nearest_k(GeoPoint::from_degrees(0.0, 0.0), 5).empty());
}

TEST_CASE("nearest and in_range agree with brute force over random registries") {
  std::mt19937_64 rng(20260816);
  std::uniform_real_distribution<double> qlat(-0.6, 0.6), qlon(-0.6, 0.6);
  for (int trial = 0; trial < 5; ++trial) {
    auto aps = random_aps(rng, 300, 38.5, 121.0, 0.5);
    Registry reg;
    for (const auto& r : aps) reg.insert(r);
    REQUIRE(reg.size() == aps.size());
    for (int q = 0; q < 50; ++q) {
      auto p = GeoPoint::from_degrees(38.5 + qlat(rng), 121.0 + qlon(rng));
      auto got = reg.nearest(p);
      auto want = oracle::brute_nearest(aps, p);
      REQUIRE(got.has_value());
      REQUIRE(got->record.bssid == want->record.bssid);
      REQUIRE(got->distance_m == want->distance_m);

      auto gr = reg.in_range(p);
      auto wr = oracle::brute_in_range(aps, p);
      REQUIRE(gr.has_value() == wr.has_value());
      if (gr) {
        REQUIRE(gr->record.bssid == wr->record.bssid);
        REQUIRE(gr->distance_m == wr->distance_m);
      }
    }
  }
}

TEST_CASE("nearest_k returns sorted hits and tolerates k past the end") {
  std::mt19937_64 rng(7);
  auto aps = random_aps(rng, 40, 0.0, 0.0, 0.3);
  Registry reg;
  for (const auto& r : aps) reg.insert(r);

  auto p = GeoPoint::from_degrees(0.05, -0.05);
  auto got = reg.nearest_k(p, 10);
  auto want = oracle::brute_nearest_k(aps, p, 10);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    REQUIRE(got[i].record.bssid == want[i].record.bssid);
    REQUIRE(got[i].distance_m == want[i].distance_m);
  }
  CHECK(reg.nearest_k(p, 1000).size() == aps.size());
  CHECK(reg.nearest_k(p, 0).empty());
}

TEST_CASE("queries work across the antimeridian") {
  Registry reg;
  reg.insert(make_ap(1, 10.0, 179.99));
  reg.insert(make_ap(2, 10.0, -179.99));
  reg.insert(make_ap(3, 10.0, 170.0));
  auto east = reg.nearest(GeoPoint::from_degrees(10.0, 179.999));
  REQUIRE(east.has_value());
  CHECK(east->record.bssid == make_ap(1, 0, 0).bssid);  // 0.009 deg away vs 0.011 across the seam
  auto west = reg.nearest(GeoPoint::from_degrees(10.0, -179.999));
  REQUIRE(west.has_value());
  CHECK(west->record.bssid == make_ap(2, 0, 0).bssid);
}

TEST_CASE("ties at equal distance pick the smallest bssid") {
  Registry reg;
  auto a = make_ap(300, 10.0, 20.0);
  auto b = make_ap(2, 10.0, 20.0);  // same spot, lower bssid
  reg.insert(a);
  reg.insert(b);
  auto hit = reg.nearest(GeoPoint::from_degrees(10.0, 20.0));
  REQUIRE(hit.has_value());
  CHECK(hit->record.bssid == std::min(a.bssid, b.bssid));
}

TEST_CASE("copied registries answer independently of the source") {
  std::mt19937_64 rng(3);
  auto aps = random_aps(rng, 50, -20.0, 60.0, 0.2);
  Registry reg;
  for (const auto& r : aps) reg.insert(r);

  Registry copy = reg;
  // mutate the source after the copy; the copy must keep its own view
  reg.insert(make_ap(9999, -20.0, 60.0, 100.0, 1));
  auto p = GeoPoint::from_degrees(-20.0, 60.0);
  auto from_copy = copy.nearest(p);
  auto want = oracle::brute_nearest(aps, p);
  REQUIRE(from_copy.has_value());
  CHECK(from_copy->record.bssid == want->record.bssid);
  CHECK(from_copy->distance_m == want->distance_m);

  Registry assigned(0.5);
  assigned = copy;
  auto from_assigned = assigned.nearest(p);
  REQUIRE(from_assigned.has_value());
  CHECK(from_assigned->record.bssid == want->record.bssid);
}

TEST_CASE("ssid escaping round-trips spaces, tabs, and percents") {
  for (std::string s : {"plain", "two words", "a%b", "tab\there", "%20", "  lead"}) {
    CHECK(handoff::unescape_field(handoff::escape_field(s)) == s);
  }
  CHECK(handoff::escape_field("two words") == "two%20words");
  CHECK_THROWS_AS(handoff::unescape_field("bad%2"), std::invalid_argument);
  CHECK_THROWS_AS(handoff::unescape_field("bad%zz"), std::invalid_argument);
}

TEST_CASE("save and load round-trip the store") {
  std::mt19937_64 rng(11);
  auto aps = random_aps(rng, 30, 38.0, 121.0, 0.3);
  aps[0].ssid = "coffee shop upstairs";
  aps[1].auth = "wpa2 enterprise";
  Registry reg;
  for (const auto& r : aps) reg.insert(r);

  TempFile f("registry_roundtrip.aplog");
  reg.save(f.path);
  auto back = Registry::load(f.path);
  REQUIRE(back.size() == reg.size());
  for (const auto& [bssid, rec] : reg.records()) {
    const auto& got = back.records().at(bssid);
    CHECK(got.ssid == rec.ssid);
    CHECK(got.timestamp_s == rec.timestamp_s);
    CHECK(got.range_m == rec.range_m);
    CHECK(got.auth == rec.auth);
    CHECK(handoff::haversine_distance(got.location, rec.location).meters < 1e-4);
  }
}

TEST_CASE("load skips comments and reports bad lines with their number") {
  TempFile f("registry_badline.aplog");
  {
    std::ofstream out(f.path);
    out << "# header comment\n";
    out << "\n";
    out << "0 aa:bb:cc:00:00:01 net-a 38.880000000 121.622000000 120 wpa2\n";
    out << "0 aa:bb:cc:00:00:02 net-b 38.990000000 121.530000000\n";  // 5 fields
  }
  try {
    Registry::load(f.path);
    FAIL("expected AplogError");
  } catch (const handoff::AplogError& e) {
    CHECK(e.line == 4);
    CHECK(std::string(e.what()).find("line 4") != std::string::npos);
  }
}

TEST_CASE("load rejects out-of-range coordinates with the line number") {
  TempFile f("registry_badcoord.aplog");
  {
    std::ofstream out(f.path);
    out << "0 aa:bb:cc:00:00:01 net-a 99.0 121.0 120\n";
  }
  CHECK_THROWS_AS(Registry::load(f.path), handoff::AplogError);
}

TEST_CASE("loading a missing file fails loudly") {
  CHECK_THROWS_AS(Registry::load("/nonexistent/nowhere.aplog"), std::runtime_error);
}

TEST_CASE("cell size is validated") {
  CHECK_THROWS_AS(Registry(0.0), std::invalid_argument);
  CHECK_THROWS_AS(Registry(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(Registry(90.0), std::invalid_argument);
  CHECK_NOTHROW(Registry(45.0));
}

TEST_CASE("coarse and fine cell sizes agree on answers") {
  std::mt19937_64 rng(5);
  auto aps = random_aps(rng, 200, 59.0, 18.0, 0.4);  // high latitude squeezes lon cells
  Registry fine(0.01), coarse(5.0);
  for (const auto& r : aps) {
    fine.insert(r);
    coarse.insert(r);
  }
  std::uniform_real_distribution<double> d(-0.6, 0.6);
  for (int q = 0; q < 40; ++q) {
    auto p = GeoPoint::from_degrees(59.0 + d(rng), 18.0 + d(rng));
    auto a = fine.nearest(p);
    auto b = coarse.nearest(p);
    REQUIRE(a.has_value());
    REQUIRE(b.has_value());
    REQUIRE(a->record.bssid == b->record.bssid);
    REQUIRE(a->distance_m == b->distance_m);
  }
}
