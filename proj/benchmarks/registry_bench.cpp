#include <cstdio>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "handoff/ap_registry.hpp"
#include "handoff/geo.hpp"

using handoff::ApRecord;
using handoff::GeoPoint;
using handoff::Registry;

namespace {

std::vector<ApRecord> dense_aps(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> off(-0.25, 0.25), range(30.0, 400.0);
  std::vector<ApRecord> recs;
  recs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    ApRecord r;
    char b[32];
    std::snprintf(b, sizeof b, "aa:bb:%02x:%02x:%02x:%02x", unsigned(i >> 24) & 0xff,
                  unsigned(i >> 16) & 0xff, unsigned(i >> 8) & 0xff, unsigned(i) & 0xff);
    r.bssid = b;
    r.ssid = "bench";
    r.range_m = range(rng);
    r.location = GeoPoint::from_degrees(38.9 + off(rng), 121.5 + off(rng));
    recs.push_back(r);
  }
  return recs;
}

void BM_registry_insert(benchmark::State& state) {
  auto recs = dense_aps(std::size_t(state.range(0)), 3);
  for (auto _ : state) {
    Registry reg(0.01);
    for (const auto& r : recs) reg.insert(r);
    benchmark::DoNotOptimize(reg.size());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_registry_insert)->Arg(1000)->Arg(10000);

void BM_registry_nearest(benchmark::State& state) {
  auto recs = dense_aps(std::size_t(state.range(0)), 4);
  Registry reg(0.01);
  for (const auto& r : recs) reg.insert(r);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> off(-0.3, 0.3);
  std::vector<GeoPoint> queries;
  for (int i = 0; i < 256; ++i)
    queries.push_back(GeoPoint::from_degrees(38.9 + off(rng), 121.5 + off(rng)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reg.nearest(queries[i % queries.size()]));
    ++i;
  }
}
BENCHMARK(BM_registry_nearest)->Arg(1000)->Arg(10000);

void BM_registry_in_range(benchmark::State& state) {
  auto recs = dense_aps(10000, 6);
  Registry reg(0.01);
  for (const auto& r : recs) reg.insert(r);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> off(-0.3, 0.3);
  std::vector<GeoPoint> queries;
  for (int i = 0; i < 256; ++i)
    queries.push_back(GeoPoint::from_degrees(38.9 + off(rng), 121.5 + off(rng)));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(reg.in_range(queries[i % queries.size()]));
    ++i;
  }
}
BENCHMARK(BM_registry_in_range);

}  // namespace
