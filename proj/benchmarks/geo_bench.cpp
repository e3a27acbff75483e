#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "handoff/geo.hpp"

using handoff::Distance;
using handoff::GeoPoint;

namespace {

std::vector<GeoPoint> random_points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lat(-85.0, 85.0), lon(-180.0, 180.0);
  std::vector<GeoPoint> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    pts.push_back(GeoPoint::from_degrees(lat(rng), lon(rng)));
  return pts;
}

void BM_haversine_distance(benchmark::State& state) {
  auto pts = random_points(1024, 1);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = pts[i % pts.size()];
    const auto& b = pts[(i + 511) % pts.size()];
    benchmark::DoNotOptimize(handoff::haversine_distance(a, b).meters);
    ++i;
  }
}
BENCHMARK(BM_haversine_distance);

void BM_step_towards(benchmark::State& state) {
  auto pts = random_points(1024, 2);
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& a = pts[i % pts.size()];
    const auto& b = pts[(i + 257) % pts.size()];
    benchmark::DoNotOptimize(handoff::step_towards(a, b, Distance{140.0}).lat_rad);
    ++i;
  }
}
BENCHMARK(BM_step_towards);

}  // namespace
