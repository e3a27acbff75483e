#include "handoff/geo.hpp"

#include <algorithm>
#include <cmath>

namespace handoff {

namespace {

constexpr double kPi = 3.14159265358979323846;

double normalize_lon(double lon) {
  if (lon >= -kPi && lon < kPi) return lon;
  double x = std::fmod(lon + kPi, 2.0 * kPi);
  if (x < 0) x += 2.0 * kPi;
  return x - kPi;
}

struct Vec3 {
  double x, y, z;
};

Vec3 to_unit(const GeoPoint& p) {
  double cl = std::cos(p.lat_rad);
  return {cl * std::cos(p.lon_rad), cl * std::sin(p.lon_rad), std::sin(p.lat_rad)};
}

GeoPoint from_unit(const Vec3& v) {
  double lat = std::atan2(v.z, std::hypot(v.x, v.y));
  double lon = std::atan2(v.y, v.x);
  return GeoPoint::from_radians(lat, lon);
}

}  // namespace

GeoPoint GeoPoint::from_radians(double lat, double lon) {
  if (!(std::isfinite(lat) && std::isfinite(lon)))
    throw std::invalid_argument("GeoPoint: coordinates must be finite");
  if (lat < -kPi / 2 || lat > kPi / 2)
    throw std::invalid_argument("GeoPoint: latitude out of [-pi/2, pi/2]");
  return GeoPoint{lat, normalize_lon(lon)};
}

GeoPoint GeoPoint::from_degrees(double lat_deg, double lon_deg) {
  return from_radians(deg2rad(lat_deg), deg2rad(lon_deg));
}

Distance haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  double sdlat = std::sin((a.lat_rad - b.lat_rad) / 2.0);
  double sdlon = std::sin((a.lon_rad - b.lon_rad) / 2.0);
  double h = sdlat * sdlat + std::cos(a.lat_rad) * std::cos(b.lat_rad) * sdlon * sdlon;
  double root = std::sqrt(std::clamp(h, 0.0, 1.0));
  return Distance{2.0 * std::asin(root) * kEarthRadiusM};
}

double switch_time_s(Distance d, Speed v) {
  if (!(v.meters_per_second > 0.0))
    throw std::invalid_argument("switch_time: speed must be > 0");
  if (d.meters < 0.0) throw std::invalid_argument("switch_time: distance must be >= 0");
  return d.meters / v.meters_per_second;
}

GeoPoint step_towards(const GeoPoint& from, const GeoPoint& to, Distance step) {
  if (step.meters < 0.0) throw std::invalid_argument("step_towards: step must be >= 0");
  double total = haversine_distance(from, to).meters;
  if (step.meters >= total || total == 0.0) return to;

  double theta = total / kEarthRadiusM;
  double sin_theta = std::sin(theta);
  if (sin_theta < 1e-12) {
    // Antipodal: route over the north pole; from a pole, along the prime meridian.
    GeoPoint waypoint = (std::abs(from.lat_rad) > kPi / 2 - 1e-9)
                            ? GeoPoint::from_radians(0.0, 0.0)
                            : GeoPoint::from_radians(kPi / 2, 0.0);
    double leg = haversine_distance(from, waypoint).meters;
    if (step.meters <= leg) return step_towards(from, waypoint, step);
    return step_towards(waypoint, to, Distance{step.meters - leg});
  }

  double f = step.meters / total;
  Vec3 a = to_unit(from), b = to_unit(to);
  double wa = std::sin((1.0 - f) * theta) / sin_theta;
  double wb = std::sin(f * theta) / sin_theta;
  Vec3 p{wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.z + wb * b.z};
  return from_unit(p);
}

double initial_bearing_rad(const GeoPoint& a, const GeoPoint& b) {
  double dlon = b.lon_rad - a.lon_rad;
  double y = std::sin(dlon) * std::cos(b.lat_rad);
  double x = std::cos(a.lat_rad) * std::sin(b.lat_rad) -
             std::sin(a.lat_rad) * std::cos(b.lat_rad) * std::cos(dlon);
  return std::atan2(y, x);
}

GeoPoint destination(const GeoPoint& from, double bearing_rad, Distance dist) {
  if (dist.meters < 0.0) throw std::invalid_argument("destination: distance must be >= 0");
  double sigma = dist.meters / kEarthRadiusM;
  double lat = std::asin(std::sin(from.lat_rad) * std::cos(sigma) +
                         std::cos(from.lat_rad) * std::sin(sigma) * std::cos(bearing_rad));
  double lon = from.lon_rad +
               std::atan2(std::sin(bearing_rad) * std::sin(sigma) * std::cos(from.lat_rad),
                          std::cos(sigma) - std::sin(from.lat_rad) * std::sin(lat));
  return GeoPoint::from_radians(std::clamp(lat, -kPi / 2, kPi / 2), lon);
}

}  // namespace handoff
