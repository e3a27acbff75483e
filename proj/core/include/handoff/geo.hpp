#pragma once

#include <stdexcept>

namespace handoff {

// WGS-84 equatorial radius; all great-circle math treats the Earth as a sphere
// of exactly this radius.
inline constexpr double kEarthRadiusM = 6378137.0;

inline constexpr double deg2rad(double d) { return d * 3.14159265358979323846 / 180.0; }
inline constexpr double rad2deg(double r) { return r * 180.0 / 3.14159265358979323846; }

// Latitude/longitude in radians. lat in [-pi/2, pi/2], lon normalized to [-pi, pi).
// Build through the factories so the invariants hold.
struct GeoPoint {
  double lat_rad = 0.0;
  double lon_rad = 0.0;

  static GeoPoint from_radians(double lat, double lon);
  static GeoPoint from_degrees(double lat_deg, double lon_deg);

  double lat_deg() const { return rad2deg(lat_rad); }
  double lon_deg() const { return rad2deg(lon_rad); }
};

struct Distance {
  double meters = 0.0;
};

struct Speed {
  double meters_per_second = 0.0;
};

// Great-circle distance (haversine form, arcsine argument clamped to [0,1]).
Distance haversine_distance(const GeoPoint& a, const GeoPoint& b);

// Travel time to cover d at speed v. v must be > 0.
double switch_time_s(Distance d, Speed v);

// Point reached after walking step.meters from `from` along the great circle to `to`.
// Caps at `to` when the step is at least the remaining distance. An antipodal pair
// routes through the north pole (or the prime meridian when `from` is a pole).
GeoPoint step_towards(const GeoPoint& from, const GeoPoint& to, Distance step);

// Initial bearing (radians, clockwise from north) of the great circle from a to b.
double initial_bearing_rad(const GeoPoint& a, const GeoPoint& b);

// Destination after travelling dist on the given initial bearing.
GeoPoint destination(const GeoPoint& from, double bearing_rad, Distance dist);

}  // namespace handoff
