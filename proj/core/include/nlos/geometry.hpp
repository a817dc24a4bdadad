#pragma once

#include <cmath>

namespace nlos {

/// Speed of light in vacuum, m/s (exact by definition of the metre).
inline constexpr double kSpeedOfLight = 299'792'458.0;

/// Cartesian point or displacement in metres.
///
/// Axes: x runs along the relay wall, y points from the wall into the hidden
/// region, z is vertical. The origin is whatever reference the scene picks
/// (by convention the right-hand corner of the junction).
struct Point3 {
  double x{0.0};
  double y{0.0};
  double z{0.0};

  constexpr Point3 operator+(const Point3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  constexpr Point3 operator-(const Point3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  constexpr Point3 operator*(double s) const { return {x * s, y * s, z * s}; }
  constexpr bool operator==(const Point3&) const = default;

  bool is_finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

constexpr double dot(const Point3& a, const Point3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

inline double norm(const Point3& v) { return std::sqrt(dot(v, v)); }

inline double distance(const Point3& a, const Point3& b) { return norm(a - b); }

/// Length of the hidden-scene leg of a three-bounce path: laser spot on the
/// wall -> hidden point -> imaged wall spot.
inline double path_length(const Point3& laser_spot, const Point3& hidden, const Point3& pixel) {
  return distance(hidden, laser_spot) + distance(hidden, pixel);
}

/// Time of flight for `path_length`, in seconds.
inline double time_of_flight(const Point3& laser_spot, const Point3& hidden, const Point3& pixel) {
  return path_length(laser_spot, hidden, pixel) / kSpeedOfLight;
}

/// Delay added by the transceiver-to-wall round trip, folded into one laser
/// repetition period. This is where the hidden-scene time origin sits inside
/// a raw TCSPC histogram.
double standoff_delay_s(double standoff_m, double period_s);

}  // namespace nlos
