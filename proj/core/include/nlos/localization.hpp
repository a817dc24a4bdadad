#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nlos/geometry.hpp"
#include "nlos/peak_fit.hpp"

namespace nlos {

/// Regular (x, y) search grid on the scattering-height plane. Cell (ix, iy)
/// is centred at (x_min + (ix + 0.5) * resolution, y_min + (iy + 0.5) * resolution).
struct GridSpec {
  double x_min{-3.0};
  double x_max{3.0};
  double y_min{0.0};
  double y_max{4.0};
  double resolution{0.02};
  double z_plane{0.0};

  std::size_t nx() const;
  std::size_t ny() const;
  std::size_t cells() const { return nx() * ny(); }
  double cell_area() const { return resolution * resolution; }
  double cell_x(std::size_t ix) const { return x_min + (static_cast<double>(ix) + 0.5) * resolution; }
  double cell_y(std::size_t iy) const { return y_min + (static_cast<double>(iy) + 0.5) * resolution; }
  Point3 cell_center(std::size_t ix, std::size_t iy) const { return {cell_x(ix), cell_y(iy), z_plane}; }
  void validate() const;

  bool operator==(const GridSpec&) const = default;
};

/// Discretised density over a GridSpec, stored as natural-log values so that
/// products of many narrow ellipses never underflow. Cell order is row-major
/// in y: index = iy * nx + ix.
class ProbabilityMap {
 public:
  ProbabilityMap(GridSpec grid, std::vector<double> log_values, bool normalized);

  const GridSpec& grid() const { return grid_; }
  bool normalized() const { return normalized_; }
  std::span<const double> log_values() const { return log_values_; }
  double log_value(std::size_t ix, std::size_t iy) const { return log_values_[iy * nx_ + ix]; }
  double value(std::size_t ix, std::size_t iy) const;
  /// Linear-domain values, same ordering as log_values().
  std::vector<double> values() const;

  std::size_t argmax() const;
  double max_log_value() const;

  /// Same map with every value multiplied by `factor` (> 0).
  ProbabilityMap scaled(double factor) const;

 private:
  GridSpec grid_;
  std::size_t nx_;
  std::vector<double> log_values_;
  bool normalized_;
};

/// Which fitted quantity becomes the ellipse thickness.
enum class SigmaSource { FittedWidth, CenterStdErr };

double effective_sigma_s(const PeakEstimate& peak, SigmaSource source);

/// Elliptical back-projection of one time of flight:
///   P(r) = exp(-(|r - r_l| + |r - r_i| - c t)^2 / (2 (c sigma)^2))
/// evaluated on every cell of the z = grid.z_plane slice. The result is
/// unnormalised with values in (0, 1]. Throws Error(InfeasibleTime) when
/// c t does not exceed the focal separation.
ProbabilityMap backproject(const PeakEstimate& peak, const Point3& laser_spot, const Point3& pixel,
                           const GridSpec& grid, SigmaSource source = SigmaSource::FittedWidth);

/// Cellwise product of independent per-pixel maps, normalised to integrate to
/// one. Throws Error(EmptyIntersection) if the product underflows to zero in
/// every cell.
ProbabilityMap fuse(std::span<const ProbabilityMap> maps);

/// Unnormalised cellwise log-product; shared by fuse() and association scoring.
std::vector<double> joint_log_likelihood(std::span<const ProbabilityMap* const> maps);

struct TrackEstimate {
  double x{0.0};
  double y{0.0};
  double sigma_x{0.0};
  double sigma_y{0.0};
  double peak_value{0.0};
  std::string label;

  bool operator==(const TrackEstimate&) const = default;
};

/// Centroid of the connected >= 50%-of-max region around the global argmax;
/// spreads are the second central moments of the whole map.
TrackEstimate localize(const ProbabilityMap& map);

}  // namespace nlos
