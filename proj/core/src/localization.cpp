#include "nlos/localization.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nlos/error.hpp"

namespace nlos {

std::size_t GridSpec::nx() const {
  return static_cast<std::size_t>(std::max(0LL, std::llround((x_max - x_min) / resolution)));
}

std::size_t GridSpec::ny() const {
  return static_cast<std::size_t>(std::max(0LL, std::llround((y_max - y_min) / resolution)));
}

void GridSpec::validate() const {
  if (!std::isfinite(x_min) || !std::isfinite(x_max) || !(x_min < x_max)) {
    throw ValidationError("grid.x_min", "x range must be finite with x_min < x_max");
  }
  if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_min < y_max)) {
    throw ValidationError("grid.y_min", "y range must be finite with y_min < y_max");
  }
  if (!std::isfinite(resolution) || resolution <= 0.0) {
    throw ValidationError("grid.resolution", "must be > 0");
  }
  if (!std::isfinite(z_plane)) throw ValidationError("grid.z_plane", "must be finite");
  if (nx() < 2 || ny() < 2) {
    throw ValidationError("grid.resolution", "grid needs at least 2 cells per axis");
  }
}

ProbabilityMap::ProbabilityMap(GridSpec grid, std::vector<double> log_values, bool normalized)
    : grid_(grid), nx_(grid.nx()), log_values_(std::move(log_values)), normalized_(normalized) {
  grid_.validate();
  if (log_values_.size() != grid_.cells()) {
    throw Error(ErrorCode::ShapeMismatch, "map has " + std::to_string(log_values_.size()) +
                                              " cells, grid expects " +
                                              std::to_string(grid_.cells()));
  }
}

double ProbabilityMap::value(std::size_t ix, std::size_t iy) const {
  return std::exp(log_value(ix, iy));
}

std::vector<double> ProbabilityMap::values() const {
  std::vector<double> out(log_values_.size());
  std::transform(log_values_.begin(), log_values_.end(), out.begin(),
                 [](double l) { return std::exp(l); });
  return out;
}

std::size_t ProbabilityMap::argmax() const {
  return static_cast<std::size_t>(
      std::max_element(log_values_.begin(), log_values_.end()) - log_values_.begin());
}

double ProbabilityMap::max_log_value() const { return log_values_[argmax()]; }

ProbabilityMap ProbabilityMap::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw ValidationError("factor", "must be finite and > 0");
  }
  std::vector<double> out(log_values_);
  const double shift = std::log(factor);
  for (double& l : out) l += shift;
  return ProbabilityMap(grid_, std::move(out), false);
}

double effective_sigma_s(const PeakEstimate& peak, SigmaSource source) {
  return source == SigmaSource::FittedWidth ? peak.sigma_s : peak.t_stderr_s;
}

ProbabilityMap backproject(const PeakEstimate& peak, const Point3& laser_spot, const Point3& pixel,
                           const GridSpec& grid, SigmaSource source) {
  grid.validate();
  const double sigma = effective_sigma_s(peak, source);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("peak.sigma_s", "ellipse thickness must be finite and > 0");
  }
  const double path = kSpeedOfLight * peak.t_s;
  const double focal = distance(laser_spot, pixel);
  if (!(path > focal)) {
    throw Error(ErrorCode::InfeasibleTime,
                "c*t = " + std::to_string(path) + " m does not exceed focal separation " +
                    std::to_string(focal) + " m");
  }
  const double sigma_path = kSpeedOfLight * sigma;
  const double inv_two_var = 1.0 / (2.0 * sigma_path * sigma_path);

  const std::size_t nx = grid.nx();
  const std::size_t ny = grid.ny();
  std::vector<double> log_values(nx * ny);
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double miss = path_length(laser_spot, grid.cell_center(ix, iy), pixel) - path;
      log_values[iy * nx + ix] = -miss * miss * inv_two_var;
    }
  }
  return ProbabilityMap(grid, std::move(log_values), false);
}

std::vector<double> joint_log_likelihood(std::span<const ProbabilityMap* const> maps) {
  if (maps.empty()) throw ValidationError("maps", "at least one map is required");
  const GridSpec& grid = maps.front()->grid();
  for (const auto* m : maps) {
    if (!(m->grid() == grid)) throw Error(ErrorCode::ShapeMismatch, "maps use different grids");
  }
  std::vector<double> joint(grid.cells(), 0.0);
  for (std::size_t c = 0; c < joint.size(); ++c) {
    double sum = 0.0;
    for (const auto* m : maps) sum += m->log_values()[c];
    joint[c] = sum;
  }
  return joint;
}

ProbabilityMap fuse(std::span<const ProbabilityMap> maps) {
  std::vector<const ProbabilityMap*> ptrs;
  ptrs.reserve(maps.size());
  for (const auto& m : maps) ptrs.push_back(&m);
  std::vector<double> joint = joint_log_likelihood(ptrs);

  const double peak = *std::max_element(joint.begin(), joint.end());
  if (!(std::exp(peak) > 0.0)) {
    throw Error(ErrorCode::EmptyIntersection,
                "per-pixel densities have no common support (peak log-product " +
                    std::to_string(peak) + ")");
  }
  const GridSpec& grid = maps.front().grid();
  double z = 0.0;
  for (double l : joint) z += std::exp(l - peak);
  const double log_norm = peak + std::log(z * grid.cell_area());
  for (double& l : joint) l -= log_norm;
  return ProbabilityMap(grid, std::move(joint), true);
}

TrackEstimate localize(const ProbabilityMap& map) {
  if (!map.normalized()) throw ValidationError("map", "localize expects a normalised map");
  const GridSpec& grid = map.grid();
  const std::size_t nx = grid.nx();
  const std::size_t ny = grid.ny();
  const std::vector<double> v = map.values();
  const std::size_t best = map.argmax();
  const double vmax = v[best];
  const double cutoff = 0.5 * vmax;

  // Flood fill (4-connected) over the half-maximum region holding the argmax.
  std::vector<char> seen(v.size(), 0);
  std::vector<std::size_t> stack{best};
  seen[best] = 1;
  double w_sum = 0.0;
  double wx = 0.0;
  double wy = 0.0;
  while (!stack.empty()) {
    const std::size_t c = stack.back();
    stack.pop_back();
    const std::size_t ix = c % nx;
    const std::size_t iy = c / nx;
    w_sum += v[c];
    wx += v[c] * grid.cell_x(ix);
    wy += v[c] * grid.cell_y(iy);
    auto visit = [&](std::size_t n) {
      if (!seen[n] && v[n] >= cutoff) {
        seen[n] = 1;
        stack.push_back(n);
      }
    };
    if (ix > 0) visit(c - 1);
    if (ix + 1 < nx) visit(c + 1);
    if (iy > 0) visit(c - nx);
    if (iy + 1 < ny) visit(c + nx);
  }

  double total = 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double p = v[iy * nx + ix];
      total += p;
      mx += p * grid.cell_x(ix);
      my += p * grid.cell_y(iy);
    }
  }
  mx /= total;
  my /= total;
  double vxx = 0.0;
  double vyy = 0.0;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      const double p = v[iy * nx + ix];
      const double dx = grid.cell_x(ix) - mx;
      const double dy = grid.cell_y(iy) - my;
      vxx += p * dx * dx;
      vyy += p * dy * dy;
    }
  }

  TrackEstimate est;
  est.x = wx / w_sum;
  est.y = wy / w_sum;
  est.sigma_x = std::sqrt(std::max(0.0, vxx / total));
  est.sigma_y = std::sqrt(std::max(0.0, vyy / total));
  est.peak_value = vmax;
  return est;
}

}  // namespace nlos
