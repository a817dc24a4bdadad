#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

namespace nlos {

/// Binned photon-arrival record for one imaged wall spot.
///
/// Bin `b` covers [t0_offset_s + b*bin_width_s, t0_offset_s + (b+1)*bin_width_s).
/// A histogram straight off the (simulated) TCSPC module spans exactly one
/// laser period and is circular; `wrap_period_s` is set for those and cleared
/// once the record has been cropped to a linear window.
struct TransientHistogram {
  std::vector<std::uint64_t> counts;
  double bin_width_s{4e-12};
  double t0_offset_s{0.0};
  std::size_t pixel_index{0};
  double acq_time_s{1.0};
  std::optional<double> wrap_period_s;

  std::size_t size() const { return counts.size(); }
  double bin_start(std::size_t b) const { return t0_offset_s + static_cast<double>(b) * bin_width_s; }
  double bin_center(std::size_t b) const { return bin_start(b) + 0.5 * bin_width_s; }
  double span_s() const { return static_cast<double>(counts.size()) * bin_width_s; }
  std::uint64_t total() const;

  bool operator==(const TransientHistogram&) const = default;
};

}  // namespace nlos
