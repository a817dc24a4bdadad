#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlos/histogram.hpp"

namespace nlos {

/// Crop bounds in seconds, relative to the instant the laser pulse hits the
/// wall.
struct TimeWindow {
  double start_s{0.0};
  double end_s{24e-9};
};

/// Shifts the time axis by `t0_s` (metadata only; counts are untouched).
/// For calibration pass the negative of the instrument delay so that bin
/// times become relative to the laser-at-wall instant.
TransientHistogram apply_offset(const TransientHistogram& hist, double t0_s);

/// Keeps the bins whose centres fall inside `window`. A circular histogram
/// may be cropped across its wrap point; the result is always linear.
/// Throws Error(EmptyWindow) when nothing overlaps, ValidationError when the
/// window is malformed or extends past the recorded span.
TransientHistogram crop(const TransientHistogram& hist, const TimeWindow& window);

/// Per-bin `hist - background`, clamped at zero. Throws Error(ShapeMismatch)
/// unless both records share length, bin width and time offset.
TransientHistogram subtract_background(const TransientHistogram& hist,
                                       const TransientHistogram& background);

/// Per-bin lower median of at least three same-shaped frames.
TransientHistogram estimate_background_median(std::span<const TransientHistogram> frames);

struct PeakDetectOptions {
  std::size_t max_peaks{1};
  double min_snr{3.0};
  /// Expected IRF sigma; sets the smoothing width and minimum separation.
  double irf_sigma_s{120e-12};
};

struct PeakSeed {
  std::size_t bin{0};
  /// Smoothed height above the median level, counts per bin.
  double amplitude{0.0};
};

/// Moving-average smoothing followed by thresholded local-maximum search.
/// Returns up to `max_peaks` seeds, strongest first, no two closer than three
/// IRF sigmas. An empty result is not an error.
std::vector<PeakSeed> detect_peaks(const TransientHistogram& hist, const PeakDetectOptions& options);

}  // namespace nlos
