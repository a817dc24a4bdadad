#include "nlos/histproc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlos/error.hpp"

namespace nlos {
namespace {

// Index of the first bin whose centre is >= t, in unfolded bin coordinates.
long long first_center_at_or_after(double t, double t0, double w) {
  return static_cast<long long>(std::ceil((t - t0) / w - 0.5));
}

bool same_shape(const TransientHistogram& a, const TransientHistogram& b) {
  return a.counts.size() == b.counts.size() &&
         std::abs(a.bin_width_s - b.bin_width_s) <= 1e-9 * a.bin_width_s &&
         std::abs(a.t0_offset_s - b.t0_offset_s) <= 1e-6 * a.bin_width_s;
}

}  // namespace

TransientHistogram apply_offset(const TransientHistogram& hist, double t0_s) {
  if (!std::isfinite(t0_s) || std::abs(t0_s) >= hist.span_s()) {
    throw ValidationError("t0_s", "offset magnitude must be smaller than the histogram span");
  }
  TransientHistogram out = hist;
  out.t0_offset_s += t0_s;
  return out;
}

TransientHistogram crop(const TransientHistogram& hist, const TimeWindow& window) {
  if (!std::isfinite(window.start_s) || !std::isfinite(window.end_s) ||
      window.start_s >= window.end_s) {
    throw ValidationError("window", "start must be finite and strictly before end");
  }
  if (hist.counts.empty()) throw Error(ErrorCode::EmptyWindow, "histogram has no bins");

  const double w = hist.bin_width_s;
  const auto n = static_cast<long long>(hist.counts.size());
  long long first = first_center_at_or_after(window.start_s, hist.t0_offset_s, w);
  long long last = first_center_at_or_after(window.end_s, hist.t0_offset_s, w) - 1;

  const bool circular =
      hist.wrap_period_s && std::abs(*hist.wrap_period_s - hist.span_s()) <= 0.5 * w;
  if (circular) {
    if (last - first + 1 > n) {
      throw ValidationError("window", "longer than one repetition period");
    }
  } else {
    first = std::max(first, 0LL);
    last = std::min(last, n - 1);
  }
  if (last < first) {
    throw Error(ErrorCode::EmptyWindow, "window [" + std::to_string(window.start_s) + ", " +
                                            std::to_string(window.end_s) +
                                            ") does not overlap the histogram");
  }

  TransientHistogram out;
  out.bin_width_s = w;
  out.pixel_index = hist.pixel_index;
  out.acq_time_s = hist.acq_time_s;
  out.t0_offset_s = hist.t0_offset_s + static_cast<double>(first) * w;
  out.counts.reserve(static_cast<std::size_t>(last - first + 1));
  for (long long b = first; b <= last; ++b) {
    const long long folded = ((b % n) + n) % n;
    out.counts.push_back(hist.counts[static_cast<std::size_t>(folded)]);
  }
  return out;
}

TransientHistogram subtract_background(const TransientHistogram& hist,
                                       const TransientHistogram& background) {
  if (!same_shape(hist, background)) {
    throw Error(ErrorCode::ShapeMismatch,
                "background shape differs from signal (length " +
                    std::to_string(background.counts.size()) + " vs " +
                    std::to_string(hist.counts.size()) + ")");
  }
  TransientHistogram out = hist;
  for (std::size_t b = 0; b < out.counts.size(); ++b) {
    const auto bg = background.counts[b];
    out.counts[b] = out.counts[b] > bg ? out.counts[b] - bg : 0;
  }
  return out;
}

TransientHistogram estimate_background_median(std::span<const TransientHistogram> frames) {
  if (frames.size() < 3) {
    throw ValidationError("frames", "median background needs at least 3 frames");
  }
  for (std::size_t f = 1; f < frames.size(); ++f) {
    if (!same_shape(frames[0], frames[f])) {
      throw Error(ErrorCode::ShapeMismatch, "frame " + std::to_string(f) + " shape differs");
    }
  }
  TransientHistogram out = frames[0];
  std::vector<std::uint64_t> column(frames.size());
  const std::size_t lower_mid = (frames.size() - 1) / 2;
  for (std::size_t b = 0; b < out.counts.size(); ++b) {
    for (std::size_t f = 0; f < frames.size(); ++f) column[f] = frames[f].counts[b];
    std::nth_element(column.begin(), column.begin() + static_cast<long>(lower_mid), column.end());
    out.counts[b] = column[lower_mid];
  }
  return out;
}

std::vector<PeakSeed> detect_peaks(const TransientHistogram& hist,
                                   const PeakDetectOptions& options) {
  if (options.max_peaks < 1) throw ValidationError("max_peaks", "must be >= 1");
  if (!(options.min_snr >= 0.0)) throw ValidationError("min_snr", "must be >= 0");
  const std::size_t n = hist.counts.size();
  if (n == 0) return {};

  const double sigma_bins = options.irf_sigma_s / hist.bin_width_s;
  const auto width = static_cast<std::size_t>(std::max(1.0, std::round(sigma_bins)));

  // Centred moving average, shrinking at the edges.
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + static_cast<double>(hist.counts[i]);
  std::vector<double> smooth(n);
  const std::size_t half = width / 2;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, lo + width);
    smooth[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }

  std::vector<std::uint64_t> sorted(hist.counts);
  const std::size_t mid = (n - 1) / 2;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<long>(mid), sorted.end());
  const double median = static_cast<double>(sorted[mid]);
  const double threshold = options.min_snr * std::sqrt(median + 1.0);

  std::vector<PeakSeed> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    const bool rises = i == 0 || smooth[i] > smooth[i - 1];
    const bool holds = i + 1 == n || smooth[i] >= smooth[i + 1];
    const double height = smooth[i] - median;
    if (rises && holds && height > threshold) candidates.push_back({i, height});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const PeakSeed& a, const PeakSeed& b) { return a.amplitude > b.amplitude; });

  const double min_sep = std::max(1.0, 3.0 * sigma_bins);
  std::vector<PeakSeed> accepted;
  for (const auto& c : candidates) {
    const bool clear = std::none_of(accepted.begin(), accepted.end(), [&](const PeakSeed& a) {
      const double gap = std::abs(static_cast<double>(a.bin) - static_cast<double>(c.bin));
      return gap < min_sep;
    });
    if (clear) accepted.push_back(c);
    if (accepted.size() == options.max_peaks) break;
  }
  return accepted;
}

}  // namespace nlos
