#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nlos/histogram.hpp"
#include "nlos/scene.hpp"

namespace nlos {

/// Expected signal counts per second for a unit-reflectivity target at 1.5 m
/// on both legs with normal-incidence scattering: kappa / 1.5^4 = 2000.
/// A calibration knob for SNR, not a measured quantity.
inline constexpr double kDefaultThroughput = 2000.0 * 1.5 * 1.5 * 1.5 * 1.5;

struct AcquisitionParams {
  double rep_rate_hz{4.0e7};
  double bin_width_s{4e-12};
  double acq_time_s{1.0};
  /// Combined laser pulse + detector jitter, Gaussian sigma.
  double irf_sigma_s{120e-12};
  double dark_rate_hz{1000.0};
  double ambient_rate_hz{0.0};
  double system_throughput{kDefaultThroughput};
  /// Apply cosine factors at both wall scattering events.
  bool lambertian{true};
  /// When false, histograms hold the rounded expectation instead of a
  /// Poisson draw.
  bool poisson_noise{true};
  std::uint64_t rng_seed{0};

  double period_s() const { return 1.0 / rep_rate_hz; }
  std::size_t num_bins() const;

  /// Throws ValidationError on a broken invariant (including a repetition
  /// period that is not an integer number of bins).
  void validate() const;
};

/// Detected signal counts per second from one hidden point scatterer:
/// kappa * rho * L / (d1^2 d2^2), with d1/d2 the laser-spot and pixel legs and
/// L the product of clamped cosines against the wall normal (1 when the
/// Lambertian model is off).
double expected_signal_rate(const Scene& scene, std::size_t pixel_index,
                            const HiddenObject& object, const AcquisitionParams& params);

/// Per-bin expectation of the raw (instrument-frame, circular) histogram.
/// Signal from each contributor is the Gaussian IRF integrated over each bin;
/// dark and ambient counts are spread uniformly.
std::vector<double> expected_counts(const Scene& scene, std::size_t pixel_index,
                                    const AcquisitionParams& params, bool include_objects = true);

/// Raw TCSPC histogram for one pixel with every object and background
/// scatterer present. Bin 0 starts at the laser sync; the record wraps modulo
/// the repetition period. Deterministic in (scene, pixel, params).
TransientHistogram simulate_histogram(const Scene& scene, std::size_t pixel_index,
                                      const AcquisitionParams& params);

/// Same acquisition with the hidden objects removed, drawn from an
/// independent noise stream.
TransientHistogram simulate_background(const Scene& scene, std::size_t pixel_index,
                                       const AcquisitionParams& params);

/// Repeat acquisition `frame` of the signal scene. Frame 0 equals
/// simulate_histogram; later frames use independent noise.
TransientHistogram simulate_frame(const Scene& scene, std::size_t pixel_index,
                                  const AcquisitionParams& params, std::uint64_t frame);

/// Stateless 64-bit seed mixer used to derive per-call RNG streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace nlos
