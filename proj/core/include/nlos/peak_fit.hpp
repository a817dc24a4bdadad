#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "nlos/histogram.hpp"
#include "nlos/histproc.hpp"

namespace nlos {

/// One fitted return. `t_s` is the time of flight t_i and `sigma_s` the
/// fitted Gaussian width; `t_stderr_s` is the standard error of the centre
/// from the fit covariance, kept for callers that prefer it as the
/// uncertainty.
struct PeakEstimate {
  double t_s{0.0};
  double sigma_s{0.0};
  /// Peak height in counts per bin.
  double amplitude{0.0};
  std::size_t pixel_index{0};
  double t_stderr_s{0.0};

  bool operator==(const PeakEstimate&) const = default;
};

struct FitOptions {
  /// Initial width and upper bound reference (sigma <= 10x this).
  double irf_sigma_guess_s{120e-12};
  std::size_t max_iterations{200};
  /// Half-width of the fitted region around each seed, in units of the
  /// sigma guess.
  double region_sigmas{8.0};
  /// Relative residual-reduction threshold that counts as converged.
  double tolerance{1e-10};
};

struct FitReport {
  std::vector<PeakEstimate> peaks;
  double floor{0.0};
  double residual_ss{0.0};
  std::size_t iterations{0};
  std::size_t samples{0};
};

/// Sum-of-Gaussians plus constant-floor least squares over real-valued
/// samples on a uniform time base (sample j centred at t0 + (j + 0.5) * dt).
/// Damped Gauss-Newton with Marquardt scaling, unweighted. Throws
/// Error(NonConvergence) or Error(DegenerateFit).
FitReport fit_gaussians(std::span<const double> samples, double t0_s, double dt_s,
                        std::span<const PeakSeed> seeds, const FitOptions& options);

/// Histogram front end for fit_gaussians. Results are ordered by time.
std::vector<PeakEstimate> fit_peaks(const TransientHistogram& hist,
                                    std::span<const PeakSeed> seeds, const FitOptions& options);

FitReport fit_peaks_report(const TransientHistogram& hist, std::span<const PeakSeed> seeds,
                           const FitOptions& options);

}  // namespace nlos
