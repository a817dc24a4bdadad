#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nlos/association.hpp"
#include "nlos/forward_sim.hpp"
#include "nlos/histproc.hpp"
#include "nlos/localization.hpp"
#include "nlos/peak_fit.hpp"
#include "nlos/scene.hpp"

namespace nlos {

struct ScenarioOptions {
  std::size_t k_targets{1};
  TimeWindow window{0.0, 24e-9};
  double min_snr{3.0};
  std::size_t max_fit_iterations{200};
  SigmaSource sigma_source{SigmaSource::FittedWidth};
  /// Report an ambiguous association as a warning instead of throwing.
  bool allow_ambiguous{false};
};

struct PixelDiagnostics {
  std::size_t pixel_index{0};
  TransientHistogram signal;
  TransientHistogram background;
  /// Calibrated, cropped and background-subtracted record that was fitted.
  TransientHistogram processed;
  std::vector<PeakSeed> seeds;
  std::vector<PeakEstimate> peaks;
  std::vector<std::string> notes;
};

struct ScenarioResult {
  std::vector<TrackEstimate> tracks;
  std::vector<PixelDiagnostics> pixels;
  AssociationResult association;
  std::vector<std::string> warnings;
};

/// Signal chain for already-acquired raw histograms, one signal and one
/// background record per pixel in geometry order:
/// offset -> crop -> subtract -> detect -> fit -> associate.
/// Pixels with no usable peak are dropped; fewer than two remaining raises
/// Error(NoTargetFound). Other failures carry "pixel <i>:" context.
ScenarioResult reconstruct(const RetrievalGeometry& geometry, const AcquisitionParams& params,
                           const GridSpec& grid, std::vector<TransientHistogram> signals,
                           std::vector<TransientHistogram> backgrounds,
                           const ScenarioOptions& options);

/// As reconstruct(), estimating each pixel's background as the per-bin
/// median of its frames; frame 0 is the signal.
ScenarioResult reconstruct_median(const RetrievalGeometry& geometry,
                                  const AcquisitionParams& params, const GridSpec& grid,
                                  const std::vector<std::vector<TransientHistogram>>& frames,
                                  const ScenarioOptions& options);

/// Simulates a signal and a background acquisition for every pixel and runs
/// reconstruct(). Requires at least two pixels.
ScenarioResult run_scenario(const Scene& scene, const AcquisitionParams& params,
                            const GridSpec& grid, const ScenarioOptions& options = {});

struct TwoPersonResult {
  ScenarioResult scenario;
  bool ambiguous{false};
};

/// Two-target scenario; an ambiguous association is reported, not thrown.
TwoPersonResult run_two_person(const Scene& scene, const AcquisitionParams& params,
                               const GridSpec& grid, ScenarioOptions options = {});

struct SweepConfig {
  Point3 laser_spot{-0.5, 0.0, 1.0};
  Point3 d1_position{0.0, 0.0, 1.0};
  double d2_x_min{0.1};
  double d2_x_max{2.5};
  std::size_t d2_x_steps{25};
  std::vector<Point3> object_positions;
  double reflectivity{1.0};
  std::size_t trials_per_point{50};
  AcquisitionParams acquisition;
  GridSpec grid;
  Point3 wall_normal{0.0, 1.0, 0.0};
  double standoff_m{53.0};
  ScenarioOptions scenario;
  std::uint64_t seed{1};

  /// Representative two-detector layout used when no config file is given.
  static SweepConfig defaults();
  void validate() const;
  double d2_x(std::size_t step) const;
};

struct SweepPoint {
  std::size_t step{0};
  double d2_x{0.0};
  double baseline{0.0};
  std::size_t object_index{0};
  Point3 object;
  std::size_t trials{0};
  std::size_t successes{0};
  /// |mean retrieved - truth| per axis.
  double error_x{0.0};
  double error_y{0.0};
  /// Spread of retrieved positions across trials.
  double sigma_x{0.0};
  double sigma_y{0.0};
  /// Mean second-moment width of the fused maps.
  double pdf_sigma_x{0.0};
  double pdf_sigma_y{0.0};
  bool valid{false};
};

struct SweepResult {
  std::vector<SweepPoint> points;
};

using SweepProgress = std::function<void(std::size_t done, std::size_t total)>;
/// Polled before each trial; returning true abandons the sweep.
using SweepCancel = std::function<bool()>;

/// Baseline study: laser and D1 fixed, D2 stepped along x, one object at a
/// time, trials_per_point independent noisy acquisitions per (step, object).
/// Steps where more than half the trials fail are marked invalid. Throws
/// Error(Interrupted) once `cancel` reports true.
SweepResult run_baseline_sweep(const SweepConfig& config, std::size_t threads = 0,
                               const SweepProgress& progress = {},
                               const SweepCancel& cancel = {});

}  // namespace nlos
