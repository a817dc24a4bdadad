#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "nlos/error.hpp"
#include "nlos/localization.hpp"
#include "nlos/scene.hpp"

namespace nlos {

inline constexpr std::size_t kMaxTargets = 2;

struct AssociationOptions {
  SigmaSource sigma_source{SigmaSource::FittedWidth};
  /// Best and runner-up scores closer than this fraction are ambiguous.
  double ambiguity_tolerance{0.01};
  /// Throw AmbiguousAssociationError instead of returning a flagged result.
  bool throw_on_ambiguous{true};
};

/// One way of explaining every pixel's peaks with k targets.
struct AssociationHypothesis {
  std::vector<TrackEstimate> tracks;
  /// assigned_t_s[target][pixel]: time of the peak given to that target, empty
  /// for pixels that reported nothing.
  std::vector<std::vector<std::optional<double>>> assigned_t_s;
  /// Sum over targets of the peak unnormalised joint log-likelihood.
  double log_score{0.0};
};

struct AssociationResult {
  AssociationHypothesis best;
  std::optional<AssociationHypothesis> runner_up;
  bool ambiguous{false};
  std::size_t hypotheses{0};
  /// Normalised fused map per target of the best hypothesis, same order as
  /// best.tracks.
  std::vector<ProbabilityMap> fused_maps;
};

class AmbiguousAssociationError : public Error {
 public:
  explicit AmbiguousAssociationError(AssociationResult result);
  const AssociationResult& result() const noexcept { return result_; }

 private:
  AssociationResult result_;
};

/// Exhaustive peak-to-target association followed by per-target fusion and
/// localisation. `peaks_per_pixel[i]` belongs to `geometry.pixels[i]`; an
/// empty list drops that pixel. For two targets a pixel with a single peak
/// gives it to one of them and contributes nothing to the other; every target
/// must draw on at least two pixels. The chosen hypothesis maximises the product of the
/// per-target fused-map peak values. Output tracks are ordered by (x, y) and
/// independent of the order peaks are listed in.
AssociationResult associate_and_localize(std::span<const std::vector<PeakEstimate>> peaks_per_pixel,
                                         const RetrievalGeometry& geometry, const GridSpec& grid,
                                         std::size_t k_targets,
                                         const AssociationOptions& options = {});

}  // namespace nlos
