#include "nlos/association.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace nlos {
namespace {

// Peak index per active pixel for one target; kNoPeak where the target takes
// nothing from that pixel.
using Tuple = std::vector<std::size_t>;
constexpr std::size_t kNoPeak = static_cast<std::size_t>(-1);

// A target needs two ellipses to be a point rather than an arc.
constexpr std::size_t kMinPixelsPerTarget = 2;

struct Candidate {
  std::vector<Tuple> targets;
  double log_score{0.0};
};

// Enumerates the per-pixel options: which peak each target takes.
std::vector<std::vector<std::vector<std::size_t>>> pixel_options(
    const std::vector<std::vector<PeakEstimate>>& sorted, std::size_t k) {
  std::vector<std::vector<std::vector<std::size_t>>> out;
  for (const auto& peaks : sorted) {
    std::vector<std::vector<std::size_t>> opts;
    const std::size_t p = peaks.size();
    if (k == 1) {
      for (std::size_t a = 0; a < p; ++a) opts.push_back({a});
    } else if (p == 1) {
      // One detected return: it belongs to exactly one of the two people.
      opts.push_back({0, kNoPeak});
      opts.push_back({kNoPeak, 0});
    } else {
      for (std::size_t a = 0; a < p; ++a) {
        for (std::size_t b = 0; b < p; ++b) {
          if (a != b) opts.push_back({a, b});
        }
      }
    }
    out.push_back(std::move(opts));
  }
  return out;
}

}  // namespace

AmbiguousAssociationError::AmbiguousAssociationError(AssociationResult result)
    : Error(ErrorCode::AmbiguousAssociation,
            "best and runner-up association scores are within tolerance"),
      result_(std::move(result)) {}

AssociationResult associate_and_localize(std::span<const std::vector<PeakEstimate>> peaks_per_pixel,
                                         const RetrievalGeometry& geometry, const GridSpec& grid,
                                         std::size_t k_targets, const AssociationOptions& options) {
  if (k_targets > kMaxTargets) {
    throw Error(ErrorCode::TooManyTargets, "at most " + std::to_string(kMaxTargets) +
                                               " simultaneous targets are supported, got " +
                                               std::to_string(k_targets));
  }
  if (k_targets == 0) throw ValidationError("k_targets", "must be >= 1");
  if (peaks_per_pixel.size() != geometry.pixels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "peak lists do not match the pixel count");
  }
  grid.validate();

  // Active pixels, peaks sorted by time so that input order cannot matter.
  std::vector<std::size_t> active;
  std::vector<std::vector<PeakEstimate>> sorted;
  for (std::size_t i = 0; i < peaks_per_pixel.size(); ++i) {
    if (peaks_per_pixel[i].empty()) continue;
    auto peaks = peaks_per_pixel[i];
    std::sort(peaks.begin(), peaks.end(), [](const PeakEstimate& a, const PeakEstimate& b) {
      return a.t_s < b.t_s || (a.t_s == b.t_s && a.sigma_s < b.sigma_s);
    });
    active.push_back(i);
    sorted.push_back(std::move(peaks));
  }
  if (active.empty()) throw Error(ErrorCode::NoTargetFound, "no pixel reported a peak");

  // One back-projection per (pixel, peak).
  std::vector<std::vector<ProbabilityMap>> ellipses(active.size());
  for (std::size_t a = 0; a < active.size(); ++a) {
    for (const auto& peak : sorted[a]) {
      ellipses[a].push_back(backproject(peak, geometry.laser_spot, geometry.pixels[active[a]],
                                        grid, options.sigma_source));
    }
  }

  std::map<Tuple, double> tuple_scores;
  auto score_tuple = [&](const Tuple& t) {
    auto it = tuple_scores.find(t);
    if (it != tuple_scores.end()) return it->second;
    std::vector<const ProbabilityMap*> maps;
    for (std::size_t a = 0; a < t.size(); ++a) {
      if (t[a] != kNoPeak) maps.push_back(&ellipses[a][t[a]]);
    }
    const auto joint = joint_log_likelihood(maps);
    const double best = *std::max_element(joint.begin(), joint.end());
    tuple_scores.emplace(t, best);
    return best;
  };

  const auto opts = pixel_options(sorted, k_targets);
  std::vector<Candidate> candidates;
  std::vector<std::size_t> choice(active.size(), 0);
  while (true) {
    std::vector<Tuple> targets(k_targets, Tuple(active.size()));
    for (std::size_t a = 0; a < active.size(); ++a) {
      for (std::size_t k = 0; k < k_targets; ++k) targets[k][a] = opts[a][choice[a]][k];
    }
    // Target labels are interchangeable: keep one representative per swap.
    const bool enough = std::all_of(targets.begin(), targets.end(), [](const Tuple& t) {
      return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [](std::size_t v) {
               return v != kNoPeak;
             })) >= kMinPixelsPerTarget;
    });
    if (enough && (k_targets == 1 || targets[0] <= targets[1])) {
      Candidate c{targets, 0.0};
      for (const auto& t : targets) c.log_score += score_tuple(t);
      candidates.push_back(std::move(c));
    }
    std::size_t a = 0;
    while (a < active.size() && ++choice[a] == opts[a].size()) choice[a++] = 0;
    if (a == active.size()) break;
  }

  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) { return x.log_score > y.log_score; });

  auto build = [&](const Candidate& c, std::vector<ProbabilityMap>* fused_out) {
    AssociationHypothesis h;
    h.log_score = c.log_score;
    struct Built {
      TrackEstimate track;
      std::vector<std::optional<double>> times;
      const ProbabilityMap* map;
    };
    std::vector<ProbabilityMap> fused;
    std::vector<Built> built;
    for (const auto& t : c.targets) {
      std::vector<ProbabilityMap> parts;
      std::vector<std::optional<double>> times(geometry.pixels.size());
      for (std::size_t a = 0; a < t.size(); ++a) {
        if (t[a] == kNoPeak) continue;
        parts.push_back(ellipses[a][t[a]]);
        times[active[a]] = sorted[a][t[a]].t_s;
      }
      fused.push_back(fuse(parts));
      built.push_back({localize(fused.back()), std::move(times), nullptr});
    }
    for (std::size_t k = 0; k < built.size(); ++k) built[k].map = &fused[k];
    std::sort(built.begin(), built.end(), [](const Built& x, const Built& y) {
      return x.track.x < y.track.x || (x.track.x == y.track.x && x.track.y < y.track.y);
    });
    std::vector<ProbabilityMap> ordered;
    for (std::size_t k = 0; k < built.size(); ++k) {
      built[k].track.label = "target-" + std::to_string(k);
      h.tracks.push_back(built[k].track);
      h.assigned_t_s.push_back(built[k].times);
      ordered.push_back(*built[k].map);
    }
    if (fused_out) *fused_out = std::move(ordered);
    return h;
  };

  if (candidates.empty()) {
    throw Error(ErrorCode::NoTargetFound,
                "cannot place " + std::to_string(k_targets) +
                    " targets: each needs peaks from at least two pixels");
  }

  AssociationResult result;
  result.hypotheses = candidates.size();
  result.best = build(candidates.front(), &result.fused_maps);
  if (candidates.size() > 1) {
    const double gap = candidates.front().log_score - candidates[1].log_score;
    result.ambiguous = gap < -std::log1p(-options.ambiguity_tolerance);
    // A runner-up whose ellipses never meet is not a competitor; leave it out.
    try {
      result.runner_up = build(candidates[1], nullptr);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyIntersection) throw;
    }
  }

  if (k_targets == 2) {
    const auto& t = result.best.tracks;
    if (std::hypot(t[0].x - t[1].x, t[0].y - t[1].y) < grid.resolution) {
      throw Error(ErrorCode::AmbiguousAssociation,
                  "both targets resolve to the same cell; peaks are not separable");
    }
  }
  if (result.ambiguous && options.throw_on_ambiguous) {
    throw AmbiguousAssociationError(std::move(result));
  }
  return result;
}

}  // namespace nlos
