#include "nlos/studies.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>

#include "nlos/error.hpp"
#include "nlos/parallel.hpp"

namespace nlos {
namespace {

Error with_pixel_context(const Error& e, std::size_t pixel) {
  return Error(e.code(), "pixel " + std::to_string(pixel) + ": " + e.what());
}

void process_pixel(PixelDiagnostics& diag, const RetrievalGeometry& geometry,
                   const AcquisitionParams& params, const ScenarioOptions& options) {
  const double delay = standoff_delay_s(geometry.standoff_m, params.period_s());
  const auto signal = crop(apply_offset(diag.signal, -delay), options.window);
  const auto background = crop(apply_offset(diag.background, -delay), options.window);
  diag.processed = subtract_background(signal, background);

  PeakDetectOptions detect;
  detect.max_peaks = options.k_targets;
  detect.min_snr = options.min_snr;
  detect.irf_sigma_s = params.irf_sigma_s;
  diag.seeds = detect_peaks(diag.processed, detect);
  if (diag.seeds.empty()) {
    diag.notes.push_back("no peak above threshold");
    return;
  }

  FitOptions fit;
  fit.irf_sigma_guess_s = std::max(params.irf_sigma_s, params.bin_width_s);
  fit.max_iterations = options.max_fit_iterations;
  const double focal = distance(geometry.laser_spot, geometry.pixels[diag.pixel_index]);
  for (const auto& peak : fit_peaks(diag.processed, diag.seeds, fit)) {
    if (kSpeedOfLight * peak.t_s <= focal) {
      diag.notes.push_back("dropped peak at t=" + std::to_string(peak.t_s) +
                           " s: shorter than the focal separation");
      continue;
    }
    diag.peaks.push_back(peak);
  }
}

ScenarioResult finish(const RetrievalGeometry& geometry, const AcquisitionParams& params,
                      const GridSpec& grid, std::vector<PixelDiagnostics> pixels,
                      const ScenarioOptions& options) {
  if (options.k_targets > kMaxTargets) {
    throw Error(ErrorCode::TooManyTargets,
                "at most " + std::to_string(kMaxTargets) + " targets are supported");
  }
  for (auto& diag : pixels) {
    try {
      process_pixel(diag, geometry, params, options);
    } catch (const Error& e) {
      throw with_pixel_context(e, diag.pixel_index);
    }
  }

  std::vector<std::vector<PeakEstimate>> peaks;
  std::size_t reporting = 0;
  for (const auto& diag : pixels) {
    peaks.push_back(diag.peaks);
    if (!diag.peaks.empty()) ++reporting;
  }
  if (reporting < 2) {
    throw Error(ErrorCode::NoTargetFound,
                std::to_string(reporting) + " pixel(s) reported a return; at least 2 are needed");
  }

  GridSpec plane = grid;
  plane.z_plane = geometry.scatter_height_z;
  AssociationOptions assoc;
  assoc.sigma_source = options.sigma_source;
  assoc.throw_on_ambiguous = !options.allow_ambiguous;

  ScenarioResult result;
  result.association = associate_and_localize(peaks, geometry, plane, options.k_targets, assoc);
  result.tracks = result.association.best.tracks;
  result.pixels = std::move(pixels);
  if (result.association.ambiguous) {
    result.warnings.push_back("ambiguous association: runner-up hypothesis within " +
                              std::to_string(assoc.ambiguity_tolerance * 100.0) + "% of best");
  }
  return result;
}

void check_inputs(const RetrievalGeometry& geometry, const AcquisitionParams& params,
                  const GridSpec& grid, const ScenarioOptions& options) {
  validate_geometry(geometry);
  params.validate();
  grid.validate();
  if (options.k_targets == 0) throw ValidationError("targets", "must be >= 1");
}

}  // namespace

ScenarioResult reconstruct(const RetrievalGeometry& geometry, const AcquisitionParams& params,
                           const GridSpec& grid, std::vector<TransientHistogram> signals,
                           std::vector<TransientHistogram> backgrounds,
                           const ScenarioOptions& options) {
  check_inputs(geometry, params, grid, options);
  const std::size_t n = geometry.pixels.size();
  if (signals.size() != n || backgrounds.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "expected one signal and one background per pixel (" +
                                              std::to_string(n) + ")");
  }
  std::vector<PixelDiagnostics> pixels(n);
  for (std::size_t i = 0; i < n; ++i) {
    pixels[i].pixel_index = i;
    pixels[i].signal = std::move(signals[i]);
    pixels[i].background = std::move(backgrounds[i]);
  }
  return finish(geometry, params, grid, std::move(pixels), options);
}

ScenarioResult reconstruct_median(const RetrievalGeometry& geometry,
                                  const AcquisitionParams& params, const GridSpec& grid,
                                  const std::vector<std::vector<TransientHistogram>>& frames,
                                  const ScenarioOptions& options) {
  check_inputs(geometry, params, grid, options);
  const std::size_t n = geometry.pixels.size();
  if (frames.size() != n) {
    throw Error(ErrorCode::ShapeMismatch, "expected frames for every pixel");
  }
  std::vector<PixelDiagnostics> pixels(n);
  for (std::size_t i = 0; i < n; ++i) {
    try {
      pixels[i].pixel_index = i;
      pixels[i].background = estimate_background_median(frames[i]);
      pixels[i].signal = frames[i].front();
    } catch (const Error& e) {
      throw with_pixel_context(e, i);
    }
  }
  return finish(geometry, params, grid, std::move(pixels), options);
}

ScenarioResult run_scenario(const Scene& scene, const AcquisitionParams& params,
                            const GridSpec& grid, const ScenarioOptions& options) {
  if (scene.pixel_count() < 2) throw ValidationError("pixels", "a scenario needs >= 2 pixels");
  check_inputs(scene.geometry(), params, grid, options);
  std::vector<TransientHistogram> signals;
  std::vector<TransientHistogram> backgrounds;
  for (std::size_t i = 0; i < scene.pixel_count(); ++i) {
    try {
      signals.push_back(simulate_histogram(scene, i, params));
      backgrounds.push_back(simulate_background(scene, i, params));
    } catch (const Error& e) {
      throw with_pixel_context(e, i);
    }
  }
  return reconstruct(scene.geometry(), params, grid, std::move(signals), std::move(backgrounds),
                     options);
}

TwoPersonResult run_two_person(const Scene& scene, const AcquisitionParams& params,
                               const GridSpec& grid, ScenarioOptions options) {
  if (scene.objects().size() != 2) {
    throw ValidationError("objects", "two-person study needs exactly 2 objects");
  }
  options.k_targets = 2;
  options.allow_ambiguous = true;
  TwoPersonResult out;
  out.scenario = run_scenario(scene, params, grid, options);
  out.ambiguous = out.scenario.association.ambiguous;
  return out;
}

SweepConfig SweepConfig::defaults() {
  SweepConfig c;
  c.object_positions = {{1.0, 0.6, 1.0}, {1.5, 1.0, 1.0}, {0.8, 1.2, 1.0}, {1.8, 0.7, 1.0}};
  c.acquisition.lambertian = false;
  c.grid = GridSpec{-1.0, 3.5, 0.0, 2.5, 0.02, 1.0};
  return c;
}

void SweepConfig::validate() const {
  if (!std::isfinite(d2_x_min) || !std::isfinite(d2_x_max) || !(d2_x_min <= d2_x_max)) {
    throw ValidationError("d2_x_range", "range must be finite with min <= max");
  }
  if (d2_x_steps < 2) throw ValidationError("d2_x_range.steps", "must be >= 2");
  if (object_positions.empty()) throw ValidationError("object_positions", "must not be empty");
  for (std::size_t i = 0; i < object_positions.size(); ++i) {
    if (!object_positions[i].is_finite()) {
      throw ValidationError("object_positions[" + std::to_string(i) + "]", "must be finite");
    }
  }
  if (trials_per_point < 10) throw ValidationError("trials_per_point", "must be >= 10");
  if (!laser_spot.is_finite()) throw ValidationError("laser_spot", "must be finite");
  if (!d1_position.is_finite()) throw ValidationError("d1_position", "must be finite");
  if (!(reflectivity >= 0.0)) throw ValidationError("reflectivity", "must be >= 0");
  acquisition.validate();
  grid.validate();
}

double SweepConfig::d2_x(std::size_t step) const {
  return d2_x_min + (d2_x_max - d2_x_min) * static_cast<double>(step) /
                        static_cast<double>(d2_x_steps - 1);
}

SweepResult run_baseline_sweep(const SweepConfig& config, std::size_t threads,
                               const SweepProgress& progress, const SweepCancel& cancel) {
  config.validate();
  const std::size_t n_obj = config.object_positions.size();
  const std::size_t n_trials = config.trials_per_point;
  const std::size_t total = config.d2_x_steps * n_obj * n_trials;

  struct Trial {
    bool ok{false};
    double x{0.0}, y{0.0}, pdf_sx{0.0}, pdf_sy{0.0};
  };
  std::vector<Trial> trials(total);

  ScenarioOptions options = config.scenario;
  options.k_targets = 1;

  std::atomic<std::size_t> done{0};
  std::atomic<bool> stopped{false};
  parallel_for(
      total,
      [&](std::size_t job) {
        if (stopped || (cancel && cancel())) {
          stopped = true;
          return;
        }
        const std::size_t step = job / (n_obj * n_trials);
        const std::size_t obj = (job / n_trials) % n_obj;
        const std::size_t trial = job % n_trials;
        const Point3 d2{config.d2_x(step), config.d1_position.y, config.d1_position.z};
        try {
          SceneSpec spec;
          spec.laser_spot = config.laser_spot;
          spec.pixels = {config.d1_position, d2};
          spec.objects = {{config.object_positions[obj], config.reflectivity, "object"}};
          spec.scatter_height_z = config.grid.z_plane;
          spec.wall_normal = config.wall_normal;
          spec.standoff_m = config.standoff_m;
          const Scene scene(std::move(spec));
          AcquisitionParams params = config.acquisition;
          params.rng_seed = derive_seed(config.seed, step, obj, trial);
          const auto result = run_scenario(scene, params, config.grid, options);
          const auto& t = result.tracks.front();
          trials[job] = {true, t.x, t.y, t.sigma_x, t.sigma_y};
        } catch (const Error&) {
          trials[job].ok = false;
        }
        if (progress) progress(++done, total);
      },
      threads);
  if (stopped) throw Error(ErrorCode::Interrupted, "sweep cancelled before completion");

  SweepResult result;
  for (std::size_t step = 0; step < config.d2_x_steps; ++step) {
    for (std::size_t obj = 0; obj < n_obj; ++obj) {
      SweepPoint pt;
      pt.step = step;
      pt.d2_x = config.d2_x(step);
      pt.baseline = std::abs(pt.d2_x - config.d1_position.x);
      pt.object_index = obj;
      pt.object = config.object_positions[obj];
      pt.trials = n_trials;
      const std::size_t base = (step * n_obj + obj) * n_trials;
      double sx = 0.0, sy = 0.0, spx = 0.0, spy = 0.0;
      for (std::size_t k = 0; k < n_trials; ++k) {
        const auto& t = trials[base + k];
        if (!t.ok) continue;
        ++pt.successes;
        sx += t.x;
        sy += t.y;
        spx += t.pdf_sx;
        spy += t.pdf_sy;
      }
      pt.valid = 2 * pt.successes > n_trials;
      if (pt.successes > 0) {
        const double m = static_cast<double>(pt.successes);
        const double mx = sx / m;
        const double my = sy / m;
        double vx = 0.0, vy = 0.0;
        for (std::size_t k = 0; k < n_trials; ++k) {
          const auto& t = trials[base + k];
          if (!t.ok) continue;
          vx += (t.x - mx) * (t.x - mx);
          vy += (t.y - my) * (t.y - my);
        }
        const double dof = std::max(1.0, m - 1.0);
        pt.error_x = std::abs(mx - pt.object.x);
        pt.error_y = std::abs(my - pt.object.y);
        pt.sigma_x = std::sqrt(vx / dof);
        pt.sigma_y = std::sqrt(vy / dof);
        pt.pdf_sigma_x = spx / m;
        pt.pdf_sigma_y = spy / m;
      }
      result.points.push_back(pt);
    }
  }
  return result;
}

}  // namespace nlos
