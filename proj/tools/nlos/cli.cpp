#include "cli.hpp"

#include <charconv>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <CLI11.hpp>

#include "nlos/error.hpp"
#include "nlos/forward_sim.hpp"
#include "nlos/io/csv_formats.hpp"
#include "nlos/io/json_formats.hpp"
#include "nlos/io/manifest.hpp"
#include "nlos/parallel.hpp"
#include "nlos/studies.hpp"

#ifndef NLOS_VERSION
#define NLOS_VERSION "0.0.0"
#endif

namespace nlos::cli {
namespace fs = std::filesystem;
using nlohmann::json;

std::atomic<bool>& interrupt_flag() {
  static std::atomic<bool> flag{false};
  return flag;
}

namespace {

// Flags shared by every subcommand that touches the pipeline.
struct CommonFlags {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<double> grid_res;
  bool no_lambertian{false};
  std::string window;
  std::size_t threads{0};
};

struct SimulateFlags {
  std::string scene;
  std::size_t frames{1};
};

struct ReconstructFlags {
  std::string scene;
  std::string histograms;
  std::size_t targets{1};
  std::string background{"file"};
  double min_snr{3.0};
  bool maps{false};
};

struct SweepFlags {
  std::string config;
  std::optional<std::size_t> trials;
  bool progress{false};
};

TimeWindow parse_window(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ValidationError("--window", "expected start,end in seconds");
  auto number = [&](std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      throw ValidationError("--window", "'" + std::string(s) + "' is not a number");
    }
    return v;
  };
  const std::string_view all(text);
  TimeWindow w{number(all.substr(0, comma)), number(all.substr(comma + 1))};
  if (!(w.end_s > w.start_s)) throw ValidationError("--window", "end must exceed start");
  return w;
}

std::string signal_name(std::size_t pixel, std::size_t frame) {
  std::string name = "pixel_" + std::to_string(pixel) + "_signal";
  if (frame > 0) name += "_" + std::to_string(frame);
  return name + ".csv";
}

std::string background_name(std::size_t pixel) {
  return "pixel_" + std::to_string(pixel) + "_background.csv";
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw io::IoError("cannot create output directory '" + dir.string() + "'");
}

// Every command shares the manifest lifecycle: written as "incomplete"
// before any result, then finalised.
class ManifestWriter {
 public:
  ManifestWriter(fs::path dir, const std::vector<std::string>& args) : dir_(std::move(dir)) {
    m_.tool_version = NLOS_VERSION;
    m_.command = args;
    m_.started_at = io::utc_timestamp();
  }
  io::RunManifest& manifest() { return m_; }
  void begin() { m_.write(dir_); started_ = true; }
  void add_output(const std::string& name, const std::string& content) {
    io::write_text_file(dir_ / name, content);
    m_.outputs.push_back({name, io::sha256_hex(content)});
  }
  void finish(io::RunStatus status, const std::string& error = {}) {
    if (!started_) return;
    m_.status = status;
    m_.error = error;
    m_.finished_at = io::utc_timestamp();
    try {
      m_.write(dir_);
    } catch (const io::IoError&) {
      // Reported by the caller's own failure path.
    }
  }

 private:
  fs::path dir_;
  io::RunManifest m_;
  bool started_{false};
};

io::SceneDocument load_scene(const std::string& path, std::string* text_out) {
  std::string text = io::read_text_file(path);
  auto doc = io::parse_scene_document(text);
  if (text_out) *text_out = std::move(text);
  return doc;
}

void apply_common(const CommonFlags& f, AcquisitionParams& params, GridSpec& grid) {
  if (f.seed) params.rng_seed = *f.seed;
  if (f.no_lambertian) params.lambertian = false;
  if (f.grid_res) grid.resolution = *f.grid_res;
  params.validate();
  grid.validate();
}

json scenario_parameters(const AcquisitionParams& params, const GridSpec& grid,
                         const ScenarioOptions& options) {
  return {{"acquisition", io::to_json(params)},
          {"grid", io::to_json(grid)},
          {"targets", options.k_targets},
          {"window", json::array({options.window.start_s, options.window.end_s})},
          {"min_snr", options.min_snr}};
}

int cmd_simulate(const CommonFlags& common, const SimulateFlags& f, const std::vector<std::string>& args,
                 const Context& ctx) {
  std::string scene_text;
  auto doc = load_scene(f.scene, &scene_text);
  apply_common(common, doc.acquisition, doc.grid);
  if (f.frames == 0) throw ValidationError("--frames", "must be >= 1");
  const Scene scene(doc.scene);
  const auto& params = doc.acquisition;

  const fs::path dir(common.out);
  ensure_dir(dir);
  ManifestWriter mw(dir, args);
  auto& m = mw.manifest();
  m.input_file = f.scene;
  m.input_sha256 = io::sha256_hex(scene_text);
  m.seed = params.rng_seed;
  m.parameters = {{"acquisition", io::to_json(params)}, {"frames", f.frames}};
  mw.begin();

  try {
    const std::size_t n = scene.pixel_count();
    // Slot f < frames holds signal frame f; slot `frames` holds the background.
    std::vector<std::string> files(n * (f.frames + 1));
    parallel_for(
        files.size(),
        [&](std::size_t job) {
          const std::size_t pixel = job / (f.frames + 1);
          const std::size_t slot = job % (f.frames + 1);
          const auto hist = slot < f.frames ? simulate_frame(scene, pixel, params, slot)
                                            : simulate_background(scene, pixel, params);
          std::ostringstream os;
          io::write_histogram_csv(os, hist);
          files[job] = os.str();
        },
        common.threads);
    for (std::size_t pixel = 0; pixel < n; ++pixel) {
      for (std::size_t slot = 0; slot <= f.frames; ++slot) {
        const auto name = slot < f.frames ? signal_name(pixel, slot) : background_name(pixel);
        mw.add_output(name, files[pixel * (f.frames + 1) + slot]);
      }
    }
  } catch (const std::exception& e) {
    mw.finish(io::RunStatus::Failed, e.what());
    throw;
  }
  mw.finish(io::RunStatus::Complete);
  ctx.out << "wrote " << mw.manifest().outputs.size() << " histograms to " << dir.string() << "\n";
  return kExitOk;
}

struct LoadedHistograms {
  std::vector<std::vector<TransientHistogram>> signal_frames;
  std::vector<TransientHistogram> backgrounds;
  bool backgrounds_complete{true};
  json inputs = json::array();
};

TransientHistogram load_histogram(const fs::path& path, std::size_t pixel, const AcquisitionParams& params,
                                  json& inputs) {
  const std::string text = io::read_text_file(path);
  inputs.push_back({{"path", path.filename().string()}, {"sha256", io::sha256_hex(text)}});
  std::istringstream is(text);
  TransientHistogram h;
  try {
    h = io::read_histogram_csv(is);
  } catch (const ValidationError& e) {
    throw ValidationError(path.filename().string(), e.what());
  }
  if (h.pixel_index != pixel) {
    throw ValidationError(path.filename().string(), "pixel header is " + std::to_string(h.pixel_index) +
                                                        ", expected " + std::to_string(pixel));
  }
  if (h.bin_width_s != params.bin_width_s) {
    throw ValidationError(path.filename().string(),
                          "bin width " + io::format_double(h.bin_width_s) +
                              " s does not match the scene's " + io::format_double(params.bin_width_s) + " s");
  }
  return h;
}

LoadedHistograms load_histogram_dir(const fs::path& dir, std::size_t pixels, const AcquisitionParams& params) {
  if (!fs::is_directory(dir)) throw io::IoError("histogram directory '" + dir.string() + "' not found");
  LoadedHistograms out;
  out.signal_frames.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i) {
    for (std::size_t frame = 0;; ++frame) {
      const auto path = dir / signal_name(i, frame);
      if (frame > 0 && !fs::exists(path)) break;
      out.signal_frames[i].push_back(load_histogram(path, i, params, out.inputs));
    }
    const auto bg = dir / background_name(i);
    if (fs::exists(bg)) {
      out.backgrounds.push_back(load_histogram(bg, i, params, out.inputs));
    } else {
      out.backgrounds_complete = false;
    }
  }
  return out;
}

void write_maps(ManifestWriter& mw, const ScenarioResult& result, const RetrievalGeometry& geometry,
                const GridSpec& grid, SigmaSource source) {
  GridSpec plane = grid;
  plane.z_plane = geometry.scatter_height_z;
  for (const auto& diag : result.pixels) {
    for (std::size_t j = 0; j < diag.peaks.size(); ++j) {
      const auto map = backproject(diag.peaks[j], geometry.laser_spot, geometry.pixels[diag.pixel_index], plane,
                                   source);
      std::ostringstream os;
      io::write_map_csv(os, map);
      mw.add_output("map_pixel_" + std::to_string(diag.pixel_index) + "_peak_" + std::to_string(j) + ".csv",
                    os.str());
    }
  }
  const auto& tracks = result.association.best.tracks;
  for (std::size_t k = 0; k < result.association.fused_maps.size(); ++k) {
    std::ostringstream os;
    io::write_map_csv(os, result.association.fused_maps[k]);
    mw.add_output("map_fused_" + tracks[k].label + ".csv", os.str());
  }
}

int cmd_reconstruct(const CommonFlags& common, const ReconstructFlags& f, const std::vector<std::string>& args,
                    const Context& ctx) {
  std::string scene_text;
  auto doc = load_scene(f.scene, &scene_text);
  apply_common(common, doc.acquisition, doc.grid);
  if (f.background != "file" && f.background != "median") {
    throw ValidationError("--background", "expected 'file' or 'median'");
  }
  ScenarioOptions options;
  options.k_targets = f.targets;
  options.min_snr = f.min_snr;
  options.allow_ambiguous = true;
  if (!common.window.empty()) options.window = parse_window(common.window);
  if (options.k_targets == 0) throw ValidationError("--targets", "must be >= 1");
  if (options.k_targets > kMaxTargets) {
    throw Error(ErrorCode::TooManyTargets,
                "--targets: at most " + std::to_string(kMaxTargets) + " targets are supported");
  }
  const Scene scene(doc.scene);
  const auto& params = doc.acquisition;

  const fs::path dir(common.out);
  ensure_dir(dir);
  ManifestWriter mw(dir, args);
  auto& m = mw.manifest();
  m.input_file = f.scene;
  m.input_sha256 = io::sha256_hex(scene_text);
  m.seed = params.rng_seed;
  m.parameters = scenario_parameters(params, doc.grid, options);

  try {
    ScenarioResult result;
    std::vector<std::string> warnings;
    if (f.histograms.empty()) {
      m.parameters["source"] = "simulated";
      mw.begin();
      result = run_scenario(scene, params, doc.grid, options);
    } else {
      auto loaded = load_histogram_dir(f.histograms, scene.pixel_count(), params);
      m.parameters["source"] = "histograms";
      m.parameters["histograms"] = loaded.inputs;
      bool use_median = f.background == "median";
      if (!use_median && !loaded.backgrounds_complete) {
        for (const auto& frames : loaded.signal_frames) {
          if (frames.size() < 3) {
            throw ValidationError("--histograms",
                                  "background files are missing and fewer than 3 signal frames are available "
                                  "for a median estimate");
          }
        }
        use_median = true;
        warnings.push_back("background files missing; using the per-bin median of the signal frames");
      }
      m.parameters["background"] = use_median ? "median" : "file";
      mw.begin();
      if (use_median) {
        result = reconstruct_median(scene.geometry(), params, doc.grid, loaded.signal_frames, options);
      } else {
        std::vector<TransientHistogram> signals;
        for (auto& frames : loaded.signal_frames) signals.push_back(std::move(frames.front()));
        result = reconstruct(scene.geometry(), params, doc.grid, std::move(signals), std::move(loaded.backgrounds),
                             options);
      }
    }
    result.warnings.insert(result.warnings.begin(), warnings.begin(), warnings.end());
    mw.add_output("tracks.json", io::scenario_to_json(result).dump(2) + "\n");
    if (f.maps) write_maps(mw, result, scene.geometry(), doc.grid, options.sigma_source);

    for (const auto& w : result.warnings) ctx.err << "warning: " << w << "\n";
    for (const auto& t : result.tracks) {
      ctx.out << t.label << " x=" << io::format_double(t.x) << " y=" << io::format_double(t.y)
              << " sigma_x=" << io::format_double(t.sigma_x) << " sigma_y=" << io::format_double(t.sigma_y)
              << "\n";
    }
  } catch (const std::exception& e) {
    if (!fs::exists(dir / "manifest.json")) mw.begin();
    mw.finish(io::RunStatus::Failed, e.what());
    throw;
  }
  mw.finish(io::RunStatus::Complete);
  return kExitOk;
}

int cmd_sweep(const CommonFlags& common, const SweepFlags& f, const std::vector<std::string>& args,
              const Context& ctx) {
  SweepConfig config = SweepConfig::defaults();
  std::string config_text;
  if (!f.config.empty()) {
    config_text = io::read_text_file(f.config);
    config = io::parse_sweep_config(config_text);
  }
  if (common.seed) config.seed = *common.seed;
  if (common.no_lambertian) config.acquisition.lambertian = false;
  if (common.grid_res) config.grid.resolution = *common.grid_res;
  if (!common.window.empty()) config.scenario.window = parse_window(common.window);
  if (f.trials) config.trials_per_point = *f.trials;
  config.validate();

  const fs::path dir(common.out);
  ensure_dir(dir);
  ManifestWriter mw(dir, args);
  auto& m = mw.manifest();
  m.input_file = f.config.empty() ? std::string("<built-in defaults>") : f.config;
  m.input_sha256 = f.config.empty() ? std::string() : io::sha256_hex(config_text);
  m.seed = config.seed;
  m.parameters = json::parse(io::serialize_sweep_config(config));
  mw.begin();

  SweepProgress progress;
  if (f.progress) {
    progress = [&](std::size_t done, std::size_t total) {
      if (done % 100 == 0 || done == total) ctx.err << "\r" << done << "/" << total << std::flush;
      if (done == total) ctx.err << "\n";
    };
  }
  try {
    const auto result = run_baseline_sweep(config, common.threads, progress, ctx.interrupted);
    std::ostringstream os;
    io::write_sweep_csv(os, result);
    mw.add_output("sweep.csv", os.str());
  } catch (const Error& e) {
    // An interrupted run keeps its "incomplete" manifest.
    if (e.code() == ErrorCode::Interrupted) throw;
    mw.finish(io::RunStatus::Failed, e.what());
    throw;
  } catch (const std::exception& e) {
    mw.finish(io::RunStatus::Failed, e.what());
    throw;
  }
  mw.finish(io::RunStatus::Complete);
  ctx.out << "wrote sweep.csv to " << dir.string() << "\n";
  return kExitOk;
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NoTargetFound:
    case ErrorCode::EmptyIntersection:
    case ErrorCode::NonConvergence:
    case ErrorCode::DegenerateFit:
      return kExitNoTarget;
    case ErrorCode::Interrupted:
      return kExitInterrupted;
    default:
      return kExitInvalid;
  }
}

void add_common(CLI::App* sub, CommonFlags& c, bool needs_out) {
  sub->add_option("--seed", c.seed, "Master RNG seed (overrides the input file)");
  auto* out = sub->add_option("--out", c.out, "Output directory");
  if (needs_out) out->required();
  sub->add_option("--grid-res", c.grid_res, "Grid cell size in metres")->check(CLI::PositiveNumber);
  sub->add_flag("--no-lambertian", c.no_lambertian, "Disable cosine factors in the forward model");
  sub->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

}  // namespace

int run(const std::vector<std::string>& args, const Context& ctx) {
  CLI::App app{"Non-line-of-sight tracking from wall-scattered photon timing", "nlos"};
  app.set_version_flag("--version", NLOS_VERSION);
  app.require_subcommand(1);

  CommonFlags common;
  SimulateFlags sim;
  ReconstructFlags rec;
  SweepFlags sweep;

  auto* s = app.add_subcommand("simulate", "Write signal and background histograms for a scene");
  s->add_option("--scene", sim.scene, "Scene JSON file")->required();
  s->add_option("--frames", sim.frames, "Signal frames per pixel");
  add_common(s, common, true);

  auto* r = app.add_subcommand("reconstruct", "Localise hidden targets from histograms or a simulated scene");
  r->add_option("--scene", rec.scene, "Scene JSON file (geometry and acquisition)")->required();
  r->add_option("--histograms", rec.histograms, "Directory written by 'simulate'; omit to simulate in memory");
  r->add_option("--targets", rec.targets, "Number of targets to localise");
  r->add_option("--background", rec.background, "Background source: file or median");
  r->add_option("--window", common.window, "Time window start,end in seconds");
  r->add_option("--min-snr", rec.min_snr, "Peak detection threshold");
  r->add_flag("--maps", rec.maps, "Also write per-peak and fused probability maps");
  add_common(r, common, true);

  auto* w = app.add_subcommand("sweep", "Run the detector-baseline study");
  w->add_option("--config", sweep.config, "Sweep config JSON (defaults built in)");
  w->add_option("--trials", sweep.trials, "Override trials per point");
  w->add_option("--window", common.window, "Time window start,end in seconds");
  w->add_flag("--progress", sweep.progress, "Print progress to stderr");
  add_common(w, common, true);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();  // argv[0]
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, ctx.out, ctx.err);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (s->parsed()) return cmd_simulate(common, sim, args, ctx);
    if (r->parsed()) return cmd_reconstruct(common, rec, args, ctx);
    return cmd_sweep(common, sweep, args, ctx);
  } catch (const io::IoError& e) {
    ctx.err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    ctx.err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    ctx.err << "error: " << e.what() << "\n";
    return kExitIo;
  }
}

}  // namespace nlos::cli
