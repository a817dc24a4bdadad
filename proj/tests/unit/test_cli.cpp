#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "nlos/forward_sim.hpp"
#include "nlos/io/csv_formats.hpp"
#include "nlos/io/json_formats.hpp"
#include "nlos/io/manifest.hpp"
#include "test_support.hpp"

using namespace nlos;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run nlos_cli(std::vector<std::string> args, std::function<bool()> interrupted = {}) {
  std::ostringstream out, err;
  args.insert(args.begin(), "nlos");
  const cli::Context ctx{out, err, std::move(interrupted)};
  const int code = cli::run(args, ctx);
  return {code, out.str(), err.str()};
}

io::SceneDocument scene_doc(std::vector<Point3> objects) {
  io::SceneDocument doc;
  doc.scene = fixtures::four_pixel_spec(std::move(objects));
  doc.acquisition.rng_seed = 21;
  doc.grid = GridSpec{-2.0, 2.0, 0.0, 2.6, 0.02, 1.0};
  return doc;
}

std::string write_scene(const fs::path& dir, const io::SceneDocument& doc, const std::string& name = "scene.json") {
  const auto path = dir / name;
  io::write_text_file(path, io::serialize_scene_document(doc));
  return path.string();
}

std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    files.emplace_back(e.path().filename().string(), io::read_text_file(e.path()));
  }
  std::sort(files.begin(), files.end());
  return files;
}

nlohmann::json manifest(const fs::path& dir) { return nlohmann::json::parse(io::read_text_file(dir / "manifest.json")); }

// Pins manifest timestamps for the lifetime of a test.
struct FixedEpoch {
  FixedEpoch() { ::setenv("SOURCE_DATE_EPOCH", "1700000000", 1); }
  ~FixedEpoch() { ::unsetenv("SOURCE_DATE_EPOCH"); }
};

}  // namespace

TEST(Cli, SimulateWritesEightHistogramsAndManifest) {
  fixtures::TempDir tmp("sim");
  const auto scene = write_scene(tmp.path, scene_doc({{0.3, 1.0, 1.0}}));
  const auto r = nlos_cli({"simulate", "--scene", scene, "--out", (tmp.path / "h").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  std::size_t csv = 0;
  for (const auto& e : fs::directory_iterator(tmp.path / "h")) csv += e.path().extension() == ".csv";
  EXPECT_EQ(csv, 8u);
  const auto m = manifest(tmp.path / "h");
  EXPECT_EQ(m["status"], "complete");
  EXPECT_EQ(m["input"]["sha256"], io::sha256_hex(io::read_text_file(scene)));
  EXPECT_EQ(m["outputs"].size(), 8u);
  EXPECT_EQ(m["seed"], 21);
  for (const auto& o : m["outputs"]) {
    EXPECT_EQ(o["sha256"], io::sha256_hex(io::read_text_file(tmp.path / "h" / o["path"].get<std::string>())));
  }
}

TEST(Cli, SimulateRejectsDuplicatePixels) {
  fixtures::TempDir tmp("dup");
  auto doc = scene_doc({{0.3, 1.0, 1.0}});
  doc.scene.pixels[3] = doc.scene.pixels[1];
  const auto r = nlos_cli({"simulate", "--scene", write_scene(tmp.path, doc), "--out", (tmp.path / "h").string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("/pixels/3"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("pairwise distinct"), std::string::npos) << r.err;
}

TEST(Cli, ExitCodesForBadInvocations) {
  fixtures::TempDir tmp("codes");
  EXPECT_EQ(nlos_cli({"simulate", "--scene", (tmp.path / "nope.json").string(), "--out", tmp.path.string()}).code,
            cli::kExitIo);
  EXPECT_EQ(nlos_cli({"simulate", "--bogus"}).code, cli::kExitInvalid);
  EXPECT_EQ(nlos_cli({}).code, cli::kExitInvalid);
  EXPECT_EQ(nlos_cli({"--help"}).code, cli::kExitOk);
  io::write_text_file(tmp.path / "broken.json", "{\n \"laser_spot\": [0,0,1],\n ]");
  const auto r = nlos_cli({"simulate", "--scene", (tmp.path / "broken.json").string(), "--out", tmp.path.string()});
  EXPECT_EQ(r.code, cli::kExitInvalid);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
  const auto scene = write_scene(tmp.path, scene_doc({{0.3, 1.0, 1.0}}));
  EXPECT_EQ(nlos_cli({"reconstruct", "--scene", scene, "--out", tmp.path.string(), "--window", "5e-9"}).code,
            cli::kExitInvalid);
  // An output path that is a regular file cannot become a directory.
  EXPECT_EQ(nlos_cli({"simulate", "--scene", scene, "--out", scene}).code, cli::kExitIo);
}

TEST(Cli, SimulateIsByteIdenticalForTheSameSeed) {
  FixedEpoch epoch;
  fixtures::TempDir tmp("det");
  const auto scene = write_scene(tmp.path, scene_doc({{0.3, 1.0, 1.0}}));
  for (const char* d : {"a", "b"}) {
    ASSERT_EQ(nlos_cli({"simulate", "--scene", scene, "--seed", "5", "--out", (tmp.path / "run").string()}).code, 0);
    fs::rename(tmp.path / "run", tmp.path / d);
  }
  EXPECT_EQ(snapshot(tmp.path / "a"), snapshot(tmp.path / "b"));
  ASSERT_EQ(nlos_cli({"simulate", "--scene", scene, "--seed", "6", "--out", (tmp.path / "c").string()}).code, 0);
  EXPECT_NE(io::read_text_file(tmp.path / "a" / "pixel_0_signal.csv"),
            io::read_text_file(tmp.path / "c" / "pixel_0_signal.csv"));
}

TEST(Cli, ReconstructFromFilesMatchesInMemoryRun) {
  fixtures::TempDir tmp("rec");
  const auto scene = write_scene(tmp.path, scene_doc({{0.3, 1.0, 1.0}}));
  ASSERT_EQ(nlos_cli({"simulate", "--scene", scene, "--out", (tmp.path / "h").string()}).code, 0);
  const auto a = nlos_cli({"reconstruct", "--scene", scene, "--histograms", (tmp.path / "h").string(), "--out",
                           (tmp.path / "ra").string(), "--maps"});
  ASSERT_EQ(a.code, 0) << a.err;
  const auto b = nlos_cli({"reconstruct", "--scene", scene, "--out", (tmp.path / "rb").string()});
  ASSERT_EQ(b.code, 0) << b.err;
  EXPECT_EQ(io::read_text_file(tmp.path / "ra" / "tracks.json"), io::read_text_file(tmp.path / "rb" / "tracks.json"));
  EXPECT_EQ(a.out, b.out);

  const auto tracks = nlohmann::json::parse(io::read_text_file(tmp.path / "ra" / "tracks.json"));
  EXPECT_EQ(tracks["format"], "nlos-tracks/1");
  EXPECT_NEAR(tracks["tracks"][0]["x"].get<double>(), 0.3, 0.1);
  EXPECT_NEAR(tracks["tracks"][0]["y"].get<double>(), 1.0, 0.1);
  EXPECT_TRUE(fs::exists(tmp.path / "ra" / "map_fused_target-0.csv"));
  EXPECT_TRUE(fs::exists(tmp.path / "ra" / "map_pixel_3_peak_0.csv"));
  const auto m = manifest(tmp.path / "ra");
  EXPECT_EQ(m["status"], "complete");
  EXPECT_EQ(m["parameters"]["histograms"].size(), 8u);
}

TEST(Cli, MissingBackgroundsFallBackToMedianOnlyWithThreeFrames) {
  fixtures::TempDir tmp("median");
  const auto doc = scene_doc({{0.3, 1.0, 1.0}});
  const auto scene = write_scene(tmp.path, doc);
  const fs::path h = tmp.path / "h";
  ASSERT_EQ(nlos_cli({"simulate", "--scene", scene, "--out", h.string()}).code, 0);
  for (std::size_t i = 0; i < 4; ++i) fs::remove(h / ("pixel_" + std::to_string(i) + "_background.csv"));

  const auto one = nlos_cli({"reconstruct", "--scene", scene, "--histograms", h.string(), "--out",
                             (tmp.path / "r1").string()});
  EXPECT_EQ(one.code, cli::kExitInvalid);
  EXPECT_NE(one.err.find("fewer than 3"), std::string::npos) << one.err;

  // Two more frames in which the person has walked out of view.
  const Scene empty = Scene(doc.scene).with_objects({});
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::uint64_t f = 1; f <= 2; ++f) {
      std::ostringstream os;
      io::write_histogram_csv(os, simulate_frame(empty, i, doc.acquisition, f));
      io::write_text_file(h / ("pixel_" + std::to_string(i) + "_signal_" + std::to_string(f) + ".csv"), os.str());
    }
  }
  const auto three = nlos_cli({"reconstruct", "--scene", scene, "--histograms", h.string(), "--out",
                               (tmp.path / "r3").string()});
  ASSERT_EQ(three.code, 0) << three.err;
  EXPECT_NE(three.err.find("median"), std::string::npos);
  const auto tracks = nlohmann::json::parse(io::read_text_file(tmp.path / "r3" / "tracks.json"));
  EXPECT_NEAR(tracks["tracks"][0]["x"].get<double>(), 0.3, 0.1);
  EXPECT_EQ(manifest(tmp.path / "r3")["parameters"]["background"], "median");
}

TEST(Cli, TooManyTargetsAndNoTarget) {
  fixtures::TempDir tmp("targets");
  const auto scene = write_scene(tmp.path, scene_doc({{0.3, 1.0, 1.0}}));
  const auto r3 = nlos_cli({"reconstruct", "--scene", scene, "--targets", "3", "--out", (tmp.path / "r").string()});
  EXPECT_EQ(r3.code, cli::kExitInvalid);
  EXPECT_NE(r3.err.find("TooManyTargets"), std::string::npos);

  auto dark = scene_doc({{0.3, 1.0, 1.0}});
  dark.scene.objects[0].reflectivity = 0.0;
  const auto scene_dark = write_scene(tmp.path, dark, "dark.json");
  const auto r = nlos_cli({"reconstruct", "--scene", scene_dark, "--out", (tmp.path / "nt").string()});
  EXPECT_EQ(r.code, cli::kExitNoTarget) << r.err;
  EXPECT_EQ(manifest(tmp.path / "nt")["status"], "failed");
  EXPECT_FALSE(fs::exists(tmp.path / "nt" / "tracks.json"));
}

TEST(Cli, TwoTargetReconstruction) {
  fixtures::TempDir tmp("two");
  const auto scene = write_scene(tmp.path, scene_doc({{-0.5, 0.9, 1.0}, {0.7, 1.7, 1.0}}));
  const auto r = nlos_cli({"reconstruct", "--scene", scene, "--targets", "2", "--out", tmp.path.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = nlohmann::json::parse(io::read_text_file(tmp.path / "tracks.json"));
  ASSERT_EQ(t["tracks"].size(), 2u);
  EXPECT_NEAR(t["tracks"][0]["x"].get<double>(), -0.5, 0.5);
  EXPECT_NEAR(t["tracks"][1]["x"].get<double>(), 0.7, 0.5);
  EXPECT_FALSE(t["association"]["runner_up"].is_null());
}

TEST(Cli, SweepRowsDeterminismAndInterruption) {
  FixedEpoch epoch;
  fixtures::TempDir tmp("sweep");
  auto c = SweepConfig::defaults();
  c.d2_x_min = 0.2;
  c.d2_x_max = 1.0;
  c.d2_x_steps = 3;
  c.object_positions = {{1.0, 0.6, 1.0}, {0.8, 1.2, 1.0}};
  c.trials_per_point = 10;
  const auto cfg = tmp.path / "sweep.json";
  io::write_text_file(cfg, io::serialize_sweep_config(c));

  for (const char* d : {"a", "b"}) {
    const auto r = nlos_cli({"sweep", "--config", cfg.string(), "--out", (tmp.path / "run").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    fs::rename(tmp.path / "run", tmp.path / d);
  }
  EXPECT_EQ(snapshot(tmp.path / "a"), snapshot(tmp.path / "b"));
  const auto csv = io::read_text_file(tmp.path / "a" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2 + 3 * 2 * 6);
  EXPECT_EQ(manifest(tmp.path / "a")["status"], "complete");

  int polls = 0;
  const auto r = nlos_cli({"sweep", "--config", cfg.string(), "--out", (tmp.path / "int").string(), "--threads", "1"},
                          [&] { return ++polls > 5; });
  EXPECT_EQ(r.code, cli::kExitInterrupted);
  EXPECT_EQ(manifest(tmp.path / "int")["status"], "incomplete");
  EXPECT_FALSE(fs::exists(tmp.path / "int" / "sweep.csv"));

  EXPECT_EQ(nlos_cli({"sweep", "--config", cfg.string(), "--trials", "3", "--out", tmp.path.string()}).code,
            cli::kExitInvalid);
}
