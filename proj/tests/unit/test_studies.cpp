#include <gtest/gtest.h>

#include <cmath>

#include "nlos/error.hpp"
#include "nlos/studies.hpp"
#include "test_support.hpp"

using namespace nlos;

namespace {

GridSpec grid() { return GridSpec{-2.0, 2.0, 0.0, 2.6, 0.02, 1.0}; }

SweepConfig small_sweep() {
  SweepConfig c = SweepConfig::defaults();
  c.d2_x_min = 0.2;
  c.d2_x_max = 1.0;
  c.d2_x_steps = 3;
  c.object_positions = {{1.0, 0.6, 1.0}, {0.8, 1.2, 1.0}};
  c.trials_per_point = 10;
  return c;
}

}  // namespace

TEST(Scenario, SinglePersonOneMetreBehindCorner) {
  const Scene sc(fixtures::four_pixel_spec({{0.3, 1.0, 1.0}}));
  AcquisitionParams p;
  p.rng_seed = 5;
  const auto r = run_scenario(sc, p, grid());
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_LT(std::abs(r.tracks[0].x - 0.3), 0.5);
  EXPECT_LT(std::abs(r.tracks[0].y - 1.0), 0.5);
  ASSERT_EQ(r.pixels.size(), 4u);
  for (const auto& d : r.pixels) {
    EXPECT_EQ(d.peaks.size(), 1u);
    EXPECT_FALSE(d.processed.counts.empty());
  }
}

TEST(Scenario, DeepTargetStillLocalised) {
  const Scene sc(fixtures::four_pixel_spec({{-0.2, 1.8, 1.0}}));
  AcquisitionParams p;
  p.rng_seed = 6;
  const auto r = run_scenario(sc, p, grid());
  EXPECT_LT(std::abs(r.tracks[0].y - 1.8), 0.5);
}

TEST(Scenario, ZeroReflectivityIsNoTarget) {
  auto spec = fixtures::four_pixel_spec({{0.3, 1.0, 1.0}});
  spec.objects[0].reflectivity = 0.0;
  try {
    run_scenario(Scene(spec), AcquisitionParams{}, grid());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoTargetFound);
  }
}

TEST(Scenario, ErrorsCarryPixelContext) {
  const Scene sc(fixtures::four_pixel_spec({{0.3, 5.0, 1.0}}));
  try {
    run_scenario(sc, AcquisitionParams{}, grid());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Aliasing);
    EXPECT_EQ(std::string(e.what()).rfind("pixel 0:", 0), 0u);
  }
}

TEST(Scenario, NeedsTwoPixels) {
  auto spec = fixtures::four_pixel_spec({{0.3, 1.0, 1.0}});
  spec.pixels.resize(1);
  EXPECT_THROW(run_scenario(Scene(spec), AcquisitionParams{}, grid()), ValidationError);
}

TEST(Scenario, ReconstructMatchesRunScenario) {
  const Scene sc(fixtures::four_pixel_spec({{0.3, 1.0, 1.0}}));
  AcquisitionParams p;
  p.rng_seed = 8;
  std::vector<TransientHistogram> s, b;
  for (std::size_t i = 0; i < sc.pixel_count(); ++i) {
    s.push_back(simulate_histogram(sc, i, p));
    b.push_back(simulate_background(sc, i, p));
  }
  const auto direct = run_scenario(sc, p, grid());
  const auto replay = reconstruct(sc.geometry(), p, grid(), s, b, {});
  EXPECT_EQ(direct.tracks, replay.tracks);
  b.pop_back();
  EXPECT_THROW(reconstruct(sc.geometry(), p, grid(), s, b, {}), Error);
}

TEST(Scenario, MedianBackgroundPath) {
  const Scene sc(fixtures::four_pixel_spec({{0.3, 1.0, 1.0}}));
  const Scene empty = sc.with_objects({});
  AcquisitionParams p;
  p.rng_seed = 9;
  std::vector<std::vector<TransientHistogram>> frames(sc.pixel_count());
  for (std::size_t i = 0; i < sc.pixel_count(); ++i) {
    frames[i].push_back(simulate_frame(sc, i, p, 0));
    for (std::uint64_t f = 1; f < 5; ++f) frames[i].push_back(simulate_frame(empty, i, p, f));
  }
  const auto r = reconstruct_median(sc.geometry(), p, grid(), frames, {});
  EXPECT_LT(std::abs(r.tracks[0].x - 0.3), 0.1);
  EXPECT_LT(std::abs(r.tracks[0].y - 1.0), 0.1);
  frames[2].resize(2);
  try {
    reconstruct_median(sc.geometry(), p, grid(), frames, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidInput);
    EXPECT_EQ(std::string(e.what()).rfind("pixel 2:", 0), 0u);
  }
}

TEST(Scenario, TooManyTargets) {
  const Scene sc(fixtures::four_pixel_spec({{0.3, 1.0, 1.0}}));
  ScenarioOptions o;
  o.k_targets = 3;
  try {
    run_scenario(sc, AcquisitionParams{}, grid(), o);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooManyTargets);
  }
}

TEST(TwoPerson, BothWithinHalfAMetre) {
  const Scene sc(fixtures::four_pixel_spec({{-0.5, 0.9, 1.0}, {0.7, 1.7, 1.0}}));
  AcquisitionParams p;
  p.rng_seed = 12;
  const auto r = run_two_person(sc, p, grid());
  ASSERT_EQ(r.scenario.tracks.size(), 2u);
  EXPECT_LT(std::abs(r.scenario.tracks[0].x + 0.5), 0.5);
  EXPECT_LT(std::abs(r.scenario.tracks[0].y - 0.9), 0.5);
  EXPECT_LT(std::abs(r.scenario.tracks[1].x - 0.7), 0.5);
  EXPECT_LT(std::abs(r.scenario.tracks[1].y - 1.7), 0.5);
  EXPECT_THROW(run_two_person(Scene(fixtures::four_pixel_spec({{0.3, 1.0, 1.0}})), p, grid()), ValidationError);
}

TEST(Sweep, ConfigValidation) {
  auto c = small_sweep();
  EXPECT_NO_THROW(c.validate());
  c.trials_per_point = 9;
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_sweep();
  c.d2_x_steps = 1;
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_sweep();
  c.d2_x_max = std::nan("");
  EXPECT_THROW(c.validate(), ValidationError);
  c = small_sweep();
  EXPECT_DOUBLE_EQ(c.d2_x(0), 0.2);
  EXPECT_DOUBLE_EQ(c.d2_x(2), 1.0);
}

TEST(Sweep, ShapeDeterminismAndThreadIndependence) {
  const auto c = small_sweep();
  const auto a = run_baseline_sweep(c, 1);
  const auto b = run_baseline_sweep(c, 3);
  ASSERT_EQ(a.points.size(), 6u);
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    const auto& p = a.points[k];
    const auto& q = b.points[k];
    EXPECT_EQ(p.sigma_x, q.sigma_x);
    EXPECT_EQ(p.error_y, q.error_y);
    EXPECT_EQ(p.trials, 10u);
    EXPECT_TRUE(p.valid);
    EXPECT_GE(p.sigma_x, 0.0);
    EXPECT_TRUE(std::isfinite(p.sigma_y));
    EXPECT_NEAR(p.baseline, std::abs(p.d2_x - c.d1_position.x), 1e-15);
  }
}

TEST(Sweep, CancelledSweepThrows) {
  try {
    run_baseline_sweep(small_sweep(), 1, {}, [] { return true; });
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Interrupted);
  }
}

TEST(Sweep, TinyBaselineBlowsUpDepthPrecision) {
  auto c = small_sweep();
  c.d2_x_min = 0.02;
  c.d2_x_max = 1.0;
  c.d2_x_steps = 2;
  c.object_positions = {{0.8, 1.2, 1.0}};
  c.trials_per_point = 20;
  const auto r = run_baseline_sweep(c);
  const auto& tiny = r.points[0];
  const auto& wide = r.points[1];
  ASSERT_TRUE(wide.valid);
  // Either the trials fail outright or the spread is far larger.
  if (tiny.valid) {
    EXPECT_GT(tiny.sigma_y, 3.0 * wide.sigma_y);
  }
}
