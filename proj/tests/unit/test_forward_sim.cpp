#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nlos/error.hpp"
#include "nlos/forward_sim.hpp"
#include "test_support.hpp"

using namespace nlos;

namespace {

// Laser and pixel straddle the object so both legs have equal length d.
Scene symmetric_scene(double d, double rho = 1.0) {
  SceneSpec s;
  s.laser_spot = {-0.1, 0.0, 1.0};
  s.pixels = {{0.1, 0.0, 1.0}, {0.4, 0.0, 1.0}};
  const double y = std::sqrt(d * d - 0.01);
  s.objects = {{{0.0, y, 1.0}, rho, "target"}};
  s.scatter_height_z = 1.0;
  return Scene(s);
}

AcquisitionParams quiet() {
  AcquisitionParams p;
  p.dark_rate_hz = 0.0;
  p.poisson_noise = false;
  return p;
}

double phi(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

TEST(AcquisitionParams, DefaultsAndValidation) {
  AcquisitionParams p;
  EXPECT_EQ(p.num_bins(), 6250u);
  EXPECT_DOUBLE_EQ(p.period_s(), 25e-9);
  EXPECT_NO_THROW(p.validate());
  p.bin_width_s = 3e-12;  // 25 ns / 3 ps is not an integer
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.dark_rate_hz = -1;
  EXPECT_THROW(p.validate(), ValidationError);
  p = {};
  p.acq_time_s = 0;
  EXPECT_THROW(p.validate(), ValidationError);
}

TEST(ForwardSim, ThroughputCalibration) {
  AcquisitionParams p;
  p.lambertian = false;
  // kappa / 1.5^4 = 2000 counts/s at d1 = d2 = 1.5 m
  const auto scene = symmetric_scene(1.5);
  EXPECT_NEAR(expected_signal_rate(scene, 0, scene.objects()[0], p), 2000.0, 1e-9);
}

TEST(ForwardSim, InverseFourthPowerLaw) {
  AcquisitionParams p;
  p.lambertian = false;
  const auto near = symmetric_scene(1.2);
  const auto far = symmetric_scene(2.4);
  const double r1 = expected_signal_rate(near, 0, near.objects()[0], p);
  const double r2 = expected_signal_rate(far, 0, far.objects()[0], p);
  EXPECT_NEAR(r1 / r2, 16.0, 1e-9);
}

TEST(ForwardSim, ReflectivityAndGrazing) {
  AcquisitionParams p;
  const auto scene = symmetric_scene(1.5, 0.0);
  EXPECT_EQ(expected_signal_rate(scene, 0, scene.objects()[0], p), 0.0);

  SceneSpec s = fixtures::four_pixel_spec({});
  const HiddenObject on_wall{{3.0, 0.0, 1.0}, 1.0, "grazing"};
  const HiddenObject nearly{{3.0, 1e-6, 1.0}, 1.0, "nearly"};
  const Scene sc(s);
  EXPECT_EQ(expected_signal_rate(sc, 0, on_wall, p), 0.0);
  EXPECT_LT(expected_signal_rate(sc, 0, nearly, p), 1e-9);
  const HiddenObject behind{{0.0, -1.0, 1.0}, 1.0, "behind"};
  EXPECT_EQ(expected_signal_rate(sc, 0, behind, p), 0.0);
  p.lambertian = false;
  EXPECT_GT(expected_signal_rate(sc, 0, on_wall, p), 0.0);
}

TEST(ForwardSim, CoincidentObjectIsAnError) {
  const Scene sc(fixtures::four_pixel_spec({}));
  const HiddenObject at_pixel{sc.pixels()[0], 1.0, "x"};
  EXPECT_THROW(expected_signal_rate(sc, 0, at_pixel, AcquisitionParams{}), Error);
}

TEST(ForwardSim, DarkCountsAreFlat) {
  const Scene sc(fixtures::four_pixel_spec({}));
  AcquisitionParams p;
  const auto mu = expected_counts(sc, 0, p);
  ASSERT_EQ(mu.size(), 6250u);
  for (double m : mu) EXPECT_NEAR(m, 0.16, 1e-15);
  EXPECT_NEAR(std::accumulate(mu.begin(), mu.end(), 0.0), 1000.0, 1e-9);
}

TEST(ForwardSim, DarkTotalMatchesPoissonExpectation) {
  const Scene sc(fixtures::four_pixel_spec({}));
  AcquisitionParams p;
  double sum = 0.0;
  const int seeds = 100;
  for (int s = 0; s < seeds; ++s) {
    p.rng_seed = static_cast<std::uint64_t>(s);
    sum += static_cast<double>(simulate_histogram(sc, 0, p).total());
  }
  // Mean of 100 Poisson(1000) totals has sd sqrt(10).
  EXPECT_NEAR(sum / seeds, 1000.0, 3.0 * std::sqrt(1000.0 / seeds));
}

TEST(ForwardSim, AllRatesZeroGivesZeroHistogram) {
  AcquisitionParams p;
  p.dark_rate_hz = 0;
  p.system_throughput = 0;
  const Scene sc(fixtures::four_pixel_spec({{0.5, 1.0, 1.0}}));
  const auto h = simulate_histogram(sc, 1, p);
  EXPECT_EQ(h.total(), 0u);
  EXPECT_EQ(h.size(), 6250u);
  ASSERT_TRUE(h.wrap_period_s.has_value());
  EXPECT_DOUBLE_EQ(*h.wrap_period_s, 25e-9);
  EXPECT_EQ(h.pixel_index, 1u);
}

TEST(ForwardSim, DeltaResponseLandsInOneBin) {
  auto p = quiet();
  p.irf_sigma_s = 0.0;
  p.system_throughput *= 100;
  const Scene sc(fixtures::four_pixel_spec({{0.5, 1.0, 1.0}}));
  const auto h = simulate_histogram(sc, 2, p);
  const double arrival = time_of_flight(sc.laser_spot(), sc.objects()[0].position, sc.pixels()[2]) +
                         standoff_delay_s(53.0, p.period_s());
  const auto expected_bin = static_cast<std::size_t>(std::floor(arrival / p.bin_width_s));
  std::size_t nonzero = 0;
  for (std::size_t b = 0; b < h.size(); ++b) nonzero += h.counts[b] > 0;
  EXPECT_EQ(nonzero, 1u);
  EXPECT_GT(h.counts[expected_bin], 0u);
}

TEST(ForwardSim, ExpectedCountsIntegrateTheIrf) {
  AcquisitionParams p = quiet();
  const Scene sc(fixtures::four_pixel_spec({{0.5, 1.0, 1.0}}));
  const auto mu = expected_counts(sc, 0, p);
  const double s_total = expected_signal_rate(sc, 0, sc.objects()[0], p) * p.acq_time_s;
  const double arrival = time_of_flight(sc.laser_spot(), sc.objects()[0].position, sc.pixels()[0]) +
                         standoff_delay_s(53.0, p.period_s());
  const double w = p.bin_width_s, sig = p.irf_sigma_s;
  double total = 0.0;
  for (std::size_t b = 0; b < mu.size(); ++b) {
    const double lo = b * w, hi = (b + 1) * w;
    const double oracle = s_total * (phi((hi - arrival) / sig) - phi((lo - arrival) / sig));
    EXPECT_NEAR(mu[b], oracle, 1e-9 * s_total + 1e-12);
    total += mu[b];
  }
  EXPECT_NEAR(total, s_total, 1e-9 * s_total);
  // density * width approximation agrees at the peak to second order
  const auto peak = static_cast<std::size_t>(std::floor(arrival / w));
  const double centre = (peak + 0.5) * w;
  const double density = s_total * std::exp(-0.5 * std::pow((centre - arrival) / sig, 2)) /
                         (sig * std::sqrt(2 * M_PI)) * w;
  EXPECT_NEAR(mu[peak], density, 1e-3 * density);
}

TEST(ForwardSim, NoiseFreeArgmaxAtTof) {
  AcquisitionParams p = quiet();
  p.system_throughput *= 1e4;  // large counts so rounding cannot flatten the peak
  const Scene sc(fixtures::four_pixel_spec({{-0.4, 1.6, 1.0}}));
  for (std::size_t i = 0; i < sc.pixel_count(); ++i) {
    const auto h = simulate_histogram(sc, i, p);
    const auto argmax = static_cast<double>(std::max_element(h.counts.begin(), h.counts.end()) - h.counts.begin());
    const double arrival = time_of_flight(sc.laser_spot(), sc.objects()[0].position, sc.pixels()[i]) +
                           standoff_delay_s(53.0, p.period_s());
    EXPECT_LE(std::abs(argmax + 0.5 - arrival / p.bin_width_s), 1.0);
  }
}

TEST(ForwardSim, AliasingIsRefused) {
  const Scene sc(fixtures::four_pixel_spec({{0.0, 4.0, 1.0}}));  // path > 7.5 m
  EXPECT_THROW(
      {
        try {
          simulate_histogram(sc, 0, AcquisitionParams{});
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::Aliasing);
          throw;
        }
      },
      Error);
}

TEST(ForwardSim, DeterministicAndIndependentStreams) {
  const Scene sc(fixtures::four_pixel_spec({{0.5, 1.0, 1.0}}));
  AcquisitionParams p;
  p.rng_seed = 99;
  EXPECT_EQ(simulate_histogram(sc, 0, p), simulate_histogram(sc, 0, p));
  EXPECT_EQ(simulate_background(sc, 0, p), simulate_background(sc, 0, p));
  EXPECT_EQ(simulate_frame(sc, 0, p, 0), simulate_histogram(sc, 0, p));
  EXPECT_NE(simulate_frame(sc, 0, p, 1), simulate_frame(sc, 0, p, 0));
  EXPECT_NE(simulate_histogram(sc, 0, p), simulate_histogram(sc, 1, p));
  // Background draws dark counts from its own stream, not the signal's.
  auto no_obj = sc.with_objects({});
  EXPECT_NE(simulate_background(sc, 0, p), simulate_histogram(no_obj, 0, p));
  p.rng_seed = 100;
  EXPECT_NE(simulate_histogram(sc, 0, p).counts, simulate_histogram(sc, 0, AcquisitionParams{}).counts);
  EXPECT_EQ(derive_seed(1, 2, 3, 4), derive_seed(1, 2, 3, 4));
  EXPECT_NE(derive_seed(1, 2, 3, 4), derive_seed(1, 2, 4, 3));
}

TEST(ForwardSim, BackgroundWithoutScatterersAndNoiseIsZero) {
  auto p = quiet();
  const Scene sc(fixtures::four_pixel_spec({{0.5, 1.0, 1.0}}));
  EXPECT_EQ(simulate_background(sc, 0, p).total(), 0u);
}

TEST(ForwardSim, BackgroundAdditivity) {
  auto spec = fixtures::four_pixel_spec({{0.5, 1.0, 1.0}});
  spec.background_scatterers.push_back({{-0.8, 1.4, 1.0}, 0.5, "clutter"});
  const Scene sc(spec);
  AcquisitionParams p;
  const double object_counts = expected_signal_rate(sc, 0, sc.objects()[0], p) * p.acq_time_s;
  double diff = 0.0;
  const int seeds = 100;
  double var = 0.0;
  for (int s = 0; s < seeds; ++s) {
    p.rng_seed = static_cast<std::uint64_t>(s);
    const double a = static_cast<double>(simulate_histogram(sc, 0, p).total());
    const double b = static_cast<double>(simulate_background(sc, 0, p).total());
    diff += a - b;
  }
  // Var(a - b) = E[a] + E[b] for independent Poisson totals.
  const auto mu_a = expected_counts(sc, 0, p);
  const auto mu_b = expected_counts(sc, 0, p, false);
  const double ea = std::accumulate(mu_a.begin(), mu_a.end(), 0.0);
  const double eb = std::accumulate(mu_b.begin(), mu_b.end(), 0.0);
  var = (ea + eb) / seeds;
  EXPECT_NEAR(ea - eb, object_counts, 1e-6 * object_counts);
  EXPECT_NEAR(diff / seeds, object_counts, 3.0 * std::sqrt(var));
}

TEST(ForwardSim, EnergyScalesLinearly) {
  AcquisitionParams p = quiet();
  const Scene sc(fixtures::four_pixel_spec({{0.5, 1.0, 1.0}}));
  auto sum = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); };
  const double base = sum(expected_counts(sc, 0, p));
  p.acq_time_s = 3.0;
  EXPECT_NEAR(sum(expected_counts(sc, 0, p)), 3.0 * base, 1e-9 * base);
  p.acq_time_s = 1.0;
  const Scene bright = sc.with_objects({{{0.5, 1.0, 1.0}, 2.5, "bright"}});
  EXPECT_NEAR(sum(expected_counts(bright, 0, p)), 2.5 * base, 1e-9 * base);
}

TEST(ForwardSim, NoiseOffRoundsTheExpectation) {
  AcquisitionParams p = quiet();
  p.dark_rate_hz = 1000;
  const Scene sc(fixtures::four_pixel_spec({{0.5, 1.0, 1.0}}));
  const auto mu = expected_counts(sc, 0, p);
  const auto h = simulate_histogram(sc, 0, p);
  for (std::size_t b = 0; b < mu.size(); ++b) {
    EXPECT_EQ(h.counts[b], static_cast<std::uint64_t>(std::llround(mu[b])));
  }
}

TEST(ForwardSim, PixelIndexOutOfRange) {
  const Scene sc(fixtures::four_pixel_spec({}));
  EXPECT_THROW(simulate_histogram(sc, 4, AcquisitionParams{}), ValidationError);
}
