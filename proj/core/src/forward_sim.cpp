#include "nlos/forward_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "nlos/error.hpp"

namespace nlos {
namespace {

constexpr std::uint64_t kSignalStream = 1;
constexpr std::uint64_t kBackgroundStream = 2;

// Gaussian tails beyond this many sigma are dropped from the expectation.
constexpr double kTailSigmas = 10.0;

struct Contributor {
  double arrival_s;  // instrument frame, before folding into one period
  double mean_counts;
};

std::vector<Contributor> contributors(const Scene& scene, std::size_t pixel_index,
                                      const AcquisitionParams& params, bool include_objects) {
  const double period = params.period_s();
  const double delay = standoff_delay_s(scene.standoff_m(), period);
  const Point3& pixel = scene.pixels()[pixel_index];

  std::vector<Contributor> out;
  auto add = [&](const HiddenObject& obj, const char* kind) {
    const double tof = time_of_flight(scene.laser_spot(), obj.position, pixel);
    if (tof >= period) {
      throw Error(ErrorCode::Aliasing,
                  std::string(kind) + " '" + obj.label + "' time of flight " + std::to_string(tof) +
                      " s exceeds the repetition period " + std::to_string(period) + " s");
    }
    const double rate = expected_signal_rate(scene, pixel_index, obj, params);
    out.push_back({tof + delay, rate * params.acq_time_s});
  };
  if (include_objects) {
    for (const auto& obj : scene.objects()) add(obj, "object");
  }
  for (const auto& obj : scene.background_scatterers()) add(obj, "background scatterer");
  return out;
}

double gaussian_cdf(double t, double mean, double sigma) {
  if (sigma <= 0.0) return t >= mean ? 1.0 : 0.0;
  return 0.5 * std::erfc(-(t - mean) / (sigma * std::sqrt(2.0)));
}

std::size_t fold_bin(double arrival_s, double period_s, double bin_width_s, std::size_t n) {
  double folded = std::fmod(arrival_s, period_s);
  if (folded < 0.0) folded += period_s;
  const auto b = static_cast<std::size_t>(std::floor(folded / bin_width_s));
  return std::min(b, n - 1);
}

void check_pixel(const Scene& scene, std::size_t pixel_index) {
  if (pixel_index >= scene.pixel_count()) {
    throw ValidationError("pixel_index", "index " + std::to_string(pixel_index) +
                                             " out of range for " +
                                             std::to_string(scene.pixel_count()) + " pixels");
  }
}

TransientHistogram make_histogram(const Scene& scene, std::size_t pixel_index,
                                  const AcquisitionParams& params, bool include_objects,
                                  std::uint64_t seed) {
  params.validate();
  check_pixel(scene, pixel_index);

  const std::size_t n = params.num_bins();
  TransientHistogram hist;
  hist.counts.assign(n, 0);
  hist.bin_width_s = params.bin_width_s;
  hist.t0_offset_s = 0.0;
  hist.pixel_index = pixel_index;
  hist.acq_time_s = params.acq_time_s;
  hist.wrap_period_s = params.period_s();

  if (!params.poisson_noise) {
    const auto mu = expected_counts(scene, pixel_index, params, include_objects);
    std::transform(mu.begin(), mu.end(), hist.counts.begin(),
                   [](double m) { return static_cast<std::uint64_t>(std::llround(m)); });
    return hist;
  }

  // Photon-level sampling. A Poisson number of photons per contributor, each
  // timed independently, is distributionally identical to independent
  // Poisson counts per bin with the binned means of expected_counts().
  const auto sources = contributors(scene, pixel_index, params, include_objects);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 1.0);
  const double period = params.period_s();

  for (const auto& src : sources) {
    if (src.mean_counts <= 0.0) continue;
    std::poisson_distribution<std::uint64_t> photons(src.mean_counts);
    const std::uint64_t count = photons(rng);
    for (std::uint64_t k = 0; k < count; ++k) {
      const double t = src.arrival_s + params.irf_sigma_s * jitter(rng);
      ++hist.counts[fold_bin(t, period, params.bin_width_s, n)];
    }
  }

  const double flat_mean = (params.dark_rate_hz + params.ambient_rate_hz) * params.acq_time_s;
  if (flat_mean > 0.0) {
    std::poisson_distribution<std::uint64_t> photons(flat_mean);
    std::uniform_int_distribution<std::size_t> bin(0, n - 1);
    const std::uint64_t count = photons(rng);
    for (std::uint64_t k = 0; k < count; ++k) ++hist.counts[bin(rng)];
  }
  return hist;
}

}  // namespace

std::uint64_t TransientHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

std::size_t AcquisitionParams::num_bins() const {
  return static_cast<std::size_t>(std::llround(period_s() / bin_width_s));
}

void AcquisitionParams::validate() const {
  auto positive = [](double v, const char* field) {
    if (!std::isfinite(v) || v <= 0.0) throw ValidationError(field, "must be > 0");
  };
  auto non_negative = [](double v, const char* field) {
    if (!std::isfinite(v) || v < 0.0) throw ValidationError(field, "must be >= 0");
  };
  positive(rep_rate_hz, "acquisition.rep_rate_hz");
  positive(bin_width_s, "acquisition.bin_width_s");
  positive(acq_time_s, "acquisition.acq_time_s");
  non_negative(irf_sigma_s, "acquisition.irf_sigma_s");
  non_negative(dark_rate_hz, "acquisition.dark_rate_hz");
  non_negative(ambient_rate_hz, "acquisition.ambient_rate_hz");
  non_negative(system_throughput, "acquisition.system_throughput");

  const double ratio = period_s() / bin_width_s;
  if (ratio < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-6 * ratio) {
    throw ValidationError("acquisition.bin_width_s",
                          "repetition period must be an integer multiple of the bin width");
  }
}

double expected_signal_rate(const Scene& scene, std::size_t pixel_index,
                            const HiddenObject& object, const AcquisitionParams& params) {
  check_pixel(scene, pixel_index);
  if (object.reflectivity < 0.0) {
    throw ValidationError("reflectivity", "must be >= 0");
  }
  const Point3 to_object_from_laser = object.position - scene.laser_spot();
  const Point3 to_object_from_pixel = object.position - scene.pixels()[pixel_index];
  const double d1 = norm(to_object_from_laser);
  const double d2 = norm(to_object_from_pixel);
  if (d1 == 0.0 || d2 == 0.0) {
    throw Error(ErrorCode::InvalidInput,
                "object '" + object.label + "' coincides with a wall spot");
  }
  double cosines = 1.0;
  if (params.lambertian) {
    const double cos1 = std::max(0.0, dot(to_object_from_laser, scene.wall_normal()) / d1);
    const double cos2 = std::max(0.0, dot(to_object_from_pixel, scene.wall_normal()) / d2);
    cosines = cos1 * cos2;
  }
  return params.system_throughput * object.reflectivity * cosines / (d1 * d1 * d2 * d2);
}

std::vector<double> expected_counts(const Scene& scene, std::size_t pixel_index,
                                    const AcquisitionParams& params, bool include_objects) {
  params.validate();
  check_pixel(scene, pixel_index);
  const std::size_t n = params.num_bins();
  const double period = params.period_s();
  const double w = params.bin_width_s;
  const double flat =
      (params.dark_rate_hz + params.ambient_rate_hz) * params.acq_time_s / static_cast<double>(n);
  std::vector<double> mu(n, flat);

  for (const auto& src : contributors(scene, pixel_index, params, include_objects)) {
    if (src.mean_counts <= 0.0) continue;
    double center = std::fmod(src.arrival_s, period);
    if (center < 0.0) center += period;
    const double sigma = params.irf_sigma_s;
    if (sigma <= 0.0) {
      mu[fold_bin(center, period, w, n)] += src.mean_counts;
      continue;
    }
    // Walk the bins under the Gaussian in unfolded time, then fold.
    const auto first = static_cast<long long>(std::floor((center - kTailSigmas * sigma) / w));
    const auto last = static_cast<long long>(std::floor((center + kTailSigmas * sigma) / w));
    const auto nn = static_cast<long long>(n);
    for (long long b = first; b <= last; ++b) {
      const double lo = static_cast<double>(b) * w;
      const double mass = gaussian_cdf(lo + w, center, sigma) - gaussian_cdf(lo, center, sigma);
      const long long folded = ((b % nn) + nn) % nn;
      mu[static_cast<std::size_t>(folded)] += src.mean_counts * mass;
    }
  }
  return mu;
}

TransientHistogram simulate_histogram(const Scene& scene, std::size_t pixel_index,
                                      const AcquisitionParams& params) {
  return simulate_frame(scene, pixel_index, params, 0);
}

TransientHistogram simulate_frame(const Scene& scene, std::size_t pixel_index,
                                  const AcquisitionParams& params, std::uint64_t frame) {
  return make_histogram(scene, pixel_index, params, true,
                        derive_seed(params.rng_seed, kSignalStream, pixel_index, frame));
}

TransientHistogram simulate_background(const Scene& scene, std::size_t pixel_index,
                                       const AcquisitionParams& params) {
  return make_histogram(scene, pixel_index, params, false,
                        derive_seed(params.rng_seed, kBackgroundStream, pixel_index));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  // splitmix64 finalizer applied to a running combination
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  std::uint64_t h = mix(master);
  h = mix(h ^ a);
  h = mix(h ^ b);
  h = mix(h ^ c);
  return h;
}

}  // namespace nlos
