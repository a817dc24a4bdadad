#include "nlos/peak_fit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "nlos/error.hpp"

namespace nlos {
namespace {

constexpr double kMinAmplitude = 1e-9;

struct Bounds {
  double sigma_min;
  double sigma_max;
  double center_max;
};

// Parameter layout: [floor, A_0, mu_0, s_0, A_1, mu_1, s_1, ...], positions in
// sample units.
void clamp_params(Eigen::VectorXd& p, const Bounds& b) {
  for (Eigen::Index k = 1; k + 2 < p.size(); k += 3) {
    p[k] = std::max(p[k], kMinAmplitude);
    p[k + 1] = std::clamp(p[k + 1], 0.0, b.center_max);
    p[k + 2] = std::clamp(p[k + 2], b.sigma_min, b.sigma_max);
  }
}

void evaluate(const Eigen::VectorXd& p, const std::vector<double>& x, const std::vector<double>& y,
              Eigen::VectorXd& residual, Eigen::MatrixXd* jacobian) {
  const auto m = static_cast<Eigen::Index>(x.size());
  residual.resize(m);
  if (jacobian) jacobian->resize(m, p.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    double model = p[0];
    if (jacobian) (*jacobian)(j, 0) = 1.0;
    for (Eigen::Index k = 1; k < p.size(); k += 3) {
      const double amp = p[k];
      const double mu = p[k + 1];
      const double s = p[k + 2];
      const double dx = x[static_cast<std::size_t>(j)] - mu;
      const double e = std::exp(-0.5 * dx * dx / (s * s));
      model += amp * e;
      if (jacobian) {
        (*jacobian)(j, k) = e;
        (*jacobian)(j, k + 1) = amp * e * dx / (s * s);
        (*jacobian)(j, k + 2) = amp * e * dx * dx / (s * s * s);
      }
    }
    residual[j] = y[static_cast<std::size_t>(j)] - model;
  }
}

}  // namespace

FitReport fit_gaussians(std::span<const double> samples, double t0_s, double dt_s,
                        std::span<const PeakSeed> seeds, const FitOptions& options) {
  if (seeds.empty()) throw ValidationError("seeds", "at least one seed is required");
  if (samples.empty()) throw ValidationError("samples", "no data to fit");
  if (!(dt_s > 0.0)) throw ValidationError("dt_s", "must be > 0");
  if (!(options.irf_sigma_guess_s > 0.0)) {
    throw ValidationError("irf_sigma_guess_s", "must be > 0");
  }

  const auto n = samples.size();
  const double guess = options.irf_sigma_guess_s / dt_s;
  const Bounds bounds{1.0, std::max(1.0, 10.0 * guess), static_cast<double>(n)};

  // Fit only the neighbourhood of the seeds.
  const double reach = std::max(5.0, options.region_sigmas * guess);
  std::vector<char> used(n, 0);
  for (const auto& seed : seeds) {
    if (seed.bin >= n) throw ValidationError("seeds", "seed bin outside the data");
    const double c = static_cast<double>(seed.bin);
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(c - reach)));
    const auto hi = static_cast<std::size_t>(std::min(static_cast<double>(n - 1), std::ceil(c + reach)));
    std::fill(used.begin() + static_cast<long>(lo), used.begin() + static_cast<long>(hi) + 1, 1);
  }
  std::vector<double> x;
  std::vector<double> y;
  for (std::size_t j = 0; j < n; ++j) {
    if (!used[j]) continue;
    x.push_back(static_cast<double>(j) + 0.5);
    y.push_back(samples[j]);
  }

  std::vector<double> sorted_y(y);
  std::nth_element(sorted_y.begin(), sorted_y.begin() + static_cast<long>(sorted_y.size() / 2),
                   sorted_y.end());
  const double floor0 = sorted_y[sorted_y.size() / 2];

  const auto np = static_cast<Eigen::Index>(1 + 3 * seeds.size());
  Eigen::VectorXd p(np);
  p[0] = floor0;
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const auto base = static_cast<Eigen::Index>(1 + 3 * k);
    const double height = samples[seeds[k].bin] - floor0;
    p[base] = std::max({seeds[k].amplitude, height, 1.0});
    p[base + 1] = static_cast<double>(seeds[k].bin) + 0.5;
    p[base + 2] = guess;
  }
  clamp_params(p, bounds);

  double scale = 0.0;
  for (double v : y) scale += v * v;
  const double exact_fit_ss = 1e-24 * (scale + 1.0);

  Eigen::VectorXd r;
  Eigen::MatrixXd jac;
  evaluate(p, x, y, r, &jac);
  double ss = r.squaredNorm();
  double lambda = 1e-3;
  bool converged = false;
  std::size_t iter = 0;

  while (iter < options.max_iterations) {
    ++iter;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    Eigen::MatrixXd damped = jtj;
    for (Eigen::Index i = 0; i < np; ++i) {
      damped(i, i) += lambda * std::max(jtj(i, i), 1e-12);
    }
    const Eigen::VectorXd step = damped.ldlt().solve(jtr);
    Eigen::VectorXd trial = p + step;
    clamp_params(trial, bounds);

    Eigen::VectorXd r_trial;
    evaluate(trial, x, y, r_trial, nullptr);
    const double ss_trial = r_trial.squaredNorm();

    if (std::isfinite(ss_trial) && ss_trial < ss) {
      const double reduction = (ss - ss_trial) / std::max(ss, 1e-300);
      const double step_norm = (trial - p).norm();
      p = trial;
      ss = ss_trial;
      evaluate(p, x, y, r, &jac);
      lambda = std::max(lambda / 10.0, 1e-12);
      if (ss <= exact_fit_ss || reduction < options.tolerance ||
          step_norm < 1e-10 * (p.norm() + 1e-10)) {
        converged = true;
        break;
      }
    } else {
      lambda *= 10.0;
      if (lambda > 1e16) {
        // No descent direction left: at a (bounded) minimum.
        converged = true;
        break;
      }
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NonConvergence,
                "Gaussian fit did not converge within " + std::to_string(options.max_iterations) +
                    " iterations");
  }

  const auto m = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd cov;
  const bool have_cov = m > np;
  if (have_cov) {
    const double s2 = ss / static_cast<double>(m - np);
    cov = s2 * (jac.transpose() * jac).completeOrthogonalDecomposition().pseudoInverse();
  }

  FitReport report;
  report.floor = p[0];
  report.residual_ss = ss;
  report.iterations = iter;
  report.samples = x.size();
  for (std::size_t k = 0; k < seeds.size(); ++k) {
    const auto base = static_cast<Eigen::Index>(1 + 3 * k);
    if (p[base] <= 10.0 * kMinAmplitude) continue;  // seed absorbed by the floor
    PeakEstimate est;
    est.amplitude = p[base];
    est.t_s = t0_s + p[base + 1] * dt_s;
    est.sigma_s = p[base + 2] * dt_s;
    est.t_stderr_s = have_cov ? std::sqrt(std::max(0.0, cov(base + 1, base + 1))) * dt_s : 0.0;
    report.peaks.push_back(est);
  }
  std::sort(report.peaks.begin(), report.peaks.end(),
            [](const PeakEstimate& a, const PeakEstimate& b) { return a.t_s < b.t_s; });
  for (std::size_t k = 1; k < report.peaks.size(); ++k) {
    if (report.peaks[k].t_s - report.peaks[k - 1].t_s < dt_s) {
      throw Error(ErrorCode::DegenerateFit, "two fitted centres collapsed within one bin");
    }
  }
  return report;
}

FitReport fit_peaks_report(const TransientHistogram& hist, std::span<const PeakSeed> seeds,
                           const FitOptions& options) {
  std::vector<double> samples(hist.counts.begin(), hist.counts.end());
  FitReport report = fit_gaussians(samples, hist.t0_offset_s, hist.bin_width_s, seeds, options);
  for (auto& peak : report.peaks) peak.pixel_index = hist.pixel_index;
  return report;
}

std::vector<PeakEstimate> fit_peaks(const TransientHistogram& hist,
                                    std::span<const PeakSeed> seeds, const FitOptions& options) {
  return fit_peaks_report(hist, seeds, options).peaks;
}

}  // namespace nlos
