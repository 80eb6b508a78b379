#include "dhinf/frequency.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SVD>

#include "dhinf/errors.hpp"

namespace dhinf {

std::vector<double> uniform_grid(Index n) {
  require(n >= 1, ErrorCode::kInvalidArgument, "grid size must be positive");
  std::vector<double> pts(n);
  for (Index k = 0; k < n; ++k)
    pts[k] = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
  return pts;
}

double sigma_max(const MatrixXcd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXcd> svd(m);
  return svd.singularValues()(0);
}

FrequencyGrid evaluate_grid(const RealizationSS& g,
                            const std::vector<double>& points) {
  FrequencyGrid out;
  out.points = points;
  out.values.resize(points.size());
  const long n = static_cast<long>(points.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) out.values[k] = evaluate(g, points[k]);
  return out;
}

FrequencyGrid evaluate_grid_serial(const RealizationSS& g,
                                   const std::vector<double>& points) {
  FrequencyGrid out;
  out.points = points;
  out.values.reserve(points.size());
  for (double th : points) out.values.push_back(evaluate(g, th));
  return out;
}

std::vector<double> sigma_max_profile(const Response& f,
                                      const std::vector<double>& points) {
  std::vector<double> out(points.size());
  const long n = static_cast<long>(points.size());
#pragma omp parallel for schedule(static)
  for (long k = 0; k < n; ++k) out[k] = sigma_max(f(points[k]));
  return out;
}

std::vector<double> sigma_max_profile_serial(const Response& f,
                                             const std::vector<double>& points) {
  std::vector<double> out;
  out.reserve(points.size());
  for (double th : points) out.push_back(sigma_max(f(th)));
  return out;
}

std::vector<double> sigma_max_profile(const RealizationSS& g,
                                      const std::vector<double>& points) {
  return sigma_max_profile([&g](double th) { return evaluate(g, th); }, points);
}

double grid_max_deviation(const FrequencyGrid& a, const FrequencyGrid& b) {
  require(a.values.size() == b.values.size(), ErrorCode::kDimensionMismatch,
          "grid sizes differ");
  double worst = 0.0;
  for (size_t k = 0; k < a.values.size(); ++k)
    worst = std::max(worst, sigma_max(a.values[k] - b.values[k]));
  return worst;
}

double grid_sup(const Response& f, Index n) {
  const auto prof = sigma_max_profile(f, uniform_grid(n));
  return prof.empty() ? 0.0 : *std::max_element(prof.begin(), prof.end());
}

NormResult refined_sup(const Response& f, Index n) {
  const auto pts = uniform_grid(n);
  const auto prof = sigma_max_profile(f, pts);
  NormResult best;
  const double h = 2.0 * std::numbers::pi / static_cast<double>(n);

  std::vector<Index> peaks;
  for (Index k = 0; k < n; ++k) {
    const double l = prof[(k + n - 1) % n], r = prof[(k + 1) % n];
    if (prof[k] >= l && prof[k] >= r) peaks.push_back(k);
  }
  std::sort(peaks.begin(), peaks.end(),
            [&](Index a, Index b) { return prof[a] > prof[b]; });
  if (peaks.size() > 8) peaks.resize(8);

  for (Index k : peaks) {
    if (prof[k] > best.value) best = {prof[k], pts[k]};
    // Golden section on [theta_k - h, theta_k + h].
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = pts[k] - h, b = pts[k] + h;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = sigma_max(f(x1)), f2 = sigma_max(f(x2));
    for (int it = 0; it < 60 && (b - a) > 1e-12; ++it) {
      if (f1 > f2) {
        b = x2; x2 = x1; f2 = f1;
        x1 = b - phi * (b - a); f1 = sigma_max(f(x1));
      } else {
        a = x1; x1 = x2; f1 = f2;
        x2 = a + phi * (b - a); f2 = sigma_max(f(x2));
      }
    }
    const double th = f1 > f2 ? x1 : x2;
    const double v = std::max(f1, f2);
    if (v > best.value) {
      double wrapped = std::fmod(th, 2.0 * std::numbers::pi);
      if (wrapped < 0) wrapped += 2.0 * std::numbers::pi;
      best = {v, wrapped};
    }
  }
  return best;
}

}  // namespace dhinf
