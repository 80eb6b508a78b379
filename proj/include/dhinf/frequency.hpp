#pragma once

// Frequency-grid evaluation. Each kernel has an OpenMP version and a serial
// reference with identical results; the serial ones exist for tests and
// benchmarks.

#include <functional>
#include <vector>

#include "dhinf/realization.hpp"

namespace dhinf {

/// theta_k = 2 pi k / n, k = 0..n-1.
std::vector<double> uniform_grid(Index n);

FrequencyGrid evaluate_grid(const RealizationSS& g,
                            const std::vector<double>& points);
FrequencyGrid evaluate_grid_serial(const RealizationSS& g,
                                   const std::vector<double>& points);

/// sigma_max of an arbitrary frequency response at each grid angle.
using Response = std::function<MatrixXcd(double theta)>;
std::vector<double> sigma_max_profile(const Response& f,
                                      const std::vector<double>& points);
std::vector<double> sigma_max_profile_serial(const Response& f,
                                             const std::vector<double>& points);
std::vector<double> sigma_max_profile(const RealizationSS& g,
                                      const std::vector<double>& points);

double sigma_max(const MatrixXcd& m);

/// Max entrywise-norm deviation max_k ||a_k - b_k||_2 between two grids.
double grid_max_deviation(const FrequencyGrid& a, const FrequencyGrid& b);

/// Grid residual sup_k sigma_max(f(theta_k)) with theta on a uniform grid.
double grid_sup(const Response& f, Index n);

/// Sup of sigma_max over the circle for a response with no realization
/// handy: dense grid followed by golden-section refinement of the largest
/// local maxima.
NormResult refined_sup(const Response& f, Index n = 2048);

}  // namespace dhinf
