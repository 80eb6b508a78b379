#pragma once

// Discrete-time state-space realizations and the transfer-matrix algebra
// built on them. Every transfer matrix in the toolkit, stable or not, is
// carried as a raw (A, B, C, D) quadruple; there is no polynomial form.

#include <complex>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace dhinf {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace defaults {
inline constexpr double kStabilityMargin = 1e-8;   // unit-circle exclusion
inline constexpr double kSigmaMinTol = 1e-10;      // A-invertibility
inline constexpr double kNormRelTol = 1e-6;        // hinf bisection accuracy
inline constexpr double kMinimalTol = 1e-8;        // balanced truncation
inline constexpr Index kAutoMinimalStates = 200;   // series/add auto-reduce
}  // namespace defaults

enum class StabilityClass { kStable, kAntiStable, kMixed, kUnknown };

const char* to_string(StabilityClass s);

class RealizationSS {
 public:
  /// The empty 0x0 static gain.
  RealizationSS();
  RealizationSS(MatrixXd a, MatrixXd b, MatrixXd c, MatrixXd d);

  static RealizationSS static_gain(MatrixXd d);
  static RealizationSS identity(Index k);
  static RealizationSS zero(Index outputs, Index inputs);

  const MatrixXd& A() const { return a_; }
  const MatrixXd& B() const { return b_; }
  const MatrixXd& C() const { return c_; }
  const MatrixXd& D() const { return d_; }

  Index states() const { return a_.rows(); }
  Index inputs() const { return d_.cols(); }
  Index outputs() const { return d_.rows(); }

  StabilityClass stability() const { return stability_; }
  bool is_stable() const { return stability_ == StabilityClass::kStable; }
  bool is_static() const { return states() == 0; }
  double spectral_radius() const { return radius_; }

 private:
  MatrixXd a_, b_, c_, d_;
  StabilityClass stability_ = StabilityClass::kStable;
  double radius_ = 0.0;
};

/// An RL-infinity object held as r1~ + r2 with r1, r2 stable and r1
/// strictly proper.
struct MixedSystem {
  RealizationSS r1;
  RealizationSS r2;

  RealizationSS to_realization() const;
};

struct FrequencyGrid {
  std::vector<double> points;
  std::vector<MatrixXcd> values;
};

struct MarkovSequence {
  std::vector<MatrixXd> taps;
  Index horizon() const { return static_cast<Index>(taps.size()); }
};

// --- algebra --------------------------------------------------------------

/// g * h (h acts first).
RealizationSS series(const RealizationSS& g, const RealizationSS& h);
/// Left-to-right product f[0] * f[1] * ... .
RealizationSS product(std::initializer_list<RealizationSS> factors);
RealizationSS add(const RealizationSS& g, const RealizationSS& h);
RealizationSS subtract(const RealizationSS& g, const RealizationSS& h);
RealizationSS negate(const RealizationSS& g);
RealizationSS transpose(const RealizationSS& g);
/// g~(z) = g(1/z)^T. Requires an invertible state map.
RealizationSS conjugate(const RealizationSS& g,
                        double sigma_min_tol = defaults::kSigmaMinTol);
/// z^{-n} g, realized by an n-stage shift register on the input.
RealizationSS delay(const RealizationSS& g, int n);
RealizationSS invert(const RealizationSS& g);

/// sum_i z^{-i} taps[i]; taps[0] is the feedthrough.
RealizationSS fir_realization(const std::vector<MatrixXd>& taps);
/// The causal tail sum_{j>=0} g_{j+n} z^{-j} of the impulse response, i.e.
/// (A, A^n B, C, C A^{n-1} B) for n >= 1.
RealizationSS markov_tail(const RealizationSS& g, int n);

// --- analysis -------------------------------------------------------------

MatrixXcd evaluate(const RealizationSS& g, double theta);
MatrixXcd evaluate_at(const RealizationSS& g, std::complex<double> z);
MarkovSequence markov(const RealizationSS& g, Index horizon);

MixedSystem split_stable_antistable(
    const RealizationSS& g, double eps_stab = defaults::kStabilityMargin);

struct Gramians {
  MatrixXd controllability;
  MatrixXd observability;
};
Gramians gramians(const RealizationSS& g);
/// Hankel singular values in decreasing order.
VectorXd hankel_singular_values(const RealizationSS& g);
double hankel_norm(const RealizationSS& g);

struct NormResult {
  double value = 0.0;
  double peak_theta = 0.0;
};
NormResult hinf_norm_peak(const RealizationSS& g,
                          double rel_tol = defaults::kNormRelTol);
double hinf_norm(const RealizationSS& g, double rel_tol = defaults::kNormRelTol);
double hinf_norm(const MixedSystem& g, double rel_tol = defaults::kNormRelTol);

/// Square-root balanced truncation of a stable system, discarding Hankel
/// singular values below tol * sigma_max.
RealizationSS balanced_truncation(const RealizationSS& g,
                                  double tol = defaults::kMinimalTol);
/// Order reduction for stable or mixed systems; mixed systems are split,
/// both parts truncated, and recombined.
RealizationSS minimal(const RealizationSS& g, double tol = defaults::kMinimalTol);

}  // namespace dhinf
