#pragma once

// Inner-outer and bi-stable spectral factorizations, their transposed
// ("co") forms, and the suboptimal Nehari approximant.

#include <optional>

#include "dhinf/realization.hpp"
#include "dhinf/riccati.hpp"

namespace dhinf {

namespace defaults {
inline constexpr double kFactorReduceTol = 1e-10;  // intermediate reductions
}

/// g = inner * outer. For the co-factorization the same struct holds
/// g = outer * inner with `inner` co-inner.
struct InnerOuterPair {
  RealizationSS inner;
  RealizationSS outer;
  MatrixXd H;
  MatrixXd F;
  std::optional<RiccatiAudit> audit;  // empty for static inputs
};

/// gamma^2 I - y~ y = M~ M (or, for the co form, I - z z~ = M M~).
struct SpectralFactor {
  RealizationSS M;
  double gamma = 1.0;
  std::optional<RiccatiAudit> audit;
};

struct NehariApproximant {
  RealizationSS Qn;
  double gamma = 1.0;
  MatrixXd U;
  Index reduced_order = 0;
  double hankel = 0.0;
};

InnerOuterPair inner_outer(const RealizationSS& g);
InnerOuterPair co_inner_outer(const RealizationSS& g);

SpectralFactor spectral_factor(const RealizationSS& y, double gamma,
                               double reduce_tol = defaults::kFactorReduceTol);
SpectralFactor co_spectral_factor(const RealizationSS& z, double gamma = 1.0,
                                  double reduce_tol = defaults::kFactorReduceTol);

/// Stable Qn with ||g - Qn~||_inf = gamma, for stable g with Hankel norm
/// below gamma. g is reduced with minimal(minimal_tol) first.
NehariApproximant nehari_approx(const RealizationSS& g, double gamma,
                                double minimal_tol = defaults::kMinimalTol);

// --- grid residuals used by tests and audits -------------------------------

/// max_theta ||U^* U - I||.
double isometry_residual(const RealizationSS& u, Index grid = 512);
/// max_theta ||U U^* - I||.
double co_isometry_residual(const RealizationSS& u, Index grid = 512);
/// max_theta ||gamma^2 I - y^* y - M^* M||.
double spectral_residual(const RealizationSS& y, const RealizationSS& m,
                         double gamma, Index grid = 512);
/// max_theta ||I - z z^* - M M^*||.
double co_spectral_residual(const RealizationSS& z, const RealizationSS& m,
                            double gamma = 1.0, Index grid = 512);
/// max_theta | sigma_max(g - Qn~) - gamma |.
double allpass_defect(const RealizationSS& g, const RealizationSS& qn,
                      double gamma, Index grid = 512);

}  // namespace dhinf
