#pragma once

// Model matching ||T1 - T2 Q T3||_inf <= gamma, centralized and with the
// delay constraint Q in Y + z^{-N} RH-infinity, plus gamma bisection and
// controller recovery.
//
// Sign convention: internally Q enters as T1 - T2 Q T3. The Youla parameter
// of the plant (closed loop P11 + P12 Q P21) is the negative; Plant-level
// entry points and SynthesisReport::Q use the Youla sign.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dhinf/delay_structure.hpp"
#include "dhinf/factorizations.hpp"
#include "dhinf/lmi.hpp"
#include "dhinf/realization.hpp"
#include "dhinf/riccati.hpp"

namespace dhinf {

namespace defaults {
inline constexpr double kVerifyTol = 1e-3;    // final closed-loop audit slack
inline constexpr double kGateTol = 1e-6;      // relative band treated as failing a gate
inline constexpr double kGammaRelTol = 1e-3;  // bisection
}

struct Plant {
  MatrixXd A, B1, B2, C1, C2, D11, D12, D21, D22;

  Index states() const { return A.rows(); }
  Index w_dim() const { return B1.cols(); }
  Index u_dim() const { return B2.cols(); }
  Index z_dim() const { return C1.rows(); }
  Index y_dim() const { return C2.rows(); }

  RealizationSS P11() const { return RealizationSS(A, B1, C1, D11); }
  RealizationSS P12() const { return RealizationSS(A, B2, C1, D12); }
  RealizationSS P21() const { return RealizationSS(A, B1, C2, D21); }
  RealizationSS P22() const { return RealizationSS(A, B2, C2, D22); }
};

/// Throws on shape errors or an unstable A; returns warnings for the
/// standing assumptions (D12 full column rank, D21 full row rank,
/// C1^T D12 = 0, B1 D21^T = 0).
std::vector<std::string> validate(const Plant& p);

/// Full-information variant: y = w, so T3 = I and P22 = 0.
Plant full_information(const Plant& p);

enum class SynthesisMode {
  kCentralizedT3I,
  kCentralizedGeneral,
  kDistributedT3I,
  kDistributedGeneral,
  kDelayedOnly,
};
const char* to_string(SynthesisMode m);

/// gamma-independent part of the problem data.
struct ModelMatchData {
  RealizationSS T1, T2, T3;
  bool t3_identity = false;
  RealizationSS Ui, Uo;  // T2 = Ui Uo
  RealizationSS Y;       // (I - Ui Ui~) T1
  double y_norm = 0.0;
  std::vector<RiccatiAudit> audits;
};

ModelMatchData prepare(const RealizationSS& t1, const RealizationSS& t2,
                       const RealizationSS& t3);
ModelMatchData prepare(const Plant& p);

/// gamma-dependent factors. The right-hand side R of the Nehari problem and
/// the maps L, M with U_o Q Y_o^{-1} (or its general counterpart) = L Q M.
struct GammaFactors {
  double gamma = 0.0;
  bool gate_ok = false;
  std::string gate;  // "y_gate" / "z_gate" when failing
  RealizationSS Yo, Yo_inv;
  std::optional<RealizationSS> Vci, Vco, Z, Zco;
  std::optional<double> z_norm;
  RealizationSS R;
  RealizationSS L, M;
  RealizationSS Q_left, Q_right;  // Q = Q_left X Q_right
  std::vector<RiccatiAudit> audits;
};

GammaFactors gamma_factors(const ModelMatchData& d, double gamma, bool general);

/// Per-free-entry Markov coefficients of G(V) = L V M for taps 0..N-1.
struct AffineMarkovMap {
  std::vector<FreeEntry> entries;
  int N = 1;
  Index rows = 0, cols = 0;
  std::vector<std::vector<MatrixXd>> coeff;  // coeff[e][i]

  std::vector<MatrixXd> taps(const VectorXd& x) const;
};

AffineMarkovMap markov_affine_map(const RealizationSS& L, const RealizationSS& M,
                                  const DelayConstraint& c);

/// Hankel LMI data for R1 - q(V), with q(V) = sum_{k=1..N} z^{-k} G_{N-k}(V)^T
/// realized by a shift register appended to R1's states.
AffineLmiSystem build_rhat_realization(const RealizationSS& R1, const AffineMarkovMap& map);

/// Delta_N~ R = R1~ + R2 with R1, R2 stable and R1 strictly proper.
MixedSystem delayed_split(const RealizationSS& R, int N);

struct SynthesisOptions {
  double verify_tol = defaults::kVerifyTol;
  double gate_tol = defaults::kGateTol;
  LmiOptions lmi = [] {
    LmiOptions o;
    o.mode = LmiMode::kMinimize;
    return o;
  }();
  bool verify = true;
};

/// One synthesis attempt at a fixed gamma.
struct Attempt {
  SynthesisMode mode = SynthesisMode::kCentralizedT3I;
  double gamma = 0.0;
  bool feasible = false;
  std::string reason;         // why infeasible, empty otherwise
  double hankel = 0.0;        // Hankel norm of the (optimized) Nehari data
  std::optional<double> z_norm;
  RealizationSS Q;            // internal sign
  std::optional<RealizationSS> D;
  std::optional<StructuredFir> V;
  std::optional<FeasibilityCertificate> certificate;
  double achieved_norm = 0.0;  // ||T1 - T2 Q T3||_inf
  bool mask_ok = true;
  std::vector<RiccatiAudit> audits;
};

Attempt centralized_at(const ModelMatchData& d, double gamma, bool general,
                       const SynthesisOptions& opt = {});

/// mode: kDistributedT3I, kDistributedGeneral or kDelayedOnly.
Attempt distributed_at(const ModelMatchData& d, const DelayConstraint& c, double gamma,
                       SynthesisMode mode, const SynthesisOptions& opt = {});

struct GammaTrial {
  double gamma;
  bool feasible;
  std::string reason;
  double hankel;
};

struct SynthesisReport {
  SynthesisMode mode = SynthesisMode::kCentralizedT3I;
  std::vector<GammaTrial> gamma_history;
  double y_norm = 0.0;
  double gamma = 0.0;        // smallest feasible gamma found
  double gamma_lower = 0.0;  // largest gamma known infeasible (or the Y bound)
  bool monotone = true;      // no infeasible trial above a feasible one
  Attempt result;            // the attempt at `gamma`
  RealizationSS Q;           // Youla sign
  std::optional<RealizationSS> K;
};

struct BisectOptions {
  double rel_tol = defaults::kGammaRelTol;
  std::optional<double> upper;
  double max_expand = 64.0;
};

/// Smallest feasible gamma in [lower, upper] to relative tolerance.
SynthesisReport gamma_bisect(const std::function<Attempt(double)>& run, double lower,
                             const BisectOptions& opt = {});

/// K = Q (I + P22 Q)^{-1} for a Youla-sign Q.
RealizationSS recover_controller(const RealizationSS& Q, const RealizationSS& P22);

/// P11 + P12 K (I - P22 K)^{-1} P21.
RealizationSS closed_loop(const Plant& p, const RealizationSS& K);

/// Convenience: bisection for one mode on a plant. For the distributed modes
/// the constraint must be given.
SynthesisReport synthesize(const Plant& p, SynthesisMode mode,
                           const std::optional<DelayConstraint>& c = std::nullopt,
                           const SynthesisOptions& opt = {}, const BisectOptions& bopt = {});

/// Same at a fixed gamma (no bisection).
SynthesisReport synthesize_at(const Plant& p, SynthesisMode mode, double gamma,
                              const std::optional<DelayConstraint>& c = std::nullopt,
                              const SynthesisOptions& opt = {});

}  // namespace dhinf
