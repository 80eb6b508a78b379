#pragma once

// Hankel-norm LMI over a realization whose output map is affine in a vector
// of free parameters x:
//   B1 = [A^T Q A - Q, C(x)^T; C(x), -lambda I] <= 0
//   B2 = [-P, P B, P A; B^T P, -I, 0; A^T P, 0, -P] <= 0
//   B3 = Q - P <= 0,   lambda < 1,
// solved by a dense log-det barrier method that minimizes lambda. The
// optimal lambda is the squared Hankel norm minimized over x.

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dhinf/realization.hpp"

namespace dhinf {

struct AffineLmiSystem {
  MatrixXd A;
  MatrixXd B;
  MatrixXd C0;
  std::vector<MatrixXd> Ccoef;

  Index states() const { return A.rows(); }
  Index inputs() const { return B.cols(); }
  Index outputs() const { return C0.rows(); }
  Index free_count() const { return static_cast<Index>(Ccoef.size()); }
  MatrixXd C(const VectorXd& x) const;
};

struct LmiBlocks {
  MatrixXd b1, b2, b3;
};

LmiBlocks evaluate_blocks(const AffineLmiSystem& sys, const VectorXd& x,
                          const MatrixXd& P, const MatrixXd& Q, double lambda);

AffineLmiSystem build_hankel_lmi(const MatrixXd& a, const MatrixXd& b,
                                 const MatrixXd& c_const,
                                 const std::vector<MatrixXd>& c_coeffs);

/// Restriction to the controllable subspace in coordinates where the
/// controllability Gramian is I. raw state = T * internal state.
struct PreconditionedLmi {
  AffineLmiSystem system;
  MatrixXd T;
};
PreconditionedLmi precondition(const AffineLmiSystem& raw);

enum class LmiMode {
  kFeasibility,  // stop at the first strictly feasible iterate
  kMinimize,     // drive lambda to its minimum, keep the best feasible iterate
};

struct LmiOptions {
  LmiMode mode = LmiMode::kFeasibility;
  double eps_strict = 1e-7;
  int max_iterations = 500;
  double barrier_growth = 10.0;
  double gap_tol = 1e-9;
  double step_floor = 1e-12;
  bool parallel = true;
  std::optional<VectorXd> x0;
};

struct FeasibilityCertificate {
  bool feasible = false;
  VectorXd x;
  MatrixXd P, Q;  // internal coordinates of `system`
  double lambda = 0.0;
  double margin = 0.0;              // max eigenvalue over B1 and B2
  double lambda_lower_bound = 0.0;  // from the barrier duality gap
  double t_star = 0.0;              // lambda_lower_bound - 1 when infeasible
  int iterations = 0;
  std::string status;
  AffineLmiSystem system;  // internal system the certificate refers to
  MatrixXd T;
};

FeasibilityCertificate solve_feasibility(const AffineLmiSystem& sys,
                                         const LmiOptions& opt = {});

struct CertificateAudit {
  bool ok = false;
  double b1_max = 0.0, b2_max = 0.0, b3_max = 0.0;
  double lambda = 0.0;
};
/// Recomputes every block eigenvalue at the certificate point.
CertificateAudit audit_certificate(const FeasibilityCertificate& cert,
                                   double eps_strict = 1e-7);

/// hankel_norm(g) < 1 decided through the LMI.
bool hankel_test(const RealizationSS& g, const LmiOptions& opt = {});

/// SDPA sparse format: minimize lambda s.t. sum_i y_i F_i - F_0 >= 0 with
/// y = (x, svec P, svec Q, lambda).
void write_sdpa(std::ostream& os, const AffineLmiSystem& sys);

// --- barrier kernels (exposed for tests and benchmarks) ---------------------

/// y layout: [x | upper-triangular entries of P | of Q | lambda].
struct LmiLayout {
  Index nx = 0, n = 0;
  Index sym() const { return n * (n + 1) / 2; }
  Index size() const { return nx + 2 * sym() + 1; }
  Index p_offset() const { return nx; }
  Index q_offset() const { return nx + sym(); }
  Index lambda_index() const { return nx + 2 * sym(); }
};

VectorXd pack_variables(const LmiLayout& lay, const VectorXd& x, const MatrixXd& P,
                        const MatrixXd& Q, double lambda);
void unpack_variables(const LmiLayout& lay, const VectorXd& y, VectorXd& x,
                      MatrixXd& P, MatrixXd& Q, double& lambda);

struct BarrierDerivatives {
  bool interior = false;
  double value = 0.0;  // -sum log det(-B_j)
  VectorXd gradient;
  MatrixXd hessian;
};
BarrierDerivatives barrier_derivatives(const AffineLmiSystem& sys, const VectorXd& y,
                                       bool parallel = true);

}  // namespace dhinf
