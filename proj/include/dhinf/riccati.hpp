#pragma once

// Generalized discrete algebraic Riccati equation
//   X = A^T X A + Qm + (A^T X B + S) F,
//   F = -(R + B^T X B)^{-1} (B^T X A + S^T),
// and the discrete Lyapunov equation.

#include <string>

#include <Eigen/Dense>

namespace dhinf {

using Eigen::MatrixXd;

struct GdareProblem {
  MatrixXd A, B, Qm, R, S;
};

enum class GdareMethod { kDoubling, kNewton };

struct GdareSolution {
  MatrixXd X;
  MatrixXd F;
  double closed_loop_radius = 0.0;
  double residual = 0.0;  // ||res||_F / max(1, ||X||_F)
  int iterations = 0;
  GdareMethod method = GdareMethod::kDoubling;
};

struct GdareOptions {
  double tol = 1e-10;
  int max_iterations = 200;
};

/// What a pipeline stage records about the Riccati solve it relied on.
struct RiccatiAudit {
  std::string stage;
  double residual = 0.0;
  double closed_loop_radius = 0.0;
  int iterations = 0;
  GdareMethod method = GdareMethod::kDoubling;
};

RiccatiAudit make_audit(std::string stage, const GdareSolution& s);
const char* to_string(GdareMethod m);

/// Normalized residual of a candidate X for problem p.
double gdare_residual(const GdareProblem& p, const MatrixXd& x);

GdareSolution solve_gdare(const GdareProblem& p, const GdareOptions& opt = {});

/// Solves A X A^T - X + W = 0 for a stable A.
MatrixXd solve_dlyap(const MatrixXd& a, const MatrixXd& w);

}  // namespace dhinf
