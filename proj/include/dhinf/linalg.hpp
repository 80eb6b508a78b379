#pragma once

// Dense linear-algebra kernels shared by the state-space, Riccati and
// factorization code. Everything here works on small dense matrices
// (tens of rows) and favours backward-stable orthogonal methods.

#include <Eigen/Dense>

namespace dhinf::linalg {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double spectral_radius(const MatrixXd& a);
double min_singular_value(const MatrixXd& a);
/// Smallest | |lambda| - 1 | over the eigenvalues of `a` (infinity if empty).
double unit_circle_distance(const MatrixXd& a);

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Symmetric square root via eigendecomposition; eigenvalues below `floor`
/// are raised to `floor`.
MatrixXd sym_sqrt(const MatrixXd& m, double floor = 1e-12);
MatrixXd sym_inv_sqrt(const MatrixXd& m, double floor = 1e-12);
/// Symmetric PSD factor L with m = L L^T (negative eigenvalues clipped to 0).
MatrixXd psd_factor(const MatrixXd& m);
double lambda_max_sym(const MatrixXd& m);
double lambda_min_sym(const MatrixXd& m);

/// Real orthonormal basis W = [W1 W2] such that span(W1) is the invariant
/// subspace of `a` for eigenvalues strictly inside the unit circle.
struct StableSplitBasis {
  MatrixXd basis;
  Eigen::Index stable_count = 0;
};
StableSplitBasis stable_invariant_basis(const MatrixXd& a);

/// Solves a X - X b = c (a, b with disjoint spectra) by Bartels-Stewart on
/// complex Schur forms.
MatrixXd solve_sylvester(const MatrixXd& a, const MatrixXd& b,
                         const MatrixXd& c);

/// Solves the Stein equation a X a^T - X + w = 0 for spectral radius < 1
/// and symmetric w; the result is symmetrized.
MatrixXd solve_stein(const MatrixXd& a, const MatrixXd& w);

}  // namespace dhinf::linalg
