#include "dhinf/linalg.hpp"

#include <cmath>
#include <complex>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dhinf/errors.hpp"

namespace dhinf::linalg {

using cd = std::complex<double>;

double spectral_radius(const MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::EigenSolver<MatrixXd> es(a, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double min_singular_value(const MatrixXd& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::JacobiSVD<MatrixXd> svd(a);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

double unit_circle_distance(const MatrixXd& a) {
  if (a.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::EigenSolver<MatrixXd> es(a, false);
  return (es.eigenvalues().cwiseAbs().array() - 1.0).abs().minCoeff();
}

namespace {

Eigen::SelfAdjointEigenSolver<MatrixXd> sym_eig(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  require(es.info() == Eigen::Success, ErrorCode::kNumericalBreakdown,
          "symmetric eigendecomposition failed");
  return es;
}

}  // namespace

MatrixXd sym_sqrt(const MatrixXd& m, double floor) {
  if (m.size() == 0) return m;
  auto es = sym_eig(m);
  VectorXd d = es.eigenvalues().cwiseMax(floor).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd sym_inv_sqrt(const MatrixXd& m, double floor) {
  if (m.size() == 0) return m;
  auto es = sym_eig(m);
  VectorXd d = es.eigenvalues().cwiseMax(floor).cwiseSqrt().cwiseInverse();
  return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd psd_factor(const MatrixXd& m) {
  if (m.size() == 0) return m;
  auto es = sym_eig(m);
  VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * d.asDiagonal();
}

double lambda_max_sym(const MatrixXd& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double lambda_min_sym(const MatrixXd& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m),
                                             Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

// Swaps the adjacent 1x1 diagonal entries k, k+1 of the upper triangular T
// with a unitary rotation, updating the Schur vectors U.
void swap_adjacent(MatrixXcd& t, MatrixXcd& u, Eigen::Index k) {
  const cd t11 = t(k, k);
  const cd t22 = t(k + 1, k + 1);
  const cd v0 = t(k, k + 1);
  const cd v1 = t22 - t11;
  const double r = std::sqrt(std::norm(v0) + std::norm(v1));
  if (r == 0.0) return;
  Eigen::Matrix2cd z;
  z << v0 / r, -std::conj(v1) / r, v1 / r, std::conj(v0) / r;
  t.middleCols(k, 2) = t.middleCols(k, 2) * z;
  t.middleRows(k, 2) = z.adjoint() * t.middleRows(k, 2);
  u.middleCols(k, 2) = u.middleCols(k, 2) * z;
  t(k + 1, k) = 0.0;
  t(k, k) = t22;
  t(k + 1, k + 1) = t11;
}

}  // namespace

StableSplitBasis stable_invariant_basis(const MatrixXd& a) {
  const Eigen::Index n = a.rows();
  StableSplitBasis out;
  out.basis = MatrixXd::Identity(n, n);
  if (n == 0) return out;

  Eigen::ComplexSchur<MatrixXcd> schur(a.cast<cd>());
  require(schur.info() == Eigen::Success, ErrorCode::kNumericalBreakdown,
          "complex Schur decomposition failed");
  MatrixXcd t = schur.matrixT();
  MatrixXcd u = schur.matrixU();

  auto stable = [&](Eigen::Index i) { return std::abs(t(i, i)) < 1.0; };
  bool moved = true;
  while (moved) {
    moved = false;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
      if (!stable(k) && stable(k + 1)) {
        swap_adjacent(t, u, k);
        moved = true;
      }
    }
  }
  Eigen::Index k = 0;
  while (k < n && stable(k)) ++k;
  out.stable_count = k;
  if (k == 0 || k == n) return out;

  // The stable subspace of a real matrix is closed under conjugation, so the
  // real and imaginary parts of its complex Schur basis span it over R.
  MatrixXd stacked(n, 2 * k);
  stacked << u.leftCols(k).real(), u.leftCols(k).imag();
  Eigen::JacobiSVD<MatrixXd> svd(stacked, Eigen::ComputeFullU);
  out.basis = svd.matrixU();
  return out;
}

MatrixXd solve_sylvester(const MatrixXd& a, const MatrixXd& b,
                         const MatrixXd& c) {
  const Eigen::Index k = a.rows();
  const Eigen::Index l = b.rows();
  require(a.cols() == k && b.cols() == l && c.rows() == k && c.cols() == l,
          ErrorCode::kDimensionMismatch, "solve_sylvester shapes");
  if (k == 0 || l == 0) return MatrixXd::Zero(k, l);

  Eigen::ComplexSchur<MatrixXcd> sa(a.cast<cd>());
  Eigen::ComplexSchur<MatrixXcd> sb(b.cast<cd>());
  const MatrixXcd& s = sa.matrixT();
  const MatrixXcd& t = sb.matrixT();
  MatrixXcd f = sa.matrixU().adjoint() * c.cast<cd>() * sb.matrixU();
  MatrixXcd y(k, l);
  for (Eigen::Index j = 0; j < l; ++j) {
    Eigen::VectorXcd rhs = f.col(j);
    if (j > 0) rhs += y.leftCols(j) * t.col(j).head(j);
    MatrixXcd shifted = s;
    shifted.diagonal().array() -= t(j, j);
    y.col(j) = shifted.triangularView<Eigen::Upper>().solve(rhs);
  }
  return (sa.matrixU() * y * sb.matrixU().adjoint()).real();
}

MatrixXd solve_stein(const MatrixXd& a, const MatrixXd& w) {
  const Eigen::Index n = a.rows();
  require(a.cols() == n && w.rows() == n && w.cols() == n,
          ErrorCode::kDimensionMismatch, "solve_stein shapes");
  if (n == 0) return MatrixXd(0, 0);

  Eigen::ComplexSchur<MatrixXcd> schur(a.cast<cd>());
  require(schur.info() == Eigen::Success, ErrorCode::kNumericalBreakdown,
          "complex Schur decomposition failed");
  const MatrixXcd& t = schur.matrixT();
  const MatrixXcd& u = schur.matrixU();
  const MatrixXcd wt = u.adjoint() * w.cast<cd>() * u;

  // Column recursion for T X T^* - X = -W, last column first.
  MatrixXcd x = MatrixXcd::Zero(n, n);
  for (Eigen::Index j = n - 1; j >= 0; --j) {
    Eigen::VectorXcd rhs = -wt.col(j);
    const Eigen::Index rest = n - 1 - j;
    if (rest > 0) {
      Eigen::VectorXcd acc =
          x.rightCols(rest) * t.row(j).tail(rest).conjugate().transpose();
      rhs -= t * acc;
    }
    MatrixXcd lhs = std::conj(t(j, j)) * t;
    lhs.diagonal().array() -= 1.0;
    x.col(j) = lhs.triangularView<Eigen::Upper>().solve(rhs);
  }
  return symmetrize((u * x * u.adjoint()).real());
}

}  // namespace dhinf::linalg
