#include "dhinf/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <Eigen/Eigenvalues>

#include "dhinf/errors.hpp"
#include "dhinf/linalg.hpp"

namespace dhinf {

MatrixXd AffineLmiSystem::C(const VectorXd& x) const {
  require(x.size() == free_count(), ErrorCode::kDimensionMismatch,
          "lmi: parameter vector length");
  MatrixXd c = C0;
  for (Index i = 0; i < x.size(); ++i) c += x(i) * Ccoef[i];
  return c;
}

LmiBlocks evaluate_blocks(const AffineLmiSystem& sys, const VectorXd& x,
                          const MatrixXd& P, const MatrixXd& Q, double lambda) {
  const Index n = sys.states(), m = sys.inputs(), p = sys.outputs();
  const MatrixXd& a = sys.A;
  const MatrixXd& b = sys.B;
  const MatrixXd c = sys.C(x);
  LmiBlocks out;
  out.b1 = MatrixXd::Zero(n + p, n + p);
  out.b1.topLeftCorner(n, n) = a.transpose() * Q * a - Q;
  out.b1.topRightCorner(n, p) = c.transpose();
  out.b1.bottomLeftCorner(p, n) = c;
  out.b1.bottomRightCorner(p, p) = -lambda * MatrixXd::Identity(p, p);
  out.b2 = MatrixXd::Zero(2 * n + m, 2 * n + m);
  out.b2.topLeftCorner(n, n) = -P;
  out.b2.block(0, n, n, m) = P * b;
  out.b2.block(0, n + m, n, n) = P * a;
  out.b2.block(n, 0, m, n) = b.transpose() * P;
  out.b2.block(n, n, m, m) = -MatrixXd::Identity(m, m);
  out.b2.block(n + m, 0, n, n) = a.transpose() * P;
  out.b2.block(n + m, n + m, n, n) = -P;
  out.b3 = Q - P;
  out.b1 = linalg::symmetrize(out.b1);
  out.b2 = linalg::symmetrize(out.b2);
  out.b3 = linalg::symmetrize(out.b3);
  return out;
}

AffineLmiSystem build_hankel_lmi(const MatrixXd& a, const MatrixXd& b,
                                 const MatrixXd& c_const,
                                 const std::vector<MatrixXd>& c_coeffs) {
  const Index n = a.rows();
  require(a.cols() == n && b.rows() == n && c_const.cols() == n,
          ErrorCode::kDimensionMismatch, "build_hankel_lmi: A/B/C shapes");
  for (const auto& ci : c_coeffs)
    require(ci.rows() == c_const.rows() && ci.cols() == n, ErrorCode::kDimensionMismatch,
            "build_hankel_lmi: coefficient shape");
  require(linalg::spectral_radius(a) < 1.0, ErrorCode::kNotStable,
          "build_hankel_lmi: A not stable");
  return {a, b, c_const, c_coeffs};
}

PreconditionedLmi precondition(const AffineLmiSystem& raw) {
  const Index n = raw.states();
  PreconditionedLmi out;
  if (n == 0) {
    out.system = raw;
    out.T = MatrixXd(0, 0);
    return out;
  }
  const MatrixXd wc = linalg::solve_stein(raw.A, raw.B * raw.B.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(wc);
  const VectorXd& ev = es.eigenvalues();
  const double top = ev.maxCoeff();
  std::vector<Index> keep;
  for (Index i = n - 1; i >= 0; --i)
    if (top > 0.0 && ev(i) > 1e-12 * top) keep.push_back(i);
  const Index k = static_cast<Index>(keep.size());
  MatrixXd t(n, k), ti(k, n);
  for (Index j = 0; j < k; ++j) {
    const double s = std::sqrt(ev(keep[j]));
    t.col(j) = es.eigenvectors().col(keep[j]) * s;
    ti.row(j) = es.eigenvectors().col(keep[j]).transpose() / s;
  }
  out.T = t;
  out.system.A = ti * raw.A * t;
  out.system.B = ti * raw.B;
  out.system.C0 = raw.C0 * t;
  out.system.Ccoef.reserve(raw.Ccoef.size());
  for (const auto& ci : raw.Ccoef) out.system.Ccoef.push_back(ci * t);
  return out;
}

// --- variable packing -------------------------------------------------------

namespace {

struct SymIndex {
  Index a, b;
};

std::vector<SymIndex> sym_pairs(Index n) {
  std::vector<SymIndex> v;
  v.reserve(n * (n + 1) / 2);
  for (Index a = 0; a < n; ++a)
    for (Index b = a; b < n; ++b) v.push_back({a, b});
  return v;
}

MatrixXd unsvec(const VectorXd& y, Index offset, Index n) {
  MatrixXd m(n, n);
  Index k = offset;
  for (Index a = 0; a < n; ++a)
    for (Index b = a; b < n; ++b) {
      m(a, b) = y(k);
      m(b, a) = y(k);
      ++k;
    }
  return m;
}

// out[offset + idx(a,b)] += <S, E_ab> for symmetric S.
void add_sym_adjoint(const MatrixXd& s, Index offset, double sign, VectorXd& out) {
  const Index n = s.rows();
  Index k = offset;
  for (Index a = 0; a < n; ++a)
    for (Index b = a; b < n; ++b) {
      out(k) += sign * (a == b ? s(a, a) : s(a, b) + s(b, a));
      ++k;
    }
}

}  // namespace

VectorXd pack_variables(const LmiLayout& lay, const VectorXd& x, const MatrixXd& P,
                        const MatrixXd& Q, double lambda) {
  VectorXd y(lay.size());
  y.head(lay.nx) = x;
  Index k = lay.p_offset();
  for (Index a = 0; a < lay.n; ++a)
    for (Index b = a; b < lay.n; ++b) y(k++) = 0.5 * (P(a, b) + P(b, a));
  k = lay.q_offset();
  for (Index a = 0; a < lay.n; ++a)
    for (Index b = a; b < lay.n; ++b) y(k++) = 0.5 * (Q(a, b) + Q(b, a));
  y(lay.lambda_index()) = lambda;
  return y;
}

void unpack_variables(const LmiLayout& lay, const VectorXd& y, VectorXd& x, MatrixXd& P,
                      MatrixXd& Q, double& lambda) {
  x = y.head(lay.nx);
  P = unsvec(y, lay.p_offset(), lay.n);
  Q = unsvec(y, lay.q_offset(), lay.n);
  lambda = y(lay.lambda_index());
}

// --- barrier ----------------------------------------------------------------

namespace {

struct BlockInverse {
  bool ok = false;
  double logdet = 0.0;
  MatrixXd w;
};

BlockInverse neg_inverse(const MatrixXd& blk) {
  BlockInverse out;
  if (blk.rows() == 0) {
    out.ok = true;
    out.w = MatrixXd(0, 0);
    return out;
  }
  Eigen::LLT<MatrixXd> llt(-blk);
  if (llt.info() != Eigen::Success) return out;
  const VectorXd diag = llt.matrixLLT().diagonal();
  if ((diag.array() <= 0.0).any() || !diag.allFinite()) return out;
  out.logdet = 2.0 * diag.array().log().sum();
  out.w = linalg::symmetrize(llt.solve(MatrixXd::Identity(blk.rows(), blk.cols())));
  out.ok = true;
  return out;
}

struct BarrierState {
  bool ok = false;
  double value = 0.0;
  BlockInverse w1, w2, w3;
};

BarrierState barrier_state(const AffineLmiSystem& sys, const LmiLayout& lay,
                           const VectorXd& y, bool need_inverses) {
  VectorXd x;
  MatrixXd P, Q;
  double lambda;
  unpack_variables(lay, y, x, P, Q, lambda);
  const LmiBlocks blk = evaluate_blocks(sys, x, P, Q, lambda);
  BarrierState st;
  st.w1 = neg_inverse(blk.b1);
  if (!st.w1.ok) return st;
  st.w2 = neg_inverse(blk.b2);
  if (!st.w2.ok) return st;
  st.w3 = neg_inverse(blk.b3);
  if (!st.w3.ok) return st;
  st.value = -(st.w1.logdet + st.w2.logdet + st.w3.logdet);
  st.ok = true;
  if (!need_inverses) st.w1.w.resize(0, 0), st.w2.w.resize(0, 0), st.w3.w.resize(0, 0);
  return st;
}

// Adjoints of the three linear maps y -> B_j(y) - B_j(0).
void adjoint_b1(const AffineLmiSystem& sys, const LmiLayout& lay, const MatrixXd& m,
                VectorXd& out) {
  const Index n = lay.n, p = sys.outputs();
  const auto m11 = m.topLeftCorner(n, n);
  const auto m21 = m.bottomLeftCorner(p, n);
  for (Index k = 0; k < lay.nx; ++k) out(k) += 2.0 * m21.cwiseProduct(sys.Ccoef[k]).sum();
  const MatrixXd s = sys.A * m11 * sys.A.transpose() - m11;
  add_sym_adjoint(s, lay.q_offset(), 1.0, out);
  out(lay.lambda_index()) -= m.bottomRightCorner(p, p).trace();
}

void adjoint_b2(const AffineLmiSystem& sys, const LmiLayout& lay, const MatrixXd& m,
                VectorXd& out) {
  const Index n = lay.n, mm = sys.inputs();
  const MatrixXd m12 = m.block(0, n, n, mm);
  const MatrixXd m13 = m.block(0, n + mm, n, n);
  MatrixXd s = -m.topLeftCorner(n, n) - m.block(n + mm, n + mm, n, n);
  const MatrixXd t = m12 * sys.B.transpose() + m13 * sys.A.transpose();
  s += t + t.transpose();
  add_sym_adjoint(s, lay.p_offset(), 1.0, out);
}

void adjoint_b3(const LmiLayout& lay, const MatrixXd& m, VectorXd& out) {
  add_sym_adjoint(m, lay.q_offset(), 1.0, out);
  add_sym_adjoint(m, lay.p_offset(), -1.0, out);
}

// Precomputed products of the block inverses used by every Hessian column.
struct HessianCache {
  MatrixXd g1;  // W1[:, :n] A^T
  MatrixXd gk;  // W2 [0; B^T; A^T]
};

// W_j F_ji W_j for every block touched by variable i, folded through the
// adjoints into Hessian column i.
VectorXd hessian_column(const AffineLmiSystem& sys, const LmiLayout& lay,
                        const std::vector<SymIndex>& pairs, const BarrierState& st,
                        const HessianCache& hc, Index i) {
  const Index n = lay.n, p = sys.outputs(), mm = sys.inputs();
  VectorXd col = VectorXd::Zero(lay.size());
  const MatrixXd& w1 = st.w1.w;
  const MatrixXd& w2 = st.w2.w;
  const MatrixXd& w3 = st.w3.w;

  auto sym_outer = [](const auto& u, const auto& v, bool diag) {
    MatrixXd r = u * v.transpose();
    if (!diag) r += v * u.transpose();
    return r;
  };

  if (i < lay.nx) {
    const MatrixXd t = w1.rightCols(p) * sys.Ccoef[i] * w1.topRows(n);
    adjoint_b1(sys, lay, MatrixXd(t + t.transpose()), col);
    return col;
  }
  if (i == lay.lambda_index()) {
    adjoint_b1(sys, lay, MatrixXd(-w1.rightCols(p) * w1.bottomRows(p)), col);
    return col;
  }
  if (i < lay.q_offset()) {
    const SymIndex e = pairs[i - lay.p_offset()];
    const bool diag = e.a == e.b;
    // B2 direction: -J1'EJ1 - J3'EJ3 + J1'EK + K'EJ1.
    const auto u1 = w2.col(e.a), v1 = w2.col(e.b);
    const auto u3 = w2.col(n + mm + e.a), v3 = w2.col(n + mm + e.b);
    const auto uk = hc.gk.col(e.a), vk = hc.gk.col(e.b);
    MatrixXd m2 = -sym_outer(u1, v1, diag) - sym_outer(u3, v3, diag);
    MatrixXd cross = u1 * vk.transpose();
    if (!diag) cross += v1 * uk.transpose();
    m2 += cross + cross.transpose();
    adjoint_b2(sys, lay, m2, col);
    if (n > 0) adjoint_b3(lay, MatrixXd(-sym_outer(w3.col(e.a), w3.col(e.b), diag)), col);
    return col;
  }
  const SymIndex e = pairs[i - lay.q_offset()];
  const bool diag = e.a == e.b;
  // B1 direction: A'EA - E in the state block.
  MatrixXd m1 = sym_outer(hc.g1.col(e.a), hc.g1.col(e.b), diag) -
                sym_outer(w1.col(e.a), w1.col(e.b), diag);
  adjoint_b1(sys, lay, m1, col);
  adjoint_b3(lay, MatrixXd(sym_outer(w3.col(e.a), w3.col(e.b), diag)), col);
  return col;
}

}  // namespace

BarrierDerivatives barrier_derivatives(const AffineLmiSystem& sys, const VectorXd& y,
                                       bool parallel) {
  LmiLayout lay{sys.free_count(), sys.states()};
  require(y.size() == lay.size(), ErrorCode::kDimensionMismatch, "barrier: y length");
  BarrierDerivatives out;
  const BarrierState st = barrier_state(sys, lay, y, true);
  if (!st.ok) return out;
  out.interior = true;
  out.value = st.value;
  out.gradient = VectorXd::Zero(lay.size());
  adjoint_b1(sys, lay, st.w1.w, out.gradient);
  adjoint_b2(sys, lay, st.w2.w, out.gradient);
  adjoint_b3(lay, st.w3.w, out.gradient);

  const Index n = lay.n, mm = sys.inputs();
  HessianCache hc;
  hc.g1 = st.w1.w.leftCols(n) * sys.A.transpose();
  hc.gk = st.w2.w.middleCols(n, mm) * sys.B.transpose() +
          st.w2.w.rightCols(n) * sys.A.transpose();
  const auto pairs = sym_pairs(n);
  const Index nv = lay.size();
  out.hessian.resize(nv, nv);
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 4)
    for (Index i = 0; i < nv; ++i)
      out.hessian.col(i) = hessian_column(sys, lay, pairs, st, hc, i);
  } else {
    for (Index i = 0; i < nv; ++i)
      out.hessian.col(i) = hessian_column(sys, lay, pairs, st, hc, i);
  }
  out.hessian = linalg::symmetrize(out.hessian);
  return out;
}

// --- solver -----------------------------------------------------------------

namespace {

struct Margins {
  double b1 = 0.0, b2 = 0.0, b3 = 0.0;
};

Margins block_margins(const AffineLmiSystem& sys, const LmiLayout& lay, const VectorXd& y) {
  VectorXd x;
  MatrixXd P, Q;
  double lambda;
  unpack_variables(lay, y, x, P, Q, lambda);
  const LmiBlocks blk = evaluate_blocks(sys, x, P, Q, lambda);
  auto top = [](const MatrixXd& m) {
    return m.rows() ? linalg::lambda_max_sym(m) : -std::numeric_limits<double>::infinity();
  };
  return {top(blk.b1), top(blk.b2), top(blk.b3)};
}

bool strictly_feasible(const Margins& mg, double lambda, double eps) {
  return lambda <= 1.0 - eps && mg.b1 <= -eps && mg.b2 <= -eps && mg.b3 <= 0.0;
}

void fill_certificate(FeasibilityCertificate& c, const LmiLayout& lay, const VectorXd& y,
                      const Margins& mg) {
  unpack_variables(lay, y, c.x, c.P, c.Q, c.lambda);
  c.margin = std::max(mg.b1, mg.b2);
}

}  // namespace

FeasibilityCertificate solve_feasibility(const AffineLmiSystem& raw, const LmiOptions& opt) {
  const PreconditionedLmi pre = precondition(raw);
  const AffineLmiSystem& sys = pre.system;
  FeasibilityCertificate cert;
  cert.system = sys;
  cert.T = pre.T;
  const Index n = sys.states(), p = sys.outputs(), m = sys.inputs();
  const LmiLayout lay{sys.free_count(), n};
  const double eps = opt.eps_strict;
  VectorXd x0 = opt.x0 ? *opt.x0 : VectorXd::Zero(lay.nx);
  require(x0.size() == lay.nx, ErrorCode::kDimensionMismatch, "lmi: x0 length");

  if (n == 0) {
    // No controllable state: the Hankel operator vanishes.
    cert.feasible = true;
    cert.x = x0;
    cert.P = cert.Q = MatrixXd(0, 0);
    cert.lambda = 10.0 * eps;
    cert.margin = std::max(-cert.lambda, m > 0 ? -1.0 : -cert.lambda);
    cert.status = "trivial: no controllable states";
    return cert;
  }

  // Strictly feasible start. Internal coordinates have Wc = I.
  const MatrixXd lc = linalg::solve_stein(sys.A, MatrixXd::Identity(n, n));
  const MatrixXd p0 = (MatrixXd::Identity(n, n) + 0.1 * lc).inverse();
  const MatrixXd c0 = sys.C(x0);
  const MatrixXd wo = linalg::solve_stein(sys.A.transpose(), c0.transpose() * c0);
  const MatrixXd li = linalg::solve_stein(sys.A.transpose(), MatrixXd::Identity(n, n));
  const MatrixXd base = wo + 0.1 * std::max(1.0, wo.norm()) * li;
  const MatrixXd pis = linalg::sym_inv_sqrt(p0);
  const double kappa = 0.5 / linalg::lambda_max_sym(pis * base * pis);
  const double lambda0 = 2.0 / kappa;
  VectorXd y = pack_variables(lay, x0, p0, linalg::symmetrize(kappa * base), lambda0);

  const double mtot = static_cast<double>((n + p) + (2 * n + m) + n);
  const double slack = mtot + std::sqrt(mtot);
  double s = mtot / lambda0;
  const Index li_idx = lay.lambda_index();

  bool have_best = false;
  VectorXd best_y;
  Margins best_m;
  cert.lambda_lower_bound = 0.0;
  cert.status = "iteration limit";

  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    const BarrierDerivatives bd = barrier_derivatives(sys, y, opt.parallel);
    if (!bd.interior) {
      cert.status = "numerical breakdown: left the interior";
      break;
    }
    const Margins mg = block_margins(sys, lay, y);
    if (strictly_feasible(mg, y(li_idx), eps) &&
        (!have_best || y(li_idx) < best_y(li_idx))) {
      have_best = true;
      best_y = y;
      best_m = mg;
      if (opt.mode == LmiMode::kFeasibility) {
        cert.status = "strictly feasible";
        break;
      }
    }

    VectorXd grad = bd.gradient;
    grad(li_idx) += s;
    MatrixXd h = bd.hessian;
    const double reg = 1e-13 * std::max(1.0, h.diagonal().cwiseAbs().maxCoeff());
    h.diagonal().array() += reg;
    Eigen::LLT<MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) {
      cert.status = "numerical breakdown: singular Newton system";
      break;
    }
    const VectorXd d = -llt.solve(grad);
    const double dec2 = -grad.dot(d);

    if (dec2 <= 1e-6) {
      const double lb = y(li_idx) - slack / s;
      cert.lambda_lower_bound = std::max(cert.lambda_lower_bound, lb);
      if (lb >= 1.0 - eps) {
        cert.status = "infeasible: lambda lower bound >= 1";
        break;
      }
      if (mtot / s < opt.gap_tol) {
        cert.status = have_best ? "optimal" : "converged without strict feasibility";
        break;
      }
      s *= opt.barrier_growth;
      continue;
    }

    // Backtracking line search on s*lambda + barrier.
    const double f0 = s * y(li_idx) + bd.value;
    const double slope = grad.dot(d);
    double t = 1.0;
    bool moved = false;
    LmiLayout l2 = lay;
    while (t >= opt.step_floor) {
      const VectorXd yt = y + t * d;
      const BarrierState st = barrier_state(sys, l2, yt, false);
      if (st.ok && s * yt(li_idx) + st.value <= f0 + 0.25 * t * slope) {
        y = yt;
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) {
      // Cannot make progress at this barrier weight; tighten it instead.
      const double lb = y(li_idx) - slack / s;
      cert.lambda_lower_bound = std::max(cert.lambda_lower_bound, lb);
      if (lb >= 1.0 - eps) {
        cert.status = "infeasible: lambda lower bound >= 1";
        break;
      }
      if (mtot / s < opt.gap_tol) {
        cert.status = have_best ? "optimal" : "stalled";
        break;
      }
      s *= opt.barrier_growth;
    }
  }
  cert.iterations = it;

  if (have_best) {
    cert.feasible = true;
    fill_certificate(cert, lay, best_y, best_m);
  } else {
    cert.feasible = false;
    fill_certificate(cert, lay, y, block_margins(sys, lay, y));
  }
  cert.t_star = cert.feasible ? cert.lambda - 1.0 : cert.lambda_lower_bound - 1.0;
  return cert;
}

CertificateAudit audit_certificate(const FeasibilityCertificate& cert, double eps) {
  CertificateAudit a;
  a.lambda = cert.lambda;
  const LmiBlocks blk = evaluate_blocks(cert.system, cert.x, cert.P, cert.Q, cert.lambda);
  auto top = [](const MatrixXd& m) {
    return m.rows() ? linalg::lambda_max_sym(m) : -std::numeric_limits<double>::infinity();
  };
  a.b1_max = top(blk.b1);
  a.b2_max = top(blk.b2);
  a.b3_max = top(blk.b3);
  a.ok = cert.lambda < 1.0 - eps && a.b1_max <= -eps && a.b2_max <= -eps && a.b3_max <= 0.0;
  return a;
}

bool hankel_test(const RealizationSS& g, const LmiOptions& opt) {
  require(g.is_stable(), ErrorCode::kNotStable, "hankel_test: system not stable");
  const auto cert =
      solve_feasibility(build_hankel_lmi(g.A(), g.B(), g.C(), {}), opt);
  return cert.feasible;
}

void write_sdpa(std::ostream& os, const AffineLmiSystem& sys) {
  const Index n = sys.states(), p = sys.outputs(), m = sys.inputs();
  const LmiLayout lay{sys.free_count(), n};
  const Index nv = lay.size();
  os << "* Hankel-norm LMI: minimize lambda\n";
  os << nv << "\n3\n" << (n + p) << " " << (2 * n + m) << " " << (n > 0 ? n : 1) << "\n";
  for (Index i = 0; i < nv; ++i) os << (i == lay.lambda_index() ? 1 : 0) << (i + 1 < nv ? " " : "\n");

  os.precision(17);
  auto emit = [&](Index mat, const LmiBlocks& blk, double sign) {
    const MatrixXd* blocks[3] = {&blk.b1, &blk.b2, &blk.b3};
    for (int j = 0; j < 3; ++j) {
      const MatrixXd& b = *blocks[j];
      for (Index r = 0; r < b.rows(); ++r)
        for (Index c = r; c < b.cols(); ++c)
          if (b(r, c) != 0.0)
            os << mat << " " << (j + 1) << " " << (r + 1) << " " << (c + 1) << " "
               << sign * b(r, c) << "\n";
    }
  };
  const VectorXd zero = VectorXd::Zero(nv);
  VectorXd x;
  MatrixXd P, Q;
  double lam;
  unpack_variables(lay, zero, x, P, Q, lam);
  const LmiBlocks b0 = evaluate_blocks(sys, x, P, Q, lam);
  emit(0, b0, 1.0);
  for (Index i = 0; i < nv; ++i) {
    VectorXd e = zero;
    e(i) = 1.0;
    unpack_variables(lay, e, x, P, Q, lam);
    LmiBlocks bi = evaluate_blocks(sys, x, P, Q, lam);
    bi.b1 -= b0.b1;
    bi.b2 -= b0.b2;
    bi.b3 -= b0.b3;
    emit(i + 1, bi, -1.0);
  }
}

}  // namespace dhinf
