#include "dhinf/riccati.hpp"

#include <cmath>
#include <optional>

#include "dhinf/errors.hpp"
#include "dhinf/linalg.hpp"

namespace dhinf {

namespace {

void check_shapes(const GdareProblem& p) {
  const auto n = p.A.rows(), m = p.B.cols();
  require(p.A.cols() == n && p.B.rows() == n, ErrorCode::kDimensionMismatch,
          "gdare: A/B shapes");
  require(p.Qm.rows() == n && p.Qm.cols() == n, ErrorCode::kDimensionMismatch,
          "gdare: Qm shape");
  require(p.R.rows() == m && p.R.cols() == m, ErrorCode::kDimensionMismatch,
          "gdare: R shape");
  require(p.S.rows() == n && p.S.cols() == m, ErrorCode::kDimensionMismatch,
          "gdare: S shape");
  const double sq = (p.Qm - p.Qm.transpose()).norm();
  const double sr = (p.R - p.R.transpose()).norm();
  require(sq <= 1e-12 * std::max(1.0, p.Qm.norm()) &&
              sr <= 1e-12 * std::max(1.0, p.R.norm()),
          ErrorCode::kInvalidArgument, "gdare: Qm and R must be symmetric");
}

// F = -(R + B^T X B)^{-1} (B^T X A + S^T); empty when R + B^T X B is not
// positive definite.
std::optional<MatrixXd> gain(const GdareProblem& p, const MatrixXd& x) {
  const MatrixXd m = linalg::symmetrize(p.R + p.B.transpose() * x * p.B);
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) return std::nullopt;
  return MatrixXd(-llt.solve(p.B.transpose() * x * p.A + p.S.transpose()));
}

MatrixXd riccati_map_residual(const GdareProblem& p, const MatrixXd& x,
                              const MatrixXd& f) {
  return x - (p.A.transpose() * x * p.A + p.Qm +
              (p.A.transpose() * x * p.B + p.S) * f);
}

double normalized(const MatrixXd& res, const MatrixXd& x) {
  return res.norm() / std::max(1.0, x.norm());
}

struct Attempt {
  GdareSolution sol;
  bool ok = false;
};

Attempt finish(const GdareProblem& p, const MatrixXd& x_raw, int iters,
               GdareMethod method, double tol) {
  Attempt at;
  at.sol.X = linalg::symmetrize(x_raw);
  at.sol.iterations = iters;
  at.sol.method = method;
  auto f = gain(p, at.sol.X);
  if (!f || !f->allFinite() || !at.sol.X.allFinite()) return at;
  at.sol.F = *f;
  at.sol.residual = normalized(riccati_map_residual(p, at.sol.X, at.sol.F), at.sol.X);
  at.sol.closed_loop_radius = linalg::spectral_radius(p.A + p.B * at.sol.F);
  at.ok = at.sol.residual < tol && at.sol.closed_loop_radius < 1.0;
  return at;
}

// Structured doubling on X = At^T X (I + G X)^{-1} At + H0.
Attempt doubling(const GdareProblem& p, const GdareOptions& opt) {
  const auto n = p.A.rows();
  Eigen::LLT<MatrixXd> rl(linalg::symmetrize(p.R));
  if (rl.info() != Eigen::Success) return {};
  MatrixXd ak = p.A - p.B * rl.solve(p.S.transpose());
  MatrixXd gk = linalg::symmetrize(p.B * rl.solve(p.B.transpose()));
  MatrixXd hk = linalg::symmetrize(p.Qm - p.S * rl.solve(p.S.transpose()));
  const MatrixXd eye = MatrixXd::Identity(n, n);
  int it = 0;
  for (; it < opt.max_iterations; ++it) {
    Eigen::PartialPivLU<MatrixXd> lu(eye + gk * hk);
    const MatrixXd wa = lu.solve(ak);          // (I + G H)^{-1} A
    const MatrixXd wg = lu.solve(gk);          // (I + G H)^{-1} G
    const MatrixXd a_next = ak * wa;
    const MatrixXd g_next = linalg::symmetrize(gk + ak * wg * ak.transpose());
    const MatrixXd h_next = linalg::symmetrize(hk + ak.transpose() * hk * wa);
    if (!h_next.allFinite() || !g_next.allFinite()) return {};
    const double step = (h_next - hk).norm();
    ak = a_next;
    gk = g_next;
    hk = h_next;
    if (step <= 1e-15 * std::max(1.0, hk.norm()) || ak.norm() < 1e-300) {
      ++it;
      break;
    }
  }
  return finish(p, hk, it, GdareMethod::kDoubling, opt.tol);
}

// Newton-Hewer iteration from a stabilizing gain.
Attempt newton(const GdareProblem& p, MatrixXd f, const GdareOptions& opt,
               int prior_iterations) {
  Attempt last;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const MatrixXd af = p.A + p.B * f;
    if (linalg::spectral_radius(af) >= 1.0) return last;
    const MatrixXd st = p.S * f;
    const MatrixXd w =
        linalg::symmetrize(p.Qm + st + st.transpose() + f.transpose() * p.R * f);
    const MatrixXd x = linalg::solve_stein(af.transpose(), w);
    last = finish(p, x, prior_iterations + it + 1, GdareMethod::kNewton, opt.tol);
    if (last.ok) return last;
    if (last.sol.F.size() == 0) return last;
    f = last.sol.F;
  }
  return last;
}

}  // namespace

RiccatiAudit make_audit(std::string stage, const GdareSolution& s) {
  return {std::move(stage), s.residual, s.closed_loop_radius, s.iterations, s.method};
}

const char* to_string(GdareMethod m) {
  return m == GdareMethod::kDoubling ? "doubling" : "newton";
}

double gdare_residual(const GdareProblem& p, const MatrixXd& x) {
  auto f = gain(p, x);
  require(f.has_value(), ErrorCode::kNotPositiveDefinite,
          "gdare_residual: R + B^T X B not positive definite");
  return normalized(riccati_map_residual(p, x, *f), x);
}

GdareSolution solve_gdare(const GdareProblem& p, const GdareOptions& opt) {
  check_shapes(p);
  const auto n = p.A.rows(), m = p.B.cols();
  if (n == 0) {
    GdareSolution s;
    s.X = MatrixXd(0, 0);
    s.F = MatrixXd(m, 0);
    return s;
  }

  Attempt best = doubling(p, opt);
  if (best.ok) {
    // A Newton sweep from the doubling gain polishes the residual.
    Attempt polished = newton(p, best.sol.F, {opt.tol, 2}, best.sol.iterations);
    if (polished.ok && polished.sol.residual < best.sol.residual) {
      polished.sol.method = GdareMethod::kDoubling;
      return polished.sol;
    }
    return best.sol;
  }

  std::string why = best.sol.X.size() ? "doubling residual " +
                                             std::to_string(best.sol.residual)
                                       : "doubling unavailable";
  MatrixXd f0;
  if (best.sol.F.size() && best.sol.closed_loop_radius < 1.0) {
    f0 = best.sol.F;
  } else if (linalg::spectral_radius(p.A) < 1.0) {
    f0 = MatrixXd::Zero(m, n);
  } else {
    throw Error(ErrorCode::kNoStabilizingSolution,
                "gdare: " + why + " and no stabilizing initial gain");
  }
  Attempt nw = newton(p, f0, opt, best.sol.iterations);
  if (nw.ok) return nw.sol;
  throw Error(ErrorCode::kNoStabilizingSolution,
              "gdare: " + why + "; Newton residual " +
                  std::to_string(nw.sol.residual) + ", closed-loop radius " +
                  std::to_string(nw.sol.closed_loop_radius));
}

MatrixXd solve_dlyap(const MatrixXd& a, const MatrixXd& w) {
  require(linalg::spectral_radius(a) < 1.0, ErrorCode::kNotStable,
          "dlyap: A not stable");
  return linalg::solve_stein(a, w);
}

}  // namespace dhinf
