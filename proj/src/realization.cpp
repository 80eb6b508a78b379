#include "dhinf/realization.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dhinf/errors.hpp"
#include "dhinf/linalg.hpp"

namespace dhinf {

using cd = std::complex<double>;

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "dimension_mismatch";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kSingularStateMap: return "singular_state_map";
    case ErrorCode::kSingularFeedthrough: return "singular_feedthrough";
    case ErrorCode::kNotStable: return "not_stable";
    case ErrorCode::kPoleNearUnitCircle: return "pole_near_unit_circle";
    case ErrorCode::kNoStabilizingSolution: return "no_stabilizing_solution";
    case ErrorCode::kNotPositiveDefinite: return "not_positive_definite";
    case ErrorCode::kNormBound: return "norm_bound_violated";
    case ErrorCode::kNumericalBreakdown: return "numerical_breakdown";
    case ErrorCode::kInternalInconsistency: return "internal_inconsistency";
    case ErrorCode::kParse: return "parse_error";
  }
  return "unknown_error";
}

const char* to_string(StabilityClass s) {
  switch (s) {
    case StabilityClass::kStable: return "stable";
    case StabilityClass::kAntiStable: return "anti_stable";
    case StabilityClass::kMixed: return "mixed";
    case StabilityClass::kUnknown: return "unknown";
  }
  return "unknown";
}

RealizationSS::RealizationSS()
    : a_(0, 0), b_(0, 0), c_(0, 0), d_(0, 0) {}

RealizationSS::RealizationSS(MatrixXd a, MatrixXd b, MatrixXd c, MatrixXd d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  const Index n = a_.rows();
  require(a_.cols() == n, ErrorCode::kDimensionMismatch, "A must be square");
  require(b_.rows() == n, ErrorCode::kDimensionMismatch, "rows(B) != rows(A)");
  require(c_.cols() == n, ErrorCode::kDimensionMismatch, "cols(C) != cols(A)");
  require(d_.rows() == c_.rows() && d_.cols() == b_.cols(),
          ErrorCode::kDimensionMismatch, "D must be rows(C) x cols(B)");
  if (n == 0) return;
  Eigen::EigenSolver<MatrixXd> es(a_, false);
  const Eigen::VectorXd mags = es.eigenvalues().cwiseAbs();
  radius_ = mags.maxCoeff();
  const double eps = defaults::kStabilityMargin;
  const double lo = mags.minCoeff();
  const bool near = ((mags.array() - 1.0).abs() <= eps).any();
  if (radius_ < 1.0 - eps) {
    stability_ = StabilityClass::kStable;
  } else if (lo > 1.0 + eps) {
    stability_ = StabilityClass::kAntiStable;
  } else if (!near) {
    stability_ = StabilityClass::kMixed;
  } else {
    stability_ = StabilityClass::kUnknown;
  }
}

RealizationSS RealizationSS::static_gain(MatrixXd d) {
  const Index p = d.rows(), m = d.cols();
  return RealizationSS(MatrixXd(0, 0), MatrixXd(0, m), MatrixXd(p, 0),
                       std::move(d));
}

RealizationSS RealizationSS::identity(Index k) {
  return static_gain(MatrixXd::Identity(k, k));
}

RealizationSS RealizationSS::zero(Index outputs, Index inputs) {
  return static_gain(MatrixXd::Zero(outputs, inputs));
}

RealizationSS MixedSystem::to_realization() const {
  return add(conjugate(r1), r2);
}

namespace {

bool reducible(const RealizationSS& g) {
  return g.states() > defaults::kAutoMinimalStates &&
         g.stability() != StabilityClass::kUnknown;
}

RealizationSS auto_reduce(RealizationSS g) {
  if (!reducible(g)) return g;
  return minimal(g);
}

RealizationSS series_raw(const RealizationSS& g, const RealizationSS& h) {
  require(g.inputs() == h.outputs(), ErrorCode::kDimensionMismatch,
          "series: inputs(g)=" + std::to_string(g.inputs()) +
              " vs outputs(h)=" + std::to_string(h.outputs()));
  const Index ng = g.states(), nh = h.states();
  const Index n = ng + nh;
  MatrixXd a = MatrixXd::Zero(n, n);
  a.topLeftCorner(nh, nh) = h.A();
  a.bottomLeftCorner(ng, nh) = g.B() * h.C();
  a.bottomRightCorner(ng, ng) = g.A();
  MatrixXd b(n, h.inputs());
  b << h.B(), g.B() * h.D();
  MatrixXd c(g.outputs(), n);
  c << g.D() * h.C(), g.C();
  return RealizationSS(std::move(a), std::move(b), std::move(c), g.D() * h.D());
}

RealizationSS add_raw(const RealizationSS& g, const RealizationSS& h) {
  require(g.inputs() == h.inputs() && g.outputs() == h.outputs(),
          ErrorCode::kDimensionMismatch, "add: shapes differ");
  const Index ng = g.states(), nh = h.states();
  const Index n = ng + nh;
  MatrixXd a = MatrixXd::Zero(n, n);
  a.topLeftCorner(ng, ng) = g.A();
  a.bottomRightCorner(nh, nh) = h.A();
  MatrixXd b(n, g.inputs());
  b << g.B(), h.B();
  MatrixXd c(g.outputs(), n);
  c << g.C(), h.C();
  return RealizationSS(std::move(a), std::move(b), std::move(c), g.D() + h.D());
}

}  // namespace

RealizationSS series(const RealizationSS& g, const RealizationSS& h) {
  return auto_reduce(series_raw(g, h));
}

RealizationSS product(std::initializer_list<RealizationSS> factors) {
  require(factors.size() > 0, ErrorCode::kInvalidArgument, "empty product");
  auto it = factors.begin();
  RealizationSS acc = *it++;
  for (; it != factors.end(); ++it) acc = series(acc, *it);
  return acc;
}

RealizationSS add(const RealizationSS& g, const RealizationSS& h) {
  return auto_reduce(add_raw(g, h));
}

RealizationSS negate(const RealizationSS& g) {
  return RealizationSS(g.A(), g.B(), -g.C(), -g.D());
}

RealizationSS subtract(const RealizationSS& g, const RealizationSS& h) {
  return add(g, negate(h));
}

RealizationSS transpose(const RealizationSS& g) {
  return RealizationSS(g.A().transpose(), g.C().transpose(),
                       g.B().transpose(), g.D().transpose());
}

RealizationSS conjugate(const RealizationSS& g, double sigma_min_tol) {
  if (g.is_static()) return RealizationSS::static_gain(g.D().transpose());
  const double smin = linalg::min_singular_value(g.A());
  require(smin > sigma_min_tol, ErrorCode::kSingularStateMap,
          "conjugate: sigma_min(A)=" + std::to_string(smin));
  const MatrixXd ait = g.A().transpose().inverse();
  const MatrixXd b = ait * g.C().transpose();
  const MatrixXd c = -g.B().transpose() * ait;
  const MatrixXd d = g.D().transpose() + c * g.C().transpose();
  return RealizationSS(ait, b, c, d);
}

RealizationSS fir_realization(const std::vector<MatrixXd>& taps) {
  require(!taps.empty(), ErrorCode::kInvalidArgument, "fir: no taps");
  const Index p = taps[0].rows(), m = taps[0].cols();
  for (const auto& t : taps)
    require(t.rows() == p && t.cols() == m, ErrorCode::kDimensionMismatch,
            "fir: tap shapes differ");
  const Index k = static_cast<Index>(taps.size()) - 1;
  const Index n = k * m;
  MatrixXd a = MatrixXd::Zero(n, n);
  if (k > 1) a.bottomLeftCorner(n - m, n - m).setIdentity();
  MatrixXd b = MatrixXd::Zero(n, m);
  if (k > 0) b.topRows(m).setIdentity();
  MatrixXd c(p, n);
  for (Index i = 0; i < k; ++i) c.middleCols(i * m, m) = taps[i + 1];
  return RealizationSS(std::move(a), std::move(b), std::move(c), taps[0]);
}

RealizationSS delay(const RealizationSS& g, int n) {
  require(n >= 1, ErrorCode::kInvalidArgument, "delay: N must be >= 1");
  // Put the register on the narrower side.
  if (g.inputs() <= g.outputs()) {
    std::vector<MatrixXd> taps(n + 1, MatrixXd::Zero(g.inputs(), g.inputs()));
    taps[n].setIdentity();
    return series(g, fir_realization(taps));
  }
  std::vector<MatrixXd> taps(n + 1, MatrixXd::Zero(g.outputs(), g.outputs()));
  taps[n].setIdentity();
  return series(fir_realization(taps), g);
}

RealizationSS invert(const RealizationSS& g) {
  require(g.inputs() == g.outputs(), ErrorCode::kDimensionMismatch,
          "invert: D must be square");
  const double scale = std::max(1.0, g.D().norm());
  const double smin = linalg::min_singular_value(g.D());
  require(g.D().size() == 0 || smin > defaults::kSigmaMinTol * scale,
          ErrorCode::kSingularFeedthrough,
          "invert: sigma_min(D)=" + std::to_string(smin));
  const Eigen::PartialPivLU<MatrixXd> lu(g.D());
  const MatrixXd di = g.D().size() ? lu.inverse() : MatrixXd(0, 0);
  const MatrixXd bdi = g.B() * di;
  return RealizationSS(g.A() - bdi * g.C(), bdi, -di * g.C(), di);
}

RealizationSS markov_tail(const RealizationSS& g, int n) {
  require(n >= 0, ErrorCode::kInvalidArgument, "markov_tail: negative shift");
  if (n == 0) return g;
  if (g.is_static()) return RealizationSS::zero(g.outputs(), g.inputs());
  MatrixXd an1b = g.B();
  for (int i = 1; i < n; ++i) an1b = g.A() * an1b;
  return RealizationSS(g.A(), g.A() * an1b, g.C(), g.C() * an1b);
}

MatrixXcd evaluate_at(const RealizationSS& g, cd z) {
  MatrixXcd out = g.D().cast<cd>();
  if (g.is_static()) return out;
  MatrixXcd m = -g.A().cast<cd>();
  m.diagonal().array() += z;
  out += g.C().cast<cd>() * m.partialPivLu().solve(g.B().cast<cd>());
  return out;
}

MatrixXcd evaluate(const RealizationSS& g, double theta) {
  return evaluate_at(g, std::polar(1.0, theta));
}

MarkovSequence markov(const RealizationSS& g, Index horizon) {
  MarkovSequence seq;
  if (horizon <= 0) return seq;
  seq.taps.reserve(horizon);
  seq.taps.push_back(g.D());
  MatrixXd ab = g.B();
  for (Index i = 1; i < horizon; ++i) {
    seq.taps.push_back(g.C() * ab);
    ab = g.A() * ab;
  }
  return seq;
}

MixedSystem split_stable_antistable(const RealizationSS& g, double eps_stab) {
  const Index n = g.states(), p = g.outputs(), m = g.inputs();
  if (n == 0) return {RealizationSS::zero(m, p), g};
  const double dist = linalg::unit_circle_distance(g.A());
  require(dist > eps_stab, ErrorCode::kPoleNearUnitCircle,
          "split: pole within " + std::to_string(dist) + " of the unit circle");
  if (g.is_stable()) return {RealizationSS::zero(m, p), g};

  const auto split = linalg::stable_invariant_basis(g.A());
  const Index k = split.stable_count, l = n - k;
  const MatrixXd& w = split.basis;
  const MatrixXd at = w.transpose() * g.A() * w;
  const MatrixXd bt = w.transpose() * g.B();
  const MatrixXd ct = g.C() * w;

  const double leak = at.bottomLeftCorner(l, k).norm();
  require(leak <= 1e-8 * std::max(1.0, at.norm()),
          ErrorCode::kPoleNearUnitCircle,
          "split: invariant subspace not resolved (leak " +
              std::to_string(leak) + ")");

  const MatrixXd a11 = at.topLeftCorner(k, k);
  const MatrixXd a22 = at.bottomRightCorner(l, l);
  const MatrixXd x =
      linalg::solve_sylvester(a11, a22, -at.topRightCorner(k, l));
  const MatrixXd bs = bt.topRows(k) - x * bt.bottomRows(l);
  const MatrixXd ba = bt.bottomRows(l);
  const MatrixXd cs = ct.leftCols(k);
  const MatrixXd ca = ct.leftCols(k) * x + ct.rightCols(l);

  const RealizationSS anti(a22, ba, ca, MatrixXd::Zero(p, m));
  const RealizationSS r1full = conjugate(anti);
  MixedSystem out;
  out.r1 = RealizationSS(r1full.A(), r1full.B(), r1full.C(),
                         MatrixXd::Zero(m, p));
  out.r2 = RealizationSS(a11, bs, cs, g.D() + r1full.D().transpose());
  return out;
}

Gramians gramians(const RealizationSS& g) {
  require(g.is_stable(), ErrorCode::kNotStable, "gramians: system not stable");
  return {linalg::solve_stein(g.A(), g.B() * g.B().transpose()),
          linalg::solve_stein(g.A().transpose(), g.C().transpose() * g.C())};
}

VectorXd hankel_singular_values(const RealizationSS& g) {
  if (g.is_static()) return VectorXd(0);
  const Gramians gr = gramians(g);
  const MatrixXd lc = linalg::psd_factor(gr.controllability);
  const MatrixXd lo = linalg::psd_factor(gr.observability);
  Eigen::JacobiSVD<MatrixXd> svd(lo.transpose() * lc);
  return svd.singularValues();
}

double hankel_norm(const RealizationSS& g) {
  if (g.D().size() > 0 && g.D().cwiseAbs().maxCoeff() > 0.0)
    std::cerr << "warning: hankel_norm ignores a nonzero feedthrough\n";
  const VectorXd s = hankel_singular_values(g);
  return s.size() ? s(0) : 0.0;
}

RealizationSS balanced_truncation(const RealizationSS& g, double tol) {
  if (g.is_static()) return g;
  require(g.is_stable(), ErrorCode::kNotStable,
          "balanced_truncation: system not stable");
  const Gramians gr = gramians(g);
  const MatrixXd lc = linalg::psd_factor(gr.controllability);
  const MatrixXd lo = linalg::psd_factor(gr.observability);
  Eigen::JacobiSVD<MatrixXd> svd(lo.transpose() * lc,
                                 Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  const double scale = std::max({1.0, g.D().norm(), g.B().norm() * g.C().norm()});
  if (smax <= 1e-14 * scale) return RealizationSS::static_gain(g.D());
  Index r = 0;
  while (r < s.size() && s(r) > tol * smax) ++r;
  const VectorXd is = s.head(r).cwiseSqrt().cwiseInverse();
  const MatrixXd t = lc * svd.matrixV().leftCols(r) * is.asDiagonal();
  const MatrixXd ti =
      is.asDiagonal() * svd.matrixU().leftCols(r).transpose() * lo.transpose();
  return RealizationSS(ti * g.A() * t, ti * g.B(), g.C() * t, g.D());
}

RealizationSS minimal(const RealizationSS& g, double tol) {
  if (g.is_static()) return g;
  switch (g.stability()) {
    case StabilityClass::kStable:
      return balanced_truncation(g, tol);
    case StabilityClass::kAntiStable:
    case StabilityClass::kMixed: {
      const MixedSystem parts = split_stable_antistable(g);
      const RealizationSS r1 = balanced_truncation(parts.r1, tol);
      const RealizationSS r2 = balanced_truncation(parts.r2, tol);
      return add_raw(conjugate(r1), r2);
    }
    case StabilityClass::kUnknown:
      break;
  }
  throw Error(ErrorCode::kPoleNearUnitCircle,
              "minimal: pole on or near the unit circle");
}

}  // namespace dhinf
