#include "dhinf/factorizations.hpp"

#include <algorithm>
#include <cmath>

#include "dhinf/errors.hpp"
#include "dhinf/frequency.hpp"
#include "dhinf/linalg.hpp"

namespace dhinf {

namespace {

MatrixXd checked_sqrt(const MatrixXd& m, const char* what) {
  const double lo = linalg::lambda_min_sym(m);
  require(lo > 1e-12 * std::max(1.0, m.norm()), ErrorCode::kNotPositiveDefinite,
          std::string(what) + ": lambda_min=" + std::to_string(lo));
  return linalg::sym_sqrt(m);
}

}  // namespace

InnerOuterPair inner_outer(const RealizationSS& g) {
  require(g.is_stable(), ErrorCode::kNotStable, "inner_outer: input not stable");
  const MatrixXd& a = g.A();
  const MatrixXd& b = g.B();
  const MatrixXd& c = g.C();
  const MatrixXd& d = g.D();
  InnerOuterPair out;
  if (g.is_static()) {
    out.H = checked_sqrt(d.transpose() * d, "inner_outer: D^T D");
    const MatrixXd hi = out.H.inverse();
    out.F = MatrixXd(d.cols(), 0);
    out.inner = RealizationSS::static_gain(d * hi);
    out.outer = RealizationSS::static_gain(out.H);
    return out;
  }
  GdareProblem p{a, b, linalg::symmetrize(c.transpose() * c),
                 linalg::symmetrize(d.transpose() * d), c.transpose() * d};
  const GdareSolution s = solve_gdare(p);
  out.audit = make_audit("inner_outer", s);
  out.F = s.F;
  out.H = checked_sqrt(d.transpose() * d + b.transpose() * s.X * b,
                       "inner_outer: D^T D + B^T X B");
  const MatrixXd hi = out.H.inverse();
  out.inner = RealizationSS(a + b * s.F, b * hi, c + d * s.F, d * hi);
  out.outer = RealizationSS(a, b, -out.H * s.F, out.H);
  return out;
}

InnerOuterPair co_inner_outer(const RealizationSS& g) {
  InnerOuterPair t = inner_outer(transpose(g));
  InnerOuterPair out;
  out.inner = transpose(t.inner);
  out.outer = transpose(t.outer);
  out.H = t.H.transpose();
  out.F = t.F.transpose();
  out.audit = t.audit;
  if (out.audit) out.audit->stage = "co_inner_outer";
  return out;
}

SpectralFactor spectral_factor(const RealizationSS& y, double gamma,
                               double reduce_tol) {
  require(gamma > 0.0, ErrorCode::kInvalidArgument, "spectral_factor: gamma <= 0");
  const Index m = y.inputs();
  SpectralFactor out;
  out.gamma = gamma;
  const MatrixXd g2 = gamma * gamma * MatrixXd::Identity(m, m);
  if (y.is_static()) {
    out.M = RealizationSS::static_gain(
        checked_sqrt(g2 - y.D().transpose() * y.D(), "spectral_factor: gamma^2 I - D^T D"));
    return out;
  }
  const double ny = hinf_norm(y);
  require(ny < gamma, ErrorCode::kNormBound,
          "spectral_factor: ||y||=" + std::to_string(ny) + " >= gamma=" +
              std::to_string(gamma));

  // phi = y~ y = r1~ + r2; the stable strictly proper part of
  // gamma^2 I - phi is -r1 and the constant splits symmetrically.
  const RealizationSS phi = minimal(series(conjugate(y), y), reduce_tol);
  const MixedSystem parts = split_stable_antistable(phi);
  const RealizationSS r1 = balanced_truncation(parts.r1, reduce_tol);
  const MatrixXd k0 = linalg::symmetrize(parts.r2.D());
  const MatrixXd j = linalg::symmetrize(g2 - k0);
  if (r1.is_static()) {
    out.M = RealizationSS::static_gain(checked_sqrt(j, "spectral_factor: J"));
    return out;
  }
  const MatrixXd& ay = r1.A();
  const MatrixXd& by = r1.B();
  const MatrixXd cy = -r1.C();
  const Index n = ay.rows();
  GdareProblem p{ay, by, MatrixXd::Zero(n, n), j, cy.transpose()};
  const GdareSolution s = solve_gdare(p);
  out.audit = make_audit("spectral_factor", s);
  const MatrixXd h = checked_sqrt(j + by.transpose() * s.X * by,
                                  "spectral_factor: J + B^T X B");
  out.M = RealizationSS(ay, by, h.inverse() * (cy + by.transpose() * s.X * ay), h);
  return out;
}

SpectralFactor co_spectral_factor(const RealizationSS& z, double gamma,
                                  double reduce_tol) {
  SpectralFactor t = spectral_factor(transpose(z), gamma, reduce_tol);
  t.M = transpose(t.M);
  if (t.audit) t.audit->stage = "co_spectral_factor";
  return t;
}

NehariApproximant nehari_approx(const RealizationSS& g_in, double gamma,
                                double minimal_tol) {
  require(g_in.is_stable(), ErrorCode::kNotStable, "nehari: input not stable");
  require(gamma > 0.0, ErrorCode::kInvalidArgument, "nehari: gamma <= 0");
  const RealizationSS g = minimal(g_in, minimal_tol);
  const Index p = g.outputs(), m = g.inputs(), n = g.states();
  NehariApproximant out;
  out.gamma = gamma;
  out.U = MatrixXd::Identity(p, m);
  out.reduced_order = n;
  if (n == 0) {
    out.Qn = RealizationSS::static_gain(g.D().transpose() - gamma * out.U.transpose());
    return out;
  }
  const Gramians gr = gramians(g);
  const MatrixXd& x = gr.controllability;
  const MatrixXd& y = gr.observability;
  out.hankel = hankel_norm(RealizationSS(g.A(), g.B(), g.C(), MatrixXd::Zero(p, m)));
  require(out.hankel < gamma, ErrorCode::kNormBound,
          "nehari: Hankel norm " + std::to_string(out.hankel) + " >= gamma " +
              std::to_string(gamma));

  const MatrixXd& a = g.A();
  const MatrixXd& b = g.B();
  const MatrixXd& c = g.C();
  const MatrixXd nn =
      (gamma * gamma * MatrixXd::Identity(n, n) - x * y).partialPivLu().inverse();
  const MatrixXd m1 =
      linalg::symmetrize(MatrixXd::Identity(p, p) + c * nn * x * c.transpose());
  const MatrixXd m2 =
      linalg::symmetrize(MatrixXd::Identity(m, m) + b.transpose() * y * nn * b);
  checked_sqrt(m1, "nehari: M1");
  checked_sqrt(m2, "nehari: M2");
  const MatrixXd e = -m1.llt().solve(MatrixXd(c * nn * x * a.transpose() * y * b)) +
                     gamma * linalg::sym_inv_sqrt(m1) * out.U * linalg::sym_inv_sqrt(m2);
  const MatrixXd cq = (e.transpose() * c + b.transpose() * y * a) * nn;
  out.Qn = RealizationSS(a - b * cq, a * x * c.transpose() + b * e.transpose(), cq,
                         g.D().transpose() - e.transpose());
  return out;
}

double isometry_residual(const RealizationSS& u, Index grid) {
  const Index m = u.inputs();
  return grid_sup([&](double th) {
    const MatrixXcd v = evaluate(u, th);
    return MatrixXcd(v.adjoint() * v - MatrixXcd::Identity(m, m));
  }, grid);
}

double co_isometry_residual(const RealizationSS& u, Index grid) {
  const Index p = u.outputs();
  return grid_sup([&](double th) {
    const MatrixXcd v = evaluate(u, th);
    return MatrixXcd(v * v.adjoint() - MatrixXcd::Identity(p, p));
  }, grid);
}

double spectral_residual(const RealizationSS& y, const RealizationSS& m,
                         double gamma, Index grid) {
  const Index k = y.inputs();
  return grid_sup([&](double th) {
    const MatrixXcd yv = evaluate(y, th), mv = evaluate(m, th);
    return MatrixXcd(gamma * gamma * MatrixXcd::Identity(k, k) - yv.adjoint() * yv -
                     mv.adjoint() * mv);
  }, grid);
}

double co_spectral_residual(const RealizationSS& z, const RealizationSS& m,
                            double gamma, Index grid) {
  const Index k = z.outputs();
  return grid_sup([&](double th) {
    const MatrixXcd zv = evaluate(z, th), mv = evaluate(m, th);
    return MatrixXcd(gamma * gamma * MatrixXcd::Identity(k, k) - zv * zv.adjoint() -
                     mv * mv.adjoint());
  }, grid);
}

double allpass_defect(const RealizationSS& g, const RealizationSS& qn,
                      double gamma, Index grid) {
  const auto pts = uniform_grid(grid);
  const auto prof = sigma_max_profile(
      [&](double th) {
        return MatrixXcd(evaluate(g, th) - evaluate(qn, -th).transpose());
      },
      pts);
  double worst = 0.0;
  for (double v : prof) worst = std::max(worst, std::abs(v - gamma));
  return worst;
}

}  // namespace dhinf
