#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "dhinf/errors.hpp"
#include "dhinf/frequency.hpp"
#include "dhinf/linalg.hpp"
#include "dhinf/realization.hpp"

namespace dhinf {

namespace {

struct ContinuousForm {
  MatrixXd a, b, c, d;
};

// Bilinear map z = (1 + s) / (1 - s); the unit circle goes to the imaginary
// axis with theta = 2 atan(omega).
ContinuousForm cayley(const RealizationSS& g) {
  const Index n = g.states();
  MatrixXd ipa = MatrixXd::Identity(n, n) + g.A();
  const Eigen::PartialPivLU<MatrixXd> lu(ipa);
  const MatrixXd inv = lu.inverse();
  const double r2 = std::sqrt(2.0);
  ContinuousForm cf;
  cf.a = inv * (g.A() - MatrixXd::Identity(n, n));
  cf.b = r2 * inv * g.B();
  cf.c = r2 * g.C() * inv;
  cf.d = g.D() - g.C() * inv * g.B();
  return cf;
}

// Frequencies omega >= 0 at which the Hamiltonian of level gamma has
// (numerically) imaginary eigenvalues.
std::vector<double> crossing_frequencies(const ContinuousForm& cf, double gamma) {
  const Index n = cf.a.rows(), m = cf.b.cols(), p = cf.c.rows();
  const double g2 = gamma * gamma;
  const MatrixXd r = cf.d.transpose() * cf.d - g2 * MatrixXd::Identity(m, m);
  const MatrixXd s = cf.d * cf.d.transpose() - g2 * MatrixXd::Identity(p, p);
  const MatrixXd ri = r.inverse();
  const MatrixXd si = s.inverse();
  MatrixXd h(2 * n, 2 * n);
  h.topLeftCorner(n, n) = cf.a - cf.b * ri * cf.d.transpose() * cf.c;
  h.topRightCorner(n, n) = -gamma * cf.b * ri * cf.b.transpose();
  h.bottomLeftCorner(n, n) = gamma * cf.c.transpose() * si * cf.c;
  h.bottomRightCorner(n, n) =
      -cf.a.transpose() + cf.c.transpose() * cf.d * ri * cf.b.transpose();
  Eigen::EigenSolver<MatrixXd> es(h, false);
  std::vector<double> out;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) {
    const auto lam = es.eigenvalues()(i);
    if (std::abs(lam.real()) <= 1e-6 * (1.0 + std::abs(lam)) && lam.imag() >= 0)
      out.push_back(lam.imag());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

NormResult hinf_norm_peak(const RealizationSS& g, double rel_tol) {
  if (g.D().size() == 0) return {};
  if (g.is_static()) return {sigma_max(g.D().cast<std::complex<double>>()), 0.0};
  const double dist = linalg::unit_circle_distance(g.A());
  require(dist > defaults::kStabilityMargin, ErrorCode::kPoleNearUnitCircle,
          "hinf_norm: pole within " + std::to_string(dist) + " of the unit circle");

  const auto pts = uniform_grid(1024);
  const auto prof = sigma_max_profile(g, pts);
  const auto it = std::max_element(prof.begin(), prof.end());
  NormResult lb{*it, pts[it - prof.begin()]};
  if (lb.value == 0.0) return lb;

  const ContinuousForm cf = cayley(g);
  auto sigma_at = [&](double omega) {
    const double th = 2.0 * std::atan(omega);
    return NormResult{sigma_max(evaluate(g, th)), th < 0 ? th + 2 * std::numbers::pi : th};
  };
  // Probes the level gamma: raises the lower bound if the response crosses
  // it, returns false when gamma is an upper bound.
  auto crosses = [&](double gamma) {
    const auto w = crossing_frequencies(cf, gamma);
    if (w.empty()) return false;
    std::vector<double> probe = w;
    for (size_t i = 0; i + 1 < w.size(); ++i) probe.push_back(0.5 * (w[i] + w[i + 1]));
    bool raised = false;
    for (double om : probe) {
      const NormResult v = sigma_at(om);
      if (v.value > lb.value) lb = v;
      if (v.value > gamma) raised = true;
    }
    return raised;
  };

  double ub = 2.0 * lb.value + g.D().norm();
  for (int k = 0; k < 60 && crosses(ub); ++k) ub = 2.0 * std::max(ub, lb.value);
  for (int it = 0; it < 200 && ub - lb.value > rel_tol * ub; ++it) {
    const double gamma = 0.5 * (lb.value + ub);
    if (!crosses(gamma)) ub = gamma;
  }
  return lb;
}

double hinf_norm(const RealizationSS& g, double rel_tol) {
  return hinf_norm_peak(g, rel_tol).value;
}

double hinf_norm(const MixedSystem& g, double rel_tol) {
  try {
    return hinf_norm(g.to_realization(), rel_tol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSingularStateMap) throw;
  }
  // r1 has a singular state map (FIR parts); work on the circle directly.
  return refined_sup(
             [&g](double th) {
               return MatrixXcd(evaluate(g.r1, -th).transpose() + evaluate(g.r2, th));
             },
             4096)
      .value;
}

}  // namespace dhinf
