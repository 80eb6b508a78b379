#include "dhinf/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dhinf/errors.hpp"
#include "dhinf/linalg.hpp"

namespace dhinf {

namespace {

double static_or_hinf(const RealizationSS& g) {
  if (g.is_static()) {
    if (g.D().size() == 0) return 0.0;
    return std::sqrt(std::max(0.0, linalg::lambda_max_sym(g.D().transpose() * g.D())));
  }
  return hinf_norm(g);
}

}  // namespace

const char* to_string(SynthesisMode m) {
  switch (m) {
    case SynthesisMode::kCentralizedT3I: return "centralized_t3I";
    case SynthesisMode::kCentralizedGeneral: return "centralized_general";
    case SynthesisMode::kDistributedT3I: return "distributed_t3I";
    case SynthesisMode::kDistributedGeneral: return "distributed_general";
    case SynthesisMode::kDelayedOnly: return "delayed_only";
  }
  return "unknown";
}

std::vector<std::string> validate(const Plant& p) {
  const Index n = p.states();
  require(p.A.cols() == n, ErrorCode::kDimensionMismatch, "plant: A not square");
  require(p.B1.rows() == n && p.B2.rows() == n && p.C1.cols() == n && p.C2.cols() == n,
          ErrorCode::kDimensionMismatch, "plant: B/C state dimension");
  const Index nw = p.w_dim(), nu = p.u_dim(), nz = p.z_dim(), ny = p.y_dim();
  auto shape = [](const MatrixXd& m, Index r, Index c, const char* name) {
    require(m.rows() == r && m.cols() == c, ErrorCode::kDimensionMismatch,
            std::string("plant: ") + name + " must be " + std::to_string(r) + "x" +
                std::to_string(c));
  };
  shape(p.D11, nz, nw, "D11");
  shape(p.D12, nz, nu, "D12");
  shape(p.D21, ny, nw, "D21");
  shape(p.D22, ny, nu, "D22");
  require(n == 0 || linalg::spectral_radius(p.A) < 1.0 - defaults::kStabilityMargin,
          ErrorCode::kNotStable, "plant: A must be stable");

  std::vector<std::string> warn;
  const double tol = 1e-10;
  if (nu > 0 && (p.D12.rows() < nu || linalg::min_singular_value(p.D12) <= tol))
    warn.push_back("D12 does not have full column rank");
  if (ny > 0 && (p.D21.cols() < ny || linalg::min_singular_value(p.D21.transpose()) <= tol))
    warn.push_back("D21 does not have full row rank");
  if ((p.C1.transpose() * p.D12).cwiseAbs().maxCoeff() > tol)
    warn.push_back("C1^T D12 is nonzero");
  if ((p.B1 * p.D21.transpose()).cwiseAbs().maxCoeff() > tol)
    warn.push_back("B1 D21^T is nonzero");
  return warn;
}

Plant full_information(const Plant& p) {
  Plant f = p;
  f.C2 = MatrixXd::Zero(p.w_dim(), p.states());
  f.D21 = MatrixXd::Identity(p.w_dim(), p.w_dim());
  f.D22 = MatrixXd::Zero(p.w_dim(), p.u_dim());
  return f;
}

// --- problem data -----------------------------------------------------------

ModelMatchData prepare(const RealizationSS& t1, const RealizationSS& t2,
                       const RealizationSS& t3) {
  require(t1.outputs() == t2.outputs() && t1.inputs() == t3.inputs(),
          ErrorCode::kDimensionMismatch, "model matching: T1/T2/T3 shapes");
  ModelMatchData d;
  d.T1 = t1;
  d.T2 = t2;
  // A realization with no path through its states is static.
  const bool t3_static = t3.is_static() || t3.B().isZero(0.0) || t3.C().isZero(0.0);
  d.T3 = t3_static ? RealizationSS::static_gain(t3.D()) : t3;
  d.t3_identity = t3_static && t3.inputs() == t3.outputs() &&
                  (t3.D() - MatrixXd::Identity(t3.outputs(), t3.inputs())).norm() == 0.0;
  const InnerOuterPair io = inner_outer(t2);
  require(io.outer.inputs() == io.outer.outputs(), ErrorCode::kDimensionMismatch,
          "model matching: outer factor of T2 is not square");
  d.Ui = io.inner;
  d.Uo = io.outer;
  if (io.audit) d.audits.push_back(*io.audit);
  const RealizationSS proj =
      subtract(RealizationSS::identity(t1.outputs()), series(d.Ui, conjugate(d.Ui)));
  d.Y = minimal(series(proj, t1), defaults::kFactorReduceTol);
  d.y_norm = static_or_hinf(d.Y);
  return d;
}

ModelMatchData prepare(const Plant& p) {
  validate(p);
  return prepare(p.P11(), p.P12(), p.P21());
}

GammaFactors gamma_factors(const ModelMatchData& d, double gamma, bool general) {
  GammaFactors f;
  f.gamma = gamma;
  if (!(gamma > d.y_norm * (1.0 + defaults::kGateTol))) {
    f.gate = "y_gate";
    return f;
  }
  const SpectralFactor sf = spectral_factor(d.Y, gamma);
  if (sf.audit) f.audits.push_back(*sf.audit);
  f.Yo = sf.M;
  f.Yo_inv = invert(sf.M);
  const RealizationSS uit1 = minimal(series(conjugate(d.Ui), d.T1), defaults::kFactorReduceTol);
  const RealizationSS base = minimal(series(uit1, f.Yo_inv), defaults::kFactorReduceTol);

  if (!general) {
    require(d.t3_identity, ErrorCode::kInvalidArgument,
            "gamma_factors: T3 = I path requested for a general T3");
    f.R = base;
    f.L = d.Uo;
    f.M = f.Yo_inv;
    f.Q_left = invert(d.Uo);
    f.Q_right = f.Yo;
    f.gate_ok = true;
    return f;
  }

  const RealizationSS w = minimal(series(d.T3, f.Yo_inv), defaults::kFactorReduceTol);
  const InnerOuterPair co = co_inner_outer(w);
  if (co.audit) f.audits.push_back(*co.audit);
  require(co.outer.inputs() == co.outer.outputs(), ErrorCode::kDimensionMismatch,
          "gamma_factors: co-outer factor of T3 Yo^{-1} is not square");
  f.Vci = co.inner;
  f.Vco = co.outer;
  const RealizationSS vci_conj = conjugate(co.inner);
  const RealizationSS perp =
      subtract(RealizationSS::identity(co.inner.inputs()), series(vci_conj, co.inner));
  f.Z = minimal(series(base, perp), defaults::kFactorReduceTol);
  f.z_norm = static_or_hinf(*f.Z);
  if (!(*f.z_norm < 1.0 - defaults::kGateTol)) {
    f.gate = "z_gate";
    return f;
  }
  const SpectralFactor zs = co_spectral_factor(*f.Z, 1.0);
  if (zs.audit) f.audits.push_back(*zs.audit);
  f.Zco = zs.M;
  const RealizationSS zco_inv = invert(zs.M);
  f.R = minimal(product({zco_inv, base, vci_conj}), defaults::kFactorReduceTol);
  f.L = minimal(series(zco_inv, d.Uo), defaults::kFactorReduceTol);
  f.M = co.outer;
  f.Q_left = minimal(series(invert(d.Uo), zs.M), defaults::kFactorReduceTol);
  f.Q_right = invert(co.outer);
  f.gate_ok = true;
  return f;
}

// --- affine structure -------------------------------------------------------

std::vector<MatrixXd> AffineMarkovMap::taps(const VectorXd& x) const {
  require(x.size() == static_cast<Index>(entries.size()), ErrorCode::kDimensionMismatch,
          "affine map: parameter count");
  std::vector<MatrixXd> g(N, MatrixXd::Zero(rows, cols));
  for (size_t e = 0; e < entries.size(); ++e)
    for (int i = 0; i < N; ++i) g[i] += x(static_cast<Index>(e)) * coeff[e][i];
  return g;
}

AffineMarkovMap markov_affine_map(const RealizationSS& L, const RealizationSS& M,
                                  const DelayConstraint& c) {
  require(L.inputs() == c.rows() && M.outputs() == c.cols(), ErrorCode::kDimensionMismatch,
          "markov_affine_map: L/M do not match the constraint shape");
  AffineMarkovMap map;
  map.N = c.N;
  map.rows = L.outputs();
  map.cols = M.inputs();
  map.entries = free_entries(c);
  const auto la = markov(L, c.N).taps;
  const auto mc = markov(M, c.N).taps;
  map.coeff.resize(map.entries.size());
  for (size_t e = 0; e < map.entries.size(); ++e) {
    const FreeEntry& fe = map.entries[e];
    auto& out = map.coeff[e];
    out.assign(c.N, MatrixXd::Zero(map.rows, map.cols));
    for (int i = fe.tap; i < c.N; ++i)
      for (int a = 0; a <= i - fe.tap; ++a)
        out[i] += la[a].col(fe.row) * mc[i - fe.tap - a].row(fe.col);
  }
  return map;
}

AffineLmiSystem build_rhat_realization(const RealizationSS& R1, const AffineMarkovMap& map) {
  const Index p = R1.outputs(), m = R1.inputs(), nr = R1.states();
  require(map.cols == p && map.rows == m, ErrorCode::kDimensionMismatch,
          "build_rhat_realization: G^T must match the shape of R1");
  require(R1.D().cwiseAbs().maxCoeff() == 0.0 || R1.D().size() == 0,
          ErrorCode::kInvalidArgument, "build_rhat_realization: R1 must be strictly proper");
  const int N = map.N;
  const Index nq = N * m, n = nr + nq;
  MatrixXd a = MatrixXd::Zero(n, n);
  a.topLeftCorner(nr, nr) = R1.A();
  if (N > 1) a.block(nr + m, nr, nq - m, nq - m).setIdentity();
  MatrixXd b(n, m);
  b.topRows(nr) = R1.B();
  b.bottomRows(nq).setZero();
  b.block(nr, 0, m, m).setIdentity();
  MatrixXd c0 = MatrixXd::Zero(p, n);
  c0.leftCols(nr) = R1.C();
  std::vector<MatrixXd> coeffs;
  coeffs.reserve(map.coeff.size());
  for (const auto& ce : map.coeff) {
    MatrixXd ci = MatrixXd::Zero(p, n);
    for (int k = 1; k <= N; ++k) ci.middleCols(nr + (k - 1) * m, m) = -ce[N - k].transpose();
    coeffs.push_back(std::move(ci));
  }
  return build_hankel_lmi(a, b, c0, coeffs);
}

MixedSystem delayed_split(const RealizationSS& R, int N) {
  require(N >= 1, ErrorCode::kInvalidArgument, "delayed_split: N must be >= 1");
  const MixedSystem s = split_stable_antistable(R);
  const auto t = markov(s.r2, N).taps;
  std::vector<MatrixXd> taps(N + 1, MatrixXd::Zero(R.inputs(), R.outputs()));
  for (int k = 1; k <= N; ++k) taps[k] = t[N - k].transpose();
  RealizationSS r1 = add(delay(s.r1, N), fir_realization(taps));
  r1 = minimal(r1, defaults::kFactorReduceTol);
  r1 = RealizationSS(r1.A(), r1.B(), r1.C(), MatrixXd::Zero(r1.outputs(), r1.inputs()));
  return {r1, markov_tail(s.r2, N)};
}

// --- attempts ---------------------------------------------------------------

namespace {

double verify_norm(const ModelMatchData& d, const RealizationSS& q) {
  const RealizationSS e = subtract(d.T1, product({d.T2, q, d.T3}));
  return static_or_hinf(minimal(e, defaults::kFactorReduceTol));
}

double safe_hankel(const RealizationSS& g) {
  return g.is_static() ? 0.0 : hankel_norm(g);
}

// A vanishing Hankel operator needs no correction at all.
RealizationSS nehari_or_zero(const RealizationSS& r1, double hankel) {
  if (hankel <= 1e-14) return RealizationSS::zero(r1.inputs(), r1.outputs());
  return nehari_approx(r1, 1.0).Qn;
}

bool factors_or_fail(const ModelMatchData& d, double gamma, bool general, Attempt& a,
                     GammaFactors& f) {
  try {
    f = gamma_factors(d, gamma, general);
  } catch (const Error& e) {
    // gamma at (or numerically below) the ||Y|| bound
    if (e.code() != ErrorCode::kNormBound && e.code() != ErrorCode::kNotPositiveDefinite) throw;
    a.reason = "y_gate";
    return false;
  }
  a.audits = d.audits;
  a.audits.insert(a.audits.end(), f.audits.begin(), f.audits.end());
  a.z_norm = f.z_norm;
  if (!f.gate_ok) {
    a.reason = f.gate;
    return false;
  }
  return true;
}

}  // namespace

Attempt centralized_at(const ModelMatchData& d, double gamma, bool general,
                       const SynthesisOptions& opt) {
  Attempt a;
  a.mode = general ? SynthesisMode::kCentralizedGeneral : SynthesisMode::kCentralizedT3I;
  a.gamma = gamma;
  GammaFactors f;
  if (!factors_or_fail(d, gamma, general, a, f)) return a;

  const MixedSystem s = split_stable_antistable(f.R);
  const RealizationSS r1 = s.r1.is_static() ? s.r1 : balanced_truncation(s.r1);
  a.hankel = safe_hankel(r1);
  if (!(a.hankel < 1.0 - opt.gate_tol)) {
    a.reason = "hankel";
    return a;
  }
  const RealizationSS x = minimal(add(s.r2, nehari_or_zero(r1, a.hankel)), defaults::kFactorReduceTol);
  a.Q = minimal(product({f.Q_left, x, f.Q_right}), defaults::kFactorReduceTol);
  a.feasible = true;
  if (opt.verify) {
    a.achieved_norm = verify_norm(d, a.Q);
    if (a.achieved_norm > gamma + opt.verify_tol) {
      a.feasible = false;
      a.reason = "verification";
    }
  }
  return a;
}

Attempt distributed_at(const ModelMatchData& d, const DelayConstraint& c, double gamma,
                       SynthesisMode mode, const SynthesisOptions& opt) {
  require(mode == SynthesisMode::kDistributedT3I || mode == SynthesisMode::kDistributedGeneral ||
              mode == SynthesisMode::kDelayedOnly,
          ErrorCode::kInvalidArgument, "distributed_at: not a distributed mode");
  const bool general =
      mode == SynthesisMode::kDistributedGeneral || (mode == SynthesisMode::kDelayedOnly && !d.t3_identity);
  require(c.rows() == d.T2.inputs() && c.cols() == d.T3.outputs(),
          ErrorCode::kDimensionMismatch,
          "distributed_at: constraint is " + std::to_string(c.rows()) + "x" +
              std::to_string(c.cols()) + ", Q is " + std::to_string(d.T2.inputs()) + "x" +
              std::to_string(d.T3.outputs()));
  Attempt a;
  a.mode = mode;
  a.gamma = gamma;
  GammaFactors f;
  if (!factors_or_fail(d, gamma, general, a, f)) return a;

  const int N = c.N;
  const MixedSystem split = delayed_split(f.R, N);
  const RealizationSS& r1 = split.r1;

  StructuredFir v;
  v.constraint = c;
  v.taps.assign(N, MatrixXd::Zero(c.rows(), c.cols()));
  RealizationSS rhat1 = r1, rhat2 = split.r2;

  if (mode == SynthesisMode::kDelayedOnly) {
    a.hankel = safe_hankel(r1);
    if (!(a.hankel < 1.0 - opt.gate_tol)) {
      a.reason = "hankel";
      return a;
    }
  } else {
    const AffineMarkovMap map = markov_affine_map(f.L, f.M, c);
    const AffineLmiSystem sys = build_rhat_realization(r1, map);
    FeasibilityCertificate cert = solve_feasibility(sys, opt.lmi);
    a.hankel = std::sqrt(std::max(0.0, cert.feasible ? cert.lambda : cert.lambda_lower_bound));
    a.certificate = cert;
    if (!cert.feasible) {
      a.reason = "lmi: " + cert.status;
      return a;
    }
    v = fir_from_params(c, cert.x);
    const RealizationSS raw(sys.A, sys.B, sys.C(cert.x),
                            MatrixXd::Zero(sys.outputs(), sys.inputs()));
    rhat1 = balanced_truncation(raw, defaults::kFactorReduceTol);
    const RealizationSS g = minimal(product({f.L, fir_embed(v), f.M}), defaults::kFactorReduceTol);
    rhat2 = subtract(split.r2, markov_tail(g, N));
  }

  RealizationSS qn;
  try {
    qn = nehari_or_zero(rhat1, safe_hankel(rhat1));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNormBound) throw;
    throw Error(ErrorCode::kInternalInconsistency,
                std::string("distributed_at: Nehari precondition failed after a certified "
                            "LMI solution (hankel ") +
                    std::to_string(safe_hankel(rhat1)) + "): " + e.what());
  }
  const RealizationSS x = minimal(add(rhat2, qn), defaults::kFactorReduceTol);
  const RealizationSS dd = minimal(product({f.Q_left, x, f.Q_right}), defaults::kFactorReduceTol);
  a.D = dd;
  a.V = v;
  a.Q = add(fir_embed(v), delay(dd, N));
  a.mask_ok = respects_masks(markov(a.Q, N).taps, c);
  a.feasible = true;
  if (opt.verify) {
    a.achieved_norm = verify_norm(d, a.Q);
    if (a.achieved_norm > gamma + opt.verify_tol) {
      a.feasible = false;
      a.reason = "verification";
    }
  }
  if (!a.mask_ok) {
    a.feasible = false;
    a.reason = "mask";
  }
  return a;
}

// --- bisection --------------------------------------------------------------

SynthesisReport gamma_bisect(const std::function<Attempt(double)>& run, double lower,
                             const BisectOptions& opt) {
  SynthesisReport rep;
  double lo = std::max(0.0, lower);
  double hi = opt.upper ? *opt.upper : (lo > 0.0 ? 2.0 * lo : 1.0);
  require(hi > lo, ErrorCode::kInvalidArgument, "gamma_bisect: upper must exceed lower");
  const double limit = hi * opt.max_expand;
  auto trial = [&](double g) {
    Attempt a = run(g);
    rep.gamma_history.push_back({g, a.feasible, a.reason, a.hankel});
    return a;
  };
  Attempt best = trial(hi);
  while (!best.feasible) {
    lo = hi;
    hi *= 2.0;
    if (hi > limit * (1.0 + 1e-12))
      throw Error(ErrorCode::kNormBound,
                  "gamma_bisect: no feasible gamma up to " + std::to_string(lo) +
                      " (last reason: " + rep.gamma_history.back().reason + ")");
    best = trial(hi);
  }
  for (int it = 0; it < 200 && hi - lo > opt.rel_tol * hi && hi > 1e-12; ++it) {
    const double mid = 0.5 * (lo + hi);
    Attempt a = trial(mid);
    if (a.feasible) {
      hi = mid;
      best = std::move(a);
    } else {
      lo = mid;
    }
  }
  rep.mode = best.mode;
  rep.gamma = hi;
  rep.gamma_lower = lo;
  for (const auto& f : rep.gamma_history)
    for (const auto& g : rep.gamma_history)
      if (f.feasible && !g.feasible && g.gamma > f.gamma) rep.monotone = false;
  rep.result = std::move(best);
  rep.Q = negate(rep.result.Q);
  return rep;
}

// --- controller -------------------------------------------------------------

RealizationSS recover_controller(const RealizationSS& Q, const RealizationSS& P22) {
  require(P22.outputs() == Q.inputs() && P22.inputs() == Q.outputs(),
          ErrorCode::kDimensionMismatch, "recover_controller: P22 shape");
  const RealizationSS loop = add(RealizationSS::identity(Q.inputs()), series(P22, Q));
  return series(Q, invert(loop));
}

RealizationSS closed_loop(const Plant& p, const RealizationSS& K) {
  require(K.inputs() == p.y_dim() && K.outputs() == p.u_dim(), ErrorCode::kDimensionMismatch,
          "closed_loop: controller shape");
  const Index n = p.states(), nk = K.states();
  const MatrixXd& dk = K.D();
  const MatrixXd s = MatrixXd::Identity(p.u_dim(), p.u_dim()) - dk * p.D22;
  require(linalg::min_singular_value(s) > defaults::kSigmaMinTol, ErrorCode::kSingularFeedthrough,
          "closed_loop: I - Dk D22 singular");
  const MatrixXd om = s.inverse();
  // u = Cux x + Cuk xk + Duw w
  const MatrixXd cux = om * dk * p.C2, cuk = om * K.C(), duw = om * dk * p.D21;
  // y = C2 x + D21 w + D22 u
  const MatrixXd cyx = p.C2 + p.D22 * cux, cyk = p.D22 * cuk, dyw = p.D21 + p.D22 * duw;
  MatrixXd a(n + nk, n + nk), b(n + nk, p.w_dim()), c(p.z_dim(), n + nk);
  a << p.A + p.B2 * cux, p.B2 * cuk, K.B() * cyx, K.A() + K.B() * cyk;
  b << p.B1 + p.B2 * duw, K.B() * dyw;
  c << p.C1 + p.D12 * cux, p.D12 * cuk;
  return RealizationSS(a, b, c, p.D11 + p.D12 * duw);
}

// --- plant-level entry points -----------------------------------------------

namespace {

std::function<Attempt(double)> closure(const ModelMatchData& d, SynthesisMode mode,
                                       const std::optional<DelayConstraint>& c,
                                       const SynthesisOptions& opt) {
  switch (mode) {
    case SynthesisMode::kCentralizedT3I:
      require(d.t3_identity, ErrorCode::kInvalidArgument,
              "centralized_t3I requires T3 = I");
      return [&d, opt](double g) { return centralized_at(d, g, false, opt); };
    case SynthesisMode::kCentralizedGeneral:
      return [&d, opt](double g) { return centralized_at(d, g, true, opt); };
    case SynthesisMode::kDistributedT3I:
      require(d.t3_identity, ErrorCode::kInvalidArgument,
              "distributed_t3I requires T3 = I");
      [[fallthrough]];
    default:
      require(c.has_value(), ErrorCode::kInvalidArgument,
              std::string(to_string(mode)) + " needs a delay constraint");
      return [&d, cc = *c, mode, opt](double g) { return distributed_at(d, cc, g, mode, opt); };
  }
}

void finish(SynthesisReport& rep, const Plant& p, const ModelMatchData& d) {
  rep.y_norm = d.y_norm;
  try {
    rep.K = recover_controller(rep.Q, p.P22());
  } catch (const Error&) {
    rep.K.reset();
  }
}

}  // namespace

SynthesisReport synthesize(const Plant& p, SynthesisMode mode,
                           const std::optional<DelayConstraint>& c, const SynthesisOptions& opt,
                           const BisectOptions& bopt) {
  const ModelMatchData d = prepare(p);
  const double lower = d.y_norm * (1.0 + 1e-9);
  BisectOptions b = bopt;
  if (!b.upper) {
    // Q = 0 achieves ||T1||, which sets the scale of the first guess.
    const double t1 = static_or_hinf(d.T1);
    b.upper = std::max(2.0 * lower, 1.05 * t1);
    if (!(*b.upper > lower)) b.upper = lower + 1.0;
  }
  SynthesisReport rep = gamma_bisect(closure(d, mode, c, opt), lower, b);
  rep.mode = mode;
  finish(rep, p, d);
  return rep;
}

SynthesisReport synthesize_at(const Plant& p, SynthesisMode mode, double gamma,
                              const std::optional<DelayConstraint>& c,
                              const SynthesisOptions& opt) {
  const ModelMatchData d = prepare(p);
  SynthesisReport rep;
  rep.mode = mode;
  rep.result = closure(d, mode, c, opt)(gamma);
  rep.gamma_history.push_back(
      {gamma, rep.result.feasible, rep.result.reason, rep.result.hankel});
  rep.gamma = gamma;
  rep.gamma_lower = d.y_norm;
  if (rep.result.feasible) {
    rep.Q = negate(rep.result.Q);
    finish(rep, p, d);
  }
  rep.y_norm = d.y_norm;
  return rep;
}

}  // namespace dhinf
