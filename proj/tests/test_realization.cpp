#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <dhinf/errors.hpp>
#include <dhinf/frequency.hpp>
#include <dhinf/realization.hpp>

#include "test_support.hpp"

using namespace dhinf;
using dhinf::testing::grid_gap;
using dhinf::testing::random_system;
using dhinf::testing::resp;

namespace {

RealizationSS scalar(double a, double b, double c, double d) {
  return RealizationSS(MatrixXd::Constant(1, 1, a), MatrixXd::Constant(1, 1, b),
                       MatrixXd::Constant(1, 1, c), MatrixXd::Constant(1, 1, d));
}

// 1 / (z - 0.5)
RealizationSS first_order() { return scalar(0.5, 1.0, 1.0, 0.0); }

}  // namespace

TEST_CASE("construction validates shapes and classifies stability") {
  CHECK_THROWS_AS(RealizationSS(MatrixXd::Zero(2, 3), MatrixXd::Zero(2, 1),
                                MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 1)),
                  Error);
  CHECK(first_order().is_stable());
  CHECK(scalar(2.0, 1, 1, 0).stability() == StabilityClass::kAntiStable);
  CHECK(scalar(1.0, 1, 1, 0).stability() == StabilityClass::kUnknown);
  RealizationSS mixed(Eigen::Vector2d(0.5, 2.0).asDiagonal().toDenseMatrix(),
                      MatrixXd::Ones(2, 1), MatrixXd::Ones(1, 2), MatrixXd::Zero(1, 1));
  CHECK(mixed.stability() == StabilityClass::kMixed);
  CHECK(RealizationSS::identity(3).is_static());
}

TEST_CASE("series") {
  std::mt19937 rng(1);
  auto h = random_system(rng, 3, 2, 2);
  auto id = RealizationSS::identity(2);
  CHECK(grid_gap(resp(series(id, h)), resp(h)) < 1e-12);
  CHECK(hinf_norm(series(h, RealizationSS::zero(2, 2))) == 0.0);
  for (int t = 0; t < 10; ++t) {
    auto g = random_system(rng, 3, 2, 3);
    auto k = random_system(rng, 3, 3, 2);
    auto gk = series(g, k);
    CHECK(grid_gap(resp(gk), [&](double th) {
            return MatrixXcd(evaluate(g, th) * evaluate(k, th));
          }) < 1e-10);
  }
  CHECK_THROWS_AS(series(random_system(rng, 1, 2, 2), random_system(rng, 1, 3, 3)),
                  Error);
}

TEST_CASE("add and negate") {
  std::mt19937 rng(2);
  auto g = random_system(rng, 4, 2, 3);
  CHECK(grid_gap(resp(add(g, RealizationSS::zero(2, 3))), resp(g)) < 1e-14);
  CHECK(grid_sup(resp(add(g, negate(g))), 512) < 1e-12);
  for (int t = 0; t < 10; ++t) {
    auto a = random_system(rng, 3, 2, 2);
    auto b = random_system(rng, 2, 2, 2);
    CHECK(grid_gap(resp(add(a, b)), [&](double th) {
            return MatrixXcd(evaluate(a, th) + evaluate(b, th));
          }) < 1e-10);
  }
}

TEST_CASE("conjugate") {
  MatrixXd d(2, 3);
  d << 1, 2, 3, 4, 5, 6;
  auto s = conjugate(RealizationSS::static_gain(d));
  CHECK(s.is_static());
  CHECK((s.D() - d.transpose()).norm() == 0.0);

  auto g = first_order();
  auto gc = conjugate(g);
  CHECK(gc.stability() == StabilityClass::kAntiStable);
  const double th = std::numbers::pi / 3.0;
  CHECK(std::abs(evaluate(gc, th)(0, 0) - evaluate(g, -th)(0, 0)) < 1e-14);
  CHECK(std::abs(evaluate(gc, th)(0, 0) - std::conj(evaluate(g, th)(0, 0))) < 1e-14);

  std::mt19937 rng(3);
  for (int t = 0; t < 10; ++t) {
    auto r = random_system(rng, 4, 2, 3);
    auto rc = conjugate(r);
    CHECK(grid_gap(resp(conjugate(rc)), resp(r)) < 1e-9);
    CHECK(grid_gap(resp(rc), [&](double w) {
            return MatrixXcd(evaluate(r, -w).transpose());
          }) < 1e-9);
  }
  RealizationSS sing(MatrixXd::Zero(1, 1), MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1),
                     MatrixXd::Zero(1, 1));
  try {
    conjugate(sing);
    FAIL("expected singular state map");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSingularStateMap);
  }
}

TEST_CASE("delay") {
  auto d1 = delay(RealizationSS::identity(2), 1);
  auto taps = markov(d1, 3).taps;
  CHECK(taps[0].norm() == 0.0);
  CHECK((taps[1] - MatrixXd::Identity(2, 2)).norm() == 0.0);
  CHECK(taps[2].norm() == 0.0);

  std::mt19937 rng(4);
  auto g = random_system(rng, 3, 2, 3);
  auto g2 = markov(delay(g, 2), 6).taps;
  auto g0 = markov(g, 4).taps;
  CHECK(g2[0].norm() == 0.0);
  CHECK(g2[1].norm() == 0.0);
  for (int i = 0; i < 4; ++i) CHECK((g2[i + 2] - g0[i]).norm() < 1e-14);

  // The delay is inner: its conjugate (pointwise) times itself is I.
  auto dn = delay(RealizationSS::identity(3), 3);
  CHECK(grid_gap(
            [&](double th) {
              return MatrixXcd(evaluate(dn, -th).transpose() * evaluate(dn, th));
            },
            [](double) { return MatrixXcd(MatrixXcd::Identity(3, 3)); }) < 1e-13);
  CHECK_THROWS_AS(delay(g, 0), Error);
}

TEST_CASE("invert") {
  auto c = invert(RealizationSS::static_gain(2.5 * MatrixXd::Identity(2, 2)));
  CHECK((c.D() - 0.4 * MatrixXd::Identity(2, 2)).norm() < 1e-15);
  std::mt19937 rng(5);
  for (int t = 0; t < 10; ++t) {
    auto g = random_system(rng, 3, 2, 2);
    CHECK(grid_gap(resp(invert(invert(g))), resp(g)) < 1e-9);
    CHECK(grid_gap(resp(series(g, invert(g))),
                   [](double) { return MatrixXcd(MatrixXcd::Identity(2, 2)); }) < 1e-9);
  }
  CHECK_THROWS_AS(invert(RealizationSS::zero(2, 2)), Error);
}

TEST_CASE("fir realization and markov tail") {
  std::mt19937 rng(6);
  std::vector<MatrixXd> taps{testing::randn(rng, 2, 3), testing::randn(rng, 2, 3),
                             testing::randn(rng, 2, 3)};
  auto f = fir_realization(taps);
  auto mk = markov(f, 5).taps;
  for (int i = 0; i < 3; ++i) CHECK((mk[i] - taps[i]).norm() < 1e-15);
  CHECK(mk[3].norm() == 0.0);

  auto g = random_system(rng, 4, 2, 2);
  auto tail = markov(markov_tail(g, 3), 4).taps;
  auto full = markov(g, 7).taps;
  for (int i = 0; i < 4; ++i) CHECK((tail[i] - full[i + 3]).norm() < 1e-12);
}

TEST_CASE("split_stable_antistable") {
  std::mt19937 rng(7);
  auto g = random_system(rng, 3, 2, 2);
  auto s = split_stable_antistable(g);
  CHECK(s.r1.is_static());
  CHECK(grid_gap(resp(s.r2), resp(g)) < 1e-14);

  // -2z/(z-2) = (1/(z-0.5))~ : realization (2, 1, -4, -2).
  auto anti = scalar(2.0, 1.0, -4.0, -2.0);
  auto sp = split_stable_antistable(anti);
  CHECK(grid_gap(resp(sp.r1), resp(first_order())) < 1e-12);
  CHECK(grid_sup(resp(sp.r2), 256) < 1e-12);

  for (int t = 0; t < 10; ++t) {
    auto gs = random_system(rng, 3, 2, 3, 0.8, false);
    auto hs = random_system(rng, 2, 3, 2);
    auto mixed = add(conjugate(gs), hs);
    auto parts = split_stable_antistable(mixed);
    CHECK(parts.r1.D().norm() == 0.0);
    CHECK(parts.r1.is_stable());
    CHECK(parts.r2.is_stable());
    CHECK(grid_gap(resp(parts.r1), resp(gs)) < 1e-8);
    CHECK(grid_gap(resp(parts.r2), resp(hs)) < 1e-8);
    CHECK(grid_gap(resp(parts.to_realization()), resp(mixed)) < 1e-8);
  }
  RealizationSS near(MatrixXd::Constant(1, 1, 1.0 + 1e-10), MatrixXd::Ones(1, 1),
                     MatrixXd::Ones(1, 1), MatrixXd::Zero(1, 1));
  CHECK_THROWS_AS(split_stable_antistable(near), Error);
}

TEST_CASE("gramians and hankel norm") {
  auto gr = gramians(RealizationSS::identity(2));
  CHECK(gr.controllability.size() == 0);
  auto g1 = gramians(first_order());
  CHECK(g1.controllability(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(g1.observability(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
  CHECK(hankel_norm(first_order()) == doctest::Approx(4.0 / 3.0).epsilon(1e-13));
  CHECK(hankel_norm(RealizationSS::identity(2)) == 0.0);

  std::mt19937 rng(8);
  for (int t = 0; t < 10; ++t) {
    auto g = random_system(rng, 5, 2, 3, 0.9, false);
    auto w = gramians(g);
    const MatrixXd& a = g.A();
    CHECK((a * w.controllability * a.transpose() - w.controllability +
           g.B() * g.B().transpose()).norm() < 1e-10 * (1 + w.controllability.norm()));
    CHECK((a.transpose() * w.observability * a - w.observability +
           g.C().transpose() * g.C()).norm() < 1e-10 * (1 + w.observability.norm()));
    CHECK(hankel_norm(g) <= hinf_norm(g) * (1 + 1e-9));
  }
  CHECK_THROWS_AS(gramians(scalar(2.0, 1, 1, 0)), Error);
}

TEST_CASE("hinf norm") {
  MatrixXd d(2, 2);
  d << 3, 0, 0, 1;
  CHECK(hinf_norm(RealizationSS::static_gain(d)) == doctest::Approx(3.0));
  auto pk = hinf_norm_peak(first_order());
  CHECK(pk.value == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(std::abs(pk.peak_theta) < 1e-6);

  // Lightly damped resonance: the peak falls between grid points.
  const double r = 0.999, w0 = 1.2345;
  MatrixXd a(2, 2);
  a << r * std::cos(w0), -r * std::sin(w0), r * std::sin(w0), r * std::cos(w0);
  RealizationSS res(a, Eigen::Vector2d(1, 0), Eigen::RowVector2d(1, 0), MatrixXd::Zero(1, 1));
  const double ref = refined_sup(resp(res), 1 << 16).value;
  CHECK(hinf_norm(res) == doctest::Approx(ref).epsilon(1e-6));

  std::mt19937 rng(9);
  for (int t = 0; t < 10; ++t) {
    auto g = random_system(rng, 4, 2, 3, 0.97);
    const double ref2 = refined_sup(resp(g), 8192).value;
    CHECK(hinf_norm(g) == doctest::Approx(ref2).epsilon(2e-6));
    CHECK(hinf_norm(g) >= ref2 * (1 - 2e-6));
  }
  CHECK_THROWS_AS(hinf_norm(scalar(1.0, 1, 1, 0)), Error);
}

TEST_CASE("hinf norm of mixed systems") {
  std::mt19937 rng(10);
  auto gs = random_system(rng, 3, 2, 2, 0.8, false);
  auto hs = random_system(rng, 2, 2, 2);
  MixedSystem m{gs, hs};
  auto full = add(conjugate(gs), hs);
  CHECK(hinf_norm(m) == doctest::Approx(hinf_norm(full)).epsilon(1e-6));
  // FIR r1 has a nilpotent state map; the circle search still applies.
  std::vector<MatrixXd> taps{MatrixXd::Zero(2, 2), testing::randn(rng, 2, 2),
                             testing::randn(rng, 2, 2)};
  MixedSystem f{fir_realization(taps), hs};
  const double ref = refined_sup([&](double th) {
                       return MatrixXcd(evaluate(f.r1, -th).transpose() +
                                        evaluate(f.r2, th));
                     }, 1 << 15).value;
  CHECK(hinf_norm(f) == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("minimal") {
  std::mt19937 rng(11);
  auto g = random_system(rng, 3, 2, 2);
  // Pad with an uncontrollable and an unobservable mode.
  MatrixXd a = MatrixXd::Zero(5, 5);
  a.topLeftCorner(3, 3) = g.A();
  a(3, 3) = 0.4;
  a(4, 4) = -0.3;
  MatrixXd b = MatrixXd::Zero(5, 2);
  b.topRows(3) = g.B();
  b.row(4) << 1, 1;
  MatrixXd c = MatrixXd::Zero(2, 5);
  c.leftCols(3) = g.C();
  c.col(3) << 1, -1;
  RealizationSS padded(a, b, c, g.D());
  auto r = minimal(padded);
  CHECK(r.states() == 3);
  CHECK(grid_gap(resp(r), resp(g)) < 1e-7);

  auto mixed = add(conjugate(random_system(rng, 2, 2, 2, 0.7, false)), padded);
  auto rm = minimal(mixed);
  CHECK(rm.states() == 5);
  CHECK(grid_gap(resp(rm), resp(mixed)) < 1e-7);
}

TEST_CASE("binary ops agree with pointwise algebra (property)") {
  std::mt19937 rng(12);
  for (int t = 0; t < 30; ++t) {
    std::uniform_int_distribution<int> nd(0, 5);
    const int n1 = nd(rng), n2 = nd(rng);
    auto g = random_system(rng, n1, 2, 2);
    auto h = random_system(rng, n2, 2, 2);
    auto eg = resp(g), eh = resp(h);
    CHECK(grid_gap(resp(series(g, h)), [&](double th) {
            return MatrixXcd(eg(th) * eh(th));
          }) < 1e-9);
    CHECK(grid_gap(resp(add(g, h)), [&](double th) {
            return MatrixXcd(eg(th) + eh(th));
          }) < 1e-9);
    CHECK(grid_gap(resp(transpose(g)), [&](double th) {
            return MatrixXcd(eg(th).transpose());
          }) < 1e-12);
  }
}

TEST_CASE("grid kernels: parallel equals serial") {
  std::mt19937 rng(13);
  auto g = random_system(rng, 6, 3, 2);
  auto pts = uniform_grid(300);
  auto par = evaluate_grid(g, pts);
  auto ser = evaluate_grid_serial(g, pts);
  CHECK(grid_max_deviation(par, ser) == 0.0);
  auto p1 = sigma_max_profile(resp(g), pts);
  auto p2 = sigma_max_profile_serial(resp(g), pts);
  CHECK(p1 == p2);
}
