#include <doctest.h>

#include <cmath>
#include <random>

#include <dhinf/errors.hpp>
#include <dhinf/factorizations.hpp>
#include <dhinf/frequency.hpp>

#include "plant_fixture.hpp"
#include "test_support.hpp"

using namespace dhinf;
using dhinf::testing::grid_gap;
using dhinf::testing::random_system;
using dhinf::testing::resp;

namespace {

RealizationSS chain_p11() {
  auto m = testing::chain_matrices();
  return RealizationSS(m.A, m.B1, m.C1, m.D11);
}

RealizationSS chain_p12() {
  auto m = testing::chain_matrices();
  return RealizationSS(m.A, m.B2, m.C1, m.D12);
}

// (I - U_i U_i~) P11 for the chain plant.
RealizationSS chain_y() {
  auto io = inner_outer(chain_p12());
  auto proj = subtract(RealizationSS::identity(6),
                       series(io.inner, conjugate(io.inner)));
  return minimal(series(proj, chain_p11()), 1e-10);
}

}  // namespace

TEST_CASE("inner_outer: static and pure delay") {
  auto st = inner_outer(RealizationSS::static_gain(2.0 * MatrixXd::Identity(2, 2)));
  CHECK((st.inner.D() - MatrixXd::Identity(2, 2)).norm() < 1e-14);
  CHECK((st.outer.D() - 2.0 * MatrixXd::Identity(2, 2)).norm() < 1e-14);

  auto d = delay(RealizationSS::identity(2), 1);
  auto io = inner_outer(d);
  CHECK(grid_gap(resp(io.inner), resp(d)) < 1e-12);
  CHECK(grid_gap(resp(io.outer), [](double) {
          return MatrixXcd(MatrixXcd::Identity(2, 2));
        }) < 1e-12);
  CHECK((io.H - MatrixXd::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("inner_outer on the chain plant") {
  auto g = chain_p12();
  auto io = inner_outer(g);
  CHECK(isometry_residual(io.inner) < 1e-8);
  CHECK(grid_gap(resp(series(io.inner, io.outer)), resp(g)) < 1e-8);
  CHECK(io.outer.is_stable());
  CHECK(invert(io.outer).is_stable());
  REQUIRE(io.audit.has_value());
  CHECK(io.audit->residual < 1e-10);
}

TEST_CASE("inner_outer random (property)") {
  std::mt19937 rng(1);
  for (int t = 0; t < 50; ++t) {
    std::uniform_int_distribution<int> nd(1, 5);
    auto g = random_system(rng, nd(rng), 4, 2, 0.9);
    auto io = inner_outer(g);
    CHECK(isometry_residual(io.inner) < 1e-8);
    CHECK(grid_gap(resp(series(io.inner, io.outer)), resp(g)) < 1e-8);
    CHECK(invert(io.outer).is_stable());
  }
}

TEST_CASE("co_inner_outer") {
  auto st = co_inner_outer(RealizationSS::static_gain(3.0 * MatrixXd::Identity(2, 2)));
  CHECK((st.outer.D() - 3.0 * MatrixXd::Identity(2, 2)).norm() < 1e-14);
  CHECK((st.inner.D() - MatrixXd::Identity(2, 2)).norm() < 1e-14);

  std::mt19937 rng(2);
  for (int t = 0; t < 20; ++t) {
    auto g = random_system(rng, 3, 2, 4, 0.9);
    auto co = co_inner_outer(g);
    CHECK(co_isometry_residual(co.inner) < 1e-8);
    CHECK(grid_gap(resp(series(co.outer, co.inner)), resp(g)) < 1e-8);
    auto io = inner_outer(transpose(g));
    CHECK(grid_gap(resp(co.inner), resp(transpose(io.inner))) < 1e-12);
  }
}

TEST_CASE("spectral_factor: trivial cases") {
  auto z = spectral_factor(RealizationSS::zero(2, 2), 1.0);
  CHECK((z.M.D() - MatrixXd::Identity(2, 2)).norm() < 1e-14);
  MatrixXd d(2, 2);
  d << 0.3, 0.1, -0.2, 0.4;
  auto y = RealizationSS::static_gain(d);
  auto s = spectral_factor(y, 1.0);
  CHECK(spectral_residual(y, s.M, 1.0) < 1e-14);
}

TEST_CASE("spectral_factor on the chain plant") {
  auto y = chain_y();
  CHECK(hinf_norm(y) == doctest::Approx(0.9772).epsilon(5e-4));
  auto s = spectral_factor(y, 1.0);
  CHECK(spectral_residual(y, s.M, 1.0) < 1e-7);
  CHECK(s.M.is_stable());
  CHECK(invert(s.M).is_stable());
  CHECK_THROWS_AS(spectral_factor(y, 0.9), Error);
}

TEST_CASE("spectral_factor random (property)") {
  std::mt19937 rng(3);
  for (int t = 0; t < 20; ++t) {
    auto y = random_system(rng, 3, 3, 2, 0.8);
    const double gamma = 1.2 * hinf_norm(y);
    auto s = spectral_factor(y, gamma);
    const double scale = gamma * gamma;
    CHECK(spectral_residual(y, s.M, gamma) < 1e-7 * scale);
    CHECK(invert(s.M).is_stable());
    CHECK(grid_gap(resp(series(s.M, invert(s.M))), [](double) {
            return MatrixXcd(MatrixXcd::Identity(2, 2));
          }) < 1e-9);
  }
}

TEST_CASE("co_spectral_factor") {
  auto z = co_spectral_factor(RealizationSS::zero(2, 3));
  CHECK((z.M.D() - MatrixXd::Identity(2, 2)).norm() < 1e-14);
  std::mt19937 rng(4);
  for (int t = 0; t < 10; ++t) {
    auto g = random_system(rng, 3, 2, 3, 0.8);
    auto zz = RealizationSS(g.A(), g.B(), g.C() * (0.7 / hinf_norm(g)), g.D() * (0.7 / hinf_norm(g)));
    auto s = co_spectral_factor(zz);
    CHECK(co_spectral_residual(zz, s.M) < 1e-7);
    CHECK(invert(s.M).is_stable());
  }
}

TEST_CASE("nehari_approx") {
  auto z = nehari_approx(RealizationSS::zero(2, 2), 1.0);
  CHECK((z.Qn.D() + MatrixXd::Identity(2, 2)).norm() < 1e-15);

  RealizationSS g(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, 1.0), MatrixXd::Constant(1, 1, 0.0));
  auto n = nehari_approx(g, 1.5);
  CHECK(n.Qn.is_stable());
  CHECK(allpass_defect(g, n.Qn, 1.5) < 1e-6);
  CHECK_THROWS_AS(nehari_approx(g, 1.3), Error);

  std::mt19937 rng(5);
  for (int t = 0; t < 20; ++t) {
    auto r = random_system(rng, 4, 6, 3, 0.9, false);
    const double h = hankel_norm(r);
    auto nr = nehari_approx(r, 1.05 * h);
    CHECK(nr.Qn.is_stable());
    CHECK(allpass_defect(r, nr.Qn, 1.05 * h) < 1e-6 * h);
    auto rt = transpose(r);
    auto nt = nehari_approx(rt, 1.05 * h);
    CHECK(allpass_defect(rt, nt.Qn, 1.05 * h) < 1e-6 * h);
  }
}
