#include <doctest.h>

#include <random>

#include <dhinf/linalg.hpp>

#include "test_support.hpp"

using namespace dhinf;
using namespace dhinf::linalg;

TEST_CASE("sylvester residual on random spectra") {
  std::mt19937 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    MatrixXd a = testing::randn(rng, 4, 4) * 0.3;
    MatrixXd b = testing::randn(rng, 3, 3) * 0.3;
    b.diagonal().array() += 3.0;
    MatrixXd c = testing::randn(rng, 4, 3);
    MatrixXd x = solve_sylvester(a, b, c);
    CHECK((a * x - x * b - c).norm() < 1e-10 * (1 + c.norm()));
  }
}

TEST_CASE("stein scalar closed form") {
  MatrixXd a(1, 1), w(1, 1);
  a << 0.5;
  w << 1.0;
  CHECK(solve_stein(a, w)(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("stein residual and symmetry") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto g = testing::random_system(rng, 6, 2, 2, 0.95);
    MatrixXd w = g.B() * g.B().transpose();
    MatrixXd x = solve_stein(g.A(), w);
    CHECK((g.A() * x * g.A().transpose() - x + w).norm() < 1e-10 * (1 + x.norm()));
    CHECK((x - x.transpose()).norm() == 0.0);
    CHECK(lambda_min_sym(x) > -1e-10);
  }
}

TEST_CASE("stable invariant basis splits the spectrum") {
  std::mt19937 rng(3);
  MatrixXd d = MatrixXd::Zero(5, 5);
  d.diagonal() << 0.3, 2.0, -0.7, 1.5, 0.1;
  MatrixXd t = testing::randn(rng, 5, 5);
  MatrixXd a = t * d * t.inverse();
  auto s = stable_invariant_basis(a);
  REQUIRE(s.stable_count == 3);
  MatrixXd at = s.basis.transpose() * a * s.basis;
  CHECK(at.bottomLeftCorner(2, 3).norm() < 1e-10 * a.norm());
  CHECK((s.basis.transpose() * s.basis - MatrixXd::Identity(5, 5)).norm() < 1e-12);
  CHECK(spectral_radius(at.topLeftCorner(3, 3)) < 1.0);
}

TEST_CASE("symmetric roots") {
  MatrixXd m(2, 2);
  m << 4, 1, 1, 3;
  MatrixXd r = sym_sqrt(m);
  CHECK((r * r - m).norm() < 1e-13);
  CHECK((sym_inv_sqrt(m) * r - MatrixXd::Identity(2, 2)).norm() < 1e-13);
  MatrixXd l = psd_factor(m);
  CHECK((l * l.transpose() - m).norm() < 1e-13);
}
