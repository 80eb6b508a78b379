#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <dhinf/errors.hpp>
#include <dhinf/lmi.hpp>

#include "test_support.hpp"

using namespace dhinf;
using dhinf::testing::random_system;

namespace {

RealizationSS scaled_to_hankel(const RealizationSS& g, double h) {
  const double s = h / hankel_norm(g);
  return RealizationSS(g.A(), g.B(), g.C() * s, MatrixXd::Zero(g.outputs(), g.inputs()));
}

AffineLmiSystem lmi_of(const RealizationSS& g) {
  return build_hankel_lmi(g.A(), g.B(), g.C(), {});
}

LmiOptions minimize() {
  LmiOptions o;
  o.mode = LmiMode::kMinimize;
  return o;
}

}  // namespace

TEST_CASE("evaluate_blocks is affine in the variables") {
  std::mt19937 rng(11);
  auto g = random_system(rng, 3, 2, 2, 0.7, false);
  MatrixXd c1 = testing::randn(rng, 2, 3);
  AffineLmiSystem sys = build_hankel_lmi(g.A(), g.B(), g.C(), {c1});
  LmiLayout lay{1, 3};
  VectorXd y1 = VectorXd::Random(lay.size()), y2 = VectorXd::Random(lay.size());
  auto blocks = [&](const VectorXd& y) {
    VectorXd x;
    MatrixXd P, Q;
    double l;
    unpack_variables(lay, y, x, P, Q, l);
    return evaluate_blocks(sys, x, P, Q, l);
  };
  auto b0 = blocks(VectorXd::Zero(lay.size()));
  auto b1 = blocks(y1), b2 = blocks(y2), b12 = blocks(y1 + y2);
  CHECK((b12.b1 - b1.b1 - b2.b1 + b0.b1).norm() < 1e-12);
  CHECK((b12.b2 - b1.b2 - b2.b2 + b0.b2).norm() < 1e-12);
  CHECK((b12.b3 - b1.b3 - b2.b3 + b0.b3).norm() < 1e-12);

  VectorXd x;
  MatrixXd P, Q;
  double l;
  unpack_variables(lay, y1, x, P, Q, l);
  CHECK((pack_variables(lay, x, P, Q, l) - y1).norm() < 1e-15);
  CHECK((sys.C(x) - (g.C() + x(0) * c1)).norm() < 1e-14);
}

TEST_CASE("barrier derivatives match finite differences") {
  std::mt19937 rng(12);
  auto g = scaled_to_hankel(random_system(rng, 3, 2, 2, 0.7, false), 0.6);
  MatrixXd c1 = testing::randn(rng, 2, 3) * 0.05;
  auto cert = solve_feasibility(build_hankel_lmi(g.A(), g.B(), g.C(), {c1}));
  REQUIRE(cert.feasible);
  const AffineLmiSystem& sys = cert.system;
  LmiLayout lay{sys.free_count(), sys.states()};
  VectorXd y = pack_variables(lay, cert.x, cert.P, cert.Q, cert.lambda);
  auto bd = barrier_derivatives(sys, y, false);
  REQUIRE(bd.interior);

  const double h = 1e-6;
  double gerr = 0.0, herr = 0.0;
  for (Index i = 0; i < lay.size(); ++i) {
    VectorXd e = VectorXd::Zero(lay.size());
    e(i) = h;
    auto fp = barrier_derivatives(sys, y + e, false);
    auto fm = barrier_derivatives(sys, y - e, false);
    REQUIRE(fp.interior);
    REQUIRE(fm.interior);
    const double fd = (fp.value - fm.value) / (2 * h);
    gerr = std::max(gerr, std::abs(fd - bd.gradient(i)) / (1.0 + std::abs(fd)));
    const VectorXd hd = (fp.gradient - fm.gradient) / (2 * h);
    herr = std::max(herr, (hd - bd.hessian.col(i)).norm() / (1.0 + hd.norm()));
  }
  CHECK(gerr < 1e-4);
  CHECK(herr < 1e-4);
}

TEST_CASE("parallel Hessian equals the serial one bit for bit") {
  std::mt19937 rng(13);
  auto g = scaled_to_hankel(random_system(rng, 6, 3, 3, 0.8, false), 0.5);
  auto cert = solve_feasibility(lmi_of(g));
  REQUIRE(cert.feasible);
  LmiLayout lay{0, cert.system.states()};
  VectorXd y = pack_variables(lay, cert.x, cert.P, cert.Q, cert.lambda);
  auto a = barrier_derivatives(cert.system, y, true);
  auto b = barrier_derivatives(cert.system, y, false);
  CHECK(a.value == b.value);
  CHECK((a.gradient - b.gradient).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.hessian - b.hessian).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("hankel LMI: basic verdicts") {
  std::mt19937 rng(14);
  auto base = random_system(rng, 4, 2, 3, 0.85, false);
  auto half = scaled_to_hankel(base, 0.5);
  auto cert = solve_feasibility(lmi_of(half));
  CHECK(cert.feasible);
  CHECK(cert.lambda < 1.0);
  CHECK(cert.lambda > 0.25 - 1e-6);
  auto au = audit_certificate(cert);
  CHECK(au.ok);

  auto two = scaled_to_hankel(base, 2.0);
  auto bad = solve_feasibility(lmi_of(two));
  CHECK_FALSE(bad.feasible);
  CHECK(bad.t_star > 0.0);
  CHECK(bad.lambda_lower_bound <= 4.0 + 1e-6);

  CHECK(hankel_test(RealizationSS::zero(2, 2)));
  RealizationSS unreach(MatrixXd::Identity(2, 2) * 0.5, MatrixXd::Zero(2, 1),
                        MatrixXd::Ones(1, 2), MatrixXd::Zero(1, 1));
  CHECK(hankel_test(unreach));
  CHECK_THROWS_AS(build_hankel_lmi(MatrixXd::Identity(1, 1) * 1.2, MatrixXd::Ones(1, 1),
                                   MatrixXd::Ones(1, 1), {}),
                  Error);
}

TEST_CASE("hankel LMI agrees with the Gramian test (property)") {
  std::mt19937 rng(15);
  std::uniform_real_distribution<double> hd(0.3, 1.7);
  std::uniform_int_distribution<int> nd(1, 6);
  for (int t = 0; t < 20; ++t) {
    double h = hd(rng);
    if (std::abs(h - 1.0) < 1e-2) h += 0.05;
    auto g = scaled_to_hankel(random_system(rng, nd(rng), 2, 2, 0.9, false), h);
    CHECK(hankel_test(g) == (hankel_norm(g) < 1.0));
  }
}

TEST_CASE("minimize mode reaches the squared Hankel norm") {
  std::mt19937 rng(16);
  for (int t = 0; t < 10; ++t) {
    auto g = scaled_to_hankel(random_system(rng, 4, 2, 2, 0.8, false), 0.7);
    auto cert = solve_feasibility(lmi_of(g), minimize());
    REQUIRE(cert.feasible);
    CHECK(cert.lambda == doctest::Approx(0.49).epsilon(1e-5));
    CHECK(cert.lambda_lower_bound <= 0.49 + 1e-6);
  }
}

TEST_CASE("free parameters are optimized") {
  std::mt19937 rng(17);
  auto g = scaled_to_hankel(random_system(rng, 3, 2, 2, 0.8, false), 3.0);
  // C(x) = C0 - x C0 vanishes at x = 1, so the minimum of lambda is 0.
  AffineLmiSystem sys = build_hankel_lmi(g.A(), g.B(), g.C(), {MatrixXd(-g.C())});
  auto cert = solve_feasibility(sys, minimize());
  REQUIRE(cert.feasible);
  CHECK(cert.lambda < 1e-6);
  CHECK(cert.x(0) == doctest::Approx(1.0).epsilon(1e-2));

  LmiOptions warm;
  warm.x0 = VectorXd::Constant(1, 0.9);
  auto c2 = solve_feasibility(sys, warm);
  CHECK(c2.feasible);
  CHECK(audit_certificate(c2).ok);
}

TEST_CASE("SDPA export") {
  std::mt19937 rng(18);
  auto g = random_system(rng, 2, 1, 1, 0.5, false);
  std::ostringstream os;
  write_sdpa(os, lmi_of(g));
  std::istringstream is(os.str());
  std::string comment;
  std::getline(is, comment);
  CHECK(comment[0] == '*');
  int m = 0, nb = 0, s1 = 0, s2 = 0, s3 = 0;
  is >> m >> nb >> s1 >> s2 >> s3;
  CHECK(m == 2 * 3 + 1);
  CHECK(nb == 3);
  CHECK(s1 == 3);
  CHECK(s2 == 5);
  CHECK(s3 == 2);
}
