// Serial vs OpenMP timings for the frequency-grid and LMI Hessian kernels.

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <random>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>

#include "dhinf/frequency.hpp"
#include "dhinf/lmi.hpp"

using namespace dhinf;

namespace {

MatrixXd randn(std::mt19937& rng, Index r, Index c) {
  std::normal_distribution<double> nd(0.0, 1.0);
  MatrixXd m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = nd(rng);
  return m;
}

RealizationSS random_stable(std::mt19937& rng, Index n, Index p, Index m) {
  MatrixXd a = randn(rng, n, n);
  a *= 0.8 / Eigen::EigenSolver<MatrixXd>(a, false).eigenvalues().cwiseAbs().maxCoeff();
  return RealizationSS(a, randn(rng, n, m), randn(rng, p, n), randn(rng, p, m));
}

template <class F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void row(const char* name, double serial, double parallel, bool same) {
  std::printf("%-28s serial %9.4f ms  parallel %9.4f ms  speedup %5.2f  identical %s\n", name,
              1e3 * serial, 1e3 * parallel, serial / parallel, same ? "yes" : "NO");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dhinf kernel benchmark"};
  Index states = 24, io = 4, grid = 4096, lmi_states = 16, lmi_free = 12;
  int reps = 5;
  unsigned seed = 1;
  app.add_option("--states", states, "States of the grid-evaluation system");
  app.add_option("--io", io, "Inputs and outputs");
  app.add_option("--grid", grid, "Frequency points");
  app.add_option("--lmi-states", lmi_states, "States of the LMI system");
  app.add_option("--lmi-free", lmi_free, "Free output-map parameters");
  app.add_option("--reps", reps, "Repetitions, best time reported");
  app.add_option("--seed", seed, "RNG seed");
  CLI11_PARSE(app, argc, argv);

  std::printf("openmp threads: %d\n", omp_get_max_threads());
  std::mt19937 rng(seed);

  const RealizationSS g = random_stable(rng, states, io, io);
  const auto pts = uniform_grid(grid);
  FrequencyGrid gs, gp;
  const double ts = best_of(reps, [&] { gs = evaluate_grid_serial(g, pts); });
  const double tp = best_of(reps, [&] { gp = evaluate_grid(g, pts); });
  row("evaluate_grid", ts, tp, grid_max_deviation(gs, gp) == 0.0);

  const Response f = [&](double th) { return evaluate(g, th); };
  std::vector<double> ss, sp;
  const double ts2 = best_of(reps, [&] { ss = sigma_max_profile_serial(f, pts); });
  const double tp2 = best_of(reps, [&] { sp = sigma_max_profile(f, pts); });
  row("sigma_max_profile", ts2, tp2, ss == sp);

  // LMI with free output-map parameters, evaluated at a strictly feasible point.
  RealizationSS h0 = random_stable(rng, lmi_states, 3, 3);
  const RealizationSS h(h0.A(), h0.B(), h0.C(), MatrixXd::Zero(3, 3));
  std::vector<MatrixXd> coef;
  for (Index k = 0; k < lmi_free; ++k) coef.push_back(0.1 * randn(rng, 3, lmi_states));
  const double scale = 0.5 / hankel_norm(h);
  const AffineLmiSystem raw = build_hankel_lmi(h.A(), h.B(), scale * h.C(), coef);
  const FeasibilityCertificate cert = solve_feasibility(raw);
  if (cert.x.size() == 0 && lmi_free > 0) {
    std::printf("lmi: no interior point (%s)\n", cert.status.c_str());
    return 1;
  }
  const AffineLmiSystem& sys = cert.system;
  const LmiLayout lay{sys.free_count(), sys.states()};
  const VectorXd y = pack_variables(lay, cert.x, cert.P, cert.Q, cert.lambda);
  BarrierDerivatives bs, bp;
  const double ts3 = best_of(reps, [&] { bs = barrier_derivatives(sys, y, false); });
  const double tp3 = best_of(reps, [&] { bp = barrier_derivatives(sys, y, true); });
  char label[64];
  std::snprintf(label, sizeof label, "lmi hessian (%ld vars)", static_cast<long>(lay.size()));
  row(label, ts3, tp3, bs.interior && bp.interior && bs.hessian == bp.hessian);

  const double ts4 = best_of(1, [&] {
    LmiOptions o;
    o.parallel = false;
    solve_feasibility(raw, o);
  });
  const double tp4 = best_of(1, [&] { solve_feasibility(raw); });
  row("solve_feasibility", ts4, tp4, true);
  return 0;
}
