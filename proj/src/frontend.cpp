#include "dhinf/frontend.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include <Eigen/Core>

#include "dhinf/errors.hpp"
#include "dhinf/frequency.hpp"

namespace dhinf {

using io::json;

namespace {

constexpr const char* kVersion = "0.1.0";

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw Error(ErrorCode::kParse, "field '" + field + "': " + what);
}

double number_of(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

}  // namespace

Plant RunConfig::effective_plant() const {
  return full_information ? dhinf::full_information(plant) : plant;
}

std::optional<DelayPattern> RunConfig::delay_pattern() const {
  if (pattern) return pattern;
  if (graph) return pattern_from_graph(*graph);
  return std::nullopt;
}

RunConfig parse_config(const json& j) {
  if (!j.is_object()) bad("<root>", "expected an object");
  RunConfig c;
  c.name = j.value("name", std::string("unnamed"));
  if (!j.contains("plant")) bad("plant", "missing");
  c.plant = io::plant_from_json(j["plant"], "plant");
  if (j.contains("full_information")) {
    if (!j["full_information"].is_boolean()) bad("full_information", "expected a boolean");
    c.full_information = j["full_information"].get<bool>();
  }
  if (j.contains("graph") && j.contains("pattern"))
    bad("graph", "give either a graph or an explicit pattern, not both");
  if (j.contains("graph")) c.graph = io::graph_from_json(j["graph"], "graph");
  if (j.contains("pattern")) c.pattern = io::pattern_from_json(j["pattern"], "pattern");
  if (j.contains("horizon")) {
    if (!j["horizon"].is_number_integer() || j["horizon"].get<int>() < 1)
      bad("horizon", "expected a positive integer");
    c.horizon = j["horizon"].get<int>();
  }
  if (j.contains("modes")) {
    const json& m = j["modes"];
    if (!m.is_array() || m.empty()) bad("modes", "expected a nonempty array of mode names");
    for (size_t i = 0; i < m.size(); ++i) {
      if (!m[i].is_string()) bad("modes[" + std::to_string(i) + "]", "expected a string");
      c.modes.push_back(m[i].get<std::string>());
      try {
        resolve_mode(c.modes.back(), true);
      } catch (const Error& e) {
        bad("modes[" + std::to_string(i) + "]", e.what());
      }
    }
  } else {
    c.modes = {"centralized"};
  }
  if (j.contains("gamma")) {
    const json& g = j["gamma"];
    if (g.is_string()) {
      if (g.get<std::string>() != "auto") bad("gamma", "expected a number or \"auto\"");
    } else {
      c.gamma = number_of(g, "gamma");
      if (!(*c.gamma > 0.0)) bad("gamma", "must be positive");
    }
  }
  if (j.contains("tolerances")) {
    const json& t = j["tolerances"];
    if (!t.is_object()) bad("tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it) {
      const std::string f = "tolerances." + it.key();
      const double v = number_of(it.value(), f);
      if (!(v > 0.0)) bad(f, "must be positive");
      if (it.key() == "verify") c.tol.verify = v;
      else if (it.key() == "gamma_rel") c.tol.gamma_rel = v;
      else if (it.key() == "gate") c.tol.gate = v;
      else if (it.key() == "lmi_eps") c.tol.lmi_eps = v;
      else bad(f, "unknown tolerance");
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return parse_config(j);
}

SynthesisMode resolve_mode(const std::string& name, bool t3_identity) {
  if (name == "centralized")
    return t3_identity ? SynthesisMode::kCentralizedT3I : SynthesisMode::kCentralizedGeneral;
  if (name == "distributed")
    return t3_identity ? SynthesisMode::kDistributedT3I : SynthesisMode::kDistributedGeneral;
  if (name == "delayed_only") return SynthesisMode::kDelayedOnly;
  throw Error(ErrorCode::kParse, "unknown mode '" + name +
                                     "' (expected centralized, distributed or delayed_only)");
}

std::string frequency_csv(const Plant& p, const RealizationSS& K, Index grid_size) {
  require(grid_size >= 2, ErrorCode::kInvalidArgument, "frequency grid needs at least 2 points");
  const RealizationSS cl = closed_loop(p, K);
  const NormResult peak = hinf_norm_peak(cl);
  std::vector<double> th(static_cast<size_t>(grid_size));
  for (Index k = 0; k < grid_size; ++k)
    th[k] = std::numbers::pi * static_cast<double>(k) / static_cast<double>(grid_size - 1);
  double tp = std::fmod(std::abs(peak.peak_theta), 2.0 * std::numbers::pi);
  if (tp > std::numbers::pi) tp = 2.0 * std::numbers::pi - tp;
  th.push_back(tp);
  std::sort(th.begin(), th.end());
  th.erase(std::unique(th.begin(), th.end()), th.end());
  const auto prof = sigma_max_profile(cl, th);
  std::ostringstream os;
  os << "theta,sigma_max\n";
  char buf[64];
  for (size_t i = 0; i < th.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", th[i], prof[i]);
    os << buf;
  }
  return os.str();
}

std::vector<Reverification> reverify_report(const json& report) {
  const Plant p = io::plant_from_json(report.at("plant").at("matrices"), "plant.matrices");
  std::vector<Reverification> out;
  for (const auto& m : report.at("modes")) {
    if (!m.contains("K")) continue;
    const RealizationSS k = io::realization_from_json(m["K"], "K");
    out.push_back({m.at("mode").get<std::string>(), m.at("closed_loop_norm").get<double>(),
                   hinf_norm(closed_loop(p, k))});
  }
  return out;
}

// --- run ----------------------------------------------------------------------

namespace {

json audit_json(const RiccatiAudit& a) {
  return {{"stage", a.stage},
          {"residual", a.residual},
          {"closed_loop_radius", a.closed_loop_radius},
          {"iterations", a.iterations},
          {"method", to_string(a.method)}};
}

std::filesystem::path suffixed(const std::filesystem::path& base, const std::string& mode,
                               bool several) {
  if (!several) return base;
  std::filesystem::path p = base;
  p.replace_filename(base.stem().string() + "_" + mode + base.extension().string());
  return p;
}

// max over random structured V of the grid residual of
// (I - Ui Ui~)(T1 - T2 V T3) - Y.
double y_invariance_audit(const ModelMatchData& d, const DelayConstraint& c, std::uint64_t seed,
                          int samples) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Index np = static_cast<Index>(free_entries(c).size());
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    VectorXd x(np);
    for (Index i = 0; i < np; ++i) x(i) = nd(rng);
    const RealizationSS v = fir_embed(fir_from_params(c, x));
    const Index nz = d.T1.outputs();
    worst = std::max(worst, grid_sup(
                                [&](double th) {
                                  const MatrixXcd ui = evaluate(d.Ui, th);
                                  const MatrixXcd proj = MatrixXcd::Identity(nz, nz) - ui * ui.adjoint();
                                  const MatrixXcd e = evaluate(d.T1, th) - evaluate(d.T2, th) *
                                                                               evaluate(v, th) *
                                                                               evaluate(d.T3, th);
                                  return MatrixXcd(proj * e - evaluate(d.Y, th));
                                },
                                256));
  }
  return worst;
}

}  // namespace

RunOutcome run(const RunOptions& opt, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = load_config(opt.config);
  } catch (const Error& e) {
    RunOutcome out;
    out.exit_code = kExitParse;
    out.errors.push_back(e.what());
    return out;
  }
  RunOutcome out = run(cfg, opt, log);
  out.report["config"]["path"] = opt.config.string();
  if (opt.out) {
    std::ofstream f(*opt.out);
    f << out.report.dump(2) << "\n";
  }
  return out;
}

RunOutcome run(const RunConfig& cfg, const RunOptions& opt, std::ostream& log) {
  using clock = std::chrono::steady_clock;
  const auto t_start = clock::now();
  RunOutcome out;
  json& rep = out.report;
  auto config_error = [&](const std::string& what) {
    out.exit_code = kExitParse;
    out.errors.push_back(what);
    return out;
  };

  rep["tool"] = {{"name", "dhinf"}, {"version", kVersion}};
  rep["environment"] = {{"compiler", __VERSION__},
                        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                      std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                      std::to_string(EIGEN_MINOR_VERSION)},
                        {"openmp_max_threads", omp_get_max_threads()}};

  const std::vector<std::string> modes = opt.modes.empty() ? cfg.modes : opt.modes;
  const std::optional<double> gamma = opt.gamma ? opt.gamma : cfg.gamma;
  rep["config"] = {{"name", cfg.name},
                   {"seed", cfg.seed},
                   {"full_information", cfg.full_information},
                   {"modes", modes},
                   {"gamma", gamma ? json(*gamma) : json("auto")},
                   {"tolerances",
                    {{"verify", cfg.tol.verify},
                     {"gamma_rel", cfg.tol.gamma_rel},
                     {"gate", cfg.tol.gate},
                     {"lmi_eps", cfg.tol.lmi_eps}}}};

  Plant plant;
  std::vector<std::string> warnings;
  std::optional<DelayPattern> pattern;
  std::optional<DelayConstraint> constraint;
  ModelMatchData data;
  std::vector<SynthesisMode> resolved;
  try {
    plant = cfg.effective_plant();
    warnings = validate(plant);
    pattern = cfg.delay_pattern();
    if (pattern) constraint = constraint_from_pattern(*pattern, cfg.horizon);
    data = prepare(plant);
    for (const auto& m : modes) {
      resolved.push_back(resolve_mode(m, data.t3_identity));
      if (resolved.back() != SynthesisMode::kCentralizedT3I &&
          resolved.back() != SynthesisMode::kCentralizedGeneral && !constraint)
        throw Error(ErrorCode::kParse, "mode '" + m + "' needs a graph or pattern");
    }
    if (constraint && (constraint->rows() != plant.u_dim() || constraint->cols() != plant.y_dim()))
      throw Error(ErrorCode::kParse,
                  "delay pattern is " + std::to_string(constraint->rows()) + "x" +
                      std::to_string(constraint->cols()) + " but the controller is " +
                      std::to_string(plant.u_dim()) + "x" + std::to_string(plant.y_dim()));
  } catch (const Error& e) {
    return config_error(e.what());
  }
  for (const auto& w : warnings) log << "warning: " << w << "\n";

  rep["plant"] = {{"matrices", io::to_json(plant)},
                  {"states", plant.states()},
                  {"w_dim", plant.w_dim()},
                  {"u_dim", plant.u_dim()},
                  {"z_dim", plant.z_dim()},
                  {"y_dim", plant.y_dim()},
                  {"warnings", warnings},
                  {"y_norm", data.y_norm},
                  {"t3_identity", data.t3_identity}};

  if (pattern) {
    const QiResult qi = qi_check(*pattern, plant_delays(plant.P22()));
    json qj = {{"holds", qi.holds}};
    if (qi.witness) {
      const auto& w = *qi.witness;
      qj["witness"] = {{"i", w.i}, {"j", w.j}, {"l", w.l}, {"k", w.k},
                       {"path_delay", w.path_delay}, {"required", w.required}};
      log << "warning: delay pattern is not quadratically invariant under P22\n";
    }
    rep["qi"] = qj;
    rep["constraint"] = {{"N", constraint->N},
                         {"pattern", io::to_json(*pattern)},
                         {"free_parameters", free_entries(*constraint).size()}};
    rep["audits"] = {{"y_invariance_residual", y_invariance_audit(data, *constraint, cfg.seed, 5)},
                     {"samples", 5}};
  } else {
    rep["qi"] = {{"holds", true}, {"note", "no delay constraint"}};
  }

  SynthesisOptions sopt;
  sopt.verify_tol = cfg.tol.verify;
  sopt.gate_tol = cfg.tol.gate;
  sopt.lmi.eps_strict = cfg.tol.lmi_eps;
  BisectOptions bopt;
  bopt.rel_tol = cfg.tol.gamma_rel;

  bool synth_failed = false, verify_failed = false;
  rep["modes"] = json::array();
  json timing = json::object();
  for (size_t i = 0; i < modes.size(); ++i) {
    const SynthesisMode mode = resolved[i];
    json mj = {{"requested", modes[i]}, {"mode", to_string(mode)}};
    const auto t0 = clock::now();
    if (opt.verbose) log << "[" << modes[i] << "] " << to_string(mode) << " ...\n";
    try {
      const std::optional<DelayConstraint> c =
          (mode == SynthesisMode::kCentralizedT3I || mode == SynthesisMode::kCentralizedGeneral)
              ? std::nullopt
              : constraint;
      SynthesisReport r = gamma ? synthesize_at(plant, mode, *gamma, c, sopt)
                                : synthesize(plant, mode, c, sopt, bopt);
      json hist = json::array();
      for (const auto& h : r.gamma_history)
        hist.push_back({{"gamma", h.gamma}, {"feasible", h.feasible}, {"reason", h.reason},
                        {"hankel", h.hankel}});
      mj["history"] = hist;
      mj["gamma"] = r.gamma;
      mj["gamma_lower"] = r.gamma_lower;
      mj["y_norm"] = r.y_norm;
      mj["monotone"] = r.monotone;
      if (r.result.z_norm) mj["z_norm"] = *r.result.z_norm;
      json ra = json::array();
      for (const auto& a : r.result.audits) ra.push_back(audit_json(a));
      mj["riccati"] = ra;
      if (!r.result.feasible) {
        throw Error(ErrorCode::kNormBound, "infeasible at gamma " + std::to_string(r.gamma) +
                                               " (" + r.result.reason + ")");
      }
      mj["achieved_norm"] = r.result.achieved_norm;
      mj["mask_ok"] = r.result.mask_ok;
      if (r.result.certificate) {
        const auto& cert = *r.result.certificate;
        const CertificateAudit au = audit_certificate(cert, sopt.lmi.eps_strict);
        mj["lmi"] = {{"lambda", cert.lambda},
                     {"lambda_lower_bound", cert.lambda_lower_bound},
                     {"margin", cert.margin},
                     {"iterations", cert.iterations},
                     {"status", cert.status},
                     {"audit_ok", au.ok},
                     {"states", cert.system.states()},
                     {"free_parameters", cert.system.free_count()}};
        if (opt.dump_lmi) {
          std::ofstream f(suffixed(*opt.dump_lmi, modes[i], modes.size() > 1));
          write_sdpa(f, cert.system);
        }
      }
      if (r.result.V) mj["V"] = io::to_json(*r.result.V);
      mj["Q"] = io::to_json(r.Q);
      if (!r.K) throw Error(ErrorCode::kSingularFeedthrough, "controller recovery failed");
      mj["K"] = io::to_json(*r.K);

      // Audit from the recovered controller alone.
      const RealizationSS cl = closed_loop(plant, *r.K);
      const bool stable = cl.is_stable();
      const double cl_norm = hinf_norm(cl);
      mj["closed_loop_stable"] = stable;
      mj["closed_loop_norm"] = cl_norm;
      const bool ok = stable && cl_norm <= r.gamma + cfg.tol.verify && r.result.mask_ok;
      mj["verified"] = ok;
      mj["status"] = ok ? "ok" : "verification_failed";
      if (!ok) {
        verify_failed = true;
        out.errors.push_back(modes[i] + ": closed-loop audit failed (norm " +
                             std::to_string(cl_norm) + ", gamma " + std::to_string(r.gamma) + ")");
      }
      if (opt.freq_csv) {
        std::ofstream f(suffixed(*opt.freq_csv, modes[i], modes.size() > 1));
        f << frequency_csv(plant, *r.K, opt.grid_size);
      }
      if (opt.verbose)
        log << "[" << modes[i] << "] gamma " << r.gamma << ", closed loop " << cl_norm << "\n";
    } catch (const Error& e) {
      synth_failed = true;
      mj["status"] = "synthesis_failed";
      mj["error"] = e.what();
      out.errors.push_back(modes[i] + ": " + e.what());
    }
    timing[modes[i]] = std::chrono::duration<double>(clock::now() - t0).count();
    rep["modes"].push_back(std::move(mj));
  }
  timing["total"] = std::chrono::duration<double>(clock::now() - t_start).count();
  rep["timing_s"] = timing;
  out.exit_code = synth_failed ? kExitSynthesis : verify_failed ? kExitVerification : kExitOk;
  return out;
}

}  // namespace dhinf
