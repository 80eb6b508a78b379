#pragma once

// Batch driver: config JSON in, report JSON (and optional CSV) out.
// Exit codes: 0 ok, 2 parse/config error, 3 synthesis failure,
// 4 verification mismatch.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dhinf/io.hpp"
#include "dhinf/synthesis.hpp"

namespace dhinf {

inline constexpr int kExitOk = 0;
inline constexpr int kExitParse = 2;
inline constexpr int kExitSynthesis = 3;
inline constexpr int kExitVerification = 4;

struct Tolerances {
  double verify = defaults::kVerifyTol;
  double gamma_rel = defaults::kGammaRelTol;
  double gate = defaults::kGateTol;
  double lmi_eps = 1e-7;
};

struct RunConfig {
  std::string name;
  Plant plant;
  bool full_information = false;
  std::optional<CommGraph> graph;
  std::optional<DelayPattern> pattern;
  std::optional<int> horizon;
  std::vector<std::string> modes;  // centralized, distributed, delayed_only
  std::optional<double> gamma;     // empty: bisection
  Tolerances tol;
  std::uint64_t seed = 0;

  Plant effective_plant() const;
  std::optional<DelayPattern> delay_pattern() const;
};

/// Throws Error(kParse) with the offending field.
RunConfig parse_config(const io::json& j);
/// Reads and parses a file; JSON syntax errors carry line and column.
RunConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path config;
  std::vector<std::string> modes;  // overrides the config when nonempty
  std::optional<double> gamma;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> freq_csv;
  Index grid_size = 512;
  std::optional<std::filesystem::path> dump_lmi;
  bool verbose = false;
};

struct RunOutcome {
  int exit_code = kExitOk;
  io::json report;
  std::vector<std::string> errors;
};

RunOutcome run(const RunOptions& opt, std::ostream& log);
RunOutcome run(const RunConfig& cfg, const RunOptions& opt, std::ostream& log);

/// theta in [0, pi] on grid_size uniform points plus the peak angle;
/// columns theta, sigma_max of the closed loop through K.
std::string frequency_csv(const Plant& p, const RealizationSS& K, Index grid_size);

struct Reverification {
  std::string mode;
  double stored = 0.0;
  double recomputed = 0.0;
};
/// Recomputes every closed-loop norm from the plant and controllers stored
/// in a report.
std::vector<Reverification> reverify_report(const io::json& report);

SynthesisMode resolve_mode(const std::string& name, bool t3_identity);

}  // namespace dhinf
