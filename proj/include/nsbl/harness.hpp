#pragma once

// Batch plumbing: scenario and suite files, run manifests, report files and
// the four commands behind the CLI. All files are JSON with a versioned
// "format" field; timestamps live only in manifests.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "nsbl/degiorgi_audit.hpp"
#include "nsbl/exponent_ledger.hpp"
#include "nsbl/ns_solver.hpp"

namespace nsbl::harness {

using nlohmann::json;
namespace fs = std::filesystem;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr const char* kScenarioFormat = "nsbl-scenario-1";
inline constexpr const char* kSuiteFormat = "nsbl-suite-1";
inline constexpr const char* kManifestFormat = "nsbl-manifest-1";
inline constexpr const char* kReportFormat = "nsbl-audit-report-1";
inline constexpr const char* kCertificateFormat = "nsbl-exponent-certificate-1";
inline constexpr const char* kSummaryFormat = "nsbl-suite-summary-1";

/// 0 completed (falsifications included), 1 usage, 2 infeasible ledger,
/// 3 instability, 4 I/O or corruption, 5 exhausted parameter search.
enum ExitCode : int { kOk = 0, kUsage = 1, kInfeasible = 2, kUnstable = 3, kIo = 4, kSearchExhausted = 5 };

struct LedgerTuple {
  Rational q, B, K, delta = make_rational(1, 2), j, r;
};

struct Scenario {
  std::string name = "run";
  int n = 32;
  double L = 2 * M_PI;
  SolverConfig solver;
  InitialSpec initial;
  Rational sigma = make_rational(0);
  audit::AuditSpec audit;
  std::optional<LedgerTuple> ledger;

  TorusGrid grid() const { return TorusGrid(n, L); }
};

/// Throws BadSpec on malformed input. Missing fields take defaults.
Scenario scenario_from_json(const json& j);
json to_json(const Scenario& s);
/// sha256 of the canonical (sorted, compact) scenario document.
std::string scenario_hash(const Scenario& s);
Scenario load_scenario(const fs::path& path);

struct Suite {
  std::string name = "suite";
  std::string calibration;  // member name
  double margin_factor = 1.5;
  std::optional<int> refine_n;  // rerun falsified members at this resolution
  std::vector<Scenario> members;
};
/// Accepts explicit "scenarios" and/or a "sweep" {base, seeds {from, count}, grids}.
Suite suite_from_json(const json& j);
Suite load_suite(const fs::path& path);

// --- exponent certificates ---------------------------------------------------

json to_json(const ledger::ConstraintReport& r);
json to_json(const ledger::ExponentParams& p);
json to_json(const ledger::Certificate& c);
/// "q=10,j=3,r=40,B=4,K=11/10,delta=1/2"; missing B, K, delta take defaults.
LedgerTuple parse_ledger_overrides(const std::string& text);
ledger::ExponentParams make_params(int N, const LedgerTuple& t);

// --- reports -----------------------------------------------------------------

/// Shortest decimal string that round-trips to the same double.
std::string exact_decimal(double x);
json to_json(const audit::AuditReport& r);
std::string to_csv(const audit::AuditReport& r);

// --- commands ----------------------------------------------------------------

struct CommandResult {
  int exit_code = kOk;
  std::string message;
  fs::path artifact;  // certificate, manifest, report or summary
};

struct ExponentsOptions {
  int N = 3;
  std::optional<Rational> q_max;
  std::optional<std::string> check;  // explicit tuple instead of a search
};
CommandResult cmd_exponents(const ExponentsOptions& opts, const fs::path& out_dir);

struct SimulationOutput {
  Trajectory trajectory;
  ScaledState initial;
  json manifest;
  fs::path manifest_path;
};

/// Gate, solve, write checkpoints and manifest, verify hashes.
CommandResult cmd_simulate(const Scenario& s, const fs::path& out_dir, SimulationOutput* out = nullptr);
CommandResult cmd_simulate(const fs::path& scenario_file, const fs::path& out_dir);

struct LoadedRun {
  Scenario scenario;
  Trajectory trajectory;
  double M_sigma = 1;
  json manifest;
};
/// Reads a manifest and its checkpoints; CorruptCheckpoint on hash mismatch.
LoadedRun load_run(const fs::path& manifest_path);

/// Audit from a manifest; writes report.json and report.csv beside it.
CommandResult cmd_audit(const fs::path& manifest_path, const std::optional<audit::AuditSpec>& spec_override = {},
                        const audit::Calibration* calibration = nullptr, audit::AuditReport* out = nullptr);

struct MemberOutcome {
  std::string name;
  int n = 0;
  int exit_code = kOk;
  std::string error;
  std::optional<audit::AuditReport> report;
  std::optional<audit::AuditReport> refined;  // rerun at the refinement resolution
};

struct SuiteOutcome {
  audit::Calibration calibration;
  std::vector<MemberOutcome> members;  // calibration member first
  json summary;
  int exit_code = kOk;
};

SuiteOutcome run_suite(const Suite& suite, const fs::path& out_dir, int workers = 1);
CommandResult cmd_suite(const fs::path& suite_file, const fs::path& out_dir, int workers = 1);

/// NSBL_OUT overrides the given output root.
fs::path output_root(const fs::path& requested);

/// Maps library errors onto the exit-code contract.
int exit_code_for(const std::exception& e);

}  // namespace nsbl::harness
