// nsbl: exponent certificates, simulations, audits and suites from the shell.

#include <iostream>

#include "CLI11.hpp"
#include "nsbl/checkpoint.hpp"
#include "nsbl/errors.hpp"
#include "nsbl/harness.hpp"

using namespace nsbl;
using namespace nsbl::harness;

namespace {

audit::Calibration load_calibration(const fs::path& p, double margin_factor) {
  json j;
  try {
    j = json::parse(read_file(p));
  } catch (const json::exception& e) {
    throw BadSpec(p.string() + ": " + e.what());
  }
  // a report, a suite summary, or a bare {"constants": {...}}
  const json* c = nullptr;
  if (j.contains("calibration") && j.at("calibration").contains("constants")) c = &j.at("calibration").at("constants");
  if (j.contains("constants")) c = &j.at("constants");
  if (!c) throw BadSpec(p.string() + " has no constants");
  audit::Calibration cal;
  cal.margin_factor = margin_factor;
  for (const auto& [k, v] : c->items()) cal.constants[k] = v.is_string() ? std::stod(v.get<std::string>()) : v.get<double>();
  return cal;
}

int report(const CommandResult& r) {
  (r.exit_code == kOk ? std::cout : std::cerr) << r.message << "\n";
  if (!r.artifact.empty()) std::cout << r.artifact.string() << "\n";
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Navier-Stokes level-set audit toolkit"};
  app.require_subcommand(1);
  std::string out_dir = "nsbl_out";
  app.add_option("--out-dir", out_dir, "output root (NSBL_OUT overrides)");
  app.set_version_flag("--version", std::string("nsbl ") + kVersion);

  auto* ex = app.add_subcommand("exponents", "search or check an exponent tuple and write a certificate");
  int N = 3;
  std::string q_max, check;
  ex->add_option("--N", N, "space dimension")->check(CLI::Range(3, 1000));
  ex->add_option("--q-max", q_max, "largest q tried by the search");
  ex->add_option("--check", check, "explicit tuple, e.g. q=10,j=3,r=40,B=4,K=11/10");

  auto* sim = app.add_subcommand("simulate", "run a scenario and write checkpoints plus a manifest");
  std::string scenario_file;
  sim->add_option("scenario", scenario_file, "scenario JSON")->required()->check(CLI::ExistingFile);

  auto* au = app.add_subcommand("audit", "audit a simulated run from its manifest");
  std::string manifest, spec_file, cal_file;
  double margin_factor = 1.5;
  au->add_option("manifest", manifest, "manifest.json of a run")->required()->check(CLI::ExistingFile);
  au->add_option("--spec", spec_file, "JSON with an audit block overriding the scenario's")->check(CLI::ExistingFile);
  au->add_option("--calibration", cal_file, "report or summary whose constants are applied")->check(CLI::ExistingFile);
  au->add_option("--margin-factor", margin_factor, "safety factor on calibrated constants");

  auto* su = app.add_subcommand("suite", "calibrate on one member and audit the rest");
  std::string suite_file;
  int workers = 1;
  su->add_option("suite", suite_file, "suite JSON")->required()->check(CLI::ExistingFile);
  su->add_option("--workers", workers, "concurrent members")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsage;
  }

  const fs::path root = output_root(out_dir);
  try {
    if (*ex) {
      ExponentsOptions o;
      o.N = N;
      if (!q_max.empty()) o.q_max = parse_rational(q_max);
      if (!check.empty()) o.check = check;
      return report(cmd_exponents(o, root));
    }
    if (*sim) return report(cmd_simulate(fs::path(scenario_file), root));
    if (*au) {
      std::optional<audit::AuditSpec> spec;
      if (!spec_file.empty()) {
        json j = json::parse(read_file(spec_file));
        spec = scenario_from_json({{"audit", j.contains("audit") ? j.at("audit") : j}}).audit;
      }
      std::optional<audit::Calibration> cal;
      if (!cal_file.empty()) cal = load_calibration(cal_file, margin_factor);
      return report(cmd_audit(manifest, spec, cal ? &*cal : nullptr));
    }
    if (*su) return report(cmd_suite(suite_file, root, workers));
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kUsage;
}
