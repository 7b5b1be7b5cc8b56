#include "nsbl/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "nsbl/checkpoint.hpp"
#include "nsbl/errors.hpp"

namespace nsbl::harness {

namespace {

Rational rational_from(const json& v, const char* what) {
  if (v.is_string()) return parse_rational(v.get<std::string>());
  if (v.is_number_integer()) return Rational(v.get<long>());
  if (v.is_number()) return parse_rational(exact_decimal(v.get<double>()));
  throw BadSpec(std::string(what) + " must be a number or a fraction string");
}

template <class T>
void read_opt(const json& obj, const char* key, T& dst) {
  if (obj.contains(key)) dst = obj.at(key).get<T>();
}

void read_rational(const json& obj, const char* key, Rational& dst) {
  if (obj.contains(key)) dst = rational_from(obj.at(key), key);
}

void check_name(const std::string& name) {
  if (name.empty()) throw BadSpec("scenario name is empty");
  for (char c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      throw BadSpec("scenario name '" + name + "' may only use letters, digits, '-', '_' and '.'");
}

json parse_json_file(const fs::path& p) {
  const std::string text = read_file(p);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw BadSpec(p.string() + ": " + e.what());
  }
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream ss;
  ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return ss.str();
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

json ladder_json(const audit::LevelSetLadder& L) {
  json levels = json::array(), y = json::array();
  for (double x : L.levels) levels.push_back(exact_decimal(x));
  for (double x : L.y) y.push_back(exact_decimal(x));
  return {{"k", exact_decimal(L.k)}, {"n_max", L.n_max},         {"levels", levels},
          {"y", y},                 {"zero_index", L.zero_index}, {"status", L.status},
          {"nonincreasing", L.nonincreasing}};
}

Rational default_B(int N) {
  const Rational bound = (N - 1) * ledger::lambda_z(N);
  mpz_class f = bound.get_num() / bound.get_den();
  return Rational(f + 1);
}

}  // namespace

// --- scenarios ----------------------------------------------------------------

Scenario scenario_from_json(const json& j) {
  try {
    if (!j.is_object()) throw BadSpec("scenario must be an object");
    if (j.contains("format") && j.at("format") != kScenarioFormat)
      throw BadSpec("unknown scenario format " + j.at("format").dump());
    Scenario s;
    read_opt(j, "name", s.name);
    check_name(s.name);
    if (j.contains("grid")) {
      const json& g = j.at("grid");
      read_opt(g, "n", s.n);
      read_opt(g, "L", s.L);
    }
    if (j.contains("solver")) {
      const json& v = j.at("solver");
      read_opt(v, "nu", s.solver.nu);
      read_opt(v, "dt", s.solver.dt);
      read_opt(v, "T", s.solver.T);
      read_opt(v, "snapshot_stride", s.solver.snapshot_stride);
      read_opt(v, "dealias", s.solver.dealias);
      if (v.contains("scheme")) s.solver.scheme = parse_scheme(v.at("scheme").get<std::string>());
    }
    if (j.contains("initial")) {
      const json& v = j.at("initial");
      if (v.contains("kind")) s.initial.kind = parse_initial_kind(v.at("kind").get<std::string>());
      read_opt(v, "seed", s.initial.seed);
      read_opt(v, "amplitude", s.initial.amplitude);
      read_opt(v, "A", s.initial.A);
      read_opt(v, "B", s.initial.B);
      read_opt(v, "C", s.initial.C);
      read_opt(v, "k_max", s.initial.k_max);
      read_opt(v, "k_peak", s.initial.k_peak);
    }
    read_rational(j, "sigma", s.sigma);
    if (j.contains("audit")) {
      const json& a = j.at("audit");
      read_rational(a, "q", s.audit.q);
      read_rational(a, "r", s.audit.r);
      read_rational(a, "j", s.audit.j);
      read_rational(a, "B", s.audit.B);
      read_rational(a, "delta", s.audit.delta);
      read_rational(a, "delta0", s.audit.delta0);
      if (a.contains("ells")) {
        s.audit.ells.clear();
        for (const auto& e : a.at("ells")) s.audit.ells.push_back(rational_from(e, "ells"));
        if (s.audit.ells.empty()) throw BadSpec("audit.ells must not be empty");
      }
      if (a.contains("s")) s.audit.s_list = a.at("s").get<std::vector<double>>();
      read_opt(a, "n_max", s.audit.n_max);
      read_opt(a, "L1", s.audit.L1);
      read_opt(a, "calibration", s.audit.calibration);
    }
    if (j.contains("ledger") && !j.at("ledger").is_null()) {
      const json& l = j.at("ledger");
      LedgerTuple t;
      for (const char* key : {"q", "B", "K", "j", "r"})
        if (!l.contains(key)) throw BadSpec(std::string("ledger tuple needs ") + key);
      t.q = rational_from(l.at("q"), "q");
      t.B = rational_from(l.at("B"), "B");
      t.K = rational_from(l.at("K"), "K");
      t.j = rational_from(l.at("j"), "j");
      t.r = rational_from(l.at("r"), "r");
      read_rational(l, "delta", t.delta);
      s.ledger = t;
    }
    return s;
  } catch (const json::exception& e) {
    throw BadSpec(std::string("scenario: ") + e.what());
  } catch (const DomainError& e) {
    throw BadSpec(std::string("scenario: ") + e.what());
  }
}

json to_json(const Scenario& s) {
  json ells = json::array();
  for (const auto& e : s.audit.ells) ells.push_back(to_string(e));
  json j = {
      {"format", kScenarioFormat},
      {"name", s.name},
      {"grid", {{"n", s.n}, {"L", s.L}}},
      {"solver",
       {{"nu", s.solver.nu},
        {"dt", s.solver.dt},
        {"T", s.solver.T},
        {"snapshot_stride", s.solver.snapshot_stride},
        {"dealias", s.solver.dealias},
        {"scheme", to_string(s.solver.scheme)}}},
      {"initial",
       {{"kind", to_string(s.initial.kind)},
        {"seed", s.initial.seed},
        {"amplitude", s.initial.amplitude},
        {"A", s.initial.A},
        {"B", s.initial.B},
        {"C", s.initial.C},
        {"k_max", s.initial.k_max},
        {"k_peak", s.initial.k_peak}}},
      {"sigma", to_string(s.sigma)},
      {"audit",
       {{"q", to_string(s.audit.q)},
        {"r", to_string(s.audit.r)},
        {"j", to_string(s.audit.j)},
        {"B", to_string(s.audit.B)},
        {"delta", to_string(s.audit.delta)},
        {"delta0", to_string(s.audit.delta0)},
        {"ells", ells},
        {"s", s.audit.s_list},
        {"n_max", s.audit.n_max},
        {"L1", s.audit.L1},
        {"calibration", s.audit.calibration}}},
      {"ledger", nullptr}};
  if (s.ledger) {
    const auto& t = *s.ledger;
    j["ledger"] = {{"q", to_string(t.q)}, {"B", to_string(t.B)}, {"K", to_string(t.K)},
                   {"delta", to_string(t.delta)}, {"j", to_string(t.j)}, {"r", to_string(t.r)}};
  }
  return j;
}

std::string scenario_hash(const Scenario& s) { return sha256_hex(to_json(s).dump()); }

Scenario load_scenario(const fs::path& path) { return scenario_from_json(parse_json_file(path)); }

Suite suite_from_json(const json& j) {
  try {
    if (!j.is_object()) throw BadSpec("suite must be an object");
    if (j.contains("format") && j.at("format") != kSuiteFormat) throw BadSpec("unknown suite format " + j.at("format").dump());
    Suite s;
    read_opt(j, "name", s.name);
    check_name(s.name);
    read_opt(j, "calibration", s.calibration);
    read_opt(j, "margin_factor", s.margin_factor);
    if (!(s.margin_factor >= 1)) throw BadSpec("margin_factor must be at least 1");
    if (j.contains("refine") && j.at("refine").contains("n")) s.refine_n = j.at("refine").at("n").get<int>();
    if (j.contains("scenarios"))
      for (const auto& m : j.at("scenarios")) s.members.push_back(scenario_from_json(m));
    if (j.contains("sweep")) {
      const json& w = j.at("sweep");
      const Scenario base = scenario_from_json(w.at("base"));
      const auto from = w.at("seeds").value("from", std::uint64_t{0});
      const auto count = w.at("seeds").at("count").get<std::uint64_t>();
      std::vector<int> grids = w.contains("grids") ? w.at("grids").get<std::vector<int>>() : std::vector<int>{base.n};
      for (int n : grids)
        for (std::uint64_t k = 0; k < count; ++k) {
          Scenario m = base;
          m.n = n;
          m.initial.seed = from + k;
          m.name = base.name + "_s" + std::to_string(from + k) + (grids.size() > 1 ? "_n" + std::to_string(n) : "");
          s.members.push_back(m);
        }
    }
    if (s.members.empty()) throw BadSpec("suite has no members");
    for (std::size_t a = 0; a < s.members.size(); ++a)
      for (std::size_t b = a + 1; b < s.members.size(); ++b)
        if (s.members[a].name == s.members[b].name) throw BadSpec("duplicate member name " + s.members[a].name);
    if (s.calibration.empty()) s.calibration = s.members.front().name;
    if (std::none_of(s.members.begin(), s.members.end(), [&](const Scenario& m) { return m.name == s.calibration; }))
      throw BadSpec("calibration member " + s.calibration + " is not in the suite");
    return s;
  } catch (const json::exception& e) {
    throw BadSpec(std::string("suite: ") + e.what());
  }
}

Suite load_suite(const fs::path& path) { return suite_from_json(parse_json_file(path)); }

// --- certificates --------------------------------------------------------------

json to_json(const ledger::ConstraintReport& r) {
  return {{"id", r.id},
          {"lhs", to_string(r.lhs)},
          {"relation", r.relation},
          {"rhs", to_string(r.rhs)},
          {"satisfied", r.satisfied},
          {"margin", to_string(r.margin)},
          {"margin_decimal", to_decimal(r.margin, 12)},
          {"gating", r.gating},
          {"note", r.note}};
}

json to_json(const ledger::ExponentParams& p) {
  json j = {{"N", p.N},
            {"q", to_string(p.q)},
            {"B", to_string(p.B)},
            {"K", to_string(p.K)},
            {"delta", to_string(p.delta)},
            {"j", to_string(p.j)},
            {"r", to_string(p.r)},
            {"lambda_z", to_string(p.lambda_z)},
            {"alpha", to_string(p.alpha)},
            {"b", to_string(p.b)},
            {"M", to_string(p.M)},
            {"M_delta", to_string(p.M_delta)},
            {"A", to_string(p.A)}};
  auto opt = [&](const char* key, const std::optional<Rational>& v) {
    if (v) j[key] = to_string(*v);
  };
  opt("s1", p.s1);
  opt("ell", p.ell);
  opt("beta1", p.beta1);
  opt("sigma", p.sigma);
  opt("delta0", p.delta0);
  return j;
}

json to_json(const ledger::Certificate& c) {
  json reports = json::array();
  for (const auto& r : c.reports) reports.push_back(to_json(r));
  return {{"format", kCertificateFormat},
          {"status", c.status},
          {"feasible", c.feasible},
          {"params", to_json(c.params)},
          {"reports", reports}};
}

LedgerTuple parse_ledger_overrides(const std::string& text) {
  std::map<std::string, Rational> kv;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw BadSpec("expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    if (key != "q" && key != "B" && key != "K" && key != "delta" && key != "j" && key != "r")
      throw BadSpec("unknown ledger key '" + key + "'");
    try {
      kv[key] = parse_rational(item.substr(eq + 1));
    } catch (const DomainError& e) {
      throw BadSpec(e.what());
    }
  }
  if (!kv.count("q")) throw BadSpec("ledger tuple needs q");
  LedgerTuple t;
  t.q = kv["q"];
  t.B = kv.count("B") ? kv["B"] : Rational(0);
  t.K = kv.count("K") ? kv["K"] : Rational(0);
  if (kv.count("delta")) t.delta = kv["delta"];
  t.j = kv.count("j") ? kv["j"] : Rational(t.q / 2);
  t.r = kv.count("r") ? kv["r"] : Rational(0);
  return t;
}

ledger::ExponentParams make_params(int N, const LedgerTuple& in) {
  LedgerTuple t = in;
  if (t.B == 0) t.B = default_B(N);
  if (t.K == 0) {
    const auto ki = ledger::k_interval(N, t.B);
    t.K = (ki.lower + ki.upper.lo) / 2;
  }
  if (t.r == 0) t.r = t.K * t.q;
  return ledger::make_params(N, t.q, t.B, t.K, t.delta, t.j, t.r);
}

// --- reports ------------------------------------------------------------------

std::string exact_decimal(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

json to_json(const audit::AuditReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"id", c.id},
                      {"lhs", exact_decimal(c.lhs)},
                      {"rhs", exact_decimal(c.rhs)},
                      {"fitted_constant", exact_decimal(c.fitted_constant)},
                      {"pass", c.pass},
                      {"margin", exact_decimal(c.margin)},
                      {"applicable", c.applicable},
                      {"note", c.note}});
  json constants = json::object();
  for (const auto& [k, v] : r.constants) constants[k] = exact_decimal(v);
  json j = {{"format", kReportFormat},
            {"run_id", r.run_id},
            {"checks", checks},
            {"constants", constants},
            {"environment", r.environment},
            {"k_jt10", exact_decimal(r.k_jt10)},
            {"L2", exact_decimal(r.L2)},
            {"branch", r.branch},
            {"degenerate", r.degenerate},
            {"falsified", r.falsified},
            {"all_pass", r.all_pass()},
            {"ladder", nullptr},
            {"probe_ladder", nullptr}};
  if (r.ladder) j["ladder"] = ladder_json(*r.ladder);
  if (r.probe_ladder) j["probe_ladder"] = ladder_json(*r.probe_ladder);
  return j;
}

std::string to_csv(const audit::AuditReport& r) {
  std::string out = "check_id,lhs,rhs,fitted_constant,margin,pass,applicable\n";
  for (const auto& c : r.checks)
    out += c.id + "," + exact_decimal(c.lhs) + "," + exact_decimal(c.rhs) + "," + exact_decimal(c.fitted_constant) + "," +
           exact_decimal(c.margin) + "," + (c.pass ? "1" : "0") + "," + (c.applicable ? "1" : "0") + "\n";
  return out;
}

// --- commands -----------------------------------------------------------------

fs::path output_root(const fs::path& requested) {
  const char* env = std::getenv("NSBL_OUT");
  if (env && *env) return fs::path(env);
  return requested;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const Instability*>(&e)) return kUnstable;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const CorruptCheckpoint*>(&e)) return kIo;
  if (dynamic_cast<const SearchExhausted*>(&e)) return kSearchExhausted;
  if (dynamic_cast<const fs::filesystem_error*>(&e)) return kIo;
  return kUsage;
}

CommandResult cmd_exponents(const ExponentsOptions& opts, const fs::path& out_dir) {
  if (opts.N < 3) throw BadSpec("N must be at least 3");
  fs::create_directories(out_dir);
  CommandResult res;
  if (opts.check) {
    ledger::Certificate cert = ledger::certify(make_params(opts.N, parse_ledger_overrides(*opts.check)));
    res.artifact = out_dir / ("certificate_N" + std::to_string(opts.N) + "_check.json");
    write_json(res.artifact, to_json(cert));
    res.exit_code = cert.feasible ? kOk : kInfeasible;
    res.message = "tuple " + std::string(cert.feasible ? "feasible" : "infeasible");
    return res;
  }
  ledger::SearchOptions so;
  if (opts.q_max) so.q_max = *opts.q_max;
  ledger::SearchResult sr = ledger::search_parameters(opts.N, so);
  res.artifact = out_dir / ("certificate_N" + std::to_string(opts.N) + ".json");
  json failures = json::object();
  for (const auto& [id, count] : sr.failure_counts) failures[id] = count;
  if (sr.params) {
    // re-verify from scratch
    ledger::ExponentParams fresh = ledger::make_params(opts.N, sr.params->q, sr.params->B, sr.params->K, sr.params->delta,
                                                       sr.params->j, sr.params->r);
    ledger::Certificate cert = ledger::certify(fresh);
    json j = to_json(cert);
    j["candidates_examined"] = sr.candidates_examined;
    write_json(res.artifact, j);
    res.exit_code = cert.feasible ? kOk : kInfeasible;
    res.message = "feasible tuple q = " + to_string(fresh.q) + ", r = " + to_string(fresh.r);
    return res;
  }
  json j = to_json(sr.last_candidate);
  j["status"] = "search_exhausted";
  j["feasible"] = false;
  j["candidates_examined"] = sr.candidates_examined;
  j["failure_counts"] = failures;
  j["q_max"] = to_string(so.q_max);
  write_json(res.artifact, j);
  res.exit_code = kSearchExhausted;
  res.message = "no feasible tuple up to q = " + to_string(so.q_max) + " (" + std::to_string(sr.candidates_examined) +
                " candidates)";
  return res;
}

CommandResult cmd_simulate(const Scenario& s, const fs::path& out_dir, SimulationOutput* out) {
  const auto start = std::chrono::steady_clock::now();
  const TorusGrid g = s.grid();
  s.solver.validate();
  s.solver.steps();
  s.audit.validate(g.N);

  CommandResult res;
  const fs::path dir = out_dir / s.name;
  fs::create_directories(dir);

  // ledger gate: nothing is solved under an infeasible tuple
  if (s.ledger) {
    ledger::Certificate cert = ledger::certify(make_params(g.N, *s.ledger));
    write_json(dir / "certificate.json", to_json(cert));
    if (!cert.feasible) {
      res.exit_code = kInfeasible;
      res.message = s.name + ": ledger tuple infeasible, solve skipped";
      res.artifact = dir / "certificate.json";
      return res;
    }
  }

  ScaledState st = make_scaled_state(make_initial(s.initial, g), s.sigma);
  SolverConfig cfg = s.solver;
  cfg.nonlinear_coefficient = st.M_sigma;
  Trajectory tr = run(st.u, cfg);

  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".nsbl") fs::remove(e.path());

  json ckpts = json::array();
  for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
    std::ostringstream name;
    name << "ckpt_" << std::setw(4) << std::setfill('0') << i << ".nsbl";
    const std::string sha = write_checkpoint(dir / name.str(), tr.snapshots[i]);
    ckpts.push_back({{"file", name.str()}, {"sha256", sha}, {"t", tr.times[i]}});
  }
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json manifest = {{"format", kManifestFormat},
                   {"version", kVersion},
                   {"scenario", to_json(s)},
                   {"scenario_hash", scenario_hash(s)},
                   {"checkpoints", ckpts},
                   {"dissipation", tr.dissipation},
                   {"steps_taken", tr.steps_taken},
                   {"cfl", tr.cfl},
                   {"M_sigma", st.M_sigma},
                   {"status", tr.unstable ? "unstable" : "completed"},
                   {"failure_time", tr.failure_time},
                   {"failure_message", tr.failure_message},
                   {"report", nullptr},
                   {"wall_clock_seconds", wall},
                   {"created_utc", utc_now()}};
  const fs::path mpath = dir / "manifest.json";
  write_json(mpath, manifest);

  // hashes verify on completion
  for (const auto& c : ckpts) read_checkpoint(dir / c.at("file").get<std::string>(), c.at("sha256").get<std::string>());

  res.artifact = mpath;
  if (tr.unstable) {
    res.exit_code = kUnstable;
    res.message = s.name + ": " + tr.failure_message + " at t = " + exact_decimal(tr.failure_time);
  } else {
    res.message = s.name + ": " + std::to_string(tr.steps_taken) + " steps, " + std::to_string(ckpts.size()) + " checkpoints";
  }
  if (out) {
    out->trajectory = std::move(tr);
    out->initial = std::move(st);
    out->manifest = manifest;
    out->manifest_path = mpath;
  }
  return res;
}

CommandResult cmd_simulate(const fs::path& scenario_file, const fs::path& out_dir) {
  return cmd_simulate(load_scenario(scenario_file), out_dir);
}

LoadedRun load_run(const fs::path& manifest_path) {
  LoadedRun run;
  try {
    run.manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(manifest_path.string() + ": " + e.what());
  }
  const json& m = run.manifest;
  try {
    if (m.at("format") != kManifestFormat) throw CorruptCheckpoint("not a run manifest: " + manifest_path.string());
    run.scenario = scenario_from_json(m.at("scenario"));
    if (scenario_hash(run.scenario) != m.at("scenario_hash").get<std::string>())
      throw CorruptCheckpoint("scenario hash mismatch in " + manifest_path.string());
    run.M_sigma = m.at("M_sigma").get<double>();
    const fs::path dir = manifest_path.parent_path();
    const TorusGrid g = run.scenario.grid();
    for (const auto& c : m.at("checkpoints")) {
      SpectralVelocity v = read_checkpoint(dir / c.at("file").get<std::string>(), c.at("sha256").get<std::string>());
      if (!(v.grid == g)) throw CorruptCheckpoint("checkpoint grid differs from the scenario grid");
      run.trajectory.times.push_back(c.at("t").get<double>());
      run.trajectory.snapshots.push_back(std::move(v));
    }
    run.trajectory.dissipation = m.at("dissipation").get<std::vector<double>>();
    if (run.trajectory.snapshots.empty() || run.trajectory.dissipation.size() != run.trajectory.snapshots.size())
      throw CorruptCheckpoint("manifest lists no checkpoints or mismatched dissipation");
    run.trajectory.steps_taken = m.at("steps_taken").get<long>();
    run.trajectory.cfl = m.at("cfl").get<double>();
    run.trajectory.unstable = m.at("status") == "unstable";
    run.trajectory.failure_time = m.at("failure_time").get<double>();
    run.trajectory.failure_message = m.at("failure_message").get<std::string>();
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(manifest_path.string() + ": " + e.what());
  }
  return run;
}

CommandResult cmd_audit(const fs::path& manifest_path, const std::optional<audit::AuditSpec>& spec_override,
                        const audit::Calibration* calibration, audit::AuditReport* out) {
  LoadedRun run = load_run(manifest_path);
  const audit::AuditSpec spec = spec_override ? *spec_override : run.scenario.audit;
  audit::AuditContext ctx;
  ctx.run_id = run.scenario.name;
  ctx.M_sigma = run.M_sigma;
  ctx.sigma = run.scenario.sigma;
  ctx.solver = run.scenario.solver;
  ctx.solver.nonlinear_coefficient = run.M_sigma;
  audit::AuditReport rep = audit::run_audit(run.trajectory, ctx, spec, calibration);

  json doc = to_json(rep);
  doc["scenario"] = run.manifest.at("scenario");
  doc["scenario_hash"] = run.manifest.at("scenario_hash");
  if (calibration) {
    json c = json::object();
    for (const auto& [k, v] : calibration->constants) c[k] = exact_decimal(v);
    doc["calibration"] = {{"constants", c}, {"margin_factor", exact_decimal(calibration->margin_factor)}};
  }
  const fs::path dir = manifest_path.parent_path();
  const std::string text = doc.dump(2) + "\n";
  write_file(dir / "report.json", text);
  write_file(dir / "report.csv", to_csv(rep));

  run.manifest["report"] = {{"file", "report.json"}, {"sha256", sha256_hex(text)}, {"csv", "report.csv"}};
  write_json(manifest_path, run.manifest);

  CommandResult res;
  res.artifact = dir / "report.json";
  std::size_t failed = 0;
  for (const auto& c : rep.checks) failed += !c.pass;
  res.message = rep.run_id + ": " + std::to_string(rep.checks.size()) + " checks, " + std::to_string(failed) + " failing" +
                (rep.falsified ? ", final bound falsified" : "");
  if (out) *out = std::move(rep);
  return res;
}

namespace {

MemberOutcome run_member(const Scenario& s, const fs::path& dir, const audit::Calibration* cal) {
  MemberOutcome m;
  m.name = s.name;
  m.n = s.n;
  try {
    CommandResult sim = cmd_simulate(s, dir);
    if (sim.exit_code != kOk) {
      m.exit_code = sim.exit_code;
      m.error = sim.message;
      return m;
    }
    audit::AuditReport rep;
    cmd_audit(sim.artifact, {}, cal, &rep);
    m.report = std::move(rep);
  } catch (const std::exception& e) {
    m.exit_code = exit_code_for(e);
    m.error = e.what();
  }
  return m;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

json stats(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  const double med = median(v);
  return {{"count", v.size()},
          {"min", exact_decimal(lo)},
          {"median", exact_decimal(med)},
          {"max", exact_decimal(hi)},
          {"relative_spread", exact_decimal(med != 0 ? (hi - lo) / std::abs(med) : 0.0)}};
}

json build_summary(const Suite& suite, const SuiteOutcome& o) {
  json members = json::array();
  std::map<std::string, std::vector<double>> margins;
  std::map<std::string, std::pair<long, long>> counts;  // applicable, passing
  std::map<int, std::map<std::string, std::vector<double>>> constants;
  json falsifications = json::array();
  for (const auto& m : o.members) {
    json e = {{"name", m.name}, {"n", m.n}, {"exit_code", m.exit_code}, {"error", m.error}};
    if (m.report) {
      e["falsified"] = m.report->falsified;
      e["all_pass"] = m.report->all_pass();
      e["branch"] = m.report->branch;
      for (const auto& c : m.report->checks) {
        if (!c.applicable) continue;
        margins[c.id].push_back(c.margin);
        counts[c.id].first++;
        counts[c.id].second += c.pass;
      }
      if (m.name != suite.calibration)
        for (const auto& [k, v] : m.report->constants) constants[m.n][k].push_back(v);
      if (m.report->falsified) {
        json f = {{"name", m.name}, {"n", m.n}, {"margin", exact_decimal(m.report->find("final_bound")->margin)}};
        if (m.refined) {
          f["refined_n"] = suite.refine_n.value_or(0);
          f["refined_falsified"] = m.refined->falsified;
          f["attributed_to_resolution"] = !m.refined->falsified;
        } else {
          f["attributed_to_resolution"] = false;
        }
        falsifications.push_back(f);
      }
    }
    members.push_back(e);
  }
  json checks = json::object();
  for (const auto& [id, v] : margins) {
    json s = stats(v);
    s["passing"] = counts[id].second;
    checks[id] = s;
  }
  json cons = json::object();
  for (const auto& [n, m] : constants) {
    json per = json::object();
    for (const auto& [k, v] : m) per[k] = stats(v);
    cons[std::to_string(n)] = per;
  }
  json cal = json::object();
  for (const auto& [k, v] : o.calibration.constants) cal[k] = exact_decimal(v);
  return {{"format", kSummaryFormat},
          {"suite", suite.name},
          {"calibration", {{"member", suite.calibration}, {"constants", cal}, {"margin_factor", exact_decimal(suite.margin_factor)}}},
          {"members", members},
          {"check_margins", checks},
          {"constants_by_resolution", cons},
          {"falsifications", falsifications},
          {"unresolved_falsifications",
           std::count_if(falsifications.begin(), falsifications.end(),
                         [](const json& f) { return !f.at("attributed_to_resolution").get<bool>(); })}};
}

std::string summary_csv(const json& summary) {
  std::string out = "check_id,count,passing,min_margin,median_margin,max_margin\n";
  for (const auto& [id, s] : summary.at("check_margins").items())
    out += id + "," + std::to_string(s.at("count").get<long>()) + "," + std::to_string(s.at("passing").get<long>()) + "," +
           s.at("min").get<std::string>() + "," + s.at("median").get<std::string>() + "," + s.at("max").get<std::string>() + "\n";
  return out;
}

}  // namespace

SuiteOutcome run_suite(const Suite& suite, const fs::path& out_dir, int workers) {
  const fs::path dir = out_dir / suite.name;
  fs::create_directories(dir);
  SuiteOutcome o;
  o.calibration.margin_factor = suite.margin_factor;

  const auto cal_it = std::find_if(suite.members.begin(), suite.members.end(),
                                   [&](const Scenario& s) { return s.name == suite.calibration; });
  MemberOutcome cal = run_member(*cal_it, dir, nullptr);
  if (cal.report) o.calibration.constants = cal.report->constants;
  o.members.push_back(std::move(cal));

  std::vector<const Scenario*> rest;
  for (const auto& s : suite.members)
    if (s.name != suite.calibration) rest.push_back(&s);
  std::vector<MemberOutcome> results(rest.size());
  const audit::Calibration* calp = o.calibration.constants.empty() ? nullptr : &o.calibration;

  auto pool = [&](std::vector<MemberOutcome>& dst, const std::vector<Scenario>& jobs) {
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i; (i = next++) < jobs.size();) dst[i] = run_member(jobs[i], dir, calp);
    };
    const int w = std::max(1, std::min<int>(workers, int(jobs.size())));
    std::vector<std::thread> threads;
    for (int t = 1; t < w; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
  };

  std::vector<Scenario> jobs;
  for (const auto* s : rest) jobs.push_back(*s);
  pool(results, jobs);

  // falsified members are rerun at the refinement resolution
  if (suite.refine_n) {
    std::vector<Scenario> refine;
    std::vector<std::size_t> where;
    for (std::size_t i = 0; i < results.size(); ++i)
      if (results[i].report && results[i].report->falsified) {
        Scenario s = jobs[i];
        s.n = *suite.refine_n;
        s.name += "_refined_n" + std::to_string(s.n);
        refine.push_back(s);
        where.push_back(i);
      }
    std::vector<MemberOutcome> refined(refine.size());
    pool(refined, refine);
    for (std::size_t k = 0; k < refine.size(); ++k)
      if (refined[k].report) results[where[k]].refined = std::move(refined[k].report);
  }

  for (auto& r : results) o.members.push_back(std::move(r));
  for (const auto& m : o.members)
    if (m.exit_code != kOk && o.exit_code == kOk) o.exit_code = m.exit_code;
  o.summary = build_summary(suite, o);
  write_json(dir / "summary.json", o.summary);
  write_file(dir / "summary.csv", summary_csv(o.summary));
  return o;
}

CommandResult cmd_suite(const fs::path& suite_file, const fs::path& out_dir, int workers) {
  const Suite suite = load_suite(suite_file);
  SuiteOutcome o = run_suite(suite, out_dir, workers);
  CommandResult res;
  res.exit_code = o.exit_code;
  res.artifact = out_dir / suite.name / "summary.json";
  res.message = suite.name + ": " + std::to_string(o.members.size()) + " members, " +
                std::to_string(o.summary.at("falsifications").size()) + " falsification(s), " +
                std::to_string(o.summary.at("unresolved_falsifications").get<long>()) + " unresolved";
  return res;
}

}  // namespace nsbl::harness
