#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rlab/errors.hpp"
#include "rlab/estimate.hpp"
#include "rlab/fixtures.hpp"
#include "rlab/measure.hpp"
#include "rlab/parallel.hpp"
#include "rlab/sphere_net.hpp"
#include "rlab/spectral.hpp"
#include "rlab/suites.hpp"

using namespace rlab;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

struct Global {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  int jobs = 0;
  std::string fixtures;
};

std::optional<std::string> fixture_path(const Global& g) {
  if (g.fixtures.empty()) return std::nullopt;
  return g.fixtures;
}

std::string timestamp() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

// Accepts plain numbers and fractions such as 1/16.
double parse_number(const std::string& s) {
  const auto slash = s.find('/');
  try {
    std::size_t used = 0;
    if (slash == std::string::npos) {
      const double v = std::stod(s, &used);
      if (used != s.size()) throw UsageError("bad number: " + s);
      return v;
    }
    const double a = std::stod(s.substr(0, slash));
    const double b = std::stod(s.substr(slash + 1));
    return a / b;
  } catch (const std::logic_error&) {
    throw UsageError("bad number: " + s);
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("malformed JSON in " + path + ": " + e.what());
  }
}

void emit(const Global& g, const std::string& text, bool append = false) {
  if (g.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(g.out, append ? std::ios::app : std::ios::trunc);
  if (!f) throw UsageError("cannot write " + g.out);
  f << text;
}

std::string flat_csv(const json& j) {
  std::ostringstream out;
  out << "key,value\n";
  for (const auto& [k, v] : j.flatten().items()) out << k << ',' << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
  return out.str();
}

json envelope(const Global& g, const std::string& command, const json& config, const std::string& fixture_hash,
              bool pass, const json& result) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["command"] = command;
  j["config"] = config;
  j["environment"] = {{"version", kVersion}, {"seed", g.seed}, {"fixture_hash", fixture_hash}};
  j["timestamp"] = timestamp();
  j["pass"] = pass;
  j["result"] = result;
  return j;
}

json suite_json(const SuiteResult& s) {
  return {{"suite", s.name}, {"pass", s.pass}, {"failures", s.failures}, {"report", s.report}};
}

void write_report(const Global& g, const json& report) {
  if (g.format == "csv") emit(g, flat_csv(report));
  else emit(g, report.dump(2) + "\n");
}

EstimateCase case_from_options(const std::string& theorem, const std::string& case_file,
                               const std::vector<std::string>& sets) {
  json j = case_file.empty() ? json::object() : read_json_file(case_file);
  if (!theorem.empty()) j["theorem"] = theorem;
  std::vector<std::pair<std::string, double>> numeric;
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got " + kv);
    const std::string k = kv.substr(0, eq), v = kv.substr(eq + 1);
    if (k == "signs" || k == "extremizer" || k == "theorem") {
      j[k] = v;
    } else if (k == "omega" || k == "center") {
      std::vector<double> xs;
      std::stringstream ss(v);
      for (std::string p; std::getline(ss, p, ',');) xs.push_back(parse_number(p));
      j[k] = xs;
    } else if (k == "seed") {
      j[k] = static_cast<std::uint64_t>(parse_number(v));
    } else {
      numeric.emplace_back(k, parse_number(v));
    }
  }
  if (!j.contains("theorem")) throw UsageError("a theorem id is required (--theorem or the case file)");
  EstimateCase c = EstimateCase::from_json(j);
  for (const auto& [k, v] : numeric) set_param(c, k, v);
  validate(c);
  return c;
}

int run_verify_net(const Global& g, const std::vector<std::string>& gamma_text, long long directions, bool lemmas) {
  NetSuiteConfig cfg;
  for (const auto& s : gamma_text) {
    const double v = parse_number(s);
    if (!(v > 0.0 && v <= M_PI)) throw UsageError("gamma " + s + " outside (0, pi]");
    cfg.gammas.push_back(v);
  }
  if (directions < 1) throw UsageError("--directions must be positive");
  cfg.directions = directions;
  cfg.seed = g.seed;
  cfg.lemmas = lemmas;
  std::optional<Fixtures> fx;
  if (lemmas) fx = Fixtures::load(fixture_path(g));
  const SuiteResult r = net_suite(cfg, fx ? &*fx : nullptr);
  json config = {{"gammas", cfg.gammas}, {"directions", directions}, {"lemmas", lemmas}};
  write_report(g, envelope(g, "verify-net", config, fx ? fx->hash() : "", r.pass, suite_json(r)));
  return r.pass ? 0 : 1;
}

int run_verify_measure(const Global& g, const std::string& suite, int draws) {
  const Fixtures fx = Fixtures::load(fixture_path(g));
  SuiteResult r;
  if (suite == "spheres") {
    r = sphere_sphere_suite(g.seed, &fx);
    const SuiteResult s = slab_sphere_suite(draws, g.seed);
    for (const auto& f : s.failures) r.require(false, f);
    r.report["slab_sphere"] = s.report;
    r.csv.insert(r.csv.begin(), s.csv.begin(), s.csv.end());
  } else if (suite == "cones") {
    r = cone_cone_suite(g.seed, &fx);
  } else if (suite == "quadric") {
    r = quadric_suite(g.seed, &fx);
  } else {
    throw UsageError("unknown measure suite " + suite + " (spheres, cones, quadric)");
  }
  if (g.format == "csv") {
    const bool append = !g.out.empty() && std::filesystem::exists(g.out);
    std::string text = append ? "" : measure_csv_header() + "\n";
    for (const auto& row : r.csv) text += row + "\n";
    emit(g, text, append);
  } else {
    json config = {{"suite", suite}, {"draws", draws}};
    write_report(g, envelope(g, "verify-measure", config, fx.hash(), r.pass, suite_json(r)));
  }
  return r.pass ? 0 : 1;
}

json evaluation_json(const Evaluation& e) {
  return {{"lhs", e.lhs}, {"constant", e.constant}, {"rhs", e.rhs}, {"plain", e.plain}, {"ratio", e.ratio}};
}

int run_estimate(const Global& g, const std::string& theorem, const std::string& case_file,
                 const std::vector<std::string>& sets, int trials, const std::string& u1_path,
                 const std::string& u2_path) {
  if (trials < 1) throw UsageError("--trials must be positive");
  const Fixtures fx = Fixtures::load(fixture_path(g));
  const bool single = !case_file.empty() || !sets.empty() || !u1_path.empty() || !u2_path.empty();
  if (!single) {
    if (theorem.empty()) throw UsageError("--theorem is required");
    const Theorem t = theorem_from_name(theorem);
    if (!fx.has("estimate.K." + theorem)) throw UsageError("fixture estimate.K." + theorem + " missing");
    const SuiteResult r = battery_suite(t, trials, g.seed, &fx);
    json config = {{"theorem", theorem}, {"trials", trials}, {"cell", "canonical"}};
    write_report(g, envelope(g, "run-estimate", config, fx.hash(), r.pass, suite_json(r)));
    return r.pass ? 0 : 1;
  }
  EstimateCase c = case_from_options(theorem, case_file, sets);
  if (!sets.empty() || case_file.empty()) c.seed = g.seed;
  const std::string key = "estimate.K." + theorem_name(c.theorem);
  if (!fx.has(key)) throw UsageError("fixture " + key + " missing");
  const double K = fx.get(key);
  json records = json::array();
  long long violations = 0;
  double max_ratio = 0.0;
  if (!u1_path.empty() || !u2_path.empty()) {
    if (u1_path.empty() || u2_path.empty()) throw UsageError("--u1 and --u2 must be given together");
    const SparseField u1 = field_from_json(read_json_file(u1_path));
    const SparseField u2 = field_from_json(read_json_file(u2_path));
    const Evaluation e = evaluate(c, u1, u2);
    records.push_back(evaluation_json(e));
    max_ratio = e.ratio;
    if (e.ratio > K) ++violations;
  } else {
    for (int t = 0; t < trials; ++t) {
      const auto f = case_fields(c, t);
      const Evaluation e = evaluate(c, f.first, f.second);
      json rec = evaluation_json(e);
      rec["trial"] = t;
      records.push_back(rec);
      max_ratio = std::max(max_ratio, e.ratio);
      if (e.ratio > K) ++violations;
    }
  }
  const bool pass = violations == 0;
  json result = {{"case", resolved(c).to_json()},
                 {"theoretical_constant", theoretical_constant(c)},
                 {"calibrated_constant", K},
                 {"trials", records},
                 {"max_ratio", max_ratio},
                 {"violations", violations},
                 {"verdict", pass ? "pass" : "fail"}};
  json config = {{"case", c.to_json()}, {"trials", trials}, {"u1", u1_path}, {"u2", u2_path}};
  write_report(g, envelope(g, "run-estimate", config, fx.hash(), pass, result));
  return pass ? 0 : 1;
}

int run_sweep(const Global& g, const std::string& template_file, const std::string& vary,
              const std::vector<std::string>& grid_text, int trials, std::optional<double> expect, double tol,
              const std::vector<std::string>& points) {
  if (!points.empty()) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& p : points) {
      const auto colon = p.find(':');
      if (colon == std::string::npos) throw UsageError("--points expects x:y, got " + p);
      pts.emplace_back(parse_number(p.substr(0, colon)), parse_number(p.substr(colon + 1)));
    }
    if (pts.size() < 2) throw UsageError("--points needs at least two points");
    Fit f;
    try {
      f = fit_exponent(pts);
    } catch (const DomainError& e) {
      throw UsageError(e.what());
    }
    const bool pass = !expect || std::abs(f.slope - *expect) <= tol;
    json result = {{"exponent", f.slope}, {"exponent_stderr", f.stderr_}};
    json config = {{"points", points}};
    if (expect) config["expect"] = *expect, config["tolerance"] = tol;
    write_report(g, envelope(g, "sweep", config, "", pass, result));
    return pass ? 0 : 1;
  }
  if (template_file.empty()) throw UsageError("--template is required");
  if (vary.empty()) throw UsageError("--vary is required");
  EstimateCase base = EstimateCase::from_json(read_json_file(template_file));
  std::vector<double> grid;
  for (const auto& s : grid_text) grid.push_back(parse_number(s));
  if (trials < 0) throw UsageError("--trials must be non-negative");
  const SweepReport rep = dyadic_sweep(base, vary, grid, trials, g.seed);
  const bool pass = !expect || std::abs(rep.fit.slope - *expect) <= tol;
  if (g.format == "csv") {
    emit(g, rep.to_csv());
  } else {
    json config = {{"template", base.to_json()}, {"vary", vary}, {"grid", grid}, {"trials", trials}};
    if (expect) config["expect"] = *expect, config["tolerance"] = tol;
    json result = rep.to_json();
    result["within_tolerance"] = pass;
    write_report(g, envelope(g, "sweep", config, "", pass, result));
  }
  return pass ? 0 : 1;
}

int run_extremizer(const Global& g, const std::string& kind_text, double N, std::optional<double> h, double h_tau,
                   const std::string& fields_out) {
  const ExtremizerKind kind = extremizer_from_name(kind_text);
  const double step = h.value_or(std::sqrt(N) / 4.0);
  const Extremizer x = make_extremizer(kind, N, step, h_tau);
  const Evaluation e = evaluate(x.ecase, x.u1, x.u2);
  if (!fields_out.empty()) {
    for (int j = 1; j <= 2; ++j) {
      std::ofstream f(fields_out + "_u" + std::to_string(j) + ".rlsf", std::ios::binary);
      if (!f) throw UsageError("cannot write fields with prefix " + fields_out);
      write_binary(j == 1 ? x.u1 : x.u2, f);
    }
  }
  json result = {{"case", x.ecase.to_json()},
                 {"u1_entries", x.u1.size()},
                 {"u2_entries", x.u2.size()},
                 {"evaluation", evaluation_json(e)}};
  json config = {{"kind", kind_text}, {"N", N}, {"h", step}, {"h_tau", h_tau}};
  write_report(g, envelope(g, "extremizer", config, "", true, result));
  return 0;
}

int run_calibrate(const Global& g, int trials, int minor, int net_seeds, long long weight_samples,
                  const std::string& net_cache) {
  CalibrationConfig cfg;
  cfg.seed = g.seed;
  cfg.trials = trials;
  cfg.minor_trials = minor;
  cfg.net_seeds = net_seeds;
  cfg.weight_samples = weight_samples;
  if (trials < 1 || minor < 1 || net_seeds < 1 || weight_samples < 1) throw UsageError("calibration sizes must be positive");
  const Fixtures fx = calibrate(cfg, net_cache.empty() ? std::nullopt : std::optional<std::string>(net_cache));
  const std::string path = g.out.empty() ? Fixtures::resolve_path(fixture_path(g)) : g.out;
  fx.save(path);
  std::cerr << "fixtures written to " << path << " (hash " << fx.hash() << ")\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of bilinear restriction estimates"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--out", g.out, "Output file (stdout when omitted)");
  app.add_option("--format", g.format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();
  app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--fixtures", g.fixtures, "Fixture file (overrides RESTRICTION_LAB_FIXTURES)");

  auto* net = app.add_subcommand("verify-net", "Sphere-net covering, counting and decomposition checks");
  std::vector<std::string> gammas;
  long long directions = 100000;
  bool no_lemmas = false;
  net->add_option("--gamma", gammas, "Net angles (numbers or fractions)");
  net->add_option("--directions", directions, "Random test directions per net")->capture_default_str();
  net->add_flag("--no-lemmas", no_lemmas, "Skip pair decomposition and hyperplane checks");

  auto* meas = app.add_subcommand("verify-measure", "Volume and area bounds");
  std::string suite;
  int draws = 50;
  meas->add_option("--suite", suite, "spheres, cones or quadric")->required();
  meas->add_option("--draws", draws, "Random slab-sphere draws")->capture_default_str();

  auto* est = app.add_subcommand("run-estimate", "Empirical ratios for one theorem");
  std::string theorem, case_file, u1, u2;
  std::vector<std::string> sets;
  int trials = 100;
  est->add_option("--theorem", theorem, "Theorem id");
  est->add_option("--case", case_file, "Case JSON file");
  est->add_option("--set", sets, "Parameter override key=value");
  est->add_option("--trials", trials, "Gaussian trials")->capture_default_str();
  est->add_option("--u1", u1, "First factor as a JSON field");
  est->add_option("--u2", u2, "Second factor as a JSON field");

  auto* sw = app.add_subcommand("sweep", "Dyadic parameter sweep with exponent fit");
  std::string template_file, vary;
  std::vector<std::string> grid, points;
  int sweep_trials = 2;
  double expect = 0.0, tol = 0.15;
  sw->add_option("--template", template_file, "Case template JSON file");
  sw->add_option("--vary", vary, "Parameter to vary");
  sw->add_option("--grid", grid, "Dyadic grid values");
  sw->add_option("--trials", sweep_trials, "Gaussian trials per point")->capture_default_str();
  auto* expect_opt = sw->add_option("--expect", expect, "Expected exponent");
  sw->add_option("--tol", tol, "Exponent tolerance")->capture_default_str();
  sw->add_option("--points", points, "Fit these x:y points instead of running a sweep");

  auto* ex = app.add_subcommand("extremizer", "Build an extremizer and evaluate its ratio");
  std::string kind = "Z16", fields_out;
  double N = 256.0, h_tau = 0.5, h = 0.0;
  ex->add_option("--kind", kind, "Z16, Z16_shortened or null_ray")->capture_default_str();
  ex->add_option("--N", N, "Frequency scale")->capture_default_str();
  ex->set_help_flag("--help", "Print this help message and exit");
  auto* h_opt = ex->add_option("--h", h, "Spatial lattice step (default N^{1/2}/4)");
  ex->add_option("--h-tau", h_tau, "Time lattice step")->capture_default_str();
  ex->add_option("--fields-out", fields_out, "Write binary fields to <prefix>_u1.rlsf and <prefix>_u2.rlsf");

  auto* cal = app.add_subcommand("calibrate", "Measure fixture constants and write the fixture file");
  int cal_trials = 100, cal_minor = 10, cal_net_seeds = 50;
  long long cal_weights = 10000000;
  std::string net_cache;
  cal->add_option("--trials", cal_trials, "Trials for the criterion batteries")->capture_default_str();
  cal->add_option("--minor-trials", cal_minor, "Trials for the other theorems")->capture_default_str();
  cal->add_option("--net-seeds", cal_net_seeds, "Seeds for the net cardinality window")->capture_default_str();
  cal->add_option("--weight-samples", cal_weights, "Weight geometry samples")->capture_default_str();
  cal->add_option("--net-cache", net_cache, "Directory for cached nets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const auto start = std::chrono::steady_clock::now();
  int code = 0;
  try {
    set_jobs(g.jobs);
    if (*net) code = run_verify_net(g, gammas, directions, !no_lemmas);
    else if (*meas) code = run_verify_measure(g, suite, draws);
    else if (*est) code = run_estimate(g, theorem, case_file, sets, trials, u1, u2);
    else if (*sw)
      code = run_sweep(g, template_file, vary, grid, sweep_trials,
                       expect_opt->count() ? std::optional<double>(expect) : std::nullopt, tol, points);
    else if (*ex) code = run_extremizer(g, kind, N, h_opt->count() ? std::optional<double>(h) : std::nullopt, h_tau,
                                        fields_out);
    else if (*cal) code = run_calibrate(g, cal_trials, cal_minor, cal_net_seeds, cal_weights, net_cache);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ResourceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cerr << app.get_subcommands().front()->get_name() << ": " << (code == 0 ? "pass" : "fail") << " in " << secs
            << " s\n";
  return code;
}
