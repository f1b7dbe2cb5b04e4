// lab_cli: solve, sweep, spectrum, robin and verify for the Lane-Emden lab.
//
// Exit status: 0 when every check passes, 1 when a check fails, 2 on a
// configuration or solver error. Payload files are deterministic for a given
// configuration; timestamps go to metadata.json only.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "lelab/asymptotics.hpp"
#include "lelab/checks.hpp"
#include "lelab/errors.hpp"
#include "run_config.hpp"

namespace fs = std::filesystem;
using namespace lelab;
using namespace lelab::cli;
using nlohmann::json;

namespace {

constexpr const char* kSchemaVersion = "1";
constexpr const char* kOutputRootVar = "LELAB_OUTPUT_ROOT";

struct Context {
  RunConfig cfg;
  fs::path out;
};

void write_json(const fs::path& path, const json& j) { std::ofstream(path) << j.dump(2) << '\n'; }

json payload(const Context& ctx, const char* command) {
  return {{"schema_version", kSchemaVersion}, {"command", command}, {"config", to_json(ctx.cfg)}};
}

std::vector<double> p_or(const RunConfig& c, std::vector<double> fallback) { return c.p.empty() ? fallback : c.p; }

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorKind::ConfigError, msg); }

ContinuationOptions continuation_options(const RunConfig& c) {
  ContinuationOptions o;
  o.newton.tol = c.newton_tol;
  o.newton.max_iterations = c.newton_max_iterations;
  o.mesh.max_vertices = c.max_vertices;
  return o;
}

SpectrumOptions spectrum_options(const RunConfig& c) {
  SpectrumOptions o;
  o.count = std::max(c.eigen_count, 4);
  o.delta = c.delta;
  o.tol = c.eigen_tol;
  return o;
}

double robin_h(const RunConfig& c) { return c.robin_h.value_or(checks::robin_h(c.domain)); }

// Branch through the requested exponents, starting the continuation at 5 when needed.
Branch run_branch(const RunConfig& c, const std::vector<double>& p) {
  std::vector<double> schedule = p;
  if (schedule.front() > 5.0) schedule.insert(schedule.begin(), 5.0);
  Branch b = continuation_sweep(c.domain, schedule, c.base_h, continuation_options(c));
  std::erase_if(b.solutions, [&](const Solution& s) { return std::find(p.begin(), p.end(), s.p) == p.end(); });
  return b;
}

double single_p(const RunConfig& c) {
  if (c.p.size() != 1) config_error("field 'p': this command takes exactly one exponent");
  return c.p.front();
}

int cmd_solve(const Context& ctx) {
  const Branch b = run_branch(ctx.cfg, {single_p(ctx.cfg)});
  json j = payload(ctx, "solve");
  j["solution"] = to_json(b.solutions.front(), ctx.cfg.include_field);
  write_json(ctx.out / "solution.json", j);
  std::cout << "solved p = " << b.solutions.front().p << ", u_max = " << b.solutions.front().u_max << '\n';
  return 0;
}

int cmd_sweep(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  if (c.p.empty()) config_error("field 'p': a schedule is required");
  const Branch b = run_branch(c, c.p);
  const RobinData robin = robin_critical_point(c.domain, robin_h(c));
  json j = payload(ctx, "sweep");
  std::vector<PredictionReport> rows;
  std::vector<std::vector<double>> eig;
  checks::CheckReport rep;
  rep.target = "sweep";
  for (const Solution& s : b.solutions) {
    const SpectrumReport sp = linearized_spectrum(s, spectrum_options(c));
    PredictionReport pr = predict(s, robin);
    attach_spectrum(pr, sp);
    rows.push_back(pr);
    eig.push_back(sp.eigenvalues);
    j["solutions"].push_back(to_json(s, false));
    j["predictions"].push_back(to_json(pr));
    j["spectra"].push_back(to_json(sp));
    rep.add(checks::make_check("sweep." + c.domain.name() + ".p" + std::to_string(int(s.p)) + ".energy_bound",
                               "p int |grad u_p|^2 <= C", s.energy, c.energy_bound, 0.0, checks::Compare::Le));
  }
  j["robin"] = to_json(robin);
  j["checks"] = checks::to_json(rep);
  write_json(ctx.out / "sweep.json", j);
  std::ofstream csv(ctx.out / "sweep.csv");
  write_sweep_csv(csv, rows, eig);
  std::cout << "sweep over " << rows.size() << " exponents: " << (rep.pass() ? "PASS" : "FAIL") << '\n';
  return rep.pass() ? 0 : 1;
}

int cmd_spectrum(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  const Branch b = run_branch(c, {single_p(c)});
  const Solution& s = b.solutions.front();
  const SpectrumReport sp = linearized_spectrum(s, spectrum_options(c));
  const RobinData robin = robin_critical_point(c.domain, robin_h(c));
  PredictionReport pr = predict(s, robin);
  attach_spectrum(pr, sp);
  json j = payload(ctx, "spectrum");
  j["spectrum"] = to_json(sp);
  j["prediction"] = to_json(pr);
  j["sandwich"] = to_json(morse_sandwich_check(sp, robin));
  write_json(ctx.out / "spectrum.json", j);
  std::cout << "p = " << s.p << ": morse index " << sp.morse << ", augmented " << sp.augmented << '\n';
  return 0;
}

int cmd_robin(const Context& ctx) {
  RobinOptions o;
  o.random_seed = ctx.cfg.seed;
  o.sample_grid = 21;
  o.mesh.max_vertices = ctx.cfg.max_vertices;
  const RobinData d = robin_critical_point(ctx.cfg.domain, robin_h(ctx.cfg), o);
  json j = payload(ctx, "robin");
  j["robin"] = to_json(d);
  write_json(ctx.out / "robin.json", j);
  std::ofstream csv(ctx.out / "robin.csv");
  write_robin_csv(csv, d);
  std::cout << "x_inf = (" << d.x_inf.x << ", " << d.x_inf.y << "), mu = " << d.mu1 << ", " << d.mu2 << '\n';
  return 0;
}

struct Target {
  std::vector<double> default_p;
  bool disk_only;
  std::function<checks::CheckReport(checks::Workspace&, const RunConfig&, const std::vector<double>&)> run;
};

const std::map<std::string, Target>& targets() {
  using namespace checks;
  static const std::map<std::string, Target> t = {
      {"lambda1", {{20, 40, 80}, false, [](Workspace& ws, const RunConfig& c, const std::vector<double>& p) {
                     return lambda1(ws, {c.domain}, p);
                   }}},
      {"energy", {{20, 40, 80, 160}, true, [](Workspace&, const RunConfig&, const std::vector<double>& p) {
                    return energy(p);
                  }}},
      {"sup_norm", {{20, 40, 80, 160}, true, [](Workspace&, const RunConfig&, const std::vector<double>& p) {
                      return sup_norm(p);
                    }}},
      {"lambda4", {{20, 40, 80, 160}, true, [](Workspace&, const RunConfig&, const std::vector<double>& p) {
                     return lambda4(p);
                   }}},
      {"lambda23", {{20, 40, 80, 160}, true, [](Workspace& ws, const RunConfig&, const std::vector<double>& p) {
                      std::vector<double> fem;
                      for (double q : p)
                        if (q <= 80) fem.push_back(q);
                      return lambda23(ws, p, fem);
                    }}},
      {"morse", {{80}, false, [](Workspace& ws, const RunConfig& c, const std::vector<double>& p) {
                   return morse(ws, {c.domain}, p);
                 }}},
      {"robin", {{}, true, [](Workspace&, const RunConfig&, const std::vector<double>&) {
                   return robin_oracle(0.015, 0.0075);
                 }}},
      {"identities", {{}, true, [](Workspace&, const RunConfig& c, const std::vector<double>&) {
                        return boundary_identities(c.robin_h.value_or(0.02));
                      }}},
      {"far_field", {{20, 40, 80}, true, [](Workspace& ws, const RunConfig&, const std::vector<double>& p) {
                       return far_field(ws, p);
                     }}},
      {"eigen_structure", {{80}, true, [](Workspace& ws, const RunConfig&, const std::vector<double>& p) {
                             return eigen_structure(ws, p);
                           }}},
      {"liouville", {{20, 40, 80}, true, [](Workspace& ws, const RunConfig&, const std::vector<double>& p) {
                       return liouville(ws, p);
                     }}},
      {"pohozaev", {{40}, true, [](Workspace& ws, const RunConfig&, const std::vector<double>& p) {
                      return pohozaev(ws, p);
                    }}},
      {"oracle", {{20, 40}, true, [](Workspace& ws, const RunConfig&, const std::vector<double>& p) {
                    return oracle_equivalence(ws, p);
                  }}},
  };
  return t;
}

int cmd_verify(const Context& ctx) {
  const RunConfig& c = ctx.cfg;
  std::vector<std::string> names;
  if (c.target == "all") {
    for (const auto& [name, t] : targets())
      if (!t.disk_only || c.domain.kind() == DomainKind::UnitDisk) names.push_back(name);
  } else {
    if (!targets().count(c.target)) {
      std::string known;
      for (const auto& [name, t] : targets()) known += " " + name;
      config_error("field 'target': unknown target '" + c.target + "' (all" + known + ")");
    }
    if (targets().at(c.target).disk_only && c.domain.kind() != DomainKind::UnitDisk)
      config_error("field 'domain': target '" + c.target + "' is defined on the unit disk only");
    names.push_back(c.target);
  }
  // FEM exponents shared by every selected target
  std::set<double> fem;
  for (const auto& n : names)
    for (double q : p_or(c, targets().at(n).default_p))
      if (q > 5.0 && q <= 80.0) fem.insert(q);
  checks::Workspace ws(fem.empty() ? std::vector<double>{20} : std::vector<double>(fem.begin(), fem.end()), c.base_h);

  json j = payload(ctx, "verify");
  bool all_pass = true;
  std::string error;
  for (const auto& n : names) {
    const checks::CheckReport rep = targets().at(n).run(ws, c, p_or(c, targets().at(n).default_p));
    all_pass = all_pass && rep.pass();
    if (!rep.error.empty() && error.empty()) error = rep.error;
    j["reports"].push_back(checks::to_json(rep));
    std::cout << n << ": " << (rep.pass() ? "PASS" : "FAIL") << (rep.error.empty() ? "" : "  (" + rep.error + ")")
              << '\n';
    for (const auto& r : rep.records)
      if (!r.pass) std::cout << "  fail " << r.claim << ": computed " << r.computed << ", expected " << r.expected << '\n';
  }
  j["pass"] = all_pass;
  write_json(ctx.out / "checks.json", j);
  if (!error.empty()) {
    std::cerr << "error: " << error << '\n';
    return 2;
  }
  return all_pass ? 0 : 1;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lane-Emden numerical lab"};
  app.require_subcommand(1);
  std::string config_path;
  std::map<std::string, std::string> flags;
  const std::map<std::string, std::function<int(const Context&)>> commands = {
      {"solve", cmd_solve}, {"sweep", cmd_sweep}, {"spectrum", cmd_spectrum}, {"robin", cmd_robin},
      {"verify", cmd_verify}};
  const std::map<std::string, std::string> help = {
      {"solve", "solve at one exponent"},
      {"sweep", "continuation sweep with spectra and predictions"},
      {"spectrum", "linearized spectrum and Morse index at one exponent"},
      {"robin", "Robin function critical point and sample grid"},
      {"verify", "run numerical checks (--target)"}};
  for (const auto& [name, fn] : commands) {
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", config_path, "key = value configuration file");
    for (const std::string& key : known_keys())
      sub->add_option("--" + key, flags[key], "overrides '" + key + "' from the config file");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  const auto started = std::chrono::system_clock::now();
  const std::string started_utc = utc_now();
  try {
    KeyValues values = config_path.empty() ? KeyValues{} : parse_config_file(config_path);
    for (const std::string& key : known_keys())
      if (sub->count("--" + key)) values[key] = {flags[key], "flag --" + key};
    Context ctx;
    ctx.cfg = build_config(values);
    ctx.out = resolve_output(ctx.cfg, std::getenv(kOutputRootVar));
    const int status = commands.at(command)(ctx);
    json meta{{"command", command},
              {"argv", std::vector<std::string>(argv, argv + argc)},
              {"started", started_utc},
              {"finished", utc_now()},
              {"wall_seconds",
               std::chrono::duration<double>(std::chrono::system_clock::now() - started).count()},
              {"exit_status", status},
              {"schema_version", kSchemaVersion}};
    write_json(ctx.out / "metadata.json", meta);
    return status;
  } catch (const LabError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
