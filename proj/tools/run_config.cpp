#include "run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numbers>
#include <sstream>

#include "lelab/errors.hpp"

namespace lelab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorKind::ConfigError, msg); }

[[noreturn]] void field_error(const std::string& key, const Entry& e, const std::string& msg) {
  config_error("field '" + key + "' (" + e.origin + "): " + msg);
}

double to_double(const std::string& key, const Entry& e, const std::string& text) {
  double v = 0.0;
  const std::string t = trim(text);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    field_error(key, e, "'" + t + "' is not a number");
  return v;
}

long to_integer(const std::string& key, const Entry& e) {
  long v = 0;
  const std::string t = trim(e.value);
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    field_error(key, e, "'" + t + "' is not an integer");
  return v;
}

std::vector<double> to_list(const std::string& key, const Entry& e) {
  std::vector<double> out;
  std::stringstream ss(e.value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(key, e, item));
  if (out.empty()) field_error(key, e, "empty list");
  return out;
}

bool to_bool(const std::string& key, const Entry& e) {
  const std::string t = trim(e.value);
  if (t == "true" || t == "1") return true;
  if (t == "false" || t == "0") return false;
  field_error(key, e, "expected true or false");
}

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = {
      "domain", "p",         "base_h", "robin_h", "max_vertices", "newton_tol",    "newton_max_iterations",
      "eigen_count", "delta", "eigen_tol", "seed", "energy_bound", "target", "include_field", "output"};
  return keys;
}

KeyValues parse_config(std::istream& in, const std::string& source) {
  KeyValues out;
  std::string raw;
  for (int line = 1; std::getline(in, raw); ++line) {
    const std::string text = trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    const std::string where = "line " + std::to_string(line) + " of " + source;
    const auto eq = text.find('=');
    if (eq == std::string::npos) config_error(where + ": expected 'key = value'");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    const auto& keys = known_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) config_error(where + ": unknown key '" + key + "'");
    if (value.empty()) config_error(where + ": empty value for '" + key + "'");
    if (out.count(key)) config_error(where + ": '" + key + "' repeated (first at " + out[key].origin + ")");
    out[key] = {value, where};
  }
  return out;
}

KeyValues parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_error("cannot read config file '" + path.string() + "'");
  return parse_config(in, path.filename().string());
}

DomainSpec parse_domain(const std::string& text) {
  const std::string t = trim(text);
  if (t == "disk") return DomainSpec::unit_disk();
  if (t == "square") return DomainSpec::rectangle(1, 1);
  const auto colon = t.find(':');
  const std::string kind = t.substr(0, colon);
  if ((kind == "rectangle" || kind == "ellipse") && colon != std::string::npos) {
    const Entry e{t.substr(colon + 1), "domain"};
    const std::vector<double> dims = to_list("domain", e);
    if (dims.size() != 2 || dims[0] <= 0 || dims[1] <= 0)
      config_error(kind + " needs two positive sizes, e.g. " + kind + ":2,1");
    return kind == "rectangle" ? DomainSpec::rectangle(dims[0], dims[1]) : DomainSpec::ellipse(dims[0], dims[1]);
  }
  config_error("unknown domain '" + t + "' (disk, square, rectangle:W,H, ellipse:A,B)");
}

RunConfig build_config(const KeyValues& values) {
  RunConfig c;
  c.energy_bound = 3.0 * 8.0 * std::numbers::pi * std::numbers::e;
  auto get = [&](const char* key) -> const Entry* {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  auto positive = [&](const char* key, double& slot) {
    if (const Entry* e = get(key)) {
      slot = to_double(key, *e, e->value);
      if (!(slot > 0.0)) field_error(key, *e, "must be positive");
    }
  };

  if (const Entry* e = get("domain")) {
    try {
      c.domain = parse_domain(e->value);
    } catch (const LabError& err) {
      if (err.kind() != ErrorKind::ConfigError) throw;
      field_error("domain", *e, std::string(err.what()).substr(std::string("ConfigError: ").size()));
    }
    c.domain_text = trim(e->value);
  }
  if (const Entry* e = get("p")) {
    c.p = to_list("p", *e);
    for (double v : c.p)
      if (!(v > 1.0)) field_error("p", *e, "p must exceed 1");
    for (std::size_t i = 1; i < c.p.size(); ++i)
      if (!(c.p[i] > c.p[i - 1])) field_error("p", *e, "p schedule must be increasing");
  }
  positive("base_h", c.base_h);
  if (get("robin_h")) {
    double h = 0.0;
    positive("robin_h", h);
    c.robin_h = h;
  }
  if (const Entry* e = get("max_vertices")) {
    const long v = to_integer("max_vertices", *e);
    if (v < 3) field_error("max_vertices", *e, "must be at least 3");
    c.max_vertices = std::size_t(v);
  }
  positive("newton_tol", c.newton_tol);
  if (const Entry* e = get("newton_max_iterations")) {
    c.newton_max_iterations = int(to_integer("newton_max_iterations", *e));
    if (c.newton_max_iterations < 1) field_error("newton_max_iterations", *e, "must be at least 1");
  }
  if (const Entry* e = get("eigen_count")) {
    c.eigen_count = int(to_integer("eigen_count", *e));
    if (c.eigen_count < 1 || c.eigen_count > 50) field_error("eigen_count", *e, "must lie in [1, 50]");
  }
  if (get("delta")) {
    double d = 0.0;
    positive("delta", d);
    c.delta = d;
  }
  positive("eigen_tol", c.eigen_tol);
  if (const Entry* e = get("seed")) {
    const long v = to_integer("seed", *e);
    if (v < 0) field_error("seed", *e, "must be nonnegative");
    c.seed = unsigned(v);
  }
  positive("energy_bound", c.energy_bound);
  if (const Entry* e = get("target")) c.target = trim(e->value);
  if (const Entry* e = get("include_field")) c.include_field = to_bool("include_field", *e);
  if (const Entry* e = get("output")) c.output = trim(e->value);
  return c;
}

std::filesystem::path resolve_output(const RunConfig& cfg, const char* env_root) {
  namespace fs = std::filesystem;
  fs::path dir = cfg.output;
  if (dir.is_relative()) dir = fs::path(env_root && *env_root ? env_root : ".") / dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path probe = dir / ".write_probe";
  if (ec || !std::ofstream(probe)) config_error("field 'output': directory '" + dir.string() + "' is not writable");
  fs::remove(probe, ec);
  return dir;
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j{{"domain", c.domain_text},
                   {"p", c.p},
                   {"base_h", c.base_h},
                   {"max_vertices", c.max_vertices},
                   {"newton_tol", c.newton_tol},
                   {"newton_max_iterations", c.newton_max_iterations},
                   {"eigen_count", c.eigen_count},
                   {"eigen_tol", c.eigen_tol},
                   {"seed", c.seed},
                   {"energy_bound", c.energy_bound},
                   {"target", c.target},
                   {"include_field", c.include_field}};
  if (c.robin_h) j["robin_h"] = *c.robin_h;
  if (c.delta) j["delta"] = *c.delta;
  return j;
}

}  // namespace lelab::cli
