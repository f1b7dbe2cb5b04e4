#pragma once

// Run configuration for lab_cli: `key = value` files, flag overrides and
// validation. Every error is a ConfigError naming the line or field.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lelab/geometry.hpp"

namespace lelab::cli {

struct Entry {
  std::string value;
  std::string origin;  ///< "line 4 of run.cfg" or "flag --p"
};

using KeyValues = std::map<std::string, Entry>;

/// Keys accepted in files and as flags.
const std::vector<std::string>& known_keys();

/// Parses `key = value` lines; '#' starts a comment. Rejects unknown and repeated keys.
KeyValues parse_config(std::istream& in, const std::string& source);
KeyValues parse_config_file(const std::filesystem::path& path);

struct RunConfig {
  DomainSpec domain = DomainSpec::unit_disk();
  std::string domain_text = "disk";
  std::vector<double> p;
  double base_h = 0.05;
  std::optional<double> robin_h;
  std::size_t max_vertices = 400000;
  double newton_tol = 1e-10;
  int newton_max_iterations = 60;
  int eigen_count = 6;
  std::optional<double> delta;
  double eigen_tol = 1e-10;
  unsigned seed = 0;
  double energy_bound = 0.0;  ///< bound on p int |grad u|^2, default 3 * 8 pi e
  std::string target = "all";
  bool include_field = false;
  std::string output = "lelab_out";
};

/// Parses "disk", "square", "rectangle:W,H", "ellipse:A,B".
DomainSpec parse_domain(const std::string& text);

/// Defaults overlaid with `values`, then validated.
RunConfig build_config(const KeyValues& values);

/// Output directory under $LELAB_OUTPUT_ROOT (default: working directory),
/// created if needed and probed for writability.
std::filesystem::path resolve_output(const RunConfig& cfg, const char* env_root);

nlohmann::json to_json(const RunConfig& cfg);

}  // namespace lelab::cli
