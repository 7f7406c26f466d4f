#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

#include "brachi/io.hpp"

namespace brachi::cli {

// Malformed or incomplete scenario: exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LaunchBlock {
  Tangent direction;
  double T = 0.0;
};

struct SolutionRef {
  std::filesystem::path solution;
};

struct JacobiBlock : SolutionRef {
  JacobiConfig cfg;
};

struct IndexBlock : SolutionRef {
  int n_basis = 60;
};

struct OracleBlock {
  MinimizeConfig minimize;
  double epsilon = 1e-2;
  std::optional<Vec> bump;  // amplitude of sin(pi t) added to the straight initial polyline
};

struct Scenario {
  std::filesystem::path base_dir;
  ModelSpec model;
  double k = 0.0;
  std::optional<Event> p, gamma_anchor;
  IntegratorConfig integrator;
  BvpConfig bvp;
  std::optional<LaunchBlock> solve, shoot;
  std::optional<SurveyConfig> survey;
  std::optional<JacobiBlock> jacobi;
  std::optional<IndexBlock> index;
  std::optional<SolutionRef> verify;
  std::optional<OracleBlock> oracle;
  std::optional<std::string> output;  // file stem, defaults to the command name
};

// Parses strictly: unknown keys, wrong types and missing required keys throw ConfigError.
Scenario parse_scenario(const Json& j, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace brachi::cli
