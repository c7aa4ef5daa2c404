#pragma once

#include <iosfwd>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>

#include "bsc/certify.hpp"
#include "bsc/fixtures.hpp"

namespace bsc {

struct RunConfig {
  std::string fixture;
  int grid = 400;
  FixtureParams params;
  std::string out_dir;  // empty: no files are written
  bool emit_coefficients = false;
  bool active_set = false;
  bool check_refinement = false;
  int threads = 1;
  bool json_logs = false;
  bool necessary_mode = false;
  Tolerances tolerances;
};

// TOML run configuration. Top-level keys: fixture, grid, mode ("sufficient"
// or "necessary"), out, emit_coefficients, active_set, check_refinement,
// threads, json_logs; tables [params] and [tolerances]. Unknown keys are
// errors. Values not present keep those already in `base`.
RunConfig parse_run_config(const std::string& text, const std::string& source, RunConfig base = {});
RunConfig load_run_config(const std::string& path, RunConfig base = {});

struct RefinementCheck {
  int grid = 0;
  double rho = 0.0;
  double relative_change = 0.0;
  bool passed = false;
  std::string mode;
};

struct RunResult {
  CertificationReport report;
  nlohmann::json report_json;
  std::optional<RefinementCheck> refinement;
  int exit_status = 1;
};

// Builds the fixture, certifies it and writes report.json and cone.json (plus
// coefficients.csv and counterexample.json when applicable) into out_dir.
// Progress lines go to `log`, as JSON objects when json_logs is set.
RunResult run(const RunConfig& config, std::ostream& log);

}  // namespace bsc
