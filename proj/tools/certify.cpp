// Command-line front end: certify a built-in fixture and write the reports.
#include <CLI11.hpp>
#include <iostream>

#include "bsc/errors.hpp"
#include "bsc/fixtures.hpp"
#include "bsc/run.hpp"

namespace {

bsc::FixtureParams parse_params(const std::vector<std::string>& pairs) {
  bsc::FixtureParams out;
  for (const std::string& pair : pairs) {
    const auto eq = pair.find('=');
    if (eq == std::string::npos || eq == 0)
      throw bsc::Error(bsc::ErrorCode::kConfig, "--param expects key=value, got '" + pair + "'");
    std::size_t used = 0;
    const std::string value = pair.substr(eq + 1);
    double v = 0.0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size())
      throw bsc::Error(bsc::ErrorCode::kConfig, "--param value is not a number: '" + pair + "'");
    out[pair.substr(0, eq)] = v;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Second-order certification of bang-singular extremals"};
  std::string fixture, config_path, out_dir, mode;
  int grid = 0, threads = -1;
  double theta = 0, b1 = 0, b2 = 0;
  std::vector<std::string> params;
  bool list = false, list_json = false;
  auto* fixture_opt = app.add_option("--fixture", fixture, "built-in fixture name");
  app.add_option("--config", config_path, "TOML run configuration")->check(CLI::ExistingFile);
  auto* grid_opt = app.add_option("--grid", grid, "number of grid intervals")->check(CLI::Range(2, 1 << 20));
  auto* theta_opt = app.add_option("--theta", theta, "dubins turn angle");
  auto* b1_opt = app.add_option("--b1", b1, "dubins target x1");
  auto* b2_opt = app.add_option("--b2", b2, "dubins target x2");
  app.add_option("--param", params, "fixture parameter key=value (repeatable)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* coeff_flag = app.add_flag("--emit-coefficients", "write coefficients.csv");
  auto* active_flag = app.add_flag("--active-set", "try faces of the critical cone before giving up");
  auto* refine_flag = app.add_flag("--check-refinement", "repeat the run on a grid twice as fine");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
  auto* json_flag = app.add_flag("--json-logs", "log progress as JSON lines on stderr");
  auto* mode_opt = app.add_option("--mode", mode, "sufficient or necessary")
                       ->check(CLI::IsMember({"sufficient", "necessary"}));
  app.add_flag("--list-fixtures", list, "print the fixture table and exit");
  app.add_flag("--json", list_json, "with --list-fixtures: print JSON");
  CLI11_PARSE(app, argc, argv);

  try {
    const bsc::FixtureRegistry& registry = bsc::FixtureRegistry::builtin();
    if (list) {
      if (list_json)
        std::cout << bsc::fixture_table_json(registry).dump(2) << '\n';
      else
        std::cout << bsc::fixture_table_text(registry);
      return 0;
    }

    bsc::RunConfig config;
    if (!config_path.empty()) config = bsc::load_run_config(config_path, config);
    if (*fixture_opt) config.fixture = fixture;
    if (*grid_opt) config.grid = grid;
    if (*out_opt) config.out_dir = out_dir;
    if (*coeff_flag) config.emit_coefficients = true;
    if (*active_flag) config.active_set = true;
    if (*refine_flag) config.check_refinement = true;
    if (*threads_opt) config.threads = threads;
    if (*json_flag) config.json_logs = true;
    if (*mode_opt) config.necessary_mode = mode == "necessary";
    for (const auto& [key, value] : parse_params(params)) config.params[key] = value;
    if (*theta_opt) config.params["theta"] = theta;
    if (*b1_opt) config.params["b1"] = b1;
    if (*b2_opt) config.params["b2"] = b2;
    if (config.fixture.empty()) throw bsc::Error(bsc::ErrorCode::kConfig, "no fixture given (--fixture or --config)");

    const bsc::RunResult result = bsc::run(config, std::cerr);
    const auto& suff = result.report.sufficient;
    std::cout << "sufficient: " << bsc::sufficiency_mode_name(suff.mode) << (suff.heuristic ? " (heuristic)" : "")
              << "\nnecessary: " << bsc::necessary_verdict_name(result.report.necessary.verdict) << "\nrho: ";
    std::cout << result.report_json["sufficient"]["rho"].dump() << '\n';
    return result.exit_status;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
