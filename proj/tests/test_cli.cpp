#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "bsc/errors.hpp"
#include "bsc/run.hpp"

using namespace bsc;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("bsc_test_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run_cli(const std::string& args, const fs::path& capture) {
  const std::string cmd = std::string(BSC_CERTIFY_EXE) + " " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string config_error_message(const std::string& text) {
  try {
    parse_run_config(text, "run.toml");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfig);
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("run configuration from TOML") {
  const RunConfig c = parse_run_config(R"(
fixture = "lq_noncoercive"
grid = 120
mode = "necessary"
active_set = true
threads = 2

[params]
k = 3

[tolerances]
strict = 1e-5
)",
                                       "run.toml");
  CHECK(c.fixture == "lq_noncoercive");
  CHECK(c.grid == 120);
  CHECK(c.necessary_mode);
  CHECK(c.active_set);
  CHECK(c.threads == 2);
  CHECK(c.params.at("k") == 3.0);
  CHECK(c.tolerances.strict == 1e-5);
  CHECK(c.tolerances.dynamics == 1e-6);
}

TEST_CASE("configuration errors name the offending line") {
  CHECK(config_error_message("fixture = \"dubins\"\ngrids = 3\n").find("run.toml:2") != std::string::npos);
  CHECK(config_error_message("grid = \"many\"\n").find("must be an integer") != std::string::npos);
  CHECK(config_error_message("mode = \"both\"\n").find("mode must be") != std::string::npos);
  CHECK(config_error_message("[tolerances]\nstrict = 1\nloose = 2\n").find("run.toml:3") != std::string::npos);
  CHECK(config_error_message("grid = = 3\n").find("run.toml:1") != std::string::npos);
}

TEST_CASE("run writes the report files") {
  const fs::path dir = scratch("files");
  RunConfig c;
  c.fixture = "lq_noncoercive";
  c.grid = 60;
  c.out_dir = dir.string();
  c.emit_coefficients = true;
  std::ostringstream log;
  const RunResult r = run(c, log);
  CHECK(r.exit_status == 2);
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "cone.json"));
  CHECK(fs::exists(dir / "coefficients.csv"));
  REQUIRE(fs::exists(dir / "counterexample.json"));
  const auto ce = nlohmann::json::parse(slurp(dir / "counterexample.json"));
  CHECK(ce["t"].size() == 180);
  CHECK(ce["form_values"][0].get<double>() < 0.0);
  const auto report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report["fixture"] == "lq_noncoercive");
  CHECK(report["parameters"]["k"] == 1.0);
  CHECK(report["exit_status"] == 2);
  CHECK(slurp(dir / "report.json").find(dir.string()) == std::string::npos);
  CHECK(log.str().find("certified") != std::string::npos);
}

TEST_CASE("refinement check and json logs") {
  RunConfig c;
  c.fixture = "lq_coercive";
  c.grid = 40;
  c.check_refinement = true;
  c.json_logs = true;
  std::ostringstream log;
  const RunResult r = run(c, log);
  REQUIRE(r.refinement);
  CHECK(r.refinement->grid == 80);
  CHECK(r.refinement->passed);
  CHECK(r.exit_status == 0);
  std::istringstream lines(log.str());
  for (std::string line; std::getline(lines, line);) CHECK(nlohmann::json::parse(line).contains("event"));
}

TEST_CASE("command-line exit codes") {
  const fs::path dir = scratch("exit");
  const fs::path out = dir / "stdout.txt";
  CHECK(run_cli("--fixture lq_coercive --grid 40", out) == 0);
  CHECK(slurp(out).find("SINGLE_MULTIPLIER") != std::string::npos);
  CHECK(run_cli("--fixture lq_noncoercive --grid 40", out) == 2);
  CHECK(run_cli("--fixture two_control_goh_violation --grid 20", out) == 2);
  CHECK(run_cli("--fixture two_control_commuting --grid 20", out) == 3);
  CHECK(run_cli("--fixture two_control_commuting --grid 20 --mode necessary", out) == 0);
  CHECK(run_cli("--fixture dubins --grid 60 --theta -1", out) == 1);
  CHECK(slurp(out).find("error") != std::string::npos);
  CHECK(run_cli("--fixture nope", out) == 1);
  CHECK(run_cli("--fixture lq_noncoercive --param k", out) == 1);
  CHECK(run_cli("--fixture lq_noncoercive --param speed=2", out) == 1);
  CHECK(run_cli("--grid 40", out) == 1);
  CHECK(run_cli("--list-fixtures --json", out) == 0);
  CHECK(nlohmann::json::parse(slurp(out)).size() == 7);
}

TEST_CASE("command line merges a config file with flags") {
  const fs::path dir = scratch("config");
  {
    std::ofstream cfg(dir / "run.toml");
    cfg << "fixture = \"lq_noncoercive\"\ngrid = 30\nout = \"" << (dir / "a").string() << "\"\n[params]\nk = 2.0\n";
  }
  const fs::path out = dir / "stdout.txt";
  CHECK(run_cli("--config " + (dir / "run.toml").string(), out) == 2);
  CHECK(run_cli("--config " + (dir / "run.toml").string() + " --out " + (dir / "b").string() + " --threads 2", out) == 2);
  const std::string a = slurp(dir / "a" / "report.json"), b = slurp(dir / "b" / "report.json");
  CHECK_FALSE(a.empty());
  CHECK(a == b);
  CHECK(nlohmann::json::parse(a)["parameters"]["k"] == 2.0);
  {
    std::ofstream bad(dir / "bad.toml");
    bad << "fixture = \"dubins\"\ncolour = 1\n";
  }
  CHECK(run_cli("--config " + (dir / "bad.toml").string(), out) == 1);
  CHECK(slurp(out).find("bad.toml:2") != std::string::npos);
}
