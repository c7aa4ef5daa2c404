#include "bsc/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>
#include <toml.hpp>

#include "bsc/errors.hpp"
#include "bsc/linalg.hpp"

namespace bsc {
namespace {

std::string where(const std::string& source, const toml::node& node) {
  const auto& begin = node.source().begin;
  return source + ":" + std::to_string(begin.line) + ":" + std::to_string(begin.column);
}

[[noreturn]] void config_error(const std::string& source, const toml::node& node, const std::string& what) {
  throw Error(ErrorCode::kConfig, where(source, node) + ": " + what);
}

double number_of(const std::string& source, const std::string& key, const toml::node& node) {
  if (auto v = node.value<double>()) return *v;  // integers convert as well
  config_error(source, node, "'" + key + "' must be a number");
}

bool bool_of(const std::string& source, const std::string& key, const toml::node& node) {
  if (auto v = node.value_exact<bool>()) return *v;
  config_error(source, node, "'" + key + "' must be true or false");
}

int int_of(const std::string& source, const std::string& key, const toml::node& node) {
  if (auto v = node.value_exact<int64_t>()) return static_cast<int>(*v);
  config_error(source, node, "'" + key + "' must be an integer");
}

std::string string_of(const std::string& source, const std::string& key, const toml::node& node) {
  if (auto v = node.value_exact<std::string>()) return *v;
  config_error(source, node, "'" + key + "' must be a string");
}

void parse_tolerances(const std::string& source, const toml::table& table, Tolerances& tol) {
  const std::map<std::string, double*> fields = {
      {"dynamics", &tol.dynamics}, {"endpoint", &tol.endpoint}, {"stationarity", &tol.stationarity},
      {"strict", &tol.strict},     {"dedupe", &tol.dedupe},     {"eigen", &tol.eigen},
      {"rho_min", &tol.rho_min},   {"refinement", &tol.refinement}};
  for (const auto& [key, node] : table) {
    const std::string name(key.str());
    const auto it = fields.find(name);
    if (it == fields.end()) config_error(source, node, "unknown tolerance '" + name + "'");
    *it->second = number_of(source, name, node);
  }
}

// Line-oriented logger; JSON mode writes one object per line.
class Logger {
 public:
  Logger(std::ostream& out, bool json) : out_(out), json_(json) {}

  void event(const std::string& name, const nlohmann::json& fields) {
    if (json_) {
      nlohmann::json line = fields;
      line["event"] = name;
      out_ << line.dump() << '\n';
      return;
    }
    out_ << name;
    for (const auto& [key, value] : fields.items()) out_ << ' ' << key << '=' << value.dump();
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  bool json_;
};

void write_json(const std::filesystem::path& path, const nlohmann::json& json) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kConfig, "cannot write " + path.string());
  out << json.dump(2) << '\n';
}

const Vector* counterexample(const CertificationReport& report) {
  if (report.sufficient.mode == SufficiencyMode::kFalsified && report.sufficient.direction.size())
    return &report.sufficient.direction;
  if (report.necessary.verdict == NecessaryVerdict::kViolated && report.necessary.direction.size())
    return &report.necessary.direction;
  return nullptr;
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::string& source, RunConfig base) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& begin = e.source().begin;
    throw Error(ErrorCode::kConfig, source + ":" + std::to_string(begin.line) + ":" + std::to_string(begin.column) +
                                        ": " + std::string(e.description()));
  }
  RunConfig config = std::move(base);
  for (const auto& [key, node] : root) {
    const std::string name(key.str());
    if (name == "fixture") {
      config.fixture = string_of(source, name, node);
    } else if (name == "grid") {
      config.grid = int_of(source, name, node);
    } else if (name == "mode") {
      const std::string mode = string_of(source, name, node);
      if (mode != "sufficient" && mode != "necessary")
        config_error(source, node, "mode must be \"sufficient\" or \"necessary\"");
      config.necessary_mode = mode == "necessary";
    } else if (name == "out") {
      config.out_dir = string_of(source, name, node);
    } else if (name == "emit_coefficients") {
      config.emit_coefficients = bool_of(source, name, node);
    } else if (name == "active_set") {
      config.active_set = bool_of(source, name, node);
    } else if (name == "check_refinement") {
      config.check_refinement = bool_of(source, name, node);
    } else if (name == "threads") {
      config.threads = int_of(source, name, node);
    } else if (name == "json_logs") {
      config.json_logs = bool_of(source, name, node);
    } else if (name == "params") {
      const toml::table* table = node.as_table();
      if (!table) config_error(source, node, "'params' must be a table");
      for (const auto& [pkey, pnode] : *table) {
        const std::string pname(pkey.str());
        config.params[pname] = number_of(source, pname, pnode);
      }
    } else if (name == "tolerances") {
      const toml::table* table = node.as_table();
      if (!table) config_error(source, node, "'tolerances' must be a table");
      parse_tolerances(source, *table, config.tolerances);
    } else {
      config_error(source, node, "unknown key '" + name + "'");
    }
  }
  return config;
}

RunConfig load_run_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfig, "cannot read " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str(), path, std::move(base));
}

RunResult run(const RunConfig& config, std::ostream& log_stream) {
  Logger log(log_stream, config.json_logs);
  if (config.threads < 0) throw Error(ErrorCode::kConfig, "threads must be non-negative");
  config.tolerances.check();
  set_thread_limit(config.threads);
  const FixtureRegistry& registry = FixtureRegistry::builtin();

  const FixtureInstance instance = registry.build(config.fixture, config.grid, config.params);
  log.event("fixture", {{"name", config.fixture}, {"intervals", instance.extremal.grid.num_intervals()}});

  CertifyOptions options;
  options.tolerances = config.tolerances;
  options.active_set = config.active_set;
  options.necessary_mode = config.necessary_mode;
  CertificationState state;
  RunResult result;
  result.report = certify(instance.problem, instance.extremal, options, &state);
  const CertificationReport& report = result.report;
  result.exit_status = report.exit_status(config.necessary_mode);
  log.event("certified", {{"sufficient", sufficiency_mode_name(report.sufficient.mode)},
                          {"necessary", necessary_verdict_name(report.necessary.verdict)},
                          {"rho", std::isfinite(report.sufficient.rho) ? nlohmann::json(report.sufficient.rho)
                                                                       : nlohmann::json(nullptr)}});

  result.report_json = report_to_json(report, config.tolerances);
  result.report_json["fixture"] = config.fixture;
  result.report_json["parameters"] = registry.get(config.fixture).defaults;
  for (const auto& [key, value] : config.params) result.report_json["parameters"][key] = value;
  result.report_json["mode"] = config.necessary_mode ? "necessary" : "sufficient";

  if (config.check_refinement) {
    const FixtureInstance fine = registry.build(config.fixture, 2 * config.grid, config.params);
    const CertificationReport fine_report = certify(fine.problem, fine.extremal, options);
    RefinementCheck check;
    check.grid = fine.extremal.grid.num_intervals();
    check.rho = fine_report.sufficient.rho;
    check.mode = sufficiency_mode_name(fine_report.sufficient.mode);
    const double coarse = report.sufficient.rho;
    if (std::isfinite(coarse) && std::isfinite(check.rho))
      check.relative_change = std::abs(check.rho - coarse) / std::max(std::abs(coarse), 1e-300);
    else
      check.relative_change = coarse == check.rho ? 0.0 : INFINITY;
    check.passed = fine_report.sufficient.mode == report.sufficient.mode &&
                   (report.sufficient.mode != SufficiencyMode::kSingleMultiplier ||
                    check.relative_change <= config.tolerances.refinement);
    result.report_json["refinement"] = {
        {"grid_intervals", check.grid},
        {"mode", check.mode},
        {"rho", std::isfinite(check.rho) ? nlohmann::json(check.rho) : nlohmann::json(nullptr)},
        {"relative_change",
         std::isfinite(check.relative_change) ? nlohmann::json(check.relative_change) : nlohmann::json(nullptr)},
        {"passed", check.passed}};
    log.event("refinement", result.report_json["refinement"]);
    if (!check.passed && result.exit_status == 0) result.exit_status = 3;
    result.refinement = check;
  }
  result.report_json["exit_status"] = result.exit_status;

  if (config.out_dir.empty()) return result;
  const std::filesystem::path dir(config.out_dir);
  std::filesystem::create_directories(dir);
  write_json(dir / "report.json", result.report_json);
  write_json(dir / "cone.json", report.cone);
  if (config.emit_coefficients && state.coeffs) {
    Vector lambda;
    if (report.sufficient.vertex >= 0 && report.sufficient.vertex < static_cast<int>(report.forms_multipliers.size()))
      lambda = report.forms_multipliers[report.sufficient.vertex];
    else if (!report.forms_multipliers.empty())
      lambda = report.forms_multipliers.front();
    else
      lambda = report.polytope->vertices.front();
    std::ofstream csv(dir / "coefficients.csv");
    write_coefficients_csv(csv, *state.lin, state.coeffs->at(lambda));
  }
  if (const Vector* p = counterexample(report); p && state.cone) {
    nlohmann::json ce = direction_to_json(*state.cone, state.lin->traj.layout, *p);
    if (report.sufficient.mode == SufficiencyMode::kFalsified) ce["form_values"] = report.sufficient.direction_values;
    write_json(dir / "counterexample.json", ce);
  }
  log.event("written", {{"dir", config.out_dir}});
  return result;
}

}  // namespace bsc
