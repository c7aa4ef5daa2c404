// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and budgets are pinned below.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "bsc/certify.hpp"
#include "bsc/fixtures.hpp"
#include "bsc/goh.hpp"
#include "bsc/linalg.hpp"
#include "bsc/run.hpp"
#include "random_problem.hpp"

using namespace bsc;
namespace fs = std::filesystem;

namespace {

constexpr double kDubinsRelTol = 0.02;
constexpr double kDubinsSeconds = 10.0;
constexpr double kGohRelTol = 1e-6;
constexpr double kGohSeconds = 60.0;
constexpr int kGohGrid = 800;
constexpr int kGohProblems = 5;
constexpr int kGohDirections = 100;
constexpr double kBracketTol = 1e-6;
constexpr double kReevalTol = 1e-8;
constexpr double kConeTol = 1e-9;
constexpr double kAdjointTol = 1e-8;
constexpr double kRefinedToleranceFactor = 10.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Pipeline {
  Linearization lin;
  AdjointBasis basis;
  GohCoefficients coeffs;
};

Pipeline prepare(const ControlAffineProblem& p, const Extremal& e) {
  Pipeline s{compute_linearization(p, sample_trajectory(p, e)), {}, {}};
  s.basis = build_adjoint_basis(p, s.lin);
  s.coeffs = compute_goh_coefficients(p, s.lin, s.basis);
  return s;
}

OriginalDirection random_direction(std::mt19937_64& rng, const ControlAffineProblem& p, const Linearization& lin) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const int m = lin.traj.m, S = lin.num_samples();
  OriginalDirection dir;
  dir.v = Matrix::Zero(m, S);
  for (int i = 0; i < m; ++i) {
    double c[5];
    for (double& x : c) x = coef(rng);
    for (int s = 0; s < S; ++s) {
      const double t = lin.traj.layout.time(s);
      if (lin.traj.arcs.singular_on(i, lin.traj.layout.interval(s)))
        dir.v(i, s) = c[0] + c[1] * std::sin(3 * t) + c[2] * std::cos(5 * t + c[3]) + c[4] * t * t;
    }
  }
  Vector z0 = Vector::Zero(lin.augmented_dim());
  if (!p.fixed_initial_state) z0.head(p.n) = testing::random_matrix(rng, p.n, 1, 1.0);
  if (p.n_r) z0.tail(p.n_r) = testing::random_matrix(rng, p.n_r, 1, 1.0);
  dir.z = integrate_variation(lin, z0, dir.v);
  return dir;
}

double pairing(const Pipeline& s, const ControlAffineProblem& p, const Vector& lambda, int sample, const Vector& g) {
  Vector psi = Vector::Zero(s.lin.augmented_dim());
  for (int k = 0; k < s.basis.dim; ++k) psi += lambda[k] * s.basis.psi_samples[k].col(sample);
  return psi.head(p.n).dot(g);
}

CertificationReport certify_fixture(const std::string& name, int grid, CertificationState* state = nullptr) {
  const FixtureInstance inst = FixtureRegistry::builtin().build(name, grid);
  return certify(inst.problem, inst.extremal, {}, state);
}

// 1. Dubins coercivity constant against the closed form on two grids.
bool dubins_rho(std::string& detail) {
  const double T = dubins_horizon(std::numbers::pi / 2, -2.0, 1.0);
  const double expected = T * T * T / 4;
  double rho[2] = {0.0, 0.0}, worst_time = 0.0;
  bool ok = true;
  for (int i = 0; i < 2; ++i) {
    const auto start = Clock::now();
    const CertificationReport r = certify_fixture("dubins", i == 0 ? 400 : 800);
    worst_time = std::max(worst_time, seconds_since(start));
    rho[i] = r.sufficient.rho;
    ok = ok && r.sufficient.mode == SufficiencyMode::kSingleMultiplier && !r.sufficient.heuristic;
    ok = ok && std::abs(rho[i] - expected) <= kDubinsRelTol * expected;
  }
  ok = ok && std::abs(rho[0] - rho[1]) <= kDubinsRelTol * std::abs(rho[1]) && worst_time <= kDubinsSeconds;
  char buf[200];
  std::snprintf(buf, sizeof buf, "rho(400)=%.6f rho(800)=%.6f expected=%.6f slowest=%.2fs", rho[0], rho[1], expected,
                worst_time);
  detail = buf;
  return ok;
}

// 2. The Goh-transformed form equals the original second variation.
bool goh_identity(std::string& detail) {
  std::mt19937_64 rng(2024);
  const auto start = Clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < kGohProblems; ++trial) {
    const int n = 2 + trial % 3, m = 1 + trial % 2, nr = trial % 2;
    const ControlAffineProblem p = testing::random_problem(rng, n, m, nr, 1, trial != 2);
    const Pipeline s = prepare(p, testing::random_candidate(rng, p, kGohGrid));
    const CoefficientSeries c = s.coeffs.at(testing::random_matrix(rng, s.basis.dim, 1, 1.0));
    for (int d = 0; d < kGohDirections; ++d) {
      const OriginalDirection dir = random_direction(rng, p, s.lin);
      const TransformedDirection t = goh_transform_direction(s.lin, dir);
      const double direct = omega_direct(s.lin, c, dir);
      const double transformed = omega_goh(s.lin, c, t, dir.v);
      worst = std::max(worst, std::abs(direct - transformed) / (1.0 + std::abs(direct)));
    }
  }
  const double elapsed = seconds_since(start);
  char buf[200];
  std::snprintf(buf, sizeof buf, "worst relative gap=%.3e over %d directions in %.2fs", worst,
                kGohProblems * kGohDirections, elapsed);
  detail = buf;
  return worst <= kGohRelTol && elapsed <= kGohSeconds;
}

// 3. V and R against symbolic Lie brackets of the fields.
bool bracket_identities(std::string& detail) {
  std::mt19937_64 rng(2025);
  double worst_v = 0.0, worst_r = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    const int m = 1 + trial % 2;
    const ControlAffineProblem p = testing::random_problem(rng, 3, m, trial / 2, 1);
    const Pipeline s = prepare(p, testing::random_candidate(rng, p, 200));
    const Vector lambda = testing::random_matrix(rng, s.basis.dim, 1, 1.0);
    const CoefficientSeries c = s.coeffs.at(lambda);
    const auto& f = p.fields;
    for (int sample = 0; sample < s.lin.num_samples(); sample += 5) {
      const Vector X = s.lin.traj.X.col(sample);
      const Vector x = X.head(p.n), r = X.tail(p.n_r);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          const double expected = 0.5 * pairing(s, p, lambda, sample, lie_bracket(f[i + 1], f[j + 1]).eval(x, r));
          worst_v = std::max(worst_v, std::abs(c.V[sample](i, j) - expected));
        }
      if (m == 1) {
        const double expected = pairing(s, p, lambda, sample, lie_bracket(f[1], lie_bracket(f[1], f[0])).eval(x, r));
        worst_r = std::max(worst_r, std::abs(c.R[sample](0, 0) - expected) / (1.0 + std::abs(expected)));
      }
    }
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "max |V - bracket|=%.3e max rel |R - bracket|=%.3e", worst_v, worst_r);
  detail = buf;
  return worst_v <= kBracketTol && worst_r <= kBracketTol;
}

// 4. The noncoercive fixture is falsified by a direction that re-evaluates.
bool noncoercive_falsified(std::string& detail) {
  CertificationState state;
  const CertificationReport r = certify_fixture("lq_noncoercive", 400, &state);
  if (r.sufficient.mode != SufficiencyMode::kFalsified || r.sufficient.direction_values.empty()) {
    detail = std::string("mode=") + sufficiency_mode_name(r.sufficient.mode);
    return false;
  }
  const double reported = r.sufficient.direction_values[0];
  const CoefficientSeries c = state.coeffs->at(r.forms_multipliers[0]);
  const double again = omega_goh_closure(*state.lin, c, state.cone->expand(r.sufficient.direction));
  const bool in_cone = state.cone->in_cone_up_to_sign(r.sufficient.direction, kConeTol);
  const double gap = std::abs(again - reported) / std::max(1.0, std::abs(reported));
  char buf[200];
  std::snprintf(buf, sizeof buf, "reported=%.10f re-evaluated=%.10f gap=%.2e in_cone=%d", reported, again, gap, in_cone);
  detail = buf;
  return reported < 0.0 && again < 0.0 && gap <= kReevalTol && in_cone;
}

// 5. Goh condition: infeasible for the violating fixture, feasible otherwise.
bool goh_condition(std::string& detail) {
  const CertificationReport bad = certify_fixture("two_control_goh_violation", 100);
  const CertificationReport good = certify_fixture("two_control_commuting", 60);
  char buf[200];
  std::snprintf(buf, sizeof buf, "violation: satisfiable=%d distance=%.3e; commuting: satisfiable=%d distance=%.3e",
                bad.goh.satisfiable, bad.goh.distance, good.goh.satisfiable, good.goh.distance);
  detail = buf;
  return bad.goh.applicable && !bad.goh.satisfiable && bad.exit_status(false) == 2 && good.goh.applicable &&
         good.goh.satisfiable;
}

// 6. Costates are linear in the multiplier, and every fixture still
// validates on a twice finer grid.
bool adjoint_and_refinement(std::string& detail) {
  std::mt19937_64 rng(2026);
  double worst = 0.0;
  for (int trial = 0; trial < 4; ++trial) {
    const ControlAffineProblem p = testing::random_problem(rng, 3, 1 + trial % 2, trial % 2, 2, trial < 2);
    const Pipeline s = prepare(p, testing::random_candidate(rng, p, 200));
    const Vector lambda = testing::random_matrix(rng, s.basis.dim, 1, 1.0);
    const Matrix direct = integrate_costate(p, s.lin, lambda);
    worst = std::max(worst, (direct - s.basis.costate(lambda)).cwiseAbs().maxCoeff() /
                                (1.0 + direct.cwiseAbs().maxCoeff()));
  }
  Tolerances loose;
  loose.dynamics *= kRefinedToleranceFactor;
  loose.endpoint *= kRefinedToleranceFactor;
  std::string failed;
  for (const FixtureInfo* info : FixtureRegistry::builtin().list()) {
    const FixtureInstance inst = FixtureRegistry::builtin().build(info->name, 2 * 200);
    if (!validate_extremal(inst.problem, inst.extremal, loose).passed()) failed += " " + info->name;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "adjoint linearity gap=%.3e; refined fixtures failing:%s", worst,
                failed.empty() ? " none" : failed.c_str());
  detail = buf;
  return worst <= kAdjointTol && failed.empty();
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// 7. report.json is byte-identical across repeated runs and thread counts.
bool deterministic_reports(std::string& detail) {
  const fs::path base = fs::temp_directory_path() / "bsc_acceptance";
  fs::remove_all(base);
  std::string mismatched;
  for (const char* name : {"dubins", "lq_noncoercive", "degenerate_equalities"}) {
    std::string first;
    int run_index = 0;
    for (int threads : {1, 1, 4}) {
      RunConfig c;
      c.fixture = name;
      c.grid = 120;
      c.threads = threads;
      c.out_dir = (base / (std::string(name) + std::to_string(run_index++))).string();
      std::ostringstream log;
      run(c, log);
      const std::string text = slurp(fs::path(c.out_dir) / "report.json");
      if (first.empty()) first = text;
      if (text.empty() || text != first) mismatched += " " + std::string(name);
    }
  }
  set_thread_limit(1);
  fs::remove_all(base);
  detail = mismatched.empty() ? "3 fixtures x 3 runs identical" : "differs:" + mismatched;
  return mismatched.empty();
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<bool(std::string&)>> criteria[] = {
      {"dubins_rho", dubins_rho},
      {"goh_identity", goh_identity},
      {"bracket_identities", bracket_identities},
      {"noncoercive_falsified", noncoercive_falsified},
      {"goh_condition", goh_condition},
      {"adjoint_and_refinement", adjoint_and_refinement},
      {"deterministic_reports", deterministic_reports},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    std::string detail;
    bool ok = false;
    try {
      ok = check(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    if (!ok) ++failures;
    std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
