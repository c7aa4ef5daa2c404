#include "bsc/certify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "bsc/errors.hpp"
#include "bsc/linalg.hpp"

namespace bsc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Rounds of the convex-weight search for the necessary-condition lower bound.
constexpr int kWeightRounds = 4;
constexpr int kGoldenSteps = 12;
constexpr int kDescentSteps = 60;

nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

nlohmann::json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Matrix combine(const std::vector<Matrix>& W, const Vector& mu) {
  Matrix out = Matrix::Zero(W.front().rows(), W.front().cols());
  for (size_t k = 0; k < W.size(); ++k)
    if (mu[k] != 0.0) out += mu[k] * W[k];
  return out;
}

// Gamma-normalised magnitude of the forms, used to scale eigenvalue tolerances.
double pencil_scale(const ReducedForms& forms) {
  double scale = 0.0;
  for (const auto& W : forms.W) {
    for (double sign : {1.0, -1.0}) {
      const PencilMin p = pencil_min(sign * W, forms.gamma);
      if (std::isfinite(p.value)) scale = std::max(scale, std::abs(p.value));
    }
  }
  return scale > 0.0 ? scale : 1.0;
}

struct SearchResult {
  double value = kInf;
  Vector direction;  // reduced coordinates, Gamma-normalised (or a Gamma-kernel direction)
  bool kernel_direction = false;
};

double max_form(const std::vector<Matrix>& W, const Vector& p) {
  double v = -kInf;
  for (const auto& w : W) v = std::max(v, p.dot(w * p));
  return v;
}

// Upper bound on nu* by evaluating candidate directions and refining the
// best one with projected subgradient steps on the Gamma-sphere.
SearchResult minimax_search(const ReducedForms& forms, const std::vector<Vector>& seeds) {
  SearchResult best;
  const Matrix& G = forms.gamma;
  for (const Vector& seed : seeds) {
    const double g = seed.dot(G * seed);
    if (!(g > 0.0)) continue;
    Vector p = seed / std::sqrt(g);
    double f = max_form(forms.W, p);
    double step = 0.1;
    for (int it = 0; it < kDescentSteps; ++it) {
      int active = 0;
      double top = -kInf;
      for (size_t k = 0; k < forms.W.size(); ++k) {
        const double v = p.dot(forms.W[k] * p);
        if (v > top) {
          top = v;
          active = static_cast<int>(k);
        }
      }
      const Vector grad = 2.0 * (forms.W[active] * p - top * (G * p));
      const double gnorm = grad.norm();
      if (gnorm == 0.0) break;
      Vector trial = p - step * grad / gnorm;
      const double gt = trial.dot(G * trial);
      if (!(gt > 0.0)) break;
      trial /= std::sqrt(gt);
      const double ft = max_form(forms.W, trial);
      if (ft < f) {
        p = trial;
        f = ft;
        step *= 1.5;
      } else {
        step *= 0.5;
      }
    }
    if (f < best.value) {
      best.value = f;
      best.direction = p;
    }
  }
  return best;
}

struct WeightSearch {
  double value = -kInf;
  Vector weights;
  Vector minimizer;
};

// max over the simplex of the concave map mu -> pencil_min(sum mu_k W_k).
WeightSearch maximize_weights(const ReducedForms& forms, double stop_above) {
  const int K = static_cast<int>(forms.W.size());
  WeightSearch best;
  auto evaluate = [&](const Vector& mu) {
    const PencilMin p = pencil_min(combine(forms.W, mu), forms.gamma);
    if (p.value > best.value) {
      best.value = p.value;
      best.weights = mu;
      best.minimizer = p.direction;
    }
    return p.value;
  };
  for (int k = 0; k < K; ++k) evaluate(Vector::Unit(K, k));
  if (K == 1 || best.value >= stop_above) return best;
  evaluate(Vector::Constant(K, 1.0 / K));
  const double golden = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int round = 0; round < kWeightRounds && best.value < stop_above; ++round) {
    for (int k = 0; k < K && best.value < stop_above; ++k) {
      const Vector base = best.weights;
      auto along = [&](double t) { return evaluate((1.0 - t) * base + t * Vector::Unit(K, k)); };
      double lo = 0.0, hi = 1.0;
      double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
      double f1 = along(x1), f2 = along(x2);
      for (int it = 0; it < kGoldenSteps; ++it) {
        if (f1 < f2) {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + golden * (hi - lo);
          f2 = along(x2);
        } else {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - golden * (hi - lo);
          f1 = along(x1);
        }
      }
    }
  }
  return best;
}

// Candidate directions: each vertex's worst direction plus the given extras.
std::vector<Vector> vertex_seeds(const ReducedForms& forms, std::vector<Vector>* kernel_dirs) {
  std::vector<Vector> seeds;
  for (const auto& W : forms.W) {
    const PencilMin p = pencil_min(W, forms.gamma);
    if (p.unbounded) kernel_dirs->push_back(p.direction);
    else if (p.direction.size()) seeds.push_back(p.direction);
  }
  return seeds;
}

// A Gamma-kernel direction along which every form is negative makes nu* = -inf.
bool kernel_counterexample(const ReducedForms& forms, const std::vector<Vector>& kernel_dirs, double tol,
                           Vector* direction) {
  for (const Vector& q : kernel_dirs) {
    if (q.dot(forms.gamma * q) > std::sqrt(tol) * q.squaredNorm()) continue;
    if (max_form(forms.W, q) < -tol * q.squaredNorm()) {
      *direction = q;
      return true;
    }
  }
  return false;
}

}  // namespace

const char* necessary_verdict_name(NecessaryVerdict verdict) {
  switch (verdict) {
    case NecessaryVerdict::kPassed: return "PASSED";
    case NecessaryVerdict::kViolated: return "VIOLATED";
    case NecessaryVerdict::kUndecided: return "UNDECIDED";
  }
  return "?";
}

const char* sufficiency_mode_name(SufficiencyMode mode) {
  switch (mode) {
    case SufficiencyMode::kSingleMultiplier: return "SINGLE_MULTIPLIER";
    case SufficiencyMode::kFalsified: return "FALSIFIED";
    case SufficiencyMode::kInconclusive: return "INCONCLUSIVE";
  }
  return "?";
}

GohConditionResult check_goh_condition(const MultiplierPolytope& polytope, const Linearization& lin,
                                       const GohCoefficients& coeffs, const Tolerances& tolerances) {
  GohConditionResult result;
  const int m = lin.traj.m;
  const int K = static_cast<int>(polytope.vertices.size());
  result.vertex_satisfies.assign(K, true);
  result.feasible_vertices = polytope.vertices;

  std::vector<std::array<int, 3>> entries;  // (a, b, sample)
  for (int s = 0; s < lin.num_samples(); ++s)
    for (int a = 0; a < m; ++a)
      for (int b = a + 1; b < m; ++b)
        if (lin.traj.arcs.singular_on(a, s / 3) && lin.traj.arcs.singular_on(b, s / 3)) entries.push_back({a, b, s});
  if (entries.empty()) return result;
  result.applicable = true;

  const int dim = polytope.dim;
  Matrix per_basis(entries.size(), dim);
  for (size_t e = 0; e < entries.size(); ++e)
    for (int j = 0; j < dim; ++j) per_basis(e, j) = coeffs.basis[j].V[entries[e][2]](entries[e][0], entries[e][1]);
  Matrix P(entries.size(), K);
  for (int k = 0; k < K; ++k) P.col(k) = per_basis * polytope.vertices[k];

  result.tolerance = tolerances.stationarity * (1.0 + per_basis.cwiseAbs().maxCoeff());
  for (int k = 0; k < K; ++k) result.vertex_satisfies[k] = P.col(k).cwiseAbs().maxCoeff() <= result.tolerance;
  const MinNormPoint mnp = min_norm_point(P);
  result.weights = mnp.weights;
  result.distance = mnp.point.cwiseAbs().maxCoeff();
  result.satisfiable = result.distance <= result.tolerance;
  result.feasible_vertices.clear();
  if (!result.satisfiable) {
    result.separating = mnp.point;
    return result;
  }

  // Vertices of {mu >= 0, sum mu = 1, P mu = 0}, mapped back to multipliers.
  const Matrix N = nullspace(P, result.tolerance);
  auto add = [&](Vector mu) {
    const double total = mu.sum();
    if (total <= 1e-12) return;
    mu /= total;
    Vector lambda = Vector::Zero(dim);
    for (int k = 0; k < K; ++k) lambda += mu[k] * polytope.vertices[k];
    for (const auto& v : result.feasible_vertices)
      if ((v - lambda).cwiseAbs().maxCoeff() <= tolerances.dedupe) return;
    result.feasible_vertices.push_back(lambda);
  };
  if (N.cols() > 0) {
    try {
      for (const Vector& w : extreme_rays(N)) add(N * w);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kUnbounded) throw;
    }
  }
  if (result.feasible_vertices.empty()) add(mnp.weights);
  return result;
}

LegendreResult check_legendre(const Linearization& lin, const GohCoefficients& coeffs,
                              const std::vector<Vector>& multipliers, const Tolerances& tolerances) {
  LegendreResult result;
  const int m = lin.traj.m;
  const int S = lin.num_samples();
  double rmax = 0.0;
  result.min_eigenvalue = -kInf;
  bool any_singular = false;
  for (size_t v = 0; v < multipliers.size(); ++v) {
    double worst = kInf;
    double worst_time = 0.0;
    for (int s = 0; s < S; ++s) {
      std::vector<int> idx;
      for (int i = 0; i < m; ++i)
        if (lin.traj.arcs.singular_on(i, s / 3)) idx.push_back(i);
      if (idx.empty()) continue;
      any_singular = true;
      Matrix R = Matrix::Zero(m, m);
      for (int j = 0; j < multipliers[v].size(); ++j) R += multipliers[v][j] * coeffs.basis[j].R[s];
      rmax = std::max(rmax, R.cwiseAbs().maxCoeff());
      Matrix sub(idx.size(), idx.size());
      for (size_t a = 0; a < idx.size(); ++a)
        for (size_t b = 0; b < idx.size(); ++b) sub(a, b) = 0.5 * (R(idx[a], idx[b]) + R(idx[b], idx[a]));
      const double e = Eigen::SelfAdjointEigenSolver<Matrix>(sub, Eigen::EigenvaluesOnly).eigenvalues()[0];
      if (e < worst) {
        worst = e;
        worst_time = lin.traj.layout.time(s);
      }
    }
    result.per_vertex.push_back(worst);
    if (worst > result.min_eigenvalue) {
      result.min_eigenvalue = worst;
      result.time = worst_time;
      result.vertex = static_cast<int>(v);
    }
  }
  result.tolerance = tolerances.strict * (1.0 + rmax);
  if (!any_singular) {
    result.passed = true;
    result.min_eigenvalue = kInf;
    return result;
  }
  result.passed = result.min_eigenvalue >= -result.tolerance;
  return result;
}

NecessaryResult check_necessary_quadratic(const ReducedForms& forms, const ConeDiscretization& cone,
                                          const Tolerances& tolerances) {
  NecessaryResult result;
  if (forms.dim() == 0) {
    result.verdict = NecessaryVerdict::kPassed;
    result.lower_bound = result.upper_bound = kInf;
    result.note = "critical cone is {0}";
    return result;
  }
  if (forms.W.empty()) {
    result.verdict = NecessaryVerdict::kViolated;
    result.note = "no multiplier satisfies the Goh condition";
    result.lower_bound = result.upper_bound = -kInf;
    return result;
  }
  result.tolerance = tolerances.eigen * pencil_scale(forms);
  const double tol = result.tolerance;

  std::vector<Vector> kernel_dirs;
  std::vector<Vector> seeds = vertex_seeds(forms, &kernel_dirs);
  Vector kernel_dir;
  if (kernel_counterexample(forms, kernel_dirs, tol, &kernel_dir)) {
    result.verdict = NecessaryVerdict::kViolated;
    result.upper_bound = result.lower_bound = -kInf;
    result.direction = forms.Z * kernel_dir;
    result.note = "every form is negative along a direction with y = 0 and h = 0";
    return result;
  }

  const WeightSearch weights = maximize_weights(forms, tol > 0 ? -tol : 0.0);
  result.lower_bound = weights.value;
  if (weights.minimizer.size()) seeds.push_back(weights.minimizer);
  const SearchResult upper = minimax_search(forms, seeds);
  result.upper_bound = forms.W.size() == 1 ? weights.value : upper.value;
  if (upper.direction.size()) result.direction = forms.Z * upper.direction;

  if (result.lower_bound >= -tol) {
    result.verdict = NecessaryVerdict::kPassed;
  } else if (result.upper_bound < -tol) {
    bool flipped = false;
    if (cone.in_cone_up_to_sign(result.direction, 1e-9, &flipped)) {
      if (flipped) result.direction = -result.direction;
      result.verdict = NecessaryVerdict::kViolated;
    } else {
      result.note = "negative direction leaves the cone; try the active-set mode";
    }
  }
  return result;
}

SufficiencyResult check_sufficient(const ReducedForms& forms_in, const ConeDiscretization& cone, int num_controls,
                                   const Tolerances& tolerances, const SufficiencyOptions& options) {
  SufficiencyResult result;
  result.heuristic = num_controls >= 2;
  if (forms_in.dim() == 0) {
    result.mode = SufficiencyMode::kSingleMultiplier;
    result.vacuous = true;
    result.rho = kInf;
    result.vertex = forms_in.W.empty() ? -1 : 0;
    result.note = "critical cone is {0}";
    return result;
  }
  if (forms_in.W.empty()) {
    result.note = "no multiplier is available for the quadratic forms";
    return result;
  }
  const double scale = pencil_scale(forms_in);
  result.rho_min = tolerances.rho_min * scale;
  const double tol = tolerances.eigen * scale;

  std::vector<PencilMin> per_vertex;
  for (const auto& W : forms_in.W) per_vertex.push_back(pencil_min(W, forms_in.gamma));
  result.rho = -kInf;
  for (size_t k = 0; k < per_vertex.size(); ++k) {
    result.vertex_rho.push_back(per_vertex[k].value);
    if (per_vertex[k].value > result.rho) {
      result.rho = per_vertex[k].value;
      result.vertex = static_cast<int>(k);
    }
  }
  auto values_at = [&](const Vector& reduced) {
    std::vector<double> values;
    for (const auto& W : forms_in.W) values.push_back(reduced.dot(W * reduced));
    return values;
  };
  if (result.rho >= result.rho_min) {
    result.mode = SufficiencyMode::kSingleMultiplier;
    const Vector& dir = per_vertex[result.vertex].direction;
    result.direction = forms_in.Z * dir;
    result.direction_values = values_at(dir);
    return result;
  }

  // Search for a direction that is negative for every multiplier, first on
  // the equality subspace and then on the faces of the inequality rows.
  std::vector<std::vector<int>> faces{{}};
  const int rows = static_cast<int>(cone.inequality_rows.rows());
  if (options.active_set && rows <= options.max_face_rows)
    for (int mask = 1; mask < (1 << rows); ++mask) {
      std::vector<int> face;
      for (int r = 0; r < rows; ++r)
        if (mask >> r & 1) face.push_back(r);
      faces.push_back(face);
    }
  bool left_cone = false;
  for (const auto& face_rows : faces) {
    ReducedForms forms = forms_in;
    ConeDiscretization face = cone;
    if (!face_rows.empty()) {
      face = restrict_to_face(cone, face_rows);
      if (face.reduced_dim() == 0) continue;
      const Matrix map = forms_in.Z.transpose() * face.Z;
      forms.Z = face.Z;
      forms.gamma = map.transpose() * forms_in.gamma * map;
      for (auto& W : forms.W) W = (map.transpose() * W * map).eval();
    }
    std::vector<Vector> kernel_dirs;
    std::vector<Vector> seeds = vertex_seeds(forms, &kernel_dirs);
    Vector kernel_dir;
    const bool kernel_hit = kernel_counterexample(forms, kernel_dirs, tol, &kernel_dir);
    const WeightSearch weights = maximize_weights(forms, -tol);
    if (weights.minimizer.size()) seeds.push_back(weights.minimizer);
    const SearchResult search = minimax_search(forms, seeds);
    Vector reduced;
    if (kernel_hit) reduced = kernel_dir;
    else if (search.value < -tol) reduced = search.direction;
    if (reduced.size() == 0) continue;
    Vector full = forms.Z * reduced;
    bool flipped = false;
    if (!face.in_cone_up_to_sign(full, 1e-9, &flipped)) {
      left_cone = true;
      continue;
    }
    if (flipped) {
      full = -full;
      reduced = -reduced;
    }
    result.mode = SufficiencyMode::kFalsified;
    result.direction = full;
    result.direction_values = values_at(forms_in.Z.transpose() * full);
    result.face = face_rows;
    if (kernel_hit) result.note = "counterexample lies in the kernel of Gamma";
    return result;
  }
  result.direction = forms_in.Z * per_vertex[result.vertex].direction;
  if (left_cone) result.note = "negative directions found only outside the cone; try the active-set mode";
  return result;
}

int CertificationReport::exit_status(bool necessary_mode) const {
  if (!polytope) return 2;
  if (goh.applicable && !goh.satisfiable) return 2;
  if (necessary.verdict == NecessaryVerdict::kViolated) return 2;
  if (sufficient.mode == SufficiencyMode::kFalsified) return 2;
  if (necessary_mode) return necessary.verdict == NecessaryVerdict::kPassed ? 0 : 3;
  return sufficient.mode == SufficiencyMode::kSingleMultiplier && !sufficient.heuristic ? 0 : 3;
}

CertificationReport certify(const ControlAffineProblem& problem, const Extremal& extremal,
                            const CertifyOptions& options, CertificationState* state_out) {
  CertificationState local;
  CertificationState& state = state_out ? *state_out : local;
  const Tolerances& tol = options.tolerances;
  tol.check();
  CertificationReport report;
  report.grid_intervals = extremal.grid.num_intervals();
  report.validation = validate_extremal(problem, extremal, tol);
  if (!report.validation.passed()) {
    std::string msg = "candidate failed validation:";
    for (const auto& f : report.validation.failures) msg += " " + f + ";";
    throw Error(ErrorCode::kInvalidExtremal, msg);
  }

  state.lin = compute_linearization(problem, sample_trajectory(problem, extremal));
  const Linearization& lin = *state.lin;
  state.basis = build_adjoint_basis(problem, lin);
  try {
    report.polytope = assemble_polytope(problem, lin, *state.basis, tol);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyPolytope) throw;
    report.first_order_error = e.what();
    report.sufficient.mode = SufficiencyMode::kInconclusive;
    report.sufficient.note = "first-order conditions fail";
    report.necessary.verdict = NecessaryVerdict::kViolated;
    report.necessary.note = "no multiplier exists";
    return report;
  }
  report.first_order = check_first_order(problem, lin, *state.basis, *report.polytope, tol);

  state.coeffs = compute_goh_coefficients(problem, lin, *state.basis);
  report.goh = check_goh_condition(*report.polytope, lin, *state.coeffs, tol);
  report.forms_multipliers = report.goh.feasible_vertices;
  report.legendre = check_legendre(lin, *state.coeffs, report.forms_multipliers, tol);

  try {
    state.cone = discretize_cone(problem, lin, tol);
    state.forms = reduce_forms(*state.cone, lin, *state.coeffs, report.forms_multipliers);
    report.cone = cone_summary(*state.cone, lin.traj.arcs);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyCone) throw;
    state.cone.reset();
    ReducedForms empty;
    empty.multipliers = report.forms_multipliers;
    empty.W.assign(report.forms_multipliers.size(), Matrix(0, 0));
    empty.gamma = Matrix(0, 0);
    empty.Z = Matrix(0, 0);
    state.forms = empty;
    report.cone = {{"dimension", 0}, {"reduced_dimension", 0}};
  }

  const ConeDiscretization* cone = state.cone ? &*state.cone : nullptr;
  ConeDiscretization placeholder;
  report.necessary = check_necessary_quadratic(*state.forms, cone ? *cone : placeholder, tol);
  SufficiencyOptions sopts;
  sopts.active_set = options.active_set;
  report.sufficient = check_sufficient(*state.forms, cone ? *cone : placeholder, problem.m, tol, sopts);

  if (report.sufficient.mode == SufficiencyMode::kSingleMultiplier && !report.first_order->strict_complementarity) {
    report.sufficient.mode = SufficiencyMode::kInconclusive;
    report.sufficient.note = "strict complementarity fails on a bang arc";
  }
  if (report.goh.applicable && !report.goh.satisfiable) {
    report.necessary.verdict = NecessaryVerdict::kViolated;
    report.necessary.note = "Goh condition has no solution in the multiplier hull";
  }
  return report;
}

nlohmann::json report_to_json(const CertificationReport& report, const Tolerances& tolerances) {
  nlohmann::json out;
  out["grid_intervals"] = report.grid_intervals;
  out["tolerances"] = {{"dynamics", tolerances.dynamics},   {"endpoint", tolerances.endpoint},
                       {"stationarity", tolerances.stationarity}, {"strict", tolerances.strict},
                       {"dedupe", tolerances.dedupe},       {"eigen", tolerances.eigen},
                       {"rho_min", tolerances.rho_min},     {"refinement", tolerances.refinement}};
  out["validation"] = {{"dynamics_residual", report.validation.dynamics_residual},
                       {"dynamics_tolerance", report.validation.dynamics_tolerance},
                       {"equality_residuals", report.validation.equality_residuals},
                       {"inequality_values", report.validation.inequality_values}};

  nlohmann::json first;
  if (report.polytope) {
    const FirstOrderReport& fo = *report.first_order;
    first["satisfied"] = true;
    first["normal"] = fo.normal;
    first["min_alpha0"] = number(fo.min_alpha0);
    first["strict_complementarity"] = fo.strict_complementarity;
    first["complementarity_margin"] = number(fo.complementarity_margin);
    first["stationarity_residual"] = fo.stationarity_residual;
    nlohmann::json profile = nlohmann::json::array();
    for (int i = 0; i < fo.switching_max.rows(); ++i)
      profile.push_back({{"max", vector_json(fo.switching_max.row(i).transpose())},
                         {"min", vector_json(fo.switching_min.row(i).transpose())}});
    first["switching_function"] = profile;
    first["polytope"] = polytope_to_json(*report.polytope);
  } else {
    first["satisfied"] = false;
    first["error"] = report.first_order_error;
  }
  out["first_order"] = first;

  out["goh_condition"] = {{"applicable", report.goh.applicable},
                          {"satisfiable", report.goh.satisfiable},
                          {"distance", report.goh.distance},
                          {"tolerance", report.goh.tolerance},
                          {"vertex_satisfies", report.goh.vertex_satisfies},
                          {"feasible_vertices", report.goh.feasible_vertices.size()}};
  if (report.goh.separating.size()) out["goh_condition"]["separating_norm"] = report.goh.separating.norm();

  out["legendre"] = {{"passed", report.legendre.passed},
                     {"min_eigenvalue", number(report.legendre.min_eigenvalue)},
                     {"time", report.legendre.time},
                     {"vertex", report.legendre.vertex},
                     {"tolerance", report.legendre.tolerance}};
  nlohmann::json lv = nlohmann::json::array();
  for (double v : report.legendre.per_vertex) lv.push_back(number(v));
  out["legendre"]["per_vertex"] = lv;

  out["necessary"] = {{"verdict", necessary_verdict_name(report.necessary.verdict)},
                      {"lower_bound", number(report.necessary.lower_bound)},
                      {"upper_bound", number(report.necessary.upper_bound)},
                      {"tolerance", report.necessary.tolerance},
                      {"note", report.necessary.note}};

  const SufficiencyResult& suff = report.sufficient;
  nlohmann::json rho_list = nlohmann::json::array();
  for (double v : suff.vertex_rho) rho_list.push_back(number(v));
  out["sufficient"] = {{"mode", sufficiency_mode_name(suff.mode)},
                       {"heuristic", suff.heuristic},
                       {"vacuous", suff.vacuous},
                       {"rho", number(suff.rho)},
                       {"rho_min", suff.rho_min},
                       {"vertex", suff.vertex},
                       {"vertex_rho", rho_list},
                       {"direction_values", suff.direction_values},
                       {"face", suff.face},
                       {"note", suff.note}};
  nlohmann::json used = nlohmann::json::array();
  for (const auto& v : report.forms_multipliers) used.push_back(vector_json(v));
  out["form_multipliers"] = used;
  out["cone"] = report.cone;
  return out;
}

nlohmann::json direction_to_json(const ConeDiscretization& cone, const SampleLayout& layout, const Vector& p) {
  const TransformedDirection dir = cone.expand(p);
  nlohmann::json out;
  out["parameters"] = vector_json(p);
  std::vector<double> times;
  for (int s = 0; s < layout.num_samples(); ++s) times.push_back(layout.time(s));
  out["t"] = times;
  nlohmann::json y = nlohmann::json::array();
  for (int i = 0; i < dir.y.rows(); ++i) y.push_back(vector_json(dir.y.row(i).transpose()));
  out["y"] = y;
  out["h"] = vector_json(dir.h);
  return out;
}

}  // namespace bsc
