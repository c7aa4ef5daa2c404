#pragma once

#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "bsc/critical_cone.hpp"

namespace bsc {

// Goh condition V[lambda] = 0 on the overlap of singular arcs, for some
// lambda in the convex hull of the vertices. Feasibility is decided with a
// minimum-norm-point computation; a nonzero minimiser p separates: every
// vertex has p . a_k >= |p|^2 > 0.
struct GohConditionResult {
  bool applicable = false;  // m >= 2 and some singular arcs overlap
  bool satisfiable = true;
  double distance = 0.0;     // |min-norm point|_inf
  double tolerance = 0.0;
  Vector weights;            // convex weights of the min-norm point
  Vector separating;         // empty when satisfiable
  std::vector<bool> vertex_satisfies;
  std::vector<Vector> feasible_vertices;  // vertices of G(co Lambda)
};

GohConditionResult check_goh_condition(const MultiplierPolytope& polytope, const Linearization& lin,
                                       const GohCoefficients& coeffs, const Tolerances& tolerances);

struct LegendreResult {
  bool passed = false;
  double min_eigenvalue = 0.0;  // best vertex's minimum over singular samples
  double time = 0.0;            // where that minimum is attained
  int vertex = -1;
  double tolerance = 0.0;
  std::vector<double> per_vertex;
};

LegendreResult check_legendre(const Linearization& lin, const GohCoefficients& coeffs,
                              const std::vector<Vector>& multipliers, const Tolerances& tolerances);

enum class NecessaryVerdict { kPassed, kViolated, kUndecided };
const char* necessary_verdict_name(NecessaryVerdict verdict);

// Bounds on nu* = min_{p^T Gamma p = 1} max_k p^T W_k p. The lower bound is
// max over convex weights of the pencil minimum of sum mu_k W_k.
struct NecessaryResult {
  NecessaryVerdict verdict = NecessaryVerdict::kUndecided;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double tolerance = 0.0;
  Vector direction;  // full cone parameters of the best upper-bound direction
  std::string note;
};

NecessaryResult check_necessary_quadratic(const ReducedForms& forms, const ConeDiscretization& cone,
                                          const Tolerances& tolerances);

enum class SufficiencyMode { kSingleMultiplier, kFalsified, kInconclusive };
const char* sufficiency_mode_name(SufficiencyMode mode);

struct SufficiencyResult {
  SufficiencyMode mode = SufficiencyMode::kInconclusive;
  bool heuristic = false;  // m >= 2: the certificate is not backed by a proof
  bool vacuous = false;    // zero-dimensional cone
  double rho = 0.0;        // certified coercivity constant, or the best vertex value
  int vertex = -1;
  double rho_min = 0.0;
  std::vector<double> vertex_rho;
  Vector direction;        // full cone parameters; for FALSIFIED a counterexample
  std::vector<double> direction_values;  // Omega_k(direction) for every vertex
  std::vector<int> face;   // inequality rows made tight (active-set mode)
  std::string note;
};

struct SufficiencyOptions {
  bool active_set = false;
  int max_face_rows = 10;
};

SufficiencyResult check_sufficient(const ReducedForms& forms, const ConeDiscretization& cone, int num_controls,
                                   const Tolerances& tolerances, const SufficiencyOptions& options = {});

// End-to-end certification of a candidate.
struct CertifyOptions {
  Tolerances tolerances;
  bool active_set = false;
  bool necessary_mode = false;  // exit status follows the necessary checks
};

struct CertificationReport {
  ValidationReport validation;
  std::optional<MultiplierPolytope> polytope;
  std::optional<FirstOrderReport> first_order;
  std::string first_order_error;
  GohConditionResult goh;
  LegendreResult legendre;
  NecessaryResult necessary;
  SufficiencyResult sufficient;
  nlohmann::json cone;
  std::vector<Vector> forms_multipliers;  // multipliers used for the quadratic forms
  int grid_intervals = 0;

  int exit_status(bool necessary_mode) const;
};

// Intermediate objects kept for callers that export coefficients or
// re-evaluate directions.
struct CertificationState {
  std::optional<Linearization> lin;
  std::optional<AdjointBasis> basis;
  std::optional<GohCoefficients> coeffs;
  std::optional<ConeDiscretization> cone;
  std::optional<ReducedForms> forms;
};

CertificationReport certify(const ControlAffineProblem& problem, const Extremal& extremal,
                            const CertifyOptions& options = {}, CertificationState* state = nullptr);

nlohmann::json report_to_json(const CertificationReport& report, const Tolerances& tolerances);
// Cone parameters expanded to (y, h) samples for a counterexample file.
nlohmann::json direction_to_json(const ConeDiscretization& cone, const SampleLayout& layout, const Vector& p);

}  // namespace bsc
