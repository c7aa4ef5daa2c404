#pragma once

#include <nlohmann/json.hpp>
#include <vector>

#include "bsc/linearization.hpp"
#include "bsc/tolerances.hpp"

namespace bsc {

// One costate per multiplier coordinate: psi^(k) solves psi' = -psi A with
// psi^(k)(T) = d l^(k)/dX(T), where l^(k) is the k-th endpoint function.
// Any multiplier's costate is the linear combination with weights lambda.
struct AdjointBasis {
  int dim = 0;
  std::vector<Matrix> psi_nodes;    // per coordinate: (n + n_r) x nodes
  std::vector<Matrix> psi_samples;  // per coordinate: (n + n_r) x samples
  Matrix transversality;            // (n + n_r) x dim: psi^(k)(0) + d l^(k)/dX(0)
  Matrix switching;                 // (m * nodes) x dim: H_u_i at node k in row i * nodes + k
  Matrix terminal;                  // (n + n_r) x dim: psi^(k)(T)

  // psi_lambda at the nodes.
  Matrix costate(const Vector& lambda) const;
};

AdjointBasis build_adjoint_basis(const ControlAffineProblem& problem, const Linearization& lin);

// Direct backward integration for one multiplier (no superposition).
Matrix integrate_costate(const ControlAffineProblem& problem, const Linearization& lin, const Vector& lambda);

// Lambda = {(alpha, beta) : alpha >= 0, sum alpha + sum |beta| = 1,
//           stationarity on singular arcs, sign conditions on bang arcs,
//           transversality}. Vertices are enumerated per beta sign orthant.
struct MultiplierPolytope {
  int dim = 0;
  int num_alpha = 0;
  int num_beta = 0;
  Matrix equalities;    // E lambda = 0
  Matrix inequalities;  // G lambda >= 0 (alpha signs and bang-arc switching signs)
  Matrix kernel;        // orthonormal basis of the numerical null space of E
  double tol_stationarity = 0.0;
  bool lifted = false;  // beta = beta+ - beta- enumeration was used
  std::vector<Vector> vertices;
};

// Throws ErrorCode::kEmptyPolytope when no multiplier exists.
MultiplierPolytope assemble_polytope(const ControlAffineProblem& problem, const Linearization& lin,
                                     const AdjointBasis& basis, const Tolerances& tolerances);

struct FirstOrderReport {
  bool normal = false;
  double min_alpha0 = 0.0;
  bool strict_complementarity = true;
  double complementarity_margin = 0.0;  // smallest |H_u| with the right sign on bang interiors
  int margin_component = -1;
  int margin_node = -1;
  double stationarity_residual = 0.0;   // max |H_u| over vertices and singular nodes
  Matrix switching_max;                 // m x nodes, max over vertices
  Matrix switching_min;                 // m x nodes, min over vertices
};

FirstOrderReport check_first_order(const ControlAffineProblem& problem, const Linearization& lin,
                                   const AdjointBasis& basis, const MultiplierPolytope& polytope,
                                   const Tolerances& tolerances);

// Unscaled pre-Hamiltonian psi . sum_i u_i f_i at every sample.
Vector hamiltonian_samples(const Linearization& lin, const AdjointBasis& basis, const Vector& lambda);

nlohmann::json polytope_to_json(const MultiplierPolytope& polytope);

}  // namespace bsc
