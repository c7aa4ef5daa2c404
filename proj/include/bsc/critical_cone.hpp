#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "bsc/goh.hpp"

namespace bsc {

// Finite-dimensional model of the closed transformed critical cone. The
// parameter vector p holds, per control component: one constant per bang
// arc (none on an arc starting at 0, the terminal value h_i on an arc
// ending at T), one nodal value per node of each singular arc (so y may
// jump at arc boundaries) and h_i unless it is pinned to zero; then xi_x(0)
// when the initial state is free, then delta r.
struct ConeParameter {
  enum class Kind { kBangConstant, kSingularNode, kTerminal, kInitialState, kParameter };
  Kind kind = Kind::kBangConstant;
  int component = 0;  // control component, or state/parameter index
  int node = -1;      // grid node for kSingularNode, first node of the arc for kBangConstant
};

struct ConeDiscretization {
  int dim = 0;
  std::vector<ConeParameter> parameters;
  std::vector<Matrix> Y;    // per sample: m x dim
  std::vector<Matrix> Xi;   // per sample: (n + n_r) x dim
  Matrix H;                 // m x dim
  Matrix equality_rows;     // eta' (xi(0), xi(T) + B(T) h) = 0
  Matrix inequality_rows;   // phi' (...) <= 0 for the cost and active inequalities
  std::vector<int> inequality_index;  // endpoint index (0 = cost) of each inequality row
  Matrix Z;                 // orthonormal basis of the equality null space
  int equality_rank = 0;

  int reduced_dim() const { return static_cast<int>(Z.cols()); }
  // (xi, y, h) for a full parameter vector.
  TransformedDirection expand(const Vector& p) const;
  // True when p or -p satisfies every inequality row (up to tol * |row| |p|).
  bool in_cone_up_to_sign(const Vector& p, double tol, bool* flipped = nullptr) const;
};

// Throws ErrorCode::kEmptyCone when the equalities leave only p = 0.
ConeDiscretization discretize_cone(const ControlAffineProblem& problem, const Linearization& lin,
                                   const Tolerances& tolerances);

// Restricts the cone to the face where the listed inequality rows are tight.
ConeDiscretization restrict_to_face(const ConeDiscretization& cone, const std::vector<int>& active_rows);

// Full-space bilinear forms: p^T W p equals the closure form of expand(p)
// and p^T Gamma p = int |y|^2 + |h|^2.
Matrix assemble_form(const ConeDiscretization& cone, const Linearization& lin, const CoefficientSeries& coeffs);
Matrix assemble_gamma(const ConeDiscretization& cone, const Linearization& lin);

// Forms restricted to the equality null space, one per multiplier.
struct ReducedForms {
  std::vector<Vector> multipliers;
  std::vector<Matrix> W;
  Matrix gamma;
  Matrix Z;

  int dim() const { return static_cast<int>(Z.cols()); }
  double scale() const;  // largest Frobenius norm among the W
};

ReducedForms reduce_forms(const ConeDiscretization& cone, const Linearization& lin, const GohCoefficients& coeffs,
                          const std::vector<Vector>& multipliers);

nlohmann::json cone_summary(const ConeDiscretization& cone, const ArcStructure& arcs);

}  // namespace bsc
