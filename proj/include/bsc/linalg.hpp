#pragma once

#include <functional>
#include <vector>

#include "bsc/problem.hpp"

namespace bsc {

// Orthonormal basis (as columns) of {w : A w = 0}, keeping right singular
// vectors whose singular value is at most sigma_tol.
Matrix nullspace(const Matrix& A, double sigma_tol);

// Extreme rays of the pointed cone {w : G w >= 0} by double description.
// Rows are normalised first; rays come back with unit 2-norm. Throws
// ErrorCode::kUnbounded when the cone contains a line.
std::vector<Vector> extreme_rays(const Matrix& G, double tol = 1e-10);

// Minimum-norm point of the convex hull of the columns of `points`
// (Wolfe's algorithm). Weights are a convex combination reproducing it.
struct MinNormPoint {
  Vector weights;
  Vector point;
};
MinNormPoint min_norm_point(const Matrix& points);

// min p^T W p subject to p^T Gamma p = 1, with Gamma symmetric positive
// semidefinite. Directions in ker(Gamma) are eliminated through a Schur
// complement; the value is -infinity when W is unbounded below there.
struct PencilMin {
  double value = 0.0;
  Vector direction;  // p^T Gamma p = 1 unless the value is unbounded
  int kernel_dim = 0;
  bool unbounded = false;
};
PencilMin pencil_min(const Matrix& W, const Matrix& Gamma, double relative_tol = 1e-10);

// Runtime cap on worker threads for the parallel stages (0 = hardware).
void set_thread_limit(int threads);
int thread_limit();
// Runs body(0..count-1); each index writes only its own output slot so the
// result does not depend on the schedule.
void parallel_for(int count, const std::function<void(int)>& body);

}  // namespace bsc
