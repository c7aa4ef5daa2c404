#pragma once

#include <functional>
#include <vector>

#include "bsc/problem.hpp"
#include "bsc/trajectory.hpp"

namespace bsc {

// Sample-wise linearization of Xdot = sum_i u_i F_i(X) along the candidate,
// with F_i = (f_i, 0) on the augmented state X = (x, r).
struct Linearization {
  SampledTrajectory traj;
  std::vector<Matrix> A;     // sum_i u_i F_i'
  std::vector<Matrix> B;     // columns F_1 .. F_m
  std::vector<Matrix> Bdot;  // columns F_j' Xdot
  std::vector<Matrix> B1;    // A B - Bdot
  std::vector<std::vector<Matrix>> field_jacobians;  // [sample][i], i = 0..m

  int augmented_dim() const { return traj.augmented_dim(); }
  int num_samples() const { return traj.num_samples(); }
};

Linearization compute_linearization(const ControlAffineProblem& problem, const SampledTrajectory& traj);

// Integrates zeta' = A zeta + forcing(s) with RK4 over each interval, using
// the left/mid/right samples for the stages, and returns zeta at every
// sample (Hermite cubic at midpoints). zeta may have several columns.
std::vector<Matrix> integrate_linear(const Linearization& lin, const Matrix& initial,
                                     const std::function<Matrix(int sample)>& forcing);

// Lifts the gradient or Hessian of an endpoint function over (x0, xT, r)
// to the augmented endpoint pair (X(0), X(T)), of size 2 (n + n_r).
Vector augment_endpoint_gradient(const Vector& gradient, int n, int n_r);
Matrix augment_endpoint_hessian(const Matrix& hessian, int n, int n_r);

}  // namespace bsc
