#include "bsc/linearization.hpp"

#include "bsc/errors.hpp"

namespace bsc {
namespace {

Matrix augmented_jacobian(const VectorField& f, const Vector& X, int n, int n_r) {
  Matrix J = Matrix::Zero(n + n_r, n + n_r);
  J.topRows(n) = f.jacobian(X.head(n), X.tail(n_r));
  return J;
}

// Index map from (x0, xT, r) to (X(0), X(T)).
std::vector<int> endpoint_index_map(int n, int n_r) {
  const int d = n + n_r;
  std::vector<int> map(2 * n + n_r);
  for (int i = 0; i < n; ++i) {
    map[i] = i;
    map[n + i] = d + i;
  }
  for (int j = 0; j < n_r; ++j) map[2 * n + j] = n + j;
  return map;
}

}  // namespace

Linearization compute_linearization(const ControlAffineProblem& problem, const SampledTrajectory& traj) {
  const int n = problem.n;
  const int nr = problem.n_r;
  const int m = problem.m;
  const int d = n + nr;
  const int S = traj.num_samples();
  Linearization lin;
  lin.traj = traj;
  lin.A.resize(S);
  lin.B.resize(S);
  lin.Bdot.resize(S);
  lin.B1.resize(S);
  lin.field_jacobians.resize(S);
  for (int s = 0; s < S; ++s) {
    const Vector X = traj.X.col(s);
    auto& jac = lin.field_jacobians[s];
    jac.resize(m + 1);
    Matrix A = Matrix::Zero(d, d);
    Matrix B = Matrix::Zero(d, m);
    for (int i = 0; i <= m; ++i) {
      jac[i] = augmented_jacobian(problem.fields[i], X, n, nr);
      A += (i == 0 ? 1.0 : traj.U(i - 1, s)) * jac[i];
      if (i > 0) B.col(i - 1).head(n) = problem.fields[i].eval(X.head(n), X.tail(nr));
    }
    Matrix Bdot(d, m);
    for (int j = 0; j < m; ++j) Bdot.col(j) = jac[j + 1] * traj.Xdot.col(s);
    lin.B1[s] = A * B - Bdot;
    lin.A[s] = std::move(A);
    lin.B[s] = std::move(B);
    lin.Bdot[s] = std::move(Bdot);
  }
  return lin;
}

std::vector<Matrix> integrate_linear(const Linearization& lin, const Matrix& initial,
                                     const std::function<Matrix(int sample)>& forcing) {
  const TimeGrid& grid = lin.traj.layout.grid;
  if (initial.rows() != lin.augmented_dim())
    throw Error(ErrorCode::kDimensionMismatch, "initial value has wrong dimension");
  std::vector<Matrix> out(lin.num_samples());
  Matrix z = initial;
  for (int k = 0; k < grid.num_intervals(); ++k) {
    const double h = grid.step(k);
    const int l = 3 * k, c = l + 1, r = l + 2;
    const Matrix Fl = forcing(l), Fc = forcing(c), Fr = forcing(r);
    const Matrix k1 = lin.A[l] * z + Fl;
    const Matrix k2 = lin.A[c] * (z + 0.5 * h * k1) + Fc;
    const Matrix k3 = lin.A[c] * (z + 0.5 * h * k2) + Fc;
    const Matrix k4 = lin.A[r] * (z + h * k3) + Fr;
    const Matrix next = z + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    const Matrix dnext = lin.A[r] * next + Fr;
    out[l] = z;
    out[c] = 0.5 * (z + next) + h / 8.0 * (k1 - dnext);
    out[r] = next;
    z = next;
  }
  return out;
}

Vector augment_endpoint_gradient(const Vector& gradient, int n, int n_r) {
  const auto map = endpoint_index_map(n, n_r);
  Vector out = Vector::Zero(2 * (n + n_r));
  for (size_t i = 0; i < map.size(); ++i) out[map[i]] = gradient[i];
  return out;
}

Matrix augment_endpoint_hessian(const Matrix& hessian, int n, int n_r) {
  const auto map = endpoint_index_map(n, n_r);
  Matrix out = Matrix::Zero(2 * (n + n_r), 2 * (n + n_r));
  for (size_t i = 0; i < map.size(); ++i)
    for (size_t j = 0; j < map.size(); ++j) out(map[i], map[j]) = hessian(i, j);
  return out;
}

}  // namespace bsc
