#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bsc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A smooth map (x, r) -> R^n. Derivatives are taken with respect to the
// stacked argument z = (x, r), so the Jacobian is n x (n + n_r).
class VectorField {
 public:
  using Eval = std::function<Vector(const Vector& x, const Vector& r)>;
  using Jacobian = std::function<Matrix(const Vector& x, const Vector& r)>;
  // Hessian of the scalar w . f(x, r) with respect to (x, r).
  using WeightedHessian =
      std::function<Matrix(const Vector& x, const Vector& r, const Vector& w)>;

  VectorField() = default;
  VectorField(int state_dim, int param_dim, Eval eval, Jacobian jacobian,
              WeightedHessian weighted_hessian);

  // Derivatives are filled in by finite differences of `eval`.
  static VectorField from_values(int state_dim, int param_dim, Eval eval);

  int state_dim() const { return n_; }
  int param_dim() const { return n_r_; }
  bool analytic_jacobian() const { return analytic_jacobian_; }
  bool analytic_hessian() const { return analytic_hessian_; }

  Vector eval(const Vector& x, const Vector& r) const;
  Matrix jacobian(const Vector& x, const Vector& r) const;
  Matrix weighted_hessian(const Vector& x, const Vector& r, const Vector& w) const;

 private:
  friend VectorField finite_difference_derivatives(const VectorField& field);
  friend VectorField lie_bracket(const VectorField& f, const VectorField& g);

  int n_ = 0;
  int n_r_ = 0;
  Eval eval_;
  Jacobian jacobian_;
  WeightedHessian hessian_;
  bool analytic_jacobian_ = false;
  bool analytic_hessian_ = false;
};

// Scalar endpoint function of (x(0), x(T), r). The gradient and Hessian use
// the stacked ordering (x0, xT, r) of length 2n + n_r.
class EndpointFunction {
 public:
  using Eval = std::function<double(const Vector& x0, const Vector& xT, const Vector& r)>;
  using Gradient = std::function<Vector(const Vector& x0, const Vector& xT, const Vector& r)>;
  using Hessian = std::function<Matrix(const Vector& x0, const Vector& xT, const Vector& r)>;

  EndpointFunction() = default;
  EndpointFunction(int state_dim, int param_dim, Eval eval, Gradient gradient, Hessian hessian);
  static EndpointFunction from_values(int state_dim, int param_dim, Eval eval);

  // a . (x0, xT, r) + c plus 0.5 z^T P z; convenient for fixtures.
  static EndpointFunction quadratic(int state_dim, int param_dim, const Vector& linear,
                                    const Matrix& quadratic, double constant);

  int state_dim() const { return n_; }
  int param_dim() const { return n_r_; }
  bool analytic() const { return analytic_; }

  double eval(const Vector& x0, const Vector& xT, const Vector& r) const;
  Vector gradient(const Vector& x0, const Vector& xT, const Vector& r) const;
  Matrix hessian(const Vector& x0, const Vector& xT, const Vector& r) const;

 private:
  friend EndpointFunction finite_difference_derivatives(const EndpointFunction& fn);

  int n_ = 0;
  int n_r_ = 0;
  Eval eval_;
  Gradient gradient_;
  Hessian hessian_;
  bool analytic_ = false;
};

// Replaces the derivatives of a field or endpoint function by finite
// differences of its values (central differences; Jacobian step
// cbrt(eps) * (1 + |z_j|), Hessian step eps^(1/4) * (1 + |z_j|)).
VectorField finite_difference_derivatives(const VectorField& field);
EndpointFunction finite_difference_derivatives(const EndpointFunction& fn);

// x-bracket [f, g] = f_x g - g_x f, with r held fixed. The Jacobian is exact
// given second derivatives of f and g; the Hessian is a central difference
// of that Jacobian.
VectorField lie_bracket(const VectorField& f, const VectorField& g);

// Control-affine problem
//   xdot = f0(x, r) + sum_i u_i f_i(x, r),  a <= u <= b,
//   min phi0(x0, xT, r)  s.t.  phi_i <= 0,  eta_j = 0.
struct ControlAffineProblem {
  int n = 0;
  int m = 0;
  int n_r = 0;
  std::vector<VectorField> fields;  // m + 1 entries, fields[0] is the drift
  EndpointFunction cost;
  std::vector<EndpointFunction> inequalities;
  std::vector<EndpointFunction> equalities;
  Vector lower;
  Vector upper;
  double horizon = 1.0;
  bool free_horizon = false;
  std::optional<Vector> fixed_initial_state;
  std::vector<std::string> parameter_names;

  // Throws bsc::Error when dimensions or bounds are inconsistent.
  void check() const;

  int augmented_dim() const { return n + n_r; }
  int num_inequalities() const { return static_cast<int>(inequalities.size()); }
  int num_equalities() const { return static_cast<int>(equalities.size()); }
  // Multiplier coordinates are (alpha_0, ..., alpha_dphi, beta_1, ..., beta_deta).
  int multiplier_dim() const { return 1 + num_inequalities() + num_equalities(); }
  // k-th endpoint function in multiplier ordering: cost, inequalities, equalities.
  const EndpointFunction& endpoint(int k) const;
};

// Maps a free-horizon problem onto s in [0, 1] with T appended as a parameter:
// fields are scaled by T, the cost becomes T and the horizon is fixed to 1.
// The original cost is dropped, so this is for time-optimal problems.
ControlAffineProblem rescale_free_time(const ControlAffineProblem& problem);

}  // namespace bsc
