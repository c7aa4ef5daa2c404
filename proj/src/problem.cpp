#include "bsc/problem.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "bsc/errors.hpp"

namespace bsc {
namespace {

const double kJacobianStep = std::cbrt(std::numeric_limits<double>::epsilon());
const double kHessianStep = std::pow(std::numeric_limits<double>::epsilon(), 0.25);

void require_dim(const Vector& v, int expected, const char* what) {
  if (v.size() != expected) {
    std::ostringstream msg;
    msg << what << " has length " << v.size() << ", expected " << expected;
    throw Error(ErrorCode::kDimensionMismatch, msg.str());
  }
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* what) {
  if (!v.allFinite()) throw Error(ErrorCode::kNonFinite, std::string(what) + " is not finite");
}

// Central differences of a map z -> R^k.
template <typename F>
Matrix fd_jacobian(const F& f, const Vector& z) {
  Vector probe = z;
  Matrix jac;
  for (int j = 0; j < z.size(); ++j) {
    const double h = kJacobianStep * (1.0 + std::abs(z[j]));
    probe[j] = z[j] + h;
    const Vector fp = f(probe);
    probe[j] = z[j] - h;
    const Vector fm = f(probe);
    probe[j] = z[j];
    if (j == 0) jac.resize(fp.size(), z.size());
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  if (z.size() == 0) jac.resize(f(z).size(), 0);
  return jac;
}

template <typename F>
Matrix fd_hessian(const F& g, const Vector& z) {
  const int d = static_cast<int>(z.size());
  Matrix hess(d, d);
  Vector probe = z;
  for (int j = 0; j < d; ++j) {
    const double hj = kHessianStep * (1.0 + std::abs(z[j]));
    for (int k = j; k < d; ++k) {
      const double hk = kHessianStep * (1.0 + std::abs(z[k]));
      auto at = [&](double sj, double sk) {
        probe = z;
        probe[j] += sj * hj;
        probe[k] += sk * hk;
        return g(probe);
      };
      const double value = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * hj * hk);
      hess(j, k) = value;
      hess(k, j) = value;
    }
  }
  return hess;
}

}  // namespace

VectorField::VectorField(int state_dim, int param_dim, Eval eval, Jacobian jacobian,
                         WeightedHessian weighted_hessian)
    : n_(state_dim), n_r_(param_dim), eval_(std::move(eval)) {
  if (!eval_) throw Error(ErrorCode::kInvalidArgument, "vector field without evaluator");
  analytic_jacobian_ = static_cast<bool>(jacobian);
  analytic_hessian_ = static_cast<bool>(weighted_hessian);
  jacobian_ = std::move(jacobian);
  hessian_ = std::move(weighted_hessian);
}

VectorField VectorField::from_values(int state_dim, int param_dim, Eval eval) {
  return VectorField(state_dim, param_dim, std::move(eval), nullptr, nullptr);
}

Vector VectorField::eval(const Vector& x, const Vector& r) const {
  require_dim(x, n_, "state");
  require_dim(r, n_r_, "parameter");
  Vector value = eval_(x, r);
  require_dim(value, n_, "field value");
  require_finite(value, "field value");
  return value;
}

Matrix VectorField::jacobian(const Vector& x, const Vector& r) const {
  require_dim(x, n_, "state");
  require_dim(r, n_r_, "parameter");
  Matrix jac;
  if (jacobian_) {
    jac = jacobian_(x, r);
  } else {
    Vector z(n_ + n_r_);
    z << x, r;
    jac = fd_jacobian([&](const Vector& p) { return eval_(p.head(n_), p.tail(n_r_)); }, z);
  }
  if (jac.rows() != n_ || jac.cols() != n_ + n_r_)
    throw Error(ErrorCode::kDimensionMismatch, "field Jacobian has wrong shape");
  require_finite(jac, "field Jacobian");
  return jac;
}

Matrix VectorField::weighted_hessian(const Vector& x, const Vector& r, const Vector& w) const {
  require_dim(x, n_, "state");
  require_dim(r, n_r_, "parameter");
  require_dim(w, n_, "weight");
  const int d = n_ + n_r_;
  Matrix hess;
  Vector z(d);
  z << x, r;
  if (hessian_) {
    hess = hessian_(x, r, w);
  } else if (jacobian_) {
    // Differentiate w^T J once more; the Jacobian is already exact.
    hess = fd_jacobian(
        [&](const Vector& p) -> Vector {
          return (w.transpose() * jacobian_(p.head(n_), p.tail(n_r_))).transpose();
        },
        z);
    hess = 0.5 * (hess + hess.transpose()).eval();
  } else {
    hess = fd_hessian([&](const Vector& p) { return w.dot(eval_(p.head(n_), p.tail(n_r_))); }, z);
  }
  if (hess.rows() != d || hess.cols() != d)
    throw Error(ErrorCode::kDimensionMismatch, "field Hessian has wrong shape");
  require_finite(hess, "field Hessian");
  return hess;
}

VectorField finite_difference_derivatives(const VectorField& field) {
  return VectorField(field.n_, field.n_r_, field.eval_, nullptr, nullptr);
}

VectorField lie_bracket(const VectorField& f, const VectorField& g) {
  if (f.state_dim() != g.state_dim() || f.param_dim() != g.param_dim())
    throw Error(ErrorCode::kDimensionMismatch, "bracket of fields on different spaces");
  const int n = f.state_dim();
  auto value = [f, g, n](const Vector& x, const Vector& r) -> Vector {
    return f.jacobian(x, r).leftCols(n) * g.eval(x, r) - g.jacobian(x, r).leftCols(n) * f.eval(x, r);
  };
  auto jacobian = [f, g, n](const Vector& x, const Vector& r) -> Matrix {
    const Vector fv = f.eval(x, r);
    const Vector gv = g.eval(x, r);
    const Matrix fj = f.jacobian(x, r);
    const Matrix gj = g.jacobian(x, r);
    Matrix jac = fj.leftCols(n) * gj - gj.leftCols(n) * fj;
    Vector e = Vector::Zero(n);
    for (int k = 0; k < n; ++k) {
      e[k] = 1.0;
      // d/dz (f_k)_x g = Hess(f_k)[:, x] g, and likewise for the second term.
      jac.row(k) += (f.weighted_hessian(x, r, e).leftCols(n) * gv).transpose();
      jac.row(k) -= (g.weighted_hessian(x, r, e).leftCols(n) * fv).transpose();
      e[k] = 0.0;
    }
    return jac;
  };
  VectorField bracket(n, f.param_dim(), value, jacobian, nullptr);
  bracket.analytic_jacobian_ = f.analytic_hessian() && g.analytic_hessian();
  return bracket;
}

EndpointFunction::EndpointFunction(int state_dim, int param_dim, Eval eval, Gradient gradient,
                                   Hessian hessian)
    : n_(state_dim), n_r_(param_dim), eval_(std::move(eval)) {
  if (!eval_) throw Error(ErrorCode::kInvalidArgument, "endpoint function without evaluator");
  analytic_ = static_cast<bool>(gradient) && static_cast<bool>(hessian);
  if (analytic_) {
    gradient_ = std::move(gradient);
    hessian_ = std::move(hessian);
  }
}

EndpointFunction EndpointFunction::from_values(int state_dim, int param_dim, Eval eval) {
  return EndpointFunction(state_dim, param_dim, std::move(eval), nullptr, nullptr);
}

EndpointFunction EndpointFunction::quadratic(int state_dim, int param_dim, const Vector& linear,
                                             const Matrix& quadratic, double constant) {
  const int d = 2 * state_dim + param_dim;
  if (linear.size() != d || quadratic.rows() != d || quadratic.cols() != d)
    throw Error(ErrorCode::kDimensionMismatch, "quadratic endpoint coefficients");
  const Matrix sym = 0.5 * (quadratic + quadratic.transpose());
  auto stack = [state_dim, param_dim](const Vector& x0, const Vector& xT, const Vector& r) {
    Vector z(2 * state_dim + param_dim);
    z << x0, xT, r;
    return z;
  };
  return EndpointFunction(
      state_dim, param_dim,
      [=](const Vector& x0, const Vector& xT, const Vector& r) {
        const Vector z = stack(x0, xT, r);
        return constant + linear.dot(z) + 0.5 * z.dot(sym * z);
      },
      [=](const Vector& x0, const Vector& xT, const Vector& r) -> Vector {
        return linear + sym * stack(x0, xT, r);
      },
      [=](const Vector&, const Vector&, const Vector&) -> Matrix { return sym; });
}

double EndpointFunction::eval(const Vector& x0, const Vector& xT, const Vector& r) const {
  require_dim(x0, n_, "initial state");
  require_dim(xT, n_, "final state");
  require_dim(r, n_r_, "parameter");
  const double value = eval_(x0, xT, r);
  if (!std::isfinite(value)) throw Error(ErrorCode::kNonFinite, "endpoint value is not finite");
  return value;
}

Vector EndpointFunction::gradient(const Vector& x0, const Vector& xT, const Vector& r) const {
  require_dim(x0, n_, "initial state");
  require_dim(xT, n_, "final state");
  require_dim(r, n_r_, "parameter");
  Vector grad;
  if (gradient_) {
    grad = gradient_(x0, xT, r);
  } else {
    Vector z(2 * n_ + n_r_);
    z << x0, xT, r;
    const Matrix jac = fd_jacobian(
        [&](const Vector& p) {
          Vector out(1);
          out[0] = eval_(p.head(n_), p.segment(n_, n_), p.tail(n_r_));
          return out;
        },
        z);
    grad = jac.row(0).transpose();
  }
  require_dim(grad, 2 * n_ + n_r_, "endpoint gradient");
  require_finite(grad, "endpoint gradient");
  return grad;
}

Matrix EndpointFunction::hessian(const Vector& x0, const Vector& xT, const Vector& r) const {
  require_dim(x0, n_, "initial state");
  require_dim(xT, n_, "final state");
  require_dim(r, n_r_, "parameter");
  const int d = 2 * n_ + n_r_;
  Matrix hess;
  if (hessian_) {
    hess = hessian_(x0, xT, r);
  } else {
    Vector z(d);
    z << x0, xT, r;
    hess = fd_hessian([&](const Vector& p) { return eval_(p.head(n_), p.segment(n_, n_), p.tail(n_r_)); },
                      z);
  }
  if (hess.rows() != d || hess.cols() != d)
    throw Error(ErrorCode::kDimensionMismatch, "endpoint Hessian has wrong shape");
  require_finite(hess, "endpoint Hessian");
  return hess;
}

EndpointFunction finite_difference_derivatives(const EndpointFunction& fn) {
  return EndpointFunction(fn.n_, fn.n_r_, fn.eval_, nullptr, nullptr);
}

void ControlAffineProblem::check() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::kDimensionMismatch, msg); };
  if (n <= 0 || m <= 0 || n_r < 0) fail("problem needs n > 0, m > 0, n_r >= 0");
  if (static_cast<int>(fields.size()) != m + 1) fail("expected m + 1 vector fields");
  for (const auto& f : fields)
    if (f.state_dim() != n || f.param_dim() != n_r) fail("vector field dimensions disagree with problem");
  auto check_endpoint = [&](const EndpointFunction& e) {
    if (e.state_dim() != n || e.param_dim() != n_r) fail("endpoint function dimensions disagree with problem");
  };
  check_endpoint(cost);
  for (const auto& e : inequalities) check_endpoint(e);
  for (const auto& e : equalities) check_endpoint(e);
  if (lower.size() != m || upper.size() != m) fail("control bounds must have length m");
  for (int i = 0; i < m; ++i)
    if (!(lower[i] < upper[i]))
      throw Error(ErrorCode::kInvalidArgument, "control bounds need a_i < b_i");
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw Error(ErrorCode::kInvalidArgument, "horizon must be positive");
  if (fixed_initial_state && fixed_initial_state->size() != n) fail("fixed initial state has wrong length");
  if (!parameter_names.empty() && static_cast<int>(parameter_names.size()) != n_r)
    fail("parameter names must match n_r");
}

const EndpointFunction& ControlAffineProblem::endpoint(int k) const {
  if (k == 0) return cost;
  if (k <= num_inequalities()) return inequalities[k - 1];
  const int j = k - 1 - num_inequalities();
  if (j < num_equalities()) return equalities[j];
  throw Error(ErrorCode::kInvalidArgument, "endpoint index out of range");
}

ControlAffineProblem rescale_free_time(const ControlAffineProblem& problem) {
  problem.check();
  if (!problem.free_horizon)
    throw Error(ErrorCode::kInvalidArgument, "rescale_free_time needs a free-horizon problem");
  for (const auto& name : problem.parameter_names)
    if (name == "T") throw Error(ErrorCode::kInvalidArgument, "problem already has a parameter named T");

  const int n = problem.n;
  const int nr = problem.n_r;
  ControlAffineProblem out = problem;
  out.n_r = nr + 1;
  out.horizon = 1.0;
  out.free_horizon = false;
  out.parameter_names = problem.parameter_names;
  if (out.parameter_names.empty())
    for (int j = 0; j < nr; ++j) out.parameter_names.push_back("r" + std::to_string(j));
  out.parameter_names.push_back("T");

  out.fields.clear();
  for (const auto& f : problem.fields) {
    const bool exact = f.analytic_jacobian();
    const bool exact_hessian = f.analytic_hessian();
    auto eval = [f, nr](const Vector& x, const Vector& r) -> Vector {
      return r[nr] * f.eval(x, r.head(nr));
    };
    // d(T f)/d(x, r, T) = [T f_x, T f_r, f]
    VectorField::Jacobian jac = nullptr;
    if (exact)
      jac = [f, n, nr](const Vector& x, const Vector& r) -> Matrix {
        Matrix j(n, n + nr + 1);
        j.leftCols(n + nr) = r[nr] * f.jacobian(x, r.head(nr));
        j.col(n + nr) = f.eval(x, r.head(nr));
        return j;
      };
    VectorField::WeightedHessian hess = nullptr;
    if (exact && exact_hessian)
      hess = [f, n, nr](const Vector& x, const Vector& r, const Vector& w) -> Matrix {
        const int d = n + nr;
        Matrix h = Matrix::Zero(d + 1, d + 1);
        h.topLeftCorner(d, d) = r[nr] * f.weighted_hessian(x, r.head(nr), w);
        const Vector cross = (w.transpose() * f.jacobian(x, r.head(nr))).transpose();
        h.block(0, d, d, 1) = cross;
        h.block(d, 0, 1, d) = cross.transpose();
        return h;
      };
    out.fields.emplace_back(n, nr + 1, eval, jac, hess);
  }

  auto extend = [n, nr](const EndpointFunction& e) {
    const bool exact = e.analytic();
    auto eval = [e, nr](const Vector& x0, const Vector& xT, const Vector& r) {
      return e.eval(x0, xT, r.head(nr));
    };
    if (!exact) return EndpointFunction::from_values(n, nr + 1, eval);
    return EndpointFunction(
        n, nr + 1, eval,
        [e, nr](const Vector& x0, const Vector& xT, const Vector& r) -> Vector {
          Vector g = Vector::Zero(x0.size() * 2 + nr + 1);
          g.head(g.size() - 1) = e.gradient(x0, xT, r.head(nr));
          return g;
        },
        [e, nr](const Vector& x0, const Vector& xT, const Vector& r) -> Matrix {
          const int d = static_cast<int>(x0.size()) * 2 + nr;
          Matrix h = Matrix::Zero(d + 1, d + 1);
          h.topLeftCorner(d, d) = e.hessian(x0, xT, r.head(nr));
          return h;
        });
  };
  out.inequalities.clear();
  for (const auto& e : problem.inequalities) out.inequalities.push_back(extend(e));
  out.equalities.clear();
  for (const auto& e : problem.equalities) out.equalities.push_back(extend(e));

  Vector linear = Vector::Zero(2 * n + nr + 1);
  linear[2 * n + nr] = 1.0;
  out.cost = EndpointFunction::quadratic(n, nr + 1, linear, Matrix::Zero(linear.size(), linear.size()), 0.0);
  return out;
}

}  // namespace bsc
