#include "bsc/goh.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "bsc/errors.hpp"

namespace bsc {
namespace {

Matrix sym(const Matrix& A) { return 0.5 * (A + A.transpose()); }
Matrix skew(const Matrix& A) { return 0.5 * (A - A.transpose()); }

void check_samples(const Linearization& lin, const Matrix& M, int rows, const char* what) {
  if (M.rows() != rows || M.cols() != lin.num_samples())
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " has the wrong shape");
}

const std::vector<Matrix>& series_by_name(const CoefficientSeries& c, const std::string& name) {
  if (name == "Q") return c.Q;
  if (name == "C") return c.C;
  if (name == "Cdot") return c.Cdot;
  if (name == "M") return c.M;
  if (name == "S") return c.S;
  if (name == "V") return c.V;
  if (name == "Sdot") return c.Sdot;
  if (name == "Vdot") return c.Vdot;
  if (name == "R") return c.R;
  throw Error(ErrorCode::kInvalidArgument, "unknown coefficient '" + name + "'");
}

}  // namespace

void CoefficientSeries::add_scaled(double weight, const CoefficientSeries& other) {
  auto axpy = [weight](std::vector<Matrix>& dst, const std::vector<Matrix>& src) {
    if (dst.empty()) {
      dst.resize(src.size());
      for (size_t s = 0; s < src.size(); ++s) dst[s] = weight * src[s];
      return;
    }
    for (size_t s = 0; s < src.size(); ++s) dst[s] += weight * src[s];
  };
  axpy(Q, other.Q);
  axpy(C, other.C);
  axpy(Cdot, other.Cdot);
  axpy(M, other.M);
  axpy(S, other.S);
  axpy(V, other.V);
  axpy(Sdot, other.Sdot);
  axpy(Vdot, other.Vdot);
  axpy(R, other.R);
  if (endpoint_hessian.size() == 0) endpoint_hessian = weight * other.endpoint_hessian;
  else endpoint_hessian += weight * other.endpoint_hessian;
}

CoefficientSeries GohCoefficients::at(const Vector& lambda) const {
  if (lambda.size() != static_cast<int>(basis.size()))
    throw Error(ErrorCode::kDimensionMismatch, "multiplier has wrong length");
  CoefficientSeries out;
  for (size_t k = 0; k < basis.size(); ++k) out.add_scaled(lambda[k], basis[k]);
  return out;
}

GohCoefficients compute_goh_coefficients(const ControlAffineProblem& problem, const Linearization& lin,
                                         const AdjointBasis& adjoint) {
  const int n = problem.n;
  const int nr = problem.n_r;
  const int m = problem.m;
  const int d = n + nr;
  const int S = lin.num_samples();
  const SampledTrajectory& traj = lin.traj;
  const Vector x0 = traj.X_nodes.col(0).head(n);
  const Vector xT = traj.X_nodes.col(traj.X_nodes.cols() - 1).head(n);
  const Vector r = traj.X_nodes.col(0).tail(nr);

  GohCoefficients out;
  out.basis.resize(adjoint.dim);
  for (int k = 0; k < adjoint.dim; ++k) {
    CoefficientSeries& c = out.basis[k];
    for (auto* series : {&c.Q, &c.C, &c.Cdot, &c.M, &c.S, &c.V, &c.Sdot, &c.Vdot, &c.R}) series->resize(S);
    c.endpoint_hessian = augment_endpoint_hessian(problem.endpoint(k).hessian(x0, xT, r), n, nr);
    for (int s = 0; s < S; ++s) {
      const Vector psi = adjoint.psi_samples[k].col(s);
      const Vector X = traj.X.col(s);
      const Vector& Xdot = traj.Xdot.col(s);
      const Matrix& A = lin.A[s];
      const Matrix& B = lin.B[s];
      const auto& jac = lin.field_jacobians[s];
      Matrix Q = Matrix::Zero(d, d);
      Matrix C(m, d), Cdot(m, d);
      const Vector psiA = A.transpose() * psi;
      for (int i = 0; i <= m; ++i) {
        const Matrix WH = problem.fields[i].weighted_hessian(X.head(n), X.tail(nr), psi.head(n));
        Q += (i == 0 ? 1.0 : traj.U(i - 1, s)) * WH;
        if (i == 0) continue;
        C.row(i - 1) = psi.transpose() * jac[i];
        Cdot.row(i - 1) = -psiA.transpose() * jac[i] + (WH * Xdot).transpose();
      }
      const Matrix CB = C * B;
      const Matrix dCB = Cdot * B + C * lin.Bdot[s];
      const Matrix CB1 = C * lin.B1[s];
      c.S[s] = sym(CB);
      c.V[s] = skew(CB);
      c.Sdot[s] = sym(dCB);
      c.Vdot[s] = skew(dCB);
      c.M[s] = B.transpose() * Q - Cdot - C * A;
      c.R[s] = B.transpose() * Q * B - CB1 - CB1.transpose() - c.Sdot[s];
      c.Q[s] = std::move(Q);
      c.C[s] = std::move(C);
      c.Cdot[s] = std::move(Cdot);
    }
  }
  return out;
}

Matrix integrate_variation(const Linearization& lin, const Vector& z0, const Matrix& v) {
  check_samples(lin, v, lin.traj.m, "control variation");
  const auto z = integrate_linear(lin, z0, [&](int s) -> Matrix { return lin.B[s] * v.col(s); });
  Matrix out(lin.augmented_dim(), lin.num_samples());
  for (int s = 0; s < lin.num_samples(); ++s) out.col(s) = z[s];
  return out;
}

Matrix integrate_xi(const Linearization& lin, const Vector& xi0, const Matrix& y) {
  check_samples(lin, y, lin.traj.m, "y");
  const auto xi = integrate_linear(lin, xi0, [&](int s) -> Matrix { return lin.B1[s] * y.col(s); });
  Matrix out(lin.augmented_dim(), lin.num_samples());
  for (int s = 0; s < lin.num_samples(); ++s) out.col(s) = xi[s];
  return out;
}

TransformedDirection goh_transform_direction(const Linearization& lin, const OriginalDirection& direction,
                                             double* xi_residual, double tolerance) {
  check_samples(lin, direction.z, lin.augmented_dim(), "state variation");
  check_samples(lin, direction.v, lin.traj.m, "control variation");
  const TimeGrid& grid = lin.traj.layout.grid;
  const Matrix& v = direction.v;
  TransformedDirection out;
  out.y.resize(v.rows(), v.cols());
  Vector Y = Vector::Zero(v.rows());
  for (int k = 0; k < grid.num_intervals(); ++k) {
    const double h = grid.step(k);
    const auto v0 = v.col(3 * k), vm = v.col(3 * k + 1), v1 = v.col(3 * k + 2);
    out.y.col(3 * k) = Y;
    // Exact for v quadratic on the interval.
    out.y.col(3 * k + 1) = Y + h / 24.0 * (5.0 * v0 + 8.0 * vm - v1);
    Y += h / 6.0 * (v0 + 4.0 * vm + v1);
    out.y.col(3 * k + 2) = Y;
  }
  out.h = Y;
  out.xi.resize(direction.z.rows(), direction.z.cols());
  for (int s = 0; s < lin.num_samples(); ++s) out.xi.col(s) = direction.z.col(s) - lin.B[s] * out.y.col(s);

  if (xi_residual) {
    const Matrix ref = integrate_xi(lin, out.xi.col(0), out.y);
    double worst = 0.0;
    for (int s = 0; s < lin.num_samples(); s += 3) worst = std::max(worst, (ref.col(s) - out.xi.col(s)).cwiseAbs().maxCoeff());
    const int last = lin.num_samples() - 1;
    worst = std::max(worst, (ref.col(last) - out.xi.col(last)).cwiseAbs().maxCoeff());
    *xi_residual = worst;
    if (tolerance > 0.0 && worst > tolerance) {
      std::ostringstream msg;
      msg << "xi differs from its ODE solution by " << worst;
      throw Error(ErrorCode::kLinearizationResidual, msg.str());
    }
  }
  return out;
}

double omega_direct(const Linearization& lin, const CoefficientSeries& coeffs, const OriginalDirection& direction) {
  check_samples(lin, direction.z, lin.augmented_dim(), "state variation");
  check_samples(lin, direction.v, lin.traj.m, "control variation");
  const int d = lin.augmented_dim();
  const int S = lin.num_samples();
  Vector ends(2 * d);
  ends << direction.z.col(0), direction.z.col(S - 1);
  double total = 0.5 * ends.dot(coeffs.endpoint_hessian * ends);
  for (int s = 0; s < S; ++s) {
    const auto z = direction.z.col(s);
    const auto v = direction.v.col(s);
    const double integrand = z.dot(coeffs.Q[s] * z) + 2.0 * v.dot(coeffs.C[s] * z);
    total += 0.5 * lin.traj.layout.weight(s) * integrand;
  }
  return total;
}

double endpoint_form(const Linearization& lin, const CoefficientSeries& coeffs, const Vector& xi0,
                     const Vector& xiT, const Vector& h) {
  const int d = lin.augmented_dim();
  const int last = lin.num_samples() - 1;
  const Matrix& BT = lin.B[last];
  const Matrix& CT = coeffs.C[last];
  Vector ends(2 * d);
  ends << xi0, xiT + BT * h;
  return 0.5 * ends.dot(coeffs.endpoint_hessian * ends) + 0.5 * h.dot(CT * (2.0 * xiT + BT * h));
}

namespace {

double transformed_integral(const Linearization& lin, const CoefficientSeries& coeffs,
                            const TransformedDirection& dir, const Matrix* v) {
  double total = 0.0;
  for (int s = 0; s < lin.num_samples(); ++s) {
    const auto xi = dir.xi.col(s);
    const auto y = dir.y.col(s);
    double integrand = 0.5 * xi.dot(coeffs.Q[s] * xi) + y.dot(coeffs.M[s] * xi) + 0.5 * y.dot(coeffs.R[s] * y);
    if (v) integrand += v->col(s).dot(coeffs.V[s] * y);
    total += lin.traj.layout.weight(s) * integrand;
  }
  return total;
}

void check_transformed(const Linearization& lin, const TransformedDirection& dir) {
  check_samples(lin, dir.xi, lin.augmented_dim(), "xi");
  check_samples(lin, dir.y, lin.traj.m, "y");
  if (dir.h.size() != lin.traj.m) throw Error(ErrorCode::kDimensionMismatch, "h has the wrong length");
}

}  // namespace

double omega_goh(const Linearization& lin, const CoefficientSeries& coeffs, const TransformedDirection& direction,
                 const Matrix& v) {
  check_transformed(lin, direction);
  check_samples(lin, v, lin.traj.m, "control variation");
  const int S = lin.num_samples();
  return endpoint_form(lin, coeffs, direction.xi.col(0), direction.xi.col(S - 1), direction.h) +
         transformed_integral(lin, coeffs, direction, &v);
}

double omega_goh_closure(const Linearization& lin, const CoefficientSeries& coeffs,
                         const TransformedDirection& direction) {
  check_transformed(lin, direction);
  const ArcStructure& arcs = lin.traj.arcs;
  const int m = lin.traj.m;
  const int S = lin.num_samples();
  double xi = 0.0;
  if (m >= 2) {
    const double scale = 1.0 + direction.y.cwiseAbs().maxCoeff();
    for (int b = 0; b < m; ++b) {
      for (const Arc& arc : arcs.arcs(b)) {
        if (arc.label == ArcLabel::kSingular) continue;
        const double ref = direction.y(b, 3 * arc.first_node);
        for (int s = 3 * arc.first_node; s < 3 * arc.last_node; ++s) {
          if (std::abs(direction.y(b, s) - ref) > 1e-9 * scale) {
            std::ostringstream msg;
            msg << "y_" << b << " is not constant on a bang arc (sample " << s << ")";
            throw Error(ErrorCode::kXiUndefined, msg.str());
          }
        }
      }
    }
    xi = xi_value(xi_terms(lin, coeffs), direction.y, direction.h);
  }
  return endpoint_form(lin, coeffs, direction.xi.col(0), direction.xi.col(S - 1), direction.h) + xi +
         transformed_integral(lin, coeffs, direction, nullptr);
}

std::vector<XiTerm> xi_terms(const Linearization& lin, const CoefficientSeries& coeffs) {
  const ArcStructure& arcs = lin.traj.arcs;
  const SampleLayout& layout = lin.traj.layout;
  const int m = lin.traj.m;
  const int N = layout.grid.num_intervals();
  std::vector<XiTerm> terms;
  auto bang = [&](int component, int interval) { return !arcs.singular_on(component, interval); };
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      if (a == b) continue;
      int k = 0;
      while (k < N) {
        if (!(arcs.singular_on(a, k) && bang(b, k))) {
          ++k;
          continue;
        }
        const int first = k;
        while (k < N && arcs.singular_on(a, k) && bang(b, k)) ++k;
        const int last = k - 1;
        // y_b vanishes on a bang arc that starts at t = 0.
        if (first == 0) continue;
        XiTerm term;
        term.constant_component = b;
        term.constant_sample = 3 * first;
        const double v_end = coeffs.V[3 * last + 2](a, b);
        if (last == N - 1) term.pieces.push_back({v_end, a, -1});
        else if (bang(a, last + 1)) term.pieces.push_back({v_end, a, 3 * (last + 1)});
        if (bang(a, first - 1)) term.pieces.push_back({-coeffs.V[3 * first](a, b), a, 3 * (first - 1) + 2});
        for (int s = 3 * first; s <= 3 * last + 2; ++s)
          term.pieces.push_back({-layout.weight(s) * coeffs.Vdot[s](a, b), a, s});
        terms.push_back(std::move(term));
      }
    }
  }
  return terms;
}

double xi_value(const std::vector<XiTerm>& terms, const Matrix& y, const Vector& h) {
  double total = 0.0;
  for (const auto& term : terms) {
    double bracket = 0.0;
    for (const auto& piece : term.pieces)
      bracket += piece.coefficient * (piece.sample < 0 ? h[piece.component] : y(piece.component, piece.sample));
    total += y(term.constant_component, term.constant_sample) * bracket;
  }
  return total;
}

void write_coefficients_csv(std::ostream& out, const Linearization& lin, const CoefficientSeries& coeffs,
                            const std::vector<std::string>& names) {
  out << "t";
  for (const auto& name : names) {
    const Matrix& first = series_by_name(coeffs, name).front();
    for (int i = 0; i < first.rows(); ++i)
      for (int j = 0; j < first.cols(); ++j) out << ',' << name << '_' << i << j;
  }
  out << '\n';
  std::ostringstream row;
  row.precision(17);
  for (int s = 0; s < lin.num_samples(); ++s) {
    row.str("");
    row << lin.traj.layout.time(s);
    for (const auto& name : names) {
      const Matrix& M = series_by_name(coeffs, name)[s];
      for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) row << ',' << M(i, j);
    }
    out << row.str() << '\n';
  }
}

}  // namespace bsc
