#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bsc/linearization.hpp"
#include "bsc/multipliers.hpp"

namespace bsc {

// Coefficients of the second variation along the candidate for one
// multiplier, per sample. With C_i = psi F_i' and Q = sum_i u_i psi F_i'':
//   M = B^T Q - Cdot - C A,   S + V = C B (symmetric + skew),
//   R = B^T Q B - C B1 - (C B1)^T - Sdot.
struct CoefficientSeries {
  std::vector<Matrix> Q, C, Cdot, M, S, V, Sdot, Vdot, R;
  Matrix endpoint_hessian;  // over (X(0), X(T))

  int num_samples() const { return static_cast<int>(Q.size()); }
  void add_scaled(double weight, const CoefficientSeries& other);
};

// Coefficients for each adjoint basis coordinate; they are linear in lambda.
struct GohCoefficients {
  std::vector<CoefficientSeries> basis;

  CoefficientSeries at(const Vector& lambda) const;
};

GohCoefficients compute_goh_coefficients(const ControlAffineProblem& problem, const Linearization& lin,
                                         const AdjointBasis& adjoint);

// (z, v): state and control variations at every sample, z' = A z + B v.
struct OriginalDirection {
  Matrix z;  // (n + n_r) x samples
  Matrix v;  // m x samples
};

// (xi, y, h) with y = int v, xi = z - B y and h = y(T).
struct TransformedDirection {
  Matrix xi;  // (n + n_r) x samples
  Matrix y;   // m x samples
  Vector h;
};

// z for z(0) = z0 and the sampled control variation v.
Matrix integrate_variation(const Linearization& lin, const Vector& z0, const Matrix& v);

// Goh transformation of (z, v). When `xi_residual` is given it receives the
// largest nodal gap between xi and an independent RK4 solve of
// xi' = A xi + B1 y; above `tolerance` an exception is thrown.
TransformedDirection goh_transform_direction(const Linearization& lin, const OriginalDirection& direction,
                                             double* xi_residual = nullptr, double tolerance = 0.0);

// xi for the sampled y, from xi' = A xi + B1 y and xi(0) = xi0.
Matrix integrate_xi(const Linearization& lin, const Vector& xi0, const Matrix& y);

// Omega = 1/2 l''(z(0), z(T))^2 + 1/2 int (Q z, z) + 2 (C z, v).
double omega_direct(const Linearization& lin, const CoefficientSeries& coeffs, const OriginalDirection& direction);

// Endpoint part g(xi(0), xi(T), h) of the transformed form.
double endpoint_form(const Linearization& lin, const CoefficientSeries& coeffs, const Vector& xi0,
                     const Vector& xiT, const Vector& h);

// Transformed form with the explicit v term:
//   g + int 1/2 (Q xi, xi) + (M xi, y) + 1/2 (R y, y) + (V y, v).
double omega_goh(const Linearization& lin, const CoefficientSeries& coeffs, const TransformedDirection& direction,
                 const Matrix& v);

// Closure form: the v term is replaced by Xi(y, h). Needs y constant on
// every bang arc when m >= 2 (ErrorCode::kXiUndefined otherwise).
double omega_goh_closure(const Linearization& lin, const CoefficientSeries& coeffs,
                         const TransformedDirection& direction);

// Xi is a sum of products y_b(sample) * sum_j coef_j y_{a_j}(sample_j) over
// pairs (a, b) with a singular and b bang on a run of intervals. A sample
// index of -1 stands for h_a.
struct XiPiece {
  double coefficient = 0.0;
  int component = 0;
  int sample = -1;
};
struct XiTerm {
  int constant_component = 0;
  int constant_sample = 0;
  std::vector<XiPiece> pieces;
};
std::vector<XiTerm> xi_terms(const Linearization& lin, const CoefficientSeries& coeffs);
double xi_value(const std::vector<XiTerm>& terms, const Matrix& y, const Vector& h);

// CSV with columns t, then the row-major entries of each listed matrix
// (headers like R_00). One row per sample.
void write_coefficients_csv(std::ostream& out, const Linearization& lin, const CoefficientSeries& coeffs,
                            const std::vector<std::string>& names = {"Q", "C", "M", "S", "V", "R"});

}  // namespace bsc
