#include "bsc/critical_cone.hpp"

#include <algorithm>
#include <cmath>

#include "bsc/errors.hpp"
#include "bsc/linalg.hpp"

namespace bsc {
namespace {

using Kind = ConeParameter::Kind;

// Relative singular-value cutoff for the equality rows.
constexpr double kRankTolerance = 1e-10;

Matrix orthonormal_kernel(const Matrix& rows, int dim, int* rank) {
  if (rows.rows() == 0) {
    *rank = 0;
    return Matrix::Identity(dim, dim);
  }
  Eigen::BDCSVD<Matrix> svd(rows);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  const Matrix Z = nullspace(rows, kRankTolerance * std::max(1.0, smax));
  *rank = dim - static_cast<int>(Z.cols());
  return Z;
}

// Linear functional of p giving the stacked endpoint variation
// (xi(0), xi(T) + B(T) h).
Matrix endpoint_map(const ConeDiscretization& cone, const Linearization& lin) {
  const int d = lin.augmented_dim();
  const int last = lin.num_samples() - 1;
  Matrix L(2 * d, cone.dim);
  L.topRows(d) = cone.Xi.front();
  L.bottomRows(d) = cone.Xi.back() + lin.B[last] * cone.H;
  return L;
}

}  // namespace

ConeDiscretization discretize_cone(const ControlAffineProblem& problem, const Linearization& lin,
                                   const Tolerances& tolerances) {
  const SampledTrajectory& traj = lin.traj;
  const ArcStructure& arcs = traj.arcs;
  const int m = problem.m;
  const int n = problem.n;
  const int d = problem.augmented_dim();
  const int N = traj.layout.grid.num_intervals();
  const int S = traj.num_samples();
  ConeDiscretization cone;

  // Parameter layout. terminal_index[i] is -1 when h_i is pinned to 0.
  std::vector<int> terminal_index(m, -1);
  std::vector<std::vector<int>> node_index(m, std::vector<int>(N + 1, -1));
  std::vector<std::vector<int>> bang_index(m);
  for (int i = 0; i < m; ++i) {
    const auto& list = arcs.arcs(i);
    bang_index[i].assign(list.size(), -1);
    const bool pinned = list.back().label != ArcLabel::kSingular && list.back().first_node == 0;
    for (size_t a = 0; a < list.size(); ++a) {
      const Arc& arc = list[a];
      if (arc.label == ArcLabel::kSingular) {
        for (int k = arc.first_node; k <= arc.last_node; ++k) {
          node_index[i][k] = static_cast<int>(cone.parameters.size());
          cone.parameters.push_back({Kind::kSingularNode, i, k});
        }
      } else if (arc.first_node > 0 && arc.last_node < N) {
        bang_index[i][a] = static_cast<int>(cone.parameters.size());
        cone.parameters.push_back({Kind::kBangConstant, i, arc.first_node});
      }
    }
    if (!pinned) {
      terminal_index[i] = static_cast<int>(cone.parameters.size());
      cone.parameters.push_back({Kind::kTerminal, i, N});
    }
    for (size_t a = 0; a < list.size(); ++a)
      if (list[a].label != ArcLabel::kSingular && list[a].first_node > 0 && list[a].last_node == N)
        bang_index[i][a] = terminal_index[i];
  }
  const int first_state = static_cast<int>(cone.parameters.size());
  if (!problem.fixed_initial_state)
    for (int j = 0; j < n; ++j) cone.parameters.push_back({Kind::kInitialState, j, 0});
  const int first_param = static_cast<int>(cone.parameters.size());
  for (int j = 0; j < problem.n_r; ++j) cone.parameters.push_back({Kind::kParameter, j, 0});
  cone.dim = static_cast<int>(cone.parameters.size());
  const int D = cone.dim;
  if (D == 0) throw Error(ErrorCode::kEmptyCone, "no cone parameters");

  cone.Y.assign(S, Matrix::Zero(m, D));
  for (int i = 0; i < m; ++i) {
    for (int k = 0; k < N; ++k) {
      const int a = arcs.interval_arc(i, k);
      if (arcs.singular_on(i, k)) {
        const int p0 = node_index[i][k], p1 = node_index[i][k + 1];
        cone.Y[3 * k](i, p0) = 1.0;
        cone.Y[3 * k + 1](i, p0) = 0.5;
        cone.Y[3 * k + 1](i, p1) = 0.5;
        cone.Y[3 * k + 2](i, p1) = 1.0;
      } else if (bang_index[i][a] >= 0) {
        for (int j = 0; j < 3; ++j) cone.Y[3 * k + j](i, bang_index[i][a]) = 1.0;
      }
    }
  }
  cone.H = Matrix::Zero(m, D);
  for (int i = 0; i < m; ++i)
    if (terminal_index[i] >= 0) cone.H(i, terminal_index[i]) = 1.0;

  Matrix Xi0 = Matrix::Zero(d, D);
  for (int j = first_state; j < first_param; ++j) Xi0(j - first_state, j) = 1.0;
  for (int j = first_param; j < D; ++j) Xi0(n + (j - first_param), j) = 1.0;
  cone.Xi = integrate_linear(lin, Xi0, [&](int s) -> Matrix { return lin.B1[s] * cone.Y[s]; });

  const Matrix L = endpoint_map(cone, lin);
  const Vector x0 = traj.X_nodes.col(0).head(n);
  const Vector xT = traj.X_nodes.col(N).head(n);
  const Vector r = traj.X_nodes.col(0).tail(problem.n_r);
  auto row_of = [&](const EndpointFunction& e) -> Vector {
    return (augment_endpoint_gradient(e.gradient(x0, xT, r), n, problem.n_r).transpose() * L).transpose();
  };
  cone.equality_rows.resize(problem.num_equalities(), D);
  for (int j = 0; j < problem.num_equalities(); ++j) cone.equality_rows.row(j) = row_of(problem.equalities[j]).transpose();
  std::vector<Vector> ineq{row_of(problem.cost)};
  cone.inequality_index.push_back(0);
  for (int i = 0; i < problem.num_inequalities(); ++i) {
    if (std::abs(problem.inequalities[i].eval(x0, xT, r)) > tolerances.endpoint) continue;
    ineq.push_back(row_of(problem.inequalities[i]));
    cone.inequality_index.push_back(i + 1);
  }
  cone.inequality_rows.resize(ineq.size(), D);
  for (size_t i = 0; i < ineq.size(); ++i) cone.inequality_rows.row(i) = ineq[i].transpose();

  cone.Z = orthonormal_kernel(cone.equality_rows, D, &cone.equality_rank);
  if (cone.Z.cols() == 0) throw Error(ErrorCode::kEmptyCone, "terminal equalities leave only the zero direction");
  return cone;
}

ConeDiscretization restrict_to_face(const ConeDiscretization& cone, const std::vector<int>& active_rows) {
  ConeDiscretization face = cone;
  Matrix rows(cone.equality_rows.rows() + static_cast<int>(active_rows.size()), cone.dim);
  rows.topRows(cone.equality_rows.rows()) = cone.equality_rows;
  std::vector<int> remaining;
  for (size_t k = 0; k < active_rows.size(); ++k)
    rows.row(cone.equality_rows.rows() + k) = cone.inequality_rows.row(active_rows[k]);
  for (int r = 0; r < cone.inequality_rows.rows(); ++r)
    if (std::find(active_rows.begin(), active_rows.end(), r) == active_rows.end()) remaining.push_back(r);
  face.inequality_rows.resize(remaining.size(), cone.dim);
  face.inequality_index.clear();
  for (size_t k = 0; k < remaining.size(); ++k) {
    face.inequality_rows.row(k) = cone.inequality_rows.row(remaining[k]);
    face.inequality_index.push_back(cone.inequality_index[remaining[k]]);
  }
  face.equality_rows = rows;
  face.Z = orthonormal_kernel(rows, cone.dim, &face.equality_rank);
  return face;
}

TransformedDirection ConeDiscretization::expand(const Vector& p) const {
  if (p.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "cone parameter has wrong length");
  TransformedDirection out;
  const int S = static_cast<int>(Y.size());
  out.y.resize(Y.front().rows(), S);
  out.xi.resize(Xi.front().rows(), S);
  for (int s = 0; s < S; ++s) {
    out.y.col(s) = Y[s] * p;
    out.xi.col(s) = Xi[s] * p;
  }
  out.h = H * p;
  return out;
}

bool ConeDiscretization::in_cone_up_to_sign(const Vector& p, double tol, bool* flipped) const {
  bool plus = true, minus = true;
  for (int r = 0; r < inequality_rows.rows(); ++r) {
    const double v = inequality_rows.row(r).dot(p);
    const double slack = tol * (inequality_rows.row(r).norm() * p.norm() + 1e-300);
    if (v > slack) plus = false;
    if (v < -slack) minus = false;
  }
  if (flipped) *flipped = !plus && minus;
  return plus || minus;
}

Matrix assemble_form(const ConeDiscretization& cone, const Linearization& lin, const CoefficientSeries& coeffs) {
  const int d = lin.augmented_dim();
  const int m = lin.traj.m;
  const int S = lin.num_samples();
  const int D = cone.dim;
  const int block = d + m;

  // Integral part as one product Phi^T (K Phi) with Phi stacking (xi; y).
  Matrix Phi(block * S, D), KPhi(block * S, D);
  for (int s = 0; s < S; ++s) {
    Phi.middleRows(block * s, d) = cone.Xi[s];
    Phi.middleRows(block * s + d, m) = cone.Y[s];
    Matrix K(block, block);
    K.topLeftCorner(d, d) = 0.5 * coeffs.Q[s];
    K.topRightCorner(d, m) = 0.5 * coeffs.M[s].transpose();
    K.bottomLeftCorner(m, d) = 0.5 * coeffs.M[s];
    K.bottomRightCorner(m, m) = 0.5 * coeffs.R[s];
    KPhi.middleRows(block * s, block).noalias() = lin.traj.layout.weight(s) * K * Phi.middleRows(block * s, block);
  }
  Matrix W = Phi.transpose() * KPhi;

  const Matrix L = endpoint_map(cone, lin);
  const Matrix& CT = coeffs.C[S - 1];
  const Matrix& BT = lin.B[S - 1];
  const Matrix terminal = cone.H.transpose() * CT * (2.0 * cone.Xi.back() + BT * cone.H);
  W += 0.5 * L.transpose() * coeffs.endpoint_hessian * L + 0.5 * terminal;

  if (m >= 2) {
    for (const XiTerm& term : xi_terms(lin, coeffs)) {
      const Vector u = cone.Y[term.constant_sample].row(term.constant_component).transpose();
      Vector v = Vector::Zero(D);
      for (const XiPiece& piece : term.pieces)
        v += piece.coefficient * (piece.sample < 0 ? cone.H.row(piece.component).transpose()
                                                   : cone.Y[piece.sample].row(piece.component).transpose());
      W += u * v.transpose();
    }
  }
  return 0.5 * (W + W.transpose());
}

Matrix assemble_gamma(const ConeDiscretization& cone, const Linearization& lin) {
  Matrix G = cone.H.transpose() * cone.H;
  for (int s = 0; s < lin.num_samples(); ++s)
    G.noalias() += lin.traj.layout.weight(s) * cone.Y[s].transpose() * cone.Y[s];
  return 0.5 * (G + G.transpose());
}

double ReducedForms::scale() const {
  double s = 0.0;
  for (const auto& w : W) s = std::max(s, w.norm());
  return s;
}

ReducedForms reduce_forms(const ConeDiscretization& cone, const Linearization& lin, const GohCoefficients& coeffs,
                          const std::vector<Vector>& multipliers) {
  ReducedForms out;
  out.multipliers = multipliers;
  out.Z = cone.Z;
  out.gamma = cone.Z.transpose() * assemble_gamma(cone, lin) * cone.Z;
  out.W.resize(multipliers.size());
  parallel_for(static_cast<int>(multipliers.size()), [&](int k) {
    const Matrix W = assemble_form(cone, lin, coeffs.at(multipliers[k]));
    out.W[k] = cone.Z.transpose() * W * cone.Z;
  });
  return out;
}

nlohmann::json cone_summary(const ConeDiscretization& cone, const ArcStructure& arcs) {
  nlohmann::json out;
  out["dimension"] = cone.dim;
  out["reduced_dimension"] = cone.reduced_dim();
  out["equality_rows"] = cone.equality_rows.rows();
  out["equality_rank"] = cone.equality_rank;
  out["inequality_rows"] = cone.inequality_rows.rows();
  nlohmann::json components = nlohmann::json::array();
  for (int i = 0; i < arcs.num_components(); ++i) {
    nlohmann::json list = nlohmann::json::array();
    for (const Arc& arc : arcs.arcs(i)) {
      int count = 0;
      for (const auto& p : cone.parameters) {
        if (p.component != i) continue;
        if (p.kind == Kind::kSingularNode && arc.label == ArcLabel::kSingular && p.node >= arc.first_node &&
            p.node <= arc.last_node)
          ++count;
        if (p.kind == Kind::kBangConstant && p.node == arc.first_node) ++count;
      }
      list.push_back({{"label", arc_label_name(arc.label)}, {"first_node", arc.first_node},
                      {"last_node", arc.last_node}, {"parameters", count}});
    }
    int terminal = 0;
    for (const auto& p : cone.parameters)
      if (p.kind == Kind::kTerminal && p.component == i) terminal = 1;
    components.push_back({{"arcs", list}, {"terminal_parameter", terminal}});
  }
  out["components"] = components;
  int initial = 0, params = 0;
  for (const auto& p : cone.parameters) {
    if (p.kind == Kind::kInitialState) ++initial;
    if (p.kind == Kind::kParameter) ++params;
  }
  out["initial_state_parameters"] = initial;
  out["problem_parameters"] = params;
  return out;
}

}  // namespace bsc
