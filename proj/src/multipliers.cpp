#include "bsc/multipliers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bsc/errors.hpp"
#include "bsc/linalg.hpp"

namespace bsc {
namespace {

// Maximum number of equality multipliers enumerated orthant by orthant.
constexpr int kMaxOrthantBeta = 8;

struct EndpointData {
  Matrix grad0;  // (n + n_r) x dim
  Matrix gradT;  // (n + n_r) x dim
};

EndpointData endpoint_gradients(const ControlAffineProblem& problem, const SampledTrajectory& traj) {
  const int d = problem.augmented_dim();
  const int s = problem.multiplier_dim();
  const Vector x0 = traj.X_nodes.col(0).head(problem.n);
  const Vector xT = traj.X_nodes.col(traj.X_nodes.cols() - 1).head(problem.n);
  const Vector r = traj.X_nodes.col(0).tail(problem.n_r);
  EndpointData out{Matrix(d, s), Matrix(d, s)};
  for (int k = 0; k < s; ++k) {
    const Vector g = augment_endpoint_gradient(problem.endpoint(k).gradient(x0, xT, r), problem.n, problem.n_r);
    out.grad0.col(k) = g.head(d);
    out.gradT.col(k) = g.tail(d);
  }
  return out;
}

// Backward RK4 for psi' = -A^T psi (column convention) from the terminal values.
void integrate_backward(const Linearization& lin, const Matrix& terminal, Matrix* nodes, Matrix* samples) {
  const TimeGrid& grid = lin.traj.layout.grid;
  const int N = grid.num_intervals();
  const int c = static_cast<int>(terminal.cols());
  const int d = lin.augmented_dim();
  std::vector<Matrix> at_nodes(N + 1);
  std::vector<Matrix> at_mid(N);
  Matrix p = terminal;
  at_nodes[N] = p;
  for (int k = N - 1; k >= 0; --k) {
    const double h = grid.step(k);
    const Matrix& Al = lin.A[3 * k];
    const Matrix& Ac = lin.A[3 * k + 1];
    const Matrix& Ar = lin.A[3 * k + 2];
    const Matrix k1 = Ar.transpose() * p;
    const Matrix k2 = Ac.transpose() * (p + 0.5 * h * k1);
    const Matrix k3 = Ac.transpose() * (p + 0.5 * h * k2);
    const Matrix k4 = Al.transpose() * (p + h * k3);
    const Matrix prev = p + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    // psi' = -A^T psi at both ends enters the Hermite midpoint formula.
    const Matrix d0 = -Al.transpose() * prev;
    const Matrix d1 = -k1;
    at_mid[k] = 0.5 * (prev + p) + h / 8.0 * (d0 - d1);
    at_nodes[k] = prev;
    p = prev;
  }
  for (int j = 0; j < c; ++j) {
    nodes[j].resize(d, N + 1);
    samples[j].resize(d, 3 * N);
    for (int k = 0; k <= N; ++k) nodes[j].col(k) = at_nodes[k].col(j);
    for (int k = 0; k < N; ++k) {
      samples[j].col(3 * k) = at_nodes[k].col(j);
      samples[j].col(3 * k + 1) = at_mid[k].col(j);
      samples[j].col(3 * k + 2) = at_nodes[k + 1].col(j);
    }
  }
}

bool is_new_vertex(const std::vector<Vector>& vertices, const Vector& v, double tol) {
  for (const auto& w : vertices)
    if ((w - v).cwiseAbs().maxCoeff() <= tol) return false;
  return true;
}

}  // namespace

Matrix AdjointBasis::costate(const Vector& lambda) const {
  if (lambda.size() != dim) throw Error(ErrorCode::kDimensionMismatch, "multiplier has wrong length");
  Matrix psi = Matrix::Zero(psi_nodes[0].rows(), psi_nodes[0].cols());
  for (int k = 0; k < dim; ++k) psi += lambda[k] * psi_nodes[k];
  return psi;
}

AdjointBasis build_adjoint_basis(const ControlAffineProblem& problem, const Linearization& lin) {
  const SampledTrajectory& traj = lin.traj;
  const int s = problem.multiplier_dim();
  const EndpointData ends = endpoint_gradients(problem, traj);
  AdjointBasis basis;
  basis.dim = s;
  basis.terminal = ends.gradT;
  basis.psi_nodes.resize(s);
  basis.psi_samples.resize(s);
  integrate_backward(lin, ends.gradT, basis.psi_nodes.data(), basis.psi_samples.data());

  basis.transversality.resize(problem.augmented_dim(), s);
  for (int k = 0; k < s; ++k) basis.transversality.col(k) = basis.psi_nodes[k].col(0) + ends.grad0.col(k);

  const int nodes = traj.layout.grid.num_nodes();
  basis.switching.resize(problem.m * nodes, s);
  for (int node = 0; node < nodes; ++node) {
    const Vector X = traj.X_nodes.col(node);
    for (int i = 0; i < problem.m; ++i) {
      const Vector f = problem.fields[i + 1].eval(X.head(problem.n), X.tail(problem.n_r));
      for (int k = 0; k < s; ++k)
        basis.switching(i * nodes + node, k) = basis.psi_nodes[k].col(node).head(problem.n).dot(f);
    }
  }
  return basis;
}

Matrix integrate_costate(const ControlAffineProblem& problem, const Linearization& lin, const Vector& lambda) {
  if (lambda.size() != problem.multiplier_dim())
    throw Error(ErrorCode::kDimensionMismatch, "multiplier has wrong length");
  const SampledTrajectory& traj = lin.traj;
  const Vector x0 = traj.X_nodes.col(0).head(problem.n);
  const Vector xT = traj.X_nodes.col(traj.X_nodes.cols() - 1).head(problem.n);
  const Vector r = traj.X_nodes.col(0).tail(problem.n_r);
  Vector grad = Vector::Zero(2 * problem.n + problem.n_r);
  for (int k = 0; k < problem.multiplier_dim(); ++k) grad += lambda[k] * problem.endpoint(k).gradient(x0, xT, r);
  const Matrix terminal = augment_endpoint_gradient(grad, problem.n, problem.n_r).tail(problem.augmented_dim());
  Matrix nodes, samples;
  integrate_backward(lin, terminal, &nodes, &samples);
  return nodes;
}

MultiplierPolytope assemble_polytope(const ControlAffineProblem& problem, const Linearization& lin,
                                     const AdjointBasis& basis, const Tolerances& tolerances) {
  const SampledTrajectory& traj = lin.traj;
  const ArcStructure& arcs = traj.arcs;
  const int s = basis.dim;
  const int nodes = traj.layout.grid.num_nodes();
  MultiplierPolytope poly;
  poly.dim = s;
  poly.num_alpha = 1 + problem.num_inequalities();
  poly.num_beta = problem.num_equalities();
  poly.tol_stationarity =
      tolerances.stationarity * (1.0 + (basis.switching.size() ? basis.switching.cwiseAbs().maxCoeff() : 0.0));

  std::vector<Vector> eq_rows, ineq_rows;
  for (int i = 0; i < problem.m; ++i)
    for (int k = 0; k < nodes; ++k)
      if (arcs.node_in_singular_arc(i, k)) eq_rows.push_back(basis.switching.row(i * nodes + k).transpose());
  if (!problem.fixed_initial_state)
    for (int j = 0; j < problem.n; ++j) eq_rows.push_back(basis.transversality.row(j).transpose());
  for (int j = 0; j < problem.n_r; ++j) eq_rows.push_back(basis.transversality.row(problem.n + j).transpose());

  for (int a = 0; a < poly.num_alpha; ++a) ineq_rows.push_back(Vector::Unit(s, a));
  for (int i = 0; i < problem.m; ++i) {
    for (const Arc& arc : arcs.arcs(i)) {
      if (arc.label == ArcLabel::kSingular) continue;
      const double sign = arc.label == ArcLabel::kLower ? 1.0 : -1.0;
      for (int k = arc.first_node; k <= arc.last_node; ++k) {
        if (arcs.node_in_singular_arc(i, k)) continue;
        ineq_rows.push_back(sign * basis.switching.row(i * nodes + k).transpose());
      }
    }
  }
  poly.equalities.resize(eq_rows.size(), s);
  for (size_t r = 0; r < eq_rows.size(); ++r) poly.equalities.row(r) = eq_rows[r].transpose();
  poly.inequalities.resize(ineq_rows.size(), s);
  for (size_t r = 0; r < ineq_rows.size(); ++r) poly.inequalities.row(r) = ineq_rows[r].transpose();

  poly.kernel = nullspace(poly.equalities, poly.tol_stationarity);
  const Matrix& Z = poly.kernel;
  if (Z.cols() == 0) throw Error(ErrorCode::kEmptyPolytope, "stationarity and transversality force lambda = 0");

  // Constraint rows in kernel coordinates; rows that vanish there are implied
  // by the equalities up to the stationarity tolerance.
  auto reduced_rows = [&](const Matrix& rows) {
    std::vector<Vector> kept;
    for (int r = 0; r < rows.rows(); ++r) {
      Vector g = (rows.row(r) * Z).transpose();
      if (g.norm() > poly.tol_stationarity) kept.push_back(std::move(g));
    }
    return kept;
  };

  const int a = poly.num_alpha;
  const int b = poly.num_beta;
  auto add_vertex = [&](Vector lambda) {
    const double norm = lambda.cwiseAbs().sum();
    if (norm <= 1e-12) return;
    lambda /= norm;
    if (is_new_vertex(poly.vertices, lambda, tolerances.dedupe)) poly.vertices.push_back(std::move(lambda));
  };

  if (b <= kMaxOrthantBeta) {
    const std::vector<Vector> base = reduced_rows(poly.inequalities);
    for (int orthant = 0; orthant < (1 << b); ++orthant) {
      Matrix signs(b, s);
      signs.setZero();
      for (int j = 0; j < b; ++j) signs(j, a + j) = (orthant >> j) & 1 ? -1.0 : 1.0;
      std::vector<Vector> rows = base;
      for (auto& g : reduced_rows(signs)) rows.push_back(std::move(g));
      Matrix G(rows.size(), Z.cols());
      for (size_t r = 0; r < rows.size(); ++r) G.row(r) = rows[r].transpose();
      for (const Vector& w : extreme_rays(G)) add_vertex(Z * w);
    }
  } else {
    // Lifted variables mu = (alpha, beta+, beta-) >= 0 with lambda = L mu.
    poly.lifted = true;
    Matrix L = Matrix::Zero(s, s + b);
    L.topLeftCorner(s, s).setIdentity();
    L.block(a, s, b, b) = -Matrix::Identity(b, b);
    const Matrix Zl = nullspace(poly.equalities * L, poly.tol_stationarity);
    if (Zl.cols() == 0) throw Error(ErrorCode::kEmptyPolytope, "lifted stationarity system has no solution");
    std::vector<Vector> rows;
    Matrix lifted_rows(poly.inequalities.rows() + s + b, s + b);
    lifted_rows << poly.inequalities * L, Matrix::Identity(s + b, s + b);
    for (int r = 0; r < lifted_rows.rows(); ++r) {
      Vector g = (lifted_rows.row(r) * Zl).transpose();
      if (g.norm() > poly.tol_stationarity) rows.push_back(std::move(g));
    }
    Matrix G(rows.size(), Zl.cols());
    for (size_t r = 0; r < rows.size(); ++r) G.row(r) = rows[r].transpose();
    for (const Vector& w : extreme_rays(G)) add_vertex(L * (Zl * w));
  }

  if (poly.vertices.empty())
    throw Error(ErrorCode::kEmptyPolytope, "no multiplier satisfies the first-order conditions");
  return poly;
}

FirstOrderReport check_first_order(const ControlAffineProblem& problem, const Linearization& lin,
                                   const AdjointBasis& basis, const MultiplierPolytope& polytope,
                                   const Tolerances& tolerances) {
  const ArcStructure& arcs = lin.traj.arcs;
  const int nodes = lin.traj.layout.grid.num_nodes();
  const int V = static_cast<int>(polytope.vertices.size());
  FirstOrderReport report;
  Matrix values(problem.m * nodes, V);
  for (int v = 0; v < V; ++v) values.col(v) = basis.switching * polytope.vertices[v];

  report.min_alpha0 = std::numeric_limits<double>::infinity();
  for (const auto& v : polytope.vertices) report.min_alpha0 = std::min(report.min_alpha0, v[0]);
  report.normal = report.min_alpha0 > tolerances.dedupe;

  report.switching_max.resize(problem.m, nodes);
  report.switching_min.resize(problem.m, nodes);
  report.complementarity_margin = std::numeric_limits<double>::infinity();
  for (int i = 0; i < problem.m; ++i) {
    for (int k = 0; k < nodes; ++k) {
      const auto row = values.row(i * nodes + k);
      report.switching_max(i, k) = row.maxCoeff();
      report.switching_min(i, k) = row.minCoeff();
      if (arcs.node_in_singular_arc(i, k)) {
        report.stationarity_residual = std::max(report.stationarity_residual, row.cwiseAbs().maxCoeff());
        continue;
      }
      // Bang interior node: some vertex must have the strict sign.
      const int interval = std::min(k, nodes - 2);
      const ArcLabel label = arcs.interval_label(i, interval);
      const double margin = label == ArcLabel::kLower ? row.maxCoeff() : -row.minCoeff();
      if (margin < report.complementarity_margin) {
        report.complementarity_margin = margin;
        report.margin_component = i;
        report.margin_node = k;
      }
    }
  }
  report.strict_complementarity = report.complementarity_margin >= tolerances.strict;
  return report;
}

Vector hamiltonian_samples(const Linearization& lin, const AdjointBasis& basis, const Vector& lambda) {
  const int S = lin.num_samples();
  Vector H(S);
  for (int s = 0; s < S; ++s) {
    Vector psi = Vector::Zero(lin.augmented_dim());
    for (int k = 0; k < basis.dim; ++k) psi += lambda[k] * basis.psi_samples[k].col(s);
    H[s] = psi.dot(lin.traj.Xdot.col(s));
  }
  return H;
}

nlohmann::json polytope_to_json(const MultiplierPolytope& polytope) {
  nlohmann::json out;
  out["dimension"] = polytope.dim;
  out["num_alpha"] = polytope.num_alpha;
  out["num_beta"] = polytope.num_beta;
  out["kernel_dimension"] = polytope.kernel.cols();
  out["tol_stationarity"] = polytope.tol_stationarity;
  out["lifted_enumeration"] = polytope.lifted;
  nlohmann::json vertices = nlohmann::json::array();
  for (const auto& v : polytope.vertices) {
    vertices.push_back({{"alpha", std::vector<double>(v.data(), v.data() + polytope.num_alpha)},
                        {"beta", std::vector<double>(v.data() + polytope.num_alpha, v.data() + polytope.dim)}});
  }
  out["vertices"] = vertices;
  return out;
}

}  // namespace bsc
