#include "bsc/linalg.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "bsc/errors.hpp"

namespace bsc {
namespace {

int g_thread_limit = 0;

int matrix_rank(const Matrix& rows, double tol) {
  if (rows.rows() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(rows);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > tol) ++rank;
  return rank;
}

bool same_ray(const Vector& a, const Vector& b, double tol) { return (a - b).cwiseAbs().maxCoeff() <= tol; }

}  // namespace

Matrix nullspace(const Matrix& A, double sigma_tol) {
  const int d = static_cast<int>(A.cols());
  if (A.rows() == 0) return Matrix::Identity(d, d);
  Eigen::BDCSVD<Matrix> svd(A, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (int i = 0; i < s.size(); ++i)
    if (s[i] > sigma_tol) ++rank;
  return svd.matrixV().rightCols(d - rank);
}

std::vector<Vector> extreme_rays(const Matrix& G_in, double tol) {
  const int d = static_cast<int>(G_in.cols());
  std::vector<Vector> rows;
  for (int i = 0; i < G_in.rows(); ++i) {
    const double norm = G_in.row(i).norm();
    if (norm == 0.0) continue;
    Vector g = G_in.row(i).transpose() / norm;
    bool duplicate = false;
    for (const auto& h : rows)
      if (same_ray(g, h, 1e-12)) duplicate = true;
    if (!duplicate) rows.push_back(std::move(g));
  }

  std::vector<Vector> lineality;
  for (int j = 0; j < d; ++j) lineality.push_back(Vector::Unit(d, j));
  std::vector<Vector> rays;
  std::vector<const Vector*> processed;

  for (const Vector& g : rows) {
    int pivot = -1;
    double best = tol;
    for (size_t l = 0; l < lineality.size(); ++l) {
      const double v = std::abs(g.dot(lineality[l]));
      if (v > best) {
        best = v;
        pivot = static_cast<int>(l);
      }
    }
    if (pivot >= 0) {
      Vector lstar = lineality[pivot];
      if (g.dot(lstar) < 0) lstar = -lstar;
      const double gl = g.dot(lstar);
      std::vector<Vector> next_lineality;
      for (size_t l = 0; l < lineality.size(); ++l) {
        if (static_cast<int>(l) == pivot) continue;
        Vector v = lineality[l] - (g.dot(lineality[l]) / gl) * lstar;
        next_lineality.push_back(v / v.norm());
      }
      for (auto& r : rays) {
        r -= (g.dot(r) / gl) * lstar;
        r /= r.norm();
      }
      rays.push_back(lstar / lstar.norm());
      lineality = std::move(next_lineality);
      processed.push_back(&g);
      continue;
    }

    std::vector<Vector> positive, negative, next;
    for (const auto& r : rays) {
      const double v = g.dot(r);
      if (v > tol) positive.push_back(r);
      else if (v < -tol) negative.push_back(r);
      else next.push_back(r);
    }
    processed.push_back(&g);
    for (const auto& p : positive) next.push_back(p);
    if (!negative.empty()) {
      const int target_rank = d - static_cast<int>(lineality.size()) - 1;
      for (const auto& p : positive) {
        for (const auto& q : negative) {
          Vector w = g.dot(p) * q - g.dot(q) * p;
          const double norm = w.norm();
          if (norm <= tol) continue;
          w /= norm;
          Matrix tight(0, d);
          for (const Vector* h : processed) {
            if (std::abs(h->dot(w)) <= tol) {
              tight.conservativeResize(tight.rows() + 1, Eigen::NoChange);
              tight.row(tight.rows() - 1) = h->transpose();
            }
          }
          if (matrix_rank(tight, 1e-9) < target_rank) continue;
          bool duplicate = false;
          for (const auto& r : next)
            if (same_ray(r, w, 1e-9)) duplicate = true;
          if (!duplicate) next.push_back(std::move(w));
        }
      }
    }
    rays = std::move(next);
  }
  if (!lineality.empty()) throw Error(ErrorCode::kUnbounded, "cone contains a line");
  return rays;
}

MinNormPoint min_norm_point(const Matrix& P) {
  const int K = static_cast<int>(P.cols());
  if (K == 0) throw Error(ErrorCode::kInvalidArgument, "min-norm point of an empty set");
  const double scale = std::max(1e-300, P.colwise().squaredNorm().maxCoeff());
  const double tol = 1e-12 * scale;

  int start = 0;
  P.colwise().squaredNorm().minCoeff(&start);
  std::vector<int> active{start};
  std::vector<double> lambda{1.0};
  Vector x = P.col(start);

  for (int iter = 0; iter < 100 * (K + 1); ++iter) {
    int j = 0;
    (P.transpose() * x).minCoeff(&j);
    if (x.squaredNorm() - x.dot(P.col(j)) <= tol) break;
    if (std::find(active.begin(), active.end(), j) != active.end()) break;
    active.push_back(j);
    lambda.push_back(0.0);

    while (true) {
      const int a = static_cast<int>(active.size());
      Matrix S(P.rows(), a);
      for (int i = 0; i < a; ++i) S.col(i) = P.col(active[i]);
      // Affine minimiser: [S^T S, 1; 1^T, 0] [mu; nu] = [0; 1].
      Matrix kkt = Matrix::Zero(a + 1, a + 1);
      kkt.topLeftCorner(a, a) = S.transpose() * S;
      kkt.block(0, a, a, 1).setOnes();
      kkt.block(a, 0, 1, a).setOnes();
      Vector rhs = Vector::Zero(a + 1);
      rhs[a] = 1.0;
      const Vector mu = kkt.completeOrthogonalDecomposition().solve(rhs).head(a);
      if (mu.minCoeff() > 1e-14) {
        for (int i = 0; i < a; ++i) lambda[i] = mu[i];
        break;
      }
      double theta = 1.0;
      for (int i = 0; i < a; ++i)
        if (mu[i] <= 1e-14 && lambda[i] - mu[i] > 0) theta = std::min(theta, lambda[i] / (lambda[i] - mu[i]));
      std::vector<int> keep_active;
      std::vector<double> keep_lambda;
      for (int i = 0; i < a; ++i) {
        const double v = lambda[i] + theta * (mu[i] - lambda[i]);
        if (v > 1e-14) {
          keep_active.push_back(active[i]);
          keep_lambda.push_back(v);
        }
      }
      if (keep_active.empty()) {
        keep_active.push_back(active.back());
        keep_lambda.push_back(1.0);
      }
      active = std::move(keep_active);
      lambda = std::move(keep_lambda);
      double total = 0.0;
      for (double v : lambda) total += v;
      for (double& v : lambda) v /= total;
      if (active.size() == 1) break;
    }
    x.setZero();
    for (size_t i = 0; i < active.size(); ++i) x += lambda[i] * P.col(active[i]);
  }

  MinNormPoint result;
  result.weights = Vector::Zero(K);
  for (size_t i = 0; i < active.size(); ++i) result.weights[active[i]] = lambda[i];
  result.point = P * result.weights;
  return result;
}

PencilMin pencil_min(const Matrix& W_in, const Matrix& Gamma_in, double relative_tol) {
  const Matrix W = 0.5 * (W_in + W_in.transpose());
  const Matrix Gamma = 0.5 * (Gamma_in + Gamma_in.transpose());
  const int d = static_cast<int>(W.rows());
  PencilMin out;
  if (d == 0) {
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> geig(Gamma);
  const Vector& g = geig.eigenvalues();
  const double gmax = std::max(0.0, g.maxCoeff());
  std::vector<int> range, kernel;
  for (int i = 0; i < d; ++i) (g[i] > relative_tol * gmax && gmax > 0 ? range : kernel).push_back(i);
  out.kernel_dim = static_cast<int>(kernel.size());
  const double wscale = W.norm() + std::numeric_limits<double>::min();

  Matrix T(d, range.size()), K(d, kernel.size());
  for (size_t i = 0; i < range.size(); ++i) T.col(i) = geig.eigenvectors().col(range[i]) / std::sqrt(g[range[i]]);
  for (size_t i = 0; i < kernel.size(); ++i) K.col(i) = geig.eigenvectors().col(kernel[i]);

  auto unbounded = [&](const Vector& direction) {
    out.value = -std::numeric_limits<double>::infinity();
    out.unbounded = true;
    out.direction = direction;
    return out;
  };

  const Matrix A = T.transpose() * W * T;
  if (kernel.empty()) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(A);
    out.value = eig.eigenvalues()[0];
    out.direction = T * eig.eigenvectors().col(0);
    return out;
  }
  if (range.empty()) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(W);
    if (eig.eigenvalues()[0] < -relative_tol * wscale) return unbounded(eig.eigenvectors().col(0));
    out.value = std::numeric_limits<double>::infinity();
    return out;
  }

  const Matrix B = T.transpose() * W * K;
  const Matrix D = K.transpose() * W * K;
  Eigen::SelfAdjointEigenSolver<Matrix> deig(D);
  if (deig.eigenvalues()[0] < -relative_tol * wscale) return unbounded(K * deig.eigenvectors().col(0));

  // Positive part of D is eliminated by a Schur complement; along its null
  // part the form is affine in the kernel variable, so any coupling there
  // makes it unbounded below.
  std::vector<int> pos, null;
  for (int i = 0; i < D.rows(); ++i) (deig.eigenvalues()[i] > relative_tol * wscale ? pos : null).push_back(i);
  Matrix Vp(D.rows(), pos.size()), Vn(D.rows(), null.size());
  for (size_t i = 0; i < pos.size(); ++i) Vp.col(i) = deig.eigenvectors().col(pos[i]);
  for (size_t i = 0; i < null.size(); ++i) Vn.col(i) = deig.eigenvectors().col(null[i]);
  if (!null.empty()) {
    const Matrix coupling = B * Vn;
    if (coupling.norm() > std::sqrt(relative_tol) * wscale) {
      Eigen::JacobiSVD<Matrix> svd(coupling, Eigen::ComputeFullU | Eigen::ComputeFullV);
      const Vector in_range = T * svd.matrixU().col(0);
      const Vector in_kernel = K * Vn * svd.matrixV().col(0);
      return unbounded(in_range - 1e6 * in_kernel);
    }
  }
  Vector dinv(pos.size());
  for (size_t i = 0; i < pos.size(); ++i) dinv[i] = 1.0 / deig.eigenvalues()[pos[i]];
  const Matrix BVp = B * Vp;
  const Matrix S = A - BVp * dinv.asDiagonal() * BVp.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> seig(S);
  const Vector v = seig.eigenvectors().col(0);
  out.value = seig.eigenvalues()[0];
  const Vector w = -(Vp * (dinv.asDiagonal() * (BVp.transpose() * v)));
  out.direction = T * v + K * w;
  return out;
}

void set_thread_limit(int threads) { g_thread_limit = std::max(0, threads); }

int thread_limit() {
  if (g_thread_limit > 0) return g_thread_limit;
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(int count, const std::function<void(int)>& body) {
  const int workers = std::min(thread_limit(), count);
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace bsc
