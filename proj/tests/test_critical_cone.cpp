#include <doctest.h>

#include <random>

#include "bsc/errors.hpp"
#include "bsc/fixtures.hpp"
#include "bsc/critical_cone.hpp"
#include "bsc/linalg.hpp"
#include "random_problem.hpp"

using namespace bsc;
using Kind = ConeParameter::Kind;

namespace {

struct Setup {
  ControlAffineProblem problem;
  Linearization lin;
  GohCoefficients coeffs;
  ConeDiscretization cone;
};

Setup setup(const ControlAffineProblem& p, const Extremal& e) {
  Setup s{p, compute_linearization(p, sample_trajectory(p, e)), {}, {}};
  s.coeffs = compute_goh_coefficients(p, s.lin, build_adjoint_basis(p, s.lin));
  s.cone = discretize_cone(p, s.lin, {});
  return s;
}

Setup fixture(const std::string& name, int intervals) {
  const FixtureInstance inst = FixtureRegistry::builtin().build(name, intervals);
  return setup(inst.problem, inst.extremal);
}

int count(const ConeDiscretization& cone, Kind kind) {
  int c = 0;
  for (const auto& p : cone.parameters) c += p.kind == kind;
  return c;
}

}  // namespace

TEST_CASE("cone parameter layout follows the arc structure") {
  SUBCASE("lq_coercive: bang arc from 0, then singular to T") {
    const Setup s = fixture("lq_coercive", 20);
    CHECK(count(s.cone, Kind::kBangConstant) == 0);
    CHECK(count(s.cone, Kind::kSingularNode) == 11);
    CHECK(count(s.cone, Kind::kTerminal) == 1);
    CHECK(count(s.cone, Kind::kInitialState) == 0);
    CHECK(s.cone.dim == 12);
    CHECK(s.cone.inequality_rows.rows() == 1);
  }
  SUBCASE("dubins: rescaled horizon is a parameter, three equalities") {
    const Setup s = fixture("dubins", 30);
    CHECK(count(s.cone, Kind::kParameter) == 1);
    CHECK(s.cone.equality_rows.rows() == 3);
    CHECK(s.cone.equality_rank == 3);
    CHECK(s.cone.reduced_dim() == s.cone.dim - 3);
  }
  SUBCASE("bang arc between singular arcs gets one constant") {
    std::mt19937_64 rng(51);
    const ControlAffineProblem p = testing::random_problem(rng, 2, 1, 0);
    const Extremal e = testing::random_candidate(
        rng, p, 30, {{{0.3, ArcLabel::kSingular}, {0.6, ArcLabel::kLower}, {1.0, ArcLabel::kSingular}}});
    const Setup s = setup(p, e);
    CHECK(count(s.cone, Kind::kBangConstant) == 1);
    CHECK(count(s.cone, Kind::kSingularNode) == 10 + 13);
    const auto summary = cone_summary(s.cone, e.arcs);
    CHECK(summary["components"][0]["arcs"][1]["parameters"] == 1);
  }
  SUBCASE("a single bang arc pins h") {
    std::mt19937_64 rng(52);
    ControlAffineProblem p = testing::random_problem(rng, 2, 2, 0, 0, false);
    const Extremal e = testing::random_candidate(rng, p, 10, {{{1.0, ArcLabel::kUpper}}, {{1.0, ArcLabel::kSingular}}});
    const Setup s = setup(p, e);
    CHECK(count(s.cone, Kind::kTerminal) == 1);
    CHECK(count(s.cone, Kind::kInitialState) == 2);
    for (int k = 0; k < s.lin.num_samples(); ++k) CHECK(s.cone.Y[k].row(0).norm() == 0.0);
  }
}

TEST_CASE("xi basis superposes and matches an independent solve") {
  std::mt19937_64 rng(53);
  const ControlAffineProblem p = testing::random_problem(rng, 3, 2, 1, 1, false);
  const Extremal e = testing::random_candidate(
      rng, p, 40, {{{0.5, ArcLabel::kSingular}, {1.0, ArcLabel::kUpper}}, {{1.0, ArcLabel::kSingular}}});
  const Setup s = setup(p, e);
  const Vector a = testing::random_matrix(rng, s.cone.dim, 1, 1.0);
  const Vector b = testing::random_matrix(rng, s.cone.dim, 1, 1.0);
  const TransformedDirection da = s.cone.expand(a), db = s.cone.expand(b), dab = s.cone.expand(a + 3 * b);
  CHECK((dab.xi - da.xi - 3 * db.xi).cwiseAbs().maxCoeff() < 1e-9 * (1 + dab.xi.cwiseAbs().maxCoeff()));
  CHECK((dab.y - da.y - 3 * db.y).cwiseAbs().maxCoeff() < 1e-12);
  const Matrix xi = integrate_xi(s.lin, da.xi.col(0), da.y);
  CHECK((xi - da.xi).cwiseAbs().maxCoeff() < 1e-9 * (1 + xi.cwiseAbs().maxCoeff()));
  // y stays constant on the bang arc.
  const int S = s.lin.num_samples();
  CHECK(da.y(0, S - 1) == doctest::Approx(da.h[0]));
  CHECK(da.y(0, S / 2 + 4) == doctest::Approx(da.h[0]));
}

TEST_CASE("equality rows are the linearized terminal constraints") {
  std::mt19937_64 rng(54);
  const ControlAffineProblem p = testing::random_problem(rng, 3, 1, 1, 2, false);
  const Extremal e = testing::random_candidate(rng, p, 50);
  const Setup s = setup(p, e);
  CHECK(s.cone.equality_rows.rows() == 2);
  CHECK((s.cone.equality_rows * s.cone.Z).cwiseAbs().maxCoeff() < 1e-9 * (1 + s.cone.equality_rows.norm()));
  CHECK((s.cone.Z.transpose() * s.cone.Z - Matrix::Identity(s.cone.reduced_dim(), s.cone.reduced_dim())).norm() <
        1e-12);
  // Row j is d eta_j / dX0 . xi(0) + d eta_j / dXT . (xi(T) + B(T) h).
  const Vector p0 = testing::random_matrix(rng, s.cone.dim, 1, 1.0);
  const TransformedDirection dir = s.cone.expand(p0);
  const int S = s.lin.num_samples();
  const Vector zT = dir.xi.col(S - 1) + s.lin.B[S - 1] * dir.h;
  const Vector x0 = e.x.col(0), xT = e.x.col(e.grid.num_nodes() - 1);
  for (int j = 0; j < 2; ++j) {
    const Vector g = augment_endpoint_gradient(p.equalities[j].gradient(x0, xT, e.r), 3, 1);
    const double expected = g.head(4).dot(dir.xi.col(0)) + g.tail(4).dot(zT);
    CHECK(s.cone.equality_rows.row(j).dot(p0) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("assembled forms agree with the closure form (polarization oracle)") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 3; ++trial) {
    const int m = 1 + trial % 2;
    const ControlAffineProblem p = testing::random_problem(rng, 3, m, trial % 2, 1, trial == 0);
    testing::ArcPattern pattern;
    if (m == 2)
      pattern = {{{0.5, ArcLabel::kSingular}, {1.0, ArcLabel::kLower}}, {{0.5, ArcLabel::kLower}, {1.0, ArcLabel::kSingular}}};
    else
      pattern = {{{0.4, ArcLabel::kUpper}, {1.0, ArcLabel::kSingular}}};
    const Extremal e = testing::random_candidate(rng, p, 30, pattern);
    const Setup s = setup(p, e);
    const Vector lambda = testing::random_matrix(rng, p.multiplier_dim(), 1, 1.0);
    const CoefficientSeries c = s.coeffs.at(lambda);
    const Matrix W = assemble_form(s.cone, s.lin, c);
    const Matrix G = assemble_gamma(s.cone, s.lin);
    CHECK((W - W.transpose()).norm() < 1e-12 * (1 + W.norm()));
    for (int d = 0; d < 5; ++d) {
      const Vector a = testing::random_matrix(rng, s.cone.dim, 1, 1.0);
      const Vector b = testing::random_matrix(rng, s.cone.dim, 1, 1.0);
      const double qa = omega_goh_closure(s.lin, c, s.cone.expand(a));
      CHECK(a.dot(W * a) == doctest::Approx(qa).epsilon(1e-9));
      const double polar = 0.25 * (omega_goh_closure(s.lin, c, s.cone.expand(a + b)) -
                                   omega_goh_closure(s.lin, c, s.cone.expand(a - b)));
      CHECK(a.dot(W * b) == doctest::Approx(polar).epsilon(1e-9));
      const TransformedDirection dir = s.cone.expand(a);
      const double gamma = integrate_samples(s.lin.traj.layout, dir.y.array().square().matrix()).sum() +
                           dir.h.squaredNorm();
      CHECK(a.dot(G * a) == doctest::Approx(gamma).epsilon(1e-12));
    }
  }
}

TEST_CASE("reduced forms are independent of the thread count") {
  const Setup s = fixture("degenerate_equalities", 60);
  const MultiplierPolytope poly = [&] {
    const AdjointBasis basis = build_adjoint_basis(s.problem, s.lin);
    return assemble_polytope(s.problem, s.lin, basis, {});
  }();
  set_thread_limit(1);
  const ReducedForms one = reduce_forms(s.cone, s.lin, s.coeffs, poly.vertices);
  set_thread_limit(3);
  const ReducedForms three = reduce_forms(s.cone, s.lin, s.coeffs, poly.vertices);
  set_thread_limit(1);
  REQUIRE(one.W.size() == poly.vertices.size());
  for (size_t k = 0; k < one.W.size(); ++k) CHECK((one.W[k] - three.W[k]).norm() == 0.0);
  CHECK(one.dim() == s.cone.reduced_dim());
  CHECK(one.scale() > 0.0);
}

TEST_CASE("faces and sign-symmetric cone membership") {
  std::mt19937_64 rng(56);
  ControlAffineProblem p = testing::random_problem(rng, 2, 1, 0);
  // An active inequality x1(T) <= x1^(T) adds a second inequality row.
  const Extremal e = testing::random_candidate(rng, p, 20);
  const double x1T = e.x(0, e.grid.num_nodes() - 1);
  Vector a = Vector::Zero(4);
  a[2] = 1.0;
  p.inequalities.push_back(EndpointFunction::quadratic(2, 0, a, Matrix::Zero(4, 4), -x1T));
  const Setup s = setup(p, e);
  REQUIRE(s.cone.inequality_rows.rows() == 2);
  CHECK(s.cone.inequality_index == std::vector<int>{0, 1});
  const ConeDiscretization face = restrict_to_face(s.cone, {1});
  CHECK(face.inequality_rows.rows() == 1);
  CHECK(face.reduced_dim() == s.cone.reduced_dim() - 1);
  const Vector q = face.Z.col(0);
  CHECK(std::abs(s.cone.inequality_rows.row(1).dot(q)) < 1e-10);

  bool flipped = false;
  CHECK(s.cone.in_cone_up_to_sign(Vector::Zero(s.cone.dim), 1e-9));
  // A face direction with row 1 tight, signed so that row 0 is negative.
  int best = 0;
  for (int j = 1; j < face.Z.cols(); ++j)
    if (std::abs(s.cone.inequality_rows.row(0).dot(face.Z.col(j))) >
        std::abs(s.cone.inequality_rows.row(0).dot(face.Z.col(best))))
      best = j;
  Vector inside = face.Z.col(best);
  REQUIRE(std::abs(s.cone.inequality_rows.row(0).dot(inside)) > 1e-6);
  if (s.cone.inequality_rows.row(0).dot(inside) > 0) inside = -inside;
  CHECK(s.cone.in_cone_up_to_sign(inside, 1e-9, &flipped));
  CHECK_FALSE(flipped);
  CHECK(s.cone.in_cone_up_to_sign(-inside, 1e-9, &flipped));
  CHECK(flipped);
}

TEST_CASE("an equality on the only parameter empties the cone") {
  // Single bang arc with pinned h and a fixed initial state: delta r is the
  // only parameter, and eta = r - r^ removes it.
  std::mt19937_64 rng(57);
  ControlAffineProblem p = testing::random_problem(rng, 2, 1, 1);
  const Extremal e = testing::random_candidate(rng, p, 10, {{{1.0, ArcLabel::kUpper}}});
  Vector a = Vector::Zero(5);
  a[4] = 1.0;
  p.equalities.push_back(EndpointFunction::quadratic(2, 1, a, Matrix::Zero(5, 5), -e.r[0]));
  const Linearization lin = compute_linearization(p, sample_trajectory(p, e));
  bool empty = false;
  try {
    discretize_cone(p, lin, {});
  } catch (const Error& err) {
    empty = err.code() == ErrorCode::kEmptyCone;
  }
  CHECK(empty);
}
