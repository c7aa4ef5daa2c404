#include <doctest.h>

#include <algorithm>
#include <random>

#include "bsc/errors.hpp"
#include "bsc/fixtures.hpp"
#include "bsc/multipliers.hpp"
#include "random_problem.hpp"

using namespace bsc;

namespace {

struct Pipeline {
  Linearization lin;
  AdjointBasis basis;
};

Pipeline prepare(const ControlAffineProblem& p, const Extremal& e) {
  Pipeline out{compute_linearization(p, sample_trajectory(p, e)), {}};
  out.basis = build_adjoint_basis(p, out.lin);
  return out;
}

bool has_vertex(const std::vector<Vector>& vertices, const Vector& target) {
  return std::any_of(vertices.begin(), vertices.end(),
                     [&](const Vector& v) { return (v - target).cwiseAbs().maxCoeff() < 1e-8; });
}

}  // namespace

TEST_CASE("costates are linear in the multiplier") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 4; ++trial) {
    const ControlAffineProblem p = testing::random_problem(rng, 2 + trial % 2, 1 + trial % 2, trial % 2, 2, trial < 2);
    const Extremal e = testing::random_candidate(rng, p, 80);
    const Pipeline pipe = prepare(p, e);
    CHECK(pipe.basis.dim == 3);
    const Vector lambda = testing::random_matrix(rng, 3, 1, 1.0);
    const Matrix direct = integrate_costate(p, pipe.lin, lambda);
    const Matrix combined = pipe.basis.costate(lambda);
    CHECK((direct - combined).cwiseAbs().maxCoeff() <= 1e-8 * (1.0 + direct.cwiseAbs().maxCoeff()));
    // psi(T) is the terminal gradient of the Lagrangian.
    Vector grad = Vector::Zero(p.augmented_dim());
    const Vector x0 = e.x.col(0), xT = e.x.col(e.grid.num_nodes() - 1);
    for (int k = 0; k < 3; ++k)
      grad += lambda[k] * augment_endpoint_gradient(p.endpoint(k).gradient(x0, xT, e.r), p.n, p.n_r).tail(p.augmented_dim());
    CHECK((combined.col(combined.cols() - 1) - grad).norm() < 1e-12 * (1.0 + grad.norm()));
  }
}

TEST_CASE("costate basis converges under grid refinement") {
  std::mt19937_64 rng(32);
  const ControlAffineProblem p = testing::random_problem(rng, 3, 1, 0);
  const Extremal a = testing::random_candidate(rng, p, 100);
  std::mt19937_64 rng2(32);
  testing::random_problem(rng2, 3, 1, 0);
  const Extremal b = testing::random_candidate(rng2, p, 200);
  // Same control signal on two grids; the gap is second order in the
  // piecewise-linear control interpolation.
  const Matrix pa = prepare(p, a).basis.psi_nodes[0];
  const Matrix pb = prepare(p, b).basis.psi_nodes[0];
  CHECK((pa.col(0) - pb.col(0)).norm() < 1e-3 * (1.0 + pa.col(0).norm()));
}

TEST_CASE("dubins multiplier polytope") {
  const FixtureInstance inst = FixtureRegistry::builtin().build("dubins", 200);
  const Pipeline pipe = prepare(inst.problem, inst.extremal);
  const MultiplierPolytope poly = assemble_polytope(inst.problem, pipe.lin, pipe.basis, {});
  CHECK(poly.dim == 4);
  CHECK(poly.num_alpha == 1);
  CHECK(poly.num_beta == 3);
  REQUIRE(poly.vertices.size() == 1);
  const Vector& v = poly.vertices[0];
  // alpha0 = |beta1| = 1/2 and beta2 = beta3 = 0 for the unit-speed turn.
  CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(std::abs(v[1]) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(std::abs(v[2]) < 1e-8);
  CHECK(std::abs(v[3]) < 1e-8);
  CHECK_FALSE(poly.lifted);

  const FirstOrderReport fo = check_first_order(inst.problem, pipe.lin, pipe.basis, poly, {});
  CHECK(fo.normal);
  CHECK(fo.strict_complementarity);
  CHECK(fo.stationarity_residual < 1e-8);

  // The unscaled Hamiltonian is constant and equals -alpha0.
  const Vector H = hamiltonian_samples(pipe.lin, pipe.basis, v) / inst.extremal.r[0];
  CHECK((H.array() + v[0]).abs().maxCoeff() < 1e-7);
}

TEST_CASE("lq fixtures have the unique normal multiplier") {
  for (const char* name : {"lq_coercive", "fully_singular_scalar", "lq_noncoercive"}) {
    CAPTURE(name);
    const FixtureInstance inst = FixtureRegistry::builtin().build(name, 100);
    const Pipeline pipe = prepare(inst.problem, inst.extremal);
    const MultiplierPolytope poly = assemble_polytope(inst.problem, pipe.lin, pipe.basis, {});
    REQUIRE(poly.vertices.size() == 1);
    CHECK(poly.vertices[0][0] == doctest::Approx(1.0));
    const FirstOrderReport fo = check_first_order(inst.problem, pipe.lin, pipe.basis, poly, {});
    CHECK(fo.normal);
    CHECK(fo.strict_complementarity);
  }
}

TEST_CASE("relabelling the bang arc empties the polytope") {
  const FixtureInstance inst = FixtureRegistry::builtin().build("lq_coercive", 100);
  const Extremal& e = inst.extremal;
  std::vector<Arc> arcs = e.arcs.arcs(0);
  arcs[0].label = ArcLabel::kUpper;
  Extremal flipped(e.grid, e.x, e.u, e.r, ArcStructure({arcs}, e.grid.num_nodes()));
  const Pipeline pipe = prepare(inst.problem, flipped);
  bool empty = false;
  try {
    assemble_polytope(inst.problem, pipe.lin, pipe.basis, {});
  } catch (const Error& err) {
    empty = err.code() == ErrorCode::kEmptyPolytope;
  }
  CHECK(empty);
}

TEST_CASE("repeated equality gives abnormal vertices of both signs") {
  const FixtureInstance inst = FixtureRegistry::builtin().build("degenerate_equalities", 100);
  const Pipeline pipe = prepare(inst.problem, inst.extremal);
  const MultiplierPolytope poly = assemble_polytope(inst.problem, pipe.lin, pipe.basis, {});
  CHECK(poly.dim == 3);
  CHECK(poly.vertices.size() == 5);
  CHECK(has_vertex(poly.vertices, Vector{{1.0, 0.0, 0.0}}));
  for (double s : {-1.0, 1.0}) {
    CHECK(has_vertex(poly.vertices, Vector{{0.0, s, 0.0}}));
    CHECK(has_vertex(poly.vertices, Vector{{0.0, 0.0, s}}));
  }
  for (const auto& v : poly.vertices) {
    CHECK(v.lpNorm<1>() == doctest::Approx(1.0));
    CHECK((poly.equalities * v).cwiseAbs().maxCoeff() <= poly.tol_stationarity);
    CHECK((poly.inequalities * v).minCoeff() >= -1e-12);
  }
  const FirstOrderReport fo = check_first_order(inst.problem, pipe.lin, pipe.basis, poly, {});
  CHECK_FALSE(fo.normal);
  const auto json = polytope_to_json(poly);
  CHECK(json["vertices"].size() == 5);
}

TEST_CASE("many equalities switch to the lifted enumeration") {
  // Nine copies of the same terminal equality on the scalar fixture.
  FixtureInstance inst = FixtureRegistry::builtin().build("fully_singular_scalar", 40);
  Vector a = Vector::Zero(4);
  a[3] = 1.0;
  for (int j = 0; j < 9; ++j)
    inst.problem.equalities.push_back(EndpointFunction::quadratic(2, 0, (j + 1.0) * a, Matrix::Zero(4, 4), 0.0));
  const Pipeline pipe = prepare(inst.problem, inst.extremal);
  const MultiplierPolytope poly = assemble_polytope(inst.problem, pipe.lin, pipe.basis, {});
  CHECK(poly.lifted);
  CHECK(has_vertex(poly.vertices, Vector::Unit(10, 0)));
  for (const auto& v : poly.vertices) {
    CHECK(v.lpNorm<1>() == doctest::Approx(1.0));
    CHECK((poly.equalities * v).cwiseAbs().maxCoeff() <= poly.tol_stationarity);
  }
}
