#include <doctest.h>

#include <random>

#include "bsc/errors.hpp"
#include "bsc/fixtures.hpp"
#include "bsc/problem.hpp"
#include "random_problem.hpp"

using namespace bsc;

namespace {

double rel_err(const Matrix& a, const Matrix& b) { return (a - b).norm() / (1.0 + b.norm()); }

template <typename F>
void expect_error(ErrorCode code, F&& body) {
  bool thrown = false;
  try {
    body();
  } catch (const Error& e) {
    thrown = true;
    CHECK(e.code() == code);
  }
  CHECK(thrown);
}

}  // namespace

TEST_CASE("finite-difference derivatives of a field match the analytic ones") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 2 + trial % 3, nr = trial % 2;
    const VectorField f = testing::random_field(rng, n, nr);
    const VectorField fd = finite_difference_derivatives(f);
    CHECK(f.analytic_jacobian());
    CHECK_FALSE(fd.analytic_jacobian());
    const Vector x = testing::random_matrix(rng, n, 1, 1.0);
    const Vector r = testing::random_matrix(rng, nr, 1, 1.0);
    const Vector w = testing::random_matrix(rng, n, 1, 1.0);
    CHECK(rel_err(fd.jacobian(x, r), f.jacobian(x, r)) < 1e-8);
    CHECK(rel_err(fd.weighted_hessian(x, r, w), f.weighted_hessian(x, r, w)) < 1e-6);

    const VectorField values = VectorField::from_values(n, nr, [f](const Vector& a, const Vector& b) {
      return f.eval(a, b);
    });
    CHECK(rel_err(values.weighted_hessian(x, r, w), f.weighted_hessian(x, r, w)) < 1e-5);
  }
}

TEST_CASE("finite-difference endpoint derivatives match the analytic ones") {
  std::mt19937_64 rng(12);
  const EndpointFunction phi = testing::random_endpoint(rng, 3, 1);
  const EndpointFunction fd = finite_difference_derivatives(phi);
  const Vector x0 = testing::random_matrix(rng, 3, 1, 1.0), xT = testing::random_matrix(rng, 3, 1, 1.0);
  const Vector r = testing::random_matrix(rng, 1, 1, 1.0);
  CHECK(fd.eval(x0, xT, r) == doctest::Approx(phi.eval(x0, xT, r)));
  CHECK(rel_err(fd.gradient(x0, xT, r), phi.gradient(x0, xT, r)) < 1e-8);
  CHECK(rel_err(fd.hessian(x0, xT, r), phi.hessian(x0, xT, r)) < 1e-6);
}

TEST_CASE("quadratic endpoint function") {
  Vector a(4);
  a << 1, 2, 3, 4;
  Matrix P = Matrix::Identity(4, 4);
  const EndpointFunction q = EndpointFunction::quadratic(2, 0, a, P, 0.5);
  Vector x0(2), xT(2);
  x0 << 1, 0;
  xT << 0, 1;
  CHECK(q.eval(x0, xT, Vector(0)) == doctest::Approx(1 + 4 + 1 + 0.5));
  CHECK(q.gradient(x0, xT, Vector(0))[0] == doctest::Approx(2.0));
  expect_error(ErrorCode::kDimensionMismatch, [] { EndpointFunction::quadratic(2, 0, Vector::Zero(3), Matrix::Zero(4, 4), 0); });
}

TEST_CASE("lie bracket of linear fields is the matrix commutator") {
  std::mt19937_64 rng(13);
  const Matrix A = testing::random_matrix(rng, 3, 3, 1.0), B = testing::random_matrix(rng, 3, 3, 1.0);
  auto linear = [](const Matrix& M) {
    return VectorField(
        3, 0, [M](const Vector& x, const Vector&) -> Vector { return M * x; },
        [M](const Vector&, const Vector&) -> Matrix { return M; },
        [](const Vector&, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(3, 3); });
  };
  const VectorField br = lie_bracket(linear(A), linear(B));
  const Vector x = testing::random_matrix(rng, 3, 1, 1.0);
  CHECK(rel_err(br.eval(x, Vector(0)), (A * B - B * A) * x) < 1e-13);
  CHECK(rel_err(br.jacobian(x, Vector(0)), A * B - B * A) < 1e-12);
}

TEST_CASE("lie bracket of nonlinear fields against finite differences") {
  std::mt19937_64 rng(14);
  const VectorField f = testing::random_field(rng, 3, 0), g = testing::random_field(rng, 3, 0);
  const VectorField br = lie_bracket(f, g);
  const Vector x = testing::random_matrix(rng, 3, 1, 1.0);
  const Vector expected = f.jacobian(x, Vector(0)) * g.eval(x, Vector(0)) - g.jacobian(x, Vector(0)) * f.eval(x, Vector(0));
  CHECK(rel_err(br.eval(x, Vector(0)), expected) < 1e-13);
  CHECK(rel_err(br.jacobian(x, Vector(0)), finite_difference_derivatives(br).jacobian(x, Vector(0))) < 1e-7);
}

TEST_CASE("problem consistency checks") {
  std::mt19937_64 rng(15);
  ControlAffineProblem p = testing::random_problem(rng, 2, 1, 0);
  CHECK_NOTHROW(p.check());
  CHECK(p.multiplier_dim() == 1);

  ControlAffineProblem bad_bounds = p;
  bad_bounds.lower[0] = 3.0;
  expect_error(ErrorCode::kInvalidArgument, [&] { bad_bounds.check(); });

  ControlAffineProblem missing_field = p;
  missing_field.fields.pop_back();
  expect_error(ErrorCode::kDimensionMismatch, [&] { missing_field.check(); });

  ControlAffineProblem bad_horizon = p;
  bad_horizon.horizon = 0.0;
  expect_error(ErrorCode::kInvalidArgument, [&] { bad_horizon.check(); });
  expect_error(ErrorCode::kInvalidArgument, [&] { p.endpoint(3); });
}

TEST_CASE("free-time rescaling appends T and scales the fields") {
  std::mt19937_64 rng(16);
  ControlAffineProblem p = testing::random_problem(rng, 2, 1, 0);
  p.free_horizon = true;
  p.horizon = 2.5;
  const ControlAffineProblem s = rescale_free_time(p);
  CHECK(s.n_r == 1);
  CHECK(s.horizon == 1.0);
  CHECK_FALSE(s.free_horizon);
  CHECK(s.parameter_names.back() == "T");
  const Vector x = testing::random_matrix(rng, 2, 1, 1.0);
  Vector r(1);
  r << 1.7;
  CHECK(rel_err(s.fields[1].eval(x, r), 1.7 * p.fields[1].eval(x, Vector(0))) < 1e-15);
  CHECK(s.cost.eval(x, x, r) == doctest::Approx(1.7));
  const VectorField fd = finite_difference_derivatives(s.fields[0]);
  const Vector w = testing::random_matrix(rng, 2, 1, 1.0);
  CHECK(rel_err(fd.jacobian(x, r), s.fields[0].jacobian(x, r)) < 1e-8);
  CHECK(rel_err(fd.weighted_hessian(x, r, w), s.fields[0].weighted_hessian(x, r, w)) < 1e-6);

  ControlAffineProblem named = testing::random_problem(rng, 2, 1, 1);
  named.free_horizon = true;
  named.parameter_names = {"T"};
  expect_error(ErrorCode::kInvalidArgument, [&] { rescale_free_time(named); });
  ControlAffineProblem fixed = testing::random_problem(rng, 2, 1, 0);
  expect_error(ErrorCode::kInvalidArgument, [&] { rescale_free_time(fixed); });
}

TEST_CASE("error messages carry the code name") {
  const Error e(ErrorCode::kEmptyPolytope, "nothing");
  CHECK(std::string(e.what()).rfind("EMPTY_POLYTOPE", 0) == 0);
}

TEST_CASE("fixture registry") {
  const FixtureRegistry& reg = FixtureRegistry::builtin();
  CHECK(reg.list().size() == 7);
  CHECK(reg.contains("dubins"));
  expect_error(ErrorCode::kUnknownFixture, [&] { reg.get("nope"); });
  expect_error(ErrorCode::kConfig, [&] { reg.build("dubins", 40, {{"speed", 2.0}}); });
  expect_error(ErrorCode::kInvalidArgument, [&] { reg.build("dubins", 40, {{"b2", 5.0}}); });
  CHECK(dubins_horizon(std::acos(-1.0) / 2, -2.0, 1.0) == doctest::Approx(std::acos(-1.0) / 2 + 1.0));
  const auto table = fixture_table_json(reg);
  CHECK(table.size() == 7);
  CHECK(table[0]["name"] == "degenerate_equalities");
}
