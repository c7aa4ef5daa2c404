#include "bsc/fixtures.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "bsc/errors.hpp"

namespace bsc {
namespace {

Vector vec(std::initializer_list<double> values) {
  Vector v(values.size());
  int i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

VectorField constant_field(const Vector& value) {
  const int n = static_cast<int>(value.size());
  return VectorField(
      n, 0, [value](const Vector&, const Vector&) -> Vector { return value; },
      [n](const Vector&, const Vector&) -> Matrix { return Matrix::Zero(n, n); },
      [n](const Vector&, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(n, n); });
}

// Endpoint function c . x(T) + 0.5 x(T)^T P x(T).
EndpointFunction terminal_quadratic(int n, const Vector& c, const Matrix& P) {
  Vector linear = Vector::Zero(2 * n);
  Matrix quad = Matrix::Zero(2 * n, 2 * n);
  linear.segment(n, n) = c;
  quad.block(n, n, n, n) = P;
  return EndpointFunction::quadratic(n, 0, linear, quad, 0.0);
}

double param(const FixtureParams& p, const std::string& key) { return p.at(key); }

// Nodal arc list from arc lengths counted in intervals.
std::vector<Arc> chain(const std::vector<std::pair<int, ArcLabel>>& pieces) {
  std::vector<Arc> arcs;
  int node = 0;
  for (const auto& [count, label] : pieces) {
    arcs.push_back({node, node + count, label});
    node += count;
  }
  return arcs;
}

// xdot1 = u, xdot2 = x1^2 / 2.
std::vector<VectorField> scalar_lq_fields() {
  VectorField f0(
      2, 0, [](const Vector& x, const Vector&) -> Vector { return vec({0.0, 0.5 * x[0] * x[0]}); },
      [](const Vector& x, const Vector&) -> Matrix {
        Matrix J = Matrix::Zero(2, 2);
        J(1, 0) = x[0];
        return J;
      },
      [](const Vector&, const Vector&, const Vector& w) -> Matrix {
        Matrix H = Matrix::Zero(2, 2);
        H(0, 0) = w[1];
        return H;
      });
  return {f0, constant_field(vec({1.0, 0.0}))};
}

FixtureInstance fully_singular_lq(int intervals, double cost_sign, double weight) {
  FixtureInstance out;
  ControlAffineProblem& p = out.problem;
  p.n = 2;
  p.m = 1;
  p.fields = scalar_lq_fields();
  Matrix P = Matrix::Zero(2, 2);
  P(0, 0) = weight;
  p.cost = terminal_quadratic(2, vec({0.0, cost_sign}), P);
  p.lower = vec({-1.0});
  p.upper = vec({1.0});
  p.horizon = 1.0;
  p.fixed_initial_state = Vector::Zero(2);
  TimeGrid grid = TimeGrid::uniform(1.0, intervals);
  ArcStructure arcs({chain({{intervals, ArcLabel::kSingular}})}, grid.num_nodes());
  out.extremal = Extremal(grid, Matrix::Zero(2, grid.num_nodes()), Matrix::Zero(1, grid.num_nodes()), Vector(0),
                          std::move(arcs));
  return out;
}

FixtureInstance build_dubins(int intervals, const FixtureParams& params) {
  const double theta = param(params, "theta");
  const double b1 = param(params, "b1");
  const double b2 = param(params, "b2");
  const double T = dubins_horizon(theta, b1, b2);

  ControlAffineProblem original;
  original.n = 3;
  original.m = 1;
  VectorField f0(
      3, 0, [](const Vector& x, const Vector&) -> Vector { return vec({-std::sin(x[2]), std::cos(x[2]), 0.0}); },
      [](const Vector& x, const Vector&) -> Matrix {
        Matrix J = Matrix::Zero(3, 3);
        J(0, 2) = -std::cos(x[2]);
        J(1, 2) = -std::sin(x[2]);
        return J;
      },
      [](const Vector& x, const Vector&, const Vector& w) -> Matrix {
        Matrix H = Matrix::Zero(3, 3);
        H(2, 2) = w[0] * std::sin(x[2]) - w[1] * std::cos(x[2]);
        return H;
      });
  original.fields = {f0, constant_field(vec({0.0, 0.0, 1.0}))};
  original.cost = terminal_quadratic(3, Vector::Zero(3), Matrix::Zero(3, 3));
  const Vector target = vec({b1, b2, theta});
  for (int j = 0; j < 3; ++j) {
    Vector linear = Vector::Zero(6);
    linear[3 + j] = 1.0;
    original.equalities.push_back(EndpointFunction::quadratic(3, 0, linear, Matrix::Zero(6, 6), -target[j]));
  }
  original.lower = vec({-1.0});
  original.upper = vec({1.0});
  original.horizon = T;
  original.free_horizon = true;
  original.fixed_initial_state = Vector::Zero(3);

  FixtureInstance out;
  out.problem = rescale_free_time(original);

  const double switch_time = theta / T;
  const int bang = std::max(1, static_cast<int>(std::lround(intervals * switch_time)));
  const int singular = std::max(1, intervals - bang);
  TimeGrid grid = TimeGrid::piecewise_uniform({0.0, switch_time, 1.0}, {bang, singular});
  const int nodes = grid.num_nodes();
  Matrix x(3, nodes), u(1, nodes);
  for (int k = 0; k < nodes; ++k) {
    const double s = grid.node(k);
    if (k <= bang) {
      x(0, k) = std::cos(T * s) - 1.0;
      x(1, k) = std::sin(T * s);
      x(2, k) = T * s;
      u(0, k) = 1.0;
    } else {
      const double run = T * (s - switch_time);
      x(0, k) = std::cos(theta) - 1.0 - std::sin(theta) * run;
      x(1, k) = std::sin(theta) + std::cos(theta) * run;
      x(2, k) = theta;
      u(0, k) = 0.0;
    }
  }
  ArcStructure arcs({chain({{bang, ArcLabel::kUpper}, {singular, ArcLabel::kSingular}})}, nodes);
  out.extremal = Extremal(grid, x, u, vec({T}), std::move(arcs));
  return out;
}

FixtureInstance build_lq_coercive(int intervals, const FixtureParams&) {
  FixtureInstance out;
  ControlAffineProblem& p = out.problem;
  p.n = 2;
  p.m = 1;
  p.fields = scalar_lq_fields();
  Matrix P = Matrix::Zero(2, 2);
  P(0, 0) = 1.0;
  p.cost = terminal_quadratic(2, vec({0.0, 1.0}), P);
  p.lower = vec({-1.0});
  p.upper = vec({1.0});
  p.horizon = 2.0;
  p.fixed_initial_state = vec({1.0, 0.0});
  const int half = std::max(1, intervals / 2);
  TimeGrid grid = TimeGrid::piecewise_uniform({0.0, 1.0, 2.0}, {half, half});
  const int nodes = grid.num_nodes();
  Matrix x(2, nodes), u(1, nodes);
  for (int k = 0; k < nodes; ++k) {
    const double t = grid.node(k);
    const double rest = std::max(0.0, 1.0 - t);
    x(0, k) = k <= half ? 1.0 - t : 0.0;
    x(1, k) = (1.0 - rest * rest * rest) / 6.0;
    u(0, k) = k <= half ? -1.0 : 0.0;
  }
  ArcStructure arcs({chain({{half, ArcLabel::kLower}, {half, ArcLabel::kSingular}})}, nodes);
  out.extremal = Extremal(grid, x, u, Vector(0), std::move(arcs));
  return out;
}

// Two controls on R^3 with both arcs singular and u^ = 0, x^ = 0.
FixtureInstance two_control(int intervals, std::vector<VectorField> fields, EndpointFunction cost) {
  FixtureInstance out;
  ControlAffineProblem& p = out.problem;
  p.n = 3;
  p.m = 2;
  p.fields = std::move(fields);
  p.cost = std::move(cost);
  p.lower = vec({-1.0, -1.0});
  p.upper = vec({1.0, 1.0});
  p.horizon = 1.0;
  p.fixed_initial_state = Vector::Zero(3);
  TimeGrid grid = TimeGrid::uniform(1.0, intervals);
  const auto singular = chain({{intervals, ArcLabel::kSingular}});
  ArcStructure arcs({singular, singular}, grid.num_nodes());
  out.extremal = Extremal(grid, Matrix::Zero(3, grid.num_nodes()), Matrix::Zero(2, grid.num_nodes()), Vector(0),
                          std::move(arcs));
  return out;
}

FixtureInstance build_goh_violation(int intervals, const FixtureParams&) {
  VectorField f2(
      3, 0, [](const Vector& x, const Vector&) -> Vector { return vec({0.0, 1.0, x[0]}); },
      [](const Vector&, const Vector&) -> Matrix {
        Matrix J = Matrix::Zero(3, 3);
        J(2, 0) = 1.0;
        return J;
      },
      [](const Vector&, const Vector&, const Vector&) -> Matrix { return Matrix::Zero(3, 3); });
  return two_control(intervals,
                     {constant_field(Vector::Zero(3)), constant_field(vec({1.0, 0.0, 0.0})), f2},
                     terminal_quadratic(3, vec({0.0, 0.0, 1.0}), Matrix::Zero(3, 3)));
}

FixtureInstance build_commuting(int intervals, const FixtureParams&) {
  VectorField f0(
      3, 0,
      [](const Vector& x, const Vector&) -> Vector { return vec({0.0, 0.0, 0.5 * (x[0] * x[0] + x[1] * x[1])}); },
      [](const Vector& x, const Vector&) -> Matrix {
        Matrix J = Matrix::Zero(3, 3);
        J(2, 0) = x[0];
        J(2, 1) = x[1];
        return J;
      },
      [](const Vector&, const Vector&, const Vector& w) -> Matrix {
        Matrix H = Matrix::Zero(3, 3);
        H(0, 0) = w[2];
        H(1, 1) = w[2];
        return H;
      });
  Matrix P = Matrix::Zero(3, 3);
  P(0, 0) = P(1, 1) = 1.0;
  return two_control(intervals,
                     {f0, constant_field(vec({1.0, 0.0, 0.0})), constant_field(vec({0.0, 1.0, 0.0}))},
                     terminal_quadratic(3, vec({0.0, 0.0, 1.0}), P));
}

FixtureInstance build_degenerate(int intervals, const FixtureParams&) {
  FixtureInstance out = fully_singular_lq(intervals, 1.0, 1.0);
  for (double scale : {1.0, 2.0})
    out.problem.equalities.push_back(terminal_quadratic(2, vec({0.0, scale}), Matrix::Zero(2, 2)));
  return out;
}

}  // namespace

double dubins_horizon(double theta, double b1, double b2) {
  if (!(theta > 0.0) || !std::isfinite(theta))
    throw Error(ErrorCode::kInvalidArgument, "dubins fixture needs a positive turn angle");
  // Straight run of length L after the turn: b = (cos th - 1 - L sin th, sin th + L cos th).
  const double run = -(b1 - std::cos(theta) + 1.0) * std::sin(theta) + (b2 - std::sin(theta)) * std::cos(theta);
  const double g1 = std::cos(theta) - 1.0 - run * std::sin(theta) - b1;
  const double g2 = std::sin(theta) + run * std::cos(theta) - b2;
  if (std::hypot(g1, g2) > 1e-6)
    throw Error(ErrorCode::kInvalidArgument, "target is not reachable by a turn followed by a straight line");
  if (!(run > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dubins fixture needs a positive straight run");
  return theta + run;
}

void FixtureRegistry::add(FixtureInfo info) {
  const std::string name = info.name;
  fixtures_[name] = std::move(info);
}

const FixtureInfo& FixtureRegistry::get(const std::string& name) const {
  const auto it = fixtures_.find(name);
  if (it == fixtures_.end()) throw Error(ErrorCode::kUnknownFixture, "no fixture named '" + name + "'");
  return it->second;
}

FixtureInstance FixtureRegistry::build(const std::string& name, int intervals, const FixtureParams& params) const {
  const FixtureInfo& info = get(name);
  if (intervals < 2) throw Error(ErrorCode::kInvalidArgument, "grid needs at least two intervals");
  FixtureParams merged = info.defaults;
  for (const auto& [key, value] : params) {
    if (!info.defaults.count(key))
      throw Error(ErrorCode::kConfig, "fixture '" + name + "' has no parameter '" + key + "'");
    merged[key] = value;
  }
  return info.build(intervals, merged);
}

std::vector<const FixtureInfo*> FixtureRegistry::list() const {
  std::vector<const FixtureInfo*> out;
  for (const auto& [name, info] : fixtures_) out.push_back(&info);
  return out;
}

const FixtureRegistry& FixtureRegistry::builtin() {
  static const FixtureRegistry registry = [] {
    FixtureRegistry r;
    r.add({"dubins", "time-optimal turn then straight line, rescaled to s in [0, 1]", 3, 1, "UPPER, SINGULAR",
           "SINGLE_MULTIPLIER", {{"theta", std::numbers::pi / 2}, {"b1", -2.0}, {"b2", 1.0}}, build_dubins});
    r.add({"lq_coercive", "x1' = u, x2' = x1^2/2 on [0, 2], cost x2(T) + x1(T)^2/2", 2, 1, "LOWER, SINGULAR",
           "SINGLE_MULTIPLIER", {}, build_lq_coercive});
    r.add({"lq_noncoercive", "x1' = u, x2' = x1^2/2 on [0, 1], cost -x2(T) + k x1(T)^2/2", 2, 1, "SINGULAR",
           "FALSIFIED", {{"k", 1.0}},
           [](int n, const FixtureParams& p) { return fully_singular_lq(n, -1.0, p.at("k")); }});
    r.add({"fully_singular_scalar", "x1' = u, x2' = x1^2/2 on [0, 1], cost x2(T) + x1(T)^2/2", 2, 1, "SINGULAR",
           "SINGLE_MULTIPLIER", {},
           [](int n, const FixtureParams&) { return fully_singular_lq(n, 1.0, 1.0); }});
    r.add({"two_control_goh_violation", "x' = u1 e1 + u2 (0, 1, x1), cost x3(T); [f1, f2] != 0", 3, 2,
           "SINGULAR | SINGULAR", "GOH_VIOLATED", {}, build_goh_violation});
    r.add({"two_control_commuting", "x' = u1 e1 + u2 e2 + (0, 0, |x12|^2/2), commuting controls", 3, 2,
           "SINGULAR | SINGULAR", "SINGLE_MULTIPLIER (heuristic)", {}, build_commuting});
    r.add({"degenerate_equalities", "fully_singular_scalar with x2(T) = 0 imposed twice", 2, 1, "SINGULAR",
           "SINGLE_MULTIPLIER (abnormal vertices present)", {}, build_degenerate});
    return r;
  }();
  return registry;
}

nlohmann::json fixture_table_json(const FixtureRegistry& registry) {
  nlohmann::json out = nlohmann::json::array();
  for (const FixtureInfo* info : registry.list())
    out.push_back({{"name", info->name},
                   {"description", info->description},
                   {"n", info->n},
                   {"m", info->m},
                   {"arcs", info->arcs},
                   {"expected", info->expected},
                   {"parameters", info->defaults}});
  return out;
}

std::string fixture_table_text(const FixtureRegistry& registry) {
  std::ostringstream out;
  for (const FixtureInfo* info : registry.list()) {
    out << info->name << "  (n=" << info->n << ", m=" << info->m << ", arcs: " << info->arcs
        << ", expected: " << info->expected << ")\n    " << info->description << '\n';
    if (!info->defaults.empty()) {
      out << "    parameters:";
      for (const auto& [key, value] : info->defaults) out << ' ' << key << '=' << value;
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace bsc
