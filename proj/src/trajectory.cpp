#include "bsc/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "bsc/errors.hpp"

namespace bsc {
namespace {

Vector augmented_velocity(const ControlAffineProblem& problem, const Vector& X, const Vector& u) {
  const Vector x = X.head(problem.n);
  const Vector r = X.tail(problem.n_r);
  Vector v = Vector::Zero(problem.augmented_dim());
  v.head(problem.n) = problem.fields[0].eval(x, r);
  for (int i = 0; i < problem.m; ++i) v.head(problem.n) += u[i] * problem.fields[i + 1].eval(x, r);
  return v;
}

Vector interval_controls(const ControlAffineProblem& problem, const Extremal& extremal, int interval,
                         bool right_end) {
  Vector u(problem.m);
  for (int i = 0; i < problem.m; ++i) u[i] = interval_control(problem, extremal, i, interval, right_end);
  return u;
}

void check_against_problem(const ControlAffineProblem& problem, const Extremal& extremal) {
  problem.check();
  if (extremal.x.rows() != problem.n || extremal.u.rows() != problem.m || extremal.r.size() != problem.n_r ||
      extremal.arcs.num_components() != problem.m)
    throw Error(ErrorCode::kDimensionMismatch, "extremal dimensions disagree with problem");
}

}  // namespace

void Tolerances::check() const {
  for (double v : {dynamics, endpoint, stationarity, strict, dedupe, eigen, rho_min, refinement})
    if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::kConfig, "tolerances must be positive");
}

TimeGrid::TimeGrid(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 2) throw Error(ErrorCode::kInvalidArgument, "time grid needs at least two nodes");
  if (nodes_.front() != 0.0) throw Error(ErrorCode::kInvalidArgument, "time grid must start at 0");
  for (size_t k = 0; k + 1 < nodes_.size(); ++k)
    if (!(nodes_[k + 1] > nodes_[k]) || !std::isfinite(nodes_[k + 1]))
      throw Error(ErrorCode::kInvalidArgument, "time grid must be strictly increasing");
}

TimeGrid TimeGrid::uniform(double horizon, int intervals) {
  return piecewise_uniform({0.0, horizon}, {intervals});
}

TimeGrid TimeGrid::piecewise_uniform(const std::vector<double>& breaks, const std::vector<int>& counts) {
  if (breaks.size() != counts.size() + 1 || counts.empty())
    throw Error(ErrorCode::kInvalidArgument, "piecewise grid needs one count per segment");
  std::vector<double> nodes{breaks.front()};
  for (size_t s = 0; s < counts.size(); ++s) {
    if (counts[s] < 1) throw Error(ErrorCode::kInvalidArgument, "each grid segment needs an interval");
    const double a = breaks[s];
    const double b = breaks[s + 1];
    for (int k = 1; k < counts[s]; ++k) nodes.push_back(a + (b - a) * k / counts[s]);
    nodes.push_back(b);
  }
  return TimeGrid(std::move(nodes));
}

double TimeGrid::max_step() const {
  double h = 0.0;
  for (int k = 0; k < num_intervals(); ++k) h = std::max(h, step(k));
  return h;
}

int TimeGrid::snap(double t) const {
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
  int best = static_cast<int>(it - nodes_.begin());
  if (best == num_nodes() || (best > 0 && t - nodes_[best - 1] < nodes_[best] - t)) --best;
  double half_step = 0.5 * (best < num_intervals() ? step(best) : step(best - 1));
  if (best > 0 && best < num_intervals()) half_step = 0.5 * std::min(step(best - 1), step(best));
  if (std::abs(t - nodes_[best]) > half_step) {
    std::ostringstream msg;
    msg << "time " << t << " is not within half a step of a grid node";
    throw Error(ErrorCode::kInvalidArgument, msg.str());
  }
  return best;
}

int TimeGrid::locate(double t) const {
  if (t < 0.0 || t > horizon()) throw Error(ErrorCode::kInvalidArgument, "time outside the horizon");
  const auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t);
  const int k = static_cast<int>(it - nodes_.begin());
  return std::clamp(k - 1, 0, num_intervals() - 1);
}

const char* arc_label_name(ArcLabel label) {
  switch (label) {
    case ArcLabel::kLower: return "LOWER";
    case ArcLabel::kUpper: return "UPPER";
    case ArcLabel::kSingular: return "SINGULAR";
  }
  return "?";
}

ArcLabel parse_arc_label(const std::string& name) {
  if (name == "LOWER") return ArcLabel::kLower;
  if (name == "UPPER") return ArcLabel::kUpper;
  if (name == "SINGULAR") return ArcLabel::kSingular;
  throw Error(ErrorCode::kInvalidArgument, "unknown arc label '" + name + "'");
}

ArcStructure::ArcStructure(std::vector<std::vector<Arc>> components, int num_nodes)
    : components_(std::move(components)) {
  for (size_t i = 0; i < components_.size(); ++i) {
    const auto& arcs = components_[i];
    const std::string where = "component " + std::to_string(i) + ": ";
    if (arcs.empty()) throw Error(ErrorCode::kInvalidArgument, where + "no arcs");
    if (arcs.front().first_node != 0 || arcs.back().last_node != num_nodes - 1)
      throw Error(ErrorCode::kInvalidArgument, where + "arcs must cover the whole horizon");
    std::vector<int> owner(num_nodes - 1, -1);
    for (size_t a = 0; a < arcs.size(); ++a) {
      if (arcs[a].last_node <= arcs[a].first_node)
        throw Error(ErrorCode::kInvalidArgument, where + "arc with non-positive length");
      if (a > 0) {
        if (arcs[a].first_node != arcs[a - 1].last_node)
          throw Error(ErrorCode::kInvalidArgument, where + "arcs overlap or leave a gap");
        if (arcs[a].label == arcs[a - 1].label)
          throw Error(ErrorCode::kInvalidArgument, where + "adjacent arcs with the same label");
        if (arcs[a].label != ArcLabel::kSingular && arcs[a - 1].label != ArcLabel::kSingular)
          throw Error(ErrorCode::kInvalidArgument, where + "bang-bang switches are not supported");
      }
      for (int k = arcs[a].first_node; k < arcs[a].last_node; ++k) owner[k] = static_cast<int>(a);
    }
    interval_arc_.push_back(std::move(owner));
  }
}

ArcLabel ArcStructure::interval_label(int component, int interval) const {
  return components_[component][interval_arc_[component][interval]].label;
}

bool ArcStructure::node_in_singular_arc(int component, int node) const {
  for (const auto& arc : components_[component])
    if (arc.label == ArcLabel::kSingular && node >= arc.first_node && node <= arc.last_node) return true;
  return false;
}

Extremal::Extremal(TimeGrid grid_in, Matrix x_in, Matrix u_in, Vector r_in, ArcStructure arcs_in)
    : grid(std::move(grid_in)), x(std::move(x_in)), u(std::move(u_in)), r(std::move(r_in)),
      arcs(std::move(arcs_in)) {
  if (x.cols() != grid.num_nodes() || u.cols() != grid.num_nodes())
    throw Error(ErrorCode::kDimensionMismatch, "extremal needs one state and control column per node");
  if (arcs.num_components() != u.rows())
    throw Error(ErrorCode::kDimensionMismatch, "extremal needs one arc list per control component");
  if (!x.allFinite() || !u.allFinite() || !r.allFinite())
    throw Error(ErrorCode::kNonFinite, "extremal contains non-finite values");
}

double SampleLayout::time(int sample) const {
  const int k = sample / 3;
  const int j = sample % 3;
  return grid.node(k) + 0.5 * j * grid.step(k);
}

double SampleLayout::weight(int sample) const {
  const double h = grid.step(sample / 3);
  return (sample % 3 == 1 ? 4.0 : 1.0) * h / 6.0;
}

Vector integrate_samples(const SampleLayout& layout, const Matrix& samples) {
  Vector total = Vector::Zero(samples.rows());
  for (int s = 0; s < layout.num_samples(); ++s) total += layout.weight(s) * samples.col(s);
  return total;
}

double interval_control(const ControlAffineProblem& problem, const Extremal& extremal, int component,
                        int interval, bool right_end) {
  const ArcLabel label = extremal.arcs.interval_label(component, interval);
  if (label == ArcLabel::kLower) return problem.lower[component];
  if (label == ArcLabel::kUpper) return problem.upper[component];
  const Arc& arc = extremal.arcs.arcs(component)[extremal.arcs.interval_arc(component, interval)];
  const int node = right_end ? interval + 1 : interval;
  if (node == arc.first_node && arc.first_node > 0) {
    const auto& u = extremal.u;
    if (arc.last_node - arc.first_node >= 2) return 2.0 * u(component, node + 1) - u(component, node + 2);
    return u(component, node + 1);
  }
  return extremal.u(component, node);
}

SampledTrajectory sample_trajectory(const ControlAffineProblem& problem, const Extremal& extremal) {
  check_against_problem(problem, extremal);
  SampledTrajectory traj;
  traj.layout.grid = extremal.grid;
  traj.arcs = extremal.arcs;
  traj.n = problem.n;
  traj.m = problem.m;
  traj.n_r = problem.n_r;
  traj.lower = problem.lower;
  traj.upper = problem.upper;
  const int d = problem.augmented_dim();
  const int nodes = extremal.grid.num_nodes();
  const int samples = traj.num_samples();
  traj.X_nodes.resize(d, nodes);
  for (int k = 0; k < nodes; ++k) {
    traj.X_nodes.col(k).head(problem.n) = extremal.x.col(k);
    traj.X_nodes.col(k).tail(problem.n_r) = extremal.r;
  }
  traj.X.resize(d, samples);
  traj.U.resize(problem.m, samples);
  traj.Xdot.resize(d, samples);
  for (int k = 0; k < extremal.grid.num_intervals(); ++k) {
    const double h = extremal.grid.step(k);
    const Vector u0 = interval_controls(problem, extremal, k, false);
    const Vector u1 = interval_controls(problem, extremal, k, true);
    const Vector X0 = traj.X_nodes.col(k);
    const Vector X1 = traj.X_nodes.col(k + 1);
    const Vector v0 = augmented_velocity(problem, X0, u0);
    const Vector v1 = augmented_velocity(problem, X1, u1);
    const Vector um = 0.5 * (u0 + u1);
    const Vector Xm = 0.5 * (X0 + X1) + h / 8.0 * (v0 - v1);
    traj.X.col(3 * k) = X0;
    traj.X.col(3 * k + 1) = Xm;
    traj.X.col(3 * k + 2) = X1;
    traj.U.col(3 * k) = u0;
    traj.U.col(3 * k + 1) = um;
    traj.U.col(3 * k + 2) = u1;
    traj.Xdot.col(3 * k) = v0;
    traj.Xdot.col(3 * k + 1) = augmented_velocity(problem, Xm, um);
    traj.Xdot.col(3 * k + 2) = v1;
  }
  return traj;
}

std::pair<Vector, Vector> interpolate(const ControlAffineProblem& problem, const Extremal& extremal,
                                      double t) {
  check_against_problem(problem, extremal);
  const int k = extremal.grid.locate(t);
  const double t0 = extremal.grid.node(k);
  const double h = extremal.grid.step(k);
  if (t == t0) return {extremal.x.col(k), extremal.u.col(k)};
  if (t == t0 + h) return {extremal.x.col(k + 1), extremal.u.col(k + 1)};
  const Vector u0 = interval_controls(problem, extremal, k, false);
  const Vector u1 = interval_controls(problem, extremal, k, true);
  const int n = problem.n;
  Vector X0(problem.augmented_dim()), X1(problem.augmented_dim());
  X0 << extremal.x.col(k), extremal.r;
  X1 << extremal.x.col(k + 1), extremal.r;
  const Vector v0 = augmented_velocity(problem, X0, u0).head(n);
  const Vector v1 = augmented_velocity(problem, X1, u1).head(n);
  const double s = (t - t0) / h;
  const double h00 = 2 * s * s * s - 3 * s * s + 1;
  const double h10 = s * s * s - 2 * s * s + s;
  const double h01 = -2 * s * s * s + 3 * s * s;
  const double h11 = s * s * s - s * s;
  Vector x = h00 * extremal.x.col(k) + h10 * h * v0 + h01 * extremal.x.col(k + 1) + h11 * h * v1;
  Vector u = (1.0 - s) * u0 + s * u1;
  return {x, u};
}

ValidationReport validate_extremal(const ControlAffineProblem& problem, const Extremal& extremal,
                                   const Tolerances& tolerances) {
  check_against_problem(problem, extremal);
  tolerances.check();
  ValidationReport report;
  const TimeGrid& grid = extremal.grid;

  if (std::abs(grid.horizon() - problem.horizon) > 1e-12 * (1.0 + problem.horizon))
    report.failures.push_back("grid horizon differs from the problem horizon");

  // One-step RK4 defect with the interval controls.
  const double scale = 1.0 + extremal.x.cwiseAbs().maxCoeff();
  report.dynamics_tolerance = tolerances.dynamics * scale;
  int worst_interval = -1;
  for (int k = 0; k < grid.num_intervals(); ++k) {
    const double h = grid.step(k);
    const Vector u0 = interval_controls(problem, extremal, k, false);
    const Vector u1 = interval_controls(problem, extremal, k, true);
    const Vector um = 0.5 * (u0 + u1);
    Vector X(problem.augmented_dim());
    X << extremal.x.col(k), extremal.r;
    const Vector k1 = augmented_velocity(problem, X, u0);
    const Vector k2 = augmented_velocity(problem, X + 0.5 * h * k1, um);
    const Vector k3 = augmented_velocity(problem, X + 0.5 * h * k2, um);
    const Vector k4 = augmented_velocity(problem, X + h * k3, u1);
    const Vector next = X + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    const double defect = (next.head(problem.n) - extremal.x.col(k + 1)).cwiseAbs().maxCoeff();
    if (defect > report.dynamics_residual) {
      report.dynamics_residual = defect;
      worst_interval = k;
    }
  }
  if (report.dynamics_residual > report.dynamics_tolerance) {
    std::ostringstream msg;
    msg << "dynamics residual " << report.dynamics_residual << " on interval " << worst_interval
        << " exceeds " << report.dynamics_tolerance;
    report.failures.push_back(msg.str());
  }

  const Vector x0 = extremal.x.col(0);
  const Vector xT = extremal.x.col(grid.num_nodes() - 1);
  if (problem.fixed_initial_state) {
    const double gap = (x0 - *problem.fixed_initial_state).cwiseAbs().maxCoeff();
    if (gap > tolerances.endpoint) {
      std::ostringstream msg;
      msg << "initial state differs from the fixed value by " << gap;
      report.failures.push_back(msg.str());
    }
  }
  for (int j = 0; j < problem.num_equalities(); ++j) {
    const double residual = std::abs(problem.equalities[j].eval(x0, xT, extremal.r));
    report.equality_residuals.push_back(residual);
    if (residual > tolerances.endpoint) {
      std::ostringstream msg;
      msg << "equality constraint " << j << " residual " << residual;
      report.failures.push_back(msg.str());
    }
  }
  for (int i = 0; i < problem.num_inequalities(); ++i) {
    const double value = problem.inequalities[i].eval(x0, xT, extremal.r);
    report.inequality_values.push_back(value);
    if (value > tolerances.endpoint) {
      std::ostringstream msg;
      msg << "inequality constraint " << i << " violated by " << value;
      report.failures.push_back(msg.str());
    }
  }

  for (int i = 0; i < problem.m; ++i) {
    const double a = problem.lower[i];
    const double b = problem.upper[i];
    const double slack = 1e-12 * (1.0 + std::max(std::abs(a), std::abs(b)));
    for (int k = 0; k < grid.num_nodes(); ++k) {
      const double u = extremal.u(i, k);
      if (u < a - slack || u > b + slack) {
        std::ostringstream msg;
        msg << "control " << i << " leaves its bounds at node " << k;
        report.failures.push_back(msg.str());
        break;
      }
    }
    for (const Arc& arc : extremal.arcs.arcs(i)) {
      if (arc.label == ArcLabel::kSingular) continue;
      const double bound = arc.label == ArcLabel::kLower ? a : b;
      const int first = arc.first_node == 0 ? 0 : arc.first_node + 1;
      for (int k = first; k <= arc.last_node; ++k) {
        if (std::abs(extremal.u(i, k) - bound) > slack) {
          std::ostringstream msg;
          msg << "control " << i << " is not at its " << arc_label_name(arc.label) << " bound at node " << k;
          report.failures.push_back(msg.str());
          break;
        }
      }
    }
  }
  return report;
}

nlohmann::json extremal_to_json(const Extremal& extremal) {
  nlohmann::json out;
  out["nodes"] = extremal.grid.nodes();
  nlohmann::json x = nlohmann::json::array();
  nlohmann::json u = nlohmann::json::array();
  for (int k = 0; k < extremal.grid.num_nodes(); ++k) {
    x.push_back(std::vector<double>(extremal.x.col(k).data(), extremal.x.col(k).data() + extremal.x.rows()));
    u.push_back(std::vector<double>(extremal.u.col(k).data(), extremal.u.col(k).data() + extremal.u.rows()));
  }
  out["x"] = x;
  out["u"] = u;
  out["r"] = std::vector<double>(extremal.r.data(), extremal.r.data() + extremal.r.size());
  nlohmann::json arcs = nlohmann::json::array();
  for (int i = 0; i < extremal.arcs.num_components(); ++i) {
    nlohmann::json list = nlohmann::json::array();
    for (const Arc& arc : extremal.arcs.arcs(i))
      list.push_back({{"from", extremal.grid.node(arc.first_node)},
                      {"to", extremal.grid.node(arc.last_node)},
                      {"label", arc_label_name(arc.label)}});
    arcs.push_back(list);
  }
  out["arcs"] = arcs;
  return out;
}

Extremal extremal_from_json(const nlohmann::json& json) {
  try {
    TimeGrid grid(json.at("nodes").get<std::vector<double>>());
    const auto xs = json.at("x").get<std::vector<std::vector<double>>>();
    const auto us = json.at("u").get<std::vector<std::vector<double>>>();
    const auto rs = json.value("r", std::vector<double>{});
    if (static_cast<int>(xs.size()) != grid.num_nodes() || static_cast<int>(us.size()) != grid.num_nodes())
      throw Error(ErrorCode::kDimensionMismatch, "extremal json needs one x and u entry per node");
    const int n = static_cast<int>(xs.front().size());
    const int m = static_cast<int>(us.front().size());
    Matrix x(n, grid.num_nodes()), u(m, grid.num_nodes());
    for (int k = 0; k < grid.num_nodes(); ++k) {
      if (static_cast<int>(xs[k].size()) != n || static_cast<int>(us[k].size()) != m)
        throw Error(ErrorCode::kDimensionMismatch, "ragged state or control entries");
      x.col(k) = Eigen::Map<const Vector>(xs[k].data(), n);
      u.col(k) = Eigen::Map<const Vector>(us[k].data(), m);
    }
    std::vector<std::vector<Arc>> components;
    for (const auto& list : json.at("arcs")) {
      std::vector<Arc> arcs;
      for (const auto& entry : list)
        arcs.push_back({grid.snap(entry.at("from").get<double>()), grid.snap(entry.at("to").get<double>()),
                        parse_arc_label(entry.at("label").get<std::string>())});
      components.push_back(std::move(arcs));
    }
    ArcStructure structure(std::move(components), grid.num_nodes());
    return Extremal(std::move(grid), std::move(x), std::move(u),
                    Eigen::Map<const Vector>(rs.data(), static_cast<Eigen::Index>(rs.size())), std::move(structure));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("malformed extremal json: ") + e.what());
  }
}

}  // namespace bsc
