#pragma once

#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "bsc/problem.hpp"
#include "bsc/tolerances.hpp"

namespace bsc {

// Strictly increasing time nodes t_0 = 0 < ... < t_N = T.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> nodes);
  static TimeGrid uniform(double horizon, int intervals);
  // Uniform inside each [breaks[k], breaks[k+1]] with counts[k] intervals.
  static TimeGrid piecewise_uniform(const std::vector<double>& breaks, const std::vector<int>& counts);

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_intervals() const { return num_nodes() - 1; }
  double node(int k) const { return nodes_[k]; }
  double step(int k) const { return nodes_[k + 1] - nodes_[k]; }
  double horizon() const { return nodes_.back(); }
  double max_step() const;
  const std::vector<double>& nodes() const { return nodes_; }
  // Node within half a local step of t; throws otherwise.
  int snap(double t) const;
  // Interval containing t (the left one at an interior node).
  int locate(double t) const;

 private:
  std::vector<double> nodes_;
};

enum class ArcLabel { kLower, kUpper, kSingular };

const char* arc_label_name(ArcLabel label);
ArcLabel parse_arc_label(const std::string& name);

// Closed node range [first_node, last_node]. A node shared by two arcs
// belongs to the left one when control values are read off the grid.
struct Arc {
  int first_node = 0;
  int last_node = 0;
  ArcLabel label = ArcLabel::kSingular;
};

class ArcStructure {
 public:
  ArcStructure() = default;
  // Validates that the arcs of every component partition [0, num_nodes - 1],
  // have positive length and that LOWER/UPPER never touch.
  ArcStructure(std::vector<std::vector<Arc>> components, int num_nodes);

  int num_components() const { return static_cast<int>(components_.size()); }
  const std::vector<Arc>& arcs(int component) const { return components_[component]; }
  ArcLabel interval_label(int component, int interval) const;
  int interval_arc(int component, int interval) const { return interval_arc_[component][interval]; }
  bool singular_on(int component, int interval) const {
    return interval_label(component, interval) == ArcLabel::kSingular;
  }
  // True when the node lies in some singular arc of the component (endpoints included).
  bool node_in_singular_arc(int component, int node) const;

 private:
  std::vector<std::vector<Arc>> components_;
  std::vector<std::vector<int>> interval_arc_;
};

// Nodal description of a candidate: x.col(k) and u.col(k) at grid node k.
struct Extremal {
  TimeGrid grid;
  Matrix x;
  Matrix u;
  Vector r;
  ArcStructure arcs;

  Extremal() = default;
  Extremal(TimeGrid grid, Matrix x, Matrix u, Vector r, ArcStructure arcs);
};

// Each interval k carries three samples (left end, midpoint, right end) in
// columns 3k, 3k+1, 3k+2. Controls are one-sided so jumps at arc boundaries
// are represented exactly; Simpson's rule on each interval integrates them.
struct SampleLayout {
  TimeGrid grid;

  int num_samples() const { return 3 * grid.num_intervals(); }
  double time(int sample) const;
  double weight(int sample) const;
  int interval(int sample) const { return sample / 3; }
};

// Simpson quadrature of a row-wise sampled signal; returns one value per row.
Vector integrate_samples(const SampleLayout& layout, const Matrix& samples);

// Augmented state X = (x, r) and controls at every sample.
struct SampledTrajectory {
  SampleLayout layout;
  ArcStructure arcs;
  int n = 0;
  int m = 0;
  int n_r = 0;
  Matrix X;         // (n + n_r) x samples
  Matrix X_nodes;   // (n + n_r) x nodes
  Matrix U;         // m x samples
  Matrix Xdot;      // (n + n_r) x samples
  Vector lower;
  Vector upper;

  int augmented_dim() const { return n + n_r; }
  int num_samples() const { return layout.num_samples(); }
};

// Control of component i used on interval k, at its left or right end.
// Bang arcs read the bound; singular arcs read nodal values and extrapolate
// linearly at a node owned by the preceding arc.
double interval_control(const ControlAffineProblem& problem, const Extremal& extremal, int component,
                        int interval, bool right_end);

SampledTrajectory sample_trajectory(const ControlAffineProblem& problem, const Extremal& extremal);

// State and control at time t: Hermite cubic for x, linear for u.
std::pair<Vector, Vector> interpolate(const ControlAffineProblem& problem, const Extremal& extremal,
                                      double t);

struct ValidationReport {
  double dynamics_residual = 0.0;
  double dynamics_tolerance = 0.0;
  std::vector<double> equality_residuals;
  std::vector<double> inequality_values;
  std::vector<std::string> failures;

  bool passed() const { return failures.empty(); }
};

ValidationReport validate_extremal(const ControlAffineProblem& problem, const Extremal& extremal,
                                   const Tolerances& tolerances = {});

nlohmann::json extremal_to_json(const Extremal& extremal);
Extremal extremal_from_json(const nlohmann::json& json);

}  // namespace bsc
