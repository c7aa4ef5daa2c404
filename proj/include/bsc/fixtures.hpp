#pragma once

#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "bsc/trajectory.hpp"

namespace bsc {

using FixtureParams = std::map<std::string, double>;

struct FixtureInstance {
  ControlAffineProblem problem;
  Extremal extremal;
};

struct FixtureInfo {
  std::string name;
  std::string description;
  int n = 0;
  int m = 0;
  std::string arcs;      // e.g. "UPPER, SINGULAR"
  std::string expected;  // expected outcome of a certification run
  FixtureParams defaults;
  // Builds the problem and candidate on a grid of about `intervals` intervals.
  std::function<FixtureInstance(int intervals, const FixtureParams& params)> build;
};

class FixtureRegistry {
 public:
  void add(FixtureInfo info);
  bool contains(const std::string& name) const { return fixtures_.count(name) > 0; }
  const FixtureInfo& get(const std::string& name) const;
  // Unknown parameter names are rejected; missing ones take their defaults.
  FixtureInstance build(const std::string& name, int intervals, const FixtureParams& params = {}) const;
  std::vector<const FixtureInfo*> list() const;  // sorted by name

  static const FixtureRegistry& builtin();

 private:
  std::map<std::string, FixtureInfo> fixtures_;
};

nlohmann::json fixture_table_json(const FixtureRegistry& registry);
std::string fixture_table_text(const FixtureRegistry& registry);

// Dubins-type free-time problem after rescaling to s in [0, 1]: T^ for the
// turn angle theta and straight-line target (b1, b2).
double dubins_horizon(double theta, double b1, double b2);

}  // namespace bsc
