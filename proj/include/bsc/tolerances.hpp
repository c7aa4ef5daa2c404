#pragma once

namespace bsc {

struct Tolerances {
  double dynamics = 1e-6;        // relative to 1 + max |x|
  double endpoint = 1e-6;
  double stationarity = 1e-7;    // relative to 1 + max |H_u| over the adjoint basis
  double strict = 1e-6;
  double dedupe = 1e-9;
  double eigen = 1e-9;           // relative to the largest form norm
  double rho_min = 1e-8;         // relative to the Gamma-normalised form scale
  double refinement = 0.02;

  void check() const;
};

}  // namespace bsc
