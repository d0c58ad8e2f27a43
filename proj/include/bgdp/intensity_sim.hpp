#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "bgdp/catalog.hpp"
#include "bgdp/gaussian.hpp"

namespace bgdp {

struct WeightedGaussian {
  double weight = 1.0;
  GaussianComponent component;
};

// Spatial density: weighted Gaussians plus an optional share spread
// uniformly over the intensity's support window. Weights sum to 1.
struct SpatialMixture {
  std::vector<WeightedGaussian> gaussians;
  double uniform_weight = 0.0;
};

// Piecewise-constant rate in events/day: rates[i] applies on
// [breaks[i], breaks[i+1]); the last piece extends to +inf.
struct RateSchedule {
  std::vector<double> breaks{0.0};
  std::vector<double> rates{0.0};

  double at(double t) const;
  double max() const;
};

// Temporal mixing weight h(t) in [0, 1], either constant or logistic
// 1 / (1 + exp(-(t - midpoint) / scale)).
struct TemporalWeight {
  enum class Kind { kConstant, kLogistic };
  Kind kind = Kind::kConstant;
  double value = 1.0;
  double midpoint = 0.0;
  double scale = 1.0;

  double at(double t) const;
};

// lambda(x, y, t) = rate(t) * (h(t) g1(x, y) + (1 - h(t)) g2(x, y)).
struct SyntheticIntensity {
  RateSchedule rate;
  TemporalWeight h;
  SpatialMixture g1;
  SpatialMixture g2;
  SpatialWindow support;  // domain of the uniform share
  double horizon = 1.0;

  void validate() const;
};

// The two-regime, four-Gaussian synthetic intensity over (-5,10)^2 x (0,10).
SyntheticIntensity paper_synthetic_intensity();

double eval_intensity(const SyntheticIntensity& spec, double x, double y, double t);

// Density of the spatial mixture at (x, y).
double eval_spatial(const SpatialMixture& g, const SpatialWindow& support, double x, double y);

// max rate * max over components of the peak density, times 1.05.
double upper_bound(const SyntheticIntensity& spec, const SpatialWindow& window, double horizon);

struct SimulationResult {
  Catalog catalog;
  // Source index per event: g1's Gaussians first, then g2's; the uniform
  // shares get the indices after all Gaussians (g1 uniform, then g2 uniform).
  std::vector<int> source;
};

// NHPP realization on window x [0, horizon] by thinning a homogeneous
// process of rate upper_bound(...). Deterministic in seed.
SimulationResult simulate_thinning(const SyntheticIntensity& spec, const SpatialWindow& window,
                                   double horizon, std::uint64_t seed);

}  // namespace bgdp
