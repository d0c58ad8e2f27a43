#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bgdp/gaussian.hpp"

namespace bgdp {

// Smallest entry kept by clamp_simplex for linear-scale simplex points.
inline constexpr double kSimplexFloor = 1e-300;

// Floor for log-scale simplex weights. Dirichlet draws whose exact log
// value lies below it are clamped; in practice this needs a parameter
// below about exp(-575).
inline constexpr double kMinLogWeight = -1e250;

// Seedable 64-bit Mersenne Twister. Distributions are constructed per call
// so the engine is the only state and checkpoints capture it completely.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::mt19937_64& engine() { return engine_; }

  double uniform();              // (0, 1)
  double normal();               // N(0, 1)
  double gamma(double shape, double rate);
  // log of a Gamma(shape, 1) draw; stays finite for tiny shapes where the
  // draw itself underflows.
  double log_gamma1(double shape);
  // Same, with the shape given on the log scale so that shapes far below
  // the smallest double are still handled.
  double log_gamma1_log_shape(double log_shape);
  // A log-Gamma(a) draw written as head - exp(log_magnitude); for ordinary
  // shapes log_magnitude is -inf and head is the draw itself.
  struct SplitLogGamma {
    double head = 0.0;
    double log_magnitude = 0.0;
  };
  SplitLogGamma split_log_gamma1(double log_shape);
  std::uint64_t poisson(double mean);
  double exponential(double rate);
  std::size_t uniform_index(std::size_t n);

  std::string state() const;
  void set_state(const std::string& s);

  bool operator==(const Rng& o) const { return engine_ == o.engine_; }

 private:
  std::mt19937_64 engine_;
};

// splitmix64 finalizer; derives per-chain / per-replicate seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

double log_sum_exp(std::span<const double> values);

// lgamma(exp(log_a)), accurate for arguments far below the smallest double.
double lgamma_at_log(double log_a);

// Log of a Dirichlet draw given log parameters: normalized log-Gamma
// variates, floored at kMinLogWeight.
std::vector<double> sample_dirichlet_log(Rng& rng, std::span<const double> log_params);

// Linear-scale convenience wrapper; entries floored at kSimplexFloor and
// renormalized.
std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> params);

// Index drawn with probability proportional to exp(log_weights).
// Throws NumericError when no weight is positive and finite.
std::size_t sample_categorical_log(Rng& rng, std::span<const double> log_weights);

// Inverse-Wishart(scale, df) draw for 2x2 matrices (Bartlett decomposition
// of the Wishart precision).
Mat2 sample_inverse_wishart2(Rng& rng, const Mat2& scale, double df);

// Floors and renormalizes a simplex row in place.
void clamp_simplex(std::span<double> row);

}  // namespace bgdp
