#include "bgdp/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "bgdp/errors.hpp"

namespace bgdp {

double Rng::uniform() {
  // generate_canonical can return exactly 0; reject it so logs stay finite.
  while (true) {
    double u = std::generate_canonical<double, 64>(engine_);
    if (u > 0.0 && u < 1.0) return u;
  }
}

double Rng::normal() {
  std::normal_distribution<double> d(0.0, 1.0);
  return d(engine_);
}

double Rng::gamma(double shape, double rate) {
  std::gamma_distribution<double> d(shape, 1.0 / rate);
  return d(engine_);
}

double Rng::log_gamma1(double shape) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> d(shape, 1.0);
    return std::log(d(engine_));
  }
  // Gamma(a) =d Gamma(a + 1) * U^{1/a}
  std::gamma_distribution<double> d(shape + 1.0, 1.0);
  const double g = d(engine_);
  return std::log(g) + std::log(uniform()) / shape;
}

Rng::SplitLogGamma Rng::split_log_gamma1(double log_shape) {
  if (log_shape > -30.0) return {log_gamma1(std::exp(log_shape)), -std::numeric_limits<double>::infinity()};
  // Gamma(a + 1) is Exp(1) to double precision here; the U^(1/a) factor is
  // kept as the log of its negated log so it survives any magnitude.
  std::exponential_distribution<double> d(1.0);
  const double g = d(engine_);
  return {std::log(g), std::log(-std::log(uniform())) - log_shape};
}

double Rng::log_gamma1_log_shape(double log_shape) {
  const SplitLogGamma s = split_log_gamma1(log_shape);
  if (s.log_magnitude > std::log(-kMinLogWeight)) return kMinLogWeight;
  return std::max(s.head - std::exp(s.log_magnitude), kMinLogWeight);
}

std::uint64_t Rng::poisson(double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<std::uint64_t> d(mean);
  return d(engine_);
}

double Rng::exponential(double rate) {
  std::exponential_distribution<double> d(rate);
  return d(engine_);
}

std::size_t Rng::uniform_index(std::size_t n) {
  std::uniform_int_distribution<std::size_t> d(0, n - 1);
  return d(engine_);
}

std::string Rng::state() const {
  std::ostringstream os;
  os << engine_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> engine_;
  if (!is) throw DataError("invalid RNG state");
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void clamp_simplex(std::span<double> row) {
  double s = 0.0;
  for (double& v : row) {
    if (!(v >= kSimplexFloor)) v = kSimplexFloor;
    s += v;
  }
  for (double& v : row) v /= s;
}

double log_sum_exp(std::span<const double> values) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : values) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : values) s += std::exp(v - mx);
  return mx + std::log(s);
}

double lgamma_at_log(double log_a) {
  constexpr double kEulerGamma = 0.57721566490153286061;
  // lgamma(a) = -log(a) - gamma_E a + O(a^2)
  if (log_a < -30.0) return -log_a - kEulerGamma * std::exp(log_a);
  return std::lgamma(std::exp(log_a));
}

std::vector<double> sample_dirichlet_log(Rng& rng, std::span<const double> log_params) {
  const std::size_t n = log_params.size();
  if (n == 1) return {0.0};
  std::vector<Rng::SplitLogGamma> draws(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(log_params[i]) || log_params[i] > 700.0)
      throw NumericError("Dirichlet parameter must be positive and finite");
    draws[i] = rng.split_log_gamma1(log_params[i]);
  }
  // Past this magnitude the head term is below one ulp of the total.
  constexpr double kHugeMagnitude = 600.0;
  std::size_t top = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (draws[i].log_magnitude >= kHugeMagnitude) continue;
    const double v = draws[i].head - std::exp(draws[i].log_magnitude);
    if (top == n || v > draws[top].head - std::exp(draws[top].log_magnitude)) top = i;
  }
  if (top == n) {
    top = 0;
    for (std::size_t i = 1; i < n; ++i)
      if (draws[i].log_magnitude < draws[top].log_magnitude) top = i;
  }
  const Rng::SplitLogGamma& w = draws[top];
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == top) {
      logs[i] = 0.0;
      continue;
    }
    double gap;  // exp(m_i) - exp(m_top), formed without cancellation
    if (std::isinf(w.log_magnitude)) gap = std::exp(draws[i].log_magnitude);
    else gap = std::exp(w.log_magnitude) * std::expm1(draws[i].log_magnitude - w.log_magnitude);
    logs[i] = (draws[i].head - w.head) - gap;
    if (std::isnan(logs[i])) logs[i] = kMinLogWeight;
  }
  const double norm = log_sum_exp(logs);
  for (double& v : logs) v = std::max(v - norm, kMinLogWeight);
  return logs;
}

std::vector<double> sample_dirichlet(Rng& rng, std::span<const double> params) {
  std::vector<double> log_params(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!(params[i] > 0.0) || !std::isfinite(params[i]))
      throw NumericError("Dirichlet parameter must be positive and finite");
    log_params[i] = std::log(params[i]);
  }
  auto out = sample_dirichlet_log(rng, log_params);
  for (double& v : out) v = std::exp(v);
  clamp_simplex(out);
  return out;
}

std::size_t sample_categorical_log(Rng& rng, std::span<const double> log_weights) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double w : log_weights) {
    if (std::isnan(w)) throw NumericError("allocation weight is NaN");
    mx = std::max(mx, w);
  }
  if (!std::isfinite(mx)) throw NumericError("all allocation weights are zero");
  double total = 0.0;
  for (double w : log_weights) total += std::exp(w - mx);
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    u -= std::exp(log_weights[i] - mx);
    if (u <= 0.0) return i;
  }
  // rounding fallthrough: last index with positive weight
  for (std::size_t i = log_weights.size(); i-- > 0;)
    if (std::isfinite(log_weights[i])) return i;
  return log_weights.size() - 1;
}

Mat2 sample_inverse_wishart2(Rng& rng, const Mat2& scale, double df) {
  if (!(df > 1.0)) throw ConfigError("inverse-Wishart degrees of freedom must exceed 1");
  // Sigma^{-1} ~ Wishart(scale^{-1}, df); W = C A A^T C^T with C = chol(scale^{-1}).
  const Mat2 prec_scale = inverse2(scale);
  const double c00 = std::sqrt(prec_scale(0, 0));
  const double c10 = prec_scale(1, 0) / c00;
  const double c11 = std::sqrt(prec_scale(1, 1) - c10 * c10);
  const double a00 = std::sqrt(2.0 * rng.gamma(0.5 * df, 1.0));
  const double a11 = std::sqrt(2.0 * rng.gamma(0.5 * (df - 1.0), 1.0));
  const double a10 = rng.normal();
  // B = C A (lower triangular)
  const double b00 = c00 * a00;
  const double b10 = c10 * a00 + c11 * a10;
  const double b11 = c11 * a11;
  Mat2 w;
  w(0, 0) = b00 * b00;
  w(0, 1) = b00 * b10;
  w(1, 0) = w(0, 1);
  w(1, 1) = b10 * b10 + b11 * b11;
  return symmetrize(inverse2(w));
}

}  // namespace bgdp
