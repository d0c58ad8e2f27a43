#include "bgdp/intensity_sim.hpp"

#include <algorithm>
#include <cmath>

#include "bgdp/errors.hpp"
#include "bgdp/random.hpp"

namespace bgdp {

double RateSchedule::at(double t) const {
  auto it = std::upper_bound(breaks.begin(), breaks.end(), t);
  if (it == breaks.begin()) return rates.front();
  return rates[static_cast<std::size_t>(it - breaks.begin()) - 1];
}

double RateSchedule::max() const { return *std::max_element(rates.begin(), rates.end()); }

double TemporalWeight::at(double t) const {
  if (kind == Kind::kConstant) return value;
  return 1.0 / (1.0 + std::exp(-(t - midpoint) / scale));
}

namespace {

void validate_mixture(const SpatialMixture& g, const char* name) {
  double s = g.uniform_weight;
  if (g.uniform_weight < 0.0) throw ConfigError(std::string(name) + ": negative uniform weight");
  for (const auto& c : g.gaussians) {
    if (!(c.weight >= 0.0)) throw ConfigError(std::string(name) + ": negative mixture weight");
    if (!is_spd2(c.component.cov))
      throw ConfigError(std::string(name) + ": covariance must be symmetric positive definite");
    s += c.weight;
  }
  if (std::abs(s - 1.0) > 1e-9) throw ConfigError(std::string(name) + ": weights must sum to 1");
}

}  // namespace

void SyntheticIntensity::validate() const {
  if (rate.breaks.empty() || rate.breaks.size() != rate.rates.size())
    throw ConfigError("intensity: rate breaks and rates must have equal nonzero length");
  if (!std::is_sorted(rate.breaks.begin(), rate.breaks.end()))
    throw ConfigError("intensity: rate breaks must be increasing");
  for (double r : rate.rates)
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("intensity: rates must be >= 0");
  if (h.kind == TemporalWeight::Kind::kConstant && !(h.value >= 0.0 && h.value <= 1.0))
    throw ConfigError("intensity: constant h must lie in [0,1]");
  if (h.kind == TemporalWeight::Kind::kLogistic && !(h.scale > 0.0))
    throw ConfigError("intensity: logistic scale must be > 0");
  if (!(horizon > 0.0)) throw ConfigError("intensity: horizon must be > 0");
  validate_mixture(g1, "g1");
  validate_mixture(g2, "g2");
  if (g1.uniform_weight > 0.0 || g2.uniform_weight > 0.0) support.validate();
}

SyntheticIntensity paper_synthetic_intensity() {
  SyntheticIntensity s;
  s.rate.breaks = {0.0, 5.0};
  s.rate.rates = {50.0, 100.0};
  s.h.kind = TemporalWeight::Kind::kLogistic;
  s.horizon = 10.0;
  s.h.midpoint = s.horizon;  // h(t) = 1 / (1 + exp(-(t - T) / 2))
  s.h.scale = 2.0;
  auto unit = [](double mx, double my) {
    GaussianComponent c;
    c.mean = Vec2(mx, my);
    c.cov = Mat2::Identity();
    return c;
  };
  s.g1.gaussians = {{2.0 / 3.0, unit(0, 0)}, {1.0 / 3.0, unit(2, 2)}};
  s.g2.gaussians = {{2.0 / 3.0, unit(6, 2)}, {1.0 / 3.0, unit(4, 6)}};
  s.support = SpatialWindow{-5.0, 10.0, -5.0, 10.0};
  return s;
}

double eval_spatial(const SpatialMixture& g, const SpatialWindow& support, double x, double y) {
  double v = 0.0;
  for (const auto& c : g.gaussians)
    if (c.weight > 0.0) v += c.weight * c.component.density(x, y);
  if (g.uniform_weight > 0.0 && support.contains(x, y)) v += g.uniform_weight / support.area();
  return v;
}

double eval_intensity(const SyntheticIntensity& spec, double x, double y, double t) {
  if (!(t >= 0.0 && t <= spec.horizon)) throw DataError("time outside intensity horizon");
  const double r = spec.rate.at(t);
  if (r == 0.0) return 0.0;
  const double h = spec.h.at(t);
  return r * (h * eval_spatial(spec.g1, spec.support, x, y) +
              (1.0 - h) * eval_spatial(spec.g2, spec.support, x, y));
}

double upper_bound(const SyntheticIntensity& spec, const SpatialWindow& /*window*/,
                   double /*horizon*/) {
  double peak = 0.0;
  for (const auto* g : {&spec.g1, &spec.g2}) {
    for (const auto& c : g->gaussians)
      if (c.weight > 0.0) peak = std::max(peak, c.component.peak_density());
    if (g->uniform_weight > 0.0) peak = std::max(peak, 1.0 / spec.support.area());
  }
  return 1.05 * spec.rate.max() * peak;
}

SimulationResult simulate_thinning(const SyntheticIntensity& spec, const SpatialWindow& window,
                                   double horizon, std::uint64_t seed) {
  spec.validate();
  window.validate();
  if (!(horizon > 0.0) || horizon > spec.horizon * (1.0 + 1e-12))
    throw ConfigError("simulation horizon must be in (0, intensity horizon]");
  const double bound = upper_bound(spec, window, horizon);
  SimulationResult out;
  out.catalog.window = window;
  out.catalog.horizon = horizon;
  if (bound <= 0.0) return out;

  Rng rng(seed);
  const double area = window.area();
  const double candidate_rate = bound * area;  // candidates per day
  const std::size_t n1 = spec.g1.gaussians.size();
  const std::size_t n2 = spec.g2.gaussians.size();
  std::vector<double> src_w;
  double t = 0.0;
  while (true) {
    t += rng.exponential(candidate_rate);
    if (t > horizon) break;
    const double x = window.x_min + (window.x_max - window.x_min) * rng.uniform();
    const double y = window.y_min + (window.y_max - window.y_min) * rng.uniform();
    const double lam = eval_intensity(spec, x, y, t);
    if (lam > bound) throw NumericError("thinning bound violated by the intensity");
    if (rng.uniform() * bound >= lam) continue;

    // Attribute the accepted point to one additive source of the intensity.
    const double h = spec.h.at(t);
    src_w.assign(n1 + n2 + 2, 0.0);
    for (std::size_t k = 0; k < n1; ++k)
      src_w[k] = h * spec.g1.gaussians[k].weight * spec.g1.gaussians[k].component.density(x, y);
    for (std::size_t k = 0; k < n2; ++k)
      src_w[n1 + k] =
          (1.0 - h) * spec.g2.gaussians[k].weight * spec.g2.gaussians[k].component.density(x, y);
    const double ud = spec.support.contains(x, y) ? 1.0 / spec.support.area() : 0.0;
    src_w[n1 + n2] = h * spec.g1.uniform_weight * ud;
    src_w[n1 + n2 + 1] = (1.0 - h) * spec.g2.uniform_weight * ud;
    double total = 0.0;
    for (double w : src_w) total += w;
    double u = rng.uniform() * total;
    int src = static_cast<int>(src_w.size()) - 1;
    for (std::size_t k = 0; k < src_w.size(); ++k) {
      u -= src_w[k];
      if (u <= 0.0 && src_w[k] > 0.0) {
        src = static_cast<int>(k);
        break;
      }
    }
    out.catalog.events.push_back(Event{x, y, t, std::nullopt});
    out.source.push_back(src);
  }
  return out;
}

}  // namespace bgdp
