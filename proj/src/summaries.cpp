#include "bgdp/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bgdp/errors.hpp"

namespace bgdp {

void GridSpec::validate() const {
  window.validate();
  if (nx < 2 || ny < 2) throw ConfigError("grid resolution must be at least 2x2");
}

double GridSpec::x(std::size_t i) const {
  return window.x_min + (window.x_max - window.x_min) * static_cast<double>(i) / static_cast<double>(nx - 1);
}

double GridSpec::y(std::size_t j) const {
  return window.y_min + (window.y_max - window.y_min) * static_cast<double>(j) / static_cast<double>(ny - 1);
}

double intensity_draw(const LatentState& state, std::size_t p, double x, double y) {
  return state.gamma[p] * mixture_density(state, p, x, y);
}

FieldAccumulator::FieldAccumulator(GridSpec grid, std::size_t periods)
    : grid_(std::move(grid)), periods_(periods) {
  grid_.validate();
  xs_.resize(grid_.nodes());
  ys_.resize(grid_.nodes());
  for (std::size_t j = 0; j < grid_.ny; ++j)
    for (std::size_t i = 0; i < grid_.nx; ++i) {
      xs_[j * grid_.nx + i] = grid_.x(i);
      ys_[j * grid_.nx + i] = grid_.y(j);
    }
  acc_.resize(periods_ * grid_.nodes());
}

void FieldAccumulator::add(const LatentState& state) {
  if (state.periods() != periods_) throw DataError("draw period count does not match the field");
  kernels::omp::accumulate_intensity(state, xs_, ys_, acc_);
  ++draws_;
}

void FieldAccumulator::add_serial(const LatentState& state) {
  if (state.periods() != periods_) throw DataError("draw period count does not match the field");
  kernels::serial::accumulate_intensity(state, xs_, ys_, acc_);
  ++draws_;
}

double transparency(double cv, double cv_min) {
  if (cv == 0.0) return 1.0;
  if (!std::isfinite(cv)) return 0.0;
  return 1.0 - (cv - cv_min) / cv;
}

IntensityField FieldAccumulator::finish() const {
  if (draws_ == 0) throw DataError("no draws");
  IntensityField f;
  f.grid = grid_;
  f.periods = periods_;
  f.draws = draws_;
  const std::size_t n = grid_.nodes();
  f.mean.assign(periods_, std::vector<double>(n));
  f.sd = f.cv = f.transparency = f.mean;
  double cv_min = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < periods_; ++p)
    for (std::size_t k = 0; k < n; ++k) {
      const auto& m = acc_[p * n + k];
      const double mean = m.mean, sd = std::sqrt(m.variance());
      f.mean[p][k] = mean;
      f.sd[p][k] = sd;
      // Nodes whose intensity underflowed to zero in every draw carry no
      // information; their CV is infinite and they are fully transparent.
      const double cv = mean > 0.0 ? sd / mean : std::numeric_limits<double>::infinity();
      f.cv[p][k] = cv;
      cv_min = std::min(cv_min, cv);
    }
  f.cv_min = std::isfinite(cv_min) ? cv_min : 0.0;
  for (std::size_t p = 0; p < periods_; ++p)
    for (std::size_t k = 0; k < n; ++k) f.transparency[p][k] = transparency(f.cv[p][k], f.cv_min);
  return f;
}

IntensityField summarize_fields(const PosteriorDraws& draws, const GridSpec& grid) {
  if (draws.draws.empty()) throw DataError("no draws");
  FieldAccumulator acc(grid, draws.draws.front().state.periods());
  for (const auto& d : draws.draws) acc.add(d.state);
  return acc.finish();
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw DataError("no values");
  const double h = (static_cast<double>(values.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  auto lo_it = values.begin() + static_cast<std::ptrdiff_t>(lo);
  std::nth_element(values.begin(), lo_it, values.end());
  const double a = *lo_it;
  if (lo + 1 >= values.size()) return a;
  const double b = *std::min_element(lo_it + 1, values.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

GammaSummary summarize_values(const std::vector<double>& values, std::size_t period, std::size_t bins) {
  if (values.empty()) throw DataError("no draws");
  if (bins == 0) throw ConfigError("histogram bin count must be >= 1");
  GammaSummary s;
  s.period = period;
  RunningMoments m;
  for (double v : values) m.add(v);
  s.mean = m.mean;
  s.sd = std::sqrt(m.variance());
  const double probs[3][2] = {{0.25, 0.75}, {0.05, 0.95}, {0.025, 0.975}};
  for (int k = 0; k < 3; ++k) s.intervals[k] = {quantile(values, probs[k][0]), quantile(values, probs[k][1])};
  s.median = quantile(values, 0.5);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  s.histogram.lo = *lo;
  s.histogram.hi = *hi;
  s.histogram.counts.assign(bins, 0);
  const double width = (*hi - *lo) / static_cast<double>(bins);
  for (double v : values) {
    std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - *lo) / width) : 0;
    s.histogram.counts[std::min(b, bins - 1)]++;
  }
  return s;
}

std::vector<GammaSummary> gamma_summaries(const PosteriorDraws& draws, std::size_t bins) {
  if (draws.draws.empty()) throw DataError("no draws");
  const std::size_t P = draws.draws.front().state.periods();
  std::vector<GammaSummary> out;
  std::vector<double> values(draws.draws.size());
  for (std::size_t p = 0; p < P; ++p) {
    for (std::size_t d = 0; d < draws.draws.size(); ++d) values[d] = draws.draws[d].state.gamma[p];
    out.push_back(summarize_values(values, p, bins));
  }
  return out;
}

}  // namespace bgdp
