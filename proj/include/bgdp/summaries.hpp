#pragma once

#include <array>
#include <vector>

#include "bgdp/kernels.hpp"
#include "bgdp/sampler.hpp"

namespace bgdp {

struct GridSpec {
  SpatialWindow window;
  std::size_t nx = 100;
  std::size_t ny = 100;

  void validate() const;
  // Node coordinates include both window edges.
  double x(std::size_t i) const;
  double y(std::size_t j) const;
  std::size_t nodes() const { return nx * ny; }
};

// Per-period grids, node index = j * nx + i (x fastest).
struct IntensityField {
  GridSpec grid;
  std::size_t periods = 0;
  std::size_t draws = 0;
  std::vector<std::vector<double>> mean;          // [p][node], events / (day * unit area)
  std::vector<std::vector<double>> sd;
  std::vector<std::vector<double>> cv;            // +inf where the mean is 0
  std::vector<std::vector<double>> transparency;  // in [0, 1]
  double cv_min = 0.0;
};

// gamma_p * f_p(x, y)
double intensity_draw(const LatentState& state, std::size_t p, double x, double y);

// Single-pass accumulation of per-node moments across draws.
class FieldAccumulator {
 public:
  FieldAccumulator(GridSpec grid, std::size_t periods);

  void add(const LatentState& state);
  void add_serial(const LatentState& state);  // reference path for tests
  IntensityField finish() const;
  std::size_t draws() const { return draws_; }

 private:
  GridSpec grid_;
  std::size_t periods_;
  std::size_t draws_ = 0;
  std::vector<double> xs_, ys_;
  std::vector<RunningMoments> acc_;
};

IntensityField summarize_fields(const PosteriorDraws& draws, const GridSpec& grid);

// 1 - (cv - cv_min) / cv; 1 where cv == 0, 0 where cv is infinite.
double transparency(double cv, double cv_min);

struct Histogram {
  double lo = 0.0, hi = 0.0;
  std::vector<std::size_t> counts;
};

struct GammaSummary {
  std::size_t period = 0;
  double mean = 0.0;
  double sd = 0.0;
  // central intervals at 50 / 90 / 95 %
  std::array<std::array<double, 2>, 3> intervals{};
  double median = 0.0;
  Histogram histogram;
};

// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> values, double q);

std::vector<GammaSummary> gamma_summaries(const PosteriorDraws& draws, std::size_t bins = 30);
GammaSummary summarize_values(const std::vector<double>& values, std::size_t period, std::size_t bins);

}  // namespace bgdp
