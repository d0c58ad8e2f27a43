#pragma once

// Data-parallel inner loops. Each kernel has a serial reference in
// `serial::` and an OpenMP version in `omp::`; both produce bitwise
// identical results because every output element is reduced in the same
// fixed order regardless of the thread that owns it.

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bgdp/gaussian.hpp"

namespace bgdp {

struct LatentState;

// Streaming mean / variance (Welford) for one grid value.
struct RunningMoments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

namespace kernels {

// out(i, l) = log phi_l(points[i]); out is resized to N x L.
using LogDensityMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// acc[p * nodes + j] accumulates gamma_p f_p(node_j) for one draw.
// Nodes are given as separate x/y coordinate lists.

// counts[i * N + j] (i < j) += number of draws with z_i == z_j; each
// allocation vector is one draw.

namespace serial {
void component_log_densities(std::span<const Vec2> points, std::span<const GaussianKernel> comps,
                             LogDensityMatrix& out);
void accumulate_intensity(const LatentState& state, std::span<const double> xs,
                          std::span<const double> ys, std::span<RunningMoments> acc);
void co_allocation_counts(std::span<const std::vector<int>> draws, std::size_t n,
                          std::vector<std::int64_t>& counts);
void dahl_losses(std::span<const std::vector<int>> draws, const Eigen::MatrixXd& similarity,
                 std::vector<double>& losses);
}  // namespace serial

namespace omp {
void component_log_densities(std::span<const Vec2> points, std::span<const GaussianKernel> comps,
                             LogDensityMatrix& out);
void accumulate_intensity(const LatentState& state, std::span<const double> xs,
                          std::span<const double> ys, std::span<RunningMoments> acc);
void co_allocation_counts(std::span<const std::vector<int>> draws, std::size_t n,
                          std::vector<std::int64_t>& counts);
void dahl_losses(std::span<const std::vector<int>> draws, const Eigen::MatrixXd& similarity,
                 std::vector<double>& losses);
}  // namespace omp

}  // namespace kernels
}  // namespace bgdp
