#include "bgdp/kernels.hpp"

#include <cmath>

#include "bgdp/model.hpp"

namespace bgdp::kernels {

namespace {

inline void log_density_row(const Vec2& x, std::span<const GaussianKernel> comps, double* row) {
  for (std::size_t l = 0; l < comps.size(); ++l) row[l] = comps[l].log_density(x(0), x(1));
}

struct IntensityContext {
  std::vector<GaussianKernel> kernels;
  std::size_t P, L;
  explicit IntensityContext(const LatentState& s) : P(s.periods()), L(s.components()) {
    kernels.reserve(L);
    for (const auto& c : s.psi) kernels.emplace_back(c);
  }
};

// Adds gamma_p f_p(x_j, y_j) for every period p to the node's accumulators.
inline void intensity_node(const LatentState& s, const IntensityContext& ctx, double x, double y,
                           std::size_t j, std::size_t nodes, std::span<RunningMoments> acc,
                           double* dens) {
  for (std::size_t l = 0; l < ctx.L; ++l) dens[l] = std::exp(ctx.kernels[l].log_density(x, y));
  for (std::size_t p = 0; p < ctx.P; ++p) {
    double f = 0.0;
    for (std::size_t l = 0; l < ctx.L; ++l) f += s.beta(p, l) * dens[l];
    acc[p * nodes + j].add(s.gamma[p] * f);
  }
}

inline void co_allocation_row(std::span<const std::vector<int>> draws, std::size_t n, std::size_t i,
                              std::int64_t* row) {
  for (const auto& z : draws) {
    const int zi = z[i];
    for (std::size_t j = i + 1; j < n; ++j) row[j] += (z[j] == zi);
  }
}

inline double dahl_loss(const std::vector<int>& z, const Eigen::MatrixXd& sim) {
  const std::size_t n = z.size();
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double d = (z[i] == z[j] ? 1.0 : 0.0) - sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      row += d * d;
    }
    loss += row;
  }
  return loss;
}

}  // namespace

namespace serial {

void component_log_densities(std::span<const Vec2> points, std::span<const GaussianKernel> comps,
                             LogDensityMatrix& out) {
  out.resize(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(comps.size()));
  for (std::size_t i = 0; i < points.size(); ++i)
    log_density_row(points[i], comps, out.row(static_cast<Eigen::Index>(i)).data());
}

void accumulate_intensity(const LatentState& state, std::span<const double> xs,
                          std::span<const double> ys, std::span<RunningMoments> acc) {
  const IntensityContext ctx(state);
  const std::size_t nodes = xs.size();
  std::vector<double> dens(ctx.L);
  for (std::size_t j = 0; j < nodes; ++j)
    intensity_node(state, ctx, xs[j], ys[j], j, nodes, acc, dens.data());
}

void co_allocation_counts(std::span<const std::vector<int>> draws, std::size_t n,
                          std::vector<std::int64_t>& counts) {
  counts.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) co_allocation_row(draws, n, i, counts.data() + i * n);
}

void dahl_losses(std::span<const std::vector<int>> draws, const Eigen::MatrixXd& similarity,
                 std::vector<double>& losses) {
  losses.resize(draws.size());
  for (std::size_t d = 0; d < draws.size(); ++d) losses[d] = dahl_loss(draws[d], similarity);
}

}  // namespace serial

namespace omp {

void component_log_densities(std::span<const Vec2> points, std::span<const GaussianKernel> comps,
                             LogDensityMatrix& out) {
  out.resize(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(comps.size()));
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    log_density_row(points[static_cast<std::size_t>(i)], comps, out.row(i).data());
}

void accumulate_intensity(const LatentState& state, std::span<const double> xs,
                          std::span<const double> ys, std::span<RunningMoments> acc) {
  const IntensityContext ctx(state);
  const std::size_t nodes = xs.size();
  const auto n = static_cast<std::int64_t>(nodes);
#pragma omp parallel
  {
    std::vector<double> dens(ctx.L);
#pragma omp for schedule(static)
    for (std::int64_t j = 0; j < n; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      intensity_node(state, ctx, xs[ju], ys[ju], ju, nodes, acc, dens.data());
    }
  }
}

void co_allocation_counts(std::span<const std::vector<int>> draws, std::size_t n,
                          std::vector<std::int64_t>& counts) {
  counts.assign(n * n, 0);
  const auto nn = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 16)
  for (std::int64_t i = 0; i < nn; ++i)
    co_allocation_row(draws, n, static_cast<std::size_t>(i), counts.data() + i * nn);
}

void dahl_losses(std::span<const std::vector<int>> draws, const Eigen::MatrixXd& similarity,
                 std::vector<double>& losses) {
  losses.resize(draws.size());
  const auto nd = static_cast<std::int64_t>(draws.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t d = 0; d < nd; ++d)
    losses[static_cast<std::size_t>(d)] = dahl_loss(draws[static_cast<std::size_t>(d)], similarity);
}

}  // namespace omp

}  // namespace bgdp::kernels
