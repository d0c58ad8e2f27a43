// Serial reference against OpenMP for each kernel, at the sizes of the
// synthetic run (about 760 events, L = P = 8, 100 x 100 grid, 1000 draws).

#include <benchmark/benchmark.h>

#include "bgdp/kernels.hpp"
#include "bgdp/model.hpp"

using namespace bgdp;

namespace {

constexpr std::size_t kEvents = 760, kComponents = 8, kPeriods = 8, kDraws = 1000, kGrid = 100;

std::vector<Vec2> make_points(Rng& rng) {
  std::vector<Vec2> pts(kEvents);
  for (auto& p : pts) p = Vec2(2.0 + 3.0 * rng.normal(), 2.0 + 3.0 * rng.normal());
  return pts;
}

LatentState make_state(Rng& rng) {
  Hyperparams h;
  h.niw.mu0 = Vec2(1, 1);
  h.niw.eta = 0.1;
  h.niw.sigma0 = Mat2::Identity();
  h.niw.nu = 4.0;
  h.alpha0 = 5.0;
  h.gamma0 = 70.0;
  h.k = 0.1;
  h.P = kPeriods;
  h.L = kComponents;
  return draw_prior_state(h, std::vector<std::size_t>(kPeriods, 0), rng);
}

std::vector<std::vector<int>> make_allocations(Rng& rng) {
  std::vector<std::vector<int>> draws(kDraws, std::vector<int>(kEvents));
  for (auto& z : draws)
    for (auto& v : z) v = static_cast<int>(rng.uniform_index(kComponents));
  return draws;
}

template <auto Kernel>
void log_densities(benchmark::State& st) {
  Rng rng(1);
  const auto pts = make_points(rng);
  const LatentState s = make_state(rng);
  std::vector<GaussianKernel> comps(s.psi.begin(), s.psi.end());
  kernels::LogDensityMatrix out;
  for (auto _ : st) {
    Kernel(pts, comps, out);
    benchmark::DoNotOptimize(out.data());
  }
}

template <auto Kernel>
void intensity_grid(benchmark::State& st) {
  Rng rng(2);
  const LatentState s = make_state(rng);
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < kGrid; ++j)
    for (std::size_t i = 0; i < kGrid; ++i) {
      xs.push_back(-5.0 + 15.0 * static_cast<double>(i) / (kGrid - 1));
      ys.push_back(-5.0 + 15.0 * static_cast<double>(j) / (kGrid - 1));
    }
  std::vector<RunningMoments> acc(kPeriods * xs.size());
  for (auto _ : st) {
    Kernel(s, xs, ys, acc);
    benchmark::DoNotOptimize(acc.data());
  }
}

template <auto Kernel>
void co_allocation(benchmark::State& st) {
  Rng rng(3);
  const auto draws = make_allocations(rng);
  std::vector<std::int64_t> counts;
  for (auto _ : st) {
    Kernel(draws, kEvents, counts);
    benchmark::DoNotOptimize(counts.data());
  }
}

template <auto Kernel>
void dahl(benchmark::State& st) {
  Rng rng(4);
  const auto draws = make_allocations(rng);
  Eigen::MatrixXd sim = Eigen::MatrixXd::Random(kEvents, kEvents).cwiseAbs();
  sim = 0.5 * (sim + sim.transpose()).eval();
  std::vector<double> losses;
  for (auto _ : st) {
    Kernel(draws, sim, losses);
    benchmark::DoNotOptimize(losses.data());
  }
}

}  // namespace

BENCHMARK(log_densities<kernels::serial::component_log_densities>)->Name("log_densities/serial");
BENCHMARK(log_densities<kernels::omp::component_log_densities>)->Name("log_densities/omp")->UseRealTime();
BENCHMARK(intensity_grid<kernels::serial::accumulate_intensity>)->Name("intensity_grid/serial");
BENCHMARK(intensity_grid<kernels::omp::accumulate_intensity>)->Name("intensity_grid/omp")->UseRealTime();
BENCHMARK(co_allocation<kernels::serial::co_allocation_counts>)->Name("co_allocation/serial");
BENCHMARK(co_allocation<kernels::omp::co_allocation_counts>)->Name("co_allocation/omp")->UseRealTime();
BENCHMARK(dahl<kernels::serial::dahl_losses>)->Name("dahl_losses/serial");
BENCHMARK(dahl<kernels::omp::dahl_losses>)->Name("dahl_losses/omp")->UseRealTime();

BENCHMARK_MAIN();
