#include "bgdp/relabel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "bgdp/errors.hpp"

namespace bgdp {

std::size_t select_pivot_index(const PosteriorDraws& draws) {
  if (draws.draws.empty()) throw DataError("no draws");
  std::size_t best = 0;
  for (std::size_t d = 1; d < draws.draws.size(); ++d)
    if (draws.draws[d].log_posterior > draws.draws[best].log_posterior) best = d;
  return best;
}

std::vector<int> select_pivot(const PosteriorDraws& draws) {
  return draws.draws[select_pivot_index(draws)].state.z;
}

Permutation solve_assignment(const std::vector<std::vector<std::int64_t>>& score) {
  // Shortest augmenting path Hungarian method on cost = -score, 1-based
  // potentials u (rows) and v (columns).
  const std::size_t n = score.size();
  constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;
  std::vector<std::int64_t> u(n + 1, 0), v(n + 1, 0), minv(n + 1);
  std::vector<std::size_t> match(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    match[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match[j0];
      std::int64_t delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const std::int64_t cur = -score[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Permutation perm(n);
  for (std::size_t j = 1; j <= n; ++j) perm[match[j] - 1] = static_cast<int>(j - 1);
  return perm;
}

Permutation relabel_draw(std::span<const int> z_draw, std::span<const int> pivot, std::size_t L) {
  if (z_draw.size() != pivot.size()) throw DataError("allocation lengths differ");
  std::vector<std::vector<std::int64_t>> co(L, std::vector<std::int64_t>(L, 0));
  for (std::size_t i = 0; i < z_draw.size(); ++i) ++co[z_draw[i]][pivot[i]];
  return solve_assignment(co);
}

Permutation relabel_draw(std::span<const int> z_draw, std::span<const int> pivot,
                         std::span<const GaussianComponent> psi_draw, std::span<const GaussianComponent> psi_pivot) {
  if (z_draw.size() != pivot.size()) throw DataError("allocation lengths differ");
  if (psi_draw.size() != psi_pivot.size()) throw DataError("draws disagree on L");
  const std::size_t L = psi_draw.size();
  // Tie-break term in [0, kTie]; the count is scaled so that the sum of L
  // tie-break terms can never outweigh one co-allocation.
  constexpr std::int64_t kTie = 1'000'000;
  const std::int64_t scale = static_cast<std::int64_t>(L) * kTie + 1;
  std::vector<std::vector<std::int64_t>> score(L, std::vector<std::int64_t>(L, 0));
  for (std::size_t i = 0; i < z_draw.size(); ++i) score[z_draw[i]][pivot[i]] += scale;
  for (std::size_t a = 0; a < L; ++a)
    for (std::size_t j = 0; j < L; ++j) {
      const double d = (psi_draw[a].mean - psi_pivot[j].mean).norm() + (psi_draw[a].cov - psi_pivot[j].cov).norm();
      const double q = std::isfinite(d) ? std::min(static_cast<double>(kTie), std::round(d * 1e3)) : kTie;
      score[a][j] += kTie - static_cast<std::int64_t>(q);
    }
  return solve_assignment(score);
}

Relabeling compute_relabeling(const PosteriorDraws& draws) {
  Relabeling r;
  r.pivot_index = select_pivot_index(draws);
  r.pivot = draws.draws[r.pivot_index].state.z;
  const auto& pivot_psi = draws.draws[r.pivot_index].state.psi;
  const std::size_t L = draws.draws[r.pivot_index].state.components();
  for (const auto& d : draws.draws) {
    if (d.state.z.size() != r.pivot.size()) throw DataError("allocation lengths differ");
    if (d.state.components() != L || d.state.psi.size() != L) throw DataError("draws disagree on L");
    for (int label : d.state.z)
      if (label < 0 || static_cast<std::size_t>(label) >= L) throw DataError("allocation label out of range");
  }
  r.permutations.resize(draws.draws.size());
  r.mismatches.resize(draws.draws.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t d = 0; d < static_cast<std::int64_t>(draws.draws.size()); ++d) {
    const auto& state = draws.draws[static_cast<std::size_t>(d)].state;
    const auto& z = state.z;
    auto perm = relabel_draw(z, r.pivot, state.psi, pivot_psi);
    std::int64_t miss = 0;
    for (std::size_t i = 0; i < z.size(); ++i) miss += perm[z[i]] != r.pivot[i];
    r.mismatches[static_cast<std::size_t>(d)] = miss;
    r.permutations[static_cast<std::size_t>(d)] = std::move(perm);
  }
  return r;
}

void apply_permutation(LatentState& state, const Permutation& perm) {
  const std::size_t L = state.components();
  if (perm.size() != L) throw DataError("permutation size does not match L");
  const bool with_log = state.has_log_beta();
  Eigen::MatrixXd beta(state.beta.rows(), state.beta.cols());
  Eigen::MatrixXd log_beta(state.log_beta.rows(), state.log_beta.cols());
  std::vector<GaussianComponent> psi(L);
  for (std::size_t a = 0; a < L; ++a) {
    const auto src = static_cast<Eigen::Index>(a);
    beta.col(perm[a]) = state.beta.col(src);
    if (with_log) log_beta.col(perm[a]) = state.log_beta.col(src);
    psi[perm[a]] = state.psi[a];
  }
  state.beta = std::move(beta);
  if (with_log) state.log_beta = std::move(log_beta);
  state.psi = std::move(psi);
  for (int& label : state.z) label = perm[label];
}

PosteriorDraws apply_relabeling(const PosteriorDraws& draws, const Relabeling& relabeling) {
  if (relabeling.permutations.size() != draws.draws.size())
    throw DataError("relabeling does not match the number of draws");
  PosteriorDraws out = draws;
  for (std::size_t d = 0; d < out.draws.size(); ++d)
    apply_permutation(out.draws[d].state, relabeling.permutations[d]);
  return out;
}

std::vector<std::vector<std::vector<double>>> component_trace_autocorrelation(
    const PosteriorDraws& draws, std::size_t max_lag) {
  if (draws.draws.empty()) throw DataError("no draws");
  const std::size_t L = draws.draws.front().state.components(), n = draws.draws.size();
  std::vector<std::vector<std::vector<double>>> out(L, std::vector<std::vector<double>>(2));
  std::vector<double> trace(n);
  for (std::size_t l = 0; l < L; ++l) {
    for (int c = 0; c < 2; ++c) {
      for (std::size_t d = 0; d < n; ++d) trace[d] = draws.draws[d].state.psi[l].mean(c);
      const double mean = std::accumulate(trace.begin(), trace.end(), 0.0) / static_cast<double>(n);
      double var = 0.0;
      for (double v : trace) var += (v - mean) * (v - mean);
      auto& acf = out[l][c];
      const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());
      if (*lo == *hi) var = 0.0;  // rounding in the mean would leave a spurious residue
      for (std::size_t k = 1; k <= max_lag && k < n; ++k) {
        double cov = 0.0;
        for (std::size_t d = 0; d + k < n; ++d) cov += (trace[d] - mean) * (trace[d + k] - mean);
        acf.push_back(var > 0.0 ? cov / var : 0.0);
      }
    }
  }
  return out;
}

}  // namespace bgdp
