#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bgdp/sampler.hpp"

namespace bgdp {

// perm[a] is the new label of old label a.
using Permutation = std::vector<int>;

struct Relabeling {
  std::vector<Permutation> permutations;  // one per draw
  std::size_t pivot_index = 0;
  std::vector<int> pivot;
  std::vector<std::int64_t> mismatches;  // positions where the relabeled draw != pivot
};

// Index of the draw with the highest stored log posterior; ties go to the
// lowest index. Throws DataError on an empty set.
std::size_t select_pivot_index(const PosteriorDraws& draws);
std::vector<int> select_pivot(const PosteriorDraws& draws);

// Maximizes sum_a score[a][perm[a]] over permutations (Hungarian algorithm).
Permutation solve_assignment(const std::vector<std::vector<std::int64_t>>& score);

// Permutation minimizing #{i : perm[z[i]] != pivot[i]}.
Permutation relabel_draw(std::span<const int> z_draw, std::span<const int> pivot, std::size_t L);
// Same objective; among assignments with equal mismatch counts (components
// empty in both draws) the one whose psi lies closest to the pivot's wins.
Permutation relabel_draw(std::span<const int> z_draw, std::span<const int> pivot,
                         std::span<const GaussianComponent> psi_draw, std::span<const GaussianComponent> psi_pivot);

Relabeling compute_relabeling(const PosteriorDraws& draws);

// Permutes beta columns, psi and z jointly.
void apply_permutation(LatentState& state, const Permutation& perm);
PosteriorDraws apply_relabeling(const PosteriorDraws& draws, const Relabeling& relabeling);

// Lag-k autocorrelations (k = 1..max_lag) of each component's mean
// coordinates across draws: result[l][0] for x, result[l][1] for y.
std::vector<std::vector<std::vector<double>>> component_trace_autocorrelation(
    const PosteriorDraws& draws, std::size_t max_lag);

}  // namespace bgdp
