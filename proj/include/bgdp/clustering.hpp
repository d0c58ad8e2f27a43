#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "bgdp/sampler.hpp"

namespace bgdp {

// Symmetric N x N co-allocation frequencies with a unit diagonal.
using SimilarityMatrix = Eigen::MatrixXd;

SimilarityMatrix similarity_matrix(std::span<const std::vector<int>> allocations);
SimilarityMatrix similarity_matrix(const PosteriorDraws& draws);
SimilarityMatrix similarity_matrix_serial(std::span<const std::vector<int>> allocations);

struct DahlResult {
  std::size_t index = 0;
  std::vector<int> allocation;
  double loss = 0.0;
  std::vector<double> losses;  // per draw
};

// Draw minimizing sum_ij (1[z_i == z_j] - similarity_ij)^2; lowest index on ties.
DahlResult dahl_select(std::span<const std::vector<int>> allocations, const SimilarityMatrix& similarity);
DahlResult dahl_select(const PosteriorDraws& draws, const SimilarityMatrix& similarity);

// Ascending eigenvalues of I - D^{-1/2} A D^{-1/2}.
Eigen::VectorXd laplacian_spectrum(const SimilarityMatrix& affinity);

// argmax over k in 1..k_max-1 of lambda_{k+1} - lambda_k (ascending
// eigenvalues, 1-based); ties go to the smaller k. k_max is capped at N.
std::size_t eigengap_k(const SimilarityMatrix& affinity, std::size_t k_max);

// Normalized spectral clustering: first k eigenvectors of the symmetric
// Laplacian, rows normalized, then k-means with farthest-point seeding.
// Labels are 0-based and ordered by first appearance.
std::vector<int> spectral_cluster(const SimilarityMatrix& affinity, std::size_t k);

// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

}  // namespace bgdp
