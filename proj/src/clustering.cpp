#include "bgdp/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include <Eigen/Eigenvalues>

#include "bgdp/errors.hpp"
#include "bgdp/kernels.hpp"

namespace bgdp {

namespace {

void check_allocations(std::span<const std::vector<int>> allocations) {
  if (allocations.empty()) throw DataError("no draws");
  const std::size_t n = allocations.front().size();
  for (const auto& z : allocations)
    if (z.size() != n) throw DataError("inconsistent allocation lengths across draws");
}

SimilarityMatrix from_counts(const std::vector<std::int64_t>& counts, std::size_t n, std::size_t draws) {
  SimilarityMatrix s = SimilarityMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  const double inv = 1.0 / static_cast<double>(draws);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = static_cast<double>(counts[i * n + j]) * inv;
      s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
      s(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
    }
  return s;
}

std::vector<std::vector<int>> allocations_of(const PosteriorDraws& draws) {
  std::vector<std::vector<int>> z;
  z.reserve(draws.draws.size());
  for (const auto& d : draws.draws) z.push_back(d.state.z);
  return z;
}

}  // namespace

SimilarityMatrix similarity_matrix(std::span<const std::vector<int>> allocations) {
  check_allocations(allocations);
  const std::size_t n = allocations.front().size();
  std::vector<std::int64_t> counts;
  kernels::omp::co_allocation_counts(allocations, n, counts);
  return from_counts(counts, n, allocations.size());
}

SimilarityMatrix similarity_matrix_serial(std::span<const std::vector<int>> allocations) {
  check_allocations(allocations);
  const std::size_t n = allocations.front().size();
  std::vector<std::int64_t> counts;
  kernels::serial::co_allocation_counts(allocations, n, counts);
  return from_counts(counts, n, allocations.size());
}

SimilarityMatrix similarity_matrix(const PosteriorDraws& draws) {
  const auto z = allocations_of(draws);
  return similarity_matrix(z);
}

DahlResult dahl_select(std::span<const std::vector<int>> allocations, const SimilarityMatrix& similarity) {
  check_allocations(allocations);
  if (static_cast<std::size_t>(similarity.rows()) != allocations.front().size())
    throw DataError("similarity matrix does not match the allocations");
  DahlResult r;
  kernels::omp::dahl_losses(allocations, similarity, r.losses);
  r.index = static_cast<std::size_t>(std::min_element(r.losses.begin(), r.losses.end()) - r.losses.begin());
  r.loss = r.losses[r.index];
  r.allocation = allocations[r.index];
  return r;
}

DahlResult dahl_select(const PosteriorDraws& draws, const SimilarityMatrix& similarity) {
  const auto z = allocations_of(draws);
  return dahl_select(z, similarity);
}

namespace {

struct Spectrum {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

Spectrum normalized_laplacian_eigen(const SimilarityMatrix& affinity) {
  const Eigen::Index n = affinity.rows();
  if (n == 0 || affinity.cols() != n) throw DataError("affinity must be a nonempty square matrix");
  Eigen::MatrixXd a = affinity;
  // isolated events keep a unit self-similarity so every degree is positive
  for (Eigen::Index i = 0; i < n; ++i) a(i, i) = std::max(a(i, i), 1.0);
  const Eigen::VectorXd inv_sqrt_deg = a.rowwise().sum().array().rsqrt();
  Eigen::MatrixXd lap = -(inv_sqrt_deg.asDiagonal() * a * inv_sqrt_deg.asDiagonal());
  lap.diagonal().array() += 1.0;
  lap = 0.5 * (lap + lap.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
  if (es.info() != Eigen::Success) throw NumericError("Laplacian eigendecomposition failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

}  // namespace

Eigen::VectorXd laplacian_spectrum(const SimilarityMatrix& affinity) {
  return normalized_laplacian_eigen(affinity).values;
}

std::size_t eigengap_k(const SimilarityMatrix& affinity, std::size_t k_max) {
  if (k_max < 2) throw ConfigError("k_max must be >= 2");
  const Eigen::VectorXd ev = laplacian_spectrum(affinity);
  const std::size_t n = static_cast<std::size_t>(ev.size());
  k_max = std::min(k_max, n);
  std::size_t best = 1;
  double best_gap = -std::numeric_limits<double>::infinity();
  // Gaps below this are treated as exact ties (eigensolver noise).
  constexpr double kTieTol = 1e-10;
  for (std::size_t k = 1; k + 1 <= k_max; ++k) {
    const double gap = ev(static_cast<Eigen::Index>(k)) - ev(static_cast<Eigen::Index>(k - 1));
    if (gap > best_gap + kTieTol) {
      best_gap = gap;
      best = k;
    }
  }
  return best;
}

namespace {

std::vector<int> kmeans_farthest_point(const Eigen::MatrixXd& rows, std::size_t k) {
  const Eigen::Index n = rows.rows();
  const Eigen::RowVectorXd centroid = rows.colwise().mean();
  std::vector<Eigen::Index> seeds;
  Eigen::Index first = 0;
  (rows.rowwise() - centroid).rowwise().squaredNorm().maxCoeff(&first);
  seeds.push_back(first);
  Eigen::VectorXd dist = (rows.rowwise() - rows.row(first)).rowwise().squaredNorm();
  while (seeds.size() < k) {
    Eigen::Index next = 0;
    dist.maxCoeff(&next);
    seeds.push_back(next);
    dist = dist.cwiseMin((rows.rowwise() - rows.row(next)).rowwise().squaredNorm());
  }
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), rows.cols());
  for (std::size_t c = 0; c < k; ++c) centers.row(static_cast<Eigen::Index>(c)) = rows.row(seeds[c]);

  std::vector<int> labels(static_cast<std::size_t>(n), -1);
  for (int iter = 0; iter < 300; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      (centers.rowwise() - rows.row(i)).rowwise().squaredNorm().minCoeff(&best);
      if (labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    if (!changed) break;
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centers.rows(), centers.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(centers.rows());
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(labels[static_cast<std::size_t>(i)]) += rows.row(i);
      counts(labels[static_cast<std::size_t>(i)]) += 1.0;
    }
    for (Eigen::Index c = 0; c < centers.rows(); ++c)
      if (counts(c) > 0) centers.row(c) = sums.row(c) / counts(c);
  }
  return labels;
}

}  // namespace

std::vector<int> spectral_cluster(const SimilarityMatrix& affinity, std::size_t k) {
  const auto n = static_cast<std::size_t>(affinity.rows());
  if (k < 1 || k > n) throw ConfigError("cluster count must satisfy 1 <= k <= N");
  if (k == 1) return std::vector<int>(n, 0);
  const Spectrum spec = normalized_laplacian_eigen(affinity);
  Eigen::MatrixXd u = spec.vectors.leftCols(static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double norm = u.row(i).norm();
    if (norm > 0.0) u.row(i) /= norm;
  }
  auto raw = kmeans_farthest_point(u, k);
  // relabel by first appearance so output is canonical
  std::map<int, int> remap;
  for (int& l : raw) {
    auto [it, inserted] = remap.try_emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  return raw;
}

double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw DataError("labelings differ in length");
  const std::size_t n = a.size();
  if (n < 2) return 1.0;
  std::map<std::pair<int, int>, std::int64_t> joint;
  std::map<int, std::int64_t> ra, rb;
  for (std::size_t i = 0; i < n; ++i) {
    ++joint[{a[i], b[i]}];
    ++ra[a[i]];
    ++rb[b[i]];
  }
  auto c2 = [](std::int64_t v) { return static_cast<double>(v) * static_cast<double>(v - 1) / 2.0; };
  double index = 0.0, sa = 0.0, sb = 0.0;
  for (const auto& [key, v] : joint) index += c2(v);
  for (const auto& [key, v] : ra) sa += c2(v);
  for (const auto& [key, v] : rb) sb += c2(v);
  const double total = c2(static_cast<std::int64_t>(n));
  const double expected = sa * sb / total;
  const double max_index = 0.5 * (sa + sb);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

}  // namespace bgdp
