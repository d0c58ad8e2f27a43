#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "bgdp/catalog.hpp"
#include "bgdp/gaussian.hpp"
#include "bgdp/random.hpp"

namespace bgdp {

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

// Normal-inverse-Wishart base measure: Sigma ~ IW(sigma0, nu),
// mu | Sigma ~ N(mu0, Sigma / eta).
struct NIWParams {
  Vec2 mu0 = Vec2::Zero();
  double eta = 1.0;
  Mat2 sigma0 = Mat2::Identity();
  double nu = 3.0;

  void validate() const;
};

struct Hyperparams {
  NIWParams niw;
  double alpha0 = 1.0;
  double gamma0 = 1.0;
  double k = 1.0;
  std::size_t L = 1;  // mixture components
  std::size_t P = 1;  // time periods
  // When set, component means are restricted to this rectangle.
  std::optional<SpatialWindow> mu_domain;

  void validate() const;
};

// Events flattened in period order; event i belongs to period period_of(i).
class ModelData {
 public:
  ModelData(const Catalog& catalog, const TimePartition& partition);
  ModelData(const std::vector<std::vector<Event>>& by_period, TimePartition partition);

  std::size_t size() const { return points_.size(); }
  std::size_t periods() const { return partition_.periods(); }
  const TimePartition& partition() const { return partition_; }
  std::span<const Vec2> points() const { return points_; }
  const Vec2& point(std::size_t i) const { return points_[i]; }
  std::size_t begin(std::size_t p) const { return offsets_[p]; }
  std::size_t end(std::size_t p) const { return offsets_[p + 1]; }
  std::size_t count(std::size_t p) const { return offsets_[p + 1] - offsets_[p]; }
  std::size_t period_of(std::size_t i) const { return period_[i]; }
  std::span<const Event> events() const { return events_; }

 private:
  TimePartition partition_;
  std::vector<Event> events_;
  std::vector<Vec2> points_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> period_;
};

// One full MCMC state. beta is P x L with simplex rows; z holds a
// 0-based component label per event in ModelData order.
//
// The weights are kept twice: log_beta is authoritative and can hold
// weights far below the smallest double (the hierarchical prior produces
// them routinely), beta = exp(log_beta) is the linear view used for
// densities. A hand-built state may leave log_beta empty; log weights are
// then taken from beta.
struct LatentState {
  std::vector<double> alpha;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd log_beta;
  std::vector<double> gamma;
  std::vector<GaussianComponent> psi;
  std::vector<int> z;

  std::size_t periods() const { return alpha.size(); }
  std::size_t components() const { return psi.size(); }

  bool has_log_beta() const {
    return log_beta.rows() == beta.rows() && log_beta.cols() == beta.cols() && log_beta.size() > 0;
  }
  double log_weight(std::size_t p, std::size_t l) const {
    const auto r = static_cast<Eigen::Index>(p), c = static_cast<Eigen::Index>(l);
    return has_log_beta() ? log_beta(r, c) : std::log(beta(r, c));
  }
  std::vector<double> log_weights(std::size_t p) const;
  // Fills log_beta from beta when it is missing.
  void ensure_log_beta();
  // Sets row p from log weights, updating both views.
  void set_log_beta_row(std::size_t p, std::span<const double> log_row);
  // Sets every row from linear weights.
  void set_beta(const Eigen::MatrixXd& weights);
  // Replaces log_beta and recomputes beta from it.
  void set_log_beta(const Eigen::MatrixXd& log_weights);

  // Throws NumericError naming the first violated invariant.
  void check_invariants() const;

  bool operator==(const LatentState& o) const {
    return alpha == o.alpha && beta == o.beta && log_beta == o.log_beta && gamma == o.gamma &&
           psi == o.psi && z == o.z;
  }
};

// Per-component allocation summaries. Component moments are always
// computed two-pass over members in event order, so an incremental
// refresh of a few components matches a full recompute bit for bit.
struct SufficientStats {
  std::vector<std::int64_t> m;                 // L
  std::vector<std::vector<std::int64_t>> m_pl;  // P x L
  std::vector<Vec2> ybar;                       // L (zero when empty)
  std::vector<Mat2> scatter;                    // L
  std::vector<std::int64_t> n_p;                // P

  static SufficientStats compute(const ModelData& data, std::span<const int> z, std::size_t L);

  // Moves event i from old_label to z[i] (already written) and refreshes
  // the moments of both components.
  void reassign(const ModelData& data, std::span<const int> z, std::size_t i, int old_label);
  // Recomputes moments for the listed components from the allocations.
  void refresh(const ModelData& data, std::span<const int> z, std::span<const int> components);

  bool operator==(const SufficientStats&) const = default;
};

// f_p(x, y) = sum_l beta_pl phi_l(x, y)
double mixture_density(const LatentState& state, std::size_t p, double x, double y);
double log_mixture_density(const LatentState& state, std::size_t p, double x, double y);

// Piecewise-constant NHPP log likelihood with the mixture density
// (allocations marginalized).
double log_likelihood(const LatentState& state, const ModelData& data);
// Same, with each event scored under its allocated component only.
double log_likelihood_allocated(const LatentState& state, const ModelData& data);

// Log densities of the individual prior blocks (normalized).
double log_prior_alpha(const LatentState& state, const Hyperparams& hyper);
double log_prior_beta(const LatentState& state);
double log_prior_gamma(const LatentState& state, const Hyperparams& hyper);
double log_prior_psi(const LatentState& state, const Hyperparams& hyper);
double log_prior_z(const LatentState& state, const ModelData& data);

double niw_log_density(const GaussianComponent& psi, const NIWParams& niw);

// Log joint density of all latent variables and the data; kLogZero for
// states outside the prior support.
double log_unnormalized_posterior(const LatentState& state, const ModelData& data,
                                  const Hyperparams& hyper);

// Conjugate NIW update from m observations with mean ybar and scatter S.
NIWParams niw_posterior(const NIWParams& prior, std::int64_t m, const Vec2& ybar, const Mat2& scatter);

// NIW draw; with a domain, the whole (mu, Sigma) pair is redrawn until mu
// lies in the domain. Throws NumericError after max_tries rejections.
GaussianComponent sample_niw(Rng& rng, const NIWParams& params,
                             const std::optional<SpatialWindow>& domain = std::nullopt,
                             std::size_t max_tries = 100000);

// Ancestral draw of (alpha, beta, psi, gamma, z) from the prior. z is
// sized from the per-period counts.
LatentState draw_prior_state(const Hyperparams& hyper, std::span<const std::size_t> counts,
                             Rng& rng);

// Forward simulation of events given a state: n_p ~ Poisson(gamma_p |I_p|),
// times uniform on I_p, labels ~ Cat(beta_p), locations ~ N(psi_z).
// The state's z is replaced by the simulated labels.
std::vector<std::vector<Event>> simulate_events(LatentState& state, const TimePartition& partition,
                                                Rng& rng);

// Probability mass of f_p that falls outside the window.
double leaked_mass(const LatentState& state, std::size_t p, const SpatialWindow& window);

}  // namespace bgdp
