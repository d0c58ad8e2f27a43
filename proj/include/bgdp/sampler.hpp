#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "bgdp/model.hpp"

namespace bgdp {

enum class InteriorBetaMode {
  kExactMH,    // Metropolis on the full conditional, downstream factor included
  kPaperGibbs  // p >= 2 drawn from Dirichlet(m_pl + alpha_p beta_{p-1,l}), downstream ignored
};

// Starting state. kPrior is a full ancestral draw; kPriorMean keeps the
// ancestral psi and gamma but starts alpha at alpha0 and every beta row at
// the uniform vector (their prior means), which avoids starting inside the
// near-absorbing region where some alpha_p underflows.
enum class InitMode { kPriorMean, kPrior };

struct SamplerConfig {
  std::size_t sweeps = 20000;
  std::size_t burn_in = 10000;
  std::size_t thin = 10;
  double alpha_step = 1.0;  // sd of the log-alpha random walk
  double beta_step = 1.0;   // sd of the logit increment in simplex proposals
  bool adapt = true;
  double target_acceptance = 0.44;
  std::uint64_t seed = 1;
  InteriorBetaMode interior_beta = InteriorBetaMode::kExactMH;
  std::size_t beta_moves_per_row = 0;  // 0 means L moves per row and sweep
  std::size_t checkpoint_every = 0;    // 0 disables periodic checkpoints
  InitMode init = InitMode::kPriorMean;

  void validate() const;
  std::size_t expected_draws() const { return (sweeps - burn_in) / thin; }
};

struct MoveTally {
  std::uint64_t proposed = 0;
  std::uint64_t accepted = 0;
  double rate() const { return proposed ? static_cast<double>(accepted) / static_cast<double>(proposed) : 0.0; }
  bool operator==(const MoveTally&) const = default;
};

struct AcceptanceSummary {
  std::vector<MoveTally> alpha;  // per period
  std::vector<MoveTally> beta;   // per period (Metropolis rows only)
  bool operator==(const AcceptanceSummary&) const = default;
};

// Everything needed to continue a chain exactly.
struct ChainState {
  LatentState state;
  SufficientStats stats;
  Rng rng;
  std::vector<double> alpha_steps;  // per period
  std::vector<double> beta_steps;   // per period
  AcceptanceSummary acceptance;
  std::size_t sweep = 0;  // completed sweeps
  int chain = 0;

  bool operator==(const ChainState&) const = default;
};

struct Draw {
  LatentState state;
  std::size_t sweep = 0;
  int chain = 0;
  double log_posterior = 0.0;
};

struct PosteriorDraws {
  std::vector<Draw> draws;
  AcceptanceSummary acceptance;
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
};

// ---- individual moves -------------------------------------------------

void update_gamma(LatentState& state, const SufficientStats& stats, const TimePartition& partition,
                  const Hyperparams& hyper, Rng& rng);

void update_psi(LatentState& state, const SufficientStats& stats, const Hyperparams& hyper, Rng& rng);

// P(z_i = l) for event i under the current beta and psi.
std::vector<double> allocation_probabilities(const LatentState& state, const ModelData& data,
                                             std::size_t i);

void update_z(LatentState& state, SufficientStats& stats, const ModelData& data, Rng& rng);

// Conjugate draw of the last row: Dirichlet(m_Pl + alpha_P beta_{P-1,l}),
// or Dirichlet(m_1l + alpha_1 / L) when P = 1.
void update_beta_terminal(LatentState& state, const SufficientStats& stats, Rng& rng);

// Simplex points are handled as log weights throughout.
struct SimplexProposal {
  std::vector<double> log_point;
  double log_correction = 0.0;  // log q(current | proposal) - log q(proposal | current)
  std::size_t coordinate = 0;
  double increment = 0.0;
};

// Deterministic core of the logit-scale simplex move: shifts the logit of
// coordinate j by `increment` and rescales the others proportionally.
SimplexProposal simplex_move(std::span<const double> log_current, std::size_t coordinate, double increment);
SimplexProposal propose_simplex(std::span<const double> log_current, double scale, Rng& rng);

// log pi(to) - log pi(from) for the full conditional of beta row p, where
// both rows are given as log weights. Computed term by term from the
// differences so that very negative log weights cancel exactly.
double beta_row_log_ratio(const LatentState& state, const SufficientStats& stats, std::size_t p,
                          std::span<const double> log_from, std::span<const double> log_to);

// Updates row p < P-1 (0-based). Returns accepted / proposed Metropolis moves
// (both zero for a Gibbs draw).
MoveTally update_beta_interior(LatentState& state, const SufficientStats& stats, std::size_t p,
                               Rng& rng, InteriorBetaMode mode, double scale, std::size_t moves);

// Log full conditional of alpha_p on the log scale (Jacobian included)
// at alpha_p = value, other coordinates held at the state's values. Terms
// that do not depend on value are dropped.
double alpha_log_target(const LatentState& state, const Hyperparams& hyper, std::size_t p, double value);

// One random-walk move on log alpha_p per period. Returns per-period tallies.
std::vector<MoveTally> update_alpha(LatentState& state, const Hyperparams& hyper, Rng& rng,
                                    std::span<const double> steps);

// ---- chain driver -------------------------------------------------------

ChainState initialize_chain(const ModelData& data, const Hyperparams& hyper,
                            const SamplerConfig& config, std::uint64_t seed, int chain = 0);

// z -> psi -> gamma -> beta (rows 1..P-1, then P) -> alpha. Adapts step
// sizes when `adapting` is set.
void sweep(ChainState& chain, const ModelData& data, const Hyperparams& hyper,
           const SamplerConfig& config, bool adapting);

struct RunOptions {
  int chain = 0;
  std::optional<std::uint64_t> seed;  // defaults to config.seed
  std::function<void(const Draw&)> on_draw;
  std::function<void(const ChainState&)> on_checkpoint;  // periodic and on abort
  std::function<void(std::size_t, const ChainState&)> on_progress;
  bool keep_draws = true;
  std::optional<ChainState> resume_from;
};

PosteriorDraws run_chain(const ModelData& data, const Hyperparams& hyper, const SamplerConfig& config,
                         const RunOptions& options = {});
PosteriorDraws run_chain(const Catalog& catalog, const TimePartition& partition,
                         const Hyperparams& hyper, const SamplerConfig& config,
                         const RunOptions& options = {});

}  // namespace bgdp
