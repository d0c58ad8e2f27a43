#include "bgdp/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "bgdp/errors.hpp"
#include "bgdp/kernels.hpp"

namespace bgdp {

void SamplerConfig::validate() const {
  if (sweeps == 0) throw ConfigError("sampler.sweeps must be > 0");
  if (!(burn_in < sweeps)) throw ConfigError("sampler.burn_in must be < sweeps");
  if (thin < 1) throw ConfigError("sampler.thin must be >= 1");
  if (!(alpha_step > 0.0) || !std::isfinite(alpha_step)) throw ConfigError("sampler.alpha_step must be > 0");
  if (!(beta_step > 0.0) || !std::isfinite(beta_step)) throw ConfigError("sampler.beta_step must be > 0");
  if (!(target_acceptance > 0.0 && target_acceptance < 1.0))
    throw ConfigError("sampler.target_acceptance must lie in (0,1)");
}

namespace {

constexpr double kMinLogAlpha = -708.0;

double softplus(double v) { return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v)); }

// lgamma(a) + log(a) at a = exp(log_a); bounded as a -> 0, so differences
// of lgamma at tiny arguments can be taken without cancellation.
double lgamma_plus_log(double log_a) {
  constexpr double kEulerGamma = 0.57721566490153286061;
  if (log_a < -30.0) return -kEulerGamma * std::exp(log_a);
  return std::lgamma(std::exp(log_a)) + log_a;
}

// log of the Dirichlet parameter alpha_p * beta_{p-1,l} (alpha_1 / L for
// the first period).
double log_prior_param(const LatentState& state, std::size_t p, std::size_t l) {
  if (p == 0) return std::log(state.alpha[0]) - std::log(static_cast<double>(state.components()));
  return std::log(state.alpha[p]) + state.log_weight(p - 1, l);
}

// log(m + exp(log_a))
double log_count_plus(std::int64_t m, double log_a) {
  if (m == 0) return log_a;
  const double lm = std::log(static_cast<double>(m));
  return lm + std::log1p(std::exp(log_a - lm));
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void update_gamma(LatentState& state, const SufficientStats& stats, const TimePartition& partition,
                  const Hyperparams& hyper, Rng& rng) {
  for (std::size_t p = 0; p < state.periods(); ++p) {
    const double shape = hyper.gamma0 * hyper.k + static_cast<double>(stats.n_p[p]);
    const double rate = hyper.k + partition.length(p);
    state.gamma[p] = rng.gamma(shape, rate);
  }
}

void update_psi(LatentState& state, const SufficientStats& stats, const Hyperparams& hyper, Rng& rng) {
  for (std::size_t l = 0; l < state.components(); ++l) {
    const NIWParams post = niw_posterior(hyper.niw, stats.m[l], stats.ybar[l], stats.scatter[l]);
    state.psi[l] = sample_niw(rng, post, hyper.mu_domain);
  }
}

std::vector<double> allocation_probabilities(const LatentState& state, const ModelData& data,
                                             std::size_t i) {
  const std::size_t L = state.components(), p = data.period_of(i);
  const Vec2& x = data.point(i);
  std::vector<double> logw(L);
  double mx = kLogZero;
  for (std::size_t l = 0; l < L; ++l) {
    logw[l] = state.log_weight(p, l) + state.psi[l].log_density(x(0), x(1));
    mx = std::max(mx, logw[l]);
  }
  if (!std::isfinite(mx)) throw NumericError("all allocation weights are zero");
  double s = 0.0;
  for (double& w : logw) s += (w = std::exp(w - mx));
  for (double& w : logw) w /= s;
  return logw;
}

void update_z(LatentState& state, SufficientStats& stats, const ModelData& data, Rng& rng) {
  const std::size_t L = state.components();
  std::vector<GaussianKernel> comps;
  comps.reserve(L);
  for (const auto& c : state.psi) comps.emplace_back(c);
  kernels::LogDensityMatrix dens;
  kernels::omp::component_log_densities(data.points(), comps, dens);

  std::vector<double> logw(L);
  std::vector<char> touched(L, 0);
  for (std::size_t p = 0; p < data.periods(); ++p) {
    const auto log_beta = state.log_weights(p);
    for (std::size_t i = data.begin(p); i < data.end(p); ++i) {
      for (std::size_t l = 0; l < L; ++l) logw[l] = log_beta[l] + dens(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(l));
      const int next = static_cast<int>(sample_categorical_log(rng, logw));
      const int prev = state.z[i];
      if (next == prev) continue;
      state.z[i] = next;
      --stats.m[prev];
      --stats.m_pl[p][prev];
      ++stats.m[next];
      ++stats.m_pl[p][next];
      touched[prev] = touched[next] = 1;
    }
  }
  std::vector<int> comps_to_refresh;
  for (std::size_t l = 0; l < L; ++l)
    if (touched[l]) comps_to_refresh.push_back(static_cast<int>(l));
  if (!comps_to_refresh.empty()) stats.refresh(data, state.z, comps_to_refresh);
}

void update_beta_terminal(LatentState& state, const SufficientStats& stats, Rng& rng) {
  const std::size_t P = state.periods(), L = state.components(), p = P - 1;
  std::vector<double> log_params(L);
  for (std::size_t l = 0; l < L; ++l) log_params[l] = log_count_plus(stats.m_pl[p][l], log_prior_param(state, p, l));
  state.set_log_beta_row(p, sample_dirichlet_log(rng, log_params));
}

SimplexProposal simplex_move(std::span<const double> log_current, std::size_t coordinate, double increment) {
  const std::size_t L = log_current.size();
  SimplexProposal out;
  out.log_point.assign(log_current.begin(), log_current.end());
  out.coordinate = coordinate;
  out.increment = increment;
  if (L == 1 || increment == 0.0) return out;
  if (!all_finite(log_current)) throw NumericError("simplex proposal requires a strictly interior point");
  std::vector<double> rest(log_current.begin(), log_current.end());
  rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(coordinate));
  const double log_rest = log_sum_exp(rest);
  const double y = log_current[coordinate] - log_rest + increment;
  const double log_new = -softplus(-y);
  const double shift = -softplus(y) - log_rest;
  for (std::size_t i = 0; i < L; ++i)
    out.log_point[i] = i == coordinate ? log_new : std::max(log_current[i] + shift, kMinLogWeight);
  out.log_correction = (log_new - log_current[coordinate]) + static_cast<double>(L - 1) * shift;
  return out;
}

SimplexProposal propose_simplex(std::span<const double> log_current, double scale, Rng& rng) {
  if (!all_finite(log_current)) throw NumericError("simplex proposal requires a strictly interior point");
  const std::size_t j = rng.uniform_index(log_current.size());
  return simplex_move(log_current, j, scale * rng.normal());
}

double beta_row_log_ratio(const LatentState& state, const SufficientStats& stats, std::size_t p,
                          std::span<const double> log_from, std::span<const double> log_to) {
  const std::size_t P = state.periods(), L = state.components();
  if (!all_finite(log_to)) return kLogZero;
  double r = 0.0;
  for (std::size_t l = 0; l < L; ++l) {
    const double delta = log_to[l] - log_from[l];
    if (delta == 0.0) continue;
    const double a = std::exp(log_prior_param(state, p, l));
    r += (static_cast<double>(stats.m_pl[p][l]) + a - 1.0) * delta;
  }
  if (p + 1 < P) {
    // Dir(beta_{p+1}; alpha_{p+1} row) without its row-independent terms:
    //   sum_l a_l log beta_{p+1,l} - lgamma(a_l),  a_l = alpha_{p+1} row_l
    const double log_alpha = std::log(state.alpha[p + 1]);
    for (std::size_t l = 0; l < L; ++l) {
      const double delta = log_to[l] - log_from[l];
      if (delta == 0.0) continue;
      const double lb = state.log_weight(p + 1, l);
      if (lb < 0.0) {
        // alpha (to - from) lb = -sign(delta) exp(log alpha + from + log|expm1 delta| + log(-lb))
        const double mag = std::exp(log_alpha + log_from[l] + std::log(std::abs(std::expm1(delta))) + std::log(-lb));
        r += delta > 0.0 ? -mag : mag;
      }
      const double la_from = log_alpha + log_from[l], la_to = log_alpha + log_to[l];
      r -= (lgamma_plus_log(la_to) - lgamma_plus_log(la_from)) - delta;
    }
  }
  return std::isnan(r) ? kLogZero : r;
}

MoveTally update_beta_interior(LatentState& state, const SufficientStats& stats, std::size_t p,
                               Rng& rng, InteriorBetaMode mode, double scale, std::size_t moves) {
  const std::size_t P = state.periods(), L = state.components();
  if (p + 1 >= P) throw ConfigError("interior beta update called on the terminal period");
  MoveTally tally;
  if (L == 1) return tally;
  if (mode == InteriorBetaMode::kPaperGibbs && p > 0) {
    std::vector<double> log_params(L);
    for (std::size_t l = 0; l < L; ++l) log_params[l] = log_count_plus(stats.m_pl[p][l], log_prior_param(state, p, l));
    state.set_log_beta_row(p, sample_dirichlet_log(rng, log_params));
    return tally;
  }
  if (mode != InteriorBetaMode::kExactMH && mode != InteriorBetaMode::kPaperGibbs)
    throw ConfigError("invalid interior beta mode");
  auto row = state.log_weights(p);
  for (std::size_t m = 0; m < moves; ++m) {
    auto prop = propose_simplex(row, scale, rng);
    const double log_ratio = beta_row_log_ratio(state, stats, p, row, prop.log_point) + prop.log_correction;
    ++tally.proposed;
    if (std::log(rng.uniform()) < log_ratio) {
      ++tally.accepted;
      row = std::move(prop.log_point);
    }
  }
  state.set_log_beta_row(p, row);
  return tally;
}

double alpha_log_target(const LatentState& state, const Hyperparams& hyper, std::size_t p, double value) {
  if (!(value > 0.0) || !std::isfinite(value) || std::log(value) < kMinLogAlpha) return kLogZero;
  const std::size_t P = state.periods(), L = state.components();
  const double lv = std::log(value);
  const double shape = p == 0 ? hyper.alpha0 : state.alpha[p - 1];
  double lt = (shape - 1.0) * lv - value;
  if (p + 1 < P) lt += (value - 1.0) * std::log(state.alpha[p + 1]) - std::lgamma(value);
  if (L > 1) {
    // Dir(beta_p; value w) with w = beta_{p-1} (uniform 1/L for p = 0),
    // dropping terms free of value: lgamma(value) + sum_l a_l log beta_pl
    // - lgamma(a_l), and -lgamma(a_l) = -lgamma_plus_log(log a_l) + log a_l
    // whose log w_l part is constant.
    lt += std::lgamma(value);
    for (std::size_t l = 0; l < L; ++l) {
      const double lw = p == 0 ? -std::log(static_cast<double>(L)) : state.log_weight(p - 1, l);
      const double lb = state.log_weight(p, l);
      if (lb < 0.0) lt -= std::exp(lv + lw + std::log(-lb));
      lt += lv - lgamma_plus_log(lv + lw);
    }
  }
  const double out = lt + lv;  // log-scale Jacobian
  return std::isnan(out) ? kLogZero : out;
}

std::vector<MoveTally> update_alpha(LatentState& state, const Hyperparams& hyper, Rng& rng,
                                    std::span<const double> steps) {
  const std::size_t P = state.periods();
  std::vector<MoveTally> tallies(P);
  for (std::size_t p = 0; p < P; ++p) {
    const double cur = state.alpha[p];
    const double prop = cur * std::exp(steps[p] * rng.normal());
    const double log_ratio = alpha_log_target(state, hyper, p, prop) - alpha_log_target(state, hyper, p, cur);
    ++tallies[p].proposed;
    if (std::log(rng.uniform()) < log_ratio) {
      state.alpha[p] = prop;
      ++tallies[p].accepted;
    }
  }
  return tallies;
}

ChainState initialize_chain(const ModelData& data, const Hyperparams& hyper,
                            const SamplerConfig& config, std::uint64_t seed, int chain) {
  hyper.validate();
  config.validate();
  if (data.periods() != hyper.P) throw ConfigError("partition period count does not match P");
  ChainState c;
  c.rng = Rng(seed);
  c.chain = chain;
  std::vector<std::size_t> counts(data.periods());
  for (std::size_t p = 0; p < counts.size(); ++p) counts[p] = data.count(p);
  c.state = draw_prior_state(hyper, counts, c.rng);
  if (config.init == InitMode::kPriorMean) {
    std::fill(c.state.alpha.begin(), c.state.alpha.end(), hyper.alpha0);
    c.state.set_beta(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(hyper.P),
                                               static_cast<Eigen::Index>(hyper.L),
                                               1.0 / static_cast<double>(hyper.L)));
    for (auto& label : c.state.z) label = static_cast<int>(c.rng.uniform_index(hyper.L));
  }
  c.stats = SufficientStats::compute(data, c.state.z, hyper.L);
  c.alpha_steps.assign(hyper.P, config.alpha_step);
  c.beta_steps.assign(hyper.P, config.beta_step);
  c.acceptance.alpha.assign(hyper.P, {});
  c.acceptance.beta.assign(hyper.P, {});
  return c;
}

void sweep(ChainState& chain, const ModelData& data, const Hyperparams& hyper,
           const SamplerConfig& config, bool adapting) {
  auto& s = chain.state;
  s.ensure_log_beta();
  const std::size_t P = s.periods(), L = s.components();
  const std::size_t moves = config.beta_moves_per_row ? config.beta_moves_per_row : L;
  const double gain = 1.0 / std::pow(static_cast<double>(chain.sweep) + 1.0, 0.6);

  update_z(s, chain.stats, data, chain.rng);
  update_psi(s, chain.stats, hyper, chain.rng);
  update_gamma(s, chain.stats, data.partition(), hyper, chain.rng);
  for (std::size_t p = 0; p + 1 < P; ++p) {
    const auto t = update_beta_interior(s, chain.stats, p, chain.rng, config.interior_beta,
                                        chain.beta_steps[p], moves);
    chain.acceptance.beta[p].proposed += t.proposed;
    chain.acceptance.beta[p].accepted += t.accepted;
    if (adapting && t.proposed > 0)
      chain.beta_steps[p] *= std::exp(gain * (t.rate() - config.target_acceptance));
  }
  update_beta_terminal(s, chain.stats, chain.rng);
  const auto ta = update_alpha(s, hyper, chain.rng, chain.alpha_steps);
  for (std::size_t p = 0; p < P; ++p) {
    chain.acceptance.alpha[p].proposed += ta[p].proposed;
    chain.acceptance.alpha[p].accepted += ta[p].accepted;
    if (adapting) chain.alpha_steps[p] *= std::exp(gain * (ta[p].rate() - config.target_acceptance));
  }
  ++chain.sweep;
}

PosteriorDraws run_chain(const ModelData& data, const Hyperparams& hyper, const SamplerConfig& config,
                         const RunOptions& options) {
  config.validate();
  hyper.validate();
  const std::uint64_t seed = options.seed.value_or(config.seed);
  ChainState chain = options.resume_from ? *options.resume_from
                                         : initialize_chain(data, hyper, config, seed, options.chain);
  if (options.resume_from) {
    if (chain.state.z.size() != data.size() || chain.state.periods() != hyper.P ||
        chain.state.components() != hyper.L)
      throw DataError("checkpoint does not match the data or hyperparameters");
    chain.state.ensure_log_beta();
    chain.stats = SufficientStats::compute(data, chain.state.z, hyper.L);
  }
  PosteriorDraws out;
  out.seed = seed;
  std::optional<ChainState> last_good;
  try {
    while (chain.sweep < config.sweeps) {
      const std::size_t s = chain.sweep;
      if (s == config.burn_in && s > 0) {
        // report post-burn-in acceptance only
        chain.acceptance.alpha.assign(hyper.P, {});
        chain.acceptance.beta.assign(hyper.P, {});
      }
      if (options.on_checkpoint) last_good = chain;
      sweep(chain, data, hyper, config, config.adapt && s < config.burn_in);
      if (chain.sweep > config.burn_in && (chain.sweep - config.burn_in) % config.thin == 0) {
        Draw d{chain.state, chain.sweep, chain.chain, log_unnormalized_posterior(chain.state, data, hyper)};
        if (options.on_draw) options.on_draw(d);
        if (options.keep_draws) out.draws.push_back(std::move(d));
      }
      if (options.on_progress) options.on_progress(chain.sweep, chain);
      if (options.on_checkpoint && config.checkpoint_every > 0 && chain.sweep % config.checkpoint_every == 0)
        options.on_checkpoint(chain);
    }
  } catch (...) {
    if (options.on_checkpoint && last_good) options.on_checkpoint(*last_good);
    throw;
  }
  out.acceptance = chain.acceptance;
  return out;
}

PosteriorDraws run_chain(const Catalog& catalog, const TimePartition& partition,
                         const Hyperparams& hyper, const SamplerConfig& config,
                         const RunOptions& options) {
  const ModelData data(catalog, partition);
  return run_chain(data, hyper, config, options);
}

}  // namespace bgdp
