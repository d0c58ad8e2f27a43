#include "bgdp/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "bgdp/errors.hpp"

namespace bgdp {

void NIWParams::validate() const {
  if (!mu0.allFinite()) throw ConfigError("niw.mu0 must be finite");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("niw.eta must be > 0");
  if (!is_spd2(sigma0)) throw ConfigError("niw.sigma0 must be symmetric positive definite");
  if (!(nu > 1.0) || !std::isfinite(nu)) throw ConfigError("niw.nu must be > 1");
}

void Hyperparams::validate() const {
  niw.validate();
  if (!(alpha0 > 0.0) || !std::isfinite(alpha0)) throw ConfigError("alpha0 must be > 0");
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw ConfigError("gamma0 must be > 0");
  if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("k must be > 0");
  if (L < 1) throw ConfigError("L must be >= 1");
  if (P < 1) throw ConfigError("P must be >= 1");
  if (mu_domain) mu_domain->validate();
}

ModelData::ModelData(const Catalog& catalog, const TimePartition& partition)
    : ModelData(partition_events(catalog, partition), partition) {}

ModelData::ModelData(const std::vector<std::vector<Event>>& by_period, TimePartition partition)
    : partition_(std::move(partition)) {
  if (by_period.size() != partition_.periods())
    throw DataError("per-period event lists do not match the partition");
  offsets_.push_back(0);
  for (std::size_t p = 0; p < by_period.size(); ++p) {
    for (const auto& e : by_period[p]) {
      events_.push_back(e);
      points_.emplace_back(e.x, e.y);
      period_.push_back(p);
    }
    offsets_.push_back(points_.size());
  }
}

std::vector<double> LatentState::log_weights(std::size_t p) const {
  std::vector<double> out(components());
  for (std::size_t l = 0; l < out.size(); ++l) out[l] = log_weight(p, l);
  return out;
}

void LatentState::ensure_log_beta() {
  if (has_log_beta()) return;
  set_log_beta(beta.array().log().matrix());
}

void LatentState::set_log_beta_row(std::size_t p, std::span<const double> log_row) {
  ensure_log_beta();
  const auto r = static_cast<Eigen::Index>(p);
  for (std::size_t l = 0; l < log_row.size(); ++l) {
    const auto c = static_cast<Eigen::Index>(l);
    log_beta(r, c) = log_row[l];
    beta(r, c) = std::exp(log_row[l]);
  }
}

void LatentState::set_beta(const Eigen::MatrixXd& weights) { set_log_beta(weights.array().log().matrix()); }

void LatentState::set_log_beta(const Eigen::MatrixXd& log_weights) {
  log_beta = log_weights;
  // scalar std::exp everywhere, so beta == exp(log_beta) holds bit for bit
  beta = log_beta.unaryExpr([](double v) { return std::exp(v); });
}

void LatentState::check_invariants() const {
  const std::size_t P = alpha.size(), L = psi.size();
  if (P == 0 || L == 0) throw NumericError("state has no periods or components");
  if (gamma.size() != P || static_cast<std::size_t>(beta.rows()) != P ||
      static_cast<std::size_t>(beta.cols()) != L)
    throw NumericError("state dimensions are inconsistent");
  for (std::size_t p = 0; p < P; ++p) {
    if (!(alpha[p] > 0.0) || !std::isfinite(alpha[p])) throw NumericError("alpha must be positive");
    if (!(gamma[p] > 0.0) || !std::isfinite(gamma[p])) throw NumericError("gamma must be positive");
    double s = 0.0;
    for (std::size_t l = 0; l < L; ++l) {
      if (!(beta(p, l) >= 0.0)) throw NumericError("beta entry negative");
      s += beta(p, l);
    }
    if (std::abs(s - 1.0) > 1e-12) throw NumericError("beta row does not sum to 1");
    if (log_beta.size() == 0) continue;
    if (!has_log_beta()) throw NumericError("log_beta dimensions are inconsistent");
    for (std::size_t l = 0; l < L; ++l) {
      const double lw = log_weight(p, l);
      if (!(lw >= kMinLogWeight && lw <= 1e-12)) throw NumericError("log beta entry out of range");
      if (beta(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(l)) != std::exp(lw))
        throw NumericError("beta and log_beta disagree");
    }
    if (std::abs(log_sum_exp(log_weights(p))) > 1e-9) throw NumericError("log beta row does not normalize");
  }
  for (const auto& c : psi) {
    if (!c.mean.allFinite()) throw NumericError("component mean not finite");
    if (!is_spd2(c.cov)) throw NumericError("component covariance not SPD");
  }
  for (int label : z)
    if (label < 0 || static_cast<std::size_t>(label) >= L)
      throw NumericError("allocation label out of range");
}

SufficientStats SufficientStats::compute(const ModelData& data, std::span<const int> z,
                                         std::size_t L) {
  if (z.size() != data.size()) throw DataError("allocation vector length does not match data");
  SufficientStats s;
  s.m.assign(L, 0);
  s.m_pl.assign(data.periods(), std::vector<std::int64_t>(L, 0));
  s.ybar.assign(L, Vec2::Zero());
  s.scatter.assign(L, Mat2::Zero());
  s.n_p.assign(data.periods(), 0);
  for (std::size_t p = 0; p < data.periods(); ++p)
    s.n_p[p] = static_cast<std::int64_t>(data.count(p));
  for (std::size_t i = 0; i < z.size(); ++i) {
    ++s.m[z[i]];
    ++s.m_pl[data.period_of(i)][z[i]];
  }
  std::vector<int> all(L);
  std::iota(all.begin(), all.end(), 0);
  s.refresh(data, z, all);
  return s;
}

void SufficientStats::reassign(const ModelData& data, std::span<const int> z, std::size_t i,
                               int old_label) {
  const int new_label = z[i];
  if (new_label == old_label) return;
  const std::size_t p = data.period_of(i);
  --m[old_label];
  --m_pl[p][old_label];
  ++m[new_label];
  ++m_pl[p][new_label];
  const int comps[2] = {old_label, new_label};
  refresh(data, z, comps);
}

void SufficientStats::refresh(const ModelData& data, std::span<const int> z,
                              std::span<const int> components) {
  const std::size_t L = m.size();
  std::vector<char> wanted(L, 0);
  for (int c : components) wanted[c] = 1;
  std::vector<Vec2> sum(L, Vec2::Zero());
  for (int c : components) {
    sum[c].setZero();
    scatter[c].setZero();
  }
  for (std::size_t i = 0; i < z.size(); ++i)
    if (wanted[z[i]]) sum[z[i]] += data.point(i);
  for (int c : components) ybar[c] = m[c] > 0 ? Vec2(sum[c] / static_cast<double>(m[c])) : Vec2::Zero();
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!wanted[z[i]]) continue;
    const Vec2 d = data.point(i) - ybar[z[i]];
    scatter[z[i]] += d * d.transpose();
  }
}

double mixture_density(const LatentState& state, std::size_t p, double x, double y) {
  double v = 0.0;
  for (std::size_t l = 0; l < state.components(); ++l) {
    const double w = state.beta(p, l);
    if (w > 0.0) v += w * state.psi[l].density(x, y);
  }
  return v;
}

double log_mixture_density(const LatentState& state, std::size_t p, double x, double y) {
  const std::size_t L = state.components();
  double mx = kLogZero;
  std::vector<double> terms(L);
  for (std::size_t l = 0; l < L; ++l) {
    terms[l] = state.log_weight(p, l) + state.psi[l].log_density(x, y);
    mx = std::max(mx, terms[l]);
  }
  if (mx == kLogZero) return kLogZero;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - mx);
  return mx + std::log(s);
}

namespace {

double poisson_terms(const LatentState& state, const ModelData& data) {
  double ll = 0.0;
  for (std::size_t p = 0; p < data.periods(); ++p) {
    const double g = state.gamma[p];
    if (!(g > 0.0)) throw NumericError("gamma must be positive");
    ll += -g * data.partition().length(p) + static_cast<double>(data.count(p)) * std::log(g);
  }
  return ll;
}

double log_multigamma2(double a) { return 0.5 * std::log(M_PI) + std::lgamma(a) + std::lgamma(a - 0.5); }

}  // namespace

double log_likelihood(const LatentState& state, const ModelData& data) {
  if (state.periods() != data.periods()) throw DataError("state and data period counts differ");
  double ll = poisson_terms(state, data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec2& x = data.point(i);
    ll += log_mixture_density(state, data.period_of(i), x(0), x(1));
  }
  return ll;
}

double log_likelihood_allocated(const LatentState& state, const ModelData& data) {
  if (state.periods() != data.periods()) throw DataError("state and data period counts differ");
  if (state.z.size() != data.size()) throw DataError("allocation vector length does not match data");
  double ll = poisson_terms(state, data);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const Vec2& x = data.point(i);
    ll += state.psi[state.z[i]].log_density(x(0), x(1));
  }
  return ll;
}

double log_prior_alpha(const LatentState& state, const Hyperparams& hyper) {
  const auto& a = state.alpha;
  double lp = (hyper.alpha0 - 1.0) * std::log(a[0]) - a[0] - std::lgamma(hyper.alpha0);
  for (std::size_t p = 1; p < a.size(); ++p)
    lp += (a[p - 1] - 1.0) * std::log(a[p]) - a[p] - std::lgamma(a[p - 1]);
  return lp;
}

double log_prior_beta(const LatentState& state) {
  const std::size_t P = state.periods(), L = state.components();
  if (L == 1) return 0.0;  // point mass on (1)
  // Dirichlet parameters handled on the log scale: a = alpha_p beta_{p-1,l}
  // may be far below the smallest double.
  const double log_a1 = std::log(state.alpha[0]) - std::log(static_cast<double>(L));
  double lp = std::lgamma(state.alpha[0]);
  for (std::size_t l = 0; l < L; ++l)
    lp += (std::exp(log_a1) - 1.0) * state.log_weight(0, l) - lgamma_at_log(log_a1);
  for (std::size_t p = 1; p < P; ++p) {
    const double log_alpha = std::log(state.alpha[p]);
    lp += std::lgamma(state.alpha[p]);
    for (std::size_t l = 0; l < L; ++l) {
      const double log_a = log_alpha + state.log_weight(p - 1, l);
      lp += (std::exp(log_a) - 1.0) * state.log_weight(p, l) - lgamma_at_log(log_a);
    }
  }
  return lp;
}

double log_prior_gamma(const LatentState& state, const Hyperparams& hyper) {
  const double shape = hyper.gamma0 * hyper.k;
  double lp = 0.0;
  for (double g : state.gamma)
    lp += shape * std::log(hyper.k) - std::lgamma(shape) + (shape - 1.0) * std::log(g) - hyper.k * g;
  return lp;
}

double niw_log_density(const GaussianComponent& psi, const NIWParams& niw) {
  const Mat2& S = psi.cov;
  const double det_s = det2(S);
  const Mat2 prec = inverse2(S);
  const Vec2 d = psi.mean - niw.mu0;
  // mu | Sigma ~ N(mu0, Sigma / eta)
  const double log_normal = -kLog2Pi - 0.5 * (std::log(det_s) - 2.0 * std::log(niw.eta)) -
                            0.5 * niw.eta * d.dot(prec * d);
  // Sigma ~ IW(sigma0, nu), dimension 2
  const double log_iw = 0.5 * niw.nu * std::log(det2(niw.sigma0)) - niw.nu * std::log(2.0) -
                        log_multigamma2(0.5 * niw.nu) - 0.5 * (niw.nu + 3.0) * std::log(det_s) -
                        0.5 * (niw.sigma0 * prec).trace();
  return log_normal + log_iw;
}

double log_prior_psi(const LatentState& state, const Hyperparams& hyper) {
  double lp = 0.0;
  for (const auto& c : state.psi) {
    if (hyper.mu_domain && !hyper.mu_domain->contains(c.mean(0), c.mean(1))) return kLogZero;
    lp += niw_log_density(c, hyper.niw);
  }
  return lp;
}

double log_prior_z(const LatentState& state, const ModelData& data) {
  double lp = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    lp += state.log_weight(data.period_of(i), static_cast<std::size_t>(state.z[i]));
  }
  return lp;
}

namespace {

bool in_support(const LatentState& state, const Hyperparams& hyper, const ModelData& data) {
  const std::size_t P = state.periods(), L = state.components();
  if (P != hyper.P || L != hyper.L || P != data.periods()) return false;
  if (state.gamma.size() != P || static_cast<std::size_t>(state.beta.rows()) != P ||
      static_cast<std::size_t>(state.beta.cols()) != L || state.z.size() != data.size())
    return false;
  for (std::size_t p = 0; p < P; ++p) {
    if (!(state.alpha[p] > 0.0) || !std::isfinite(state.alpha[p])) return false;
    if (!(state.gamma[p] > 0.0) || !std::isfinite(state.gamma[p])) return false;
    const auto lw = state.log_weights(p);
    for (double v : lw)
      if (!std::isfinite(v)) return false;
    if (std::abs(log_sum_exp(lw)) > 1e-9) return false;
  }
  for (const auto& c : state.psi)
    if (!c.mean.allFinite() || !is_spd2(c.cov)) return false;
  for (int label : state.z)
    if (label < 0 || static_cast<std::size_t>(label) >= L) return false;
  return true;
}

}  // namespace

double log_unnormalized_posterior(const LatentState& state, const ModelData& data,
                                  const Hyperparams& hyper) {
  if (!in_support(state, hyper, data)) return kLogZero;
  const double psi = log_prior_psi(state, hyper);
  if (psi == kLogZero) return kLogZero;
  const double v = log_prior_alpha(state, hyper) + log_prior_beta(state) + psi +
                   log_prior_gamma(state, hyper) + log_prior_z(state, data) +
                   log_likelihood_allocated(state, data);
  return std::isnan(v) ? kLogZero : v;
}

NIWParams niw_posterior(const NIWParams& prior, std::int64_t m, const Vec2& ybar,
                        const Mat2& scatter) {
  if (m == 0) return prior;
  const double md = static_cast<double>(m);
  NIWParams post;
  post.eta = prior.eta + md;
  post.nu = prior.nu + md;
  post.mu0 = (prior.eta * prior.mu0 + md * ybar) / post.eta;
  const Vec2 d = ybar - prior.mu0;
  post.sigma0 = symmetrize(prior.sigma0 + scatter + (prior.eta * md / post.eta) * (d * d.transpose()));
  return post;
}

GaussianComponent sample_niw(Rng& rng, const NIWParams& params,
                             const std::optional<SpatialWindow>& domain, std::size_t max_tries) {
  for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
    GaussianComponent c;
    c.cov = sample_inverse_wishart2(rng, params.sigma0, params.nu);
    // mean ~ N(mu0, cov / eta) through the Cholesky factor of cov / eta
    const double l00 = std::sqrt(c.cov(0, 0) / params.eta);
    const double l10 = c.cov(1, 0) / params.eta / l00;
    const double l11 = std::sqrt(std::max(c.cov(1, 1) / params.eta - l10 * l10, 0.0));
    const double e0 = rng.normal(), e1 = rng.normal();
    c.mean = params.mu0 + Vec2(l00 * e0, l10 * e0 + l11 * e1);
    if (!domain || domain->contains(c.mean(0), c.mean(1))) return c;
  }
  throw NumericError("truncated NIW draw exceeded the rejection cap");
}

LatentState draw_prior_state(const Hyperparams& hyper, std::span<const std::size_t> counts,
                             Rng& rng) {
  hyper.validate();
  if (counts.size() != hyper.P) throw DataError("period counts do not match P");
  const std::size_t P = hyper.P, L = hyper.L;
  LatentState s;
  s.alpha.resize(P);
  s.gamma.resize(P);
  s.beta.resize(P, L);
  // Gamma(shape, 1) chain in log space; values below the smallest normal
  // double are clamped there so alpha stays strictly positive.
  constexpr double kMinLog = -708.0;
  auto draw_alpha = [&](double shape) { return std::exp(std::max(rng.log_gamma1(shape), kMinLog)); };
  s.alpha[0] = draw_alpha(hyper.alpha0);
  std::vector<double> log_params(L, std::log(s.alpha[0]) - std::log(static_cast<double>(L)));
  s.log_beta.resize(P, L);
  s.set_log_beta_row(0, sample_dirichlet_log(rng, log_params));
  for (std::size_t p = 1; p < P; ++p) {
    s.alpha[p] = draw_alpha(s.alpha[p - 1]);
    for (std::size_t l = 0; l < L; ++l) log_params[l] = std::log(s.alpha[p]) + s.log_weight(p - 1, l);
    s.set_log_beta_row(p, sample_dirichlet_log(rng, log_params));
  }
  s.psi.reserve(L);
  for (std::size_t l = 0; l < L; ++l) s.psi.push_back(sample_niw(rng, hyper.niw, hyper.mu_domain));
  for (std::size_t p = 0; p < P; ++p) s.gamma[p] = rng.gamma(hyper.gamma0 * hyper.k, hyper.k);
  for (std::size_t p = 0; p < P; ++p) {
    const auto logw = s.log_weights(p);
    for (std::size_t i = 0; i < counts[p]; ++i)
      s.z.push_back(static_cast<int>(sample_categorical_log(rng, logw)));
  }
  return s;
}

std::vector<std::vector<Event>> simulate_events(LatentState& state, const TimePartition& partition,
                                                Rng& rng) {
  const std::size_t P = state.periods();
  std::vector<std::vector<Event>> out(P);
  state.z.clear();
  for (std::size_t p = 0; p < P; ++p) {
    const auto n = rng.poisson(state.gamma[p] * partition.length(p));
    const auto logw = state.log_weights(p);
    std::vector<double> times(n);
    for (auto& t : times) t = partition.start(p) + partition.length(p) * rng.uniform();
    std::sort(times.begin(), times.end());
    for (double t : times) {
      const auto l = sample_categorical_log(rng, logw);
      const auto& c = state.psi[l];
      const double l00 = std::sqrt(c.cov(0, 0));
      const double l10 = c.cov(1, 0) / l00;
      const double l11 = std::sqrt(std::max(c.cov(1, 1) - l10 * l10, 0.0));
      const double e0 = rng.normal(), e1 = rng.normal();
      out[p].push_back(Event{c.mean(0) + l00 * e0, c.mean(1) + l10 * e0 + l11 * e1, t, std::nullopt});
      state.z.push_back(static_cast<int>(l));
    }
  }
  return out;
}

double leaked_mass(const LatentState& state, std::size_t p, const SpatialWindow& window) {
  double inside = 0.0;
  for (std::size_t l = 0; l < state.components(); ++l)
    inside += state.beta(p, l) *
              state.psi[l].mass_in_box(window.x_min, window.x_max, window.y_min, window.y_max);
  return std::max(0.0, 1.0 - inside);
}

}  // namespace bgdp
