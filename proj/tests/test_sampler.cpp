#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/LU>

#include "bgdp/errors.hpp"
#include "bgdp/intensity_sim.hpp"
#include "bgdp/sampler.hpp"
#include "bgdp/serialization.hpp"
#include "support.hpp"

using namespace bgdp;
using testing_support::batch_means_se;
using testing_support::mean;
using testing_support::variance;

namespace {

constexpr double kPi = std::numbers::pi;

GaussianComponent comp(double mx, double my, double s = 1.0) {
  GaussianComponent c;
  c.mean = Vec2(mx, my);
  c.cov = s * Mat2::Identity();
  return c;
}

LatentState flat_state(std::size_t P, std::size_t L, std::size_t n = 0) {
  LatentState s;
  s.alpha.assign(P, 1.0);
  s.beta = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(L),
                                     1.0 / static_cast<double>(L));
  s.gamma.assign(P, 1.0);
  for (std::size_t l = 0; l < L; ++l) s.psi.push_back(comp(static_cast<double>(l), 0.0));
  s.z.assign(n, 0);
  return s;
}

ModelData data_with_counts(const std::vector<double>& breaks, const std::vector<std::size_t>& counts) {
  std::vector<std::vector<Event>> by_period(counts.size());
  for (std::size_t p = 0; p < counts.size(); ++p)
    for (std::size_t i = 0; i < counts[p]; ++i)
      by_period[p].push_back({0.1 * static_cast<double>(i), -0.1 * static_cast<double>(i),
                              0.5 * (breaks[p] + breaks[p + 1])});
  return ModelData(by_period, TimePartition(breaks));
}

Hyperparams small_hyper(std::size_t P, std::size_t L) {
  Hyperparams h;
  h.niw.mu0 = Vec2(1, 1);
  h.niw.eta = 0.1;
  h.niw.sigma0 = Mat2::Identity();
  h.niw.nu = 3.0;
  h.alpha0 = 1.0;
  h.gamma0 = 70.0;
  h.k = 0.1;
  h.L = L;
  h.P = P;
  return h;
}

double log_beta_fn(const std::vector<double>& a) {
  double s = -std::lgamma(std::accumulate(a.begin(), a.end(), 0.0));
  for (double v : a) s += std::lgamma(v);
  return s;
}

std::vector<double> logs(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::log(v[i]);
  return out;
}

std::vector<double> exps(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::exp(v[i]);
  return out;
}

// Checks a Monte Carlo mean against its analytic value at 3 standard errors.
void check_mean(const std::vector<double>& v, double expected) {
  const double se = std::sqrt(variance(v) / static_cast<double>(v.size()));
  CHECK(std::abs(mean(v) - expected) < 3.0 * se);
}

}  // namespace

TEST_CASE("config validation and draw count") {
  SamplerConfig c;
  c.sweeps = 100;
  c.burn_in = 50;
  c.thin = 5;
  CHECK_NOTHROW(c.validate());
  CHECK(c.expected_draws() == 10);

  auto bad = c;
  bad.burn_in = 100;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.thin = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.alpha_step = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.beta_step = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);

  const auto data = data_with_counts({0, 1, 2}, {3, 2});
  const auto draws = run_chain(data, small_hyper(2, 2), c);
  CHECK(draws.draws.size() == 10);
  CHECK(draws.draws.front().sweep == 55);
  CHECK(draws.draws.back().sweep == 100);
  for (const auto& d : draws.draws) CHECK_NOTHROW(d.state.check_invariants());
}

TEST_CASE("gamma full conditional moments") {
  Rng rng(101);
  SUBCASE("empty period shrinks toward the prior") {
    const auto data = data_with_counts({0, 1.25}, {0});
    auto s = flat_state(1, 1);
    const auto stats = SufficientStats::compute(data, s.z, 1);
    const auto h = small_hyper(1, 1);
    std::vector<double> g(100000);
    for (double& v : g) {
      update_gamma(s, stats, data.partition(), h, rng);
      v = s.gamma[0];
    }
    check_mean(g, 7.0 / 1.35);
    CHECK(variance(g) == doctest::Approx(7.0 / (1.35 * 1.35)).epsilon(0.03));
  }
  SUBCASE("long period with a weak prior") {
    const auto data = data_with_counts({0, 1000}, {100});
    auto s = flat_state(1, 1, 100);
    const auto stats = SufficientStats::compute(data, s.z, 1);
    auto h = small_hyper(1, 1);
    h.gamma0 = 1.0;
    h.k = 0.01;
    const double shape = 100.01, rate = 1000.01;
    CHECK(shape / rate == doctest::Approx(0.1).epsilon(1e-3));
    std::vector<double> g(100000);
    for (double& v : g) {
      update_gamma(s, stats, data.partition(), h, rng);
      v = s.gamma[0];
    }
    check_mean(g, shape / rate);
    CHECK(variance(g) == doctest::Approx(shape / (rate * rate)).epsilon(0.03));
  }
}

TEST_CASE("psi full conditional moments") {
  // two events at (0,0) and (2,2): NIW((1,1), 2.1, [[3,2],[2,3]], 5)
  std::vector<std::vector<Event>> by_period{{{0, 0, 0.5}, {2, 2, 0.5}}};
  const ModelData data(by_period, TimePartition({0, 1}));
  auto s = flat_state(1, 1, 2);
  const auto stats = SufficientStats::compute(data, s.z, 1);
  const auto h = small_hyper(1, 1);
  Rng rng(5);
  std::vector<double> mx(100000), s11(100000), s12(100000);
  for (std::size_t i = 0; i < mx.size(); ++i) {
    update_psi(s, stats, h, rng);
    mx[i] = s.psi[0].mean(0);
    s11[i] = s.psi[0].cov(0, 0);
    s12[i] = s.psi[0].cov(0, 1);
  }
  // E[Sigma] = scale / (nu - 3) = [[1.5, 1], [1, 1.5]]; Var(Sigma_11) is
  // finite for nu = 5.
  check_mean(mx, 1.0);
  check_mean(s11, 1.5);
  check_mean(s12, 1.0);
}

TEST_CASE("allocation probabilities") {
  std::vector<std::vector<Event>> by_period{{{0, 0, 0.5}}};
  const ModelData data(by_period, TimePartition({0, 1}));
  auto s = flat_state(1, 2, 1);

  SUBCASE("symmetric weights and densities") {
    s.psi = {comp(1, 0), comp(-1, 0)};
    const auto pr = allocation_probabilities(s, data, 0);
    CHECK(pr[0] == doctest::Approx(0.5));
    CHECK(pr[1] == doctest::Approx(0.5));
  }
  SUBCASE("degenerate weight") {
    s.beta(0, 0) = 1.0;
    s.beta(0, 1) = 0.0;
    const auto pr = allocation_probabilities(s, data, 0);
    CHECK(pr[0] == 1.0);
    CHECK(pr[1] == 0.0);
    Rng rng(3);
    auto stats = SufficientStats::compute(data, s.z, 2);
    for (int i = 0; i < 100; ++i) {
      s.z[0] = 1;
      stats = SufficientStats::compute(data, s.z, 2);
      update_z(s, stats, data, rng);
      CHECK(s.z[0] == 0);
    }
  }
  SUBCASE("weights 0.3/0.7 with densities 2 and 1") {
    // peak density of s*I is 1 / (2 pi s)
    s.psi = {comp(0, 0, 1.0 / (4.0 * kPi)), comp(0, 0, 1.0 / (2.0 * kPi))};
    s.beta(0, 0) = 0.3;
    s.beta(0, 1) = 0.7;
    CHECK(s.psi[0].density(0, 0) == doctest::Approx(2.0));
    CHECK(s.psi[1].density(0, 0) == doctest::Approx(1.0));
    const auto pr = allocation_probabilities(s, data, 0);
    CHECK(pr[0] == doctest::Approx(6.0 / 13.0).epsilon(1e-12));
    CHECK(pr[1] == doctest::Approx(7.0 / 13.0).epsilon(1e-12));

    Rng rng(17);
    auto stats = SufficientStats::compute(data, s.z, 2);
    std::vector<double> hits(100000);
    for (double& h : hits) {
      update_z(s, stats, data, rng);
      h = s.z[0] == 0 ? 1.0 : 0.0;
    }
    check_mean(hits, 6.0 / 13.0);
  }
  SUBCASE("all weights zero") {
    s.beta(0, 0) = 0.0;
    s.beta(0, 1) = 0.0;
    CHECK_THROWS_AS(allocation_probabilities(s, data, 0), NumericError);
  }
}

TEST_CASE("update_z keeps sufficient statistics in sync") {
  Rng rng(9);
  const auto data = data_with_counts({0, 1, 2, 3}, {20, 0, 15});
  const auto h = small_hyper(3, 4);
  auto s = draw_prior_state(h, std::vector<std::size_t>{20, 0, 15}, rng);
  auto stats = SufficientStats::compute(data, s.z, 4);
  for (int i = 0; i < 50; ++i) {
    update_z(s, stats, data, rng);
    REQUIRE(stats == SufficientStats::compute(data, s.z, 4));
  }
}

TEST_CASE("terminal beta conditional") {
  Rng rng(23);
  SUBCASE("counts (3,1) with alpha 2 and uniform parent") {
    const auto data = data_with_counts({0, 1, 2}, {0, 4});
    auto s = flat_state(2, 2, 4);
    s.z = {0, 0, 0, 1};
    s.alpha = {1.0, 2.0};
    const auto stats = SufficientStats::compute(data, s.z, 2);
    std::vector<double> b(100000);
    for (double& v : b) {
      update_beta_terminal(s, stats, rng);
      v = s.beta(1, 0);
      REQUIRE(s.beta(1, 0) + s.beta(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    }
    // Dirichlet(4, 2): mean 2/3, variance 4*2 / (6^2 * 7)
    check_mean(b, 2.0 / 3.0);
    CHECK(variance(b) == doctest::Approx(8.0 / 252.0).epsilon(0.03));
  }
  SUBCASE("no events gives the conditional prior") {
    const auto data = data_with_counts({0, 1, 2}, {0, 0});
    auto s = flat_state(2, 2);
    s.alpha = {1.0, 3.0};
    s.beta(0, 0) = 0.2;
    s.beta(0, 1) = 0.8;
    const auto stats = SufficientStats::compute(data, s.z, 2);
    std::vector<double> b(100000);
    for (double& v : b) {
      update_beta_terminal(s, stats, rng);
      v = s.beta(1, 0);
    }
    // Beta(0.6, 2.4)
    check_mean(b, 0.2);
    CHECK(variance(b) == doctest::Approx(0.2 * 0.8 / 4.0).epsilon(0.03));
  }
  SUBCASE("one component") {
    const auto data = data_with_counts({0, 1, 2}, {2, 3});
    auto s = flat_state(2, 1, 5);
    const auto stats = SufficientStats::compute(data, s.z, 1);
    for (int i = 0; i < 10; ++i) {
      update_beta_terminal(s, stats, rng);
      CHECK(s.beta(1, 0) == 1.0);
    }
  }
}

TEST_CASE("simplex move") {
  const std::vector<double> x = logs({0.2, 0.5, 0.3});
  SUBCASE("zero increment is the identity") {
    const auto m = simplex_move(x, 1, 0.0);
    CHECK(m.log_point == x);
    CHECK(m.log_correction == 0.0);
  }
  SUBCASE("boundary points are rejected") {
    const std::vector<double> edge = logs({0.0, 0.5, 0.5});
    CHECK_THROWS_AS(simplex_move(edge, 1, 0.3), NumericError);
    Rng rng(1);
    CHECK_THROWS_AS(propose_simplex(edge, 1.0, rng), NumericError);
  }
  SUBCASE("outputs stay on the simplex") {
    Rng rng(77);
    for (int trial = 0; trial < 2000; ++trial) {
      const std::size_t L = 2 + rng.uniform_index(10);
      const auto cur = logs(sample_dirichlet(rng, std::vector<double>(L, 1.0)));
      const auto prop = exps(propose_simplex(cur, 0.5 + 3.0 * rng.uniform(), rng).log_point);
      double sum = 0.0;
      for (double v : prop) {
        CHECK(v > 0.0);
        sum += v;
      }
      CHECK(std::abs(sum - 1.0) < 1e-12);
    }
  }
  SUBCASE("reverse move undoes the forward move with the opposite correction") {
    Rng rng(12);
    for (int trial = 0; trial < 500; ++trial) {
      const std::size_t L = 2 + rng.uniform_index(6);
      const auto cur = logs(sample_dirichlet(rng, std::vector<double>(L, 2.0)));
      const std::size_t j = rng.uniform_index(L);
      const double d = 2.0 * rng.normal();
      const auto fwd = simplex_move(cur, j, d);
      const auto back = simplex_move(fwd.log_point, j, -d);
      for (std::size_t i = 0; i < L; ++i) CHECK(std::abs(back.log_point[i] - cur[i]) < 1e-10);
      CHECK(back.log_correction == doctest::Approx(-fwd.log_correction).epsilon(1e-10));
    }
  }
  SUBCASE("weights far below the smallest double move exactly") {
    const std::vector<double> tiny{-1e6, -2e5, 0.0};
    const auto fwd = simplex_move(tiny, 2, -0.8);
    const auto back = simplex_move(fwd.log_point, 2, 0.8);
    for (std::size_t i = 0; i < 3; ++i) CHECK(back.log_point[i] == doctest::Approx(tiny[i]).epsilon(1e-14));
    CHECK(std::isfinite(fwd.log_correction));
    CHECK(back.log_correction == doctest::Approx(-fwd.log_correction).epsilon(1e-12));
  }
  SUBCASE("correction equals the log Jacobian of the map (finite differences)") {
    Rng rng(99);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t L = 2 + rng.uniform_index(5);
      auto cur = sample_dirichlet(rng, std::vector<double>(L, 3.0));
      const std::size_t j = rng.uniform_index(L);
      const double d = rng.normal();
      // linear-scale map restricted to the free coordinates (all but `drop`)
      const std::size_t drop = j == L - 1 ? 0 : L - 1;
      auto free_of = [&](const std::vector<double>& v) {
        std::vector<double> f;
        for (std::size_t i = 0; i < L; ++i)
          if (i != drop) f.push_back(v[i]);
        return f;
      };
      auto complete = [&](const std::vector<double>& f) {
        std::vector<double> v(L);
        double s = 0.0;
        for (std::size_t i = 0, k = 0; i < L; ++i)
          if (i != drop) s += (v[i] = f[k++]);
        v[drop] = 1.0 - s;
        return v;
      };
      auto image = [&](const std::vector<double>& f) {
        return free_of(exps(simplex_move(logs(complete(f)), j, d).log_point));
      };
      const auto f0 = free_of(cur);
      const std::size_t n = f0.size();
      Eigen::MatrixXd jac(n, n);
      const double h = 1e-6;
      for (std::size_t c = 0; c < n; ++c) {
        auto up = f0, dn = f0;
        up[c] += h;
        dn[c] -= h;
        const auto yu = image(up), yd = image(dn);
        for (std::size_t r = 0; r < n; ++r) jac(r, c) = (yu[r] - yd[r]) / (2.0 * h);
      }
      const double expected = std::log(std::abs(jac.determinant()));
      CHECK(simplex_move(logs(cur), j, d).log_correction == doctest::Approx(expected).epsilon(1e-5));
    }
  }
}

TEST_CASE("interior beta acceptance ratio matches the displayed conditional") {
  // P = 2, L = 2; displayed density of beta_1:
  //   prod_l b_l^(m_1l + a_1/L - 1) * prod_l beta_2l^(a_2 b_l) / B(a_2 b)
  const auto data = data_with_counts({0, 1, 2}, {3, 0});
  auto s = flat_state(2, 2, 3);
  s.z = {0, 0, 1};
  s.alpha = {1.5, 2.5};
  s.beta(1, 0) = 0.3;
  s.beta(1, 1) = 0.7;
  const auto stats = SufficientStats::compute(data, s.z, 2);
  const std::vector<double> m{2.0, 1.0};

  auto oracle = [&](double b0) {
    const std::vector<double> b{b0, 1.0 - b0};
    double v = 0.0;
    for (int l = 0; l < 2; ++l) v += (m[l] + s.alpha[0] / 2.0 - 1.0) * std::log(b[l]);
    for (int l = 0; l < 2; ++l) v += s.alpha[1] * b[l] * std::log(s.beta(1, l));
    return v - log_beta_fn({s.alpha[1] * b[0], s.alpha[1] * b[1]});
  };
  // for L = 2 the move is a logit random walk on b0, whose Jacobian is
  // b0'(1 - b0') / (b0 (1 - b0))
  auto oracle_correction = [](double from, double to) {
    return std::log(to * (1.0 - to)) - std::log(from * (1.0 - from));
  };

  const std::vector<double> cur = logs({0.4, 0.6});
  for (double inc : {-1.3, -0.2, 0.7, 2.1}) {
    for (std::size_t j : {0u, 1u}) {
      const auto prop = simplex_move(cur, j, inc);
      const double impl = beta_row_log_ratio(s, stats, 0, cur, prop.log_point) + prop.log_correction;
      const double to = std::exp(prop.log_point[0]);
      const double ref = oracle(to) - oracle(0.4) + oracle_correction(0.4, to);
      CHECK(std::abs(impl - ref) < 1e-10);
    }
  }
  const auto same = simplex_move(cur, 0, 0.0);
  CHECK(beta_row_log_ratio(s, stats, 0, cur, same.log_point) + same.log_correction == 0.0);
  Rng rng(1);
  CHECK_THROWS_AS(update_beta_interior(s, stats, 1, rng, InteriorBetaMode::kExactMH, 1.0, 1), ConfigError);
}

TEST_CASE("interior beta ratio with weights below the smallest double") {
  // P = 3, L = 3, no data: ratio for row 1 against an independent
  // log-scale evaluation of its conditional density.
  const auto data = data_with_counts({0, 1, 2, 3}, {0, 0, 0});
  auto s = flat_state(3, 3);
  s.alpha = {0.7, 0.02, 3.0};
  s.log_beta.resize(3, 3);
  s.beta.resize(3, 3);
  const std::vector<std::vector<double>> rows{logs({0.98, 0.019, 0.001}), {-800.0, -2.0, 0.0}, {-5e4, 0.0, -3e3}};
  for (std::size_t p = 0; p < 3; ++p) {
    auto r = rows[p];
    const double z = log_sum_exp(r);
    for (double& v : r) v -= z;
    s.set_log_beta_row(p, r);
  }
  const auto stats = SufficientStats::compute(data, s.z, 3);
  // log density of row 1 at log weights x, dropping row-free constants:
  //   sum_l (a_l - 1) x_l + sum_l alpha_3 e^{x_l} log beta_3l - lgamma(alpha_3 e^{x_l})
  auto oracle = [&](const std::vector<double>& x) {
    long double v = 0.0L;
    for (std::size_t l = 0; l < 3; ++l) {
      const long double a = static_cast<long double>(s.alpha[1]) * std::exp(static_cast<long double>(s.log_weight(0, l)));
      const long double b = static_cast<long double>(s.alpha[2]) * std::exp(static_cast<long double>(x[l]));
      v += (a - 1.0L) * x[l] + b * s.log_weight(2, l) - std::lgamma(b);
    }
    return static_cast<double>(v);
  };
  const auto cur = s.log_weights(1);
  for (double inc : {-1.0, 0.4, 2.5}) {
    for (std::size_t j = 0; j < 3; ++j) {
      const auto prop = simplex_move(cur, j, inc);
      const double impl = beta_row_log_ratio(s, stats, 1, cur, prop.log_point);
      CHECK(std::isfinite(impl));
      // long double keeps exp(-800) representable in the oracle
      CHECK(impl == doctest::Approx(oracle(prop.log_point) - oracle(cur)).epsilon(1e-9));
      CHECK(beta_row_log_ratio(s, stats, 1, prop.log_point, cur) == doctest::Approx(-impl).epsilon(1e-12));
    }
  }
}

TEST_CASE("paper-gibbs mode draws later interior rows directly") {
  const auto data = data_with_counts({0, 1, 2, 3}, {2, 2, 2});
  auto s = flat_state(3, 3, 6);
  const auto stats = SufficientStats::compute(data, s.z, 3);
  Rng rng(4);
  const auto t0 = update_beta_interior(s, stats, 0, rng, InteriorBetaMode::kPaperGibbs, 1.0, 3);
  CHECK(t0.proposed == 3);
  const auto t1 = update_beta_interior(s, stats, 1, rng, InteriorBetaMode::kPaperGibbs, 1.0, 3);
  CHECK(t1.proposed == 0);
  CHECK_NOTHROW(s.check_invariants());
}

TEST_CASE("alpha log target matches the displayed conditionals") {
  auto h = small_hyper(2, 2);
  h.alpha0 = 1.7;
  auto s = flat_state(2, 2);
  s.alpha = {1.2, 3.4};
  s.beta << 0.35, 0.65, 0.2, 0.8;

  // alpha_1: e^-a a^alpha0 alpha_2^a / Gamma(a) * prod_l beta_1l^(a/L) / B(a/L, a/L)
  auto first = [&](double a) {
    double v = -a + h.alpha0 * std::log(a) + a * std::log(s.alpha[1]) - std::lgamma(a);
    for (int l = 0; l < 2; ++l) v += (a / 2.0) * std::log(s.beta(0, l));
    return v - log_beta_fn({a / 2.0, a / 2.0});
  };
  // alpha_P: e^-a a^alpha_{P-1} prod_l beta_Pl^(a beta_{P-1,l}) / B(a beta_{P-1})
  auto last = [&](double a) {
    double v = -a + s.alpha[0] * std::log(a);
    for (int l = 0; l < 2; ++l) v += a * s.beta(0, l) * std::log(s.beta(1, l));
    return v - log_beta_fn({a * s.beta(0, 0), a * s.beta(0, 1)});
  };
  const std::vector<std::pair<double, double>> pairs{{0.5, 2.0}, {1.2, 7.5}, {0.05, 0.9}};
  for (auto [a, b] : pairs) {
    CHECK(std::abs((alpha_log_target(s, h, 0, a) - alpha_log_target(s, h, 0, b)) - (first(a) - first(b))) <
          1e-10);
    CHECK(std::abs((alpha_log_target(s, h, 1, a) - alpha_log_target(s, h, 1, b)) - (last(a) - last(b))) < 1e-10);
  }
  CHECK(alpha_log_target(s, h, 0, 0.0) == kLogZero);
  CHECK(alpha_log_target(s, h, 0, -1.0) == kLogZero);

  // zero step: proposal equals current and is always accepted
  Rng rng(2);
  const auto before = s.alpha;
  const std::vector<double> zero_steps{0.0, 0.0};
  const auto tallies = update_alpha(s, h, rng, zero_steps);
  CHECK(tallies[0].accepted == 1);
  CHECK(tallies[1].accepted == 1);
  CHECK(s.alpha == before);
}

TEST_CASE("no-data chains sample the prior") {
  // Compares stationary moments of the sampler with ancestral prior draws.
  auto run_no_data = [](std::size_t P, std::size_t L, std::uint64_t seed, auto&& record) {
    std::vector<double> breaks(P + 1);
    for (std::size_t p = 0; p <= P; ++p) breaks[p] = static_cast<double>(p);
    const auto data = data_with_counts(breaks, std::vector<std::size_t>(P, 0));
    auto h = small_hyper(P, L);
    SamplerConfig c;
    c.sweeps = 60000;
    c.burn_in = 2000;
    c.thin = 1;
    c.init = InitMode::kPrior;
    RunOptions o;
    o.seed = seed;
    o.keep_draws = false;
    o.on_draw = [&](const Draw& d) { record(d.state); };
    run_chain(data, h, c, o);
    return h;
  };
  auto compare = [](const std::vector<double>& chain, const std::vector<double>& prior) {
    const double se = std::hypot(batch_means_se(chain), std::sqrt(variance(prior) / static_cast<double>(prior.size())));
    INFO("chain " << mean(chain) << " prior " << mean(prior) << " se " << se);
    CHECK(std::abs(mean(chain) - mean(prior)) < 4.0 * se);
  };

  SUBCASE("alpha cascade with one component") {
    std::vector<double> a1, a2, g;
    const auto h = run_no_data(2, 1, 41, [&](const LatentState& s) {
      a1.push_back(s.alpha[0]);
      a2.push_back(std::log(s.alpha[1]) > -30 ? 1.0 : 0.0);
      g.push_back(s.gamma[1]);
    });
    Rng rng(42);
    std::vector<double> p1, p2;
    const std::vector<std::size_t> counts{0, 0};
    for (int i = 0; i < 200000; ++i) {
      const auto s = draw_prior_state(h, counts, rng);
      p1.push_back(s.alpha[0]);
      p2.push_back(std::log(s.alpha[1]) > -30 ? 1.0 : 0.0);
    }
    compare(a1, p1);
    compare(a2, p2);
    // zero events in a unit period still update gamma: Gamma(7, 1.1)
    CHECK(std::abs(mean(g) - 7.0 / 1.1) < 4.0 * batch_means_se(g));
  }
  SUBCASE("first beta row with three components") {
    std::vector<double> b, b2;
    const auto h = run_no_data(2, 3, 43, [&](const LatentState& s) {
      b.push_back(s.beta(0, 0));
      b2.push_back(s.beta(0, 0) * s.beta(0, 0));
    });
    Rng rng(44);
    std::vector<double> pb, pb2;
    const std::vector<std::size_t> counts{0, 0};
    for (int i = 0; i < 200000; ++i) {
      const auto s = draw_prior_state(h, counts, rng);
      pb.push_back(s.beta(0, 0));
      pb2.push_back(s.beta(0, 0) * s.beta(0, 0));
    }
    compare(b, pb);
    compare(b2, pb2);
  }
}

TEST_CASE("sweeps are deterministic and preserve invariants") {
  Rng fuzz(2024);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t P = 1 + fuzz.uniform_index(4), L = 1 + fuzz.uniform_index(5);
    std::vector<std::vector<Event>> by_period(P);
    for (std::size_t p = 0; p < P; ++p) {
      const std::size_t n = fuzz.uniform_index(15);
      for (std::size_t i = 0; i < n; ++i)
        by_period[p].push_back({4.0 * fuzz.normal(), 4.0 * fuzz.normal(), static_cast<double>(p) + 0.5});
    }
    std::vector<double> breaks(P + 1);
    for (std::size_t p = 0; p <= P; ++p) breaks[p] = static_cast<double>(p);
    const ModelData data(by_period, TimePartition(breaks));
    const auto h = small_hyper(P, L);
    SamplerConfig c;
    c.sweeps = 40;
    c.burn_in = 20;
    c.thin = 1;
    if (trial % 2) c.interior_beta = InteriorBetaMode::kPaperGibbs;
    auto a = initialize_chain(data, h, c, 1000 + static_cast<std::uint64_t>(trial));
    auto b = a;
    for (std::size_t k = 0; k < c.sweeps; ++k) {
      sweep(a, data, h, c, k < c.burn_in);
      sweep(b, data, h, c, k < c.burn_in);
      REQUIRE_NOTHROW(a.state.check_invariants());
      for (double v : a.state.alpha) REQUIRE(v > 0.0);
    }
    CHECK(a == b);
  }
}

TEST_CASE("identical seeds give identical draws; checkpoints continue exactly") {
  const auto spec = paper_synthetic_intensity();
  const SpatialWindow window{-5, 10, -5, 10};
  auto sim = simulate_thinning(spec, window, 10.0, 7);
  const auto partition = regular_partition(10.0, 4);
  const ModelData data(sim.catalog, partition);
  auto h = small_hyper(4, 4);

  SamplerConfig c;
  c.sweeps = 60;
  c.burn_in = 20;
  c.thin = 2;
  c.checkpoint_every = 30;
  c.seed = 55;

  const auto full = run_chain(data, h, c);
  const auto again = run_chain(data, h, c);
  REQUIRE(full.draws.size() == again.draws.size());
  for (std::size_t i = 0; i < full.draws.size(); ++i) {
    CHECK(full.draws[i].state == again.draws[i].state);
    CHECK(draw_to_json(full.draws[i]).dump() == draw_to_json(again.draws[i]).dump());
  }

  std::optional<ChainState> at30;
  RunOptions o;
  o.on_checkpoint = [&](const ChainState& ch) {
    if (ch.sweep == 30) at30 = ch;
  };
  run_chain(data, h, c, o);
  REQUIRE(at30);
  RunOptions resume;
  resume.resume_from = checkpoint_from_json(checkpoint_to_json(*at30, h, c));
  const auto tail = run_chain(data, h, c, resume);
  REQUIRE(tail.draws.size() == 15);
  for (std::size_t i = 0; i < tail.draws.size(); ++i) CHECK(tail.draws[i].state == full.draws[i + 5].state);
  CHECK(tail.acceptance == full.acceptance);
}

TEST_CASE("an aborted chain leaves a resumable checkpoint") {
  const auto data = data_with_counts({0, 1, 2}, {4, 4});
  const auto h = small_hyper(2, 2);
  SamplerConfig c;
  c.sweeps = 50;
  c.burn_in = 10;
  c.thin = 1;
  std::optional<ChainState> saved;
  RunOptions o;
  o.on_checkpoint = [&](const ChainState& ch) { saved = ch; };
  o.on_draw = [](const Draw& d) {
    if (d.sweep == 25) throw NumericError("injected");
  };
  CHECK_THROWS_AS(run_chain(data, h, c, o), NumericError);
  REQUIRE(saved);
  CHECK(saved->sweep == 24);

  const auto full = run_chain(data, h, c);
  RunOptions resume;
  resume.resume_from = *saved;
  const auto tail = run_chain(data, h, c, resume);
  REQUIRE(tail.draws.size() == 26);
  CHECK(tail.draws.front().state == full.draws[14].state);
}

TEST_CASE("adapted acceptance rates on the synthetic configuration") {
  const auto spec = paper_synthetic_intensity();
  const SpatialWindow window{-5, 10, -5, 10};
  const auto sim = simulate_thinning(spec, window, 10.0, 20240601);
  const ModelData data(sim.catalog, regular_partition(10.0, 8));
  auto h = small_hyper(8, 8);
  SamplerConfig c;
  c.sweeps = 6000;
  c.burn_in = 3000;
  c.thin = 10;
  const auto draws = run_chain(data, h, c);
  for (std::size_t p = 0; p < 8; ++p) {
    INFO("period " << p);
    CHECK(draws.acceptance.alpha[p].rate() >= 0.2);
    CHECK(draws.acceptance.alpha[p].rate() <= 0.6);
    if (p + 1 < 8) {
      CHECK(draws.acceptance.beta[p].rate() >= 0.2);
      CHECK(draws.acceptance.beta[p].rate() <= 0.6);
    }
  }
}
