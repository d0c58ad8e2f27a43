#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "bgdp/errors.hpp"
#include "bgdp/model.hpp"
#include "support.hpp"

using namespace bgdp;

namespace {

constexpr double kPi = std::numbers::pi;

GaussianComponent comp(double mx, double my, double s11 = 1.0, double s12 = 0.0, double s22 = 1.0) {
  GaussianComponent c;
  c.mean = Vec2(mx, my);
  c.cov << s11, s12, s12, s22;
  return c;
}

LatentState single_component_state(double gamma) {
  LatentState s;
  s.alpha = {1.0};
  s.beta = Eigen::MatrixXd::Ones(1, 1);
  s.gamma = {gamma};
  s.psi = {comp(0, 0)};
  return s;
}

// ---- independent scalar oracle --------------------------------------------

double log_gamma_pdf(double x, double shape, double rate) {
  return shape * std::log(rate) - std::lgamma(shape) + (shape - 1.0) * std::log(x) - rate * x;
}

double log_dirichlet_pdf(const std::vector<double>& x, const std::vector<double>& a) {
  double s = std::lgamma(std::accumulate(a.begin(), a.end(), 0.0));
  for (std::size_t i = 0; i < x.size(); ++i) s += (a[i] - 1.0) * std::log(x[i]) - std::lgamma(a[i]);
  return s;
}

struct Sym2 {
  double a, b, c;  // [[a, b], [b, c]]
  double det() const { return a * c - b * b; }
};

double log_normal2(double x, double y, double mx, double my, Sym2 s) {
  const double dx = x - mx, dy = y - my, d = s.det();
  const double q = (s.c * dx * dx - 2.0 * s.b * dx * dy + s.a * dy * dy) / d;
  return -std::log(2.0 * kPi) - 0.5 * std::log(d) - 0.5 * q;
}

double log_inv_wishart2(Sym2 sigma, Sym2 scale, double nu) {
  const double d = sigma.det();
  // tr(scale * sigma^{-1})
  const double tr = (scale.a * sigma.c - 2.0 * scale.b * sigma.b + scale.c * sigma.a) / d;
  const double log_gamma2 = 0.5 * std::log(kPi) + std::lgamma(nu / 2.0) + std::lgamma(nu / 2.0 - 0.5);
  return 0.5 * nu * std::log(scale.det()) - nu * std::log(2.0) - log_gamma2 - 0.5 * (nu + 3.0) * std::log(d) -
         0.5 * tr;
}

Sym2 sym(const Mat2& m) { return {m(0, 0), m(0, 1), m(1, 1)}; }

double oracle_log_posterior(const LatentState& s, const std::vector<std::vector<Event>>& by_period,
                            const TimePartition& part, const Hyperparams& h) {
  const std::size_t P = s.alpha.size(), L = s.psi.size();
  double v = log_gamma_pdf(s.alpha[0], h.alpha0, 1.0);
  for (std::size_t p = 1; p < P; ++p) v += log_gamma_pdf(s.alpha[p], s.alpha[p - 1], 1.0);
  for (std::size_t p = 0; p < P; ++p) {
    std::vector<double> row(L), a(L);
    for (std::size_t l = 0; l < L; ++l) {
      row[l] = s.beta(p, l);
      a[l] = p == 0 ? s.alpha[0] / static_cast<double>(L) : s.alpha[p] * s.beta(p - 1, l);
    }
    v += log_dirichlet_pdf(row, a);
  }
  for (const auto& c : s.psi) {
    const Sym2 cov = sym(c.cov);
    v += log_normal2(c.mean(0), c.mean(1), h.niw.mu0(0), h.niw.mu0(1),
                     {cov.a / h.niw.eta, cov.b / h.niw.eta, cov.c / h.niw.eta});
    v += log_inv_wishart2(cov, sym(h.niw.sigma0), h.niw.nu);
  }
  for (std::size_t p = 0; p < P; ++p) v += log_gamma_pdf(s.gamma[p], h.gamma0 * h.k, h.k);
  std::size_t i = 0;
  for (std::size_t p = 0; p < P; ++p) {
    v += -s.gamma[p] * part.length(p) + static_cast<double>(by_period[p].size()) * std::log(s.gamma[p]);
    for (const auto& e : by_period[p]) {
      const auto& c = s.psi[static_cast<std::size_t>(s.z[i])];
      v += std::log(s.beta(p, s.z[i]));
      v += log_normal2(e.x, e.y, c.mean(0), c.mean(1), sym(c.cov));
      ++i;
    }
  }
  return v;
}

Hyperparams small_hyper(std::size_t P, std::size_t L) {
  Hyperparams h;
  h.niw.mu0 = Vec2(1.0, 1.0);
  h.niw.eta = 0.1;
  h.niw.sigma0 = Mat2::Identity();
  h.niw.nu = 3.0;
  h.alpha0 = 1.5;
  h.gamma0 = 3.0;
  h.k = 0.5;
  h.P = P;
  h.L = L;
  return h;
}

}  // namespace

TEST_CASE("mixture density examples") {
  LatentState s = single_component_state(1.0);
  CHECK(mixture_density(s, 0, 0.0, 0.0) == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-14));
  CHECK(mixture_density(s, 0, 0.0, 0.0) == doctest::Approx(0.159155).epsilon(1e-6));

  SUBCASE("zero weight contributes nothing") {
    LatentState t;
    t.alpha = {1.0};
    t.gamma = {1.0};
    t.beta.resize(1, 2);
    t.beta << 1.0, 0.0;
    t.psi = {comp(0, 0), comp(0.1, 0.1, 1e-4, 0.0, 1e-4)};
    CHECK(mixture_density(t, 0, 0.1, 0.1) == doctest::Approx(comp(0, 0).density(0.1, 0.1)).epsilon(1e-15));
  }
  SUBCASE("equal weights of identical components collapse") {
    LatentState t;
    t.alpha = {1.0};
    t.gamma = {1.0};
    t.beta.resize(1, 2);
    t.beta << 0.5, 0.5;
    t.psi = {comp(1, 2, 2, 0.3, 1), comp(1, 2, 2, 0.3, 1)};
    for (double x : {-1.0, 0.5, 3.0})
      CHECK(mixture_density(t, 0, x, 1.0) == doctest::Approx(t.psi[0].density(x, 1.0)).epsilon(1e-14));
  }
}

TEST_CASE("mixture density integrates to one on a large domain") {
  LatentState t;
  t.alpha = {1.0};
  t.gamma = {1.0};
  t.beta.resize(1, 3);
  t.beta << 0.2, 0.5, 0.3;
  t.psi = {comp(0, 0), comp(2, -1, 0.5, 0.2, 0.8), comp(-1, 3, 1.5, -0.4, 0.6)};
  using boost::math::quadrature::gauss_kronrod;
  auto inner = [&](double y) {
    return gauss_kronrod<double, 31>::integrate([&](double x) { return mixture_density(t, 0, x, y); }, -15, 15, 10,
                                                1e-10);
  };
  const double total = gauss_kronrod<double, 31>::integrate(inner, -15, 15, 10, 1e-10);
  CHECK(std::abs(total - 1.0) < 1e-3);
}

TEST_CASE("log likelihood closed forms") {
  SUBCASE("no events") {
    LatentState s = single_component_state(2.0);
    const ModelData data(std::vector<std::vector<Event>>{{}}, TimePartition({0.0, 3.0}));
    CHECK(log_likelihood(s, data) == doctest::Approx(-6.0).epsilon(1e-15));
  }
  SUBCASE("one event at the component mean") {
    LatentState s = single_component_state(1.0);
    s.z = {0};
    const ModelData data(std::vector<std::vector<Event>>{{Event{0, 0, 0.5}}}, TimePartition({0.0, 1.0}));
    const double expect = -1.0 + 0.0 + std::log(1.0 / (2.0 * kPi));
    CHECK(expect == doctest::Approx(-2.837877).epsilon(1e-6));
    CHECK(log_likelihood(s, data) == doctest::Approx(expect).epsilon(1e-14));
    CHECK(log_likelihood_allocated(s, data) == doctest::Approx(expect).epsilon(1e-14));
  }
  SUBCASE("nonpositive gamma") {
    LatentState s = single_component_state(0.0);
    const ModelData data(std::vector<std::vector<Event>>{{}}, TimePartition({0.0, 3.0}));
    CHECK_THROWS_AS(log_likelihood(s, data), NumericError);
  }
}

TEST_CASE("factorized likelihood equals the triple integral form") {
  // Domain wide enough that the Gaussians' mass outside it is negligible.
  const double half = 25.0;
  Rng rng(2024);
  using boost::math::quadrature::gauss_kronrod;
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t P = 1 + rng.uniform_index(3), L = 1 + rng.uniform_index(3);
    const double T = 1.0 + 4.0 * rng.uniform();
    const TimePartition part = regular_partition(T, P);
    LatentState s;
    s.alpha.assign(P, 1.0);
    s.gamma.resize(P);
    s.beta.resize(static_cast<Eigen::Index>(P), static_cast<Eigen::Index>(L));
    for (std::size_t p = 0; p < P; ++p) {
      s.gamma[p] = 0.5 + 3.0 * rng.uniform();
      auto row = sample_dirichlet(rng, std::vector<double>(L, 2.0));
      for (std::size_t l = 0; l < L; ++l) s.beta(p, l) = row[l];
    }
    for (std::size_t l = 0; l < L; ++l)
      s.psi.push_back(comp(-2 + 4 * rng.uniform(), -2 + 4 * rng.uniform(), 0.5 + rng.uniform(), 0.2 * rng.uniform(),
                           0.5 + rng.uniform()));
    std::vector<Event> ev;
    const std::size_t n = rng.uniform_index(21);
    for (std::size_t i = 0; i < n; ++i) ev.push_back({-3 + 6 * rng.uniform(), -3 + 6 * rng.uniform(), T * rng.uniform()});
    const Catalog cat = make_catalog(ev, {-half, half, -half, half}, T);
    const ModelData data(cat, part);

    auto lambda = [&](double x, double y, double t) {
      const std::size_t p = part.period_of(t);
      return s.gamma[p] * mixture_density(s, p, x, y);
    };
    auto space = [&](double t) {
      auto row = [&](double y) {
        return gauss_kronrod<double, 61>::integrate([&](double x) { return lambda(x, y, t); }, -half, half, 12,
                                                    1e-12);
      };
      return gauss_kronrod<double, 61>::integrate(row, -half, half, 12, 1e-12);
    };
    double integral = 0.0;
    for (std::size_t p = 0; p < P; ++p)
      integral += gauss_kronrod<double, 15>::integrate(space, part.start(p), part.end(p), 3, 1e-10);
    double direct = -integral;
    for (const auto& e : cat.events) direct += std::log(lambda(e.x, e.y, e.t));
    CHECK(testing_support::close_rel(log_likelihood(s, data), direct, 1e-4));
  }
}

TEST_CASE("log posterior matches an independent term-by-term sum") {
  const Hyperparams h = small_hyper(2, 2);
  const TimePartition part({0.0, 1.0, 2.5});
  const std::vector<std::vector<Event>> by_period{{Event{0.2, 0.5, 0.3}, Event{1.5, 1.0, 0.9}},
                                                  {Event{-0.4, 2.0, 2.0}}};
  const ModelData data(by_period, part);
  LatentState s;
  s.alpha = {1.3, 0.7};
  s.beta.resize(2, 2);
  s.beta << 0.35, 0.65, 0.6, 0.4;
  s.gamma = {2.2, 0.8};
  s.psi = {comp(0.1, 0.4, 1.2, 0.3, 0.9), comp(1.8, 1.1, 0.6, -0.1, 0.7)};
  s.z = {0, 1, 0};
  CHECK(log_unnormalized_posterior(s, data, h) ==
        doctest::Approx(oracle_log_posterior(s, by_period, part, h)).epsilon(1e-10));
}

TEST_CASE("log posterior support and label symmetry") {
  const Hyperparams h = small_hyper(2, 3);
  const TimePartition part({0.0, 1.0, 2.0});
  Rng rng(5);
  std::vector<std::vector<Event>> by_period(2);
  for (int i = 0; i < 6; ++i) by_period[i % 2].push_back({rng.normal(), rng.normal(), (i % 2) + 0.5});
  const ModelData data(by_period, part);
  std::vector<std::size_t> counts{3, 3};
  for (int rep = 0; rep < 20; ++rep) {
    LatentState s = draw_prior_state(h, counts, rng);
    for (auto& a : s.alpha) a = std::max(a, 0.05);
    const double v = log_unnormalized_posterior(s, data, h);
    REQUIRE(std::isfinite(v));

    // apply a random joint relabeling
    std::vector<int> perm{0, 1, 2};
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    LatentState t = s;
    for (std::size_t l = 0; l < 3; ++l) {
      t.beta.col(perm[l]) = s.beta.col(static_cast<Eigen::Index>(l));
      t.log_beta.col(perm[l]) = s.log_beta.col(static_cast<Eigen::Index>(l));
      t.psi[static_cast<std::size_t>(perm[l])] = s.psi[l];
    }
    for (auto& z : t.z) z = perm[static_cast<std::size_t>(z)];
    CHECK(testing_support::close_rel(log_unnormalized_posterior(t, data, h), v, 1e-10));

    LatentState bad = s;
    bad.gamma[1] = 0.0;
    CHECK(log_unnormalized_posterior(bad, data, h) == kLogZero);
    bad = s;
    Eigen::Index top = 0;
    bad.log_beta.row(0).maxCoeff(&top);
    bad.log_beta(0, top) += 0.1;  // off the simplex
    bad.beta(0, top) = std::exp(bad.log_beta(0, top));
    CHECK(log_unnormalized_posterior(bad, data, h) == kLogZero);
    bad = s;
    bad.alpha[0] = -1.0;
    CHECK(log_unnormalized_posterior(bad, data, h) == kLogZero);
  }
}

TEST_CASE("NIW posterior update") {
  NIWParams prior;
  prior.mu0 = Vec2(1.0, 1.0);
  prior.eta = 0.1;
  prior.sigma0 = Mat2::Identity();
  prior.nu = 3.0;

  SUBCASE("no data returns the prior") {
    const NIWParams post = niw_posterior(prior, 0, Vec2::Zero(), Mat2::Zero());
    CHECK(post.mu0 == prior.mu0);
    CHECK(post.eta == prior.eta);
    CHECK(post.nu == prior.nu);
    CHECK(post.sigma0 == prior.sigma0);
  }
  SUBCASE("one observation at the prior mean") {
    const NIWParams post = niw_posterior(prior, 1, prior.mu0, Mat2::Zero());
    CHECK(post.mu0.isApprox(prior.mu0));
    CHECK(post.eta == doctest::Approx(1.1));
    CHECK(post.nu == 4.0);
    CHECK(post.sigma0.isApprox(prior.sigma0));
  }
  SUBCASE("two observations straddling the prior mean") {
    // ybar = (1,1), S = [[2,2],[2,2]]
    Mat2 scatter;
    scatter << 2, 2, 2, 2;
    const NIWParams post = niw_posterior(prior, 2, Vec2(1, 1), scatter);
    CHECK(post.mu0(0) == doctest::Approx(1.0));
    CHECK(post.mu0(1) == doctest::Approx(1.0));
    CHECK(post.eta == doctest::Approx(2.1));
    CHECK(post.nu == 5.0);
    CHECK(post.sigma0(0, 0) == doctest::Approx(3.0));
    CHECK(post.sigma0(0, 1) == doctest::Approx(2.0));
    CHECK(post.sigma0(1, 0) == doctest::Approx(2.0));
    CHECK(post.sigma0(1, 1) == doctest::Approx(3.0));
  }
}

TEST_CASE("truncated NIW draws respect the domain") {
  NIWParams niw;
  niw.mu0 = Vec2(-102, 17);
  niw.eta = 0.01;
  niw.sigma0 = 2.0 * Mat2::Identity();
  niw.nu = 6.0;
  const SpatialWindow dom{-105.5, -96.5, 15.0, 19.5};
  Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto c = sample_niw(rng, niw, dom);
    CHECK(dom.contains(c.mean(0), c.mean(1)));
    CHECK(is_spd2(c.cov));
  }
  const SpatialWindow far{1000, 1001, 1000, 1001};
  CHECK_THROWS_AS(sample_niw(rng, niw, far, 50), NumericError);
}

TEST_CASE("inverse Wishart moments") {
  // IW(2I, 6): E[Sigma_11] = 2 / (6 - 3) = 2/3, Var = 2 * 2^2 / ((6-3)^2 (6-5)) = 8/9
  Rng rng(31);
  std::vector<double> v;
  for (int i = 0; i < 200000; ++i) v.push_back(sample_inverse_wishart2(rng, 2.0 * Mat2::Identity(), 6.0)(0, 0));
  const double m = testing_support::mean(v);
  CHECK(std::abs(m - 2.0 / 3.0) < 4.0 * std::sqrt(8.0 / 9.0 / 200000.0));
  // the variance needs nu > 7 for a finite fourth moment: IW(2I, 12) has Var = 8 / (81 * 7)
  std::vector<double> w;
  for (int i = 0; i < 200000; ++i) w.push_back(sample_inverse_wishart2(rng, 2.0 * Mat2::Identity(), 12.0)(0, 0));
  CHECK(testing_support::variance(w) == doctest::Approx(8.0 / 567.0).epsilon(0.05));
}

TEST_CASE("ancestral prior draws") {
  Rng rng(17);
  SUBCASE("one component gives unit beta rows") {
    Hyperparams h = small_hyper(3, 1);
    std::vector<std::size_t> counts{2, 0, 1};
    const LatentState s = draw_prior_state(h, counts, rng);
    for (Eigen::Index p = 0; p < 3; ++p) CHECK(s.beta(p, 0) == 1.0);
    CHECK(s.z == std::vector<int>{0, 0, 0});
  }
  SUBCASE("gamma prior mean for the synthetic hyperparameters") {
    Hyperparams h = small_hyper(1, 2);
    h.gamma0 = 70.0;
    h.k = 0.1;
    h.alpha0 = 1.0;
    std::vector<std::size_t> counts{0};
    std::vector<double> g, a;
    for (int i = 0; i < 100000; ++i) {
      const LatentState s = draw_prior_state(h, counts, rng);
      g.push_back(s.gamma[0]);
      a.push_back(s.alpha[0]);
    }
    // Gamma(7, 0.1): mean 70, sd sqrt(700)
    CHECK(std::abs(testing_support::mean(g) - 70.0) < 3.0 * std::sqrt(700.0 / 100000.0));
    CHECK(std::abs(testing_support::mean(a) - 1.0) < 3.0 * std::sqrt(1.0 / 100000.0));
  }
  SUBCASE("invariants hold") {
    Hyperparams h = small_hyper(4, 5);
    std::vector<std::size_t> counts{3, 1, 0, 7};
    for (int i = 0; i < 200; ++i) {
      const LatentState s = draw_prior_state(h, counts, rng);
      CHECK_NOTHROW(s.check_invariants());
      CHECK(s.z.size() == 11);
    }
  }
}

TEST_CASE("sufficient statistics: incremental equals full recompute") {
  Rng rng(23);
  const TimePartition part({0.0, 1.0, 2.0, 3.0});
  std::vector<std::vector<Event>> by_period(3);
  for (int i = 0; i < 60; ++i) by_period[static_cast<std::size_t>(i % 3)].push_back({3 * rng.normal(), rng.normal(), (i % 3) + 0.5});
  const ModelData data(by_period, part);
  const std::size_t L = 4;
  std::vector<int> z(data.size());
  for (auto& l : z) l = static_cast<int>(rng.uniform_index(L));
  SufficientStats st = SufficientStats::compute(data, z, L);
  for (int step = 0; step < 500; ++step) {
    const std::size_t i = rng.uniform_index(data.size());
    const int old = z[i];
    z[i] = static_cast<int>(rng.uniform_index(L));
    st.reassign(data, z, i, old);
    if (step % 50 == 0) CHECK(st == SufficientStats::compute(data, z, L));
  }
  CHECK(st == SufficientStats::compute(data, z, L));
  std::int64_t total = 0;
  for (auto m : st.m) total += m;
  CHECK(total == static_cast<std::int64_t>(data.size()));
  for (std::size_t p = 0; p < 3; ++p) {
    std::int64_t row = 0;
    for (auto m : st.m_pl[p]) row += m;
    CHECK(row == st.n_p[p]);
  }
}

TEST_CASE("leaked mass") {
  LatentState s = single_component_state(1.0);
  CHECK(leaked_mass(s, 0, {-50, 50, -50, 50}) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(leaked_mass(s, 0, {0, 50, -50, 50}) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(leaked_mass(s, 0, {0, 50, 0, 50}) == doctest::Approx(0.75).epsilon(1e-9));
}

TEST_CASE("state invariants") {
  LatentState s = single_component_state(1.0);
  s.z = {0};
  CHECK_NOTHROW(s.check_invariants());
  s.beta(0, 0) = 0.9;
  CHECK_THROWS_AS(s.check_invariants(), NumericError);
  s.beta(0, 0) = 1.0;
  s.z = {1};
  CHECK_THROWS_AS(s.check_invariants(), NumericError);
}
