#include "bgdp/gaussian.hpp"

#include <array>
#include <cmath>
#include <limits>

#include "bgdp/errors.hpp"

namespace bgdp {

Mat2 inverse2(const Mat2& m) {
  const double d = det2(m);
  if (!(d != 0.0) || !std::isfinite(d)) throw NumericError("singular 2x2 matrix");
  Mat2 inv;
  inv << m(1, 1) / d, -m(0, 1) / d, -m(1, 0) / d, m(0, 0) / d;
  return inv;
}

bool is_spd2(const Mat2& m) {
  if (!m.allFinite()) return false;
  if (std::abs(m(0, 1) - m(1, 0)) > 1e-12 * (std::abs(m(0, 0)) + std::abs(m(1, 1))))
    return false;
  return m(0, 0) > 0.0 && det2(m) > 0.0;
}

double GaussianComponent::log_density(double x, double y) const {
  const double d = det2(cov);
  const double dx = x - mean(0), dy = y - mean(1);
  // (dx, dy) cov^{-1} (dx, dy)^T with the adjugate form of the inverse
  const double q = (cov(1, 1) * dx * dx - 2.0 * cov(0, 1) * dx * dy + cov(0, 0) * dy * dy) / d;
  return -kLog2Pi - 0.5 * std::log(d) - 0.5 * q;
}

double GaussianComponent::density(double x, double y) const { return std::exp(log_density(x, y)); }

double GaussianComponent::peak_density() const {
  return 1.0 / (2.0 * M_PI * std::sqrt(det2(cov)));
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double GaussianComponent::mass_in_box(double x_min, double x_max, double y_min,
                                      double y_max) const {
  // Integrate over x the marginal density times P(y in box | x).
  const double sx = std::sqrt(cov(0, 0));
  const double rho_cov = cov(0, 1);
  const double cond_var = cov(1, 1) - rho_cov * rho_cov / cov(0, 0);
  const double cond_sd = std::sqrt(std::max(cond_var, 0.0));
  // Clip the outer range to +-10 sd, beyond which the marginal is negligible.
  const double a = std::max(x_min, mean(0) - 10.0 * sx);
  const double b = std::min(x_max, mean(0) + 10.0 * sx);
  if (!(a < b)) return 0.0;
  static constexpr std::array<double, 10> nodes = {
      -0.9739065285171717, -0.8650633666889845, -0.6794095682990244, -0.4333953941292472,
      -0.1488743389816312, 0.1488743389816312,  0.4333953941292472,  0.6794095682990244,
      0.8650633666889845,  0.9739065285171717};
  static constexpr std::array<double, 10> weights = {
      0.0666713443086881, 0.1494513491505806, 0.2190863625159820, 0.2692667193099963,
      0.2955242247147529, 0.2955242247147529, 0.2692667193099963, 0.2190863625159820,
      0.1494513491505806, 0.0666713443086881};
  constexpr int kPanels = 64;
  const double h = (b - a) / kPanels;
  double total = 0.0;
  for (int k = 0; k < kPanels; ++k) {
    const double lo = a + k * h;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const double x = lo + 0.5 * h * (nodes[i] + 1.0);
      const double zx = (x - mean(0)) / sx;
      const double fx = std::exp(-0.5 * zx * zx) / (sx * std::sqrt(2.0 * M_PI));
      const double cm = mean(1) + rho_cov / cov(0, 0) * (x - mean(0));
      double py;
      if (cond_sd > 0.0) {
        py = normal_cdf((y_max - cm) / cond_sd) - normal_cdf((y_min - cm) / cond_sd);
      } else {
        py = (cm >= y_min && cm <= y_max) ? 1.0 : 0.0;
      }
      total += 0.5 * h * weights[i] * fx * py;
    }
  }
  return total;
}

GaussianKernel::GaussianKernel(const GaussianComponent& c) {
  const double d = det2(c.cov);
  if (!(d > 0.0) || !std::isfinite(d)) throw NumericError("component covariance not SPD");
  mx_ = c.mean(0);
  my_ = c.mean(1);
  p00_ = c.cov(1, 1) / d;
  p11_ = c.cov(0, 0) / d;
  p01_ = -c.cov(0, 1) / d;
  log_norm_ = -kLog2Pi - 0.5 * std::log(d);
}

}  // namespace bgdp
