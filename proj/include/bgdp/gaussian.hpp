#pragma once

#include <Eigen/Core>

namespace bgdp {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Closed-form 2x2 helpers. Inputs are assumed symmetric.
inline double det2(const Mat2& m) { return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0); }
Mat2 inverse2(const Mat2& m);
bool is_spd2(const Mat2& m);
// Average with the transpose to remove asymmetric rounding drift.
inline Mat2 symmetrize(const Mat2& m) { return 0.5 * (m + m.transpose()); }

// Bivariate normal density with an SPD covariance.
struct GaussianComponent {
  Vec2 mean = Vec2::Zero();
  Mat2 cov = Mat2::Identity();

  double log_density(double x, double y) const;
  double density(double x, double y) const;
  // Density at the mode, 1 / (2 pi sqrt|cov|).
  double peak_density() const;
  // Probability mass of the component inside an axis-aligned box,
  // computed by one-dimensional Gauss-Legendre quadrature on the
  // conditional normal. Used for leakage diagnostics.
  double mass_in_box(double x_min, double x_max, double y_min, double y_max) const;

  bool operator==(const GaussianComponent& o) const { return mean == o.mean && cov == o.cov; }
};

// Precomputed precision and normalizer for repeated density evaluation.
class GaussianKernel {
 public:
  GaussianKernel() = default;
  explicit GaussianKernel(const GaussianComponent& c);

  double log_density(double x, double y) const {
    const double dx = x - mx_, dy = y - my_;
    return log_norm_ - 0.5 * (p00_ * dx * dx + 2.0 * p01_ * dx * dy + p11_ * dy * dy);
  }

 private:
  double mx_ = 0, my_ = 0;
  double p00_ = 1, p01_ = 0, p11_ = 1;
  double log_norm_ = -kLog2Pi;
};

}  // namespace bgdp
