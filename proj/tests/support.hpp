#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "manifold_dp/linalg.hpp"
#include "manifold_dp/manifold.hpp"
#include "manifold_dp/rng.hpp"

namespace testing_support {

using manifold_dp::ManifoldKind;
using manifold_dp::ManifoldPoint;
using manifold_dp::Rng;

inline ManifoldPoint random_sphere_point(int ambient, Rng& rng) {
  return ManifoldPoint::projected(ManifoldKind::sphere(ambient), rng.unit_vector(ambient));
}

inline Eigen::MatrixXd random_symmetric(int m, double scale, Rng& rng) {
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = rng.normal();
  return scale * 0.5 * (a + a.transpose());
}

inline ManifoldPoint random_spd_point(int m, double scale, Rng& rng) {
  return ManifoldPoint::projected(
      ManifoldKind::spd(m), manifold_dp::linalg::sym_exp(random_symmetric(m, scale, rng)));
}

// Point at geodesic distance `radius` * U from p in a uniform direction.
inline ManifoldPoint random_point_near(const ManifoldPoint& p, double radius, Rng& rng) {
  const manifold_dp::TangentFrame frame = manifold_dp::tangent_frame(p);
  const Eigen::VectorXd dir = rng.unit_vector(frame.dim());
  return manifold_dp::exp_map(p, frame.vector(radius * rng.uniform() * dir));
}

inline Eigen::MatrixXd random_rotation(int n, Rng& rng) {
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) *= -1.0;
  return q;
}

inline Eigen::MatrixXd random_invertible(int n, Rng& rng) {
  Eigen::MatrixXd a(n, n);
  for (;;) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
    if (std::abs(a.determinant()) > 0.2) return a;
  }
}

// CDF of the radial law of the sphere Riemannian Gaussian,
// density proportional to exp(-t^2 / (2 sigma^2)) sin^{d-1} t on [0, pi],
// tabulated by the trapezoid rule and interpolated linearly.
class RgRadialCdf {
 public:
  RgRadialCdf(int d, double sigma, int cells = 400000)
      : step_(M_PI / cells), cdf_(static_cast<std::size_t>(cells) + 1, 0.0) {
    auto f = [&](double t) {
      return std::exp(-t * t / (2 * sigma * sigma)) * std::pow(std::sin(t), d - 1);
    };
    double prev = f(0.0);
    for (int i = 1; i <= cells; ++i) {
      const double cur = f(i * step_);
      cdf_[i] = cdf_[i - 1] + 0.5 * step_ * (prev + cur);
      prev = cur;
    }
    const double total = cdf_.back();
    for (double& c : cdf_) c /= total;
  }

  double operator()(double t) const {
    if (t <= 0.0) return 0.0;
    if (t >= M_PI) return 1.0;
    const double x = t / step_;
    const std::size_t i = static_cast<std::size_t>(x);
    if (i + 1 >= cdf_.size()) return 1.0;
    const double w = x - static_cast<double>(i);
    return (1.0 - w) * cdf_[i] + w * cdf_[i + 1];
  }

 private:
  double step_;
  std::vector<double> cdf_;
};

}  // namespace testing_support
