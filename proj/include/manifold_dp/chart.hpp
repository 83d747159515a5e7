#pragma once

#include <vector>

#include "manifold_dp/manifold.hpp"

namespace manifold_dp {

// Normal-coordinate chart phi(x) = frame coordinates of log_base(x), with
// inverse phi^{-1}(theta) = exp_base(sum theta_r f_r).
class Chart {
 public:
  explicit Chart(ManifoldPoint base);

  const ManifoldPoint& base() const { return frame_.base(); }
  const TangentFrame& frame() const { return frame_; }
  int dim() const { return frame_.dim(); }

  Eigen::VectorXd to_chart(const ManifoldPoint& x) const;
  ManifoldPoint from_chart(const Eigen::VectorXd& theta) const;

  // Throws InvalidInput outside the injectivity domain (|theta| >= pi on the
  // sphere).
  void check_domain(const Eigen::VectorXd& theta) const;

 private:
  TangentFrame frame_;
};

// phi^{-1} and its partial derivatives at theta. The columns J_r are tangent
// at the image point q.
class ChartLinearization {
 public:
  ChartLinearization(const Chart& chart, const Eigen::VectorXd& theta);

  const ManifoldPoint& point() const { return point_; }
  const std::vector<Eigen::MatrixXd>& partials() const { return partials_; }

  // Gradient in theta of rho^2(x, phi^{-1}(theta)):
  // Psi_r = -2 <log_q x, J_r>_q.
  Eigen::VectorXd psi(const ManifoldPoint& x) const;

 private:
  ManifoldPoint point_;
  std::vector<Eigen::MatrixXd> partials_;
  // SPD: q^{-1/2} J_r q^{-1/2}, so <log_q x, J_r>_q becomes a Frobenius
  // product with Log(q^{-1/2} x q^{-1/2}).
  std::vector<Eigen::MatrixXd> whitened_;
};

// Gradient in the chart of theta -> rho^2(x, phi^{-1}(theta)).
Eigen::VectorXd psi_gradient(const ManifoldPoint& x, const Eigen::VectorXd& theta,
                             const Chart& chart);

// (rho_phi)^2(u, theta) = rho^2(phi^{-1}(u), phi^{-1}(theta)).
double chart_squared_distance(const Eigen::VectorXd& u,
                              const Eigen::VectorXd& theta, const Chart& chart);

// Central finite-difference Jacobians of psi in theta, one per point, from 2d
// shared linearizations.
struct HessianOptions {
  double step = 1e-5;
  bool symmetrize = true;
};
std::vector<Eigen::MatrixXd> psi_hessians(const std::vector<ManifoldPoint>& xs,
                                          const Eigen::VectorXd& theta,
                                          const Chart& chart,
                                          HessianOptions options = {});
Eigen::MatrixXd psi_hessian(const ManifoldPoint& x, const Eigen::VectorXd& theta,
                            const Chart& chart, HessianOptions options = {});

}  // namespace manifold_dp
