#include "manifold_dp/chart.hpp"

#include <cmath>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/linalg.hpp"

namespace manifold_dp {

Chart::Chart(ManifoldPoint base) : frame_(tangent_frame(base)) {}

Eigen::VectorXd Chart::to_chart(const ManifoldPoint& x) const {
  return frame_.coordinates(detail::log_ambient(base(), x));
}

void Chart::check_domain(const Eigen::VectorXd& theta) const {
  if (theta.size() != dim()) {
    throw InvalidInput("chart coordinates have the wrong dimension");
  }
  if (!theta.allFinite()) throw InvalidInput("chart coordinates are not finite");
  if (base().kind().is_sphere() && theta.norm() >= M_PI) {
    throw InvalidInput("chart point outside the injectivity domain (|theta| >= pi)");
  }
}

ManifoldPoint Chart::from_chart(const Eigen::VectorXd& theta) const {
  check_domain(theta);
  return exp_map(base(), make_tangent_unchecked(base(), frame_.ambient(theta)));
}

ChartLinearization::ChartLinearization(const Chart& chart,
                                       const Eigen::VectorXd& theta)
    : point_(chart.from_chart(theta)) {
  const ManifoldPoint& b = chart.base();
  const auto& basis = chart.frame().basis();
  const Eigen::MatrixXd v = chart.frame().ambient(theta);
  partials_.reserve(basis.size());
  if (b.kind().is_sphere()) {
    for (const Eigen::MatrixXd& f : basis) {
      partials_.emplace_back(
          detail::sphere_exp_derivative(b.vector(), v.col(0), f.col(0)));
    }
    return;
  }
  const linalg::SymmetricEigen eig =
      linalg::eigen_symmetric(linalg::symmetrize(b.inv_sqrt() * v * b.inv_sqrt()));
  whitened_.reserve(basis.size());
  for (const Eigen::MatrixXd& f : basis) {
    const Eigen::MatrixXd h = linalg::symmetrize(b.inv_sqrt() * f * b.inv_sqrt());
    const Eigen::MatrixXd j =
        linalg::symmetrize(b.sqrt() * linalg::exp_derivative(eig, h) * b.sqrt());
    whitened_.push_back(
        linalg::symmetrize(point_.inv_sqrt() * j * point_.inv_sqrt()));
    partials_.push_back(j);
  }
}

Eigen::VectorXd ChartLinearization::psi(const ManifoldPoint& x) const {
  require_same_kind(point_.kind(), x.kind(), "psi_gradient");
  const int d = static_cast<int>(partials_.size());
  Eigen::VectorXd out(d);
  if (point_.kind().is_sphere()) {
    const Eigen::VectorXd lg = detail::log_ambient(point_, x).col(0);
    for (int r = 0; r < d; ++r) out(r) = -2.0 * lg.dot(partials_[r].col(0));
    return out;
  }
  const Eigen::MatrixXd lg = linalg::sym_log(
      linalg::symmetrize(point_.inv_sqrt() * x.coords() * point_.inv_sqrt()));
  for (int r = 0; r < d; ++r) out(r) = -2.0 * lg.cwiseProduct(whitened_[r]).sum();
  return out;
}

Eigen::VectorXd psi_gradient(const ManifoldPoint& x, const Eigen::VectorXd& theta,
                             const Chart& chart) {
  return ChartLinearization(chart, theta).psi(x);
}

double chart_squared_distance(const Eigen::VectorXd& u,
                              const Eigen::VectorXd& theta, const Chart& chart) {
  const double rho = distance(chart.from_chart(u), chart.from_chart(theta));
  return rho * rho;
}

std::vector<Eigen::MatrixXd> psi_hessians(const std::vector<ManifoldPoint>& xs,
                                          const Eigen::VectorXd& theta,
                                          const Chart& chart,
                                          HessianOptions options) {
  if (!(options.step > 0.0)) throw InvalidInput("finite-difference step must be positive");
  const int d = chart.dim();
  std::vector<ChartLinearization> plus, minus;
  plus.reserve(d);
  minus.reserve(d);
  for (int r = 0; r < d; ++r) {
    const Eigen::VectorXd e = Eigen::VectorXd::Unit(d, r) * options.step;
    plus.emplace_back(chart, theta + e);
    minus.emplace_back(chart, theta - e);
  }
  std::vector<Eigen::MatrixXd> out;
  out.reserve(xs.size());
  for (const ManifoldPoint& x : xs) {
    Eigen::MatrixXd h(d, d);
    for (int r = 0; r < d; ++r) {
      h.col(r) = (plus[r].psi(x) - minus[r].psi(x)) / (2.0 * options.step);
    }
    out.push_back(options.symmetrize ? linalg::symmetrize(h) : h);
  }
  return out;
}

Eigen::MatrixXd psi_hessian(const ManifoldPoint& x, const Eigen::VectorXd& theta,
                            const Chart& chart, HessianOptions options) {
  return psi_hessians({x}, theta, chart, options).front();
}

}  // namespace manifold_dp
