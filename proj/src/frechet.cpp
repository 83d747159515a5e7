#include "manifold_dp/frechet.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "manifold_dp/errors.hpp"

namespace manifold_dp {
namespace {

constexpr double kBallSlack = 1e-9;

}  // namespace

Dataset::Dataset(std::vector<ManifoldPoint> points, ManifoldPoint center,
                 double radius)
    : points_(std::move(points)), center_(std::move(center)), radius_(radius) {
  if (points_.empty()) throw InvalidInput("dataset must contain at least one point");
  if (!(radius_ > 0.0) || !std::isfinite(radius_)) {
    throw InvalidInput("dataset radius must be positive and finite");
  }
  if (center_.kind().is_sphere() && radius_ >= M_PI / 4.0) {
    throw InvalidInput("sphere datasets require radius < pi/4");
  }
  for (std::size_t i = 0; i < points_.size(); ++i) {
    require_same_kind(center_.kind(), points_[i].kind(), "Dataset");
    const double rho = distance(center_, points_[i]);
    if (rho > radius_ + kBallSlack) {
      std::ostringstream msg;
      msg << "point " << i + 1 << " lies at distance " << rho
          << " from the center, outside the ball of radius " << radius_;
      throw InvalidInput(msg.str());
    }
  }
}

double frechet_function(const Dataset& data, const ManifoldPoint& p) {
  require_same_kind(data.kind(), p.kind(), "frechet_function");
  double sum = 0.0;
  for (const ManifoldPoint& x : data.points()) {
    const double rho = distance(p, x);
    sum += rho * rho;
  }
  return sum / data.size();
}

Eigen::MatrixXd mean_log(const Dataset& data, const ManifoldPoint& p) {
  Eigen::MatrixXd g =
      Eigen::MatrixXd::Zero(p.coords().rows(), p.coords().cols());
  for (const ManifoldPoint& x : data.points()) g += detail::log_ambient(p, x);
  return g / data.size();
}

FrechetSolution karcher_mean(const std::vector<ManifoldPoint>& points,
                             const ManifoldPoint& start, FrechetOptions options) {
  if (points.empty()) throw InvalidInput("karcher_mean needs at least one point");
  const double n = static_cast<double>(points.size());
  ManifoldPoint eta = start;
  double grad_norm = 0.0;
  for (int iter = 0; iter <= options.max_iter; ++iter) {
    Eigen::MatrixXd g =
        Eigen::MatrixXd::Zero(eta.coords().rows(), eta.coords().cols());
    for (const ManifoldPoint& x : points) g += detail::log_ambient(eta, x);
    g /= n;
    grad_norm = metric_norm(eta, g);
    if (grad_norm <= options.tol) {
      double variance = 0.0;
      for (const ManifoldPoint& x : points) {
        const double rho = distance(eta, x);
        variance += rho * rho;
      }
      return {std::move(eta), variance / n, iter, grad_norm};
    }
    if (iter == options.max_iter) break;
    eta = exp_map(eta, make_tangent_unchecked(eta, g));
  }
  std::ostringstream msg;
  msg << "frechet_mean did not converge in " << options.max_iter
      << " iterations (last gradient norm " << grad_norm << ")";
  throw NonConvergence(msg.str(), grad_norm);
}

FrechetSolution frechet_mean(const Dataset& data, FrechetOptions options) {
  return karcher_mean(data.points(), data.center(), options);
}

double frechet_variance(const Dataset& data, const ManifoldPoint& mean) {
  return frechet_function(data, mean);
}

}  // namespace manifold_dp
