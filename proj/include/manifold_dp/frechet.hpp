#pragma once

#include <vector>

#include "manifold_dp/manifold.hpp"

namespace manifold_dp {

// Sample X_1..X_n supported in the closed geodesic ball B(center, radius).
// The constructor rejects points outside the ball (1e-9 slack) and, on the
// sphere, radii >= pi/4; truncation is an explicit ingestion step.
class Dataset {
 public:
  Dataset(std::vector<ManifoldPoint> points, ManifoldPoint center,
          double radius);

  const ManifoldKind& kind() const { return center_.kind(); }
  const std::vector<ManifoldPoint>& points() const { return points_; }
  const ManifoldPoint& center() const { return center_; }
  double radius() const { return radius_; }
  int size() const { return static_cast<int>(points_.size()); }

 private:
  std::vector<ManifoldPoint> points_;
  ManifoldPoint center_;
  double radius_;
};

struct FrechetSolution {
  ManifoldPoint mean;
  double variance;
  int iterations;
  double final_gradient_norm;
};

struct FrechetOptions {
  double tol = 1e-10;
  int max_iter = 1000;
};

// (1/n) sum rho^2(p, X_i).
double frechet_function(const Dataset& data, const ManifoldPoint& p);

// Karcher iteration eta <- exp_eta((1/n) sum log_eta X_i) from the declared
// center, stopping once the mean log vector has metric norm <= tol. Throws
// NonConvergence after max_iter steps.
FrechetSolution frechet_mean(const Dataset& data, FrechetOptions options = {});

// The same iteration on an arbitrary point set from an arbitrary start, with
// no support check. Uniqueness is the caller's concern.
FrechetSolution karcher_mean(const std::vector<ManifoldPoint>& points,
                             const ManifoldPoint& start,
                             FrechetOptions options = {});

double frechet_variance(const Dataset& data, const ManifoldPoint& mean);

// (1/n) sum log_p X_i, ambient representation at p.
Eigen::MatrixXd mean_log(const Dataset& data, const ManifoldPoint& p);

}  // namespace manifold_dp
