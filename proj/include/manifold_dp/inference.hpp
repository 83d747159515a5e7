#pragma once

#include <optional>
#include <utility>

#include "manifold_dp/chart.hpp"
#include "manifold_dp/frechet.hpp"
#include "manifold_dp/privacy.hpp"
#include "manifold_dp/rng.hpp"

namespace manifold_dp {

enum class MeanMechanism { kRiemannianGaussian, kExpWrappedGaussian };
const char* to_string(MeanMechanism m);

// Chart used for inference about the mean: normal coordinates at the released
// mean on the sphere, at the declared center on SPD.
Chart inference_chart(const Dataset& data, const ManifoldPoint& mean_estimate);

// ---------------------------------------------------------------------------
// Individual releases. Each mu is the share spent on that release.

struct DpMeanRelease {
  ManifoldPoint mean_dp;
  double sigma;
  MeanMechanism mechanism;
  SensitivityRecord sensitivity;
};

DpMeanRelease dp_frechet_mean(const Dataset& data, double mu, Rng& rng);
DpMeanRelease dp_frechet_mean(const Dataset& data, const FrechetSolution& solution,
                              double mu, Rng& rng);

// Fréchet function at `mean`, with each distance capped at 2r so the
// 4r^2/n sensitivity holds whatever point is supplied.
double bounded_frechet_function(const Dataset& data, const ManifoldPoint& mean);

struct DpVarianceRelease {
  double variance_dp;
  double sigma;
  SensitivityRecord sensitivity;
};

DpVarianceRelease dp_frechet_variance(const Dataset& data,
                                      const ManifoldPoint& mean_dp, double mu,
                                      Rng& rng);

struct SigmaF2Release {
  double value;     // after flooring
  double raw;       // before flooring
  bool floored;
  double sigma;
  SensitivityRecord sensitivity;
};

inline constexpr double kSigmaF2Floor = 1e-12;

// (1/n) sum rho^4(X_i, mean) - variance^2, distances capped at 2r.
double plugin_sigmaF2(const Dataset& data, const ManifoldPoint& mean,
                      double variance);
SigmaF2Release dp_sigmaF2(const Dataset& data, const ManifoldPoint& mean_dp,
                          double variance_dp, double mu, Rng& rng);

struct CovarianceOptions {
  // Frobenius cap on each Hessian H_i; <= 0 selects default_hessian_bound.
  double hessian_bound = 0.0;
  // Cap on |log_{mean} X_i|; <= 0 selects 2r.
  double log_bound = 0.0;
  double fd_step = 1e-5;
};

inline constexpr double kLambdaEigenFloor = 1e-8;

struct LimitingCovariance {
  Eigen::VectorXd mean_chart;  // chart coordinates of the mean estimate
  Eigen::MatrixXd lambda;      // repaired
  Eigen::MatrixXd c;           // repaired
  Eigen::MatrixXd gamma;
  int lambda_floored = 0;      // eigenvalues raised to the floor
  int c_clipped = 0;           // negative eigenvalues set to zero
  std::optional<CovarianceSensitivities> sensitivities;  // DP only
  double sigma_lambda = 0.0;
  double sigma_c = 0.0;
};

// Noiseless plug-in estimates of Lambda and C at `mean` in `chart`, and
// Gamma = (1/n) Lambda^{-1} C Lambda^{-1} + extra_variance I.
LimitingCovariance limiting_covariance(const Dataset& data,
                                       const ManifoldPoint& mean,
                                       const Chart& chart,
                                       double extra_variance = 0.0,
                                       const CovarianceOptions& options = {});

// DP version: vecd Gaussian noise with scales Delta_Lambda / mu and
// Delta_C / mu, eigenvalue repair, and sigma_eta^2 I added to Gamma. Throws
// NumericalFailure when Lambda has no eigenvalue above the floor before
// repair.
LimitingCovariance dp_limiting_covariance(const Dataset& data,
                                          const ManifoldPoint& mean_dp,
                                          const Chart& chart, double sigma_eta,
                                          double mu, Rng& rng,
                                          const CovarianceOptions& options = {});

// ---------------------------------------------------------------------------
// Regions and intervals

class ConfidenceRegion {
 public:
  ConfidenceRegion(Chart chart, Eigen::VectorXd center, Eigen::MatrixXd gamma,
                   double alpha);

  const Chart& chart() const { return chart_; }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& gamma() const { return gamma_; }
  double threshold() const { return threshold_; }
  double alpha() const { return alpha_; }

  // (phi(center) - phi(v))^T Gamma^{-1} (phi(center) - phi(v)).
  double quadratic_form(const ManifoldPoint& v) const;
  double quadratic_form(const Eigen::VectorXd& chart_point) const;
  bool contains(const ManifoldPoint& v) const;
  // sqrt(det Gamma).
  double volume_factor() const;

 private:
  Chart chart_;
  Eigen::VectorXd center_;
  Eigen::MatrixXd gamma_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double threshold_;
  double alpha_;
};

struct Interval {
  double lower;
  double upper;
  bool contains(double v) const { return lower <= v && v <= upper; }
};

// center +/- z_{1 - alpha/2} sqrt(sigmaF2 / n + noise_sigma^2).
Interval variance_confidence_interval(double center, double sigmaF2, int n,
                                      double noise_sigma, double alpha);

// ---------------------------------------------------------------------------
// Reports and the end-to-end pipeline

struct DpMeanReport {
  ManifoldPoint mean_dp;
  double sigma_n_eta;
  MeanMechanism mechanism;
  ManifoldPoint chart_base;
  LimitingCovariance covariance;
  ConfidenceRegion region;
  PrivacyBudget budget;
};

struct DpVarianceReport {
  double variance_dp;
  double sigma_n_V;
  SigmaF2Release sigmaF2;
  Interval interval;
  PrivacyBudget budget;
};

struct NonDpReport {
  FrechetSolution solution;
  LimitingCovariance covariance;
  ConfidenceRegion region;
  double sigmaF2;
  Interval interval;
};

ConfidenceRegion mean_confidence_region(const DpMeanReport& report, double alpha);

NonDpReport nondp_inference(const Dataset& data, const FrechetSolution& solution,
                            double alpha, const CovarianceOptions& options = {});

struct PipelineResult {
  DpMeanReport mean;
  DpVarianceReport variance;
};

// Splits mu_total as mu / sqrt(3) for each of (mean, Lambda, C) and for each
// of (mean, variance, sigma_F^2); the mean release is shared.
PipelineResult run_full_pipeline(const Dataset& data, double mu_total,
                                 double alpha, Rng& rng,
                                 const CovarianceOptions& options = {});
PipelineResult run_full_pipeline(const Dataset& data,
                                 const FrechetSolution& solution,
                                 double mu_total, double alpha, Rng& rng,
                                 const CovarianceOptions& options = {});

}  // namespace manifold_dp
