#include "manifold_dp/inference.hpp"

#include <algorithm>
#include <cmath>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/linalg.hpp"
#include "manifold_dp/stats.hpp"

namespace manifold_dp {
namespace {

void require_mu(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) {
    throw InvalidInput("privacy parameter mu must be positive and finite");
  }
}

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
}

Eigen::MatrixXd clip_norm(const Eigen::MatrixXd& a, double bound, double norm) {
  return norm > bound ? Eigen::MatrixXd(a * (bound / norm)) : a;
}

Eigen::MatrixXd symmetric_noise(int d, double sigma, Rng& rng) {
  return linalg::vecd_inv(sigma * rng.normal_vector(linalg::vecd_size(d)));
}

Eigen::MatrixXd assemble_gamma(const Eigen::MatrixXd& lambda,
                               const Eigen::MatrixXd& c, int n,
                               double extra_variance) {
  const Eigen::MatrixXd inv = lambda.ldlt().solve(
      Eigen::MatrixXd::Identity(lambda.rows(), lambda.cols()));
  Eigen::MatrixXd gamma = inv * c * inv / static_cast<double>(n);
  gamma.diagonal().array() += extra_variance;
  return linalg::symmetrize(gamma);
}

struct RawCovariance {
  Eigen::VectorXd theta;
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd c;
  double hessian_bound;
  double log_bound;
};

RawCovariance raw_covariance(const Dataset& data, const ManifoldPoint& mean,
                             const Chart& chart, const CovarianceOptions& options) {
  require_same_kind(data.kind(), mean.kind(), "limiting_covariance");
  require_same_kind(data.kind(), chart.base().kind(), "limiting_covariance");
  const int d = chart.dim();
  const int n = data.size();
  RawCovariance out;
  out.hessian_bound = options.hessian_bound > 0.0
                          ? options.hessian_bound
                          : default_hessian_bound(data.kind(), data.radius());
  out.log_bound = options.log_bound > 0.0 ? options.log_bound : 2.0 * data.radius();
  out.theta = chart.to_chart(mean);

  out.lambda = Eigen::MatrixXd::Zero(d, d);
  for (const Eigen::MatrixXd& h :
       psi_hessians(data.points(), out.theta, chart, {options.fd_step, true})) {
    out.lambda += clip_norm(h, out.hessian_bound, h.norm());
  }
  out.lambda /= n;

  const TangentFrame frame = tangent_frame(mean);
  Eigen::MatrixXd z(d, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd lg = detail::log_ambient(mean, data.points()[i]);
    z.col(i) = frame.coordinates(
        clip_norm(lg, out.log_bound, metric_norm(mean, lg)));
  }
  const Eigen::VectorXd zbar = z.rowwise().mean();
  const Eigen::MatrixXd centered = z.colwise() - zbar;
  const Eigen::MatrixXd cov = centered * centered.transpose() / n;

  const ChartLinearization lin(chart, out.theta);
  Eigen::MatrixXd l(d, d);
  for (int k = 0; k < d; ++k) {
    for (int r = 0; r < d; ++r) {
      l(k, r) = metric_inner(mean, frame.basis()[k], lin.partials()[r]);
    }
  }
  out.c = linalg::symmetrize(4.0 * l.transpose() * cov * l);
  return out;
}

}  // namespace

const char* to_string(MeanMechanism m) {
  return m == MeanMechanism::kRiemannianGaussian ? "RG" : "EWG";
}

Chart inference_chart(const Dataset& data, const ManifoldPoint& mean_estimate) {
  require_same_kind(data.kind(), mean_estimate.kind(), "inference_chart");
  return data.kind().is_sphere() ? Chart(mean_estimate) : Chart(data.center());
}

// ---------------------------------------------------------------------------

DpMeanRelease dp_frechet_mean(const Dataset& data, double mu, Rng& rng) {
  return dp_frechet_mean(data, frechet_mean(data), mu, rng);
}

DpMeanRelease dp_frechet_mean(const Dataset& data, const FrechetSolution& solution,
                              double mu, Rng& rng) {
  require_mu(mu);
  const ManifoldKind& kind = data.kind();
  SensitivityRecord sens =
      mean_sensitivity(data.radius(), kind.curvature_upper(), data.size());
  const double sigma = sens.delta / mu;
  if (kind.is_sphere()) {
    return {sample_riemannian_gaussian(solution.mean, sigma, rng), sigma,
            MeanMechanism::kRiemannianGaussian, std::move(sens)};
  }
  return {sample_exp_wrapped_gaussian(data.center(), solution.mean, sigma, rng),
          sigma, MeanMechanism::kExpWrappedGaussian, std::move(sens)};
}

double bounded_frechet_function(const Dataset& data, const ManifoldPoint& mean) {
  const double cap = 2.0 * data.radius();
  double sum = 0.0;
  for (const ManifoldPoint& x : data.points()) {
    const double rho = std::min(distance(mean, x), cap);
    sum += rho * rho;
  }
  return sum / data.size();
}

DpVarianceRelease dp_frechet_variance(const Dataset& data,
                                      const ManifoldPoint& mean_dp, double mu,
                                      Rng& rng) {
  require_mu(mu);
  SensitivityRecord sens = variance_sensitivity(data.radius(), data.size());
  const double value = bounded_frechet_function(data, mean_dp);
  return {gaussian_mechanism_scalar(value, sens.delta, mu, rng), sens.delta / mu,
          std::move(sens)};
}

double plugin_sigmaF2(const Dataset& data, const ManifoldPoint& mean,
                      double variance) {
  const double cap = 2.0 * data.radius();
  double sum = 0.0;
  for (const ManifoldPoint& x : data.points()) {
    const double rho = std::min(distance(mean, x), cap);
    sum += rho * rho * rho * rho;
  }
  return sum / data.size() - variance * variance;
}

SigmaF2Release dp_sigmaF2(const Dataset& data, const ManifoldPoint& mean_dp,
                          double variance_dp, double mu, Rng& rng) {
  require_mu(mu);
  SensitivityRecord sens = sigmaF_sensitivity(data.radius(), data.size());
  const double raw = gaussian_mechanism_scalar(
      plugin_sigmaF2(data, mean_dp, variance_dp), sens.delta, mu, rng);
  const bool floored = !(raw >= kSigmaF2Floor);
  return {floored ? kSigmaF2Floor : raw, raw, floored, sens.delta / mu,
          std::move(sens)};
}

LimitingCovariance limiting_covariance(const Dataset& data,
                                       const ManifoldPoint& mean,
                                       const Chart& chart, double extra_variance,
                                       const CovarianceOptions& options) {
  RawCovariance raw = raw_covariance(data, mean, chart, options);
  LimitingCovariance out;
  out.mean_chart = raw.theta;
  const linalg::SymmetricEigen le = linalg::eigen_symmetric(raw.lambda);
  if (le.values.maxCoeff() <= kLambdaEigenFloor) {
    throw NumericalFailure("Lambda estimate is degenerate");
  }
  out.lambda_floored = static_cast<int>((le.values.array() < kLambdaEigenFloor).count());
  out.lambda = linalg::apply_spectral(
      le, [](double x) { return std::max(x, kLambdaEigenFloor); });
  const linalg::SymmetricEigen ce = linalg::eigen_symmetric(raw.c);
  out.c_clipped = static_cast<int>((ce.values.array() < 0.0).count());
  out.c = linalg::apply_spectral(ce, [](double x) { return std::max(x, 0.0); });
  out.gamma = assemble_gamma(out.lambda, out.c, data.size(), extra_variance);
  return out;
}

LimitingCovariance dp_limiting_covariance(const Dataset& data,
                                          const ManifoldPoint& mean_dp,
                                          const Chart& chart, double sigma_eta,
                                          double mu, Rng& rng,
                                          const CovarianceOptions& options) {
  require_mu(mu);
  if (!(sigma_eta >= 0.0)) throw InvalidInput("sigma_eta must be nonnegative");
  RawCovariance raw = raw_covariance(data, mean_dp, chart, options);
  const int d = chart.dim();
  CovarianceSensitivities sens =
      covariance_sensitivities(raw.log_bound, raw.hessian_bound, data.size());

  LimitingCovariance out;
  out.mean_chart = raw.theta;
  out.sigma_lambda = sens.lambda.delta / mu;
  out.sigma_c = sens.c.delta / mu;
  const Eigen::MatrixXd lambda =
      linalg::symmetrize(raw.lambda + symmetric_noise(d, out.sigma_lambda, rng));
  const Eigen::MatrixXd c =
      linalg::symmetrize(raw.c + symmetric_noise(d, out.sigma_c, rng));

  const linalg::SymmetricEigen le = linalg::eigen_symmetric(lambda);
  if (le.values.maxCoeff() <= kLambdaEigenFloor) {
    throw NumericalFailure("DP Lambda estimate is degenerate; increase mu or n");
  }
  out.lambda_floored = static_cast<int>((le.values.array() < kLambdaEigenFloor).count());
  out.lambda = linalg::apply_spectral(
      le, [](double x) { return std::max(x, kLambdaEigenFloor); });
  const linalg::SymmetricEigen ce = linalg::eigen_symmetric(c);
  out.c_clipped = static_cast<int>((ce.values.array() < 0.0).count());
  out.c = linalg::apply_spectral(ce, [](double x) { return std::max(x, 0.0); });
  out.gamma = assemble_gamma(out.lambda, out.c, data.size(), sigma_eta * sigma_eta);
  out.sensitivities = std::move(sens);
  return out;
}

// ---------------------------------------------------------------------------

ConfidenceRegion::ConfidenceRegion(Chart chart, Eigen::VectorXd center,
                                   Eigen::MatrixXd gamma, double alpha)
    : chart_(std::move(chart)),
      center_(std::move(center)),
      gamma_(std::move(gamma)),
      alpha_(alpha) {
  require_alpha(alpha);
  const int d = chart_.dim();
  if (center_.size() != d || gamma_.rows() != d || gamma_.cols() != d) {
    throw InvalidInput("confidence region dimensions do not match the chart");
  }
  llt_.compute(gamma_);
  if (llt_.info() != Eigen::Success) {
    throw NumericalFailure("confidence region covariance is not positive definite");
  }
  threshold_ = stats::chi_square_quantile(d, 1.0 - alpha);
}

double ConfidenceRegion::quadratic_form(const Eigen::VectorXd& chart_point) const {
  const Eigen::VectorXd diff = center_ - chart_point;
  return diff.dot(llt_.solve(diff));
}

double ConfidenceRegion::quadratic_form(const ManifoldPoint& v) const {
  return quadratic_form(chart_.to_chart(v));
}

bool ConfidenceRegion::contains(const ManifoldPoint& v) const {
  return quadratic_form(v) <= threshold_;
}

double ConfidenceRegion::volume_factor() const {
  const Eigen::MatrixXd l = llt_.matrixL();
  return l.diagonal().prod();
}

Interval variance_confidence_interval(double center, double sigmaF2, int n,
                                      double noise_sigma, double alpha) {
  require_alpha(alpha);
  if (n < 1) throw InvalidInput("sample size must be >= 1");
  if (sigmaF2 < 0.0 || noise_sigma < 0.0) {
    throw InvalidInput("variance components must be nonnegative");
  }
  const double z = stats::normal_quantile(1.0 - alpha / 2.0);
  const double half = z * std::sqrt(sigmaF2 / n + noise_sigma * noise_sigma);
  return {center - half, center + half};
}

ConfidenceRegion mean_confidence_region(const DpMeanReport& report, double alpha) {
  return ConfidenceRegion(Chart(report.chart_base), report.covariance.mean_chart,
                          report.covariance.gamma, alpha);
}

NonDpReport nondp_inference(const Dataset& data, const FrechetSolution& solution,
                            double alpha, const CovarianceOptions& options) {
  Chart chart = inference_chart(data, solution.mean);
  LimitingCovariance cov =
      limiting_covariance(data, solution.mean, chart, 0.0, options);
  ConfidenceRegion region(std::move(chart), cov.mean_chart, cov.gamma, alpha);
  const double sf2 =
      std::max(plugin_sigmaF2(data, solution.mean, solution.variance), 0.0);
  const Interval interval =
      variance_confidence_interval(solution.variance, sf2, data.size(), 0.0, alpha);
  return {solution, std::move(cov), std::move(region), sf2, interval};
}

PipelineResult run_full_pipeline(const Dataset& data, double mu_total,
                                 double alpha, Rng& rng,
                                 const CovarianceOptions& options) {
  return run_full_pipeline(data, frechet_mean(data), mu_total, alpha, rng, options);
}

PipelineResult run_full_pipeline(const Dataset& data,
                                 const FrechetSolution& solution,
                                 double mu_total, double alpha, Rng& rng,
                                 const CovarianceOptions& options) {
  require_alpha(alpha);
  PrivacyBudget mean_budget(mu_total);
  PrivacyBudget var_budget(mu_total);
  const double share = mean_budget.share(3);

  DpMeanRelease mean = dp_frechet_mean(data, solution, share, rng);
  mean_budget.spend("frechet_mean", share);
  var_budget.spend("frechet_mean", share);

  Chart chart = inference_chart(data, mean.mean_dp);
  LimitingCovariance cov =
      dp_limiting_covariance(data, mean.mean_dp, chart, mean.sigma, share, rng, options);
  mean_budget.spend("covariance_Lambda", share);
  mean_budget.spend("covariance_C", share);

  DpVarianceRelease var = dp_frechet_variance(data, mean.mean_dp, share, rng);
  var_budget.spend("frechet_variance", share);
  SigmaF2Release sf2 = dp_sigmaF2(data, mean.mean_dp, var.variance_dp, share, rng);
  var_budget.spend("sigmaF2", share);

  const Interval interval = variance_confidence_interval(
      var.variance_dp, sf2.value, data.size(), var.sigma, alpha);
  ManifoldPoint base = chart.base();
  ConfidenceRegion region(std::move(chart), cov.mean_chart, cov.gamma, alpha);

  return {DpMeanReport{mean.mean_dp, mean.sigma, mean.mechanism, std::move(base),
                       std::move(cov), std::move(region), std::move(mean_budget)},
          DpVarianceReport{var.variance_dp, var.sigma, sf2, interval,
                           std::move(var_budget)}};
}

}  // namespace manifold_dp
