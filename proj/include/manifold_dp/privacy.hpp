#pragma once

#include <map>
#include <string>
#include <vector>

#include "manifold_dp/manifold.hpp"
#include "manifold_dp/rng.hpp"

namespace manifold_dp {

// ---------------------------------------------------------------------------
// Budget accounting

// mu-GDP budget with a ledger of spent shares. Releases compose as
// sqrt(sum mu_i^2); k equal shares of mu / sqrt(k) compose to mu.
class PrivacyBudget {
 public:
  struct Entry {
    std::string mechanism;
    double mu;
  };

  explicit PrivacyBudget(double mu);

  double mu() const { return mu_; }
  // Share for each of k equal releases.
  double share(int k) const;
  // Records a release; throws InvalidInput if the composed total would
  // exceed mu by more than 1e-12 relative.
  void spend(std::string mechanism, double mu_i);
  double spent() const;
  const std::vector<Entry>& ledger() const { return ledger_; }

 private:
  double mu_;
  std::vector<Entry> ledger_;
};

// ---------------------------------------------------------------------------
// Sensitivities

enum class SensitivityFormula { kMean, kVariance, kCovarianceC, kCovarianceLambda, kSigmaF };

const char* to_string(SensitivityFormula f);

struct SensitivityRecord {
  double delta;
  SensitivityFormula formula;
  std::map<std::string, double> inputs;
};

// Curvature inflation of the mean sensitivity:
// tan(2 r sqrt(kappa)) / (r sqrt(kappa)) - 1 for kappa > 0, else 1.
double mean_sensitivity_factor(double r, double kappa);

// 2 lambda(r, kappa) r / n. Throws InvalidInput when 2 r sqrt(kappa) >= pi/2.
SensitivityRecord mean_sensitivity(double r, double kappa, int n);
// 4 r^2 / n.
SensitivityRecord variance_sensitivity(double r, int n);

struct CovarianceSensitivities {
  SensitivityRecord c;       // 6 R^2 / n
  SensitivityRecord lambda;  // 2 B_H / n
};
CovarianceSensitivities covariance_sensitivities(double R, double hessian_bound,
                                                 int n);
// 16 r^4 / n.
SensitivityRecord sigmaF_sensitivity(double r, int n);

// Frobenius bound on the Hessian of rho^2(x, .) for points at distance up to
// 2r: 2 sqrt(d) * max(1, s coth s) with s = sqrt(|kappa_low|) * 2r, and
// 2 sqrt(d) when the lower curvature bound is nonnegative.
double default_hessian_bound(const ManifoldKind& kind, double r);

// ---------------------------------------------------------------------------
// Samplers and mechanisms

// Riemannian Gaussian on the sphere: density proportional to
// exp(-rho^2(y, center) / (2 sigma^2)) with respect to the volume measure.
// Exact rejection sampling: for sigma <= 1 the proposal is a tangent Gaussian
// N(0, sigma^2 I_d) at the center (accepted with probability
// (sin t / t)^{d-1} when t = |z| <= pi); for larger sigma the proposal is the
// uniform distribution on the sphere, accepted with probability
// exp(-t^2 / (2 sigma^2)).
ManifoldPoint sample_riemannian_gaussian(const ManifoldPoint& center,
                                         double sigma, Rng& rng);
// Same, with tangent directions expressed in the given frame at the center.
ManifoldPoint sample_riemannian_gaussian(const TangentFrame& frame,
                                         double sigma, Rng& rng);

// Exponential-wrapped Gaussian: exp_{footpoint}(log_{footpoint}(center) +
// sigma * F z) with z standard normal and F the frame at the footpoint.
ManifoldPoint sample_exp_wrapped_gaussian(const ManifoldPoint& footpoint,
                                          const ManifoldPoint& center,
                                          double sigma, Rng& rng);

double gaussian_mechanism_scalar(double value, double delta, double mu,
                                 Rng& rng);
Eigen::VectorXd gaussian_mechanism_vector(const Eigen::VectorXd& value,
                                          double delta, double mu, Rng& rng);

// Phi(-eps/mu + mu/2) - e^eps Phi(-eps/mu - mu/2).
double gdp_delta_profile(double mu, double eps);

// ---------------------------------------------------------------------------
// Empirical privacy profile

struct PrivacyVerificationOptions {
  std::vector<double> eps_grid;  // empty: 64 geometric points in [1e-3, 10]
  long n_mc = 2'000'000;
  double bisection_tol = 1e-3;
  // Fail when the Monte Carlo error translates into more than this relative
  // uncertainty on mu*.
  double max_relative_resolution = 0.05;
};

struct PrivacyProfileEstimate {
  double mu_star;
  // Width of the band of mu* values compatible with delta_hat +/- 3 SE.
  double mu_resolution;
  double max_standard_error;
  std::vector<double> eps_grid;
  std::vector<double> delta_hat;
  std::vector<double> standard_error;
};

std::vector<double> default_eps_grid();

// Monte Carlo estimate of the smallest mu whose Gaussian trade-off dominates
// the RG mechanism with scale sigma on a worst-case pair at distance
// delta_eta. Draws Y ~ RG(eta_1, sigma), forms the privacy loss
// L = (rho^2(eta_2, Y) - rho^2(eta_1, Y)) / (2 sigma^2), and estimates the
// hockey-stick divergence delta(eps) = E_1[(1 - e^{eps - L})_+]. mu* is the
// smallest mu on the bisection grid with delta_hat(eps) <= delta_mu(eps) +
// 3 SE(eps) for every eps. Sphere kinds only.
PrivacyProfileEstimate verify_privacy_profile(
    const ManifoldKind& kind, double sigma, double delta_eta, Rng& rng,
    const PrivacyVerificationOptions& options = {});

}  // namespace manifold_dp
