#include "manifold_dp/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/parallel.hpp"
#include "manifold_dp/stats.hpp"

namespace manifold_dp {
namespace {

void require_positive(double x, const char* name) {
  if (!(x > 0.0) || !std::isfinite(x)) {
    throw InvalidInput(std::string(name) + " must be positive and finite");
  }
}

void require_count(int n) {
  if (n < 1) throw InvalidInput("sample size n must be >= 1");
}

// Rejection sampler for the RG law in normal coordinates at `center`,
// returning an ambient unit vector. `basis` spans the tangent space.
Eigen::VectorXd sample_rg_ambient(const Eigen::VectorXd& center,
                                  const std::vector<Eigen::MatrixXd>& basis,
                                  double sigma, Rng& rng) {
  const int d = static_cast<int>(basis.size());
  if (sigma <= 1.0) {
    for (;;) {
      Eigen::VectorXd v = Eigen::VectorXd::Zero(center.size());
      for (int k = 0; k < d; ++k) v += (sigma * rng.normal()) * basis[k].col(0);
      const double t = v.norm();
      if (t > M_PI) continue;
      if (t > 0.0 && d > 1) {
        const double ratio = std::pow(std::sin(t) / t, d - 1);
        if (rng.uniform() >= ratio) continue;
      }
      if (t == 0.0) return center;
      Eigen::VectorXd y = std::cos(t) * center + (std::sin(t) / t) * v;
      return y / y.norm();
    }
  }
  for (;;) {
    const Eigen::VectorXd y = rng.unit_vector(center.size());
    const double t = 2.0 * std::atan2((y - center).norm(), (y + center).norm());
    if (rng.uniform() < std::exp(-t * t / (2.0 * sigma * sigma))) return y;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PrivacyBudget

PrivacyBudget::PrivacyBudget(double mu) : mu_(mu) { require_positive(mu, "mu"); }

double PrivacyBudget::share(int k) const {
  if (k < 1) throw InvalidInput("budget must be split into k >= 1 shares");
  return mu_ / std::sqrt(static_cast<double>(k));
}

void PrivacyBudget::spend(std::string mechanism, double mu_i) {
  require_positive(mu_i, "mu_i");
  ledger_.push_back({std::move(mechanism), mu_i});
  if (spent() > mu_ * (1.0 + 1e-12)) {
    ledger_.pop_back();
    throw InvalidInput("release would exceed the privacy budget");
  }
}

double PrivacyBudget::spent() const {
  double sum = 0.0;
  for (const Entry& e : ledger_) sum += e.mu * e.mu;
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Sensitivities

const char* to_string(SensitivityFormula f) {
  switch (f) {
    case SensitivityFormula::kMean: return "mean";
    case SensitivityFormula::kVariance: return "variance";
    case SensitivityFormula::kCovarianceC: return "covariance_C";
    case SensitivityFormula::kCovarianceLambda: return "covariance_Lambda";
    case SensitivityFormula::kSigmaF: return "sigmaF";
  }
  return "unknown";
}

double mean_sensitivity_factor(double r, double kappa) {
  require_positive(r, "r");
  if (kappa <= 0.0) return 1.0;
  const double s = std::sqrt(kappa);
  if (2.0 * r * s >= M_PI / 2.0) {
    throw InvalidInput("mean sensitivity needs 2 r sqrt(kappa) < pi/2");
  }
  return std::tan(2.0 * r * s) / (r * s) - 1.0;
}

SensitivityRecord mean_sensitivity(double r, double kappa, int n) {
  require_count(n);
  const double lambda = mean_sensitivity_factor(r, kappa);
  return {2.0 * lambda * r / n,
          SensitivityFormula::kMean,
          {{"r", r}, {"kappa", kappa}, {"n", n}, {"lambda", lambda}}};
}

SensitivityRecord variance_sensitivity(double r, int n) {
  require_positive(r, "r");
  require_count(n);
  return {4.0 * r * r / n, SensitivityFormula::kVariance, {{"r", r}, {"n", n}}};
}

CovarianceSensitivities covariance_sensitivities(double R, double hessian_bound,
                                                 int n) {
  require_positive(R, "R");
  require_positive(hessian_bound, "B_H");
  require_count(n);
  return {{6.0 * R * R / n, SensitivityFormula::kCovarianceC, {{"R", R}, {"n", n}}},
          {2.0 * hessian_bound / n,
           SensitivityFormula::kCovarianceLambda,
           {{"B_H", hessian_bound}, {"n", n}}}};
}

SensitivityRecord sigmaF_sensitivity(double r, int n) {
  require_positive(r, "r");
  require_count(n);
  const double r2 = r * r;
  return {16.0 * r2 * r2 / n, SensitivityFormula::kSigmaF, {{"r", r}, {"n", n}}};
}

double default_hessian_bound(const ManifoldKind& kind, double r) {
  require_positive(r, "r");
  const double root_d = std::sqrt(static_cast<double>(kind.dim()));
  const double kappa_low = kind.curvature_lower();
  if (kappa_low >= 0.0) return 2.0 * root_d;
  const double s = std::sqrt(-kappa_low) * 2.0 * r;
  return 2.0 * root_d * std::max(1.0, s / std::tanh(s));
}

// ---------------------------------------------------------------------------
// Samplers

ManifoldPoint sample_riemannian_gaussian(const TangentFrame& frame,
                                         double sigma, Rng& rng) {
  const ManifoldPoint& center = frame.base();
  if (!center.kind().is_sphere()) {
    throw InvalidInput("Riemannian Gaussian sampling is implemented for the sphere");
  }
  require_positive(sigma, "sigma");
  return make_point_unchecked(
      center.kind(), sample_rg_ambient(center.vector(), frame.basis(), sigma, rng));
}

ManifoldPoint sample_riemannian_gaussian(const ManifoldPoint& center,
                                         double sigma, Rng& rng) {
  if (!center.kind().is_sphere()) {
    throw InvalidInput("Riemannian Gaussian sampling is implemented for the sphere");
  }
  return sample_riemannian_gaussian(tangent_frame(center), sigma, rng);
}

ManifoldPoint sample_exp_wrapped_gaussian(const ManifoldPoint& footpoint,
                                          const ManifoldPoint& center,
                                          double sigma, Rng& rng) {
  if (!footpoint.kind().is_spd()) {
    throw InvalidInput("exp-wrapped Gaussian needs a Hadamard (SPD) manifold");
  }
  require_same_kind(footpoint.kind(), center.kind(), "sample_exp_wrapped_gaussian");
  require_positive(sigma, "sigma");
  const TangentFrame frame = tangent_frame(footpoint);
  const Eigen::VectorXd z = rng.normal_vector(frame.dim());
  const Eigen::MatrixXd v =
      detail::log_ambient(footpoint, center) + sigma * frame.ambient(z);
  return exp_map(footpoint, make_tangent_unchecked(footpoint, v));
}

double gaussian_mechanism_scalar(double value, double delta, double mu,
                                 Rng& rng) {
  require_positive(mu, "mu");
  if (delta < 0.0) throw InvalidInput("sensitivity must be nonnegative");
  const double z = rng.normal();
  return delta == 0.0 ? value : value + (delta / mu) * z;
}

Eigen::VectorXd gaussian_mechanism_vector(const Eigen::VectorXd& value,
                                          double delta, double mu, Rng& rng) {
  require_positive(mu, "mu");
  if (delta < 0.0) throw InvalidInput("sensitivity must be nonnegative");
  const Eigen::VectorXd z = rng.normal_vector(value.size());
  return delta == 0.0 ? value : Eigen::VectorXd(value + (delta / mu) * z);
}

double gdp_delta_profile(double mu, double eps) {
  require_positive(mu, "mu");
  if (eps < 0.0) throw InvalidInput("eps must be nonnegative");
  if (std::isinf(eps)) return 0.0;
  const double a = stats::normal_cdf(-eps / mu + mu / 2.0);
  const double b = stats::normal_cdf(-eps / mu - mu / 2.0);
  const double tail = b > 0.0 ? std::exp(eps + std::log(b)) : 0.0;
  return std::clamp(a - tail, 0.0, 1.0);
}

// ---------------------------------------------------------------------------
// Privacy profile verification

std::vector<double> default_eps_grid() {
  std::vector<double> grid(64);
  const double lo = std::log(1e-3), hi = std::log(10.0);
  for (int i = 0; i < 64; ++i) grid[i] = std::exp(lo + (hi - lo) * i / 63.0);
  return grid;
}

PrivacyProfileEstimate verify_privacy_profile(
    const ManifoldKind& kind, double sigma, double delta_eta, Rng& rng,
    const PrivacyVerificationOptions& options) {
  if (!kind.is_sphere()) {
    throw InvalidInput("privacy profile verification is implemented for the sphere");
  }
  require_positive(sigma, "sigma");
  require_positive(delta_eta, "delta_eta");
  if (delta_eta >= M_PI) throw InvalidInput("delta_eta must be < pi");
  if (options.n_mc < 1000) {
    throw InvalidInput("n_mc must be at least 1000 to estimate the profile");
  }
  const std::vector<double> grid =
      options.eps_grid.empty() ? default_eps_grid() : options.eps_grid;

  const ManifoldPoint eta1 = ManifoldPoint::unit_vector(kind.size(), 0);
  const TangentFrame frame = tangent_frame(eta1);
  const ManifoldPoint eta2 =
      exp_map(eta1, frame.vector(Eigen::VectorXd::Unit(frame.dim(), 0) * delta_eta));
  const Eigen::VectorXd x1 = eta1.vector();
  const Eigen::VectorXd x2 = eta2.vector();

  // Fixed-size chunks with derived seeds keep the draws independent of the
  // worker count.
  constexpr long kChunk = 1 << 16;
  const long n = options.n_mc;
  const std::size_t chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  const std::uint64_t seed = rng.engine()();
  std::vector<double> loss(static_cast<std::size_t>(n));
  const double scale = 1.0 / (2.0 * sigma * sigma);
  parallel_for(chunks, [&](std::size_t c) {
    Rng local(derive_seed(seed, c));
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(n, begin + kChunk);
    for (long i = begin; i < end; ++i) {
      const Eigen::VectorXd y = sample_rg_ambient(x1, frame.basis(), sigma, local);
      const double r1 = 2.0 * std::atan2((y - x1).norm(), (y + x1).norm());
      const double r2 = 2.0 * std::atan2((y - x2).norm(), (y + x2).norm());
      loss[static_cast<std::size_t>(i)] = (r2 * r2 - r1 * r1) * scale;
    }
  });
  std::sort(loss.begin(), loss.end(), std::greater<>());

  PrivacyProfileEstimate out;
  out.eps_grid = grid;
  out.delta_hat.resize(grid.size());
  out.standard_error.resize(grid.size());
  out.max_standard_error = 0.0;
  const double nd = static_cast<double>(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double eps = grid[k];
    double sum = 0.0, sum_sq = 0.0;
    for (double l : loss) {
      if (l < eps) break;
      const double v = -std::expm1(eps - l);
      sum += v;
      sum_sq += v * v;
    }
    const double m = sum / nd;
    const double var = std::max(0.0, sum_sq / nd - m * m);
    out.delta_hat[k] = m;
    out.standard_error[k] = std::sqrt(var / nd);
    out.max_standard_error = std::max(out.max_standard_error, out.standard_error[k]);
  }

  // Smallest mu on the bisection grid whose profile dominates
  // delta_hat + slack * SE. The upper route only uses grid points where the
  // estimate is distinguishable from zero; elsewhere a single tail draw
  // would dominate the bound.
  auto smallest_mu = [&](double slack) {
    auto feasible = [&](double mu) {
      for (std::size_t k = 0; k < grid.size(); ++k) {
        if (slack > 0.0 && out.delta_hat[k] <= 3.0 * out.standard_error[k]) continue;
        if (out.delta_hat[k] + slack * out.standard_error[k] >
            gdp_delta_profile(mu, grid[k])) {
          return false;
        }
      }
      return true;
    };
    double lo = 0.0, hi = 1.0;
    while (!feasible(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > 1e3) throw NumericalFailure("mu* exceeds 1000; profile not GDP-like");
    }
    while (hi - lo > options.bisection_tol) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? hi : lo) = mid;
    }
    return hi;
  };
  out.mu_star = smallest_mu(-3.0);
  out.mu_resolution = smallest_mu(3.0) - out.mu_star;
  if (out.mu_resolution > options.max_relative_resolution * out.mu_star) {
    std::ostringstream msg;
    msg << "n_mc=" << n << " cannot resolve mu* (estimate " << out.mu_star
        << ", resolution " << out.mu_resolution << ", max standard error "
        << out.max_standard_error << ")";
    throw NumericalFailure(msg.str());
  }
  return out;
}

}  // namespace manifold_dp
