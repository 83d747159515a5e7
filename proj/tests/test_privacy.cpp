#include <gtest/gtest.h>

#include <cmath>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/privacy.hpp"
#include "manifold_dp/stats.hpp"
#include "support.hpp"

using namespace manifold_dp;
using namespace testing_support;

TEST(PrivacyBudget, ComposesEqualShares) {
  PrivacyBudget b(1.7);
  const double share = b.share(3);
  for (const char* name : {"a", "b", "c"}) b.spend(name, share);
  EXPECT_NEAR(b.spent(), 1.7, 1e-12);
  EXPECT_EQ(b.ledger().size(), 3u);
  EXPECT_THROW(b.spend("d", 0.01), InvalidInput);
  EXPECT_EQ(b.ledger().size(), 3u);
  EXPECT_THROW(PrivacyBudget(0.0), InvalidInput);
  EXPECT_THROW(b.share(0), InvalidInput);
}

TEST(Sensitivity, MeanExamples) {
  const SensitivityRecord flat = mean_sensitivity(1.0, 0.0, 100);
  EXPECT_NEAR(flat.delta, 0.02, 1e-17);
  EXPECT_EQ(flat.formula, SensitivityFormula::kMean);
  EXPECT_NEAR(mean_sensitivity_factor(M_PI / 8, 1.0), 8 / M_PI - 1, 1e-14);
  EXPECT_NEAR(mean_sensitivity(M_PI / 8, 1.0, 600).delta, 0.0020243363943375862, 1e-15);
  EXPECT_NEAR(mean_sensitivity(M_PI / 8, 1.0, 1200).delta,
              mean_sensitivity(M_PI / 8, 1.0, 600).delta / 2, 1e-18);
  EXPECT_THROW(mean_sensitivity(M_PI / 4, 1.0, 10), InvalidInput);
  EXPECT_THROW(mean_sensitivity(0.5, 0.0, 0), InvalidInput);
}

TEST(Sensitivity, VarianceCovarianceSigmaF) {
  EXPECT_NEAR(variance_sensitivity(M_PI / 8, 600).delta, 1.0280837917801415e-3, 1e-17);
  EXPECT_NEAR(variance_sensitivity(1.0, 4).delta, 1.0, 1e-15);
  EXPECT_NEAR(variance_sensitivity(0.6, 9).delta, 4 * variance_sensitivity(0.3, 9).delta, 1e-15);
  const CovarianceSensitivities cs = covariance_sensitivities(M_PI / 4, 2 * std::sqrt(2.0), 600);
  EXPECT_NEAR(cs.c.delta, 6.168502750680849e-3, 1e-16);
  EXPECT_NEAR(cs.lambda.delta, 9.428090415820634e-3, 1e-16);
  EXPECT_NEAR(sigmaF_sensitivity(M_PI / 8, 600).delta, 6.341737697526200e-4, 1e-17);
  EXPECT_NEAR(sigmaF_sensitivity(1.0, 16).delta, 1.0, 1e-15);
  EXPECT_NEAR(sigmaF_sensitivity(0.4, 7).delta, 16 * sigmaF_sensitivity(0.2, 7).delta, 1e-15);
  for (int n = 1; n < 50; ++n) {
    EXPECT_GT(variance_sensitivity(0.3, n).delta, variance_sensitivity(0.3, n + 1).delta);
    EXPECT_GT(sigmaF_sensitivity(0.3, n).delta, sigmaF_sensitivity(0.3, n + 1).delta);
  }
}

TEST(Sensitivity, DefaultHessianBound) {
  EXPECT_NEAR(default_hessian_bound(ManifoldKind::sphere(3), M_PI / 8), 2 * std::sqrt(2.0), 1e-15);
  const double s = std::sqrt(0.5) * 3.0;
  EXPECT_NEAR(default_hessian_bound(ManifoldKind::spd(2), 1.5),
              2 * std::sqrt(3.0) * s / std::tanh(s), 1e-12);
}

TEST(RiemannianGaussian, ConcentratesForSmallSigma) {
  Rng rng(1);
  const ManifoldPoint c = ManifoldPoint::unit_vector(3, 2);
  const double sigma = 1e-4;
  for (int i = 0; i < 10000; ++i) {
    EXPECT_LE(distance(sample_riemannian_gaussian(c, sigma, rng), c), 5 * sigma);
  }
  EXPECT_THROW(sample_riemannian_gaussian(c, 0.0, rng), InvalidInput);
  EXPECT_THROW(sample_riemannian_gaussian(ManifoldPoint::identity(2), 0.1, rng), InvalidInput);
}

TEST(RiemannianGaussian, RadialLawMatchesQuadrature) {
  for (int d : {2, 3}) {
    for (double sigma : {0.2, 1.5}) {
      Rng rng(derive_seed(2, d, static_cast<std::uint64_t>(sigma * 100)));
      const ManifoldPoint c = ManifoldPoint::unit_vector(d + 1, 0);
      std::vector<double> t(100000);
      for (double& x : t) x = distance(sample_riemannian_gaussian(c, sigma, rng), c);
      const RgRadialCdf cdf(d, sigma);
      EXPECT_LT(stats::ks_statistic(t, [&](double x) { return cdf(x); }), 0.01)
          << "d=" << d << " sigma=" << sigma;
    }
  }
}

TEST(RiemannianGaussian, RotationEquivariance) {
  Rng setup(3);
  const ManifoldPoint c = random_sphere_point(4, setup);
  const Eigen::MatrixXd rot = random_rotation(4, setup);
  const TangentFrame frame = tangent_frame(c);
  std::vector<Eigen::MatrixXd> moved;
  for (const Eigen::MatrixXd& b : frame.basis()) moved.push_back(rot * b);
  const TangentFrame rotated(ManifoldPoint::projected(c.kind(), rot * c.vector()), moved);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a(seed), b(seed);
    const ManifoldPoint x = sample_riemannian_gaussian(frame, 0.3, a);
    const ManifoldPoint y = sample_riemannian_gaussian(rotated, 0.3, b);
    EXPECT_LT((rot * x.vector() - y.vector()).norm(), 1e-12);
  }
}

TEST(RiemannianGaussian, DeterministicGivenSeed) {
  const ManifoldPoint c = ManifoldPoint::unit_vector(3, 0);
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(sample_riemannian_gaussian(c, 0.4, a).coords(),
              sample_riemannian_gaussian(c, 0.4, b).coords());
  }
}

TEST(ExpWrappedGaussian, PullbackMoments) {
  Rng rng(4);
  const ManifoldPoint m0 = random_spd_point(2, 0.3, rng);
  const ManifoldPoint center = random_point_near(m0, 1.0, rng);
  const TangentFrame frame = tangent_frame(m0);
  const Eigen::VectorXd target = frame.coordinates(log_map(m0, center));
  const double sigma = 0.3;
  const int n = 100000;
  Eigen::MatrixXd z(frame.dim(), n);
  for (int i = 0; i < n; ++i) {
    z.col(i) = frame.coordinates(log_map(m0, sample_exp_wrapped_gaussian(m0, center, sigma, rng)));
  }
  const Eigen::VectorXd mean = z.rowwise().mean();
  for (int k = 0; k < frame.dim(); ++k) {
    EXPECT_LT(std::abs(mean(k) - target(k)), 4 * sigma / std::sqrt(n));
  }
  const Eigen::MatrixXd c = z.colwise() - mean;
  const Eigen::MatrixXd cov = c * c.transpose() / (n - 1);
  const Eigen::MatrixXd expected = sigma * sigma * Eigen::MatrixXd::Identity(frame.dim(), frame.dim());
  EXPECT_LT((cov - expected).norm(), 0.02 * expected.norm());
  for (int k = 0; k < frame.dim(); ++k) {
    std::vector<double> col(z.row(k).data(), z.row(k).data() + 0);
    col.resize(10000);
    for (int i = 0; i < 10000; ++i) col[i] = z(k, i);
    const double mu = target(k);
    const double stat = stats::ks_statistic(
        col, [&](double x) { return stats::normal_cdf((x - mu) / sigma); });
    EXPECT_GT(stats::ks_pvalue(stat, col.size()), 0.01);
  }
}

TEST(ExpWrappedGaussian, VanishingNoiseAndErrors) {
  Rng rng(5);
  const ManifoldPoint m0 = ManifoldPoint::identity(2);
  const ManifoldPoint c = random_spd_point(2, 0.5, rng);
  EXPECT_LT((sample_exp_wrapped_gaussian(m0, c, 1e-12, rng).coords() - c.coords()).norm(), 1e-9);
  EXPECT_LT(distance(sample_exp_wrapped_gaussian(m0, m0, 1e-6, rng), m0), 1e-4);
  EXPECT_THROW(sample_exp_wrapped_gaussian(m0, c, -1.0, rng), InvalidInput);
  EXPECT_THROW(sample_exp_wrapped_gaussian(ManifoldPoint::unit_vector(3, 0),
                                           ManifoldPoint::unit_vector(3, 0), 0.1, rng),
               InvalidInput);
}

TEST(GaussianMechanism, MomentsAndZeroSensitivity) {
  Rng rng(6);
  EXPECT_EQ(gaussian_mechanism_scalar(3.25, 0.0, 0.5, rng), 3.25);
  const Eigen::VectorXd v = Eigen::Vector3d(1, 2, 3);
  EXPECT_EQ(gaussian_mechanism_vector(v, 0.0, 0.5, rng), v);
  const double delta = 0.2, mu = 0.5, s = delta / mu;
  const int n = 100000;
  double sum = 0, sq = 0;
  for (int i = 0; i < n; ++i) {
    const double x = gaussian_mechanism_scalar(1.0, delta, mu, rng);
    sum += x;
    sq += x * x;
  }
  const double mean = sum / n;
  EXPECT_LT(std::abs(mean - 1.0), 4 * s / std::sqrt(n));
  const double var = (sq - n * mean * mean) / (n - 1);
  EXPECT_LT(std::abs(var / (s * s) - 1.0), 0.03);
  EXPECT_THROW(gaussian_mechanism_scalar(1.0, 1.0, 0.0, rng), InvalidInput);
}

TEST(GdpProfile, ValuesAndMonotonicity) {
  EXPECT_NEAR(gdp_delta_profile(1.0, 0.0), 0.382924922548026, 1e-12);
  EXPECT_EQ(gdp_delta_profile(1.0, INFINITY), 0.0);
  EXPECT_LT(gdp_delta_profile(1.0, 50.0), 1e-300);
  for (double mu : {0.1, 0.5, 1.0, 2.0, 4.0}) {
    for (double eps = 0.0; eps < 10.0; eps += 0.25) {
      EXPECT_GE(gdp_delta_profile(mu, eps), gdp_delta_profile(mu, eps + 0.25));
      EXPECT_LE(gdp_delta_profile(mu, eps), gdp_delta_profile(mu * 1.1, eps));
    }
  }
  EXPECT_THROW(gdp_delta_profile(0.0, 1.0), InvalidInput);
  EXPECT_THROW(gdp_delta_profile(1.0, -1.0), InvalidInput);
}

TEST(PrivacyProfile, DefaultGrid) {
  const std::vector<double> g = default_eps_grid();
  ASSERT_EQ(g.size(), 64u);
  EXPECT_NEAR(g.front(), 1e-3, 1e-15);
  EXPECT_NEAR(g.back(), 10.0, 1e-12);
}

TEST(PrivacyProfile, RecoversCalibratedMuAndScalesWithSigma) {
  const ManifoldKind kind = ManifoldKind::sphere(3);
  const double delta = mean_sensitivity(M_PI / 8, 1.0, 600).delta;
  PrivacyVerificationOptions o;
  o.n_mc = 2000000;
  Rng a(8), b(9);
  const PrivacyProfileEstimate one = verify_privacy_profile(kind, delta / 1.0, delta, a, o);
  EXPECT_NEAR(one.mu_star, 1.0, 0.03);
  EXPECT_LE(one.mu_star, 1.02);
  const PrivacyProfileEstimate half = verify_privacy_profile(kind, 2 * delta, delta, b, o);
  EXPECT_NEAR(half.mu_star / one.mu_star, 0.5, 0.03);
}

TEST(PrivacyProfile, DeterministicAndValidated) {
  const ManifoldKind kind = ManifoldKind::sphere(3);
  PrivacyVerificationOptions o;
  o.n_mc = 2000000;
  const double delta = mean_sensitivity(M_PI / 8, 1.0, 600).delta;
  Rng a(10), b(10);
  EXPECT_EQ(verify_privacy_profile(kind, delta, delta, a, o).delta_hat,
            verify_privacy_profile(kind, delta, delta, b, o).delta_hat);
  o.n_mc = 10;
  EXPECT_THROW(verify_privacy_profile(kind, 0.01, 0.005, a, o), InvalidInput);
  o.n_mc = 2000;
  EXPECT_THROW(verify_privacy_profile(kind, 0.01, 0.005, a, o), NumericalFailure);
  EXPECT_THROW(verify_privacy_profile(ManifoldKind::spd(2), 0.01, 0.005, a, o), InvalidInput);
}
