#include "manifold_dp/simharness.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <tuple>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/linalg.hpp"
#include "manifold_dp/parallel.hpp"

namespace manifold_dp {
namespace {

constexpr std::uint64_t kDataStream = 0;
constexpr long kSpdTruthDraws = 10'000'000;
constexpr std::uint64_t kTruthSeed = 0x7275746870726f62ULL;

double integrate(const std::function<double(double)>& f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15,
                                                                      1e-14);
}

PopulationTruth sphere_truth(int d, double radius) {
  const auto weight = [d](double t) { return std::pow(std::sin(t), d - 1); };
  const double z = integrate(weight, 0.0, radius);
  const double m2 = integrate([&](double t) { return t * t * weight(t); }, 0.0, radius) / z;
  const double m4 =
      integrate([&](double t) { return std::pow(t, 4) * weight(t); }, 0.0, radius) / z;
  // t cot t sin^{d-1} t written without the removable singularity at 0.
  const double tcot =
      integrate([&](double t) { return t * std::cos(t) * std::pow(std::sin(t), d - 2); },
                0.0, radius) / z;
  const double lambda = 2.0 / d + 2.0 * (1.0 - 1.0 / d) * tcot;
  return {m2, m4 - m2 * m2, lambda * Eigen::MatrixXd::Identity(d, d),
          (4.0 * m2 / d) * Eigen::MatrixXd::Identity(d, d), 0.0};
}

// Hessian at I of rho^2(X, .) in the frame basis, for log X = v. In the
// eigenbasis of v, diagonal directions have eigenvalue 2 and the direction
// pairing eigenvalues l_i, l_j has 2 c coth c with c = |l_i - l_j| / 2.
Eigen::MatrixXd spd_hessian_at_identity(const Eigen::MatrixXd& v,
                                        const std::vector<Eigen::MatrixXd>& basis) {
  const linalg::SymmetricEigen eig = linalg::eigen_symmetric(v);
  const int m = static_cast<int>(v.rows());
  Eigen::MatrixXd weights(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      const double c = std::abs(eig.values(i) - eig.values(j)) / 2.0;
      weights(i, j) = c < 1e-12 ? 2.0 : 2.0 * c / std::tanh(c);
    }
  }
  const int d = static_cast<int>(basis.size());
  std::vector<Eigen::MatrixXd> rotated(d);
  for (int k = 0; k < d; ++k) {
    rotated[k] = eig.vectors.transpose() * basis[k] * eig.vectors;
  }
  Eigen::MatrixXd h(d, d);
  for (int k = 0; k < d; ++k) {
    for (int l = k; l < d; ++l) {
      h(k, l) = h(l, k) =
          rotated[k].cwiseProduct(weights.cwiseProduct(rotated[l])).sum();
    }
  }
  return h;
}

Eigen::VectorXd uniform_ball(int d, double radius, Rng& rng) {
  const Eigen::VectorXd u = rng.unit_vector(d);
  return radius * std::pow(rng.uniform(), 1.0 / d) * u;
}

PopulationTruth spd_truth(int m, double radius) {
  const ManifoldPoint identity = ManifoldPoint::identity(m);
  const TangentFrame frame = tangent_frame(identity);
  const int d = frame.dim();
  const double dd = d;
  const double variance = dd * radius * radius / (dd + 2.0);
  const double m4 = dd * std::pow(radius, 4) / (dd + 4.0);

  constexpr long kChunk = 1 << 16;
  const std::size_t chunks = (kSpdTruthDraws + kChunk - 1) / kChunk;
  std::vector<Eigen::MatrixXd> sums(chunks), squares(chunks);
  parallel_for(chunks, [&](std::size_t c) {
    Rng rng(derive_seed(kTruthSeed, static_cast<std::uint64_t>(m), c));
    const long begin = static_cast<long>(c) * kChunk;
    const long end = std::min(kSpdTruthDraws, begin + kChunk);
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d), q = s;
    for (long i = begin; i < end; ++i) {
      const Eigen::MatrixXd h =
          spd_hessian_at_identity(frame.ambient(uniform_ball(d, radius, rng)), frame.basis());
      s += h;
      q += h.cwiseProduct(h);
    }
    sums[c] = s;
    squares[c] = q;
  });
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d), q = s;
  for (std::size_t c = 0; c < chunks; ++c) {
    s += sums[c];
    q += squares[c];
  }
  const double n = static_cast<double>(kSpdTruthDraws);
  const Eigen::MatrixXd mean = s / n;
  const Eigen::MatrixXd var = (q / n - mean.cwiseProduct(mean)).cwiseMax(0.0);
  return {variance, m4 - variance * variance, linalg::symmetrize(mean),
          (4.0 * radius * radius / (dd + 2.0)) * Eigen::MatrixXd::Identity(d, d),
          std::sqrt(var.maxCoeff() / n)};
}

ManifoldPoint replication_center(const ExperimentConfig& config, Rng& rng) {
  if (config.center_policy == CenterPolicy::kFixed) {
    return config.center_for_fixed_policy();
  }
  return ManifoldPoint::projected(config.manifold,
                                  rng.unit_vector(config.manifold.size()));
}

}  // namespace

const char* to_string(TruthModel t) {
  return t == TruthModel::kSphereUniformBall ? "sphere_uniform_ball"
                                             : "spd_tangent_uniform_ball";
}

const char* to_string(CenterPolicy c) {
  return c == CenterPolicy::kFixed ? "fixed" : "random_per_replication";
}

ExperimentConfig ExperimentConfig::sphere_default() { return ExperimentConfig{}; }

ExperimentConfig ExperimentConfig::spd_default() {
  ExperimentConfig c;
  c.manifold = ManifoldKind::spd(2);
  c.ball_radius = 1.5;
  c.center_policy = CenterPolicy::kFixed;
  c.truth = TruthModel::kSpdTangentUniformBall;
  return c;
}

ManifoldPoint ExperimentConfig::center_for_fixed_policy() const {
  if (fixed_center) return *fixed_center;
  return manifold.is_sphere() ? ManifoldPoint::unit_vector(manifold.size(), 0)
                              : ManifoldPoint::identity(manifold.size());
}

void ExperimentConfig::validate() const {
  if (n < 1) throw InvalidInput("n must be >= 1");
  if (n_replications < 1) throw InvalidInput("n_replications must be >= 1");
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  if (!(ball_radius > 0.0) || !std::isfinite(ball_radius)) {
    throw InvalidInput("ball_radius must be positive");
  }
  if (mu_grid.empty()) throw InvalidInput("mu_grid must not be empty");
  for (std::size_t i = 0; i < mu_grid.size(); ++i) {
    if (!(mu_grid[i] > 0.0) || !std::isfinite(mu_grid[i])) {
      throw InvalidInput("mu_grid entries must be positive");
    }
    if (i > 0 && !(mu_grid[i] > mu_grid[i - 1])) {
      throw InvalidInput("mu_grid must be strictly increasing");
    }
  }
  if (fixed_center) require_same_kind(manifold, fixed_center->kind(), "fixed_center");
  if (truth == TruthModel::kSphereUniformBall) {
    if (!manifold.is_sphere()) {
      throw InvalidInput("truth sphere_uniform_ball needs a sphere manifold");
    }
    if (ball_radius >= M_PI / 4.0) {
      throw InvalidInput("ball_radius must be < pi/4 on the sphere");
    }
  } else {
    if (!manifold.is_spd()) {
      throw InvalidInput("truth spd_tangent_uniform_ball needs an SPD manifold");
    }
    if (center_policy != CenterPolicy::kFixed) {
      throw InvalidInput("spd_tangent_uniform_ball supports only the fixed center policy");
    }
    if (fixed_center &&
        (fixed_center->coords() - Eigen::MatrixXd::Identity(manifold.size(),
                                                            manifold.size()))
                .norm() > 0.0) {
      throw InvalidInput("spd_tangent_uniform_ball is centered at the identity");
    }
  }
}

Dataset sample_sphere_uniform_ball(const ManifoldPoint& center, double radius,
                                   int n, Rng& rng) {
  if (!center.kind().is_sphere()) throw InvalidInput("center must be on the sphere");
  if (!(radius > 0.0 && radius < M_PI)) throw InvalidInput("radius must lie in (0, pi)");
  if (n < 1) throw InvalidInput("n must be >= 1");
  const TangentFrame frame = tangent_frame(center);
  const int d = frame.dim();
  const double half_sin = std::sin(radius / 2.0);
  std::vector<ManifoldPoint> points;
  points.reserve(n);
  while (static_cast<int>(points.size()) < n) {
    double t;
    if (d == 2) {
      // 1 - cos t = U (1 - cos r), written with half angles.
      t = 2.0 * std::asin(std::sqrt(rng.uniform()) * half_sin);
    } else {
      t = radius * std::pow(rng.uniform(), 1.0 / d);
      if (t > 0.0 && rng.uniform() >= std::pow(std::sin(t) / t, d - 1)) continue;
    }
    const Eigen::VectorXd u = rng.unit_vector(d);
    points.push_back(exp_map(center, frame.vector(t * u)));
  }
  return Dataset(std::move(points), center, radius);
}

Dataset sample_spd_tangent_uniform_ball(int matrix_size, double radius, int n,
                                        Rng& rng) {
  if (!(radius > 0.0)) throw InvalidInput("radius must be positive");
  if (n < 1) throw InvalidInput("n must be >= 1");
  const ManifoldKind kind = ManifoldKind::spd(matrix_size);
  const int d = kind.dim();
  std::vector<ManifoldPoint> points;
  points.reserve(n);
  for (int i = 0; i < n; ++i) {
    const Eigen::MatrixXd v = linalg::vecd_inv(uniform_ball(d, radius, rng));
    points.push_back(make_point_unchecked(kind, linalg::sym_exp(v)));
  }
  return Dataset(std::move(points), ManifoldPoint::identity(matrix_size), radius);
}

PopulationTruth population_truth(const ExperimentConfig& config) {
  using Key = std::tuple<int, int, double>;
  static std::mutex mutex;
  static std::map<Key, PopulationTruth> cache;
  const Key key{static_cast<int>(config.truth), config.manifold.size(),
                config.ball_radius};
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  PopulationTruth truth = config.truth == TruthModel::kSphereUniformBall
                              ? sphere_truth(config.manifold.dim(), config.ball_radius)
                              : spd_truth(config.manifold.size(), config.ball_radius);
  cache.emplace(key, truth);
  return truth;
}

std::vector<AggregateRow> aggregate(const ExperimentConfig& config,
                                    const std::vector<ReplicationRecord>& records) {
  const std::size_t k = config.mu_grid.size();
  std::vector<AggregateRow> rows(k);
  std::vector<std::array<double, 8>> sums(k);
  for (std::size_t j = 0; j < k; ++j) {
    rows[j] = AggregateRow{};
    rows[j].mu = config.mu_grid[j];
    sums[j].fill(0.0);
  }
  for (const ReplicationRecord& r : records) {
    AggregateRow& row = rows[r.mu_index];
    if (r.failed) {
      ++row.failures;
      continue;
    }
    ++row.completed;
    auto& s = sums[r.mu_index];
    s[0] += r.rho_mean_dp;
    s[1] += r.rho_mean_nondp;
    s[2] += r.abs_var_err_dp;
    s[3] += r.abs_var_err_nondp;
    s[4] += r.mean_covered_dp;
    s[5] += r.mean_covered_nondp;
    s[6] += r.var_covered_dp;
    s[7] += r.var_covered_nondp;
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t j = 0; j < k; ++j) {
    AggregateRow& row = rows[j];
    const double m = row.completed;
    const auto& s = sums[j];
    auto avg = [&](double v) { return m > 0 ? v / m : nan; };
    row.md_mean_dp = avg(s[0]);
    row.md_mean_nondp = avg(s[1]);
    row.md_var_dp = avg(s[2]);
    row.md_var_nondp = avg(s[3]);
    row.coverage_mean_dp = avg(s[4]);
    row.coverage_mean_nondp = avg(s[5]);
    row.coverage_var_dp = avg(s[6]);
    row.coverage_var_nondp = avg(s[7]);
    auto se = [&](double p) { return m > 0 ? std::sqrt(p * (1.0 - p) / m) : nan; };
    row.se_mean = se(row.coverage_mean_dp);
    row.se_var = se(row.coverage_var_dp);
  }
  return rows;
}

CampaignResult run_campaign(const ExperimentConfig& config) {
  config.validate();
  CampaignResult result{config, population_truth(config), {}, {}};
  const PopulationTruth& truth = result.truth;
  const std::size_t k = config.mu_grid.size();
  const int reps = config.n_replications;
  result.records.resize(static_cast<std::size_t>(reps) * k);

  parallel_for(static_cast<std::size_t>(reps), [&](std::size_t i) {
    ReplicationRecord* out = &result.records[i * k];
    for (std::size_t j = 0; j < k; ++j) {
      out[j].replication_id = static_cast<int>(i);
      out[j].mu_index = static_cast<int>(j);
      out[j].mu = config.mu_grid[j];
    }
    auto fail_all = [&](const std::string& what) {
      for (std::size_t j = 0; j < k; ++j) {
        out[j].failed = true;
        out[j].failure = what;
      }
    };

    Rng data_rng(derive_seed(config.master_seed, i, kDataStream));
    std::optional<Dataset> data;
    std::optional<NonDpReport> nondp;
    std::optional<ManifoldPoint> eta;
    try {
      eta = replication_center(config, data_rng);
      data = config.truth == TruthModel::kSphereUniformBall
                 ? sample_sphere_uniform_ball(*eta, config.ball_radius, config.n, data_rng)
                 : sample_spd_tangent_uniform_ball(config.manifold.size(),
                                                   config.ball_radius, config.n,
                                                   data_rng);
      nondp = nondp_inference(*data, frechet_mean(*data), config.alpha);
    } catch (const std::exception& e) {
      fail_all(e.what());
      return;
    }
    const double rho_nondp = distance(nondp->solution.mean, *eta);
    const double var_err_nondp = std::abs(nondp->solution.variance - truth.variance);
    const bool mean_cov_nondp = nondp->region.contains(*eta);
    const bool var_cov_nondp = nondp->interval.contains(truth.variance);

    for (std::size_t j = 0; j < k; ++j) {
      ReplicationRecord& rec = out[j];
      rec.rho_mean_nondp = rho_nondp;
      rec.abs_var_err_nondp = var_err_nondp;
      rec.mean_covered_nondp = mean_cov_nondp;
      rec.var_covered_nondp = var_cov_nondp;
      Rng rng(derive_seed(config.master_seed, i, j + 1));
      try {
        const PipelineResult res =
            run_full_pipeline(*data, nondp->solution, config.mu_grid[j], config.alpha, rng);
        rec.rho_mean_dp = distance(res.mean.mean_dp, *eta);
        rec.abs_var_err_dp = std::abs(res.variance.variance_dp - truth.variance);
        rec.clt_statistic = res.mean.region.quadratic_form(*eta);
        rec.mean_covered_dp = rec.clt_statistic <= res.mean.region.threshold();
        rec.var_covered_dp = res.variance.interval.contains(truth.variance);
        rec.region_volume = res.mean.region.volume_factor();
        rec.repairs = res.mean.covariance.lambda_floored + res.mean.covariance.c_clipped;
      } catch (const std::exception& e) {
        rec.failed = true;
        rec.failure = e.what();
      }
    }
  });

  result.aggregates = aggregate(config, result.records);
  for (const AggregateRow& row : result.aggregates) {
    if (row.failures > 0.01 * reps) {
      std::ostringstream msg;
      msg << row.failures << " of " << reps << " replications failed at mu=" << row.mu;
      for (const ReplicationRecord& r : result.records) {
        if (r.failed && r.mu == row.mu) {
          msg << " (first failure: " << r.failure << ")";
          break;
        }
      }
      throw NumericalFailure(msg.str());
    }
  }
  return result;
}

std::vector<BudgetRow> run_budget_verification(
    const ExperimentConfig& config, const std::vector<double>& mu_grid,
    const PrivacyVerificationOptions& options) {
  if (!config.manifold.is_sphere()) {
    throw InvalidInput("budget verification is available for sphere configs only");
  }
  if (config.n < 1) throw InvalidInput("n must be >= 1");
  const double delta =
      mean_sensitivity(config.ball_radius, config.manifold.curvature_upper(), config.n)
          .delta;
  std::vector<BudgetRow> rows;
  for (std::size_t j = 0; j < mu_grid.size(); ++j) {
    if (!(mu_grid[j] > 0.0)) throw InvalidInput("mu values must be positive");
    const double sigma = delta / mu_grid[j];
    Rng rng(derive_seed(config.master_seed, 0x6275646765740000ULL, j));
    const PrivacyProfileEstimate est =
        verify_privacy_profile(config.manifold, sigma, delta, rng, options);
    rows.push_back({mu_grid[j], sigma, est.mu_star, est.mu_resolution});
  }
  return rows;
}

}  // namespace manifold_dp
