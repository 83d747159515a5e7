#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "manifold_dp/frechet.hpp"
#include "manifold_dp/inference.hpp"
#include "manifold_dp/rng.hpp"

namespace manifold_dp {

enum class TruthModel { kSphereUniformBall, kSpdTangentUniformBall };
enum class CenterPolicy { kFixed, kRandomPerReplication };

const char* to_string(TruthModel t);
const char* to_string(CenterPolicy c);

struct ExperimentConfig {
  ManifoldKind manifold = ManifoldKind::sphere(3);
  int n = 600;
  double ball_radius = M_PI / 8.0;
  std::vector<double> mu_grid{0.1, 0.2, 0.3, 0.5, 0.7, 1.0, 1.5, 2.0, 2.5};
  int n_replications = 1000;
  double alpha = 0.05;
  std::uint64_t master_seed = 20240601;
  CenterPolicy center_policy = CenterPolicy::kRandomPerReplication;
  // Used with CenterPolicy::kFixed; defaults to e_0 on the sphere and I on SPD.
  std::optional<ManifoldPoint> fixed_center;
  TruthModel truth = TruthModel::kSphereUniformBall;

  // Sphere S^2 with r = pi/8, random centers.
  static ExperimentConfig sphere_default();
  // SPD(2) with r = 1.5, fixed center I.
  static ExperimentConfig spd_default();

  // Throws InvalidInput on violated invariants.
  void validate() const;
  ManifoldPoint center_for_fixed_policy() const;
};

// Uniform on B(center, radius) with respect to the volume measure.
Dataset sample_sphere_uniform_ball(const ManifoldPoint& center, double radius,
                                   int n, Rng& rng);
// Uniform on the Frobenius ball of the given radius in T_I SPD(m), pushed
// through exp at I.
Dataset sample_spd_tangent_uniform_ball(int matrix_size, double radius, int n,
                                        Rng& rng);

// Population quantities relative to the true mean eta (the ball center).
// Lambda and C are expressed in the frame at eta (normal coordinates).
struct PopulationTruth {
  double variance;
  double sigmaF2;
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd c;
  // Monte Carlo standard error on the Lambda entries (0 when exact).
  double lambda_standard_error;
};

// Cached per (truth model, dimension, radius).
PopulationTruth population_truth(const ExperimentConfig& config);

struct ReplicationRecord {
  int replication_id = 0;
  int mu_index = 0;
  double mu = 0.0;
  bool failed = false;
  std::string failure;
  double rho_mean_nondp = 0.0;
  double rho_mean_dp = 0.0;
  double abs_var_err_nondp = 0.0;
  double abs_var_err_dp = 0.0;
  bool mean_covered_dp = false;
  bool var_covered_dp = false;
  bool mean_covered_nondp = false;
  bool var_covered_nondp = false;
  double region_volume = 0.0;
  // Quadratic form of the DP region evaluated at the true mean; approximately
  // chi-square with d degrees of freedom.
  double clt_statistic = 0.0;
  // Lambda / C eigenvalue repairs performed.
  int repairs = 0;
};

struct AggregateRow {
  double mu;
  int completed;
  int failures;
  double md_mean_dp, md_mean_nondp;
  double md_var_dp, md_var_nondp;
  double coverage_mean_dp, coverage_mean_nondp;
  double coverage_var_dp, coverage_var_nondp;
  // Binomial standard errors of the DP coverage fractions.
  double se_mean, se_var;
};

struct CampaignResult {
  ExperimentConfig config;
  PopulationTruth truth;
  std::vector<ReplicationRecord> records;  // replication-major, then mu
  std::vector<AggregateRow> aggregates;
};

// Deterministic for a given config regardless of MANIFOLD_DP_THREADS. The
// data for replication i depend on (master_seed, i) only, so the non-DP
// columns are identical across mu. Throws NumericalFailure when more than 1%
// of the replications fail at some mu.
CampaignResult run_campaign(const ExperimentConfig& config);

std::vector<AggregateRow> aggregate(const ExperimentConfig& config,
                                    const std::vector<ReplicationRecord>& records);

struct BudgetRow {
  double mu;
  double sigma;
  double mu_star;
  double mu_resolution;
};

std::vector<BudgetRow> run_budget_verification(
    const ExperimentConfig& config, const std::vector<double>& mu_grid,
    const PrivacyVerificationOptions& options = {});

}  // namespace manifold_dp
