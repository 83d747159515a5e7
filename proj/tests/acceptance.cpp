#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "manifold_dp/chart.hpp"
#include "manifold_dp/io.hpp"
#include "manifold_dp/parallel.hpp"
#include "manifold_dp/privacy.hpp"
#include "manifold_dp/simharness.hpp"
#include "manifold_dp/stats.hpp"
#include "support.hpp"

using namespace manifold_dp;
using namespace testing_support;
namespace fs = std::filesystem;

namespace {

std::map<int, std::pair<bool, std::string>> results;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  results[id] = {ok, what + " (" + detail + ")"};
  std::fprintf(stderr, "finished criterion %d\n", id);
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

const AggregateRow& row_at(const CampaignResult& res, double mu) {
  for (const AggregateRow& r : res.aggregates)
    if (std::abs(r.mu - mu) < 1e-12) return r;
  throw std::runtime_error("mu not in grid");
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string campaign_csv_bytes(const CampaignResult& res, const fs::path& dir) {
  fs::create_directories(dir);
  io::write_records(dir / "records.csv", res.records);
  io::write_mean_table(dir / "mean_table.csv", res.aggregates);
  io::write_variance_table(dir / "variance_table.csv", res.aggregates);
  return slurp(dir / "records.csv") + slurp(dir / "mean_table.csv") +
         slurp(dir / "variance_table.csv");
}

void sphere_campaign_criteria(const CampaignResult& res, double seconds) {
  {
    std::string detail;
    bool ok = true;
    for (double mu : {0.5, 1.0, 2.0}) {
      const double cov = row_at(res, mu).coverage_mean_dp;
      ok = ok && std::abs(cov - 0.95) <= 0.025;
      detail += "mu=" + fmt("%g", mu) + " cov=" + fmt("%.3f", cov) + "; ";
    }
    detail += "campaign " + fmt("%.1f", seconds) + " s";
    report(1, ok, "sphere DP mean coverage within 0.95 +/- 0.025", detail);
  }
  {
    const AggregateRow& lo = row_at(res, 0.1);
    const AggregateRow& hi = row_at(res, 2.5);
    const double r_lo = lo.md_mean_dp / lo.md_mean_nondp;
    const double r_hi = hi.md_mean_dp / hi.md_mean_nondp;
    const bool ok = r_lo >= 1.5 && r_lo <= 2.1 && r_hi <= 1.05;
    report(2, ok, "sphere mean MD ratio in [1.5, 2.1] at mu=0.1 and <= 1.05 at mu=2.5",
           "ratio(0.1)=" + fmt("%.3f", r_lo) + " ratio(2.5)=" + fmt("%.3f", r_hi) +
               " md_dp(0.1)=" + fmt("%.5f", lo.md_mean_dp) +
               " md_nondp=" + fmt("%.5f", lo.md_mean_nondp));
  }
  {
    int inversions = 0;
    for (std::size_t k = 1; k < res.aggregates.size(); ++k)
      if (res.aggregates[k].md_var_dp > res.aggregates[k - 1].md_var_dp) ++inversions;
    const double c05 = row_at(res, 0.5).coverage_var_dp;
    const double c2 = row_at(res, 2.0).coverage_var_dp;
    const bool ok = inversions <= 1 && std::abs(c05 - 0.95) <= 0.03 && std::abs(c2 - 0.95) <= 0.03;
    report(3, ok, "sphere variance MD monotone and coverage within 0.95 +/- 0.03",
           "inversions=" + std::to_string(inversions) + " cov(0.5)=" + fmt("%.3f", c05) +
               " cov(2)=" + fmt("%.3f", c2));
  }
  {
    std::vector<double> stat;
    for (const ReplicationRecord& r : res.records)
      if (!r.failed && std::abs(r.mu - 1.0) < 1e-12) stat.push_back(r.clt_statistic);
    const int d = res.config.manifold.dim();
    const double ks = stats::ks_statistic(stat, [&](double x) {
      return x <= 0 ? 0.0 : stats::chi_square_cdf(d, x);
    });
    const double p = stats::ks_pvalue(ks, static_cast<double>(stat.size()));
    report(9, p > 0.01, "CLT statistic at mu=1 passes chi-square KS at 1%",
           "n=" + std::to_string(stat.size()) + " KS=" + fmt("%.4f", ks) + " p=" + fmt("%.3f", p));
  }
}

void spd_campaign_criterion() {
  Timer t;
  const CampaignResult res = run_campaign(ExperimentConfig::spd_default());
  const AggregateRow& lo = row_at(res, 0.1);
  const double ratio = lo.md_mean_dp / lo.md_mean_nondp;
  bool ok = ratio >= 3.0 && ratio <= 4.6;
  double worst = 0.0;
  for (const AggregateRow& r : res.aggregates) {
    if (r.mu < 0.5) continue;
    worst = std::max(worst, std::abs(r.coverage_mean_dp - 0.95));
  }
  ok = ok && worst <= 0.03;
  report(4, ok, "SPD mean MD ratio in [3.0, 4.6] at mu=0.1, coverage within 0.03 for mu >= 0.5",
         "ratio=" + fmt("%.3f", ratio) + " worst coverage gap=" + fmt("%.3f", worst) + "; " +
             fmt("%.1f", t.seconds()) + " s");
}

void mu_star_criterion() {
  const ExperimentConfig cfg = ExperimentConfig::sphere_default();
  PrivacyVerificationOptions o;
  o.n_mc = 2000000;
  std::string detail;
  bool ok = true;
  double slowest = 0.0;
  for (double mu : {0.1, 0.3, 1.0, 2.0}) {
    Timer t;
    try {
      const BudgetRow row = run_budget_verification(cfg, {mu}, o).front();
      const bool good = row.mu_star >= 0.97 * mu && row.mu_star <= 1.03 * mu;
      ok = ok && good;
      detail += "mu=" + fmt("%g", mu) + " mu*=" + fmt("%.4f", row.mu_star) + "; ";
    } catch (const std::exception& e) {
      ok = false;
      detail += "mu=" + fmt("%g", mu) + " error: " + e.what() + "; ";
    }
    slowest = std::max(slowest, t.seconds());
  }
  ok = ok && slowest < 300.0;
  report(5, ok, "mu* within [0.97 mu, 1.03 mu] at n_mc=2e6",
         detail + "slowest " + fmt("%.1f", slowest) + " s");
}

void geometry_criterion() {
  Rng rng(6001);
  constexpr int kCases = 10000;
  double round_trip = 0.0, isometry = 0.0, vecd_gap = 0.0, dexp = 0.0;
  for (int i = 0; i < kCases; ++i) {
    const bool sphere = i % 2 == 0;
    const ManifoldPoint p = sphere ? random_sphere_point(3 + i % 4, rng)
                                   : random_spd_point(2 + i % 3, 1.0, rng);
    const ManifoldPoint q = random_point_near(p, sphere ? M_PI / 2 : 3.0, rng);
    round_trip = std::max(round_trip, (exp_map(p, log_map(p, q)).coords() - q.coords()).norm());

    double moved;
    if (sphere) {
      const Eigen::MatrixXd r = random_rotation(p.kind().size(), rng);
      moved = distance(ManifoldPoint::projected(p.kind(), r * p.vector()),
                       ManifoldPoint::projected(q.kind(), r * q.vector()));
    } else {
      const Eigen::MatrixXd a = random_invertible(p.kind().size(), rng);
      moved = distance(ManifoldPoint::projected(p.kind(), a * p.coords() * a.transpose()),
                       ManifoldPoint::projected(q.kind(), a * q.coords() * a.transpose()));
    }
    isometry = std::max(isometry, std::abs(moved - distance(p, q)));

    const int m = 2 + i % 4;
    const Eigen::MatrixXd s = random_symmetric(m, 1.0, rng), u = random_symmetric(m, 1.0, rng);
    const double frob = (s.cwiseProduct(u)).sum();
    vecd_gap = std::max(vecd_gap, std::abs(vecd(s).dot(vecd(u)) - frob) / std::max(1.0, std::abs(frob)));

    const ManifoldPoint base = random_spd_point(m, 0.6, rng);
    const Eigen::MatrixXd v = base.sqrt() * random_symmetric(m, 1.0, rng) * base.sqrt();
    const Eigen::MatrixXd w = base.sqrt() * random_symmetric(m, 1.0, rng) * base.sqrt();
    const double h = 1e-6;
    const Eigen::MatrixXd fd = (exp_map(base, TangentVector(base, v + h * w)).coords() -
                                exp_map(base, TangentVector(base, v - h * w)).coords()) /
                               (2 * h);
    const TangentVector d = differential_of_exp(base, TangentVector(base, v), TangentVector(base, w));
    dexp = std::max(dexp, (d.vec() - fd).norm() / fd.norm());
  }
  const bool ok = round_trip <= 1e-9 && isometry <= 1e-9 && vecd_gap <= 1e-14 && dexp <= 1e-5;
  report(6, ok, "geometry suite over 1e4 cases",
         "round trip " + fmt("%.2e", round_trip) + ", isometry " + fmt("%.2e", isometry) +
             ", vecd " + fmt("%.2e", vecd_gap) + ", dexp " + fmt("%.2e", dexp));
}

void derivative_criterion() {
  Rng rng(7001);
  constexpr int kCases = 1000;
  double grad_gap = 0.0, hess_gap = 0.0;
  for (int i = 0; i < kCases; ++i) {
    const ManifoldPoint base = (i % 2) ? random_sphere_point(3 + i % 3, rng)
                                       : random_spd_point(2 + i % 2, 0.4, rng);
    const Chart chart(base);
    const double scale = base.kind().is_sphere() ? 0.2 : 0.4;
    const Eigen::VectorXd u = scale * rng.normal_vector(chart.dim());
    const Eigen::VectorXd theta = scale * rng.normal_vector(chart.dim());
    const Eigen::VectorXd g = psi_gradient(chart.from_chart(u), theta, chart);
    Eigen::VectorXd fd(chart.dim());
    const double h = 1e-6;
    for (int k = 0; k < chart.dim(); ++k) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp(k) += h;
      tm(k) -= h;
      fd(k) = (chart_squared_distance(u, tp, chart) - chart_squared_distance(u, tm, chart)) / (2 * h);
    }
    grad_gap = std::max(grad_gap, (g - fd).norm() / std::max(1.0, fd.norm()));

    const Chart sphere_chart(random_sphere_point(3 + i % 3, rng));
    const int d = sphere_chart.dim();
    const double t = 0.05 + (M_PI / 2 - 0.05) * rng.uniform();
    const Eigen::VectorXd dir = rng.unit_vector(d);
    const ManifoldPoint x = sphere_chart.from_chart(t * dir);
    const Eigen::MatrixXd radial = dir * dir.transpose();
    const Eigen::MatrixXd analytic =
        2 * radial + 2 * t / std::tan(t) * (Eigen::MatrixXd::Identity(d, d) - radial);
    const Eigen::MatrixXd hess = psi_hessian(x, Eigen::VectorXd::Zero(d), sphere_chart);
    hess_gap = std::max(hess_gap, (hess - analytic).cwiseAbs().maxCoeff());
  }
  report(7, grad_gap <= 1e-5 && hess_gap <= 1e-4, "gradient and Hessian oracles over 1e3 cases",
         "gradient " + fmt("%.2e", grad_gap) + ", Hessian " + fmt("%.2e", hess_gap));
}

void sampler_criterion() {
  constexpr int kDraws = 100000;
  double worst_ks = 0.0;
  for (int d : {2, 3}) {
    for (double sigma : {0.05, 0.2, 0.5}) {
      Rng rng(derive_seed(8001, d, static_cast<std::uint64_t>(sigma * 1000)));
      const ManifoldPoint c = random_sphere_point(d + 1, rng);
      std::vector<double> t(kDraws);
      for (double& x : t) x = distance(sample_riemannian_gaussian(c, sigma, rng), c);
      const RgRadialCdf cdf(d, sigma);
      worst_ks = std::max(worst_ks, stats::ks_statistic(t, [&](double x) { return cdf(x); }));
    }
  }
  Rng rng(8002);
  const ManifoldPoint foot = random_spd_point(2, 0.3, rng);
  const ManifoldPoint center = random_point_near(foot, 0.8, rng);
  const TangentFrame frame = tangent_frame(foot);
  const double sigma = 0.25;
  Eigen::MatrixXd z(frame.dim(), kDraws);
  for (int i = 0; i < kDraws; ++i)
    z.col(i) = frame.coordinates(log_map(foot, sample_exp_wrapped_gaussian(foot, center, sigma, rng)));
  const Eigen::MatrixXd centered = z.colwise() - z.rowwise().mean();
  const Eigen::MatrixXd cov = centered * centered.transpose() / (kDraws - 1);
  const Eigen::MatrixXd target =
      sigma * sigma * Eigen::MatrixXd::Identity(frame.dim(), frame.dim());
  const double rel = (cov - target).norm() / target.norm();
  report(8, worst_ks < 0.01 && rel <= 0.02, "RG radial KS and EWG pullback covariance",
         "worst KS " + fmt("%.4f", worst_ks) + ", EWG covariance gap " + fmt("%.4f", rel));
}

}  // namespace

int main() {
  const char* threads_env = std::getenv("MANIFOLD_DP_THREADS");
  const std::string threads = threads_env ? threads_env : std::to_string(worker_count());
  const fs::path scratch = fs::temp_directory_path() / "manifold_dp_acceptance";
  fs::remove_all(scratch);

  Timer t1;
  const ExperimentConfig sphere = ExperimentConfig::sphere_default();
  const CampaignResult first = run_campaign(sphere);
  sphere_campaign_criteria(first, t1.seconds());
  spd_campaign_criterion();
  mu_star_criterion();
  geometry_criterion();
  derivative_criterion();
  sampler_criterion();

  const std::string other = threads == "1" ? "3" : "1";
  setenv("MANIFOLD_DP_THREADS", other.c_str(), 1);
  const CampaignResult second = run_campaign(sphere);
  setenv("MANIFOLD_DP_THREADS", threads.c_str(), 1);
  const bool same = campaign_csv_bytes(first, scratch / "a") == campaign_csv_bytes(second, scratch / "b");
  report(10, same, "campaign CSVs byte-identical across worker counts",
         "workers " + threads + " vs " + other);

  fs::remove_all(scratch);
  int passed = 0;
  for (const auto& [id, r] : results) {
    std::printf("criterion %2d: %s  %s\n", id, r.first ? "PASS" : "FAIL", r.second.c_str());
    passed += r.first;
  }
  std::printf("%d of %zu criteria passed\n", passed, results.size());
  return passed == static_cast<int>(results.size()) ? 0 : 1;
}
