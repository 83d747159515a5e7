#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/io.hpp"
#include "manifold_dp/linalg.hpp"

namespace fs = std::filesystem;
namespace io = manifold_dp::io;
using manifold_dp::InvalidInput;
using manifold_dp::ManifoldKind;
using manifold_dp::ManifoldPoint;
using nlohmann::json;

namespace {

ManifoldKind parse_kind(const std::string& text) {
  const auto colon = text.find(':');
  const std::string name = text.substr(0, colon);
  int size = 0;
  if (colon != std::string::npos) {
    try {
      size = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
      throw InvalidInput("--manifold: cannot read the dimension in '" + text + "'");
    }
  }
  if (name == "sphere") return ManifoldKind::sphere(size ? size : 3);
  if (name == "spd") return ManifoldKind::spd(size ? size : 2);
  throw InvalidInput("--manifold must be sphere[:ambient_dim] or spd[:matrix_size]");
}

ManifoldPoint point_from_json(const ManifoldKind& kind, const json& j) {
  Eigen::MatrixXd m;
  if (kind.is_sphere()) {
    const auto v = j.get<std::vector<double>>();
    m = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  } else {
    const auto rows = j.get<std::vector<std::vector<double>>>();
    m.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t k = 0; k < rows[i].size(); ++k) m(i, k) = rows[i][k];
  }
  return ManifoldPoint::projected(kind, m);
}

manifold_dp::ConfidenceRegion region_from_json(const ManifoldKind& kind, const json& j) {
  const auto center = j.at("center").get<std::vector<double>>();
  const auto gamma = j.at("gamma_vecd").get<std::vector<double>>();
  return manifold_dp::ConfidenceRegion(
      manifold_dp::Chart(point_from_json(kind, j.at("chart_base"))),
      Eigen::Map<const Eigen::VectorXd>(center.data(), static_cast<Eigen::Index>(center.size())),
      manifold_dp::linalg::vecd_inv(Eigen::Map<const Eigen::VectorXd>(
          gamma.data(), static_cast<Eigen::Index>(gamma.size()))),
      j.at("alpha").get<double>());
}

ManifoldKind kind_from_json(const json& j) {
  if (j.contains("sphere")) return ManifoldKind::sphere(j["sphere"].at("ambient_dim").get<int>());
  return ManifoldKind::spd(j.at("spd").at("matrix_size").get<int>());
}

int run_simulate(const fs::path& config_path, const fs::path& out) {
  const manifold_dp::ExperimentConfig config = io::load_config(config_path);
  io::prepare_output_dir(out);
  const manifold_dp::CampaignResult result = manifold_dp::run_campaign(config);
  io::write_json(out / "config.json", io::config_to_json(config));
  io::write_records(out / "records.csv", result.records);
  io::write_mean_table(out / "mean_table.csv", result.aggregates);
  io::write_variance_table(out / "variance_table.csv", result.aggregates);
  io::write_json(out / "report.json", io::campaign_report(result));
  io::write_manifest(out,
                     {"config.json", "records.csv", "mean_table.csv",
                      "variance_table.csv", "report.json"},
                     io::config_hash(config), config.master_seed);
  return 0;
}

struct EstimateArgs {
  std::string data, manifold, center, out, center_policy = "declared";
  double radius = 0.0, mu = 0.0, alpha = 0.05;
  std::uint64_t seed = 0;
};

int run_estimate(const EstimateArgs& a) {
  const ManifoldKind kind = parse_kind(a.manifold);
  io::TruncationCenter policy;
  if (a.center_policy == "declared") {
    policy = io::TruncationCenter::kDeclared;
  } else if (a.center_policy == "paper-compat") {
    policy = io::TruncationCenter::kPaperCompat;
  } else {
    throw InvalidInput("--center-policy must be declared or paper-compat");
  }
  const std::vector<ManifoldPoint> centers = io::read_points(a.center, kind);
  if (centers.size() != 1) throw InvalidInput("--center file must hold exactly one row");
  const io::IngestResult ingest =
      io::ingest_dataset(a.data, kind, centers.front(), a.radius, policy);
  for (const std::string& w : ingest.warnings) std::cerr << "warning: " << w << '\n';

  manifold_dp::Rng rng(a.seed);
  const manifold_dp::FrechetSolution solution = manifold_dp::frechet_mean(ingest.dataset);
  const manifold_dp::NonDpReport nondp =
      manifold_dp::nondp_inference(ingest.dataset, solution, a.alpha);
  const manifold_dp::PipelineResult dp =
      manifold_dp::run_full_pipeline(ingest.dataset, solution, a.mu, a.alpha, rng);

  io::prepare_output_dir(a.out);
  const fs::path out(a.out);
  json report = io::estimate_report(ingest.dataset, nondp, dp, a.alpha, ingest);
  report["seed"] = a.seed;
  report["mu"] = a.mu;
  report["center_policy"] = a.center_policy;
  io::write_json(out / "report.json", report);
  io::write_boundary_cloud(out / "region_dp.csv", io::region_boundary_cloud(dp.mean.region));
  io::write_boundary_cloud(out / "region_nondp.csv", io::region_boundary_cloud(nondp.region));
  io::write_manifest(out, {"report.json", "region_dp.csv", "region_nondp.csv"},
                     io::sha256_file(out / "report.json"), a.seed);
  return 0;
}

int run_verify_budget(const fs::path& config_path, const fs::path& out, long n_mc,
                      const std::vector<double>& mus) {
  const manifold_dp::ExperimentConfig config = io::load_config(config_path);
  manifold_dp::PrivacyVerificationOptions options;
  options.n_mc = n_mc;
  io::prepare_output_dir(out);
  const auto rows = manifold_dp::run_budget_verification(
      config, mus.empty() ? config.mu_grid : mus, options);
  io::write_budget_table(out / "budget_table.csv", rows);
  io::write_manifest(out, {"budget_table.csv"}, io::config_hash(config),
                     config.master_seed);
  return 0;
}

int run_report(const fs::path& in, const fs::path& out) {
  if (!fs::is_directory(in)) throw InvalidInput("--in " + in.string() + " is not a directory");
  std::vector<std::string> written;
  std::string hash;
  std::uint64_t seed = 0;
  const bool campaign = fs::exists(in / "records.csv") && fs::exists(in / "config.json");
  json estimate;
  if (fs::exists(in / "report.json")) {
    std::ifstream f(in / "report.json");
    try {
      f >> estimate;
    } catch (const json::exception&) {
      throw InvalidInput((in / "report.json").string() + " is not valid JSON");
    }
    if (!estimate.contains("dp")) estimate = json();
  }
  if (!campaign && estimate.is_null()) {
    throw InvalidInput("no campaign records or estimate report found in " + in.string());
  }
  io::prepare_output_dir(out);
  if (campaign) {
    const manifold_dp::ExperimentConfig config = io::load_config(in / "config.json");
    const auto rows =
        manifold_dp::aggregate(config, io::read_records(in / "records.csv", config));
    io::write_mean_table(out / "mean_table.csv", rows);
    io::write_variance_table(out / "variance_table.csv", rows);
    written.insert(written.end(), {"mean_table.csv", "variance_table.csv"});
    hash = io::config_hash(config);
    seed = config.master_seed;
  }
  if (!estimate.is_null()) {
    try {
      const ManifoldKind kind = kind_from_json(estimate.at("manifold"));
      io::write_boundary_cloud(
          out / "region_dp.csv",
          io::region_boundary_cloud(region_from_json(kind, estimate.at("dp").at("region"))));
      io::write_boundary_cloud(
          out / "region_nondp.csv",
          io::region_boundary_cloud(region_from_json(kind, estimate.at("nondp").at("region"))));
    } catch (const json::exception& e) {
      throw InvalidInput("report.json is missing region data: " + std::string(e.what()));
    }
    written.insert(written.end(), {"region_dp.csv", "region_nondp.csv"});
    if (hash.empty()) hash = io::sha256_file(in / "report.json");
    if (estimate.contains("seed")) seed = estimate["seed"].get<std::uint64_t>();
  }
  io::write_manifest(out, written, hash, seed);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private Fréchet means and variances on the sphere and SPD matrices"};
  app.require_subcommand(1);

  std::string config, out, in;
  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo coverage campaign");
  simulate->add_option("--config", config, "JSON experiment config")->required();
  simulate->add_option("--out", out, "Output directory")->required();

  EstimateArgs est;
  auto* estimate = app.add_subcommand("estimate", "DP estimation and inference on a dataset");
  estimate->add_option("--data", est.data, "CSV of points, one per row")->required();
  estimate->add_option("--manifold", est.manifold, "sphere[:ambient_dim] or spd[:matrix_size]")
      ->required();
  estimate->add_option("--center", est.center, "CSV holding the ball center")->required();
  estimate->add_option("--radius", est.radius, "Ball radius")->required();
  estimate->add_option("--mu", est.mu, "Total GDP budget")->required();
  estimate->add_option("--alpha", est.alpha, "1 - confidence level");
  estimate->add_option("--seed", est.seed, "Random seed")->required();
  estimate->add_option("--out", est.out, "Output directory")->required();
  estimate->add_option("--center-policy", est.center_policy,
                       "declared (default) or paper-compat");

  long n_mc = 2'000'000;
  std::vector<double> mus;
  auto* verify = app.add_subcommand("verify-budget", "Monte Carlo check of the mean mechanism's GDP level");
  verify->add_option("--config", config, "JSON experiment config")->required();
  verify->add_option("--out", out, "Output directory")->required();
  verify->add_option("--n-mc", n_mc, "Monte Carlo draws per mu");
  verify->add_option("--mu", mus, "mu values (default: the config grid)");

  auto* report = app.add_subcommand("report", "Render tables and region boundary clouds");
  report->add_option("--in", in, "Directory written by simulate or estimate")->required();
  report->add_option("--out", out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }

  try {
    if (*simulate) return run_simulate(config, out);
    if (*estimate) return run_estimate(est);
    if (*verify) return run_verify_budget(config, out, n_mc, mus);
    if (*report) return run_report(in, out);
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const manifold_dp::NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
