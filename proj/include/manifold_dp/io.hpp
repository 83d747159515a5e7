#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "manifold_dp/inference.hpp"
#include "manifold_dp/simharness.hpp"

namespace manifold_dp::io {

namespace fs = std::filesystem;

inline constexpr const char* kToolVersion = "1.0.0";

// Shortest decimal string that parses back to the same double.
std::string format_double(double x);
// Strict parse of a whole field; throws InvalidInput.
double parse_double(const std::string& field);

// ---------------------------------------------------------------------------
// Configuration

// Schema: {manifold: {"sphere": {ambient_dim}} | {"spd": {matrix_size}}, n,
// ball_radius, mu_grid, n_replications, alpha, master_seed, center_policy,
// truth}. Missing fields take the defaults of the chosen manifold; unknown
// fields are rejected.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const fs::path& path);
nlohmann::json config_to_json(const ExperimentConfig& config);
// SHA-256 of the canonical JSON serialization.
std::string config_hash(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Datasets

enum class TruncationCenter { kDeclared, kPaperCompat };

struct IngestResult {
  Dataset dataset;
  int truncated = 0;
  std::vector<std::string> warnings;
};

// Reads one point per row: d+1 coordinates for the sphere, m^2 row-major
// entries for SPD. An optional header line is recognized when none of its
// fields is numeric. Errors name the 1-based data row.
std::vector<ManifoldPoint> read_points(const fs::path& path, const ManifoldKind& kind);

// Moves points outside B(center, radius) onto its boundary along the geodesic
// from the center. Returns the number of points moved.
int truncate_to_ball(std::vector<ManifoldPoint>& points,
                     const ManifoldPoint& center, double radius);

// kDeclared truncates around the supplied center. kPaperCompat recenters at
// the sample Fréchet mean of the raw rows first, which depends on the data
// and is not covered by the privacy guarantee; a warning says so.
IngestResult ingest_dataset(const fs::path& path, const ManifoldKind& kind,
                            const ManifoldPoint& center, double radius,
                            TruncationCenter policy = TruncationCenter::kDeclared);

void write_points(const fs::path& path, const std::vector<ManifoldPoint>& points);

// ---------------------------------------------------------------------------
// Results

struct BoundaryCloud {
  Eigen::VectorXd center;
  // Slice label per point: "ellipsoid" for d <= 3, "axes_i_j" otherwise.
  std::vector<std::string> slice;
  std::vector<Eigen::VectorXd> points;
};

// Points on {theta : quadratic form = threshold}. For d <= 3 a dense surface
// grid; for d > 3 the three pairwise planes of the top principal axes.
BoundaryCloud region_boundary_cloud(const ConfidenceRegion& region,
                                    int resolution = 64);

struct EigenSummary {
  double lambda[3];      // leading eigenvalues of Gamma, NaN when d < 3
  double explained;      // their share of the trace
  double radius;         // trace^{1/2}
  double volume;         // det^{1/2}
  double distortion;     // rho(non-DP mean, DP mean)
};
EigenSummary eigen_summary(const Eigen::MatrixXd& gamma, double distortion);

void write_boundary_cloud(const fs::path& path, const BoundaryCloud& cloud);
void write_mean_table(const fs::path& path, const std::vector<AggregateRow>& rows);
void write_variance_table(const fs::path& path, const std::vector<AggregateRow>& rows);
void write_records(const fs::path& path, const std::vector<ReplicationRecord>& records);
// Inverse of write_records; mu_index is recovered from the config grid.
std::vector<ReplicationRecord> read_records(const fs::path& path,
                                            const ExperimentConfig& config);
void write_budget_table(const fs::path& path, const std::vector<BudgetRow>& rows);

nlohmann::json campaign_report(const CampaignResult& result);
nlohmann::json estimate_report(const Dataset& data, const NonDpReport& nondp,
                               const PipelineResult& dp, double alpha,
                               const IngestResult& ingest);

std::string sha256_file(const fs::path& path);
void write_json(const fs::path& path, const nlohmann::json& doc);

// Writes manifest.json listing every file with its SHA-256.
nlohmann::json write_manifest(const fs::path& dir, const std::vector<std::string>& files,
                              const std::string& config_hash,
                              std::uint64_t master_seed);

// Throws InvalidInput when the directory cannot be created or written.
void prepare_output_dir(const fs::path& dir);

}  // namespace manifold_dp::io
