#include "manifold_dp/io.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/linalg.hpp"

namespace manifold_dp::io {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool is_number(const std::string& field) {
  try {
    parse_double(field);
    return true;
  } catch (const InvalidInput&) {
    return false;
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidInput("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const fs::path& path) {
  out.flush();
  if (!out) throw InvalidInput("failed while writing " + path.string());
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json point_json(const ManifoldPoint& p) {
  return p.kind().is_sphere() ? vector_json(p.vector()) : matrix_json(p.coords());
}

json kind_json(const ManifoldKind& kind) {
  return kind.is_sphere() ? json{{"sphere", {{"ambient_dim", kind.size()}}}}
                          : json{{"spd", {{"matrix_size", kind.size()}}}};
}

json summary_json(const EigenSummary& s) {
  auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
  return {{"lambda1", num(s.lambda[0])}, {"lambda2", num(s.lambda[1])},
          {"lambda3", num(s.lambda[2])}, {"explained_ratio", num(s.explained)},
          {"rad", num(s.radius)},        {"vol", num(s.volume)},
          {"dist", num(s.distortion)}};
}

json region_json(const ConfidenceRegion& region) {
  return {{"chart_base", point_json(region.chart().base())},
          {"center", vector_json(region.center())},
          {"gamma_vecd", vector_json(linalg::vecd(region.gamma()))},
          {"alpha", region.alpha()},
          {"threshold", region.threshold()}};
}

json ledger_json(const PrivacyBudget& budget) {
  json entries = json::array();
  for (const auto& e : budget.ledger()) {
    entries.push_back({{"mechanism", e.mechanism}, {"mu", e.mu}});
  }
  return {{"mu", budget.mu()}, {"spent", budget.spent()}, {"releases", entries}};
}

json sensitivity_json(const SensitivityRecord& s) {
  return {{"formula", to_string(s.formula)}, {"delta", s.delta}, {"inputs", s.inputs}};
}

template <typename T>
T field(const json& doc, const char* key) {
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidInput(std::string("config field '") + key + "' has the wrong type");
  }
}

ManifoldPoint point_from_flat(const ManifoldKind& kind, const std::vector<double>& v,
                              const std::string& where) {
  if (kind.is_sphere()) {
    if (static_cast<int>(v.size()) != kind.size()) {
      throw InvalidInput(where + ": expected " + std::to_string(kind.size()) +
                         " coordinates, got " + std::to_string(v.size()));
    }
    Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(v.data(), kind.size());
    const double norm = x.norm();
    if (!(std::abs(norm - 1.0) <= 1e-6)) {
      throw InvalidInput(where + ": vector norm " + format_double(norm) +
                         " is not within 1e-6 of 1");
    }
    return ManifoldPoint::projected(kind, x);
  }
  const int m = kind.size();
  if (static_cast<int>(v.size()) != m * m) {
    throw InvalidInput(where + ": expected " + std::to_string(m * m) +
                       " matrix entries, got " + std::to_string(v.size()));
  }
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) a(i, j) = v[static_cast<std::size_t>(i * m + j)];
  if (!a.allFinite()) throw InvalidInput(where + ": non-finite matrix entry");
  if (linalg::asymmetry(a) > 1e-8) {
    throw InvalidInput(where + ": matrix is not symmetric (relative asymmetry " +
                       format_double(linalg::asymmetry(a)) + ")");
  }
  try {
    return ManifoldPoint::projected(kind, a);
  } catch (const InvalidInput& e) {
    throw InvalidInput(where + ": " + e.what());
  }
}

std::vector<double> flatten(const ManifoldPoint& p) {
  const Eigen::MatrixXd& c = p.coords();
  std::vector<double> out;
  if (p.kind().is_sphere()) {
    for (Eigen::Index i = 0; i < c.rows(); ++i) out.push_back(c(i, 0));
  } else {
    for (Eigen::Index i = 0; i < c.rows(); ++i)
      for (Eigen::Index j = 0; j < c.cols(); ++j) out.push_back(c(i, j));
  }
  return out;
}

std::string utc_now() {
  const std::time_t t =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

void write_table(const fs::path& path, const std::vector<AggregateRow>& rows,
                 bool mean) {
  std::ofstream out = open_output(path);
  out << "mu,md_dp,md_nondp,coverage_dp,coverage_nondp,se\n";
  for (const AggregateRow& r : rows) {
    out << format_double(r.mu) << ','
        << format_double(mean ? r.md_mean_dp : r.md_var_dp) << ','
        << format_double(mean ? r.md_mean_nondp : r.md_var_nondp) << ','
        << format_double(mean ? r.coverage_mean_dp : r.coverage_var_dp) << ','
        << format_double(mean ? r.coverage_mean_nondp : r.coverage_var_nondp) << ','
        << format_double(mean ? r.se_mean : r.se_var) << '\n';
  }
  finish(out, path);
}

constexpr const char* kRecordHeader =
    "replication_id,mu,failed,rho_mean_nondp,rho_mean_dp,abs_var_err_nondp,"
    "abs_var_err_dp,mean_covered_dp,var_covered_dp,mean_covered_nondp,"
    "var_covered_nondp,region_volume,clt_statistic,repairs";

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  const std::string f = trim(text);
  double value = 0.0;
  const char* begin = f.data();
  const char* end = f.data() + f.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  if (f.empty() || res.ec != std::errc() || res.ptr != end) {
    throw InvalidInput("'" + f + "' is not a number");
  }
  return value;
}

// ---------------------------------------------------------------------------

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object()) throw InvalidInput("config must be a JSON object");
  static const std::set<std::string> known{
      "manifold", "n",           "ball_radius",   "mu_grid", "n_replications",
      "alpha",    "master_seed", "center_policy", "truth"};
  for (const auto& item : doc.items()) {
    if (!known.count(item.key())) {
      throw InvalidInput("unknown config field '" + item.key() + "'");
    }
  }
  ExperimentConfig c = ExperimentConfig::sphere_default();
  if (doc.contains("manifold")) {
    const json& m = doc["manifold"];
    if (!m.is_object() || m.size() != 1) {
      throw InvalidInput("config field 'manifold' must be {\"sphere\": {...}} or {\"spd\": {...}}");
    }
    if (m.contains("sphere")) {
      const json& s = m["sphere"];
      const int ambient = s.contains("ambient_dim") ? field<int>(s, "ambient_dim") : 3;
      c.manifold = ManifoldKind::sphere(ambient);
    } else if (m.contains("spd")) {
      const json& s = m["spd"];
      const int size = s.contains("matrix_size") ? field<int>(s, "matrix_size") : 2;
      c = ExperimentConfig::spd_default();
      c.manifold = ManifoldKind::spd(size);
    } else {
      throw InvalidInput("config field 'manifold' must name 'sphere' or 'spd'");
    }
  }
  if (doc.contains("n")) c.n = field<int>(doc, "n");
  if (doc.contains("ball_radius")) c.ball_radius = field<double>(doc, "ball_radius");
  if (doc.contains("mu_grid")) c.mu_grid = field<std::vector<double>>(doc, "mu_grid");
  if (doc.contains("n_replications")) c.n_replications = field<int>(doc, "n_replications");
  if (doc.contains("alpha")) c.alpha = field<double>(doc, "alpha");
  if (doc.contains("master_seed")) {
    if (!doc["master_seed"].is_number_unsigned()) {
      throw InvalidInput("config field 'master_seed' must be a nonnegative integer");
    }
    c.master_seed = doc["master_seed"].get<std::uint64_t>();
  }
  if (doc.contains("center_policy")) {
    const json& p = doc["center_policy"];
    if (p.is_string() && p == "random_per_replication") {
      c.center_policy = manifold_dp::CenterPolicy::kRandomPerReplication;
      c.fixed_center.reset();
    } else if (p.is_string() && p == "fixed") {
      c.center_policy = manifold_dp::CenterPolicy::kFixed;
      c.fixed_center.reset();
    } else if (p.is_object() && p.size() == 1 && p.contains("fixed")) {
      c.center_policy = manifold_dp::CenterPolicy::kFixed;
      c.fixed_center = point_from_flat(
          c.manifold, field<std::vector<double>>(p, "fixed"), "center_policy.fixed");
    } else {
      throw InvalidInput(
          "config field 'center_policy' must be \"fixed\", "
          "\"random_per_replication\" or {\"fixed\": [coordinates]}");
    }
  }
  if (doc.contains("truth")) {
    const std::string t = field<std::string>(doc, "truth");
    if (t == "sphere_uniform_ball") {
      c.truth = TruthModel::kSphereUniformBall;
    } else if (t == "spd_tangent_uniform_ball") {
      c.truth = TruthModel::kSpdTangentUniformBall;
    } else {
      throw InvalidInput("config field 'truth' must be sphere_uniform_ball or "
                         "spd_tangent_uniform_ball");
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw InvalidInput("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

json config_to_json(const ExperimentConfig& c) {
  json policy;
  if (c.center_policy == manifold_dp::CenterPolicy::kRandomPerReplication) {
    policy = "random_per_replication";
  } else if (c.fixed_center) {
    policy = {{"fixed", flatten(*c.fixed_center)}};
  } else {
    policy = "fixed";
  }
  return {{"manifold", kind_json(c.manifold)},
          {"n", c.n},
          {"ball_radius", c.ball_radius},
          {"mu_grid", c.mu_grid},
          {"n_replications", c.n_replications},
          {"alpha", c.alpha},
          {"master_seed", c.master_seed},
          {"center_policy", policy},
          {"truth", to_string(c.truth)}};
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_json(config).dump();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

// ---------------------------------------------------------------------------

std::vector<ManifoldPoint> read_points(const fs::path& path, const ManifoldKind& kind) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open data file " + path.string());
  std::vector<ManifoldPoint> points;
  std::string line;
  bool first = true;
  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_csv(line);
    if (first) {
      first = false;
      if (std::none_of(fields.begin(), fields.end(), is_number)) continue;
    }
    ++row;
    const std::string where = path.filename().string() + " row " + std::to_string(row);
    std::vector<double> values;
    values.reserve(fields.size());
    for (const std::string& f : fields) {
      try {
        values.push_back(parse_double(f));
      } catch (const InvalidInput&) {
        throw InvalidInput(where + ": field '" + f + "' is not numeric");
      }
      if (!std::isfinite(values.back())) {
        throw InvalidInput(where + ": non-finite value");
      }
    }
    points.push_back(point_from_flat(kind, values, where));
  }
  if (points.empty()) throw InvalidInput("data file " + path.string() + " has no rows");
  return points;
}

int truncate_to_ball(std::vector<ManifoldPoint>& points, const ManifoldPoint& center,
                     double radius) {
  if (!(radius > 0.0)) throw InvalidInput("radius must be positive");
  int moved = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    require_same_kind(center.kind(), points[i].kind(), "truncate_to_ball");
    const double rho = distance(center, points[i]);
    if (rho <= radius) continue;
    Eigen::MatrixXd lg;
    try {
      lg = detail::log_ambient(center, points[i]);
    } catch (const CutLocusError&) {
      throw InvalidInput("row " + std::to_string(i + 1) +
                         " is antipodal to the center and cannot be truncated");
    }
    points[i] = exp_map(center, make_tangent_unchecked(center, lg * (radius / rho)));
    ++moved;
  }
  return moved;
}

IngestResult ingest_dataset(const fs::path& path, const ManifoldKind& kind,
                            const ManifoldPoint& center, double radius,
                            TruncationCenter policy) {
  require_same_kind(kind, center.kind(), "ingest_dataset");
  std::vector<ManifoldPoint> points = read_points(path, kind);
  std::vector<std::string> warnings;
  ManifoldPoint ball_center = center;
  if (policy == TruncationCenter::kPaperCompat) {
    ball_center = karcher_mean(points, center).mean;
    warnings.push_back(
        "--center-policy paper-compat: the truncation ball is centered at the "
        "sample Frechet mean, which is computed from the data without privacy "
        "protection; the released estimates are not differentially private");
  }
  const int moved = truncate_to_ball(points, ball_center, radius);
  if (moved > 0 && policy == TruncationCenter::kDeclared) {
    warnings.push_back(
        std::to_string(moved) +
        " rows were projected onto the ball around the declared center; "
        "--center-policy paper-compat centers the ball at the sample Frechet "
        "mean instead, which is not privacy-safe");
  }
  return {Dataset(std::move(points), ball_center, radius), moved, std::move(warnings)};
}

void write_points(const fs::path& path, const std::vector<ManifoldPoint>& points) {
  if (points.empty()) throw InvalidInput("no points to write");
  std::ofstream out = open_output(path);
  const ManifoldKind& kind = points.front().kind();
  const int m = kind.size();
  if (kind.is_sphere()) {
    for (int i = 0; i < m; ++i) out << (i ? "," : "") << "x" << i + 1;
  } else {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out << (i || j ? "," : "") << "a" << i + 1 << j + 1;
  }
  out << '\n';
  for (const ManifoldPoint& p : points) {
    const std::vector<double> v = flatten(p);
    for (std::size_t k = 0; k < v.size(); ++k) out << (k ? "," : "") << format_double(v[k]);
    out << '\n';
  }
  finish(out, path);
}

// ---------------------------------------------------------------------------

BoundaryCloud region_boundary_cloud(const ConfidenceRegion& region, int resolution) {
  if (resolution < 4) throw InvalidInput("boundary resolution must be >= 4");
  const int d = static_cast<int>(region.center().size());
  const Eigen::VectorXd& c = region.center();
  BoundaryCloud cloud{c, {}, {}};
  auto add = [&](const Eigen::VectorXd& w, const std::string& label) {
    const double scale = std::sqrt(region.threshold() / region.quadratic_form(Eigen::VectorXd(c + w)));
    cloud.points.push_back(c + scale * w);
    cloud.slice.push_back(label);
  };
  if (d <= 3) {
    const Eigen::MatrixXd l = region.gamma().llt().matrixL();
    if (d == 1) {
      add(Eigen::VectorXd::Constant(1, 1.0), "ellipsoid");
      add(Eigen::VectorXd::Constant(1, -1.0), "ellipsoid");
    } else if (d == 2) {
      for (int k = 0; k < resolution; ++k) {
        const double a = 2.0 * M_PI * k / resolution;
        add(l * Eigen::Vector2d(std::cos(a), std::sin(a)), "ellipsoid");
      }
    } else {
      const int rings = resolution / 2;
      add(l * Eigen::Vector3d(0, 0, 1), "ellipsoid");
      for (int i = 1; i < rings; ++i) {
        const double polar = M_PI * i / rings;
        for (int k = 0; k < resolution; ++k) {
          const double a = 2.0 * M_PI * k / resolution;
          add(l * Eigen::Vector3d(std::sin(polar) * std::cos(a),
                                  std::sin(polar) * std::sin(a), std::cos(polar)),
              "ellipsoid");
        }
      }
      add(l * Eigen::Vector3d(0, 0, -1), "ellipsoid");
    }
    return cloud;
  }
  const linalg::SymmetricEigen eig = linalg::eigen_symmetric(region.gamma());
  // Eigenvalues ascend; the principal axes are the last three columns.
  const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
  for (const auto& p : pairs) {
    const Eigen::VectorXd a = eig.vectors.col(d - 1 - p[0]);
    const Eigen::VectorXd b = eig.vectors.col(d - 1 - p[1]);
    const std::string label =
        "axes_" + std::to_string(p[0] + 1) + "_" + std::to_string(p[1] + 1);
    for (int k = 0; k < resolution; ++k) {
      const double t = 2.0 * M_PI * k / resolution;
      add(std::cos(t) * a + std::sin(t) * b, label);
    }
  }
  return cloud;
}

EigenSummary eigen_summary(const Eigen::MatrixXd& gamma, double distortion) {
  const linalg::SymmetricEigen eig = linalg::eigen_symmetric(gamma);
  const int d = static_cast<int>(eig.values.size());
  EigenSummary s{};
  double top = 0.0;
  for (int k = 0; k < 3; ++k) {
    s.lambda[k] = k < d ? eig.values(d - 1 - k) : std::numeric_limits<double>::quiet_NaN();
    if (k < d) top += s.lambda[k];
  }
  const double trace = eig.values.sum();
  s.explained = top / trace;
  s.radius = std::sqrt(trace);
  s.volume = std::sqrt(eig.values.prod());
  s.distortion = distortion;
  return s;
}

void write_boundary_cloud(const fs::path& path, const BoundaryCloud& cloud) {
  std::ofstream out = open_output(path);
  out << "slice";
  for (Eigen::Index k = 0; k < cloud.center.size(); ++k) out << ",theta" << k + 1;
  out << '\n';
  for (std::size_t i = 0; i < cloud.points.size(); ++i) {
    out << cloud.slice[i];
    for (Eigen::Index k = 0; k < cloud.points[i].size(); ++k) {
      out << ',' << format_double(cloud.points[i](k));
    }
    out << '\n';
  }
  finish(out, path);
}

void write_mean_table(const fs::path& path, const std::vector<AggregateRow>& rows) {
  write_table(path, rows, true);
}

void write_variance_table(const fs::path& path, const std::vector<AggregateRow>& rows) {
  write_table(path, rows, false);
}

void write_records(const fs::path& path, const std::vector<ReplicationRecord>& records) {
  std::ofstream out = open_output(path);
  out << kRecordHeader << '\n';
  for (const ReplicationRecord& r : records) {
    out << r.replication_id << ',' << format_double(r.mu) << ',' << int(r.failed) << ','
        << format_double(r.rho_mean_nondp) << ',' << format_double(r.rho_mean_dp) << ','
        << format_double(r.abs_var_err_nondp) << ',' << format_double(r.abs_var_err_dp)
        << ',' << int(r.mean_covered_dp) << ',' << int(r.var_covered_dp) << ','
        << int(r.mean_covered_nondp) << ',' << int(r.var_covered_nondp) << ','
        << format_double(r.region_volume) << ',' << format_double(r.clt_statistic) << ','
        << r.repairs << '\n';
  }
  finish(out, path);
}

std::vector<ReplicationRecord> read_records(const fs::path& path,
                                            const ExperimentConfig& config) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || trim(line) != kRecordHeader) {
    throw InvalidInput(path.string() + " does not start with the records header");
  }
  std::vector<ReplicationRecord> out;
  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const std::vector<std::string> f = split_csv(line);
    const std::string where = path.filename().string() + " row " + std::to_string(row);
    if (f.size() != 14) throw InvalidInput(where + ": expected 14 fields");
    ReplicationRecord r;
    try {
      r.replication_id = static_cast<int>(parse_double(f[0]));
      r.mu = parse_double(f[1]);
      r.failed = parse_double(f[2]) != 0.0;
      r.rho_mean_nondp = parse_double(f[3]);
      r.rho_mean_dp = parse_double(f[4]);
      r.abs_var_err_nondp = parse_double(f[5]);
      r.abs_var_err_dp = parse_double(f[6]);
      r.mean_covered_dp = parse_double(f[7]) != 0.0;
      r.var_covered_dp = parse_double(f[8]) != 0.0;
      r.mean_covered_nondp = parse_double(f[9]) != 0.0;
      r.var_covered_nondp = parse_double(f[10]) != 0.0;
      r.region_volume = parse_double(f[11]);
      r.clt_statistic = parse_double(f[12]);
      r.repairs = static_cast<int>(parse_double(f[13]));
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + ": " + e.what());
    }
    const auto it = std::find(config.mu_grid.begin(), config.mu_grid.end(), r.mu);
    if (it == config.mu_grid.end()) {
      throw InvalidInput(where + ": mu " + f[1] + " is not in the config grid");
    }
    r.mu_index = static_cast<int>(it - config.mu_grid.begin());
    out.push_back(r);
  }
  return out;
}

void write_budget_table(const fs::path& path, const std::vector<BudgetRow>& rows) {
  std::ofstream out = open_output(path);
  out << "mu,sigma,mu_star,mu_resolution\n";
  for (const BudgetRow& r : rows) {
    out << format_double(r.mu) << ',' << format_double(r.sigma) << ','
        << format_double(r.mu_star) << ',' << format_double(r.mu_resolution) << '\n';
  }
  finish(out, path);
}

json campaign_report(const CampaignResult& result) {
  json rows = json::array();
  int failures = 0;
  for (const AggregateRow& r : result.aggregates) {
    failures += r.failures;
    rows.push_back({{"mu", r.mu},
                    {"completed", r.completed},
                    {"failures", r.failures},
                    {"md_mean_dp", r.md_mean_dp},
                    {"md_mean_nondp", r.md_mean_nondp},
                    {"md_var_dp", r.md_var_dp},
                    {"md_var_nondp", r.md_var_nondp},
                    {"coverage_mean_dp", r.coverage_mean_dp},
                    {"coverage_mean_nondp", r.coverage_mean_nondp},
                    {"coverage_var_dp", r.coverage_var_dp},
                    {"coverage_var_nondp", r.coverage_var_nondp},
                    {"se_mean", r.se_mean},
                    {"se_var", r.se_var}});
  }
  return {{"config", config_to_json(result.config)},
          {"config_hash", config_hash(result.config)},
          {"truth",
           {{"variance", result.truth.variance},
            {"sigmaF2", result.truth.sigmaF2},
            {"lambda", matrix_json(result.truth.lambda)},
            {"C", matrix_json(result.truth.c)},
            {"lambda_standard_error", result.truth.lambda_standard_error}}},
          {"failures", failures},
          {"aggregates", rows}};
}

json estimate_report(const Dataset& data, const NonDpReport& nondp,
                     const PipelineResult& dp, double alpha,
                     const IngestResult& ingest) {
  const double dist = distance(nondp.solution.mean, dp.mean.mean_dp);
  const LimitingCovariance& cov = dp.mean.covariance;
  json sens = json::array();
  sens.push_back(sensitivity_json(mean_sensitivity(
      data.radius(), data.kind().curvature_upper(), data.size())));
  if (cov.sensitivities) {
    sens.push_back(sensitivity_json(cov.sensitivities->c));
    sens.push_back(sensitivity_json(cov.sensitivities->lambda));
  }
  sens.push_back(sensitivity_json(variance_sensitivity(data.radius(), data.size())));
  sens.push_back(sensitivity_json(dp.variance.sigmaF2.sensitivity));
  return {
      {"manifold", kind_json(data.kind())},
      {"n", data.size()},
      {"radius", data.radius()},
      {"center", point_json(data.center())},
      {"truncated", ingest.truncated},
      {"warnings", ingest.warnings},
      {"alpha", alpha},
      {"nondp",
       {{"mean", point_json(nondp.solution.mean)},
        {"iterations", nondp.solution.iterations},
        {"variance", nondp.solution.variance},
        {"sigmaF2", nondp.sigmaF2},
        {"interval", {nondp.interval.lower, nondp.interval.upper}},
        {"lambda_vecd", vector_json(linalg::vecd(nondp.covariance.lambda))},
        {"C_vecd", vector_json(linalg::vecd(nondp.covariance.c))},
        {"region", region_json(nondp.region)},
        {"eigen_summary", summary_json(eigen_summary(nondp.covariance.gamma, 0.0))}}},
      {"dp",
       {{"mean", point_json(dp.mean.mean_dp)},
        {"mechanism", to_string(dp.mean.mechanism)},
        {"sigma_n_eta", dp.mean.sigma_n_eta},
        {"lambda_vecd", vector_json(linalg::vecd(cov.lambda))},
        {"C_vecd", vector_json(linalg::vecd(cov.c))},
        {"lambda_floored", cov.lambda_floored},
        {"C_clipped", cov.c_clipped},
        {"region", region_json(dp.mean.region)},
        {"eigen_summary", summary_json(eigen_summary(cov.gamma, dist))},
        {"variance", dp.variance.variance_dp},
        {"sigma_n_V", dp.variance.sigma_n_V},
        {"sigmaF2", dp.variance.sigmaF2.value},
        {"sigmaF2_floored", dp.variance.sigmaF2.floored},
        {"interval", {dp.variance.interval.lower, dp.variance.interval.upper}},
        {"ledger_mean", ledger_json(dp.mean.budget)},
        {"ledger_variance", ledger_json(dp.variance.budget)},
        {"sensitivities", sens}}}};
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) {
    out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return out.str();
}

void write_json(const fs::path& path, const json& doc) {
  std::ofstream out = open_output(path);
  out << doc.dump(2) << '\n';
  finish(out, path);
}

json write_manifest(const fs::path& dir, const std::vector<std::string>& files,
                    const std::string& hash, std::uint64_t master_seed) {
  json inventory = json::array();
  for (const std::string& name : files) {
    const fs::path p = dir / name;
    inventory.push_back({{"file", name},
                         {"sha256", sha256_file(p)},
                         {"bytes", fs::file_size(p)}});
  }
  json manifest = {{"tool_version", kToolVersion},
                   {"config_hash", hash},
                   {"master_seed", master_seed},
                   {"created_utc", utc_now()},
                   {"files", inventory}};
  write_json(dir / "manifest.json", manifest);
  return manifest;
}

void prepare_output_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw InvalidInput("cannot create output directory " + dir.string());
  }
}

}  // namespace manifold_dp::io
