#include "manifold_dp/manifold.hpp"

#include <cmath>
#include <string>

#include "manifold_dp/errors.hpp"
#include "manifold_dp/linalg.hpp"

namespace manifold_dp {
namespace {

constexpr double kUnitTol = 1e-12;
constexpr double kSymmetryTol = 1e-12;
constexpr double kAntipodalTol = 1e-8;

// Angle between unit vectors. Equal to arccos(clamp(<p,q>, -1, 1)) but keeps
// full relative precision near 0 and pi.
double sphere_angle(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  return 2.0 * std::atan2((q - p).norm(), (q + p).norm());
}

void check_spd_shape(const ManifoldKind& kind, const Eigen::MatrixXd& coords) {
  if (coords.rows() != kind.size() || coords.cols() != kind.size()) {
    throw InvalidInput("SPD point must be " + std::to_string(kind.size()) +
                       "x" + std::to_string(kind.size()));
  }
}

void check_sphere_shape(const ManifoldKind& kind,
                        const Eigen::MatrixXd& coords) {
  if (coords.rows() != kind.size() || coords.cols() != 1) {
    throw InvalidInput("sphere point must have " +
                       std::to_string(kind.size()) + " coordinates");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// ManifoldKind

ManifoldKind ManifoldKind::sphere(int ambient_dim) {
  if (ambient_dim < 2) {
    throw InvalidInput("sphere requires ambient dimension >= 2 (d >= 1)");
  }
  return ManifoldKind(ManifoldType::kSphere, ambient_dim, 1.0);
}

ManifoldKind ManifoldKind::spd(int matrix_size, double curvature_lower) {
  if (matrix_size < 1) throw InvalidInput("SPD requires matrix size >= 1");
  if (curvature_lower > 0.0) {
    throw InvalidInput("SPD curvature lower bound must be <= 0");
  }
  return ManifoldKind(ManifoldType::kSpd, matrix_size, curvature_lower);
}

int ManifoldKind::dim() const {
  return is_sphere() ? size_ - 1 : linalg::vecd_size(size_);
}

std::string ManifoldKind::name() const {
  return is_sphere() ? "sphere(S^" + std::to_string(size_ - 1) + ")"
                     : "spd(" + std::to_string(size_) + ")";
}

void require_same_kind(const ManifoldKind& a, const ManifoldKind& b,
                       const char* where) {
  if (!(a == b)) {
    throw InvalidInput(std::string(where) + ": manifold kind mismatch (" +
                       a.name() + " vs " + b.name() + ")");
  }
}

// ---------------------------------------------------------------------------
// ManifoldPoint

ManifoldPoint::ManifoldPoint(ManifoldKind kind, Eigen::MatrixXd coords)
    : kind_(kind), coords_(std::move(coords)) {
  if (!coords_.allFinite()) throw InvalidInput("point has non-finite entries");
  if (kind_.is_sphere()) {
    check_sphere_shape(kind_, coords_);
    if (std::abs(coords_.norm() - 1.0) > kUnitTol) {
      throw InvalidInput("sphere point is not a unit vector");
    }
    return;
  }
  check_spd_shape(kind_, coords_);
  if ((coords_ - coords_.transpose()).norm() > kSymmetryTol * coords_.norm()) {
    throw InvalidInput("SPD point is not symmetric");
  }
  init_spd_factors();
}

ManifoldPoint::ManifoldPoint(Trusted, ManifoldKind kind, Eigen::MatrixXd coords)
    : kind_(kind), coords_(std::move(coords)) {}

void ManifoldPoint::init_spd_factors() {
  const linalg::SymmetricEigen eig = linalg::eigen_symmetric(coords_);
  if (!(eig.values.minCoeff() > 0.0)) {
    throw InvalidInput("SPD point is not positive definite");
  }
  sqrt_ = linalg::apply_spectral(eig, [](double x) { return std::sqrt(x); });
  inv_sqrt_ =
      linalg::apply_spectral(eig, [](double x) { return 1.0 / std::sqrt(x); });
}

ManifoldPoint ManifoldPoint::projected(ManifoldKind kind,
                                       Eigen::MatrixXd coords) {
  if (!coords.allFinite()) throw InvalidInput("point has non-finite entries");
  if (kind.is_sphere()) {
    check_sphere_shape(kind, coords);
    const double norm = coords.norm();
    if (norm == 0.0) throw InvalidInput("zero vector is not a sphere point");
    return ManifoldPoint(Trusted{}, kind, coords / norm);
  }
  check_spd_shape(kind, coords);
  ManifoldPoint out(Trusted{}, kind, linalg::symmetrize(coords));
  out.init_spd_factors();
  return out;
}

ManifoldPoint ManifoldPoint::identity(int matrix_size) {
  return ManifoldPoint(ManifoldKind::spd(matrix_size),
                       Eigen::MatrixXd::Identity(matrix_size, matrix_size));
}

ManifoldPoint ManifoldPoint::unit_vector(int ambient_dim, int axis) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(ambient_dim, 1);
  e(axis, 0) = 1.0;
  return ManifoldPoint(ManifoldKind::sphere(ambient_dim), std::move(e));
}

ManifoldPoint make_point_unchecked(ManifoldKind kind, Eigen::MatrixXd coords) {
  if (kind.is_sphere()) {
    coords /= coords.norm();
    return ManifoldPoint(ManifoldPoint::Trusted{}, kind, std::move(coords));
  }
  ManifoldPoint out(ManifoldPoint::Trusted{}, kind,
                    linalg::symmetrize(coords));
  try {
    out.init_spd_factors();
  } catch (const InvalidInput&) {
    throw NumericalFailure("SPD construction lost positive definiteness");
  }
  return out;
}

// ---------------------------------------------------------------------------
// TangentVector

TangentVector::TangentVector(ManifoldPoint base, Eigen::MatrixXd vec)
    : base_(std::move(base)), vec_(std::move(vec)) {
  if (vec_.rows() != base_.coords().rows() ||
      vec_.cols() != base_.coords().cols()) {
    throw InvalidInput("tangent vector shape does not match its base point");
  }
  if (!vec_.allFinite()) throw InvalidInput("tangent vector is not finite");
  if (base_.kind().is_sphere()) {
    const double inner = vec_.col(0).dot(base_.vector());
    if (std::abs(inner) > kUnitTol * std::max(1.0, vec_.norm())) {
      throw InvalidInput("sphere tangent vector is not orthogonal to its base");
    }
  } else if (linalg::asymmetry(vec_) > kSymmetryTol) {
    throw InvalidInput("SPD tangent vector is not symmetric");
  }
}

TangentVector TangentVector::zero(const ManifoldPoint& base) {
  return TangentVector(Trusted{}, base,
                       Eigen::MatrixXd::Zero(base.coords().rows(),
                                             base.coords().cols()));
}

TangentVector make_tangent_unchecked(ManifoldPoint base, Eigen::MatrixXd vec) {
  return TangentVector(TangentVector::Trusted{}, std::move(base),
                       std::move(vec));
}

// ---------------------------------------------------------------------------
// Metric

double metric_inner(const ManifoldPoint& p, const Eigen::MatrixXd& u,
                    const Eigen::MatrixXd& v) {
  if (p.kind().is_sphere()) return u.col(0).dot(v.col(0));
  const Eigen::MatrixXd& w = p.inv_sqrt();
  const Eigen::MatrixXd a = w * u * w;
  const Eigen::MatrixXd b = w * v * w;
  return a.cwiseProduct(b).sum();
}

double metric_norm(const ManifoldPoint& p, const Eigen::MatrixXd& v) {
  return std::sqrt(std::max(0.0, metric_inner(p, v, v)));
}

// ---------------------------------------------------------------------------
// TangentFrame

Eigen::VectorXd TangentFrame::coordinates(const Eigen::MatrixXd& ambient) const {
  Eigen::VectorXd c(dim());
  if (base_.kind().is_sphere()) {
    for (int k = 0; k < dim(); ++k) c(k) = basis_[k].col(0).dot(ambient.col(0));
    return c;
  }
  const Eigen::MatrixXd& w = base_.inv_sqrt();
  const Eigen::MatrixXd whitened = w * ambient * w;
  for (int k = 0; k < dim(); ++k) {
    c(k) = (w * basis_[k] * w).cwiseProduct(whitened).sum();
  }
  return c;
}

Eigen::VectorXd TangentFrame::coordinates(const TangentVector& v) const {
  return coordinates(v.vec());
}

Eigen::MatrixXd TangentFrame::ambient(const Eigen::VectorXd& coords) const {
  if (coords.size() != dim()) {
    throw InvalidInput("coordinate vector has length " +
                       std::to_string(coords.size()) + ", frame has " +
                       std::to_string(dim()));
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(base_.coords().rows(),
                                              base_.coords().cols());
  for (int k = 0; k < dim(); ++k) out += coords(k) * basis_[k];
  return out;
}

TangentVector TangentFrame::vector(const Eigen::VectorXd& coords) const {
  return make_tangent_unchecked(base_, ambient(coords));
}

Eigen::MatrixXd TangentFrame::gram() const {
  Eigen::MatrixXd g(dim(), dim());
  for (int i = 0; i < dim(); ++i) {
    for (int j = 0; j < dim(); ++j) {
      g(i, j) = metric_inner(base_, basis_[i], basis_[j]);
    }
  }
  return g;
}

TangentFrame tangent_frame(const ManifoldPoint& p) {
  std::vector<Eigen::MatrixXd> candidates;
  if (p.kind().is_sphere()) {
    const Eigen::VectorXd x = p.vector();
    Eigen::Index skip = 0;
    x.cwiseAbs().maxCoeff(&skip);
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      if (k == skip) continue;
      Eigen::VectorXd e = Eigen::VectorXd::Zero(x.size());
      e(k) = 1.0;
      candidates.emplace_back(e - x(k) * x);
    }
  } else {
    const int d = p.kind().dim();
    for (int k = 0; k < d; ++k) {
      Eigen::VectorXd unit = Eigen::VectorXd::Zero(d);
      unit(k) = 1.0;
      candidates.emplace_back(p.sqrt() * linalg::vecd_inv(unit) * p.sqrt());
    }
  }
  // Modified Gram-Schmidt in the metric at p.
  std::vector<Eigen::MatrixXd> basis;
  for (Eigen::MatrixXd& u : candidates) {
    for (const Eigen::MatrixXd& b : basis) u -= metric_inner(p, b, u) * b;
    u /= metric_norm(p, u);
    if (p.kind().is_spd()) u = linalg::symmetrize(u);
    basis.push_back(std::move(u));
  }
  return TangentFrame(p, std::move(basis));
}

// ---------------------------------------------------------------------------
// exp / log / distance

ManifoldPoint exp_map(const ManifoldPoint& p, const TangentVector& v) {
  require_same_kind(p.kind(), v.base().kind(), "exp_map");
  if (p.kind().is_sphere()) {
    const Eigen::VectorXd x = p.vector();
    const Eigen::VectorXd w = v.vec().col(0);
    const double t = w.norm();
    if (t == 0.0) return p;
    Eigen::MatrixXd out = std::cos(t) * x + (std::sin(t) / t) * w;
    return make_point_unchecked(p.kind(), std::move(out));
  }
  const Eigen::MatrixXd s = p.inv_sqrt() * v.vec() * p.inv_sqrt();
  return make_point_unchecked(p.kind(),
                              p.sqrt() * linalg::sym_exp(linalg::symmetrize(s)) *
                                  p.sqrt());
}

TangentVector log_map(const ManifoldPoint& p, const ManifoldPoint& q) {
  return make_tangent_unchecked(p, detail::log_ambient(p, q));
}

double distance(const ManifoldPoint& p, const ManifoldPoint& q) {
  require_same_kind(p.kind(), q.kind(), "distance");
  if (p.kind().is_sphere()) return sphere_angle(p.vector(), q.vector());
  const Eigen::MatrixXd s =
      linalg::symmetrize(p.inv_sqrt() * q.coords() * p.inv_sqrt());
  const Eigen::VectorXd ev = linalg::eigen_symmetric(s).values;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    const double l = std::log(ev(i));
    sum += l * l;
  }
  return std::sqrt(sum);
}

// ---------------------------------------------------------------------------
// Differentials

TangentVector differential_of_exp(const ManifoldPoint& p0,
                                  const TangentVector& v,
                                  const TangentVector& w) {
  if (!p0.kind().is_spd()) {
    throw InvalidInput("differential_of_exp: only supported on SPD");
  }
  require_same_kind(p0.kind(), v.base().kind(), "differential_of_exp");
  require_same_kind(p0.kind(), w.base().kind(), "differential_of_exp");
  const Eigen::MatrixXd s =
      linalg::symmetrize(p0.inv_sqrt() * v.vec() * p0.inv_sqrt());
  const Eigen::MatrixXd h =
      linalg::symmetrize(p0.inv_sqrt() * w.vec() * p0.inv_sqrt());
  const linalg::SymmetricEigen eig = linalg::eigen_symmetric(s);
  const Eigen::MatrixXd d = linalg::exp_derivative(eig, h);
  ManifoldPoint end = make_point_unchecked(
      p0.kind(), p0.sqrt() * linalg::apply_spectral(
                                 eig, [](double x) { return std::exp(x); }) *
                     p0.sqrt());
  return make_tangent_unchecked(
      std::move(end), linalg::symmetrize(p0.sqrt() * d * p0.sqrt()));
}

namespace detail {

Eigen::MatrixXd log_ambient(const ManifoldPoint& p, const ManifoldPoint& q) {
  require_same_kind(p.kind(), q.kind(), "log_map");
  if (p.kind().is_sphere()) {
    const Eigen::VectorXd x = p.vector();
    const Eigen::VectorXd y = q.vector();
    const double theta = sphere_angle(x, y);
    if (theta >= M_PI - kAntipodalTol) {
      throw CutLocusError("log_map: point is on the cut locus (antipodal)");
    }
    const Eigen::VectorXd w = y - y.dot(x) * x;
    const double wn = w.norm();
    if (wn == 0.0 || theta == 0.0) return Eigen::MatrixXd::Zero(x.size(), 1);
    return Eigen::MatrixXd((theta / wn) * w);
  }
  const Eigen::MatrixXd s =
      linalg::symmetrize(p.inv_sqrt() * q.coords() * p.inv_sqrt());
  return linalg::symmetrize(p.sqrt() * linalg::sym_log(s) * p.sqrt());
}

Eigen::VectorXd sphere_exp_derivative(const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& v,
                                      const Eigen::VectorXd& w) {
  const double t = v.norm();
  if (t < 1e-12) return w;
  const Eigen::VectorXd u = v / t;
  const double a = u.dot(w);
  const Eigen::VectorXd w_perp = w - a * u;
  return a * (-std::sin(t) * p + std::cos(t) * u) + (std::sin(t) / t) * w_perp;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// vecd

Eigen::VectorXd vecd(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw InvalidInput("vecd: matrix is not square");
  if (linalg::asymmetry(s) > 1e-10) {
    throw InvalidInput("vecd: matrix is not symmetric");
  }
  return linalg::vecd(s);
}

Eigen::MatrixXd vecd_inv(const Eigen::VectorXd& v) { return linalg::vecd_inv(v); }

}  // namespace manifold_dp
