#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace manifold_dp {

enum class ManifoldType { kSphere, kSpd };

// The two supported geometries: the unit sphere S^d in R^{d+1} with the
// round metric, and SPD(m) with the affine-invariant metric
// <U, V>_P = tr(P^{-1} U P^{-1} V).
class ManifoldKind {
 public:
  static ManifoldKind sphere(int ambient_dim);
  // The affine-invariant metric has sectional curvature in [-1/2, 0].
  static ManifoldKind spd(int matrix_size, double curvature_lower = -0.5);

  ManifoldType type() const { return type_; }
  bool is_sphere() const { return type_ == ManifoldType::kSphere; }
  bool is_spd() const { return type_ == ManifoldType::kSpd; }

  // d + 1 for the sphere, m for SPD.
  int size() const { return size_; }
  // d for the sphere, m(m+1)/2 for SPD.
  int dim() const;
  double curvature_upper() const { return is_sphere() ? 1.0 : 0.0; }
  double curvature_lower() const { return curvature_lower_; }

  std::string name() const;

  bool operator==(const ManifoldKind& other) const {
    return type_ == other.type_ && size_ == other.size_;
  }

 private:
  ManifoldKind(ManifoldType type, int size, double curvature_lower)
      : type_(type), size_(size), curvature_lower_(curvature_lower) {}

  ManifoldType type_;
  int size_;
  double curvature_lower_;
};

// A validated point. Sphere coordinates are a (d+1)x1 unit column; SPD
// coordinates are a dense symmetric positive-definite m x m matrix. SPD points
// carry their square root and inverse square root, computed once at
// construction, so repeated log/exp from the same base stay cheap.
class ManifoldPoint {
 public:
  // Validates the invariants (unit norm within 1e-12, or symmetry within
  // 1e-12 relative and a positive smallest eigenvalue). Throws InvalidInput.
  ManifoldPoint(ManifoldKind kind, Eigen::MatrixXd coords);

  // Projects nearly-valid input onto the manifold instead of rejecting it:
  // renormalizes sphere vectors and symmetrizes SPD matrices. Still throws
  // for zero vectors and non-positive-definite matrices.
  static ManifoldPoint projected(ManifoldKind kind, Eigen::MatrixXd coords);

  static ManifoldPoint identity(int matrix_size);
  static ManifoldPoint unit_vector(int ambient_dim, int axis);

  const ManifoldKind& kind() const { return kind_; }
  const Eigen::MatrixXd& coords() const { return coords_; }
  // Sphere coordinates as a column vector.
  Eigen::VectorXd vector() const { return coords_.col(0); }

  // SPD only: P^{1/2} and P^{-1/2}.
  const Eigen::MatrixXd& sqrt() const { return sqrt_; }
  const Eigen::MatrixXd& inv_sqrt() const { return inv_sqrt_; }

 private:
  struct Trusted {};
  ManifoldPoint(Trusted, ManifoldKind kind, Eigen::MatrixXd coords);
  void init_spd_factors();

  ManifoldKind kind_;
  Eigen::MatrixXd coords_;
  Eigen::MatrixXd sqrt_;
  Eigen::MatrixXd inv_sqrt_;

  friend ManifoldPoint make_point_unchecked(ManifoldKind, Eigen::MatrixXd);
};

// Skips validation; for results of exp_map and similar constructions that
// satisfy the invariants up to roundoff. Sphere input is renormalized and
// SPD input symmetrized.
ManifoldPoint make_point_unchecked(ManifoldKind kind, Eigen::MatrixXd coords);

// Ambient representation of a tangent vector: a vector orthogonal to the
// base (sphere) or a symmetric matrix (SPD).
class TangentVector {
 public:
  // Validates orthogonality / symmetry within 1e-12 (relative for SPD).
  TangentVector(ManifoldPoint base, Eigen::MatrixXd vec);
  static TangentVector zero(const ManifoldPoint& base);

  const ManifoldPoint& base() const { return base_; }
  const Eigen::MatrixXd& vec() const { return vec_; }

 private:
  struct Trusted {};
  TangentVector(Trusted, ManifoldPoint base, Eigen::MatrixXd vec)
      : base_(std::move(base)), vec_(std::move(vec)) {}

  ManifoldPoint base_;
  Eigen::MatrixXd vec_;

  friend TangentVector make_tangent_unchecked(ManifoldPoint, Eigen::MatrixXd);
};

TangentVector make_tangent_unchecked(ManifoldPoint base, Eigen::MatrixXd vec);

// Metric-orthonormal basis of the tangent space at base; converts between
// tangent vectors and coordinates in R^d.
class TangentFrame {
 public:
  TangentFrame(ManifoldPoint base, std::vector<Eigen::MatrixXd> basis)
      : base_(std::move(base)), basis_(std::move(basis)) {}

  const ManifoldPoint& base() const { return base_; }
  const std::vector<Eigen::MatrixXd>& basis() const { return basis_; }
  int dim() const { return static_cast<int>(basis_.size()); }

  Eigen::VectorXd coordinates(const TangentVector& v) const;
  Eigen::VectorXd coordinates(const Eigen::MatrixXd& ambient) const;
  TangentVector vector(const Eigen::VectorXd& coords) const;
  Eigen::MatrixXd ambient(const Eigen::VectorXd& coords) const;

  // Gram matrix of the basis under the metric at base.
  Eigen::MatrixXd gram() const;

 private:
  ManifoldPoint base_;
  std::vector<Eigen::MatrixXd> basis_;
};

// Riemannian inner product at p of two ambient tangent representations.
double metric_inner(const ManifoldPoint& p, const Eigen::MatrixXd& u,
                    const Eigen::MatrixXd& v);
double metric_norm(const ManifoldPoint& p, const Eigen::MatrixXd& v);

ManifoldPoint exp_map(const ManifoldPoint& p, const TangentVector& v);
// Throws CutLocusError on the sphere when rho(p, q) >= pi - 1e-8.
TangentVector log_map(const ManifoldPoint& p, const ManifoldPoint& q);
double distance(const ManifoldPoint& p, const ManifoldPoint& q);

// Deterministic frame. Sphere: Gram-Schmidt over the ambient canonical axes
// projected onto T_p, skipping the axis most aligned with p. SPD: the vecd
// basis E_ij transported as P^{1/2} E_ij P^{1/2}, then Gram-Schmidt in the
// metric.
TangentFrame tangent_frame(const ManifoldPoint& p);

// Directional derivative of exp_{p0} at v in direction w (SPD only). The
// result is tangent at exp_{p0}(v).
TangentVector differential_of_exp(const ManifoldPoint& p0,
                                  const TangentVector& v,
                                  const TangentVector& w);

// Throws InvalidInput for asymmetric input (relative tolerance 1e-10).
Eigen::VectorXd vecd(const Eigen::MatrixXd& s);
Eigen::MatrixXd vecd_inv(const Eigen::VectorXd& v);

// Throws InvalidInput when the kinds differ.
void require_same_kind(const ManifoldKind& a, const ManifoldKind& b,
                       const char* where);

namespace detail {

// log_map without the TangentVector wrapper; the ambient representation only.
Eigen::MatrixXd log_ambient(const ManifoldPoint& p, const ManifoldPoint& q);

// Derivative of the sphere exponential exp_p(v) in direction w, all in
// ambient coordinates. Tangent at exp_p(v).
Eigen::VectorXd sphere_exp_derivative(const Eigen::VectorXd& p,
                                      const Eigen::VectorXd& v,
                                      const Eigen::VectorXd& w);

}  // namespace detail

}  // namespace manifold_dp
