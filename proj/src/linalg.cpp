#include "manifold_dp/linalg.hpp"

#include <cmath>
#include <string>

#include "manifold_dp/errors.hpp"

namespace manifold_dp::linalg {

SymmetricEigen eigen_symmetric(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  if (solver.info() != Eigen::Success) {
    throw NumericalFailure("symmetric eigendecomposition did not converge");
  }
  return {solver.eigenvalues(), solver.eigenvectors()};
}

Eigen::MatrixXd apply_spectral(const SymmetricEigen& eig,
                               const std::function<double(double)>& f) {
  Eigen::VectorXd fv = eig.values.unaryExpr(f);
  return eig.vectors * fv.asDiagonal() * eig.vectors.transpose();
}

Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& s) {
  return apply_spectral(eigen_symmetric(s), [](double x) { return std::exp(x); });
}

Eigen::MatrixXd sym_log(const Eigen::MatrixXd& s) {
  const SymmetricEigen eig = eigen_symmetric(s);
  if (eig.values.minCoeff() <= 0.0) {
    throw InvalidInput("matrix logarithm of a non-positive-definite matrix");
  }
  return apply_spectral(eig, [](double x) { return std::log(x); });
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& s) {
  return apply_spectral(eigen_symmetric(s), [](double x) { return std::sqrt(x); });
}

Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& s) {
  return apply_spectral(eigen_symmetric(s),
                        [](double x) { return 1.0 / std::sqrt(x); });
}

Eigen::MatrixXd exp_derivative(const SymmetricEigen& eig_s,
                               const Eigen::MatrixXd& h) {
  const Eigen::Index m = eig_s.values.size();
  const Eigen::MatrixXd& u = eig_s.vectors;
  Eigen::MatrixXd g(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      const double li = eig_s.values(i);
      const double lj = eig_s.values(j);
      if (std::abs(li - lj) < 1e-8) {
        g(i, j) = std::exp(0.5 * (li + lj));
      } else {
        g(i, j) = (std::exp(li) - std::exp(lj)) / (li - lj);
      }
    }
  }
  const Eigen::MatrixXd rotated = u.transpose() * h * u;
  return u * g.cwiseProduct(rotated) * u.transpose();
}

double asymmetry(const Eigen::MatrixXd& a) {
  const double norm = a.norm();
  if (norm == 0.0) return 0.0;
  return (a - a.transpose()).norm() / norm;
}

int vecd_size(int matrix_size) { return matrix_size * (matrix_size + 1) / 2; }

int matrix_size_from_vecd(int len) {
  int m = 0;
  while (vecd_size(m) < len) ++m;
  if (vecd_size(m) != len) {
    throw InvalidInput("vector length " + std::to_string(len) +
                       " is not a triangular number");
  }
  return m;
}

Eigen::VectorXd vecd(const Eigen::MatrixXd& s) {
  const Eigen::Index m = s.rows();
  Eigen::VectorXd out(vecd_size(static_cast<int>(m)));
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < m; ++i) out(k++) = s(i, i);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i + 1; j < m; ++j) out(k++) = M_SQRT2 * s(i, j);
  }
  return out;
}

Eigen::MatrixXd vecd_inv(const Eigen::VectorXd& v) {
  const int m = matrix_size_from_vecd(static_cast<int>(v.size()));
  Eigen::MatrixXd s(m, m);
  Eigen::Index k = 0;
  for (int i = 0; i < m; ++i) s(i, i) = v(k++);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      s(i, j) = v(k++) / M_SQRT2;
      s(j, i) = s(i, j);
    }
  }
  return s;
}

}  // namespace manifold_dp::linalg
