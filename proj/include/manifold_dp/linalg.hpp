#pragma once

#include <Eigen/Dense>

#include <functional>

namespace manifold_dp::linalg {

// Symmetric eigendecomposition S = U diag(values) U^T.
struct SymmetricEigen {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

SymmetricEigen eigen_symmetric(const Eigen::MatrixXd& s);

// U diag(f(values)) U^T.
Eigen::MatrixXd apply_spectral(const SymmetricEigen& eig,
                               const std::function<double(double)>& f);

Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& s);
Eigen::MatrixXd sym_log(const Eigen::MatrixXd& s);
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& s);
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& s);

// Frechet derivative of the matrix exponential at symmetric S in the
// symmetric direction H (Daleckii-Krein). Divided differences fall back to
// e^{lambda_i} when eigenvalues coincide to within 1e-8.
Eigen::MatrixXd exp_derivative(const SymmetricEigen& eig_s,
                               const Eigen::MatrixXd& h);

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
  return 0.5 * (a + a.transpose());
}

// Relative asymmetry ||A - A^T||_F / ||A||_F (0 for the zero matrix).
double asymmetry(const Eigen::MatrixXd& a);

// Half-vectorization: diagonal entries then strictly-upper entries scaled by
// sqrt(2), walked row-major over the upper triangle. Isometry from the
// Frobenius norm to the Euclidean norm.
Eigen::VectorXd vecd(const Eigen::MatrixXd& s);
Eigen::MatrixXd vecd_inv(const Eigen::VectorXd& v);
int vecd_size(int matrix_size);
// Inverse of vecd_size; throws InvalidInput when len is not triangular.
int matrix_size_from_vecd(int len);

}  // namespace manifold_dp::linalg
