#pragma once

#include <complex>

#include <Eigen/Dense>

namespace speclab {

using cplx = std::complex<double>;

/// Eigendecomposition A = U diag(w) U^T of a real symmetric matrix (LAPACK dsyevd).
/// Eigenvalues are ascending.
struct SymEig {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
};

/// Same for complex Hermitian input (LAPACK zheevd).
struct HermEig {
    Eigen::VectorXd values;
    Eigen::MatrixXcd vectors;
};

SymEig eigh(const Eigen::MatrixXd& a);
HermEig eigh(const Eigen::MatrixXcd& a);

/// Largest |A - A^H| entry; zero for an exactly Hermitian matrix.
double hermitian_defect(const Eigen::MatrixXcd& a);

/// Spectral norm via singular values.
double operator_norm(const Eigen::MatrixXcd& a);

} // namespace speclab
