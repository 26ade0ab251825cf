#include "speclab/linalg.hpp"

#include <stdexcept>
#include <string>

#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace speclab {

SymEig eigh(const Eigen::MatrixXd& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("eigh: matrix is not square");
    }
    const auto n = static_cast<lapack_int>(a.rows());
    SymEig out;
    out.vectors = a;
    out.values.resize(n);
    if (n == 0) {
        return out;
    }
    const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n,
                                           out.values.data());
    if (info != 0) {
        throw std::runtime_error("dsyevd failed, info = " + std::to_string(info));
    }
    return out;
}

HermEig eigh(const Eigen::MatrixXcd& a) {
    if (a.rows() != a.cols()) {
        throw std::invalid_argument("eigh: matrix is not square");
    }
    const auto n = static_cast<lapack_int>(a.rows());
    HermEig out;
    out.vectors = a;
    out.values.resize(n);
    if (n == 0) {
        return out;
    }
    const lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n, out.vectors.data(), n,
                                           out.values.data());
    if (info != 0) {
        throw std::runtime_error("zheevd failed, info = " + std::to_string(info));
    }
    return out;
}

double hermitian_defect(const Eigen::MatrixXcd& a) {
    return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double operator_norm(const Eigen::MatrixXcd& a) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    return svd.singularValues()(0);
}

} // namespace speclab
