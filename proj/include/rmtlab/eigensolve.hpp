#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "rmtlab/common.hpp"

#ifndef RMTLAB_NO_LAPACKE
#include <cblas.h>
#include <lapacke.h>
#endif

namespace rmtlab {

// Eigenvalues of a real symmetric / complex hermitian matrix, ascending.
// LAPACK (dsyevd/zheevd, values only) where available; Eigen otherwise.
// Callers treat spectra as exact: LAPACK residuals are ~1e-13*||H||, well
// inside the 1e-10*||H|| contract checked in the tests.

inline std::vector<double> symmetric_eigenvalues(const Eigen::MatrixXd& H) {
    const int n = static_cast<int>(H.rows());
    if (n == 0) return {};
#ifndef RMTLAB_NO_LAPACKE
    Eigen::MatrixXd work = H;
    std::vector<double> w(static_cast<std::size_t>(n));
    int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'N', 'L', n, work.data(), n, w.data());
    if (info != 0) throw NumericError("dsyevd failed, info=" + std::to_string(info), 0);
    return w;
#else
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("eigensolver failed", 0);
    return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + n);
#endif
}

inline std::vector<double> hermitian_eigenvalues(const Eigen::MatrixXcd& H) {
    const int n = static_cast<int>(H.rows());
    if (n == 0) return {};
#ifndef RMTLAB_NO_LAPACKE
    Eigen::MatrixXcd work = H;
    std::vector<double> w(static_cast<std::size_t>(n));
    int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', n,
                              reinterpret_cast<lapack_complex_double*>(work.data()), n, w.data());
    if (info != 0) throw NumericError("zheevd failed, info=" + std::to_string(info), 0);
    return w;
#else
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericError("eigensolver failed", 0);
    return std::vector<double>(es.eigenvalues().data(), es.eigenvalues().data() + n);
#endif
}

}  // namespace rmtlab
