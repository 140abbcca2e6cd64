#pragma once

// Closed-form proximal and projection operators used by the ADMM block updates.
// Every operator is a pure function: inputs are taken by const reference and a
// fresh matrix is returned.

#include "flr/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <string_view>

namespace flr {

/// Thin SVD with singular values in nonincreasing order.
/// Throws NumericError naming `operand` if the decomposition does not succeed.
inline Eigen::BDCSVD<Matrix> thin_svd(const Matrix& m, std::string_view operand = "matrix") {
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) {
        throw NumericError(detail::concat("SVD failed to converge on ", operand, " (",
                                          detail::shape_str(m), ")"));
    }
    return svd;
}

/// Sum of singular values.
inline double nuclear_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::BDCSVD<Matrix> svd(m);
    if (svd.info() != Eigen::Success) throw NumericError("SVD failed in nuclear_norm");
    return svd.singularValues().sum();
}

/// Entrywise l1 norm.
inline double l1_norm(const Matrix& m) { return m.cwiseAbs().sum(); }

/// Sum of the Euclidean norms of the rows.
inline double l21_norm(const Matrix& m) { return m.rowwise().norm().sum(); }

/// Singular value thresholding: the minimizer of tau*||X||_* + 0.5*||X - m||_F^2.
///
/// Returns U * diag(max(sigma_i - tau, 0)) * V^T for a thin SVD of `m`. Singular
/// vectors whose shrunk value is zero are dropped before reconstruction, so the
/// sign/rotation freedom of the SVD never shows up in the result.
inline Matrix svt(const Matrix& m, Threshold tau, std::string_view operand = "svt operand") {
    require_dense(m, operand);
    const double t = tau.value();
    if (t == 0.0) return m;

    const auto svd = thin_svd(m, operand);
    const Vector& sigma = svd.singularValues();
    Index rank = 0;
    while (rank < sigma.size() && sigma(rank) > t) ++rank;
    if (rank == 0) return Matrix::Zero(m.rows(), m.cols());

    const Vector shrunk = (sigma.head(rank).array() - t).matrix();
    return svd.matrixU().leftCols(rank) * shrunk.asDiagonal() *
           svd.matrixV().leftCols(rank).transpose();
}

/// Entrywise shrinkage: sign(e) * max(|e| - omega, 0).
inline Matrix soft_threshold(const Matrix& m, Threshold omega) {
    require_dense(m, "soft_threshold operand");
    const double w = omega.value();
    return m.unaryExpr([w](double e) {
        if (e > w) return e - w;
        if (e < -w) return e + w;
        return 0.0;
    });
}

/// Row-wise group shrinkage, the proximal map of xi * ||.||_{2,1}.
///
/// A row r with ||r|| > xi becomes ((||r|| - xi) / ||r||) * r; every other row,
/// including all-zero rows, becomes zero.
inline Matrix row_shrink(const Matrix& m, Threshold xi) {
    require_dense(m, "row_shrink operand");
    const double x = xi.value();
    Matrix out = Matrix::Zero(m.rows(), m.cols());
    for (Index i = 0; i < m.rows(); ++i) {
        const double norm = m.row(i).norm();
        if (norm > x && norm > 0.0) out.row(i) = ((norm - x) / norm) * m.row(i);
    }
    return out;
}

/// Entrywise projection onto [0, 1].
inline Matrix clamp01(const Matrix& m) {
    require_dense(m, "clamp01 operand");
    return m.unaryExpr([](double e) { return std::clamp(e, 0.0, 1.0); });
}

}  // namespace flr
