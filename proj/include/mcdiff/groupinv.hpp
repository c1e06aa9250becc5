#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include <Eigen/Dense>

#include "mcdiff/errors.hpp"
#include "mcdiff/mixture.hpp"

namespace mcdiff {

namespace detail {

inline Mat drop_row_col(const Mat& A, Eigen::Index row, Eigen::Index col)
{
    const Eigen::Index n = A.rows();
    Mat out(n - 1, n - 1);
    for (Eigen::Index i = 0, r = 0; i < n; ++i) {
        if (i == row)
            continue;
        for (Eigen::Index j = 0, k = 0; j < n; ++j) {
            if (j == col)
                continue;
            out(r, k++) = A(i, j);
        }
        ++r;
    }
    return out;
}

/// Laplace expansion along the first row.
inline double laplace_det(const Mat& A)
{
    const Eigen::Index n = A.rows();
    if (n == 0)
        return 1.0;
    if (n == 1)
        return A(0, 0);
    if (n == 2)
        return A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
    double det = 0.0;
    double sign = 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (A(0, j) != 0.0)
            det += sign * A(0, j) * laplace_det(drop_row_col(A, 0, j));
        sign = -sign;
    }
    return det;
}

inline double minor_det(const Mat& A, Eigen::Index row, Eigen::Index col)
{
    Mat sub = drop_row_col(A, row, col);
    if (A.rows() <= 6)
        return laplace_det(sub);
    return sub.fullPivLu().determinant();
}

inline double inf_norm(const Mat& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); }

} // namespace detail

/**
 * @brief Adjugate (classical adjoint) of a square matrix.
 *
 * Cofactors come from Laplace expansion up to N = 6 and from LU
 * determinants of the minors beyond that. Works for singular input.
 */
inline Mat adjugate(const Mat& A)
{
    if (A.rows() != A.cols())
        throw Error(ErrorKind::DimensionMismatch, "adjugate needs a square matrix");
    const Eigen::Index n = A.rows();
    if (n == 1)
        return Mat::Ones(1, 1);
    Mat adj(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            adj(j, i) = (((i + j) % 2 == 0) ? 1.0 : -1.0) * detail::minor_det(A, i, j);
    return adj;
}

/// Sum of the principal (N-1)-minors, equal to trace(adj(A)).
inline double principal_minor_sum(const Mat& A)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        s += detail::minor_det(A, i, i);
    return s;
}

/**
 * @brief Rank-(N-1) matrix together with its positive kernel vectors.
 *
 * A b = 0, A^T c = 0 and <b, c> = 1.
 */
struct RankDeficientMatrix {
    Mat A;
    Vec b;
    Vec c;
};

/// Normalizes c so that <b, c> = 1 and validates the kernel and rank conditions.
inline RankDeficientMatrix make_rank_deficient(const Mat& A, const Vec& b, const Vec& c)
{
    const Eigen::Index n = A.rows();
    if (A.cols() != n || b.size() != n || c.size() != n)
        throw Error(ErrorKind::DimensionMismatch, "kernel vectors must match the matrix size");
    if (!(b.array() > 0.0).all() || !(c.array() > 0.0).all())
        throw Error(ErrorKind::KernelMismatch, "kernel vectors must be strictly positive");
    const Vec cn = c / b.dot(c);
    const double normA = A.norm();
    if (normA == 0.0)
        throw Error(ErrorKind::SingularD0, "zero matrix");
    if ((A * b).norm() > 1e-10 * normA * b.norm())
        throw Error(ErrorKind::KernelMismatch, "b is not a right kernel vector");
    if ((A.transpose() * cn).norm() > 1e-10 * normA * cn.norm())
        throw Error(ErrorKind::KernelMismatch, "c is not a left kernel vector");
    if (n >= 2) {
        Eigen::JacobiSVD<Mat> svd(A);
        const Vec& sv = svd.singularValues();
        if (sv[n - 2] <= 1e-10 * normA)
            throw Error(ErrorKind::KernelMismatch, "rank is below N-1");
    }
    return {A, b, cn};
}

struct GroupInverseResult {
    Mat Asharp;
    double D0 = 0.0;
    double t = 0.0;
};

/**
 * @brief Group inverse through the adjugate of the rank-one shifted matrix.
 *
 * A# = (adj(A + t b c^T) - D0 b c^T) / (t D0), D0 = trace adj(A).
 * The result is independent of t; the default t is the infinity norm of A.
 */
inline GroupInverseResult group_inverse(const RankDeficientMatrix& m, std::optional<double> t = std::nullopt)
{
    const Eigen::Index n = m.A.rows();
    const double scale = detail::inf_norm(m.A);
    const double tt = t.value_or(scale);
    if (!(tt > 0.0))
        throw Error(ErrorKind::InvalidParameter, "shift t must be positive");
    const double D0 = principal_minor_sum(m.A);
    if (std::abs(D0) <= 1e-12 * std::pow(scale, static_cast<double>(n - 1)))
        throw Error(ErrorKind::SingularD0, "sum of principal minors vanishes");
    const Mat bc = m.b * m.c.transpose();
    const Mat shifted_adj = adjugate(m.A + tt * bc);
    return {(shifted_adj - D0 * bc) / (tt * D0), D0, tt};
}

/**
 * @brief Group inverse by a linear solve: (I - b c^T) Z with (A + b c^T) Z = I - b c^T.
 */
inline Mat group_inverse_oracle(const RankDeficientMatrix& m)
{
    const Eigen::Index n = m.A.rows();
    const Mat proj = Mat::Identity(n, n) - m.b * m.c.transpose();
    const double scale = detail::inf_norm(m.A);
    // b c^T scaled to the size of A; the projected solution is the same for any positive factor
    const Mat shifted = m.A + scale * m.b * m.c.transpose();
    Eigen::FullPivLU<Mat> lu(shifted);
    if (!lu.isInvertible())
        throw Error(ErrorKind::SingularD0, "shifted matrix is singular");
    return proj * lu.solve(proj);
}

/// Orthonormal basis (as columns) of the complement of dir.
inline Mat orthogonal_complement(const Vec& dir)
{
    const Eigen::Index n = dir.size();
    Eigen::HouseholderQR<Mat> qr{Mat(dir)};
    Mat Q = qr.householderQ() * Mat::Identity(n, n);
    return Q.rightCols(n - 1);
}

struct SubspaceCertificate {
    double min_eig = 0.0;
    bool ok = false;
};

/**
 * @brief Smallest eigenvalue of a symmetric matrix restricted to {kernel_dir}^perp.
 */
inline SubspaceCertificate psd_on_subspace(const Mat& Msym, const Vec& kernel_dir)
{
    if (Msym.rows() != Msym.cols() || Msym.rows() != kernel_dir.size())
        throw Error(ErrorKind::DimensionMismatch, "matrix and direction sizes differ");
    const double norm = Msym.norm();
    if ((Msym - Msym.transpose()).norm() > 1e-10 * std::max(1.0, norm))
        throw Error(ErrorKind::NotSymmetric, "matrix is not symmetric");
    const Mat Q = orthogonal_complement(kernel_dir);
    const Mat sym = 0.5 * (Msym + Msym.transpose());
    const Mat restricted = Q.transpose() * sym * Q;
    Eigen::SelfAdjointEigenSolver<Mat> es(restricted, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    return {lo, lo >= -1e-10 * norm};
}

namespace detail {
inline double min_sym_eig(const Mat& A)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}
} // namespace detail

/**
 * @brief Determinant monotonicity on the PSD cone: A >= B >= 0 implies det A >= det B.
 */
inline bool det_monotone(const Mat& A, const Mat& B)
{
    if (A.rows() != A.cols() || B.rows() != B.cols() || A.rows() != B.rows())
        throw Error(ErrorKind::DimensionMismatch, "matrices must be square and equal-sized");
    const double scale = std::max({1.0, A.norm(), B.norm()});
    auto symmetric = [&](const Mat& S) { return (S - S.transpose()).norm() <= 1e-10 * scale; };
    if (!symmetric(A) || !symmetric(B))
        throw Error(ErrorKind::PreconditionViolated, "inputs must be symmetric");
    if (detail::min_sym_eig(B) < -1e-10 * scale || detail::min_sym_eig(A - B) < -1e-10 * scale)
        throw Error(ErrorKind::PreconditionViolated, "need B >= 0 and A - B >= 0");
    const double detA = A.determinant();
    return detA >= B.determinant() - 1e-10 * std::max(1.0, std::abs(detA));
}

} // namespace mcdiff
