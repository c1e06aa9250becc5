#pragma once

#include <algorithm>
#include <optional>

#include <Eigen/Dense>

#include "mcdiff/errors.hpp"
#include "mcdiff/groupinv.hpp"
#include "mcdiff/mixture.hpp"

namespace mcdiff {

/// Diagonal/off-diagonal split L = R (diag(a) + S Y).
struct OnsagerStructure {
    Vec a;
    Mat S;
};

/**
 * @brief Fick-Onsager closure J = -L grad(mu/RT).
 *
 * L is symmetric, annihilates e and is positive semidefinite on {e}^perp.
 */
struct OnsagerClosure {
    Mat L;
    std::optional<OnsagerStructure> structure;
};

/// Maxwell-Stefan friction coefficients f_ik (diagonal stored as zero).
struct MaxwellStefanClosure {
    Mat f;
};

/// Projected closure with diagonal diffusivities d and symmetric off-diagonal K, K e = 0.
struct NovelClosure {
    Vec d;
    Mat K;
};

namespace detail {
inline double rel_scale(const Mat& A) { return std::max(A.norm(), std::numeric_limits<double>::min()); }
} // namespace detail

inline Mat onsager_from_structure(const MixtureState& s, const OnsagerStructure& st)
{
    const Eigen::Index n = s.size();
    if (st.a.size() != n || st.S.rows() != n || st.S.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "structure size differs from species count");
    return s.partial_densities().asDiagonal() * (Mat(st.a.asDiagonal()) + st.S * s.y().asDiagonal());
}

/// Canonical structure of a given L on a strict state: S_ik = L_ik/(rho y_i y_k), a_i = L_ii/rho_i.
inline OnsagerStructure structure_from_L(const MixtureState& s, const Mat& L)
{
    require_strict(s);
    const Eigen::Index n = s.size();
    const Vec rho_i = s.partial_densities();
    OnsagerStructure st{Vec(n), Mat::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        st.a[i] = L(i, i) / rho_i[i];
        for (Eigen::Index k = 0; k < n; ++k)
            if (k != i)
                st.S(i, k) = L(i, k) / (rho_i[i] * s.y()[k]);
    }
    return st;
}

/// Throws unless the closure is symmetric, annihilates e and is PSD on {e}^perp.
inline void validate_onsager(const MixtureState& s, const OnsagerClosure& oc)
{
    const Eigen::Index n = s.size();
    const Mat& L = oc.L;
    if (L.rows() != n || L.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "L must be N x N");
    const double scale = detail::rel_scale(L);
    if ((L - L.transpose()).norm() > 1e-10 * scale)
        throw Error(ErrorKind::NotSymmetric, "L is not symmetric");
    if ((L * Vec::Ones(n)).norm() > 1e-10 * scale)
        throw Error(ErrorKind::KernelMismatch, "L e does not vanish");
    if (!psd_on_subspace(L, Vec::Ones(n)).ok)
        throw Error(ErrorKind::PreconditionViolated, "L is not positive semidefinite on {e}^perp");
    if (oc.structure) {
        const auto& st = *oc.structure;
        if ((onsager_from_structure(s, st) - L).norm() > 1e-10 * scale)
            throw Error(ErrorKind::PreconditionViolated, "structure does not reproduce L");
        if (st.S.diagonal().cwiseAbs().maxCoeff() > 0.0)
            throw Error(ErrorKind::PreconditionViolated, "S must have zero diagonal");
        if ((st.S - st.S.transpose()).norm() > 1e-10 * detail::rel_scale(st.S))
            throw Error(ErrorKind::NotSymmetric, "S is not symmetric");
    }
}

/// Zeroes the diagonal and checks f_ik = f_ki.
inline MaxwellStefanClosure make_ms_closure(Mat f)
{
    if (f.rows() != f.cols() || f.rows() < 2)
        throw Error(ErrorKind::DimensionMismatch, "friction table must be square, N >= 2");
    if (!f.allFinite())
        throw Error(ErrorKind::InvalidParameter, "friction table has non-finite entries");
    f.diagonal().setZero();
    if ((f - f.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, f.cwiseAbs().maxCoeff()))
        throw Error(ErrorKind::AsymmetricFriction, "f_ik differs from f_ki");
    return {f};
}

/**
 * @brief Maxwell-Stefan matrix: B_ij = -y_i f_ij (i != j), B_ii = sum_{k != i} y_k f_ik.
 */
inline Mat assemble_B(const MixtureState& s, const Mat& f_in)
{
    const Mat f = make_ms_closure(f_in).f;
    const Eigen::Index n = s.size();
    if (f.rows() != n)
        throw Error(ErrorKind::DimensionMismatch, "friction table size differs from species count");
    const Vec& y = s.y();
    Mat B(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double diag = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i)
                continue;
            B(i, k) = -y[i] * f(i, k);
            diag += y[k] * f(i, k);
        }
        B(i, i) = diag;
    }
    return B;
}

/// tau_ik = -rho f_ik y_i y_k off the diagonal, diagonal closing the row sums.
inline Mat assemble_tau(const MixtureState& s, const Mat& f_in)
{
    const Mat f = make_ms_closure(f_in).f;
    const Eigen::Index n = s.size();
    if (f.rows() != n)
        throw Error(ErrorKind::DimensionMismatch, "friction table size differs from species count");
    const Vec& y = s.y();
    Mat tau(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double diag = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i)
                continue;
            tau(i, k) = -s.rho() * f(i, k) * y[i] * y[k];
            diag -= tau(i, k);
        }
        tau(i, i) = diag;
    }
    return tau;
}

inline void validate_ms(const MixtureState& s, const MaxwellStefanClosure& msc)
{
    const Mat tau = assemble_tau(s, msc.f);
    if (!psd_on_subspace(tau, Vec::Ones(s.size())).ok)
        throw Error(ErrorKind::PreconditionViolated, "tau is not positive semidefinite on {e}^perp");
}

/// Group inverse of B(y) with right kernel y and left kernel e.
inline GroupInverseResult ms_group_inverse(const MixtureState& s, const Mat& f)
{
    require_strict(s);
    const Eigen::Index n = s.size();
    const Mat B = assemble_B(s, f);
    return group_inverse(make_rank_deficient(B, s.y(), Vec::Ones(n)));
}

/// D = diag(d) + X^1/2 K X^1/2.
inline Mat novel_D(const MixtureState& s, const NovelClosure& nc)
{
    const DerivedMatrices dm = derived(s);
    const Mat Xh = dm.X_half();
    return Mat(nc.d.asDiagonal()) + Xh * nc.K * Xh;
}

inline void validate_novel(const MixtureState& s, const NovelClosure& nc)
{
    const Eigen::Index n = s.size();
    if (nc.d.size() != n || nc.K.rows() != n || nc.K.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "novel closure size differs from species count");
    const double scale = std::max({1e-300, nc.K.cwiseAbs().maxCoeff(), nc.d.cwiseAbs().maxCoeff()});
    if ((nc.K - nc.K.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
        throw Error(ErrorKind::NotSymmetric, "K is not symmetric");
    if (nc.K.diagonal().cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw Error(ErrorKind::PreconditionViolated, "K must have zero diagonal");
    if ((nc.K * Vec::Ones(n)).cwiseAbs().maxCoeff() > 1e-12 * n * scale)
        throw Error(ErrorKind::KernelMismatch, "K e does not vanish");
    const Vec sx = derived(s).sqrt_x();
    if (!psd_on_subspace(novel_D(s, nc), sx).ok)
        throw Error(ErrorKind::PreconditionViolated, "D is not positive semidefinite on {sqrt x}^perp");
}

/// Onsager matrix of the projected closure, P^T R (diag(d) + K X) M P.
inline Mat novel_onsager_matrix(const MixtureState& s, const NovelClosure& nc)
{
    const DerivedMatrices dm = derived(s);
    return dm.Pt * dm.R * (Mat(nc.d.asDiagonal()) + nc.K * dm.X) * dm.Mdiag * dm.P;
}

inline Mat flux_FO(const OnsagerClosure& oc, const GradientField& grad)
{
    if (grad.rows() != oc.L.cols())
        throw Error(ErrorKind::DimensionMismatch, "gradient rows must match L");
    return -oc.L * grad;
}

/// J = -B# R grad, the solution of -B J = R P grad with e^T J = 0.
inline Mat flux_MS(const MixtureState& s, const Mat& f, const GradientField& grad)
{
    if (grad.rows() != s.size())
        throw Error(ErrorKind::DimensionMismatch, "gradient rows must match species count");
    const Mat Bs = ms_group_inverse(s, f).Asharp;
    return -Bs * s.partial_densities().asDiagonal() * grad;
}

inline Mat flux_novel(const MixtureState& s, const NovelClosure& nc, const GradientField& grad)
{
    require_strict(s);
    if (grad.rows() != s.size())
        throw Error(ErrorKind::DimensionMismatch, "gradient rows must match species count");
    return -novel_onsager_matrix(s, nc) * grad;
}

/// Diffusive entropy production divided by R: -sum_i <j_i, grad(mu_i/RT)>.
inline double entropy_production_diff(const Mat& J, const GradientField& grad)
{
    if (J.rows() != grad.rows() || J.cols() != grad.cols())
        throw Error(ErrorKind::DimensionMismatch, "flux and gradient shapes differ");
    return -J.cwiseProduct(grad).sum();
}

} // namespace mcdiff
