#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "mcdiff/closures.hpp"
#include "mcdiff/errors.hpp"
#include "mcdiff/groupinv.hpp"
#include "mcdiff/mixture.hpp"

namespace mcdiff {

namespace detail {
inline void require_positive(const Vec& v, const char* what)
{
    if (!(v.array() > 0.0).all() || !v.allFinite())
        throw Error(ErrorKind::NonPositiveDiffusivity, what);
}
inline void require_strict_composition(const Vec& x)
{
    if (!(x.array() > 0.0).all())
        throw Error(ErrorKind::ZeroFraction, "composition must be strictly positive");
}
} // namespace detail

/**
 * @brief Multicomponent Darken equation, MS diffusivities from self-diffusivities.
 *
 * Dij = d_i d_j sum_k x_k / d_k for i != j. The diagonal is left at zero.
 */
inline Mat darken_ms_diffusivities(const Vec& x, const Vec& d)
{
    if (x.size() != d.size())
        throw Error(ErrorKind::DimensionMismatch, "x and d differ in length");
    detail::require_positive(d, "self-diffusivities must be positive");
    detail::require_strict_composition(x);
    const double mix = (x.array() / d.array()).sum();
    Mat D = (d * d.transpose()) * mix;
    D.diagonal().setZero();
    return D;
}

/// Self-diffusion model: table(i, k) is the diffusivity of i infinitely dilute in pure k.
struct SelfDiffusionModel {
    Mat D_dilute;
};

/// Harmonic mixing 1/d_i = sum_k x_k / D_i^(x_k -> 1).
inline Vec self_diffusion_mix(const SelfDiffusionModel& model, const Vec& x)
{
    const Mat& T = model.D_dilute;
    if (T.rows() != x.size() || T.cols() != x.size())
        throw Error(ErrorKind::DimensionMismatch, "self-diffusion table must be N x N");
    if (!(T.array() > 0.0).all())
        throw Error(ErrorKind::NonPositiveDiffusivity, "self-diffusion table entries must be positive");
    return (T.cwiseInverse() * x).cwiseInverse();
}

/// Geometric interpolation between the two infinite-dilution limits.
inline double vignes_binary(double D12_x1to1, double D12_x2to1, double x1)
{
    if (!(D12_x1to1 > 0.0) || !(D12_x2to1 > 0.0))
        throw Error(ErrorKind::NonPositiveDiffusivity, "Vignes endpoints must be positive");
    if (!(x1 >= 0.0 && x1 <= 1.0))
        throw Error(ErrorKind::InvalidParameter, "x1 must lie in [0, 1]");
    return std::pow(D12_x1to1, x1) * std::pow(D12_x2to1, 1.0 - x1);
}

/**
 * @brief Molar Maxwell-Stefan matrix, B_ij = -x_i / Dij, B_ii = sum_{k != i} x_k / Dik.
 */
inline Mat assemble_Bmol(const Vec& x, const Mat& Dms)
{
    const Eigen::Index n = x.size();
    if (Dms.rows() != n || Dms.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "MS diffusivity table must be N x N");
    detail::require_strict_composition(x);
    Mat B(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double diag = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == i)
                continue;
            if (!(Dms(i, k) > 0.0))
                throw Error(ErrorKind::NonPositiveDiffusivity, "MS diffusivities must be positive");
            if (std::abs(Dms(i, k) - Dms(k, i)) > 1e-12 * std::abs(Dms(i, k)))
                throw Error(ErrorKind::NotSymmetric, "MS diffusivity table must be symmetric");
            B(i, k) = -x[i] / Dms(i, k);
            diag += x[k] / Dms(i, k);
        }
        B(i, i) = diag;
    }
    return B;
}

/**
 * @brief Recovers core-diagonal self-diffusivities from a molar MS matrix of Darken type.
 *
 * Uses Dij Dik / Djk = d_i^2 S with S = sum x_k/d_k; needs N >= 3.
 */
inline Vec core_diagonal_from_Bmol(const Vec& x, const Mat& Bmol)
{
    const Eigen::Index n = x.size();
    if (n < 3)
        throw Error(ErrorKind::BinaryMixture, "binary Darken relation does not determine two diffusivities");
    detail::require_strict_composition(x);
    Mat Dms(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k)
            Dms(i, k) = (i == k) ? 0.0 : -x[i] / Bmol(i, k);
    Vec g(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = (i + 1) % n;
        const Eigen::Index k = (i + 2) % n;
        g[i] = Dms(i, j) * Dms(i, k) / Dms(j, k);
    }
    const double sqrtS = (x.array() / g.array().sqrt()).sum();
    return g.array().sqrt() / sqrtS;
}

/// f_mol = f M_i M_k c / rho.
inline Mat molar_friction_from_mass(const MixtureState& s, const Mat& f)
{
    const Vec& M = s.M();
    Mat out = (M * M.transpose()).cwiseProduct(f) * (s.concentration() / s.rho());
    out.diagonal().setZero();
    return out;
}

inline Mat mass_friction_from_molar(const MixtureState& s, const Mat& f_mol)
{
    const Vec& M = s.M();
    Mat out = f_mol.cwiseQuotient(M * M.transpose()) * (s.rho() / s.concentration());
    out.diagonal().setZero();
    return out;
}

/// Mass-based friction coefficients of an MS diffusivity table, f_ik = rho / (c M_i M_k Dik).
inline Mat mass_friction_from_ms_diffusivities(const MixtureState& s, const Mat& Dms)
{
    const Eigen::Index n = s.size();
    Mat f_mol = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k)
            if (i != k) {
                if (!(Dms(i, k) > 0.0))
                    throw Error(ErrorKind::NonPositiveDiffusivity, "MS diffusivities must be positive");
                f_mol(i, k) = 1.0 / Dms(i, k);
            }
    return mass_friction_from_molar(s, f_mol);
}

inline Mat ms_diffusivities_from_mass_friction(const MixtureState& s, const Mat& f)
{
    Mat D = molar_friction_from_mass(s, f).cwiseInverse();
    D.diagonal().setZero();
    return D;
}

struct TernaryFluxes {
    Mat J;
    double det = 0.0;
    Vec diag_scaled; ///< diag(f23, f13, f12) / det, the core diagonal times M
    Vec d;           ///< core-diagonal diffusivities (diag_scaled / M)
};

/**
 * @brief Closed-form ternary Maxwell-Stefan inversion.
 *
 * det = y1 f12 f13 + y2 f12 f23 + y3 f13 f23 and
 * J = -(1/det) (I - y e^T) diag(f23, f13, f12) dforces.
 */
inline TernaryFluxes ternary_explicit_fluxes(const MixtureState& s, const Mat& f, const Mat& dforces)
{
    if (s.size() != 3 || f.rows() != 3 || f.cols() != 3 || dforces.rows() != 3)
        throw Error(ErrorKind::DimensionMismatch, "closed form is ternary only");
    const Vec& y = s.y();
    const double f12 = f(0, 1), f13 = f(0, 2), f23 = f(1, 2);
    const double det = y[0] * f12 * f13 + y[1] * f12 * f23 + y[2] * f13 * f23;
    const double fmax = std::max({std::abs(f12), std::abs(f13), std::abs(f23)});
    if (!(std::abs(det) > 1e-14 * fmax * fmax))
        throw Error(ErrorKind::DegenerateTernary, "determinant of the reduced MS matrix vanishes");
    TernaryFluxes out;
    out.det = det;
    out.diag_scaled = Vec(3);
    out.diag_scaled << f23 / det, f13 / det, f12 / det;
    out.d = out.diag_scaled.cwiseQuotient(s.M());
    const Mat Pt = Mat::Identity(3, 3) - y * Vec::Ones(3).transpose();
    out.J = -Pt * out.diag_scaled.asDiagonal() * dforces;
    return out;
}

/**
 * @brief Fick-Onsager coefficients of the core-diagonal closure.
 *
 * L_ij = rho_i (lambda_i delta_ij - y_j (lambda_i + lambda_j - sum_k y_k lambda_k)), lambda_i = d_i M_i.
 */
inline OnsagerClosure core_diagonal_fo_coeffs(const MixtureState& s, const Vec& d)
{
    require_strict(s);
    const Eigen::Index n = s.size();
    if (d.size() != n)
        throw Error(ErrorKind::DimensionMismatch, "d size differs from species count");
    detail::require_positive(d, "core diagonal must be positive");
    const Vec lambda = d.cwiseProduct(s.M());
    const Vec& y = s.y();
    const double mean = y.dot(lambda);
    const Vec rho_i = s.partial_densities();
    Mat L(n, n);
    OnsagerStructure st{Vec(n), Mat::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double shift = lambda[i] + lambda[j] - mean;
            L(i, j) = rho_i[i] * ((i == j ? lambda[i] : 0.0) - y[j] * shift);
            if (i != j)
                st.S(i, j) = -shift;
        }
        st.a[i] = lambda[i] - y[i] * (2.0 * lambda[i] - mean);
    }
    return {L, st};
}

} // namespace mcdiff
