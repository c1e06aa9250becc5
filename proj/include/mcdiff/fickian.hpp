#pragma once

#include <cmath>
#include <complex>
#include <string_view>

#include <Eigen/Dense>

#include "mcdiff/closures.hpp"
#include "mcdiff/errors.hpp"
#include "mcdiff/groupinv.hpp"
#include "mcdiff/mixture.hpp"

namespace mcdiff {

enum class FickianRegime { FullHessian, IdealIsobaric, MoleFractionForm };

constexpr std::string_view to_string(FickianRegime r)
{
    switch (r) {
    case FickianRegime::FullHessian: return "full-hessian";
    case FickianRegime::IdealIsobaric: return "ideal-isobaric";
    case FickianRegime::MoleFractionForm: return "mole-fraction-form";
    }
    return "unknown";
}

struct FickianMatrix {
    Mat D;
    FickianRegime regime = FickianRegime::IdealIsobaric;
};

/// Fickian matrix M^-1 L H M for a user-supplied Hessian already divided by RT.
inline FickianMatrix fickian_from_hessian(const MixtureState& s, const Mat& L, const Mat& hessian_over_RT)
{
    const Vec invM = s.M().cwiseInverse();
    return {invM.asDiagonal() * L * hessian_over_RT * s.M().asDiagonal(), FickianRegime::FullHessian};
}

/// Hessian of rho psi / RT for an ideal isobaric mixture: M^-1 R^-1 - (1/c) M^-1 e e^T M^-1.
inline Mat ideal_isobaric_hessian_over_RT(const MixtureState& s)
{
    require_strict(s);
    const Vec invM = s.M().cwiseInverse();
    const Vec invRho = s.partial_densities().cwiseInverse();
    return Mat(invM.cwiseProduct(invRho).asDiagonal()) - (invM * invM.transpose()) / s.concentration();
}

/**
 * @brief D^Fick = M^-1 (L R^-1 - (1/c) L M^-1 e e^T) for ideal isothermal isobaric mixtures.
 *
 * The molar masses form a left null vector.
 */
inline FickianMatrix fickian_ideal_isobaric(const MixtureState& s, const OnsagerClosure& oc)
{
    require_strict(s);
    const Eigen::Index n = s.size();
    const Vec invM = s.M().cwiseInverse();
    const Mat& L = oc.L;
    const Mat D = invM.asDiagonal()
                  * (L * s.partial_densities().cwiseInverse().asDiagonal()
                     - (L * invM) * Vec::Ones(n).transpose() / s.concentration());
    return {D, FickianRegime::IdealIsobaric};
}

/// Same matrix from the Maxwell-Stefan side: M^-1 (B# - B# X e e^T).
inline FickianMatrix fickian_ideal_isobaric_ms(const MixtureState& s, const Mat& f)
{
    const Eigen::Index n = s.size();
    const Mat Bs = ms_group_inverse(s, f).Asharp;
    const Vec x = s.mole_fractions();
    const Mat D = s.M().cwiseInverse().asDiagonal() * (Bs - (Bs * x) * Vec::Ones(n).transpose());
    return {D, FickianRegime::IdealIsobaric};
}

/// Mole-fraction form D~ with j_mol = -c D~ grad x: D~ = L X^-1 / c.
inline FickianMatrix fickian_molefraction_form(const MixtureState& s, const OnsagerClosure& oc)
{
    require_strict(s);
    const Vec x = s.mole_fractions();
    return {oc.L * x.cwiseInverse().asDiagonal() / s.concentration(), FickianRegime::MoleFractionForm};
}

/// Mole-fraction form from friction coefficients: D~ = B# M.
inline FickianMatrix fickian_molefraction_form_ms(const MixtureState& s, const Mat& f)
{
    return {ms_group_inverse(s, f).Asharp * s.M().asDiagonal(), FickianRegime::MoleFractionForm};
}

/// Diffusion matrix c R^-1 B#, defined only for strictly positive densities.
inline Mat cb_diffusion_matrix(const MixtureState& s, const Mat& f)
{
    require_strict(s);
    return s.concentration() * s.partial_densities().cwiseInverse().asDiagonal() * ms_group_inverse(s, f).Asharp;
}

struct SpectrumReport {
    Eigen::VectorXcd eigenvalues;
    double max_abs_imag = 0.0; ///< relative to ||D||
    double min_real = 0.0;     ///< relative to ||D||
};

inline SpectrumReport fickian_spectrum(const Mat& D)
{
    Eigen::EigenSolver<Mat> es(D, false);
    SpectrumReport r;
    r.eigenvalues = es.eigenvalues();
    const double norm = std::max(D.norm(), std::numeric_limits<double>::min());
    r.max_abs_imag = r.eigenvalues.imag().cwiseAbs().maxCoeff() / norm;
    r.min_real = r.eigenvalues.real().minCoeff() / norm;
    return r;
}

/**
 * @brief Slack of D_ii >= d_i (1 - y_i)(1 - x_i) for the core-diagonal closure.
 *
 * Allows d_i >= 0; the Onsager matrix is P^T R diag(d) M P.
 */
inline Vec fick_diag_bound_check(const MixtureState& s, const Vec& d)
{
    require_strict(s);
    if (d.size() != s.size())
        throw Error(ErrorKind::DimensionMismatch, "d size differs from species count");
    if ((d.array() < 0.0).any())
        throw Error(ErrorKind::NonPositiveDiffusivity, "core diagonal must be non-negative");
    const DerivedMatrices dm = derived(s);
    const OnsagerClosure oc{dm.Pt * dm.R * d.asDiagonal() * dm.Mdiag * dm.P, std::nullopt};
    const Mat D = fickian_ideal_isobaric(s, oc).D;
    const Vec& y = s.y();
    Vec slack(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i)
        slack[i] = D(i, i) - d[i] * (1.0 - y[i]) * (1.0 - dm.x[i]);
    return slack;
}

/// True iff every off-diagonal entry is strictly negative.
inline bool z_matrix_test(const Mat& B)
{
    if (B.rows() != B.cols() || B.rows() < 2)
        return false;
    for (Eigen::Index i = 0; i < B.rows(); ++i)
        for (Eigen::Index k = 0; k < B.cols(); ++k)
            if (i != k && !(B(i, k) < 0.0))
                return false;
    return true;
}

struct ZMatrixCandidate {
    Mat B;                 ///< (L R^-1)#
    double identity_residual = 0.0; ///< ||R P L# P^T - (L R^-1)#|| / ||B||
    bool strict_z = false;
};

/**
 * @brief Maxwell-Stefan candidate of an Onsager matrix, computed two ways.
 */
inline ZMatrixCandidate z_matrix_candidate(const MixtureState& s, const Mat& L)
{
    require_strict(s);
    const Eigen::Index n = s.size();
    const DerivedMatrices dm = derived(s);
    const Vec e = Vec::Ones(n);
    const Mat Lsharp = group_inverse(make_rank_deficient(L, e, e)).Asharp;
    const Mat viaL = dm.R * dm.P * Lsharp * dm.Pt;
    const Mat LRinv = L * s.partial_densities().cwiseInverse().asDiagonal();
    const Mat B = group_inverse(make_rank_deficient(LRinv, s.y(), e)).Asharp;
    ZMatrixCandidate out;
    out.B = B;
    out.identity_residual = (viaL - B).norm() / std::max(B.norm(), std::numeric_limits<double>::min());
    out.strict_z = z_matrix_test(B);
    return out;
}

/**
 * @brief Composition-dependent ternary friction with a negative coefficient.
 *
 * tau(y) = |y - y0|^2 rho (Y - y y^T) + rho y1 y2 y3 A with
 * A = [[a-1, 1, -a], [1, a-1, -a], [-a, -a, 2a]], a > 2. A e = 0 and A is
 * positive definite on {e}^perp, so tau is a valid friction matrix.
 */
class CounterexampleFactory {
public:
    CounterexampleFactory(double a, Vec y0) : a_(a), y0_(std::move(y0))
    {
        if (!(a_ > 2.0))
            throw Error(ErrorKind::InvalidParameter, "parameter a must exceed 2");
        if (y0_.size() != 3 || !(y0_.array() > 0.0).all() || std::abs(y0_.sum() - 1.0) > 1e-9)
            throw Error(ErrorKind::InvalidParameter, "reference state must be a strict ternary composition");
    }

    double a() const noexcept { return a_; }
    const Vec& y0() const noexcept { return y0_; }

    Mat A() const
    {
        Mat A(3, 3);
        A << a_ - 1.0, 1.0, -a_, 1.0, a_ - 1.0, -a_, -a_, -a_, 2.0 * a_;
        return A;
    }

    /// f_ik = |y - y0|^2 + y_[ik] A_ik, [ik] the complementary index.
    Mat friction(const Vec& y) const { return build(y, +1.0); }

    /// f_ik = -tau_ik / (rho y_i y_k), the coefficients matching tau_ik = -rho f_ik y_i y_k.
    Mat consistent_friction(const Vec& y) const { return build(y, -1.0); }

    Mat tau(const MixtureState& s) const
    {
        const Vec& y = s.y();
        const double dist2 = (y - y0_).squaredNorm();
        const Mat base = s.rho() * (Mat(y.asDiagonal()) - y * y.transpose());
        return dist2 * base + s.rho() * y[0] * y[1] * y[2] * A();
    }

private:
    Mat build(const Vec& y, double sign) const
    {
        const double dist2 = (y - y0_).squaredNorm();
        const Mat Am = A();
        Mat f = Mat::Zero(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k)
                if (i != k)
                    f(i, k) = dist2 + sign * y[3 - i - k] * Am(i, k);
        return f;
    }

    double a_;
    Vec y0_;
};

inline CounterexampleFactory lemma81_counterexample(double a, const Vec& y0) { return {a, y0}; }

struct PosdiagResult {
    std::vector<bool> holds;
    Vec slack; ///< rhs - lhs; equals M_i d_i of the projected closure
};

/**
 * @brief Per-species test <S y, e_i> + 2/(N-2) <S e, e_i> y_i <= <S e, e> y_i / ((N-2)(N-1)).
 */
inline PosdiagResult posdiag_condition(const MixtureState& s, const Mat& S)
{
    const Eigen::Index n = s.size();
    if (n < 3)
        throw Error(ErrorKind::BinaryMixture, "condition needs N >= 3");
    if (S.rows() != n || S.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "S must be N x N");
    const Vec& y = s.y();
    const Vec Sy = S * y;
    const Vec Se = S * Vec::Ones(n);
    const double total = Se.sum();
    const double nd = static_cast<double>(n);
    PosdiagResult r{std::vector<bool>(n), Vec(n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        const double lhs = Sy[i] + 2.0 / (nd - 2.0) * Se[i] * y[i];
        const double rhs = total * y[i] / ((nd - 2.0) * (nd - 1.0));
        r.slack[i] = rhs - lhs;
        r.holds[i] = lhs <= rhs;
    }
    return r;
}

} // namespace mcdiff
