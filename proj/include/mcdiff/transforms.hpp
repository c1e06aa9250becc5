#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string_view>

#include <Eigen/Dense>

#include "mcdiff/closures.hpp"
#include "mcdiff/errors.hpp"
#include "mcdiff/groupinv.hpp"
#include "mcdiff/mixture.hpp"

namespace mcdiff {

/// Random gradient fields used to compare fluxes of two closures.
struct ProbeSet {
    std::size_t count = 20;
    std::uint64_t seed = 0;
    Eigen::Index dim = 3;
};

inline std::vector<GradientField> make_probes(Eigen::Index n, const ProbeSet& ps)
{
    std::mt19937_64 rng(ps.seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<GradientField> out;
    out.reserve(ps.count);
    for (std::size_t k = 0; k < ps.count; ++k) {
        GradientField m(n, ps.dim);
        for (Eigen::Index i = 0; i < m.size(); ++i)
            m.data()[i] = g(rng);
        out.push_back(std::move(m));
    }
    return out;
}

/// Largest relative flux mismatch between two flux maps over the probes.
template <class FluxA, class FluxB>
double flux_residual(Eigen::Index n, const ProbeSet& ps, FluxA&& a, FluxB&& b)
{
    double worst = 0.0;
    for (const auto& g : make_probes(n, ps)) {
        const Mat ja = a(g);
        const Mat jb = b(g);
        const double ref = std::max(ja.norm(), std::numeric_limits<double>::min());
        worst = std::max(worst, (ja - jb).norm() / ref);
    }
    return worst;
}

template <class Closure>
struct Transformed {
    Closure closure;
    double residual = 0.0;
};

struct ZeroRowSumShift {
    Mat K;
    Vec a;
    Vec diag_increment;
};

/**
 * @brief Moves a symmetric off-diagonal matrix onto K e = 0 with a rank-two update.
 *
 * a = -(I - e e^T / (2(N-1))) Ktilde_off e / (N-2),
 * K = Ktilde_off + a e^T + e a^T - 2 diag(a).
 * The rank-two part a e^T + e a^T is invisible to the projected flux; the
 * removed diagonal 2a is returned so callers can add it to the diffusivities.
 */
inline ZeroRowSumShift offdiag_zero_rowsum_shift(const Mat& Ktilde)
{
    const Eigen::Index n = Ktilde.rows();
    if (Ktilde.cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "Ktilde must be square");
    if (n < 3)
        throw Error(ErrorKind::BinaryMixture, "row-sum shift needs N >= 3");
    if ((Ktilde - Ktilde.transpose()).norm() > 1e-10 * std::max(1.0, Ktilde.norm()))
        throw Error(ErrorKind::NotSymmetric, "Ktilde is not symmetric");
    Mat off = Ktilde;
    off.diagonal().setZero();
    const Vec e = Vec::Ones(n);
    const Vec r = off * e;
    const double nd = static_cast<double>(n);
    const Vec a = -(r - e * (r.sum() / (2.0 * (nd - 1.0)))) / (nd - 2.0);
    Mat K = off + a * e.transpose() + e * a.transpose();
    K.diagonal().setZero();
    return {K, a, 2.0 * a};
}

/**
 * @brief Fick-Onsager closure (with structure) to the projected (d, K) form.
 *
 * Needs the split L = R (diag(a) + S Y). For N = 2 the pair d is not unique;
 * equal diffusivities are returned with K = 0.
 */
inline Transformed<NovelClosure> fo_to_novel(const MixtureState& s, const OnsagerClosure& oc, const ProbeSet& ps = {})
{
    require_strict(s);
    const Eigen::Index n = s.size();
    const DerivedMatrices dm = derived(s);
    NovelClosure nc;
    if (n == 2) {
        const Mat W = dm.Pt * dm.R * dm.Mdiag * dm.P;
        nc.d = Vec::Constant(2, oc.L(0, 0) / W(0, 0));
        nc.K = Mat::Zero(2, 2);
    } else {
        if (!oc.structure)
            throw Error(ErrorKind::MissingStructure, "the (a, S) split of L is required");
        const auto& st = *oc.structure;
        const ZeroRowSumShift shift = offdiag_zero_rowsum_shift(st.S);
        const double c_over_rho = dm.c / s.rho();
        nc.d = st.a.cwiseQuotient(s.M()) + c_over_rho * shift.diag_increment.cwiseProduct(dm.x);
        nc.K = c_over_rho * shift.K;
    }
    const double res = flux_residual(n, ps, [&](const GradientField& g) { return flux_FO(oc, g); },
                                     [&](const GradientField& g) { return flux_novel(s, nc, g); });
    return {nc, res};
}

/**
 * @brief Projected (d, K) closure to Maxwell-Stefan friction coefficients.
 *
 * With D = diag(d) + X^1/2 K X^1/2 and s = sqrt(x), the shifted matrix
 * D0 = D + b s^T + s b^T, b = -D s + (<D s, s>/2) s, satisfies D0 s = 0 and
 * B = X^1/2 D0# X^-1/2 M^-1 is the Maxwell-Stefan matrix; f_ik = -B_ik / y_i.
 */
inline Transformed<MaxwellStefanClosure> novel_to_ms(const MixtureState& s, const NovelClosure& nc, const ProbeSet& ps = {})
{
    require_strict(s);
    const Eigen::Index n = s.size();
    const DerivedMatrices dm = derived(s);
    const Vec sx = dm.sqrt_x();
    const Mat D = novel_D(s, nc);
    const Vec Ds = D * sx;
    const Vec b = -Ds + 0.5 * Ds.dot(sx) * sx;
    const Mat D0 = D + b * sx.transpose() + sx * b.transpose();
    const Mat D0s = group_inverse(make_rank_deficient(D0, sx, sx)).Asharp;
    const Mat B = dm.X_half() * D0s * dm.X_inv_half() * s.M().cwiseInverse().asDiagonal();
    Mat f(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < n; ++k)
            f(i, k) = (i == k) ? 0.0 : -B(i, k) / s.y()[i];
    const double asym = (f - f.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-9 * std::max(1.0, f.cwiseAbs().maxCoeff()))
        throw Error(ErrorKind::InvariantBreach, "recovered friction is not symmetric");
    f = 0.5 * (f + f.transpose());
    MaxwellStefanClosure msc{f};
    const double res = flux_residual(n, ps, [&](const GradientField& g) { return flux_novel(s, nc, g); },
                                     [&](const GradientField& g) { return flux_MS(s, msc.f, g); });
    return {msc, res};
}

/// f_ii the structure extraction used: d0/||M||_inf when given, else max(1e-6, min positive b_ii).
inline double default_friction_diagonal(const MixtureState& s, const Mat& B, std::optional<double> d0)
{
    if (d0)
        return *d0 / s.M().cwiseAbs().maxCoeff();
    double lo = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < B.rows(); ++i)
        if (B(i, i) > 0.0)
            lo = std::min(lo, B(i, i));
    return std::isfinite(lo) ? std::max(1e-6, lo) : 1e-6;
}

/**
 * @brief Maxwell-Stefan friction to a structured Fick-Onsager closure, L = B# R.
 *
 * F is f with its diagonal set to f_ii; A~ = diag(F y)^-1 and
 * S~ = diag(F y)^-1 (F B# - e e^T) give L = R (A~ + S~ Y). The diagonal of S~
 * is then folded into a.
 */
inline Transformed<OnsagerClosure> ms_to_fo(const MixtureState& s, const MaxwellStefanClosure& msc,
                                            std::optional<double> d0 = std::nullopt, const ProbeSet& ps = {})
{
    require_strict(s);
    const Eigen::Index n = s.size();
    const Mat B = assemble_B(s, msc.f);
    const Mat Bs = ms_group_inverse(s, msc.f).Asharp;
    Mat L = Bs * s.partial_densities().asDiagonal();
    L = 0.5 * (L + L.transpose());

    Mat F = msc.f;
    F.diagonal().setConstant(default_friction_diagonal(s, B, d0));
    const Vec Fy = F * s.y();
    if (!(Fy.array() > 0.0).all())
        throw Error(ErrorKind::SingularD0, "diag(F y) is not invertible");
    const Vec inv = Fy.cwiseInverse();
    const Mat St = inv.asDiagonal() * (F * Bs - Mat::Ones(n, n));
    OnsagerStructure st;
    st.a = inv + St.diagonal().cwiseProduct(s.y());
    st.S = St;
    st.S.diagonal().setZero();
    st.S = 0.5 * (st.S + st.S.transpose());

    OnsagerClosure oc{L, st};
    const double res = flux_residual(n, ps, [&](const GradientField& g) { return flux_MS(s, msc.f, g); },
                                     [&](const GradientField& g) { return flux_FO(oc, g); });
    return {oc, res};
}

enum class CertificateForm { FickOnsager, MaxwellStefan, Novel };

constexpr std::string_view to_string(CertificateForm f)
{
    switch (f) {
    case CertificateForm::FickOnsager: return "fick-onsager";
    case CertificateForm::MaxwellStefan: return "maxwell-stefan";
    case CertificateForm::Novel: return "novel";
    }
    return "unknown";
}

/**
 * @brief Lower ellipticity bound of one closure form.
 *
 * min_excess_eig is the smallest eigenvalue of (closure - d0 * reference)
 * on the constraint subspace; ok when it is >= -1e-9 * norm.
 */
struct EllipticityCertificate {
    double d0 = 0.0;
    CertificateForm form = CertificateForm::FickOnsager;
    double min_excess_eig = 0.0;
    double norm = 1.0;
    bool ok = false;

    double relative_slack() const { return min_excess_eig / norm; }
};

namespace detail {

inline EllipticityCertificate certify(CertificateForm form, const Mat& A, const Mat& W, const Vec& kernel, double d0)
{
    const Mat slack = A - d0 * W;
    const Mat Q = orthogonal_complement(kernel);
    const Mat r = Q.transpose() * (0.5 * (slack + slack.transpose())) * Q;
    Eigen::SelfAdjointEigenSolver<Mat> es(r, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double norm = std::max({A.norm(), std::abs(d0) * W.norm(), std::numeric_limits<double>::min()});
    return {d0, form, lo, norm, lo >= -1e-9 * norm};
}

/// Largest d with A >= d W on {kernel}^perp (W positive definite there).
inline double best_constant(const Mat& A, const Mat& W, const Vec& kernel)
{
    const Mat Q = orthogonal_complement(kernel);
    const Mat a = Q.transpose() * (0.5 * (A + A.transpose())) * Q;
    const Mat w = Q.transpose() * (0.5 * (W + W.transpose())) * Q;
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(a, w, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

inline Mat fo_reference(const MixtureState& s)
{
    const DerivedMatrices dm = derived(s);
    return dm.Pt * dm.Mdiag * dm.R * dm.P;
}

inline Mat ms_reference(const MixtureState& s)
{
    const DerivedMatrices dm = derived(s);
    return dm.Pt * s.M().cwiseInverse().asDiagonal() * dm.Y * dm.P;
}

} // namespace detail

/// L >= d0 P^T M R P on {e}^perp.
inline EllipticityCertificate certify_fick_onsager(const MixtureState& s, const Mat& L, double d0)
{
    return detail::certify(CertificateForm::FickOnsager, L, detail::fo_reference(s), Vec::Ones(s.size()), d0);
}

/// B Y >= d0 P^T M^-1 Y P on {e}^perp.
inline EllipticityCertificate certify_maxwell_stefan(const MixtureState& s, const Mat& f, double d0)
{
    const Mat BY = assemble_B(s, f) * s.y().asDiagonal();
    return detail::certify(CertificateForm::MaxwellStefan, BY, detail::ms_reference(s), Vec::Ones(s.size()), d0);
}

/// diag(d) + X^1/2 K X^1/2 >= d0 on {sqrt x}^perp.
inline EllipticityCertificate certify_novel(const MixtureState& s, const NovelClosure& nc, double d0)
{
    const Eigen::Index n = s.size();
    return detail::certify(CertificateForm::Novel, novel_D(s, nc), Mat::Identity(n, n), derived(s).sqrt_x(), d0);
}

/// L >= d1 P^T M^-1 R P on {e}^perp, the Maxwell-Stefan-side bound of a Fick-Onsager matrix.
inline EllipticityCertificate certify_inverse_mass_bound(const MixtureState& s, const Mat& L, double d1)
{
    const DerivedMatrices dm = derived(s);
    const Mat W = dm.Pt * s.M().cwiseInverse().asDiagonal() * dm.R * dm.P;
    return detail::certify(CertificateForm::MaxwellStefan, L, W, Vec::Ones(s.size()), d1);
}

/// d0 (min_i M_i)^2: a Fick-Onsager constant d0 carried over to the inverse-mass bound.
inline double propagated_ms_constant(double d0, const Vec& M) { return d0 * M.minCoeff() * M.minCoeff(); }

inline double best_fick_onsager_constant(const MixtureState& s, const Mat& L)
{
    return detail::best_constant(L, detail::fo_reference(s), Vec::Ones(s.size()));
}

inline double best_maxwell_stefan_constant(const MixtureState& s, const Mat& f)
{
    const Mat BY = assemble_B(s, f) * s.y().asDiagonal();
    return detail::best_constant(BY, detail::ms_reference(s), Vec::Ones(s.size()));
}

inline double best_novel_constant(const MixtureState& s, const NovelClosure& nc)
{
    const Eigen::Index n = s.size();
    return detail::best_constant(novel_D(s, nc), Mat::Identity(n, n), derived(s).sqrt_x());
}

/// Constant 1/(max_{i != k} |f_ik| * ||M||_inf) for which L = B# R satisfies the Fick-Onsager bound.
inline double friction_bound_constant(const Mat& f, const Vec& M)
{
    Mat off = f;
    off.diagonal().setZero();
    return 1.0 / (off.cwiseAbs().maxCoeff() * M.cwiseAbs().maxCoeff());
}

} // namespace mcdiff
