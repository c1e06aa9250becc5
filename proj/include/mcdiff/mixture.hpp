#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "mcdiff/errors.hpp"

namespace mcdiff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Universal gas constant in J/(mol K).
inline constexpr double gas_constant = 8.31446261815324;

/**
 * @brief Thermodynamic state of an N-component mixture.
 *
 * Holds temperature, total mass density, molar masses and normalized mass
 * fractions. Instances are only produced by make_state, so every object is
 * a validated state with N >= 2 and sum(y) == 1.
 */
class MixtureState {
public:
    double T() const noexcept { return T_; }
    double rho() const noexcept { return rho_; }
    const Vec& M() const noexcept { return M_; }
    const Vec& y() const noexcept { return y_; }
    Eigen::Index size() const noexcept { return y_.size(); }

    /// True when every mass fraction is strictly positive.
    bool strict() const noexcept { return (y_.array() > 0.0).all(); }

    /// Partial mass densities rho_i = rho y_i.
    Vec partial_densities() const { return rho_ * y_; }

    /// Total molar concentration c = sum rho_i / M_i.
    double concentration() const { return rho_ * (y_.array() / M_.array()).sum(); }

    Vec mole_fractions() const
    {
        Vec n = (y_.array() / M_.array()).matrix();
        return n / n.sum();
    }

    friend MixtureState make_state(double T, double rho, const Vec& M, const Vec& y_raw);

private:
    MixtureState(double T, double rho, Vec M, Vec y)
        : T_(T), rho_(rho), M_(std::move(M)), y_(std::move(y))
    {
    }

    double T_;
    double rho_;
    Vec M_;
    Vec y_;
};

/// Validates the inputs and renormalizes fractions whose sum is within 1e-9 of one.
inline MixtureState make_state(double T, double rho, const Vec& M, const Vec& y_raw)
{
    if (!(T > 0.0) || !std::isfinite(T))
        throw Error(ErrorKind::NonPositiveTemperature, "temperature must be positive");
    if (!(rho > 0.0) || !std::isfinite(rho))
        throw Error(ErrorKind::NonPositiveDensity, "density must be positive");
    if (M.size() != y_raw.size())
        throw Error(ErrorKind::DimensionMismatch, "molar masses and fractions differ in length");
    if (y_raw.size() < 2)
        throw Error(ErrorKind::DimensionMismatch, "a mixture needs at least two species");
    for (Eigen::Index i = 0; i < M.size(); ++i) {
        if (!(M[i] > 0.0) || !std::isfinite(M[i]))
            throw Error(ErrorKind::InvalidParameter, "molar masses must be positive");
        if (!(y_raw[i] >= 0.0) || !std::isfinite(y_raw[i]))
            throw Error(ErrorKind::NegativeFraction, "mass fractions must be non-negative");
    }
    const double s = y_raw.sum();
    if (std::abs(s - 1.0) > 1e-9)
        throw Error(ErrorKind::FractionSumOutOfRange, "mass fractions sum to " + std::to_string(s));
    return MixtureState(T, rho, M, y_raw / s);
}

/// Diagonal matrices, projections and molar quantities derived from a state.
struct DerivedMatrices {
    Mat R;    ///< diag(rho_i)
    Mat Y;    ///< diag(y)
    Vec x;
    Mat X;    ///< diag(x)
    double c = 0.0;
    Mat P;    ///< I - e (x) y
    Mat Pt;   ///< transpose of P
    Mat Pmol; ///< M P M^-1
    Mat Mdiag;

    /// sqrt(x); throws ZeroFraction unless every x_i > 0.
    Vec sqrt_x() const
    {
        if (!(x.array() > 0.0).all())
            throw Error(ErrorKind::ZeroFraction, "operation needs strictly positive fractions");
        return x.array().sqrt().matrix();
    }
    Mat X_half() const { return sqrt_x().asDiagonal(); }
    Mat X_inv_half() const { return sqrt_x().cwiseInverse().asDiagonal(); }
};

inline DerivedMatrices derived(const MixtureState& s)
{
    const Eigen::Index n = s.size();
    DerivedMatrices d;
    d.R = s.partial_densities().asDiagonal();
    d.Y = s.y().asDiagonal();
    d.c = s.concentration();
    d.x = s.mole_fractions();
    d.X = d.x.asDiagonal();
    d.P = Mat::Identity(n, n) - Vec::Ones(n) * s.y().transpose();
    d.Pt = d.P.transpose();
    d.Mdiag = s.M().asDiagonal();
    d.Pmol = d.Mdiag * d.P * s.M().cwiseInverse().asDiagonal();
    return d;
}

inline void require_strict(const MixtureState& s)
{
    if (!s.strict())
        throw Error(ErrorKind::ZeroFraction, "state has a vanishing mass fraction");
}

/// Per-species gradient of mu_i/(RT); one row per species, one column per spatial direction.
using GradientField = Mat;

/**
 * @brief Gradients of mu_i/(RT) for an ideal, isothermal, isobaric mixture on
 * a uniform 1-D grid.
 *
 * grad = (1/M_i) d(ln x_i)/dz, central differences inside, one-sided at the ends.
 */
inline std::vector<GradientField> ideal_mu_gradient(const std::vector<MixtureState>& field, double h)
{
    if (field.size() < 2)
        throw Error(ErrorKind::DimensionMismatch, "gradient needs at least two nodes");
    if (!(h > 0.0))
        throw Error(ErrorKind::InvalidParameter, "grid spacing must be positive");
    const Eigen::Index n = field.front().size();
    std::vector<Vec> lnx;
    lnx.reserve(field.size());
    for (const auto& s : field) {
        if (s.size() != n)
            throw Error(ErrorKind::DimensionMismatch, "species count varies along the field");
        Vec x = s.mole_fractions();
        if (!(x.array() > 0.0).all())
            throw Error(ErrorKind::ZeroFraction, "ln x undefined for a vanishing fraction");
        lnx.push_back(x.array().log().matrix());
    }
    const Vec invM = field.front().M().cwiseInverse();
    const std::size_t m = field.size();
    std::vector<GradientField> out(m, GradientField(n, 1));
    for (std::size_t k = 0; k < m; ++k) {
        Vec diff;
        if (k == 0)
            diff = (lnx[1] - lnx[0]) / h;
        else if (k + 1 == m)
            diff = (lnx[m - 1] - lnx[m - 2]) / h;
        else
            diff = (lnx[k + 1] - lnx[k - 1]) / (2.0 * h);
        out[k].col(0) = invM.cwiseProduct(diff);
    }
    return out;
}

/// Two-point gradient of mu_i/(RT) between neighbouring mole-fraction vectors.
inline GradientField ideal_mu_gradient_two_point(const Vec& x_left, const Vec& x_right, const Vec& M, double h)
{
    if (!(x_left.array() > 0.0).all() || !(x_right.array() > 0.0).all())
        throw Error(ErrorKind::ZeroFraction, "ln x undefined for a vanishing fraction");
    GradientField g(x_left.size(), 1);
    g.col(0) = ((x_right.array().log() - x_left.array().log()) / (M.array() * h)).matrix();
    return g;
}

/// Driving forces d_i = rho_i (grad_i - sum_k y_k grad_k), stacked as rows: R P grad.
inline Mat driving_forces(const MixtureState& s, const GradientField& grad)
{
    if (grad.rows() != s.size())
        throw Error(ErrorKind::DimensionMismatch, "gradient rows must match species count");
    if (!grad.allFinite())
        throw Error(ErrorKind::InvalidParameter, "gradient has non-finite entries");
    const Eigen::RowVectorXd mean = s.y().transpose() * grad;
    Mat d = grad.rowwise() - mean;
    return s.partial_densities().asDiagonal() * d;
}

} // namespace mcdiff
