#pragma once

// Random generators and independent reference computations shared by the tests.

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mcdiff/mixture.hpp"

namespace testing_support {

using mcdiff::Mat;
using mcdiff::Vec;

inline double uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Strict composition with every entry >= floor before normalization.
inline Vec random_fractions(std::mt19937_64& rng, Eigen::Index n, double floor = 0.02)
{
    Vec y(n);
    for (Eigen::Index i = 0; i < n; ++i)
        y[i] = floor + uniform(rng, 0.0, 1.0);
    return y / y.sum();
}

inline Vec random_molar_masses(std::mt19937_64& rng, Eigen::Index n)
{
    Vec M(n);
    for (Eigen::Index i = 0; i < n; ++i)
        M[i] = uniform(rng, 0.002, 0.2);
    return M;
}

inline mcdiff::MixtureState random_state(std::mt19937_64& rng, Eigen::Index n)
{
    return mcdiff::make_state(uniform(rng, 250.0, 450.0), uniform(rng, 0.5, 5.0), random_molar_masses(rng, n),
                              random_fractions(rng, n));
}

inline Mat random_friction(std::mt19937_64& rng, Eigen::Index n, double lo = 0.1, double hi = 10.0)
{
    Mat f = Mat::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = i + 1; k < n; ++k)
            f(i, k) = f(k, i) = uniform(rng, lo, hi);
    return f;
}

inline Mat random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c)
{
    Mat m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i)
        m.data()[i] = uniform(rng, -1.0, 1.0);
    return m;
}

inline Vec random_gradient_vec(std::mt19937_64& rng, Eigen::Index n)
{
    Vec g(n);
    for (Eigen::Index i = 0; i < n; ++i)
        g[i] = uniform(rng, -1.0, 1.0);
    return g;
}

/// A = Pi G Pi with Pi = I - b c^T / <b, c>: rank N-1, A b = 0, c^T A = 0, index one.
struct RankDeficientSample {
    Mat A;
    Vec b;
    Vec c;
};

inline RankDeficientSample random_rank_deficient(std::mt19937_64& rng, Eigen::Index n)
{
    Vec b(n), c(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        b[i] = uniform(rng, 0.1, 2.0);
        c[i] = uniform(rng, 0.1, 2.0);
    }
    const Mat Pi = Mat::Identity(n, n) - b * c.transpose() / b.dot(c);
    const Mat G = random_matrix(rng, n, n) + static_cast<double>(n) * Mat::Identity(n, n);
    return {Pi * G * Pi, b, c};
}

/// Determinant by the Leibniz permutation sum.
inline double leibniz_det(const Mat& A)
{
    const int n = static_cast<int>(A.rows());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double total = 0.0;
    do {
        int inversions = 0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (perm[i] > perm[j])
                    ++inversions;
        double term = (inversions % 2 == 0) ? 1.0 : -1.0;
        for (int i = 0; i < n; ++i)
            term *= A(i, perm[i]);
        total += term;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return total;
}

/// Group inverse of a symmetric matrix by inverting its non-zero eigenvalues.
inline Mat spectral_group_inverse(const Mat& A, double rel_tol = 1e-10)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
    const double cut = rel_tol * es.eigenvalues().cwiseAbs().maxCoeff();
    Vec inv = es.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i)
        inv[i] = std::abs(inv[i]) > cut ? 1.0 / inv[i] : 0.0;
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/**
 * Fick-Onsager matrix of a ternary Maxwell-Stefan closure from the reduced
 * 2x2 system: -Btilde (j1, j2) = (d1, d2), j3 = -j1 - j2. Columns come from
 * unit gradients.
 */
inline Mat ternary_reduced_onsager(const mcdiff::MixtureState& s, const Mat& f)
{
    const Vec& y = s.y();
    const double f12 = f(0, 1), f13 = f(0, 2), f23 = f(1, 2);
    Eigen::Matrix2d Bt;
    Bt << (1 - y[1]) * f13 + y[1] * f12, y[0] * (f13 - f12), y[1] * (f23 - f12), (1 - y[0]) * f23 + y[0] * f12;
    const Vec rho_i = s.partial_densities();
    Mat L(3, 3);
    for (int k = 0; k < 3; ++k) {
        Vec g = Vec::Zero(3);
        g[k] = 1.0;
        const Vec d = rho_i.cwiseProduct(g - Vec::Constant(3, y.dot(g)));
        const Eigen::Vector2d j12 = -Bt.inverse() * Eigen::Vector2d(d[0], d[1]);
        L(0, k) = -j12[0];
        L(1, k) = -j12[1];
        L(2, k) = j12[0] + j12[1];
    }
    return L;
}

/// L = R (diag(a) + S Y) with S <= 0 off the diagonal and a = -S y: symmetric, L e = 0, PSD.
struct StructuredSample {
    Mat L;
    Vec a;
    Mat S;
};

inline StructuredSample random_structured_L(std::mt19937_64& rng, const mcdiff::MixtureState& s, double lo = 0.1,
                                            double hi = 10.0)
{
    const Eigen::Index n = s.size();
    const Mat S = -random_friction(rng, n, lo, hi);
    const Vec a = -S * s.y();
    const Mat L = s.partial_densities().asDiagonal() * (Mat(a.asDiagonal()) + S * s.y().asDiagonal());
    return {L, a, S};
}

inline double rel_err(const Mat& a, const Mat& b)
{
    return (a - b).norm() / std::max(b.norm(), 1e-300);
}

} // namespace testing_support
