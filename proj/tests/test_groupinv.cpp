#include <catch_amalgamated.hpp>

#include "mcdiff/closures.hpp"
#include "mcdiff/groupinv.hpp"
#include "support.hpp"

using namespace mcdiff;
using Catch::Approx;
using testing_support::rel_err;

TEST_CASE("adjugate of the identity", "[groupinv][adjugate]")
{
    CHECK(adjugate(Mat::Identity(3, 3)) == Mat::Identity(3, 3));
}

TEST_CASE("adjugate of a singular 2x2", "[groupinv][adjugate]")
{
    Mat A(2, 2);
    A << 1, -1, -1, 1;
    Mat expected(2, 2);
    expected << 1, 1, 1, 1;
    CHECK(adjugate(A) == expected);
}

TEST_CASE("adjugate matches det(A) A^-1 for invertible input", "[groupinv][adjugate]")
{
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 20; ++trial) {
        const Mat A = testing_support::random_matrix(rng, 4, 4) + 2.0 * Mat::Identity(4, 4);
        const Mat ref = A.determinant() * A.partialPivLu().inverse();
        CHECK(rel_err(adjugate(A), ref) <= 1e-9);
    }
}

TEST_CASE("adj(A) A = det(A) I on both cofactor routes", "[groupinv][adjugate]")
{
    std::mt19937_64 rng(7);
    for (Eigen::Index n : {2, 3, 5, 6, 7, 8}) {
        const Mat A = testing_support::random_matrix(rng, n, n);
        const double det = testing_support::leibniz_det(A);
        const Mat lhs = adjugate(A) * A;
        CHECK((lhs - det * Mat::Identity(n, n)).norm() <= 1e-10 * std::max(1.0, std::abs(det)) * n);
    }
}

TEST_CASE("adjugate rejects non-square input", "[groupinv][errors]")
{
    CHECK_THROWS_AS(adjugate(Mat::Zero(2, 3)), Error);
}

TEST_CASE("a symmetric projector is its own group inverse", "[groupinv]")
{
    for (Eigen::Index n : {2, 3, 5}) {
        const Mat A = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
        const Vec e = Vec::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
        const auto m = make_rank_deficient(A, e, e);
        CHECK(rel_err(group_inverse(m).Asharp, A) <= 1e-12);
        CHECK(rel_err(group_inverse_oracle(m), A) <= 1e-12);
    }
}

TEST_CASE("binary Laplacian: A# = A/4 and D0 = 2", "[groupinv]")
{
    // Eigenvalue 2 on (1,-1)/sqrt2, so A# has 1/2 there: A# = A/4.
    Mat A(2, 2);
    A << 1, -1, -1, 1;
    const Vec b = Vec::Constant(2, 1.0 / std::sqrt(2.0));
    const auto r = group_inverse(make_rank_deficient(A, b, b));
    CHECK(r.D0 == Approx(2.0));
    CHECK(rel_err(r.Asharp, A / 4.0) <= 1e-14);
}

TEST_CASE("uniform friction gives B# = P^T", "[groupinv][ms]")
{
    const auto s = make_state(300, 1.0, Vec::Ones(3), Vec::Constant(3, 1.0 / 3.0));
    const Mat B = assemble_B(s, Mat::Ones(3, 3));
    const auto r = group_inverse(make_rank_deficient(B, s.y(), Vec::Ones(3)));
    CHECK(rel_err(r.Asharp, derived(s).Pt) <= 1e-13);
}

TEST_CASE("group inverse satisfies its defining equations", "[groupinv][property]")
{
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const auto smp = testing_support::random_rank_deficient(rng, n);
        const auto m = make_rank_deficient(smp.A, smp.b, smp.c);
        const auto r = group_inverse(m);
        const Mat& A = m.A;
        const Mat& X = r.Asharp;
        const double nA = A.norm(), nX = X.norm();
        CHECK((A * X * A - A).norm() <= 1e-10 * nA);
        CHECK((X * A * X - X).norm() <= 1e-10 * nX);
        CHECK((A * X - X * A).norm() <= 1e-10 * nA * nX);
        const Mat proj = Mat::Identity(n, n) - m.b * m.c.transpose();
        CHECK((A * X - proj).norm() <= 1e-10 * proj.norm());
        CHECK((X * m.b).norm() <= 1e-10 * nX * m.b.norm());
        CHECK((X.transpose() * m.c).norm() <= 1e-10 * nX * m.c.norm());

        CHECK(rel_err(group_inverse_oracle(m), X) <= 1e-8);
        CHECK(rel_err(group_inverse(m, 2.0 * r.t).Asharp, X) <= 1e-9);

        const Mat shifted = A + r.t * m.b * m.c.transpose();
        CHECK(rel_err(shifted.inverse(), X + m.b * m.c.transpose() / r.t) <= 1e-9);
        CHECK(std::abs(shifted.determinant() - r.D0 * r.t) <= 1e-8 * std::abs(r.D0 * r.t));

        double minors = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            Mat sub(n - 1, n - 1);
            for (Eigen::Index p = 0, rr = 0; p < n; ++p) {
                if (p == i)
                    continue;
                for (Eigen::Index q = 0, cc = 0; q < n; ++q)
                    if (q != i)
                        sub(rr, cc++) = A(p, q);
                ++rr;
            }
            minors += testing_support::leibniz_det(sub);
        }
        CHECK(std::abs(r.D0 - minors) <= 1e-9 * std::abs(minors));
        CHECK(std::abs(r.D0 - adjugate(A).trace()) <= 1e-9 * std::abs(minors));
    }
}

TEST_CASE("symmetric PSD input yields a symmetric group inverse", "[groupinv]")
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const Mat G = testing_support::random_matrix(rng, n, n);
        const Mat Pi = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
        const Mat A = Pi * (G * G.transpose() + Mat::Identity(n, n)) * Pi;
        const Vec e = Vec::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
        const auto m = make_rank_deficient(A, e, e);
        const Mat X = group_inverse_oracle(m);
        CHECK((X - X.transpose()).norm() <= 1e-10 * X.norm());
        CHECK(rel_err(group_inverse(m).Asharp, testing_support::spectral_group_inverse(A)) <= 1e-9);
    }
}

TEST_CASE("kernel and rank violations are rejected", "[groupinv][errors]")
{
    Mat A(2, 2);
    A << 1, -1, -1, 1;
    try {
        make_rank_deficient(A, Eigen::Vector2d(1.0, 2.0), Vec::Ones(2));
        FAIL("expected KernelMismatch");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::KernelMismatch);
    }
    Mat Z = Mat::Zero(3, 3);
    Z(0, 0) = 1.0;
    Z(0, 1) = -1.0; // rank one, kernel contains e
    CHECK_THROWS_AS(make_rank_deficient(Z.transpose() * Z, Vec::Ones(3), Vec::Ones(3)), Error);
    try {
        group_inverse(RankDeficientMatrix{Mat::Zero(3, 3), Vec::Ones(3), Vec::Ones(3) / 3.0}, 1.0);
        FAIL("expected SingularD0");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SingularD0);
    }
}

TEST_CASE("psd_on_subspace on a projector", "[groupinv][psd]")
{
    const Eigen::Index n = 4;
    const Mat A = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
    const auto cert = psd_on_subspace(A, Vec::Ones(n));
    CHECK(cert.min_eig == Approx(1.0));
    CHECK(cert.ok);
}

TEST_CASE("psd_on_subspace on the uniform-friction tau", "[groupinv][psd]")
{
    const auto s = make_state(300, 1.0, Vec::Ones(3), Vec::Constant(3, 1.0 / 3.0));
    const Mat tau = assemble_tau(s, Mat::Ones(3, 3));
    CHECK(psd_on_subspace(tau, Vec::Ones(3)).ok);
    std::mt19937_64 rng(1);
    for (int k = 0; k < 20; ++k) {
        Vec z = testing_support::random_gradient_vec(rng, 3);
        double q = 0.0;
        for (int i = 0; i < 3; ++i)
            for (int j = i + 1; j < 3; ++j)
                q += (1.0 / 9.0) * (z[i] - z[j]) * (z[i] - z[j]);
        CHECK(z.dot(tau * z) == Approx(q).epsilon(1e-12));
    }
}

TEST_CASE("psd_on_subspace detects a negative direction", "[groupinv][psd]")
{
    const Eigen::Index n = 3;
    const Mat A = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / n);
    Vec u(3);
    u << 1, -1, 0;
    u.normalize();
    const Mat M = A - 2.0 * u * u.transpose();
    const auto cert = psd_on_subspace(M, Vec::Ones(n));
    CHECK_FALSE(cert.ok);
    CHECK(cert.min_eig == Approx(-1.0));
    Mat asym = A;
    asym(0, 1) += 0.1;
    CHECK_THROWS_AS(psd_on_subspace(asym, Vec::Ones(n)), Error);
}

TEST_CASE("determinant monotonicity", "[groupinv][det]")
{
    CHECK(det_monotone(2.0 * Mat::Identity(3, 3), Mat::Identity(3, 3)));
    const Mat B = Mat::Identity(3, 3) + Mat::Constant(3, 3, 0.5);
    CHECK(det_monotone(B, B));
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const Mat G = testing_support::random_matrix(rng, n, n);
        const Mat C = testing_support::random_matrix(rng, n, n);
        const Mat Bp = G * G.transpose();
        CHECK(det_monotone(Bp + C.transpose() * C, Bp));
    }
    CHECK_THROWS_AS(det_monotone(Mat::Identity(2, 2), 2.0 * Mat::Identity(2, 2)), Error);
}
