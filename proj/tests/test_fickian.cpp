#include <catch_amalgamated.hpp>

#include "mcdiff/darken.hpp"
#include "mcdiff/fickian.hpp"
#include "mcdiff/transforms.hpp"
#include "support.hpp"

using namespace mcdiff;
using Catch::Approx;
using testing_support::rel_err;

namespace {
Vec equal_fractions(Eigen::Index n) { return Vec::Constant(n, 1.0 / static_cast<double>(n)); }
} // namespace

TEST_CASE("identical coefficients with unit molar masses: D = dbar (I - x e^T)", "[fickian][identical]")
{
    std::mt19937_64 rng(1);
    const double dbar = 2.3e-9;
    for (Eigen::Index n = 2; n <= 6; ++n) {
        const auto s = make_state(300, 1.7, Vec::Ones(n), testing_support::random_fractions(rng, n));
        const auto oc = ms_to_fo(s, {Mat::Constant(n, n, 1.0 / dbar)}).closure;
        const Mat D = fickian_ideal_isobaric(s, oc).D;
        const Vec x = s.mole_fractions();
        const Mat expected = dbar * (Mat::Identity(n, n) - x * Vec::Ones(n).transpose());
        CHECK((D - expected).cwiseAbs().maxCoeff() <= 1e-12 * dbar);
    }
}

TEST_CASE("identical coefficients with general molar masses", "[fickian][identical]")
{
    std::mt19937_64 rng(2);
    const double dbar = 0.8;
    for (int trial = 0; trial < 30; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const auto s = testing_support::random_state(rng, n);
        const Mat D = fickian_ideal_isobaric_ms(s, Mat::Constant(n, n, 1.0 / dbar)).D;
        const Vec x = s.mole_fractions();
        const Mat expected = dbar * s.M().cwiseInverse().asDiagonal() * (Mat::Identity(n, n) - x * Vec::Ones(n).transpose());
        CHECK(rel_err(D, expected) <= 1e-12);
    }
}

TEST_CASE("uniform mixture diagonal is dbar (1 - 1/N)", "[fickian][identical]")
{
    const double dbar = 1.5e-9;
    for (Eigen::Index n = 2; n <= 6; ++n) {
        const auto s = make_state(300, 1.0, Vec::Ones(n), equal_fractions(n));
        const auto dm = derived(s);
        const Mat D = fickian_ideal_isobaric(s, {dbar * dm.R * dm.P, std::nullopt}).D;
        for (Eigen::Index i = 0; i < n; ++i)
            CHECK(D(i, i) == Approx(dbar * (1.0 - 1.0 / static_cast<double>(n))).epsilon(1e-12));
    }
}

TEST_CASE("molar masses are a left null vector and both routes agree", "[fickian][property]")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const auto s = testing_support::random_state(rng, n);
        const Mat f = testing_support::random_friction(rng, n);
        const auto oc = ms_to_fo(s, {f}, std::nullopt, ProbeSet{0}).closure;
        const Mat D = fickian_ideal_isobaric(s, oc).D;
        CHECK((s.M().transpose() * D).norm() <= 1e-10 * s.M().norm() * D.norm());
        CHECK(rel_err(fickian_ideal_isobaric_ms(s, f).D, D) <= 1e-10);
        const FickianMatrix H = fickian_from_hessian(s, oc.L, ideal_isobaric_hessian_over_RT(s));
        CHECK(H.regime == FickianRegime::FullHessian);
        CHECK(rel_err(H.D, D) <= 1e-10);
    }
}

TEST_CASE("Fickian spectra are real and non-negative", "[fickian][spectrum][property]")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const auto s = testing_support::random_state(rng, n);
        Mat D;
        if (trial % 2 == 0) {
            D = fickian_ideal_isobaric_ms(s, testing_support::random_friction(rng, n)).D;
        } else {
            const auto smp = testing_support::random_structured_L(rng, s);
            D = fickian_ideal_isobaric(s, {smp.L, std::nullopt}).D;
        }
        const auto rep = fickian_spectrum(D);
        CHECK(rep.max_abs_imag <= 1e-8);
        CHECK(rep.min_real >= -1e-9);
    }
}

TEST_CASE("spectrum of the identical-coefficient matrix", "[fickian][spectrum]")
{
    // dbar (I - x e^T): eigenvalue 0 on x, dbar on {e}^perp
    const auto s = make_state(300, 1.0, Vec::Ones(3), (Vec(3) << 0.2, 0.3, 0.5).finished());
    const Mat D = fickian_ideal_isobaric_ms(s, Mat::Constant(3, 3, 2.0)).D;
    Vec ev = fickian_spectrum(D).eigenvalues.real();
    std::sort(ev.data(), ev.data() + ev.size());
    CHECK(ev[0] == Approx(0.0).margin(1e-14));
    CHECK(ev[1] == Approx(0.5));
    CHECK(ev[2] == Approx(0.5));
}

TEST_CASE("mole-fraction form: two routes and diagonal positivity", "[fickian][molefraction][property]")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const auto s = testing_support::random_state(rng, n);
        const Mat f = testing_support::random_friction(rng, n);
        const auto viaB = fickian_molefraction_form_ms(s, f);
        const auto viaL = fickian_molefraction_form(s, ms_to_fo(s, {f}, std::nullopt, ProbeSet{0}).closure);
        CHECK(viaB.regime == FickianRegime::MoleFractionForm);
        CHECK(rel_err(viaL.D, viaB.D) <= 1e-10);
        CHECK((viaB.D.diagonal().array() > 0.0).all());
    }
}

TEST_CASE("mole-fraction form for identical coefficients is dbar P^T M", "[fickian][molefraction]")
{
    std::mt19937_64 rng(6);
    const double dbar = 0.6;
    const auto s = testing_support::random_state(rng, 4);
    const auto dm = derived(s);
    CHECK(rel_err(fickian_molefraction_form_ms(s, Mat::Constant(4, 4, 1.0 / dbar)).D, dbar * dm.Pt * dm.Mdiag) <= 1e-12);
}

TEST_CASE("diagonal bound of the core-diagonal Fickian matrix", "[fickian][diagbound]")
{
    const auto s = make_state(300, 1.0, Vec::Constant(3, 0.02), equal_fractions(3));
    CHECK((fick_diag_bound_check(s, Vec::Constant(3, 1e-9)).array() >= -1e-21).all());
    CHECK(fick_diag_bound_check(s, Vec::Zero(3)).norm() == 0.0);
    CHECK_THROWS_AS(fick_diag_bound_check(s, -Vec::Ones(3)), Error);

    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const auto st = testing_support::random_state(rng, n);
        Vec d(n);
        for (Eigen::Index i = 0; i < n; ++i)
            d[i] = testing_support::uniform(rng, 0.0, 1.0);
        const Vec slack = fick_diag_bound_check(st, d);
        CHECK(slack.minCoeff() >= -1e-12 * d.maxCoeff());
    }
}

TEST_CASE("Z-matrix test", "[fickian][zmatrix]")
{
    std::mt19937_64 rng(8);
    const auto s = testing_support::random_state(rng, 4);
    CHECK(z_matrix_test(assemble_B(s, Mat::Constant(4, 4, 1.0 / 0.3))));
    CHECK_FALSE(z_matrix_test(Mat::Identity(3, 3)));
    CHECK_FALSE(z_matrix_test(Mat::Identity(2, 3)));
}

TEST_CASE("Z-matrix candidate of B# R is B", "[fickian][zmatrix][property]")
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const auto s = testing_support::random_state(rng, n);
        const Mat f = testing_support::random_friction(rng, n);
        const auto L = ms_to_fo(s, {f}, std::nullopt, ProbeSet{0}).closure.L;
        const auto cand = z_matrix_candidate(s, L);
        CHECK(cand.identity_residual <= 1e-9);
        CHECK(rel_err(cand.B, assemble_B(s, f)) <= 1e-9);
        CHECK(cand.strict_z);
    }
}

TEST_CASE("counterexample friction at the reference state", "[fickian][counterexample]")
{
    const Vec y0 = equal_fractions(3);
    const auto gen = lemma81_counterexample(3.0, y0);
    const Mat f = gen.friction(y0);
    CHECK(f(0, 2) == Approx(-1.0).epsilon(1e-15));
    CHECK(f(2, 0) == f(0, 2));
    const auto s = make_state(300, 1.0, Vec::Ones(3), y0);
    const Mat tau = gen.tau(s);
    CHECK((tau - tau.transpose()).norm() <= 1e-15);
    CHECK((tau * Vec::Ones(3)).norm() <= 1e-15);
    CHECK(psd_on_subspace(tau, Vec::Ones(3)).ok);
    CHECK_FALSE(z_matrix_test(assemble_B(s, f)));
}

TEST_CASE("counterexample friction turns positive away from the reference", "[fickian][counterexample]")
{
    const Vec y0 = equal_fractions(3);
    const auto gen = lemma81_counterexample(3.0, y0);
    const Vec y = (Vec(3) << 0.96, 0.02, 0.02).finished();
    REQUIRE((y - y0).squaredNorm() > y[1] * 3.0);
    CHECK(gen.friction(y)(0, 2) > 0.0);
}

TEST_CASE("counterexample matrix A", "[fickian][counterexample]")
{
    const auto gen = lemma81_counterexample(3.0, equal_fractions(3));
    const Mat A = gen.A();
    CHECK((A * Vec::Ones(3)).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> es(A);
    const Vec ev = es.eigenvalues();
    CHECK(ev[0] == Approx(0.0).margin(1e-12));
    CHECK(ev[1] > 0.0);
    CHECK(ev[2] > 0.0);
    CHECK_THROWS_AS(lemma81_counterexample(2.0, equal_fractions(3)), Error);
    CHECK_THROWS_AS(lemma81_counterexample(3.0, Vec::Constant(3, 0.5)), Error);
}

TEST_CASE("counterexample tau is PSD near the reference state", "[fickian][counterexample][property]")
{
    std::mt19937_64 rng(10);
    const Vec y0 = (Vec(3) << 0.2, 0.3, 0.5).finished();
    const auto gen = lemma81_counterexample(4.0, y0);
    for (int trial = 0; trial < 200; ++trial) {
        Vec y = y0 + 0.05 * testing_support::random_gradient_vec(rng, 3);
        y /= y.sum();
        const auto s = make_state(300, 2.0, Vec::Ones(3), y);
        const Mat tau = gen.tau(s);
        CHECK(psd_on_subspace(tau, Vec::Ones(3)).ok);
        CHECK(rel_err(assemble_tau(s, gen.consistent_friction(y)), tau) <= 1e-12);
    }
}

TEST_CASE("positivity condition on S", "[fickian][posdiag]")
{
    std::mt19937_64 rng(11);
    const auto s = testing_support::random_state(rng, 4);
    const auto zero = posdiag_condition(s, Mat::Zero(4, 4));
    for (bool h : zero.holds)
        CHECK(h);
    CHECK(zero.slack.norm() == 0.0);
    CHECK_THROWS_AS(posdiag_condition(testing_support::random_state(rng, 2), Mat::Zero(2, 2)), Error);
}

TEST_CASE("positivity condition holds for positive ternary friction", "[fickian][posdiag][property]")
{
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 100; ++trial) {
        const auto s = testing_support::random_state(rng, 3);
        const auto oc = ms_to_fo(s, {testing_support::random_friction(rng, 3)}, std::nullopt, ProbeSet{0}).closure;
        const auto r = posdiag_condition(s, oc.structure->S);
        for (bool h : r.holds)
            CHECK(h);
    }
}

TEST_CASE("positivity condition fails for the counterexample", "[fickian][posdiag]")
{
    const Vec y0 = equal_fractions(3);
    const auto gen = lemma81_counterexample(3.0, y0);
    const auto s = make_state(300, 1.0, Vec::Ones(3), y0);
    const auto oc = ms_to_fo(s, {gen.consistent_friction(y0)}, std::nullopt, ProbeSet{0}).closure;
    const auto r = posdiag_condition(s, oc.structure->S);
    CHECK(std::count(r.holds.begin(), r.holds.end(), false) >= 1);
    const auto nc = fo_to_novel(s, oc, ProbeSet{0}).closure;
    CHECK(nc.d.minCoeff() < 0.0);
}

TEST_CASE("positivity condition matches the sign of the core diagonal", "[fickian][posdiag][property]")
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 500; ++trial) {
        const Eigen::Index n = 3 + trial % 4;
        const auto s = testing_support::random_state(rng, n);
        const auto smp = testing_support::random_structured_L(rng, s);
        const auto nc = fo_to_novel(s, {smp.L, OnsagerStructure{smp.a, smp.S}}, ProbeSet{0}).closure;
        const auto r = posdiag_condition(s, smp.S);
        for (Eigen::Index i = 0; i < n; ++i) {
            CHECK(r.holds[static_cast<std::size_t>(i)] == (nc.d[i] >= 0.0));
            CHECK(r.slack[i] == Approx(s.M()[i] * nc.d[i]).epsilon(1e-10).margin(1e-12 * smp.S.norm()));
        }
    }
}

TEST_CASE("Fickian matrix is non-symmetric for unequal molar masses", "[fickian][property]")
{
    std::mt19937_64 rng(14);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const auto s = testing_support::random_state(rng, n);
        const Mat D = fickian_ideal_isobaric_ms(s, testing_support::random_friction(rng, n)).D;
        CHECK((D - D.transpose()).norm() > 1e-6 * D.norm());
    }
}

TEST_CASE("cb diffusion matrix", "[fickian][cb]")
{
    std::mt19937_64 rng(15);
    const auto s = testing_support::random_state(rng, 3);
    const Mat f = testing_support::random_friction(rng, 3);
    const Mat L = ms_to_fo(s, {f}, std::nullopt, ProbeSet{0}).closure.L;
    const Mat rinv = s.partial_densities().cwiseInverse().asDiagonal();
    CHECK(rel_err(cb_diffusion_matrix(s, f), s.concentration() * rinv * L * rinv) <= 1e-12);
    const auto degenerate = make_state(300, 1.0, Vec::Ones(3), (Vec(3) << 0.5, 0.5, 0.0).finished());
    CHECK_THROWS_AS(cb_diffusion_matrix(degenerate, f), Error);
}
