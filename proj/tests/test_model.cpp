#include <doctest.h>

#include "lq/model.hpp"
#include "support.hpp"

using namespace lq;

namespace {
const ToleranceConfig tol;
}

TEST_CASE("assemble the harmonic oscillator") {
    const HamiltonianField field = assemble(lqtest::harmonic_oscillator());
    CHECK((field.Hmat - Mat::Identity(2, 2)).norm() == 0.0);
    Mat expected(2, 2);
    expected << 0.0, -1.0, 1.0, 0.0;
    CHECK((field.vecH - expected).norm() == 0.0);
}

TEST_CASE("assemble with zero potential") {
    const HamiltonianField field = assemble(lqtest::free_particle());
    Mat expected(2, 2);
    expected << 0.0, 0.0, 1.0, 0.0;
    CHECK((field.vecH - expected).norm() == 0.0);
}

TEST_CASE("assemble the double integrator") {
    const LqProblem p = lqtest::double_integrator();
    const HamiltonianField field = assemble(p);
    Mat BBt = Mat::Zero(2, 2);
    BBt(1, 1) = 1.0;
    CHECK((field.Hmat.topLeftCorner(2, 2) - BBt).norm() == 0.0);
    CHECK((field.vecH * field.vecH * field.vecH * field.vecH).norm() == 0.0);
    // vecH = -Omega Hmat exactly
    CHECK((field.vecH + symplectic_form(2) * field.Hmat).norm() == 0.0);
}

TEST_CASE("hamiltonian_value on the oscillator") {
    const HamiltonianField field = assemble(lqtest::harmonic_oscillator());
    Vec p1(1), x0(1), p3(1), x4(1);
    p1 << 1.0;
    x0 << 0.0;
    p3 << 3.0;
    x4 << 4.0;
    CHECK(hamiltonian_value(field, p1, x0) == doctest::Approx(0.5));
    CHECK(hamiltonian_value(field, Vec::Zero(1), Vec::Zero(1)) == 0.0);
    CHECK(hamiltonian_value(field, p3, x4) == doctest::Approx(12.5));
    CHECK_THROWS_AS(hamiltonian_value(field, Vec::Zero(2), Vec::Zero(1)), DimensionError);
}

TEST_CASE("kalman_rank references") {
    CHECK(kalman_rank(lqtest::double_integrator(), 1e-9) == 2);

    Mat B(2, 1);
    B << 1.0, 0.0;
    const LqProblem uncontrollable = make_problem(2, 1, Mat::Zero(2, 2), B, Mat::Zero(2, 2));
    CHECK(kalman_rank(uncontrollable, 1e-9) == 1);

    const LqProblem full = make_problem(2, 2, Mat::Zero(2, 2), Mat::Identity(2, 2),
                                        Mat::Zero(2, 2));
    CHECK(kalman_rank(full, 1e-9) == 2);
}

TEST_CASE("check_admissible") {
    const auto osc = check_admissible(lqtest::harmonic_oscillator(), tol);
    CHECK(osc.controllable);
    CHECK(osc.vertical_psd);
    CHECK(osc.kalman_rank == 1);

    Mat B(2, 1);
    B << 1.0, 0.0;
    const auto stuck =
        check_admissible(make_problem(2, 1, Mat::Zero(2, 2), B, Mat::Zero(2, 2)), tol);
    CHECK_FALSE(stuck.controllable);

    CHECK(check_admissible(lqtest::double_integrator(), tol).controllable);
}

TEST_CASE("generalized admissibility matches the problem-level one") {
    for (const auto& problem :
         {lqtest::harmonic_oscillator(), lqtest::double_integrator(), lqtest::mixed_system()}) {
        const auto a = check_admissible(problem, tol);
        const auto b = check_admissible(assemble(problem), tol);
        CHECK(a.controllable == b.controllable);
        CHECK(a.vertical_psd == b.vertical_psd);
    }
}

TEST_CASE("assembled fields are infinitesimally symplectic") {
    Rng rng(5);
    const Mat omega2 = symplectic_form(2);
    for (int trial = 0; trial < 10; ++trial) {
        const LqProblem p = lqtest::random_controllable(2, 1 + (trial % 2), rng);
        const HamiltonianField field = assemble(p);
        CHECK((field.vecH.transpose() * omega2 + omega2 * field.vecH).norm() <= 1e-12);
    }
}

TEST_CASE("H restricted to the vertical subspace is nonnegative") {
    Rng rng(9);
    std::normal_distribution<double> gauss(0.0, 2.0);
    for (int trial = 0; trial < 10; ++trial) {
        const LqProblem p = lqtest::random_controllable(3, 2, rng);
        const HamiltonianField field = assemble(p);
        Vec pvec(3);
        for (int i = 0; i < 3; ++i) pvec(i) = gauss(rng);
        CHECK(hamiltonian_value(field, pvec, Vec::Zero(3)) >= -1e-12);
    }
}

TEST_CASE("spectrum of vecH is symmetric under negation and conjugation") {
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        const LqProblem p = lqtest::random_controllable(3, 2, rng);
        const auto eigs = eigen_decompose(assemble(p).vecH, 1e-7);
        for (const auto& e : eigs) {
            bool has_negation = false;
            for (const auto& other : eigs) {
                if (std::abs(other.re + e.re) < 1e-7 && std::abs(other.im + e.im) < 1e-7 &&
                    other.multiplicity == e.multiplicity) {
                    has_negation = true;
                }
            }
            CHECK(has_negation);
        }
    }
}

TEST_CASE("Q is symmetrized on ingestion with a warning") {
    Mat Q(2, 2);
    Q << 1.0, 0.5, 0.0, 1.0;
    const LqProblem p = make_problem(2, 2, Mat::Zero(2, 2), Mat::Identity(2, 2), Q);
    CHECK(p.q_asymmetry_warning);
    CHECK((p.Q - p.Q.transpose()).norm() == 0.0);
    CHECK(p.Q(0, 1) == doctest::Approx(0.25));

    const LqProblem clean = lqtest::harmonic_oscillator();
    CHECK_FALSE(clean.q_asymmetry_warning);
}

TEST_CASE("ingestion rejects malformed problems") {
    CHECK_THROWS_AS(make_problem(0, 1, Mat(), Mat(), Mat()), IngestionError);
    CHECK_THROWS_AS(
        make_problem(2, 1, Mat::Zero(2, 3), Mat::Zero(2, 1), Mat::Zero(2, 2)),
        DimensionError);
    Mat bad = Mat::Zero(1, 1);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(make_problem(1, 1, bad, Mat::Ones(1, 1), Mat::Zero(1, 1)),
                    IngestionError);
}

TEST_CASE("field_from_hmat validates shape and symmetry") {
    CHECK_THROWS_AS(field_from_hmat(Mat::Zero(3, 3)), DimensionError);
    Mat asym = Mat::Zero(2, 2);
    asym(0, 1) = 1.0;
    CHECK_THROWS_AS(field_from_hmat(asym), IngestionError);
    const HamiltonianField f = field_from_hmat(Mat::Identity(2, 2));
    CHECK((f.vecH - assemble(lqtest::harmonic_oscillator()).vecH).norm() == 0.0);
}
