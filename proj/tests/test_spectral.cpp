#include <doctest.h>

#include <algorithm>

#include "lq/spectral.hpp"
#include "support.hpp"

using namespace lq;

namespace {

const ToleranceConfig tol;

/// Direct sum of two quadratic Hamiltonians in (p, x) block order.
HamiltonianField direct_sum(const HamiltonianField& a, const HamiltonianField& b) {
    const int na = a.n, nb = b.n, n = na + nb;
    Mat H = Mat::Zero(2 * n, 2 * n);
    const auto place = [&](const Mat& src, int ns, int offset) {
        H.block(offset, offset, ns, ns) += src.topLeftCorner(ns, ns);
        H.block(offset, n + offset, ns, ns) += src.topRightCorner(ns, ns);
        H.block(n + offset, offset, ns, ns) += src.bottomLeftCorner(ns, ns);
        H.block(n + offset, n + offset, ns, ns) += src.bottomRightCorner(ns, ns);
    };
    place(a.Hmat, na, 0);
    place(b.Hmat, nb, na);
    return field_from_hmat(H);
}

const SpectrumReport::Entry* find_eigenvalue(const SpectrumReport& report, double re,
                                             double im, double eps = 1e-6) {
    for (const auto& e : report.eigenvalues) {
        if (std::abs(e.jordan.eigenvalue.re - re) < eps &&
            std::abs(e.jordan.eigenvalue.im - im) < eps) {
            return &e;
        }
    }
    return nullptr;
}

} // namespace

TEST_CASE("classify_spectrum: harmonic oscillator") {
    const SpectrumReport report =
        classify_spectrum(assemble(lqtest::harmonic_oscillator()), tol);
    REQUIRE(report.eigenvalues.size() == 2);
    CHECK(report.of_class(SpectralClass::PureImaginary).size() == 2);
    CHECK(report.of_class(SpectralClass::Zero).empty());
    CHECK(report.of_class(SpectralClass::Hyperbolic).empty());
    const auto* plus_i = find_eigenvalue(report, 0.0, 1.0);
    REQUIRE(plus_i != nullptr);
    CHECK(plus_i->jordan.block_sizes == std::vector<int>{1});
}

TEST_CASE("classify_spectrum: double integrator is one zero chain") {
    const SpectrumReport report =
        classify_spectrum(assemble(lqtest::double_integrator()), tol);
    REQUIRE(report.eigenvalues.size() == 1);
    const auto zero = report.zero_eigenvalue();
    REQUIRE(zero.has_value());
    CHECK(zero->eigenvalue.multiplicity == 4);
    CHECK(zero->block_sizes == std::vector<int>{4});
    CHECK(report.of_class(SpectralClass::PureImaginary).empty());
}

TEST_CASE("classify_spectrum: saddle is hyperbolic") {
    const SpectrumReport report = classify_spectrum(assemble(lqtest::saddle()), tol);
    REQUIRE(report.eigenvalues.size() == 2);
    CHECK(report.of_class(SpectralClass::Hyperbolic).size() == 2);
    CHECK(find_eigenvalue(report, 1.0, 0.0) != nullptr);
    CHECK(find_eigenvalue(report, -1.0, 0.0) != nullptr);
}

TEST_CASE("classify_spectrum recovers defective imaginary clusters") {
    // Eigensolver roots of a defective eigenvalue of multiplicity m
    // scatter like eps^(1/m); the classifier must still report a single
    // eigenvalue at +-i*beta with the right block.
    for (const double beta : {1.0, 2.5}) {
        for (const int k : {1, 2}) {
            const HamiltonianField even =
                build_imaginary_jordan_fixture(BlockParity::Even, k, beta, +1);
            const SpectrumReport report = classify_spectrum(even, tol);
            const auto* entry = find_eigenvalue(report, 0.0, beta, 1e-7);
            REQUIRE(entry != nullptr);
            CHECK(entry->spectral_class == SpectralClass::PureImaginary);
            CHECK(entry->jordan.eigenvalue.multiplicity == 2 * k);
            CHECK(entry->jordan.block_sizes == std::vector<int>{2 * k});

            const HamiltonianField odd =
                build_imaginary_jordan_fixture(BlockParity::Odd, k, beta, +1);
            const SpectrumReport report_odd = classify_spectrum(odd, tol);
            const auto* entry_odd = find_eigenvalue(report_odd, 0.0, beta, 1e-7);
            REQUIRE(entry_odd != nullptr);
            CHECK(entry_odd->jordan.block_sizes == std::vector<int>{2 * k + 1});
        }
    }
}

TEST_CASE("krein_frequencies: harmonic oscillator carries omega = +1") {
    const HamiltonianField field = assemble(lqtest::harmonic_oscillator());
    const auto freqs = krein_frequencies(field, classify_spectrum(field, tol), tol);
    REQUIRE(freqs.size() == 1);
    CHECK(freqs[0].beta == doctest::Approx(1.0));
    CHECK(freqs[0].sign == 1);
    CHECK(freqs[0].omega == doctest::Approx(1.0));
    CHECK(freqs[0].multiplicity == 1);
}

TEST_CASE("krein_frequencies: mixed-sign oscillator block") {
    // H = (2 p1^2 - p2^2 + 2 x1^2 - x2^2)/2: frequencies +2 and -1.
    Vec d(4);
    d << 2.0, -1.0, 2.0, -1.0;
    const HamiltonianField field = field_from_hmat(Mat(d.asDiagonal()));
    const auto freqs = krein_frequencies(field, classify_spectrum(field, tol), tol);
    REQUIRE(freqs.size() == 2);
    CHECK(freqs[0].omega == doctest::Approx(2.0));
    CHECK(freqs[0].sign == 1);
    CHECK(freqs[1].omega == doctest::Approx(-1.0));
    CHECK(freqs[1].sign == -1);
}

TEST_CASE("krein_frequencies: no imaginary spectrum yields an empty list") {
    const HamiltonianField field = assemble(lqtest::saddle());
    CHECK(krein_frequencies(field, classify_spectrum(field, tol), tol).empty());
}

TEST_CASE("krein_frequencies: multiplicity aggregates on the isotropic oscillator") {
    const HamiltonianField field = assemble(lqtest::isotropic_oscillator(3));
    const auto freqs = krein_frequencies(field, classify_spectrum(field, tol), tol);
    REQUIRE(freqs.size() == 1);
    CHECK(freqs[0].multiplicity == 3);
    CHECK(freqs[0].omega == doctest::Approx(1.0));
}

TEST_CASE("krein signs survive a symplectic change of basis") {
    Rng rng(31);
    Vec d(4);
    d << 2.0, -1.0, 2.0, -1.0;
    const Mat H0 = Vec(d).asDiagonal();
    for (int trial = 0; trial < 5; ++trial) {
        const Mat T = random_symplectic(2, rng, 0.7);
        const HamiltonianField field = field_from_hmat(T.transpose() * H0 * T);
        const auto freqs = krein_frequencies(field, classify_spectrum(field, tol), tol);
        REQUIRE(freqs.size() == 2);
        CHECK(freqs[0].omega == doctest::Approx(2.0).epsilon(1e-6));
        CHECK(freqs[1].omega == doctest::Approx(-1.0).epsilon(1e-6));
    }
}

TEST_CASE("predict_dichotomy on the reference systems") {
    const SpectrumReport osc = classify_spectrum(assemble(lqtest::harmonic_oscillator()), tol);
    const DichotomyVerdict v1 = predict_dichotomy(osc);
    CHECK(v1.kind == DichotomyVerdict::Kind::InfinitelyMany);
    REQUIRE(v1.witnesses.size() == 1);
    CHECK(v1.witnesses[0].beta == doctest::Approx(1.0));
    CHECK(v1.witnesses[0].block_size == 1);

    const SpectrumReport di = classify_spectrum(assemble(lqtest::double_integrator()), tol);
    CHECK(predict_dichotomy(di).kind == DichotomyVerdict::Kind::NoConjugateTimes);

    const SpectrumReport odd3 =
        classify_spectrum(build_imaginary_jordan_fixture(BlockParity::Odd, 1, 1.0, +1), tol);
    const DichotomyVerdict v3 = predict_dichotomy(odd3);
    CHECK(v3.kind == DichotomyVerdict::Kind::InfinitelyMany);
    REQUIRE(v3.witnesses.size() == 1);
    CHECK(v3.witnesses[0].block_size == 3);
}

TEST_CASE("predict_dichotomy is invariant under symplectic conjugation") {
    Rng rng(41);
    const std::vector<HamiltonianField> corpus = {
        assemble(lqtest::harmonic_oscillator()),
        assemble(lqtest::double_integrator()),
        assemble(lqtest::mixed_system()),
        build_imaginary_jordan_fixture(BlockParity::Even, 1, 1.0, +1),
        build_imaginary_jordan_fixture(BlockParity::Odd, 1, 2.5, -1)};
    for (const auto& field : corpus) {
        const SpectrumReport base = classify_spectrum(field, tol);
        const DichotomyVerdict base_verdict = predict_dichotomy(base);
        for (int trial = 0; trial < 3; ++trial) {
            const Mat T = random_symplectic(field.n, rng, 0.5);
            const HamiltonianField conj =
                field_from_hmat(T.transpose() * field.Hmat * T);
            const SpectrumReport moved = classify_spectrum(conj, tol);
            const DichotomyVerdict verdict = predict_dichotomy(moved);
            CHECK(verdict.kind == base_verdict.kind);
            REQUIRE(verdict.witnesses.size() == base_verdict.witnesses.size());
            REQUIRE(moved.eigenvalues.size() == base.eigenvalues.size());
            for (const auto& entry : base.eigenvalues) {
                const auto* match =
                    find_eigenvalue(moved, entry.jordan.eigenvalue.re,
                                    entry.jordan.eigenvalue.im, 1e-5);
                REQUIRE(match != nullptr);
                CHECK(match->jordan.block_sizes == entry.jordan.block_sizes);
            }
        }
    }
}

TEST_CASE("sum of signed frequencies is positive for admissible controllable systems") {
    Rng rng(57);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 2 + trial % 3;
        Mat R(n, n);
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) R(i, j) = gauss(rng);
        }
        const Mat Q = R * R.transpose() + 0.1 * Mat::Identity(n, n);
        const LqProblem p = make_problem(n, n, Mat::Zero(n, n), Mat::Identity(n, n), Q);
        const HamiltonianField field = assemble(p);
        const auto freqs = krein_frequencies(field, classify_spectrum(field, tol), tol);
        double sum = 0.0;
        int count = 0;
        for (const auto& f : freqs) {
            sum += f.omega * f.multiplicity;
            count += f.multiplicity;
        }
        CHECK(count == n);
        CHECK(sum > 0.0);
    }
}

TEST_CASE("conjugate_time_bounds reference values") {
    const ConjugateTimeBound b1 = conjugate_time_bounds({{1.0, 1, 1.0, 1}}, 1, 0);
    CHECK(b1.first_time_bound == doctest::Approx(3.0 * M_PI));

    const ConjugateTimeBound b3 = conjugate_time_bounds({{1.0, 1, 1.0, 3}}, 3, 0);
    CHECK(b3.first_time_bound == doctest::Approx(3.0 * M_PI));
    CHECK(b3.count_lower_bound(12.0 * M_PI) == 28);

    const ConjugateTimeBound mixed = conjugate_time_bounds({{1.0, 1, 1.0, 1}}, 2, 1);
    CHECK(mixed.first_time_bound == doctest::Approx(5.0 * M_PI));

    CHECK_THROWS_AS(conjugate_time_bounds({{1.0, -1, -1.0, 1}}, 1, 0), ConsistencyError);
    CHECK(b1.count_lower_bound(0.1) == 0);
}

TEST_CASE("build_gamma_plus: saddle yields the unstable eigenvector") {
    const HamiltonianField field = assemble(lqtest::saddle());
    const IsotropicFrame gamma =
        build_gamma_plus(field, classify_spectrum(field, tol), tol);
    REQUIRE(gamma.dim() == 1);
    CHECK(gamma.is_lagrangian());
    Vec expected(2);
    expected << 1.0, 1.0;
    expected.normalize();
    CHECK(std::abs(std::abs(gamma.Z.col(0).dot(expected)) - 1.0) < 1e-12);
}

TEST_CASE("build_gamma_plus: oscillator has no hyperbolic or zero part") {
    const HamiltonianField field = assemble(lqtest::harmonic_oscillator());
    const IsotropicFrame gamma =
        build_gamma_plus(field, classify_spectrum(field, tol), tol);
    CHECK(gamma.dim() == 0);
}

TEST_CASE("build_gamma_plus: double integrator gets an invariant half of E_0") {
    const HamiltonianField field = assemble(lqtest::double_integrator());
    const IsotropicFrame gamma =
        build_gamma_plus(field, classify_spectrum(field, tol), tol);
    REQUIRE(gamma.dim() == 2);
    check_isotropic_frame(gamma, tol);
    const Mat residual =
        (Mat::Identity(4, 4) - gamma.Z * gamma.Z.transpose()) * (field.vecH * gamma.Z);
    CHECK(residual.norm() <= 1e-10);
}

TEST_CASE("build_gamma_plus: mixed system pairs saddle direction only") {
    const HamiltonianField field = assemble(lqtest::mixed_system());
    const IsotropicFrame gamma =
        build_gamma_plus(field, classify_spectrum(field, tol), tol);
    CHECK(gamma.dim() == 1);
}

TEST_CASE("invariant_isotropic_subspace on the fixture grid") {
    for (const double beta : {1.0, 2.5}) {
        for (const int k : {1, 2}) {
            const HamiltonianField even =
                build_imaginary_jordan_fixture(BlockParity::Even, k, beta, +1);
            const IsotropicFrame ge = invariant_isotropic_subspace(even, beta, tol);
            CHECK(ge.dim() == 2 * k);
            check_isotropic_frame(ge, tol);

            const HamiltonianField odd =
                build_imaginary_jordan_fixture(BlockParity::Odd, k, beta, -1);
            const IsotropicFrame go = invariant_isotropic_subspace(odd, beta, tol);
            CHECK(go.dim() == 2 * k);
            check_isotropic_frame(go, tol);
            const Mat residual = (Mat::Identity(2 * go.n, 2 * go.n) -
                                  go.Z * go.Z.transpose()) *
                                 (odd.vecH * go.Z);
            CHECK(residual.norm() / odd.vecH.norm() <= 1e-8);
        }
    }
}

TEST_CASE("invariant_isotropic_subspace: diagonalizable pair gives the empty frame") {
    const HamiltonianField osc =
        build_imaginary_jordan_fixture(BlockParity::Odd, 0, 1.0, +1);
    CHECK(invariant_isotropic_subspace(osc, 1.0, tol).dim() == 0);
}

TEST_CASE("fixtures: odd k=0 is the one-dimensional oscillator") {
    const HamiltonianField f = build_imaginary_jordan_fixture(BlockParity::Odd, 0, 2.0, +1);
    Mat expected = Mat::Zero(2, 2);
    expected(0, 0) = 4.0;
    expected(1, 1) = 1.0;
    CHECK((f.Hmat - expected).norm() == 0.0);
    const auto eigs = eigen_decompose(f.vecH, 1e-7);
    REQUIRE(eigs.size() == 2);
    CHECK(std::abs(eigs[1].im - 2.0) < 1e-12);
}

TEST_CASE("fixtures: parameter validation") {
    CHECK_THROWS_AS(build_imaginary_jordan_fixture(BlockParity::Even, 0, 1.0, +1),
                    ParameterError);
    CHECK_THROWS_AS(build_imaginary_jordan_fixture(BlockParity::Odd, -1, 1.0, +1),
                    ParameterError);
    CHECK_THROWS_AS(build_imaginary_jordan_fixture(BlockParity::Odd, 1, 0.0, +1),
                    ParameterError);
    CHECK_THROWS_AS(build_imaginary_jordan_fixture(BlockParity::Odd, 1, 1.0, 2),
                    ParameterError);
}

TEST_CASE("fixtures: dimensions and block structure contracts") {
    CHECK(build_imaginary_jordan_fixture(BlockParity::Even, 1, 1.0, +1).n == 2);
    CHECK(build_imaginary_jordan_fixture(BlockParity::Even, 2, 1.0, +1).n == 4);
    CHECK(build_imaginary_jordan_fixture(BlockParity::Odd, 1, 1.0, +1).n == 3);
    CHECK(build_imaginary_jordan_fixture(BlockParity::Odd, 2, 1.0, +1).n == 5);

    // Even fixtures have no odd imaginary blocks; odd fixtures have
    // exactly one odd block at +i*beta (and its mirror at -i*beta).
    for (const int k : {1, 2}) {
        const auto even_report = classify_spectrum(
            build_imaginary_jordan_fixture(BlockParity::Even, k, 1.5, +1), tol);
        CHECK(predict_dichotomy(even_report).kind ==
              DichotomyVerdict::Kind::NoConjugateTimes);
        const auto odd_report = classify_spectrum(
            build_imaginary_jordan_fixture(BlockParity::Odd, k, 1.5, +1), tol);
        const auto verdict = predict_dichotomy(odd_report);
        CHECK(verdict.kind == DichotomyVerdict::Kind::InfinitelyMany);
        CHECK(verdict.witnesses.size() == 1);
    }
}

TEST_CASE("fixtures: dichotomy of a direct sum tracks the odd summand") {
    const HamiltonianField even =
        build_imaginary_jordan_fixture(BlockParity::Even, 1, 1.0, +1);
    const HamiltonianField odd =
        build_imaginary_jordan_fixture(BlockParity::Odd, 1, 2.5, +1);

    const auto even_even = classify_spectrum(direct_sum(even, even), tol);
    CHECK(predict_dichotomy(even_even).kind == DichotomyVerdict::Kind::NoConjugateTimes);

    const auto even_odd = classify_spectrum(direct_sum(even, odd), tol);
    const auto verdict = predict_dichotomy(even_odd);
    CHECK(verdict.kind == DichotomyVerdict::Kind::InfinitelyMany);
    REQUIRE(verdict.witnesses.size() == 1);
    CHECK(verdict.witnesses[0].beta == doctest::Approx(2.5));
    CHECK(verdict.witnesses[0].block_size == 3);
}

TEST_CASE("omega orthogonality of invariant subspaces") {
    // Saddle: the pair (+1, -1) is excluded; the self-pair (+1, +1) must
    // be isotropic.
    const HamiltonianField saddle = assemble(lqtest::saddle());
    const auto saddle_report =
        omega_orthogonality_check(saddle, classify_spectrum(saddle, tol), tol);
    bool saw_self_pair = false;
    for (const auto& e : saddle_report.entries) {
        CHECK(std::abs(e.a.value() + e.b.value()) > 1e-7);
        if (std::abs(e.a.re - 1.0) < 1e-9 && std::abs(e.b.re - 1.0) < 1e-9) {
            saw_self_pair = true;
        }
    }
    CHECK(saw_self_pair);
    CHECK(saddle_report.max_residual <= 1e-10);

    // Oscillator pair with distinct frequencies: cross residual vanishes.
    Vec d(4);
    d << 1.0, 2.0, 1.0, 2.0;
    const HamiltonianField two_freq = field_from_hmat(Mat(d.asDiagonal()));
    const auto cross =
        omega_orthogonality_check(two_freq, classify_spectrum(two_freq, tol), tol);
    REQUIRE(!cross.entries.empty());
    CHECK(cross.max_residual <= 1e-10);

    // A 2-dimensional oscillator carries no valid pairs at all.
    const HamiltonianField osc = assemble(lqtest::harmonic_oscillator());
    const auto vac = omega_orthogonality_check(osc, classify_spectrum(osc, tol), tol);
    CHECK(vac.entries.empty());
}
