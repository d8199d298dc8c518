#pragma once

#include "lq/jacobi.hpp"
#include "lq/model.hpp"
#include "lq/spectral.hpp"

namespace lqtest {

using namespace lq;

/// n=1, A=0, B=1, Q=1: flow rotates with frequency 1, conjugate times k*pi.
inline LqProblem harmonic_oscillator() {
    Mat one = Mat::Ones(1, 1);
    return make_problem(1, 1, Mat::Zero(1, 1), one, one);
}

/// n=2, A=[[0,1],[0,0]], B=(0,1)', Q=0: nilpotent flow, no conjugate times.
inline LqProblem double_integrator() {
    Mat A = Mat::Zero(2, 2);
    A(0, 1) = 1.0;
    Mat B = Mat::Zero(2, 1);
    B(1, 0) = 1.0;
    return make_problem(2, 1, A, B, Mat::Zero(2, 2));
}

/// A=0, B=I, Q=I: decoupled oscillators, conjugate times k*pi with
/// multiplicity n.
inline LqProblem isotropic_oscillator(int n) {
    return make_problem(n, n, Mat::Zero(n, n), Mat::Identity(n, n), Mat::Identity(n, n));
}

/// n=1, A=0, B=1, Q=-1: hyperbolic saddle, eigenvalues +-1.
inline LqProblem saddle() {
    Mat one = Mat::Ones(1, 1);
    return make_problem(1, 1, Mat::Zero(1, 1), one, Mat(-one));
}

/// n=1, A=0, B=1, Q=0: single zero eigenvalue with one Jordan chain.
inline LqProblem free_particle() {
    Mat one = Mat::Ones(1, 1);
    return make_problem(1, 1, Mat::Zero(1, 1), one, Mat::Zero(1, 1));
}

/// Oscillator (+) saddle: n=2, Q = diag(1, -1); spectrum {+-i, +-1}.
inline LqProblem mixed_system() {
    Mat Q = Mat::Zero(2, 2);
    Q(0, 0) = 1.0;
    Q(1, 1) = -1.0;
    return make_problem(2, 2, Mat::Zero(2, 2), Mat::Identity(2, 2), Q);
}

/// Random controllable problem with moderate spectral radius.
inline LqProblem random_controllable(int n, int k_ctrl, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 0.6);
    const ToleranceConfig tol;
    for (int attempt = 0; attempt < 100; ++attempt) {
        Mat A(n, n), B(n, k_ctrl), Qr(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
            for (int j = 0; j < k_ctrl; ++j) B(i, j) = gauss(rng);
            for (int j = 0; j < n; ++j) Qr(i, j) = gauss(rng);
        }
        LqProblem p = make_problem(n, k_ctrl, A, B, 0.5 * (Qr + Qr.transpose()));
        if (kalman_rank(p, tol.rank_rel) == n) return p;
    }
    throw std::runtime_error("random_controllable: no controllable draw in 100 attempts");
}

inline Mat rotation2(double theta) {
    Mat R(2, 2);
    R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    return R;
}

} // namespace lqtest
