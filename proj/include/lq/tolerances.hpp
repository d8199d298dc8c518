#pragma once

namespace lq {

/// Every numerical threshold used by the library, threaded through all
/// operations from a single place. Defaults are chosen for desk-scale
/// problems (matrix dimensions up to a few dozen, |t|·||vecH|| <= 50).
struct ToleranceConfig {
    /// Singular values below rank_rel * sigma_max count as zero.
    double rank_rel = 1e-9;

    /// Eigenvalue clustering radius, relative to ||M||_F.
    double eig_cluster_rel = 1e-7;

    /// Spectrum classification: |Re| <= imag_class_rel * ||vecH|| means
    /// "no real part", |Im| > imag_class_rel * ||vecH|| means "nonzero
    /// frequency".
    double imag_class_rel = 1e-7;

    /// ||P' Omega P - Omega|| <= symplectic * (1 + ||P||^2).
    double symplectic = 1e-9;

    /// Isotropy / invariance residual bound for constructed frames.
    double frame_residual = 1e-8;

    /// Singular values of the intersection block below
    /// kernel_rel * max(1, sigma_max) count toward the kernel when
    /// measuring conjugate-time multiplicities.
    double kernel_rel = 1e-7;

    /// Root refinement target |dt| for bisection and touch detection.
    double time = 1e-8;

    /// Slack for positive-semidefiniteness checks.
    double psd = 1e-9;

    /// Minimal inverse condition number of the chart block for a
    /// Lagrangian subspace to count as transversal to the chart anchor.
    double chart_margin = 1e-6;

    /// Eigenvalues of a chart matrix S within zero_band_rel * max(1, ||S||)
    /// of zero count as "on the train".
    double zero_band_rel = 1e-12;

    /// Default endpoint shift used by Maslov index queries.
    double default_eps_shift() const { return 10.0 * time; }
};

} // namespace lq
