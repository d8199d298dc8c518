#pragma once

#include "lq/linalg.hpp"

namespace lq {

/// A controllable-or-not LQ optimal control problem: dynamics
/// x' = Ax + Bu with cost integrand (u'u - x'Qx)/2.
struct LqProblem {
    int n = 0;       ///< state dimension
    int k_ctrl = 0;  ///< control dimension
    Mat A;           ///< n x n drift
    Mat B;           ///< n x k_ctrl control directions
    Mat Q;           ///< n x n potential, symmetric

    /// Set when the ingested Q had asymmetry above 1e-9 * ||Q||.
    bool q_asymmetry_warning = false;
};

/// Validates dimensions and finiteness, symmetrizes Q.
LqProblem make_problem(int n, int k_ctrl, Mat A, Mat B, Mat Q);

/// The quadratic Hamiltonian of a problem: H(z) = z' Hmat z / 2 with
/// Hmat = [[BB', A], [A', Q]], and the matrix of the Hamiltonian vector
/// field vecH = -Omega * Hmat = [[-A', -Q], [BB', A]].
struct HamiltonianField {
    int n = 0;
    Mat Hmat;  ///< 2n x 2n symmetric
    Mat vecH;  ///< 2n x 2n, infinitesimally symplectic

    /// Top-left n x n block of Hmat (BB' for assembled problems):
    /// the Hamiltonian restricted to the vertical subspace.
    Mat vertical_block() const { return Hmat.topLeftCorner(n, n); }

    /// Top-right n x n block of Hmat (the drift A for assembled problems).
    Mat drift_block() const { return Hmat.topRightCorner(n, n); }
};

HamiltonianField assemble(const LqProblem& problem);

/// Wraps an arbitrary symmetric 2n x 2n quadratic form as a field
/// (used for normal-form fixtures; need not come from an LQ problem).
HamiltonianField field_from_hmat(Mat hmat);

/// H(p, x) = (p, x)' Hmat (p, x) / 2.
double hamiltonian_value(const HamiltonianField& field, const Vec& p, const Vec& x);

/// [B, AB, ..., A^{n-1}B].
Mat controllability_matrix(const Mat& A, const Mat& B);

int kalman_rank(const LqProblem& problem, double rel_tol);

struct AdmissibilityReport {
    bool controllable = false;
    bool vertical_psd = false;
    int kalman_rank = 0;
};

AdmissibilityReport check_admissible(const LqProblem& problem, const ToleranceConfig& tol);

/// Generalized admissibility for an arbitrary field: controllability from
/// the Hamiltonian blocks via rank [D, CD, ..., C^{n-1}D] with D the
/// vertical block and C the drift block (for assembled problems this
/// equals the Kalman rank), positivity of the vertical block.
AdmissibilityReport check_admissible(const HamiltonianField& field, const ToleranceConfig& tol);

} // namespace lq
