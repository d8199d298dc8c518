#include "lq/model.hpp"

#include <Eigen/Eigenvalues>

#include <sstream>

namespace lq {

LqProblem make_problem(int n, int k_ctrl, Mat A, Mat B, Mat Q) {
    if (n <= 0 || k_ctrl <= 0) {
        throw IngestionError("problem dimensions must be positive");
    }
    if (A.rows() != n || A.cols() != n) {
        throw DimensionError("A must be n x n");
    }
    if (B.rows() != n || B.cols() != k_ctrl) {
        throw DimensionError("B must be n x k");
    }
    if (Q.rows() != n || Q.cols() != n) {
        throw DimensionError("Q must be n x n");
    }
    ensure_finite(A, "A");
    ensure_finite(B, "B");
    ensure_finite(Q, "Q");

    LqProblem p;
    p.n = n;
    p.k_ctrl = k_ctrl;
    p.A = std::move(A);
    p.B = std::move(B);
    const double asym = (Q - Q.transpose()).norm();
    p.q_asymmetry_warning = asym > 1e-9 * std::max(Q.norm(), 1e-300);
    p.Q = 0.5 * (Q + Q.transpose());
    return p;
}

HamiltonianField assemble(const LqProblem& problem) {
    const int n = problem.n;
    const Mat BBt = problem.B * problem.B.transpose();

    HamiltonianField field;
    field.n = n;
    field.Hmat = Mat::Zero(2 * n, 2 * n);
    field.Hmat.topLeftCorner(n, n) = BBt;
    field.Hmat.topRightCorner(n, n) = problem.A;
    field.Hmat.bottomLeftCorner(n, n) = problem.A.transpose();
    field.Hmat.bottomRightCorner(n, n) = problem.Q;

    field.vecH = Mat::Zero(2 * n, 2 * n);
    field.vecH.topLeftCorner(n, n) = -problem.A.transpose();
    field.vecH.topRightCorner(n, n) = -problem.Q;
    field.vecH.bottomLeftCorner(n, n) = BBt;
    field.vecH.bottomRightCorner(n, n) = problem.A;
    return field;
}

HamiltonianField field_from_hmat(Mat hmat) {
    if (hmat.rows() != hmat.cols() || hmat.rows() % 2 != 0) {
        throw DimensionError("Hmat must be square with even dimension");
    }
    ensure_finite(hmat, "Hmat");
    const int n = static_cast<int>(hmat.rows()) / 2;
    if ((hmat - hmat.transpose()).norm() > 1e-9 * std::max(hmat.norm(), 1e-300)) {
        throw IngestionError("Hmat must be symmetric");
    }
    HamiltonianField field;
    field.n = n;
    field.Hmat = 0.5 * (hmat + hmat.transpose());
    field.vecH = -symplectic_form(n) * field.Hmat;
    return field;
}

double hamiltonian_value(const HamiltonianField& field, const Vec& p, const Vec& x) {
    if (p.size() != field.n || x.size() != field.n) {
        throw DimensionError("hamiltonian_value: vectors must have length n");
    }
    Vec z(2 * field.n);
    z << p, x;
    return 0.5 * z.dot(field.Hmat * z);
}

Mat controllability_matrix(const Mat& A, const Mat& B) {
    const int n = static_cast<int>(A.rows());
    const int k = static_cast<int>(B.cols());
    Mat K(n, n * k);
    Mat block = B;
    for (int i = 0; i < n; ++i) {
        K.middleCols(i * k, k) = block;
        block = A * block;
    }
    return K;
}

int kalman_rank(const LqProblem& problem, double rel_tol) {
    return rank_tol(controllability_matrix(problem.A, problem.B), rel_tol);
}

namespace {

bool positive_semidefinite(const Mat& S, double slack) {
    if (S.rows() == 0) return true;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (S + S.transpose()));
    return es.eigenvalues().minCoeff() >= -slack * std::max(1.0, S.norm());
}

} // namespace

AdmissibilityReport check_admissible(const LqProblem& problem, const ToleranceConfig& tol) {
    AdmissibilityReport report;
    report.kalman_rank = kalman_rank(problem, tol.rank_rel);
    report.controllable = report.kalman_rank == problem.n;
    report.vertical_psd =
        positive_semidefinite(problem.B * problem.B.transpose(), tol.psd);
    return report;
}

AdmissibilityReport check_admissible(const HamiltonianField& field, const ToleranceConfig& tol) {
    AdmissibilityReport report;
    report.kalman_rank = rank_tol(
        controllability_matrix(field.drift_block(), field.vertical_block()), tol.rank_rel);
    report.controllable = report.kalman_rank == field.n;
    report.vertical_psd = positive_semidefinite(field.vertical_block(), tol.psd);
    return report;
}

} // namespace lq
