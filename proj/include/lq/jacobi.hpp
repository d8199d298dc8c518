#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "lq/model.hpp"
#include "lq/spectral.hpp"

namespace lq {

/// The Jacobi curve J(t) = e^{t Omega Hmat} Lambda_0 of a quadratic
/// Hamiltonian, with Lambda_0 the vertical subspace by default. The
/// generator is Omega * Hmat = -vecH, which makes the curve monotone
/// non-increasing: omega(z, z') = -z0' Hmat z0 <= 0 on the vertical.
struct JacobiCurve {
    HamiltonianField field;
    LagrangianFrame initial;
};

JacobiCurve make_jacobi_curve(HamiltonianField field);
JacobiCurve make_jacobi_curve(HamiltonianField field, LagrangianFrame initial);

/// Frame of J(t), 2n x n.
Mat curve_frame(const JacobiCurve& curve, double t);

/// (momentum block, position block) of the frame of J(t); for the
/// vertical initial frame these are the phi_11 and phi_21 blocks of the
/// flow. At t = 0 returns (I, 0).
std::pair<Mat, Mat> flow_frame(const JacobiCurve& curve, double t);

/// dim(J(t) cap V) = n minus the number of singular values of the
/// position block above kernel_rel * max(1, sigma_max).
int vertical_intersection_dim(const JacobiCurve& curve, double t, const ToleranceConfig& tol);

struct ConjugateTime {
    double t = 0.0;
    int multiplicity = 0;
};

/// Grid step that resolves the fastest oscillation of the flow:
/// min(1e-2, pi / (8 max|Im lambda|)).
double suggested_grid_step(const HamiltonianField& field, const ToleranceConfig& tol);

/// Scans det X(t) for sign changes (refined by bisection) and the
/// smallest singular value for even-multiplicity touches (refined by
/// golden section); each root carries its intersection multiplicity.
/// Requires an admissible controllable curve, t_min > 0 and grid_step > 0.
std::vector<ConjugateTime> detect_conjugate_times(const JacobiCurve& curve, double t_min,
                                                  double t_max, double grid_step,
                                                  const ToleranceConfig& tol);

/// A curve of Lagrangian subspaces given by frames; the common currency
/// of the Maslov machinery, so reduced curves and flow curves share it.
struct CurveSampler {
    int n = 0;                        ///< ambient half-dimension
    std::function<Mat(double)> frame; ///< 2n x n frame at time t
    double sample_step = 1e-2;        ///< Nyquist-safe sampling step
    double angular_rate = 1.0;        ///< bound on the subspace rotation speed
};

CurveSampler sampler_of(const JacobiCurve& curve, const ToleranceConfig& tol);

/// Intersection detection against an arbitrary Lagrangian train frame;
/// detect_conjugate_times is this with the vertical train.
std::vector<ConjugateTime> detect_intersections(const CurveSampler& curve, const Mat& train,
                                                double t_min, double t_max, double grid_step,
                                                const ToleranceConfig& tol);

/// Coordinates of a Lagrangian subspace in the chart of subspaces
/// transversal to delta, parametrized over pi: Lambda = {(p, Sp) : p in pi}
/// in a Darboux basis adapted to delta (+) pi.
struct ChartCoordinates {
    double t = 0.0;
    Mat S;
    LagrangianFrame delta;
    LagrangianFrame pi;
};

ChartCoordinates chart_coordinates(const Mat& frame, const LagrangianFrame& delta,
                                   const LagrangianFrame& pi, const ToleranceConfig& tol,
                                   double t = 0.0);
ChartCoordinates chart_coordinates(const JacobiCurve& curve, double t,
                                   const LagrangianFrame& delta, const LagrangianFrame& pi,
                                   const ToleranceConfig& tol);
/// Standard chart: delta the horizontal subspace, pi the vertical.
ChartCoordinates chart_coordinates(const JacobiCurve& curve, double t,
                                   const ToleranceConfig& tol);

struct MaslovSegment {
    double t0 = 0.0, t1 = 0.0;
    int ind0 = 0, ind1 = 0;
};

struct MaslovResult {
    double t0 = 0.0, t1 = 0.0; ///< endpoints actually used, after shifting
    int index = 0;
    std::vector<MaslovSegment> segments;
};

/// Signed intersection number of the curve with the train of Pi over
/// [t0, t1], computed chartwise as sums of ind S(tau_i) - ind S(tau_{i+1}).
/// Endpoints on the train are shifted forward by eps_shift (the (0, T] ->
/// (eps, T+eps] convention). Charts are the standard one, then randomized
/// images of the vertical under seeded symplectic transformations, with
/// segment halving on persistent transversality failure.
MaslovResult maslov_index(const CurveSampler& curve, double t0, double t1,
                          const LagrangianFrame& train, double eps_shift,
                          const ToleranceConfig& tol, std::uint64_t seed = 0x5eed);
MaslovResult maslov_index(const JacobiCurve& curve, double t0, double t1,
                          const LagrangianFrame& train, double eps_shift,
                          const ToleranceConfig& tol, std::uint64_t seed = 0x5eed);

/// |Maslov index over (eps, T+eps) against the vertical train|, which for
/// an ample monotone curve is the number of conjugate times in (0, T]
/// counted with multiplicity. Requires an admissible controllable curve.
int count_conjugate_times_via_maslov(const JacobiCurve& curve, double T, double eps_shift,
                                     const ToleranceConfig& tol, std::uint64_t seed = 0x5eed);

/// Curve induced on the symplectic reduction by an isotropic subspace
/// Gamma: t -> (J(t) cap Gamma^angle + Gamma) / Gamma, expressed in a
/// fixed Darboux basis of Gamma^angle / Gamma. Carries the image of the
/// vertical subspace as the reduced train.
struct ReducedCurve {
    int n = 0; ///< reduced half-dimension n - k
    CurveSampler curve;
    Mat train;     ///< frame of the reduced vertical, 2(n-k) x (n-k)
    Mat basis;     ///< 2n x 2(n-k) Darboux basis of the reduction
};

ReducedCurve reduce_curve(const JacobiCurve& curve, const IsotropicFrame& gamma,
                          const ToleranceConfig& tol);

struct MonotonicityReport {
    struct Sample {
        double t = 0.0;
        double max_dS_eigenvalue = 0.0; ///< largest eigenvalue of dS/dt
        double identity_residual = 0.0; ///< |omega(z, z') + z0' Hmat z0|
        bool chart_found = true;
    };
    std::vector<Sample> samples;
    double max_dS_eigenvalue = 0.0;
    double max_identity_residual = 0.0;
    bool passed = false;
};

/// Verifies dS/dt <= 0 (finite differences in a valid chart) at each
/// sample, and the exact identity omega(z, dz/dt) = -z0' Hmat z0 along
/// the flow for random initial covectors.
MonotonicityReport monotonicity_check(const JacobiCurve& curve,
                                      const std::vector<double>& sample_times,
                                      const ToleranceConfig& tol, std::uint64_t seed = 0x5eed);

/// Finite-difference monotonicity only (for reduced curves).
MonotonicityReport monotonicity_check(const CurveSampler& curve,
                                      const std::vector<double>& sample_times,
                                      const ToleranceConfig& tol, std::uint64_t seed = 0x5eed);

/// Ampleness of the Jacobi curve is controllability of the problem.
std::pair<bool, int> ampleness_check(const LqProblem& problem, const ToleranceConfig& tol);

/// Audit of the two index-change bounds: |J.M_Pi - J.M_Pi'| <= n for two
/// trains, and |J.M_Pi - J'.M_Pi| <= n for a second initial frame under
/// the same flow. Skipped (with reason) when an endpoint transversality
/// precondition fails.
struct IndexBoundAudit {
    bool applicable = false;
    std::string skip_reason;
    int n = 0;
    int index_pi = 0;
    int index_pi_prime = 0;
    std::optional<int> index_second_curve;
    bool train_change_ok = false;   ///< |index_pi - index_pi_prime| <= n
    bool curve_change_ok = true;    ///< |index_pi - index_second_curve| <= n
};

IndexBoundAudit index_bound_audit(const JacobiCurve& curve, double t0, double t1,
                                  const LagrangianFrame& pi, const LagrangianFrame& pi_prime,
                                  const std::optional<LagrangianFrame>& second_initial,
                                  const ToleranceConfig& tol, std::uint64_t seed = 0x5eed);

/// dim(J(t1) cap J(t2)).
int self_intersection_dim(const JacobiCurve& curve, double t1, double t2,
                          const ToleranceConfig& tol);

struct TracePoint {
    double t = 0.0;
    double det_x = 0.0;
    double sigma_min = 0.0;
    int intersection_dim = 0;
};

/// Grid trace of det X, sigma_min(X) and the vertical intersection
/// dimension over [0, horizon].
std::vector<TracePoint> curve_trace(const JacobiCurve& curve, double horizon, double step,
                                    const ToleranceConfig& tol);

} // namespace lq
