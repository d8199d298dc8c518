#include "lq/jacobi.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

namespace lq {

namespace {

/// Singular values of the intersection block, largest first.
Vec singular_values(const Mat& W) {
    Eigen::JacobiSVD<Mat> svd(W);
    return svd.singularValues();
}

double smallest_singular_value(const Mat& W) {
    const Vec sv = singular_values(W);
    return sv.size() == 0 ? 0.0 : sv(sv.size() - 1);
}

/// Intersection multiplicity of two Lagrangian subspaces from the pairing
/// of their orthonormalized frames: the singular values are cosines of
/// principal angles with natural scale 1, so values below
/// kernel_rel * max(1, sigma_max) = kernel_rel count toward the kernel.
/// (A raw frame would not do: along hyperbolic flows its largest column
/// dwarfs the oscillating directions and the relative threshold drowns.)
int pairing_kernel_dim(const Mat& W_orth, const ToleranceConfig& tol) {
    const Vec sv = singular_values(W_orth);
    int kernel = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) <= tol.kernel_rel) ++kernel;
    }
    return kernel;
}

void require_conjugate_time_semantics(const HamiltonianField& field,
                                      const ToleranceConfig& tol, const char* op) {
    const AdmissibilityReport adm = check_admissible(field, tol);
    if (!adm.vertical_psd) {
        throw ContractError(std::string(op) +
                            ": the Hamiltonian is not positive semidefinite on the "
                            "vertical subspace; conjugate-time semantics unavailable");
    }
    if (!adm.controllable) {
        std::ostringstream os;
        os << op << ": curve is not ample (controllability rank " << adm.kalman_rank
           << " of " << field.n << "); intersections need not be isolated";
        throw ContractError(os.str());
    }
}

} // namespace

JacobiCurve make_jacobi_curve(HamiltonianField field) {
    const int n = field.n;
    return {std::move(field), vertical_frame(n)};
}

JacobiCurve make_jacobi_curve(HamiltonianField field, LagrangianFrame initial) {
    if (initial.n != field.n) {
        throw DimensionError("initial frame dimension does not match the field");
    }
    return {std::move(field), std::move(initial)};
}

Mat curve_frame(const JacobiCurve& curve, double t) {
    // Generator Omega * Hmat = -vecH.
    return expm(curve.field.vecH, -t) * curve.initial.Z;
}

std::pair<Mat, Mat> flow_frame(const JacobiCurve& curve, double t) {
    const int n = curve.field.n;
    const Mat F = curve_frame(curve, t);
    return {F.topRows(n), F.bottomRows(n)};
}

int vertical_intersection_dim(const JacobiCurve& curve, double t, const ToleranceConfig& tol) {
    const Mat F = orthonormal_columns(curve_frame(curve, t));
    const Mat W = vertical_frame(curve.field.n).Z.transpose() *
                  symplectic_form(curve.field.n) * F;
    return pairing_kernel_dim(W, tol);
}

double suggested_grid_step(const HamiltonianField& field, const ToleranceConfig& tol) {
    double max_imag = 0.0;
    for (const auto& ev : eigen_decompose(field.vecH, tol.eig_cluster_rel)) {
        max_imag = std::max(max_imag, std::abs(ev.im));
    }
    if (max_imag == 0.0) return 1e-2;
    return std::min(1e-2, M_PI / (8.0 * max_imag));
}

namespace {

/// Frames evaluated as e^{tG} Z lose the weak directions of the subspace
/// once the spread of exponential rates times t exceeds the mantissa;
/// the subspace itself stays perfectly well-defined. The standard cure is
/// stepwise propagation with QR renormalization per step. R is forced to
/// a positive diagonal so the accumulated column transform has positive
/// determinant: sign(det(train' Omega Q(t))) then matches the raw frame
/// and determinant bracketing stays sound.
class FlowPropagator {
  public:
    FlowPropagator(Mat generator, Mat initial, double rate)
        : generator_(std::move(generator)),
          checkpoint_dt_(2.0 / std::max(rate, 1e-6)) {
        origin_ = positive_qr(initial);
    }

    Mat at(double t) const {
        std::lock_guard<std::mutex> lock(mutex_);
        const double steps = std::floor(t / checkpoint_dt_);
        const long k = static_cast<long>(steps);
        return positive_qr(expm(generator_, t - steps * checkpoint_dt_) * checkpoint(k));
    }

  private:
    static Mat positive_qr(const Mat& M) {
        Eigen::HouseholderQR<Mat> qr(M);
        Mat Q = qr.householderQ() * Mat::Identity(M.rows(), M.cols());
        const Mat R = qr.matrixQR()
                          .topRows(M.cols())
                          .template triangularView<Eigen::Upper>();
        for (Eigen::Index j = 0; j < M.cols(); ++j) {
            if (R(j, j) < 0.0) Q.col(j) = -Q.col(j);
        }
        return Q;
    }

    Mat checkpoint(long k) const {
        auto it = cache_.find(k);
        if (it != cache_.end()) return it->second;
        if (k == 0) {
            cache_.emplace(0, origin_);
            return origin_;
        }
        const long prev = k > 0 ? k - 1 : k + 1;
        const double dt = (k > 0 ? 1.0 : -1.0) * checkpoint_dt_;
        Mat Q = positive_qr(expm(generator_, dt) * checkpoint(prev));
        cache_.emplace(k, Q);
        return Q;
    }

    Mat generator_;
    Mat origin_;
    double checkpoint_dt_;
    mutable std::map<long, Mat> cache_;
    mutable std::mutex mutex_;
};

} // namespace

CurveSampler sampler_of(const JacobiCurve& curve, const ToleranceConfig& tol) {
    CurveSampler sampler;
    sampler.n = curve.field.n;
    sampler.sample_step = suggested_grid_step(curve.field, tol);
    sampler.angular_rate = std::max(curve.field.vecH.norm(), 1e-6);
    auto propagator = std::make_shared<FlowPropagator>(Mat(-curve.field.vecH),
                                                       curve.initial.Z,
                                                       sampler.angular_rate);
    sampler.frame = [propagator](double t) { return propagator->at(t); };
    return sampler;
}

// ---------------------------------------------------------------------------
// Intersection detection
// ---------------------------------------------------------------------------

namespace {

struct IntersectionScan {
    Mat train;                // orthonormalized train frame
    Mat omega;                // cached symplectic form
    const CurveSampler* curve = nullptr;

    /// Raw pairing block: its determinant is analytic in t, which makes
    /// sign bracketing sound.
    Mat block_raw(double t) const {
        return train.transpose() * omega * curve->frame(t);
    }
    /// Pairing of orthonormal frames: singular values are principal-angle
    /// cosines, the scale-free measure of proximity to the train.
    Mat block_angle(double t) const {
        return train.transpose() * omega * orthonormal_columns(curve->frame(t));
    }
    double det(double t) const { return block_raw(t).determinant(); }
    double sigma_min(double t) const { return smallest_singular_value(block_angle(t)); }
};

double bisect_root(const IntersectionScan& scan, double a, double b, double fa,
                   double time_tol) {
    for (int iter = 0; iter < 200 && (b - a) > time_tol; ++iter) {
        const double mid = 0.5 * (a + b);
        const double fm = scan.det(mid);
        if (fm == 0.0) return mid;
        if ((fa < 0.0) == (fm < 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

double golden_minimize(const IntersectionScan& scan, double a, double b, double time_tol) {
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - phi * (b - a);
    double x2 = a + phi * (b - a);
    double f1 = scan.sigma_min(x1);
    double f2 = scan.sigma_min(x2);
    while ((b - a) > time_tol) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = scan.sigma_min(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = scan.sigma_min(x2);
        }
    }
    return f1 < f2 ? x1 : x2;
}

} // namespace

std::vector<ConjugateTime> detect_intersections(const CurveSampler& curve, const Mat& train,
                                                double t_min, double t_max, double grid_step,
                                                const ToleranceConfig& tol) {
    if (grid_step <= 0.0) {
        throw ParameterError("detect_intersections requires grid_step > 0");
    }
    if (!(t_max > t_min)) {
        throw ParameterError("detect_intersections requires t_max > t_min");
    }

    IntersectionScan scan;
    scan.train = orthonormal_columns(train);
    scan.omega = symplectic_form(curve.n);
    scan.curve = &curve;

    const int steps = std::max(1, static_cast<int>(std::ceil((t_max - t_min) / grid_step)));
    const double h = (t_max - t_min) / steps;

    // The determinant of the raw pairing is analytic, so its sign changes
    // bracket crossings -- but only where |det| stands above the rounding
    // noise of its own evaluation (~eps * ||W||^n). Where the curve decays
    // toward a train-intersecting limit subspace, det underflows into
    // noise and its sign flickers without any crossing.
    std::vector<double> det(steps + 1), smin(steps + 1);
    std::vector<bool> usable(steps + 1);
    for (int i = 0; i <= steps; ++i) {
        const Mat W = scan.block_raw(t_min + i * h);
        det[i] = W.determinant();
        smin[i] = scan.sigma_min(t_min + i * h);
        const double noise =
            1e2 * std::numeric_limits<double>::epsilon() *
            std::pow(std::max(W.norm(), 1e-300), static_cast<double>(curve.n));
        usable[i] = std::abs(det[i]) > noise;
    }

    std::vector<double> roots;
    for (int i = 0; i < steps; ++i) {
        if (usable[i] && usable[i + 1] && det[i] * det[i + 1] < 0.0) {
            roots.push_back(
                bisect_root(scan, t_min + i * h, t_min + (i + 1) * h, det[i], tol.time));
        }
    }

    // Touches (even local multiplicity) leave no determinant sign change;
    // refine every sufficiently deep local minimum of sigma_min and keep
    // it only if the refined value reaches the kernel threshold.
    for (int i = 1; i < steps; ++i) {
        if (smin[i] <= smin[i - 1] && smin[i] <= smin[i + 1] && smin[i] < 5e-2) {
            const double t_star =
                golden_minimize(scan, t_min + (i - 1) * h, t_min + (i + 1) * h, tol.time);
            const double at_min = scan.sigma_min(t_star);
            if (at_min > tol.kernel_rel) continue;
            // A genuine touch is isolated: the angle must recover on both
            // sides. Without this, a curve converging to an invariant
            // subspace that meets the train (possible for hyperbolic
            // systems) would shed arbitrarily many fake roots.
            const double recovery =
                std::min(scan.sigma_min(t_star - 8.0 * h), scan.sigma_min(t_star + 8.0 * h));
            if (recovery < std::max(1e3 * at_min, 10.0 * tol.kernel_rel)) continue;
            roots.push_back(t_star);
        }
    }

    std::sort(roots.begin(), roots.end());
    const double dedupe = std::max(100.0 * tol.time, 1e-7);
    std::vector<ConjugateTime> result;
    for (double r : roots) {
        if (!result.empty() && r - result.back().t < dedupe) continue;
        const int mult = pairing_kernel_dim(scan.block_angle(r), tol);
        if (mult == 0) continue;
        result.push_back({r, mult});
    }
    return result;
}

std::vector<ConjugateTime> detect_conjugate_times(const JacobiCurve& curve, double t_min,
                                                  double t_max, double grid_step,
                                                  const ToleranceConfig& tol) {
    require_conjugate_time_semantics(curve.field, tol, "detect_conjugate_times");
    if (t_min <= 0.0) {
        throw ParameterError("detect_conjugate_times requires t_min > 0");
    }
    return detect_intersections(sampler_of(curve, tol), vertical_frame(curve.field.n).Z,
                                t_min, t_max, grid_step, tol);
}

// ---------------------------------------------------------------------------
// Charts
// ---------------------------------------------------------------------------

namespace {

/// Smallest principal-angle cosine between span(A) and the
/// Omega-complement of span(B), for orthonormal frames: 0 means the
/// subspaces intersect, 1 means they are as transversal as possible.
double transversality(const Mat& frame_orth, const Mat& other_orth, const Mat& omega) {
    return smallest_singular_value(Mat(frame_orth.transpose() * omega * other_orth));
}

/// Darboux-adapted coordinates for the splitting delta (+) pi: a frame
/// decomposes as pi * A + f * B with pi' Omega f = I.
struct ChartBasis {
    Mat pi;         // orthonormalized frame of pi
    Mat delta_orth; // orthonormalized frame of delta
    Mat f;          // delta frame normalized so that pi' Omega f = I
    Mat omega;

    static ChartBasis make(const LagrangianFrame& delta, const LagrangianFrame& pi,
                           const ToleranceConfig& tol, double margin = 0.0) {
        if (margin <= 0.0) margin = tol.chart_margin;
        ChartBasis cb;
        const int n = pi.n;
        cb.omega = symplectic_form(n);
        cb.pi = orthonormal_columns(pi.Z);
        cb.delta_orth = orthonormal_columns(delta.Z);
        const Mat W = cb.pi.transpose() * cb.omega * cb.delta_orth;
        if (smallest_singular_value(W) < margin) {
            throw ChartError("chart anchor is not transversal to the parametrizing "
                             "complement");
        }
        cb.f = cb.delta_orth * W.inverse();
        return cb;
    }

    /// Transversality of an orthonormalized subspace frame to the anchor.
    double frame_margin(const Mat& frame_orth) const {
        return transversality(frame_orth, delta_orth, omega);
    }

    Mat pi_coordinates(const Mat& frame) const {
        return -(f.transpose() * omega * frame);
    }
    Mat delta_coordinates(const Mat& frame) const {
        return pi.transpose() * omega * frame;
    }
};

int index_of_form(const Mat& S, const ToleranceConfig& tol) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    const double band = tol.zero_band_rel * std::max(1.0, S.norm());
    int negatives = 0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        if (es.eigenvalues()(i) < -band) ++negatives;
    }
    return negatives;
}

double smallest_abs_eigenvalue(const Mat& S) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    return es.eigenvalues().cwiseAbs().minCoeff();
}

bool eigenvalues_clear_band(const Mat& S, const ToleranceConfig& tol) {
    const double band = tol.zero_band_rel * std::max(1.0, S.norm());
    return smallest_abs_eigenvalue(S) > band;
}

} // namespace

ChartCoordinates chart_coordinates(const Mat& frame, const LagrangianFrame& delta,
                                   const LagrangianFrame& pi, const ToleranceConfig& tol,
                                   double t) {
    const ChartBasis cb = ChartBasis::make(delta, pi, tol);
    // S is invariant under right multiplication of the frame, so the
    // orthonormalized frame gives the same chart matrix with better
    // conditioning.
    const Mat frame_orth = orthonormal_columns(frame);
    if (cb.frame_margin(frame_orth) < tol.chart_margin) {
        std::ostringstream os;
        os << "subspace is not transversal to the chart anchor at t = " << t;
        throw ChartError(os.str());
    }
    const Mat A = cb.pi_coordinates(frame_orth);
    const Mat B = cb.delta_coordinates(frame_orth);
    const Mat S_raw = B * A.inverse();
    ChartCoordinates out;
    out.t = t;
    out.S = 0.5 * (S_raw + S_raw.transpose());
    out.delta = delta;
    out.pi = pi;
    return out;
}

ChartCoordinates chart_coordinates(const JacobiCurve& curve, double t,
                                   const LagrangianFrame& delta, const LagrangianFrame& pi,
                                   const ToleranceConfig& tol) {
    return chart_coordinates(curve_frame(curve, t), delta, pi, tol, t);
}

ChartCoordinates chart_coordinates(const JacobiCurve& curve, double t,
                                   const ToleranceConfig& tol) {
    return chart_coordinates(curve, t, horizontal_frame(curve.field.n),
                             vertical_frame(curve.field.n), tol);
}

// ---------------------------------------------------------------------------
// Maslov index
// ---------------------------------------------------------------------------

namespace {

struct SegmentChart {
    LagrangianFrame delta;
    ChartBasis basis;
};

} // namespace

MaslovResult maslov_index(const CurveSampler& curve, double t0, double t1,
                          const LagrangianFrame& train, double eps_shift,
                          const ToleranceConfig& tol, std::uint64_t seed) {
    const int n = curve.n;
    if (eps_shift <= 0.0) eps_shift = tol.default_eps_shift();
    const Mat omega = symplectic_form(n);
    const Mat train_orth = orthonormal_columns(train.Z);

    MaslovResult result;
    if (t0 == t1) {
        result.t0 = t0;
        result.t1 = t1;
        return result;
    }
    if (t1 < t0) {
        throw ParameterError("maslov_index requires t0 <= t1");
    }

    const auto frame_at = [&](double t) {
        return orthonormal_columns(curve.frame(t));
    };

    result.t0 = t0;
    result.t1 = t1;

    Rng rng(seed);

    // A chart is usable for a segment when its anchor is transversal to
    // the train and the curve stays transversal to the anchor across the
    // whole segment. The per-sample margin is tied to the sampling gap
    // and the rotation speed of the curve, so transversality cannot be
    // lost between samples.
    const auto find_chart = [&](double a, double& b) -> SegmentChart {
        int attempts = 0;
        while (true) {
            LagrangianFrame delta =
                attempts == 0 ? horizontal_frame(n) : random_lagrangian(n, rng);
            ++attempts;
            bool usable = true;
            ChartBasis basis;
            try {
                basis = ChartBasis::make(delta, LagrangianFrame{n, train_orth}, tol, 1e-2);
            } catch (const ChartError&) {
                usable = false;
            }
            if (usable) {
                const double span = b - a;
                const double gap =
                    std::min({curve.sample_step, 2e-2 / curve.angular_rate, span / 8.0});
                const int samples = std::max(8, static_cast<int>(std::ceil(span / gap)));
                const double needed = std::max(
                    tol.chart_margin, 3.0 * (span / samples) * curve.angular_rate);
                for (int i = 0; i <= samples && usable; ++i) {
                    const double t = a + span * i / samples;
                    if (basis.frame_margin(frame_at(t)) < needed) {
                        usable = false;
                    }
                }
            }
            if (usable) {
                return {delta, basis};
            }
            if (attempts % 8 == 0) {
                b = a + 0.5 * (b - a);
                if (b - a < std::max(tol.time, 1e-13)) {
                    std::ostringstream os;
                    os << "maslov_index: no valid chart for the segment starting at t = "
                       << a << " after " << attempts << " attempts";
                    throw ChartError(os.str());
                }
            }
            if (attempts > 128) {
                std::ostringstream os;
                os << "maslov_index: chart retry budget exhausted near t = " << a;
                throw ChartError(os.str());
            }
        }
    };

    const auto chart_matrix = [&](const SegmentChart& chart, double t) {
        const Mat frame = frame_at(t);
        if (chart.basis.frame_margin(frame) < 0.5 * tol.chart_margin) {
            std::ostringstream os;
            os << "maslov_index: lost chart transversality at t = " << t;
            throw ChartError(os.str());
        }
        const Mat A = chart.basis.pi_coordinates(frame);
        const Mat B = chart.basis.delta_coordinates(frame);
        const Mat S = B * A.inverse();
        return Mat(0.5 * (S + S.transpose()));
    };

    // Index at an outer endpoint. Eigenvalues of S inside the zero band
    // cannot be signed reliably (the curve may pass arbitrarily close to
    // the train near t = 0 for systems with a long controllability
    // chain); they are resolved by probing into the interior, which
    // computes the index of the open interval (t0, t1).
    const auto endpoint_index = [&](const SegmentChart& chart, double t, double direction,
                                    double span) {
        const Mat S0 = chart_matrix(chart, t);
        if (eigenvalues_clear_band(S0, tol)) return index_of_form(S0, tol);
        double probe = std::max(eps_shift, 1e-12);
        const double cap = 0.25 * span;
        while (probe <= cap) {
            const Mat S = chart_matrix(chart, t + direction * probe);
            if (eigenvalues_clear_band(S, tol)) return index_of_form(S, tol);
            probe *= 4.0;
        }
        std::ostringstream os;
        os << "maslov_index: endpoint at t = " << t
           << " cannot be separated from the train";
        throw ContractError(os.str());
    };

    double cur = t0;
    bool cur_is_t0 = true;
    int guard = 0;
    while (cur < t1 - 1e-15) {
        if (++guard > 100000) {
            throw ChartError("maslov_index: segmentation failed to make progress");
        }
        double end = t1;
        SegmentChart chart = find_chart(cur, end);

        // Keep interior joints clear of the train so the two adjacent
        // segment indices count every crossing exactly once; back off
        // inside the verified chart range.
        if (end < t1) {
            Mat S_end = chart_matrix(chart, end);
            int backoff = 0;
            while (!eigenvalues_clear_band(S_end, tol) && backoff < 16 &&
                   end - eps_shift > cur) {
                end -= eps_shift;
                S_end = chart_matrix(chart, end);
                ++backoff;
            }
        }

        MaslovSegment seg;
        seg.t0 = cur;
        seg.t1 = end;
        seg.ind0 = cur_is_t0 ? endpoint_index(chart, cur, +1.0, end - cur)
                             : index_of_form(chart_matrix(chart, cur), tol);
        seg.ind1 = end >= t1 ? endpoint_index(chart, end, -1.0, end - cur)
                             : index_of_form(chart_matrix(chart, end), tol);
        result.index += seg.ind0 - seg.ind1;
        result.segments.push_back(seg);
        cur = end;
        cur_is_t0 = false;
    }
    return result;
}

MaslovResult maslov_index(const JacobiCurve& curve, double t0, double t1,
                          const LagrangianFrame& train, double eps_shift,
                          const ToleranceConfig& tol, std::uint64_t seed) {
    return maslov_index(sampler_of(curve, tol), t0, t1, train, eps_shift, tol, seed);
}

int count_conjugate_times_via_maslov(const JacobiCurve& curve, double T, double eps_shift,
                                     const ToleranceConfig& tol, std::uint64_t seed) {
    require_conjugate_time_semantics(curve.field, tol, "count_conjugate_times_via_maslov");
    if (eps_shift <= 0.0) eps_shift = tol.default_eps_shift();
    const MaslovResult result =
        maslov_index(sampler_of(curve, tol), eps_shift, T + eps_shift,
                     vertical_frame(curve.field.n), eps_shift, tol, seed);
    return std::abs(result.index);
}

// ---------------------------------------------------------------------------
// Symplectic reduction
// ---------------------------------------------------------------------------

namespace {

/// Darboux basis of the quotient Gamma^angle / Gamma: columns span a
/// complement of Gamma inside Gamma^angle and satisfy
/// basis' Omega basis = standard form.
Mat reduction_basis(const Mat& gamma_orth, int n, const ToleranceConfig& tol) {
    const Mat omega = symplectic_form(n);
    const auto k = gamma_orth.cols();
    const auto m = n - k;

    // Gamma^angle = ker(gamma' Omega), then remove Gamma itself.
    const Mat ann = nullspace(Mat(gamma_orth.transpose() * omega), tol.rank_rel);
    const Mat compl_raw =
        (Mat::Identity(2 * n, 2 * n) - gamma_orth * gamma_orth.transpose()) * ann;
    Mat U = orthonormal_range(compl_raw, tol.rank_rel);
    if (U.cols() != 2 * m) {
        throw ReductionError("reduction basis has unexpected dimension");
    }

    // Symplectic Gram-Schmidt on the restricted form.
    Mat e(2 * n, m), f(2 * n, m);
    std::vector<Eigen::Index> pool(static_cast<size_t>(U.cols()));
    for (size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<Eigen::Index>(i);
    std::vector<Vec> vectors;
    for (Eigen::Index c = 0; c < U.cols(); ++c) vectors.push_back(U.col(c));

    for (Eigen::Index pair = 0; pair < m; ++pair) {
        // First nonzero vector as e, its strongest symplectic partner as f.
        Eigen::Index ei = -1;
        for (size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].norm() > 1e-10) {
                ei = static_cast<Eigen::Index>(i);
                break;
            }
        }
        if (ei < 0) throw ReductionError("symplectic Gram-Schmidt ran out of vectors");
        Vec ev = vectors[static_cast<size_t>(ei)].normalized();

        Eigen::Index fi = -1;
        double best = 0.0;
        for (size_t i = 0; i < vectors.size(); ++i) {
            if (static_cast<Eigen::Index>(i) == ei) continue;
            const double w = std::abs(ev.dot(omega * vectors[i]));
            if (w > best) {
                best = w;
                fi = static_cast<Eigen::Index>(i);
            }
        }
        if (fi < 0 || best < 1e-10) {
            throw ReductionError("reduced symplectic form is degenerate");
        }
        Vec fv = vectors[static_cast<size_t>(fi)];
        fv /= ev.dot(omega * fv);

        e.col(pair) = ev;
        f.col(pair) = fv;

        std::vector<Vec> rest;
        for (size_t i = 0; i < vectors.size(); ++i) {
            if (static_cast<Eigen::Index>(i) == ei || static_cast<Eigen::Index>(i) == fi) {
                continue;
            }
            Vec v = vectors[i];
            v -= ev.dot(omega * v) * fv - fv.dot(omega * v) * ev;
            rest.push_back(v);
        }
        vectors = std::move(rest);
    }

    Mat basis(2 * n, 2 * m);
    basis << e, f;
    const Mat check = basis.transpose() * omega * basis - symplectic_form(static_cast<int>(m));
    if (check.norm() > 1e-8 * (1.0 + basis.squaredNorm())) {
        throw ReductionError("reduction basis failed the Darboux verification");
    }
    return basis;
}

} // namespace

ReducedCurve reduce_curve(const JacobiCurve& curve, const IsotropicFrame& gamma,
                          const ToleranceConfig& tol) {
    const int n = curve.field.n;
    const int k = gamma.dim();

    ReducedCurve out;
    if (k == 0) {
        out.n = n;
        out.curve = sampler_of(curve, tol);
        out.train = vertical_frame(n).Z;
        out.basis = Mat::Identity(2 * n, 2 * n);
        return out;
    }
    check_isotropic_frame(gamma, tol);

    const Mat gamma_orth = orthonormal_columns(gamma.Z);
    const Mat omega = symplectic_form(n);
    const Mat basis = reduction_basis(gamma_orth, n, tol);
    const int m = n - k;

    // Coordinates on Gamma^angle modulo Gamma: solve [basis gamma] c = z
    // and keep the basis part.
    Mat ext(2 * n, 2 * m + k);
    ext << basis, gamma_orth;
    const Eigen::ColPivHouseholderQR<Mat> coords(ext);

    const auto project = [coords, m](const Mat& vectors) {
        return Mat(coords.solve(vectors).topRows(2 * m));
    };

    // Reduced image of a Lagrangian frame: (span cap Gamma^angle + Gamma)/Gamma.
    const auto reduce_frame = [gamma_orth, omega, project, tol](const Mat& frame,
                                                                const char* what,
                                                                double at) -> Mat {
        const Mat pairing = gamma_orth.transpose() * omega * frame;
        if (rank_tol(pairing, tol.rank_rel) < gamma_orth.cols()) {
            std::ostringstream os;
            os << what << ": subspace meets the reducing subspace at t = " << at;
            throw ReductionError(os.str());
        }
        const Mat kernel = nullspace(pairing, tol.rank_rel);
        return orthonormal_columns(project(frame * kernel));
    };

    const Mat reduced_train = reduce_frame(vertical_frame(n).Z, "reduce_curve (train)", 0.0);
    if (reduced_train.cols() != m) {
        throw ReductionError("reduced vertical subspace is not Lagrangian in the quotient");
    }

    const CurveSampler base = sampler_of(curve, tol);
    out.n = m;
    out.basis = basis;
    out.train = reduced_train;
    out.curve.n = m;
    out.curve.sample_step = base.sample_step;
    out.curve.angular_rate = base.angular_rate;
    out.curve.frame = [base, reduce_frame](double t) {
        const Mat frame = base.frame(t);
        return reduce_frame(frame, "reduce_curve", t);
    };

    // The reduction is only defined while the curve avoids Gamma; fail
    // fast at construction for the initial point.
    (void)out.curve.frame(0.0);
    return out;
}

// ---------------------------------------------------------------------------
// Monotonicity
// ---------------------------------------------------------------------------

namespace {

MonotonicityReport finite_difference_monotonicity(const CurveSampler& curve,
                                                  const std::vector<double>& sample_times,
                                                  const ToleranceConfig& tol,
                                                  std::uint64_t seed) {
    MonotonicityReport report;
    Rng rng(seed);
    const int n = curve.n;
    const double h = 1e-5;

    std::vector<double> frame_conditioning;
    for (double t : sample_times) {
        MonotonicityReport::Sample sample;
        sample.t = t;
        const Mat F = curve.frame(t);
        const Vec sv_frame = singular_values(F);
        frame_conditioning.push_back(
            sv_frame.size() > 0 && sv_frame(sv_frame.size() - 1) > 0.0
                ? sv_frame(0) / sv_frame(sv_frame.size() - 1)
                : 1.0);

        // Chart anchored away from J(t): try the standard pair first.
        bool found = false;
        for (int attempt = 0; attempt < 24 && !found; ++attempt) {
            LagrangianFrame delta, pi;
            if (attempt == 0) {
                delta = horizontal_frame(n);
                pi = vertical_frame(n);
            } else if (attempt == 1) {
                delta = vertical_frame(n);
                pi = horizontal_frame(n);
            } else {
                const Mat T = random_symplectic(n, rng);
                delta = {n, Mat(T.leftCols(n))};
                pi = {n, Mat(T.rightCols(n))};
            }
            try {
                const ChartBasis cb = ChartBasis::make(delta, pi, tol);
                const auto S_of = [&](double tau) {
                    const Mat frame = orthonormal_columns(curve.frame(tau));
                    if (cb.frame_margin(frame) < tol.chart_margin) {
                        throw ChartError("not transversal");
                    }
                    const Mat A = cb.pi_coordinates(frame);
                    const Mat B = cb.delta_coordinates(frame);
                    const Mat S = B * A.inverse();
                    return Mat(0.5 * (S + S.transpose()));
                };
                (void)S_of(t);
                const Mat dS = (S_of(t + h) - S_of(t - h)) / (2.0 * h);
                Eigen::SelfAdjointEigenSolver<Mat> es(dS);
                sample.max_dS_eigenvalue = es.eigenvalues().maxCoeff();
                found = true;
            } catch (const ChartError&) {
            }
        }
        sample.chart_found = found;
        report.samples.push_back(sample);
    }

    bool all_ok = true;
    report.max_dS_eigenvalue = -std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < report.samples.size(); ++i) {
        const auto& s = report.samples[i];
        report.max_dS_eigenvalue = std::max(report.max_dS_eigenvalue, s.max_dS_eigenvalue);
        // Finite differences carry O(h^2) truncation plus roundoff
        // amplified by 1/h and by the conditioning of the raw frame.
        const double kappa = frame_conditioning[i];
        const double slack = 1e-6 * std::max(1.0, std::abs(s.max_dS_eigenvalue)) +
                             1e-12 * kappa * kappa;
        all_ok = all_ok && s.chart_found && s.max_dS_eigenvalue <= slack;
    }
    if (report.samples.empty()) report.max_dS_eigenvalue = 0.0;
    report.passed = all_ok;
    return report;
}

} // namespace

MonotonicityReport monotonicity_check(const CurveSampler& curve,
                                      const std::vector<double>& sample_times,
                                      const ToleranceConfig& tol, std::uint64_t seed) {
    return finite_difference_monotonicity(curve, sample_times, tol, seed);
}

MonotonicityReport monotonicity_check(const JacobiCurve& curve,
                                      const std::vector<double>& sample_times,
                                      const ToleranceConfig& tol, std::uint64_t seed) {
    MonotonicityReport report =
        finite_difference_monotonicity(sampler_of(curve, tol), sample_times, tol, seed);

    // Exact identity omega(z, dz/dt) = -z0' Hmat z0 along the flow.
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int n = curve.field.n;
    const Mat omega = symplectic_form(n);
    const Mat generator = -curve.field.vecH; // Omega * Hmat

    for (size_t i = 0; i < report.samples.size(); ++i) {
        const double t = report.samples[i].t;
        Vec c(curve.initial.Z.cols());
        for (Eigen::Index j = 0; j < c.size(); ++j) c(j) = gauss(rng);
        const Vec z0 = curve.initial.Z * c;
        const Vec z = expm(curve.field.vecH, -t) * z0;
        const double lhs = z.dot(omega * (generator * z));
        const double rhs = -z0.dot(curve.field.Hmat * z0);
        // Backward-error scale: the flow is accurate to eps * ||z||, and
        // the form amplifies that by another ||z||.
        const double scale =
            std::max({1.0, std::abs(lhs), std::abs(rhs), 1e-7 * z.squaredNorm()});
        report.samples[i].identity_residual = std::abs(lhs - rhs) / scale;
        report.max_identity_residual =
            std::max(report.max_identity_residual, report.samples[i].identity_residual);
    }
    report.passed = report.passed && report.max_identity_residual <= 1e-9;
    return report;
}

std::pair<bool, int> ampleness_check(const LqProblem& problem, const ToleranceConfig& tol) {
    const int rank = kalman_rank(problem, tol.rank_rel);
    return {rank == problem.n, rank};
}

// ---------------------------------------------------------------------------
// Index-change audits
// ---------------------------------------------------------------------------

IndexBoundAudit index_bound_audit(const JacobiCurve& curve, double t0, double t1,
                                  const LagrangianFrame& pi, const LagrangianFrame& pi_prime,
                                  const std::optional<LagrangianFrame>& second_initial,
                                  const ToleranceConfig& tol, std::uint64_t seed) {
    IndexBoundAudit audit;
    audit.n = curve.field.n;

    const Mat omega = symplectic_form(curve.field.n);
    const auto clear_of = [&](const Mat& frame, const LagrangianFrame& train) {
        return transversality(orthonormal_columns(frame),
                              orthonormal_columns(train.Z), omega) >= 1e-12;
    };

    std::optional<JacobiCurve> second;
    if (second_initial) {
        second = make_jacobi_curve(curve.field, *second_initial);
    }

    // Both bounds compare indices over a shared interval, so a degenerate
    // endpoint is shifted forward until it clears every train involved.
    const auto all_clear = [&](double t) {
        const Mat F = curve_frame(curve, t);
        if (!clear_of(F, pi) || !clear_of(F, pi_prime)) return false;
        if (second && !clear_of(curve_frame(*second, t), pi)) return false;
        return true;
    };
    const double eps = tol.default_eps_shift();
    int budget = 8;
    while (!all_clear(t0) && budget-- > 0) t0 += eps;
    budget = 8;
    while (!all_clear(t1) && budget-- > 0) t1 += eps;
    if (!all_clear(t0) || !all_clear(t1)) {
        audit.skip_reason = "an endpoint remains on one of the trains after shifting";
        return audit;
    }

    audit.applicable = true;
    const CurveSampler sampler = sampler_of(curve, tol);
    audit.index_pi = maslov_index(sampler, t0, t1, pi, tol.default_eps_shift(), tol, seed).index;
    audit.index_pi_prime =
        maslov_index(sampler, t0, t1, pi_prime, tol.default_eps_shift(), tol, seed).index;
    audit.train_change_ok = std::abs(audit.index_pi - audit.index_pi_prime) <= audit.n;

    if (second) {
        const int idx = maslov_index(sampler_of(*second, tol), t0, t1, pi,
                                     tol.default_eps_shift(), tol, seed)
                            .index;
        audit.index_second_curve = idx;
        audit.curve_change_ok = std::abs(audit.index_pi - idx) <= audit.n;
    }
    return audit;
}

int self_intersection_dim(const JacobiCurve& curve, double t1, double t2,
                          const ToleranceConfig& tol) {
    return lagrangian_intersection_dim(curve_frame(curve, t1), curve_frame(curve, t2),
                                       tol.rank_rel);
}

std::vector<TracePoint> curve_trace(const JacobiCurve& curve, double horizon, double step,
                                    const ToleranceConfig& tol) {
    if (horizon <= 0.0) {
        throw ParameterError("curve_trace requires horizon > 0");
    }
    if (step <= 0.0) {
        throw ParameterError("curve_trace requires step > 0");
    }
    std::vector<TracePoint> trace;
    const auto rows = static_cast<long>(std::floor(horizon / step + 1e-9)) + 1;
    for (long i = 0; i < rows; ++i) {
        const double t = i * step;
        const Mat X = flow_frame(curve, t).second;
        TracePoint point;
        point.t = t;
        point.det_x = X.determinant();
        point.sigma_min = smallest_singular_value(X);
        point.intersection_dim = vertical_intersection_dim(curve, t, tol);
        trace.push_back(point);
    }
    return trace;
}

} // namespace lq
