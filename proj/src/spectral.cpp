#include "lq/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace lq {

namespace {

constexpr double kMachineEps = std::numeric_limits<double>::epsilon();

/// True when sigma_min(M^power) <= threshold * ||M||_F^power, evaluated
/// with per-step renormalization so that a collapsing power (all of M in
/// one cluster) is handled without underflow.
bool power_kernel_test(const CMat& M, int power, double threshold) {
    const double base = std::max(M.norm(), 1e-300);
    CMat P = CMat::Identity(M.rows(), M.cols());
    double log_scale = 0.0; // log of the accumulated normalization
    for (int i = 0; i < power; ++i) {
        P = (P * M).eval();
        const double nrm = P.norm();
        if (nrm == 0.0) return true;
        log_scale += std::log(nrm);
        P /= nrm;
    }
    Eigen::JacobiSVD<CMat> svd(P);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return true;
    const double log_sigma_min = std::log(std::max(sv(sv.size() - 1), 1e-300)) + log_scale;
    return log_sigma_min <= std::log(threshold) + power * std::log(base);
}

struct Cluster {
    std::complex<double> center;
    int multiplicity = 0;
};

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) {
        for (int i = 0; i < n; ++i) parent[i] = i;
    }
    int find(int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

std::vector<std::vector<size_t>> single_linkage_groups(const std::vector<Cluster>& clusters,
                                                       double radius) {
    UnionFind uf(static_cast<int>(clusters.size()));
    for (size_t i = 0; i < clusters.size(); ++i) {
        for (size_t j = i + 1; j < clusters.size(); ++j) {
            if (std::abs(clusters[i].center - clusters[j].center) <= radius) {
                uf.unite(static_cast<int>(i), static_cast<int>(j));
            }
        }
    }
    std::vector<std::vector<size_t>> groups;
    std::vector<int> roots;
    for (size_t i = 0; i < clusters.size(); ++i) {
        const int r = uf.find(static_cast<int>(i));
        auto it = std::find(roots.begin(), roots.end(), r);
        if (it == roots.end()) {
            roots.push_back(r);
            groups.emplace_back();
            it = roots.end() - 1;
        }
        groups[static_cast<size_t>(it - roots.begin())].push_back(i);
    }
    return groups;
}

/// Fragments of a defective eigenvalue of multiplicity m scatter like
/// eps^(1/m), far beyond any fixed clustering radius. Groups found by
/// single linkage are accepted as one eigenvalue only when the group
/// centroid c is an eigenvalue of the full group multiplicity m, measured
/// by sigma_min((M - c)^m) / sigma_max; groups that fail are re-linked at
/// a tighter radius. The centroid of a complete fragment star is accurate
/// to far better than the scatter, which is what makes the test sharp.
std::vector<Cluster> merge_groups(const CMat& Mc, std::vector<Cluster> clusters,
                                  double radius, double floor_radius) {
    if (clusters.size() <= 1 || radius < floor_radius) return clusters;
    const auto dim = Mc.rows();

    std::vector<Cluster> out;
    for (const auto& group : single_linkage_groups(clusters, radius)) {
        if (group.size() == 1) {
            out.push_back(clusters[group[0]]);
            continue;
        }
        std::complex<double> c{0.0, 0.0};
        int m = 0;
        for (size_t idx : group) {
            c += clusters[idx].center * static_cast<double>(clusters[idx].multiplicity);
            m += clusters[idx].multiplicity;
        }
        c /= static_cast<double>(m);

        bool accepted = false;
        if (m <= dim) {
            const CMat shifted = Mc - c * CMat::Identity(dim, dim);
            accepted = power_kernel_test(shifted, m, 1e-11);
        }
        if (accepted) {
            out.push_back({c, m});
        } else {
            std::vector<Cluster> sub;
            for (size_t idx : group) sub.push_back(clusters[idx]);
            auto refined = merge_groups(Mc, std::move(sub), 0.25 * radius, floor_radius);
            out.insert(out.end(), refined.begin(), refined.end());
        }
    }
    return out;
}

std::vector<Cluster> merge_defective_clusters(const Mat& M,
                                              std::vector<Cluster> clusters) {
    const double scale = std::max(M.norm(), 1e-300);
    const CMat Mc = M.cast<std::complex<double>>();
    // Widest useful radius: the scatter of a cluster filling the whole
    // matrix. Distinct eigenvalues closer than the validated radius would
    // merge wrongly; the sigma test rejects those groups down to a
    // separation of roughly eps^(1/2) * ||M||.
    const double start_radius =
        scale * std::pow(1e6 * kMachineEps, 1.0 / static_cast<double>(M.rows()));
    const double floor_radius = scale * 1e-9;
    return merge_groups(Mc, std::move(clusters), start_radius, floor_radius);
}

void symmetrize_conjugates(std::vector<Cluster>& clusters) {
    std::vector<bool> done(clusters.size(), false);
    for (size_t i = 0; i < clusters.size(); ++i) {
        if (done[i]) continue;
        const std::complex<double> target = std::conj(clusters[i].center);
        size_t best = i;
        double best_dist = std::abs(clusters[i].center - target);
        for (size_t j = 0; j < clusters.size(); ++j) {
            if (done[j] || j == i) continue;
            const double d = std::abs(clusters[j].center - target);
            if (d < best_dist) {
                best = j;
                best_dist = d;
            }
        }
        if (best == i) {
            clusters[i].center.imag(0.0);
            done[i] = true;
        } else {
            const double re = 0.5 * (clusters[i].center.real() + clusters[best].center.real());
            const double im = 0.5 * (clusters[i].center.imag() - clusters[best].center.imag());
            clusters[i].center = {re, im};
            clusters[best].center = {re, -im};
            done[i] = done[best] = true;
        }
    }
}

} // namespace

SpectrumReport classify_spectrum(const HamiltonianField& field, const ToleranceConfig& tol) {
    const Mat& M = field.vecH;
    const double norm = M.norm();

    std::vector<Cluster> clusters;
    for (const auto& ev : eigen_decompose(M, tol.eig_cluster_rel)) {
        clusters.push_back({ev.value(), ev.multiplicity});
    }
    clusters = merge_defective_clusters(M, clusters);
    symmetrize_conjugates(clusters);

    const double band = tol.imag_class_rel * std::max(norm, 1e-300);

    SpectrumReport report;
    report.field_norm = norm;
    for (auto& c : clusters) {
        SpectralClass cls;
        if (std::abs(c.center.real()) <= band && std::abs(c.center.imag()) <= band) {
            cls = SpectralClass::Zero;
            c.center = {0.0, 0.0};
        } else if (std::abs(c.center.real()) <= band) {
            cls = SpectralClass::PureImaginary;
            c.center.real(0.0);
        } else {
            cls = SpectralClass::Hyperbolic;
        }
        SpectrumReport::Entry entry;
        entry.spectral_class = cls;
        entry.jordan.eigenvalue = {c.center.real(), c.center.imag(), c.multiplicity};
        report.eigenvalues.push_back(std::move(entry));
    }

    // Jordan analysis once per conjugate pair; the structure of the
    // conjugate is the mirror image.
    for (auto& entry : report.eigenvalues) {
        if (entry.jordan.eigenvalue.im < 0.0) continue;
        entry.jordan = jordan_structure(M, entry.jordan.eigenvalue, tol);
        if (entry.jordan.eigenvalue.im > 0.0) {
            for (auto& other : report.eigenvalues) {
                if (other.jordan.eigenvalue.im == -entry.jordan.eigenvalue.im &&
                    other.jordan.eigenvalue.re == entry.jordan.eigenvalue.re) {
                    other.jordan.block_sizes = entry.jordan.block_sizes;
                }
            }
        }
    }

    std::sort(report.eigenvalues.begin(), report.eigenvalues.end(),
              [](const SpectrumReport::Entry& a, const SpectrumReport::Entry& b) {
                  const auto& x = a.jordan.eigenvalue;
                  const auto& y = b.jordan.eigenvalue;
                  if (x.re != y.re) return x.re < y.re;
                  return x.im < y.im;
              });
    return report;
}

Mat real_invariant_subspace(const Mat& M, const ComplexEigenvalue& lambda,
                            const ToleranceConfig& tol) {
    const auto dim = M.rows();
    const int power = std::max(lambda.multiplicity, 1);

    if (lambda.im == 0.0) {
        Mat P = Mat::Identity(dim, dim);
        const Mat shifted = M - lambda.re * Mat::Identity(dim, dim);
        for (int i = 0; i < power; ++i) {
            P = (P * shifted).eval();
            const double nrm = P.norm();
            if (nrm > 0.0) P /= nrm;
        }
        return nullspace(P, tol.rank_rel);
    }

    CMat P = CMat::Identity(dim, dim);
    const CMat shifted = M.cast<std::complex<double>>() -
                         lambda.value() * CMat::Identity(dim, dim);
    for (int i = 0; i < power; ++i) {
        P = (P * shifted).eval();
        const double nrm = P.norm();
        if (nrm > 0.0) P /= nrm;
    }
    const CMat kernel = nullspace(P, tol.rank_rel);
    Mat realspan(dim, 2 * kernel.cols());
    realspan << kernel.real(), kernel.imag();
    return orthonormal_range(realspan, tol.rank_rel);
}

std::vector<KreinFrequency> krein_frequencies(const HamiltonianField& field,
                                              const SpectrumReport& report,
                                              const ToleranceConfig& tol) {
    std::vector<KreinFrequency> freqs;
    for (const auto& entry : report.eigenvalues) {
        if (entry.spectral_class != SpectralClass::PureImaginary) continue;
        const auto& ev = entry.jordan.eigenvalue;
        if (ev.im <= 0.0) continue;
        const bool diagonalizable =
            std::all_of(entry.jordan.block_sizes.begin(), entry.jordan.block_sizes.end(),
                        [](int s) { return s == 1; });
        if (!diagonalizable) continue;

        const Mat Z = real_invariant_subspace(field.vecH, ev, tol);
        const Mat G = Z.transpose() * field.Hmat * Z;
        Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (G + G.transpose()));
        const Vec vals = es.eigenvalues();
        const double gscale = std::max(vals.cwiseAbs().maxCoeff(), 1e-300);

        int positives = 0, negatives = 0;
        for (Eigen::Index i = 0; i < vals.size(); ++i) {
            if (std::abs(vals(i)) <= tol.psd * gscale) {
                std::ostringstream os;
                os << "krein_frequencies: H restricted to the eigenplane of +-"
                   << ev.im << "i is degenerate at tolerance";
                throw ClassificationError(os.str());
            }
            (vals(i) > 0.0 ? positives : negatives) += 1;
        }
        if (positives % 2 != 0 || negatives % 2 != 0 ||
            positives + negatives != 2 * ev.multiplicity) {
            std::ostringstream os;
            os << "krein_frequencies: inertia (" << positives << ", " << negatives
               << ") of the restriction at +-" << ev.im << "i is inconsistent";
            throw ClassificationError(os.str());
        }
        if (positives > 0) {
            freqs.push_back({ev.im, +1, ev.im, positives / 2});
        }
        if (negatives > 0) {
            freqs.push_back({ev.im, -1, -ev.im, negatives / 2});
        }
    }
    std::sort(freqs.begin(), freqs.end(),
              [](const KreinFrequency& a, const KreinFrequency& b) {
                  return a.omega > b.omega;
              });
    return freqs;
}

DichotomyVerdict predict_dichotomy(const SpectrumReport& report) {
    DichotomyVerdict verdict;
    for (const auto& entry : report.eigenvalues) {
        if (entry.spectral_class != SpectralClass::PureImaginary) continue;
        const auto& ev = entry.jordan.eigenvalue;
        if (ev.im <= 0.0) continue;
        for (int size : entry.jordan.block_sizes) {
            if (size % 2 == 1) {
                verdict.witnesses.push_back({ev.im, size});
            }
        }
    }
    verdict.kind = verdict.witnesses.empty() ? DichotomyVerdict::Kind::NoConjugateTimes
                                             : DichotomyVerdict::Kind::InfinitelyMany;
    return verdict;
}

int ConjugateTimeBound::count_lower_bound(double T) const {
    const double offset = k_reduced == 0 ? 3.0 * n - 1.0 : 4.0 * n - 3.0 * k_reduced - 1.0;
    const double raw = T * sum_omega / M_PI - offset;
    if (raw < 0.0) return 0;
    return static_cast<int>(std::floor(raw));
}

ConjugateTimeBound conjugate_time_bounds(const std::vector<KreinFrequency>& freqs,
                                         int n, int k_reduced) {
    ConjugateTimeBound bound;
    bound.n = n;
    bound.k_reduced = k_reduced;
    for (const auto& f : freqs) {
        bound.sum_omega += f.omega * f.multiplicity;
    }
    if (bound.sum_omega <= 0.0) {
        std::ostringstream os;
        os << "conjugate_time_bounds: sum of signed frequencies is " << bound.sum_omega
           << " <= 0; the system is not controllable or the spectrum was misclassified";
        throw ConsistencyError(os.str());
    }
    const double numerator = k_reduced == 0 ? 3.0 * n : 4.0 * n - 3.0 * k_reduced;
    bound.first_time_bound = numerator * M_PI / bound.sum_omega;
    return bound;
}

// ---------------------------------------------------------------------------
// Invariant subspace constructions
// ---------------------------------------------------------------------------

namespace {

void verify_invariant_isotropic(const Mat& vecH, const Mat& Z, const ToleranceConfig& tol,
                                const char* what) {
    if (Z.cols() == 0) return;
    const int n = static_cast<int>(vecH.rows()) / 2;
    const double iso = (Z.transpose() * symplectic_form(n) * Z).norm();
    const double inv =
        ((Mat::Identity(2 * n, 2 * n) - Z * Z.transpose()) * (vecH * Z)).norm() /
        std::max(vecH.norm(), 1e-300);
    if (iso > tol.frame_residual || inv > tol.frame_residual) {
        std::ostringstream os;
        os << what << ": verification failed, isotropy residual " << iso
           << ", invariance residual " << inv;
        throw ConstructionError(os.str());
    }
}

/// Grows an m-dimensional isotropic vecH-invariant subspace of E_0 from
/// the images of increasing powers of the nilpotent restriction, deepest
/// first; a candidate direction is accepted only if the grown span stays
/// isotropic and invariant at tolerance.
Mat isotropic_half_of_zero_subspace(const Mat& vecH, const Mat& E0, int target,
                                    const ToleranceConfig& tol) {
    const auto dim = vecH.rows();
    const int n = static_cast<int>(dim) / 2;
    const Mat omega = symplectic_form(n);

    std::vector<Mat> levels; // levels[j] = basis of im(vecH^{j+1} | E0)
    Mat P = E0;
    for (int j = 0; j < 2 * target; ++j) {
        P = (vecH * P).eval();
        const double nrm = P.norm();
        if (nrm <= 1e-300) break;
        P /= nrm;
        Mat basis = orthonormal_range(P, tol.rank_rel);
        if (basis.cols() == 0) break;
        levels.push_back(std::move(basis));
    }

    Mat S(dim, 0);
    for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
        for (Eigen::Index c = 0; c < it->cols(); ++c) {
            if (S.cols() == target) break;
            const Vec v = it->col(c);
            Mat trial(dim, S.cols() + 1);
            trial << S, v;
            if (rank_tol(trial, tol.rank_rel) != trial.cols()) continue;
            const Mat basis = orthonormal_range(trial, tol.rank_rel);
            const double iso = (basis.transpose() * omega * basis).norm();
            if (iso > tol.frame_residual) continue;
            const double inv = ((Mat::Identity(dim, dim) - basis * basis.transpose()) *
                                (vecH * basis))
                                   .norm() /
                               std::max(vecH.norm(), 1e-300);
            if (inv > tol.frame_residual) continue;
            S = basis;
        }
    }

    if (S.cols() != target) {
        std::ostringstream os;
        os << "build_gamma_plus: could not grow an isotropic invariant subspace of E_0: "
           << "reached dimension " << S.cols() << " of " << target;
        throw ConstructionError(os.str());
    }
    return S;
}

} // namespace

IsotropicFrame build_gamma_plus(const HamiltonianField& field, const SpectrumReport& report,
                                const ToleranceConfig& tol) {
    const auto dim = field.vecH.rows();
    std::vector<Mat> parts;

    for (const auto& entry : report.eigenvalues) {
        const auto& ev = entry.jordan.eigenvalue;
        if (entry.spectral_class != SpectralClass::Hyperbolic) continue;
        if (ev.re <= 0.0 || ev.im < 0.0) continue; // E_lambda = E_conj(lambda)
        parts.push_back(real_invariant_subspace(field.vecH, ev, tol));
    }

    if (auto zero = report.zero_eigenvalue()) {
        if (zero->eigenvalue.multiplicity % 2 != 0) {
            throw ConstructionError(
                "build_gamma_plus: zero eigenvalue with odd algebraic multiplicity");
        }
        const Mat E0 = real_invariant_subspace(field.vecH, zero->eigenvalue, tol);
        const int m = zero->eigenvalue.multiplicity / 2;
        if (m > 0) {
            parts.push_back(
                isotropic_half_of_zero_subspace(field.vecH, E0, m, tol));
        }
    }

    Eigen::Index total = 0;
    for (const auto& p : parts) total += p.cols();
    Mat stacked(dim, total);
    Eigen::Index col = 0;
    for (const auto& p : parts) {
        stacked.middleCols(col, p.cols()) = p;
        col += p.cols();
    }

    IsotropicFrame frame{field.n, orthonormal_range(stacked, tol.rank_rel)};
    if (frame.Z.cols() == 0) frame.Z = Mat(dim, 0);
    verify_invariant_isotropic(field.vecH, frame.Z, tol, "build_gamma_plus");
    return frame;
}

IsotropicFrame invariant_isotropic_subspace(const HamiltonianField& field, double beta,
                                            const ToleranceConfig& tol) {
    if (beta == 0.0) {
        throw ParameterError("invariant_isotropic_subspace requires beta != 0");
    }
    beta = std::abs(beta);

    const SpectrumReport report = classify_spectrum(field, tol);
    const SpectrumReport::Entry* match = nullptr;
    for (const auto& entry : report.eigenvalues) {
        if (entry.spectral_class != SpectralClass::PureImaginary) continue;
        const auto& ev = entry.jordan.eigenvalue;
        if (ev.im > 0.0 && std::abs(ev.im - beta) <=
                               tol.imag_class_rel * std::max(report.field_norm, 1.0) +
                                   1e-6 * beta) {
            match = &entry;
            break;
        }
    }
    if (match == nullptr) {
        std::ostringstream os;
        os << "invariant_isotropic_subspace: +-" << beta << "i is not an eigenvalue";
        throw ContractError(os.str());
    }
    if (match->jordan.block_sizes.size() != 1) {
        throw ContractError(
            "invariant_isotropic_subspace requires a single conjugate pair of Jordan "
            "blocks at +-i*beta");
    }
    const int order = match->jordan.block_sizes.front();
    const double beta_exact = match->jordan.eigenvalue.im;

    const Mat E = real_invariant_subspace(field.vecH, match->jordan.eigenvalue, tol);
    const auto dim = field.vecH.rows();
    const Mat K = field.vecH * field.vecH + beta_exact * beta_exact * Mat::Identity(dim, dim);

    Mat P = E;
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        P = (K * P).eval();
        const double nrm = P.norm();
        if (nrm > 0.0) P /= nrm;
    }

    IsotropicFrame frame{field.n, orthonormal_range(P, tol.rank_rel)};
    const int expected = 2 * (order / 2);
    if (frame.dim() != expected) {
        std::ostringstream os;
        os << "invariant_isotropic_subspace: expected dimension " << expected << ", got "
           << frame.dim();
        throw ConstructionError(os.str());
    }
    verify_invariant_isotropic(field.vecH, frame.Z, tol, "invariant_isotropic_subspace");
    return frame;
}

// ---------------------------------------------------------------------------
// Normal-form fixtures
// ---------------------------------------------------------------------------

namespace {

/// Accumulates the symmetric matrix of a quadratic form given as a list
/// of c * z_i * z_j terms.
struct QuadraticFormBuilder {
    Mat H;
    explicit QuadraticFormBuilder(int dim) : H(Mat::Zero(dim, dim)) {}
    void add(int i, int j, double c) {
        H(i, j) += 0.5 * c;
        H(j, i) += 0.5 * c;
    }
};

} // namespace

HamiltonianField build_imaginary_jordan_fixture(BlockParity parity, int k, double beta,
                                                int sign) {
    if (sign != 1 && sign != -1) {
        throw ParameterError("fixture sign must be +1 or -1");
    }
    if (beta == 0.0) {
        throw ParameterError("fixture requires beta != 0");
    }
    beta = std::abs(beta);
    const double b2 = beta * beta;

    if (parity == BlockParity::Even) {
        if (k < 1) {
            throw ParameterError("even fixtures require k >= 1");
        }
        const int nloc = 2 * k;
        QuadraticFormBuilder q(2 * nloc);
        const auto P = [&](int i) { return i - 1; };
        const auto X = [&](int i) { return nloc + i - 1; };
        for (int j = 1; j <= k; ++j) {
            q.add(X(2 * j - 1), X(2 * k - 2 * j + 1), 1.0 / b2);
            q.add(X(2 * j), X(2 * k - 2 * j + 2), 1.0);
            q.add(P(2 * j - 1), X(2 * j), -b2);
            q.add(P(2 * j), X(2 * j - 1), 1.0);
        }
        for (int j = 1; j <= k - 1; ++j) {
            q.add(P(2 * j + 1), P(2 * k - 2 * j + 1), -b2);
            q.add(P(2 * j + 2), P(2 * k - 2 * j + 2), -1.0);
        }
        // The written normal form produces eigenvalues +-i*beta/2; the
        // factor 2 restores the stated +-i*beta without touching the
        // block structure (scaling H scales vecH).
        return field_from_hmat(2.0 * sign * q.H);
    }

    if (k < 0) {
        throw ParameterError("odd fixtures require k >= 0");
    }
    const int nloc = 2 * k + 1;
    QuadraticFormBuilder q(2 * nloc);
    const auto P = [&](int i) { return i - 1; };
    const auto X = [&](int i) { return nloc + i - 1; };
    for (int j = 1; j <= k; ++j) {
        q.add(P(2 * j), P(2 * k - 2 * j + 2), b2);
        q.add(X(2 * j), X(2 * k - 2 * j + 2), 1.0);
    }
    for (int j = 1; j <= 2 * k; ++j) {
        q.add(P(j), X(j + 1), -1.0);
    }
    for (int j = 1; j <= k + 1; ++j) {
        q.add(P(2 * j - 1), P(2 * k - 2 * j + 3), -b2);
        q.add(X(2 * j - 1), X(2 * k - 2 * j + 3), -1.0);
    }
    // Orientation chosen so that k = 0, sign = +1 gives diag(beta^2, 1),
    // the one-dimensional oscillator.
    return field_from_hmat(-1.0 * sign * q.H);
}

OmegaOrthogonalityReport omega_orthogonality_check(const HamiltonianField& field,
                                                   const SpectrumReport& report,
                                                   const ToleranceConfig& tol) {
    OmegaOrthogonalityReport out;
    const Mat omega = symplectic_form(field.n);
    const double thresh = tol.imag_class_rel * std::max(report.field_norm, 1.0);

    std::vector<const SpectrumReport::Entry*> reps;
    for (const auto& entry : report.eigenvalues) {
        if (entry.jordan.eigenvalue.im >= 0.0) reps.push_back(&entry);
    }

    std::vector<Mat> bases;
    bases.reserve(reps.size());
    for (const auto* e : reps) {
        bases.push_back(real_invariant_subspace(field.vecH, e->jordan.eigenvalue, tol));
    }

    for (size_t i = 0; i < reps.size(); ++i) {
        for (size_t j = i; j < reps.size(); ++j) {
            const auto la = reps[i]->jordan.eigenvalue.value();
            const auto lb = reps[j]->jordan.eigenvalue.value();
            if (std::abs(la + lb) <= thresh || std::abs(std::conj(la) + lb) <= thresh) {
                continue;
            }
            OmegaOrthogonalityReport::Entry entry;
            entry.a = reps[i]->jordan.eigenvalue;
            entry.b = reps[j]->jordan.eigenvalue;
            entry.residual = (bases[i].transpose() * omega * bases[j]).norm();
            out.max_residual = std::max(out.max_residual, entry.residual);
            out.entries.push_back(std::move(entry));
        }
    }
    return out;
}

} // namespace lq
