#include "lq/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lq {

void ensure_finite(const Mat& M, const std::string& name) {
    if (!M.allFinite()) {
        throw IngestionError("matrix '" + name + "' contains non-finite entries");
    }
}

Mat symplectic_form(int n) {
    Mat omega = Mat::Zero(2 * n, 2 * n);
    omega.topRightCorner(n, n) = Mat::Identity(n, n);
    omega.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return omega;
}

LagrangianFrame vertical_frame(int n) {
    Mat Z = Mat::Zero(2 * n, n);
    Z.topRows(n) = Mat::Identity(n, n);
    return {n, Z};
}

LagrangianFrame horizontal_frame(int n) {
    Mat Z = Mat::Zero(2 * n, n);
    Z.bottomRows(n) = Mat::Identity(n, n);
    return {n, Z};
}

void check_lagrangian_frame(const LagrangianFrame& frame, const ToleranceConfig& tol) {
    const int n = frame.n;
    if (frame.Z.rows() != 2 * n || frame.Z.cols() != n) {
        throw DimensionError("Lagrangian frame must be 2n x n");
    }
    if (rank_tol(frame.Z, tol.rank_rel) != n) {
        throw ConstructionError("Lagrangian frame is rank deficient");
    }
    const double iso = (frame.Z.transpose() * symplectic_form(n) * frame.Z).norm();
    const double scale = 1.0 + frame.Z.squaredNorm();
    if (iso > tol.frame_residual * scale) {
        std::ostringstream os;
        os << "frame is not isotropic: ||Z' Omega Z|| = " << iso;
        throw ConstructionError(os.str());
    }
}

void check_isotropic_frame(const IsotropicFrame& frame, const ToleranceConfig& tol) {
    if (frame.dim() == 0) return;
    if (frame.Z.rows() != 2 * frame.n || frame.dim() > frame.n) {
        throw DimensionError("isotropic frame must be 2n x k with k <= n");
    }
    if (rank_tol(frame.Z, tol.rank_rel) != frame.dim()) {
        throw ConstructionError("isotropic frame is rank deficient");
    }
    const double iso = (frame.Z.transpose() * symplectic_form(frame.n) * frame.Z).norm();
    if (iso > tol.frame_residual * (1.0 + frame.Z.squaredNorm())) {
        std::ostringstream os;
        os << "frame is not isotropic: ||Z' Omega Z|| = " << iso;
        throw ConstructionError(os.str());
    }
}

// ---------------------------------------------------------------------------
// Matrix exponential: scaling and squaring with the order-13 Pade
// approximant. Fixed order keeps the error model simple; the scaling step
// brings ||A|| below theta_13.
// ---------------------------------------------------------------------------

Mat expm(const Mat& M, double t) {
    if (M.rows() != M.cols()) {
        throw DimensionError("expm requires a square matrix");
    }
    ensure_finite(M, "expm input");
    const auto dim = M.rows();
    if (t == 0.0 || dim == 0) {
        return Mat::Identity(dim, dim);
    }

    static const double b[] = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0,  129060195264000.0,   10559470521600.0,
        670442572800.0,      33522128640.0,       1323241920.0,
        40840800.0,          960960.0,            16380.0,
        182.0,               1.0};
    const double theta13 = 5.371920351148152;

    Mat A = t * M;
    const double nrm = A.cwiseAbs().colwise().sum().maxCoeff(); // 1-norm
    if (nrm == 0.0) {
        return Mat::Identity(dim, dim);
    }
    int squarings = 0;
    if (nrm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(nrm / theta13)));
        A /= std::ldexp(1.0, squarings);
    }

    const Mat I = Mat::Identity(dim, dim);
    const Mat A2 = A * A;
    const Mat A4 = A2 * A2;
    const Mat A6 = A2 * A4;
    const Mat U =
        A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 +
             b[3] * A2 + b[1] * I);
    const Mat V = A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 +
                  b[4] * A4 + b[2] * A2 + b[0] * I;

    Mat R = (V - U).partialPivLu().solve(V + U);
    for (int i = 0; i < squarings; ++i) {
        R = R * R;
    }
    return R;
}

namespace {

template <typename MatrixT>
int rank_tol_impl(const MatrixT& M, double rel_tol) {
    if (rel_tol <= 0.0) {
        throw ParameterError("rank_tol requires rel_tol > 0");
    }
    if (M.rows() == 0 || M.cols() == 0) return 0;
    Eigen::JacobiSVD<MatrixT> svd(M);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    if (smax == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > rel_tol * smax) ++r;
    }
    return r;
}

} // namespace

int rank_tol(const Mat& M, double rel_tol) { return rank_tol_impl(M, rel_tol); }
int rank_tol(const CMat& M, double rel_tol) { return rank_tol_impl(M, rel_tol); }

// ---------------------------------------------------------------------------
// Eigenvalue clustering
// ---------------------------------------------------------------------------

namespace {

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

} // namespace

std::vector<ComplexEigenvalue> eigen_decompose(const Mat& M, double tol) {
    if (M.rows() != M.cols()) {
        throw DimensionError("eigen_decompose requires a square matrix");
    }
    const int dim = static_cast<int>(M.rows());
    if (dim == 0) return {};

    Eigen::EigenSolver<Mat> solver(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        std::ostringstream os;
        os << "eigenvalue iteration failed to converge on a " << dim << "x" << dim
           << " matrix with ||M||_F = " << M.norm();
        throw NumericalError(os.str());
    }
    const Eigen::VectorXcd raw = solver.eigenvalues();

    const double radius = tol * M.norm();
    UnionFind uf(dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            if (std::abs(raw(i) - raw(j)) < radius) uf.unite(i, j);
        }
    }

    std::vector<ComplexEigenvalue> clusters;
    std::vector<int> roots;
    for (int i = 0; i < dim; ++i) {
        const int r = uf.find(i);
        auto it = std::find(roots.begin(), roots.end(), r);
        int idx;
        if (it == roots.end()) {
            roots.push_back(r);
            clusters.push_back({0.0, 0.0, 0});
            idx = static_cast<int>(roots.size()) - 1;
        } else {
            idx = static_cast<int>(it - roots.begin());
        }
        clusters[idx].re += raw(i).real();
        clusters[idx].im += raw(i).imag();
        clusters[idx].multiplicity += 1;
    }
    for (auto& c : clusters) {
        c.re /= c.multiplicity;
        c.im /= c.multiplicity;
    }

    // Close the multiset under conjugation: pair each cluster with the one
    // nearest its conjugate and average. A cluster that is its own best
    // match is real.
    std::vector<bool> done(clusters.size(), false);
    for (size_t i = 0; i < clusters.size(); ++i) {
        if (done[i]) continue;
        const std::complex<double> target(clusters[i].re, -clusters[i].im);
        size_t best = i;
        double best_dist = std::abs(clusters[i].value() - target);
        for (size_t j = 0; j < clusters.size(); ++j) {
            if (done[j] || j == i) continue;
            const double d = std::abs(clusters[j].value() - target);
            if (d < best_dist) {
                best = j;
                best_dist = d;
            }
        }
        if (best == i) {
            clusters[i].im = 0.0;
            done[i] = true;
        } else {
            const double re = 0.5 * (clusters[i].re + clusters[best].re);
            const double im = 0.5 * (clusters[i].im - clusters[best].im);
            clusters[i].re = re;
            clusters[i].im = im;
            clusters[best].re = re;
            clusters[best].im = -im;
            done[i] = done[best] = true;
        }
    }

    std::sort(clusters.begin(), clusters.end(),
              [](const ComplexEigenvalue& a, const ComplexEigenvalue& b) {
                  if (a.re != b.re) return a.re < b.re;
                  return a.im < b.im;
              });
    return clusters;
}

// ---------------------------------------------------------------------------
// Jordan structure from the rank staircase
// ---------------------------------------------------------------------------

JordanStructure jordan_structure(const Mat& M, const ComplexEigenvalue& lambda,
                                 const ToleranceConfig& tol) {
    if (M.rows() != M.cols()) {
        throw DimensionError("jordan_structure requires a square matrix");
    }
    const int dim = static_cast<int>(M.rows());

    // Powers are renormalized after each multiply to avoid overflow, with
    // the accumulated scale kept so that singular values are measured
    // against ||M - lambda I||^k. Measuring against the power's own
    // largest singular value would see full rank in the roundoff noise
    // that remains after the true power vanishes.
    std::vector<int> ranks = {dim};
    const auto run_staircase = [&](auto shifted) {
        const double base = std::max(shifted.norm(), 1e-300);
        auto P = shifted;
        double log_scale = 0.0;
        for (int k = 1; k <= lambda.multiplicity + 1 && k <= dim; ++k) {
            if (k > 1) P = (P * shifted).eval();
            const double nrm = P.norm();
            if (nrm == 0.0) {
                ranks.push_back(0);
                break;
            }
            log_scale += std::log(nrm);
            P /= nrm;
            Eigen::JacobiSVD<std::remove_cv_t<decltype(P)>> svd(P);
            const double log_threshold =
                std::log(tol.rank_rel) + k * std::log(base) - log_scale;
            int r = 0;
            for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
                if (std::log(std::max(svd.singularValues()(i), 1e-300)) > log_threshold) {
                    ++r;
                }
            }
            ranks.push_back(r);
            if (r == ranks[ranks.size() - 2]) break;
        }
    };

    if (lambda.im == 0.0) {
        run_staircase(Mat(M - lambda.re * Mat::Identity(dim, dim)));
    } else {
        run_staircase(CMat(M.cast<std::complex<double>>() -
                           lambda.value() * CMat::Identity(dim, dim)));
    }

    if (ranks.size() < 2 || ranks[1] == dim) {
        std::ostringstream os;
        os << "jordan_structure: (" << lambda.re << " + " << lambda.im
           << "i) is not an eigenvalue at tolerance";
        throw ContractError(os.str());
    }

    const auto staircase_text = [&]() {
        std::ostringstream os;
        os << "staircase ranks:";
        for (int r : ranks) os << ' ' << r;
        return os.str();
    };

    // blocks_ge[k] = number of blocks of size >= k+1.
    std::vector<int> blocks_ge;
    for (size_t k = 1; k < ranks.size(); ++k) {
        const int d = ranks[k - 1] - ranks[k];
        if (d < 0 || (!blocks_ge.empty() && d > blocks_ge.back())) {
            throw ClassificationError("jordan_structure: non-monotone rank staircase; " +
                                      staircase_text());
        }
        blocks_ge.push_back(d);
    }
    while (!blocks_ge.empty() && blocks_ge.back() == 0) blocks_ge.pop_back();

    JordanStructure js;
    js.eigenvalue = lambda;
    int total = 0;
    for (size_t k = 0; k < blocks_ge.size(); ++k) {
        const int exactly =
            blocks_ge[k] - (k + 1 < blocks_ge.size() ? blocks_ge[k + 1] : 0);
        for (int c = 0; c < exactly; ++c) {
            js.block_sizes.push_back(static_cast<int>(k) + 1);
        }
        total += blocks_ge[k];
    }
    if (total != lambda.multiplicity) {
        std::ostringstream os;
        os << "jordan_structure: block sizes sum to " << total
           << " but algebraic multiplicity is " << lambda.multiplicity << "; "
           << staircase_text();
        throw ClassificationError(os.str());
    }
    std::sort(js.block_sizes.begin(), js.block_sizes.end());
    return js;
}

bool is_symplectic(const Mat& P, double tol) {
    if (P.rows() != P.cols()) {
        throw DimensionError("is_symplectic requires a square matrix");
    }
    if (P.rows() % 2 != 0) {
        throw DimensionError("is_symplectic requires an even-dimensional matrix");
    }
    const int n = static_cast<int>(P.rows()) / 2;
    const Mat omega = symplectic_form(n);
    const double residual = (P.transpose() * omega * P - omega).norm();
    return residual <= tol * (1.0 + P.squaredNorm());
}

// ---------------------------------------------------------------------------
// Subspace helpers
// ---------------------------------------------------------------------------

Mat orthonormal_range(const Mat& M, double rel_tol) {
    if (M.rows() == 0 || M.cols() == 0) return Mat(M.rows(), 0);
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    const double smax = sv.size() > 0 ? sv(0) : 0.0;
    if (smax == 0.0) return Mat(M.rows(), 0);
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > rel_tol * smax) ++r;
    }
    return svd.matrixU().leftCols(r);
}

Mat orthonormal_columns(const Mat& M) {
    if (M.cols() == 0) return M;
    Eigen::HouseholderQR<Mat> qr(M);
    return qr.householderQ() * Mat::Identity(M.rows(), M.cols());
}

namespace {

template <typename MatrixT>
MatrixT nullspace_impl(const MatrixT& M, double rel_tol) {
    if (M.cols() == 0) return MatrixT(M.cols(), 0);
    if (M.rows() == 0) {
        MatrixT id = MatrixT::Identity(M.cols(), M.cols());
        return id;
    }
    Eigen::JacobiSVD<MatrixT> svd(M, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    int r = 0;
    if (smax > 0.0) {
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            if (sv(i) > rel_tol * smax) ++r;
        }
    }
    return svd.matrixV().rightCols(M.cols() - r);
}

} // namespace

Mat nullspace(const Mat& M, double rel_tol) { return nullspace_impl(M, rel_tol); }
CMat nullspace(const CMat& M, double rel_tol) { return nullspace_impl(M, rel_tol); }

int intersection_dim(const Mat& Z1, const Mat& Z2, double rel_tol) {
    const Mat B1 = orthonormal_range(Z1, rel_tol);
    const Mat B2 = orthonormal_range(Z2, rel_tol);
    if (B1.cols() == 0 || B2.cols() == 0) return 0;
    Mat joint(B1.rows(), B1.cols() + B2.cols());
    joint << B1, B2;
    return static_cast<int>(B1.cols() + B2.cols()) - rank_tol(joint, rel_tol);
}

int lagrangian_intersection_dim(const Mat& Z1, const Mat& Z2, double rel_tol) {
    if (Z1.rows() != Z2.rows() || Z1.rows() % 2 != 0) {
        throw DimensionError("lagrangian_intersection_dim: frames must share an even row count");
    }
    const int n = static_cast<int>(Z1.rows()) / 2;
    const Mat B1 = orthonormal_columns(Z1);
    const Mat B2 = orthonormal_columns(Z2);
    // Singular values of the pairing of orthonormal Lagrangian frames are
    // cosines of principal angles, so the cutoff is absolute.
    Eigen::JacobiSVD<Mat> svd(B1.transpose() * symplectic_form(n) * B2);
    int r = 0;
    for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
        if (svd.singularValues()(i) > rel_tol) ++r;
    }
    return n - r;
}

Mat random_symmetric(int dim, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Mat S(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            S(i, j) = gauss(rng);
        }
    }
    return 0.5 * (S + S.transpose());
}

Mat random_symplectic(int n, Rng& rng, double scale) {
    Mat S = random_symmetric(2 * n, rng);
    S *= scale / std::max(S.norm(), 1e-12);
    return expm(symplectic_form(n) * S);
}

LagrangianFrame random_lagrangian(int n, Rng& rng) {
    const Mat T = random_symplectic(n, rng);
    return {n, Mat(T.leftCols(n))};
}

} // namespace lq
