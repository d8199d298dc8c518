#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lq/errors.hpp"
#include "lq/tolerances.hpp"

namespace lq {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;

/// Throws IngestionError if M contains NaN or Inf.
void ensure_finite(const Mat& M, const std::string& name);

/// The standard symplectic form on R^{2n}: Omega = [[0, I], [-I, 0]].
Mat symplectic_form(int n);

/// Basis of a Lagrangian subspace of R^{2n}: a 2n x n matrix of full
/// column rank whose span is Omega-isotropic.
struct LagrangianFrame {
    int n = 0;
    Mat Z;
};

/// Basis of an isotropic subspace, dimension anywhere in [0, n].
struct IsotropicFrame {
    int n = 0;
    Mat Z;

    int dim() const { return static_cast<int>(Z.cols()); }
    bool is_lagrangian() const { return dim() == n; }
};

/// The vertical subspace {(p, 0)}: frame [I; 0].
LagrangianFrame vertical_frame(int n);

/// The horizontal subspace {(0, x)}: frame [0; I].
LagrangianFrame horizontal_frame(int n);

/// Throws ConstructionError unless Z is 2n x n, full rank and isotropic.
void check_lagrangian_frame(const LagrangianFrame& frame, const ToleranceConfig& tol);

/// Throws ConstructionError unless Z has full column rank and is isotropic.
void check_isotropic_frame(const IsotropicFrame& frame, const ToleranceConfig& tol);

struct ComplexEigenvalue {
    double re = 0.0;
    double im = 0.0;
    int multiplicity = 1;

    std::complex<double> value() const { return {re, im}; }
};

/// Jordan block sizes of one eigenvalue; the multiset sums to the
/// algebraic multiplicity.
struct JordanStructure {
    ComplexEigenvalue eigenvalue;
    std::vector<int> block_sizes;
};

/// Matrix exponential e^{tM} by scaling and squaring with a fixed
/// order-13 Pade approximant. Relative accuracy ~1e-12 for ||tM|| <= 50.
/// Returns the identity exactly for t = 0.
Mat expm(const Mat& M, double t = 1.0);

/// Number of singular values above rel_tol * sigma_max. Zero matrix has
/// rank 0. Requires rel_tol > 0.
int rank_tol(const Mat& M, double rel_tol);
int rank_tol(const CMat& M, double rel_tol);

/// All eigenvalues of a real square matrix with algebraic multiplicities.
/// Eigenvalues closer than tol * ||M||_F are clustered into one entry with
/// summed multiplicity; the result is closed under complex conjugation and
/// sorted by (re, im).
std::vector<ComplexEigenvalue> eigen_decompose(const Mat& M, double tol);

/// Jordan block sizes at lambda from the rank staircase
/// r_k = rank_tol((M - lambda I)^k): the number of blocks of size >= k is
/// r_{k-1} - r_k. Non-real lambda is handled over the complexification.
/// Throws ContractError if lambda is not an eigenvalue at tolerance and
/// ClassificationError (carrying the staircase) if the ranks are
/// inconsistent with lambda's multiplicity.
JordanStructure jordan_structure(const Mat& M, const ComplexEigenvalue& lambda,
                                 const ToleranceConfig& tol);

/// True iff ||P' Omega P - Omega||_F <= tol * (1 + ||P||_F^2).
/// Throws DimensionError for odd-dimensional or non-square P.
bool is_symplectic(const Mat& P, double tol);

/// Orthonormal basis of the column space (columns with sigma > rel * sigma_max).
Mat orthonormal_range(const Mat& M, double rel_tol);

/// Orthonormal basis with exactly cols(M) columns, for matrices of full
/// column rank (frames of invertible flows can be arbitrarily
/// ill-conditioned without losing rank; SVD truncation would drop their
/// weakest direction).
Mat orthonormal_columns(const Mat& M);

/// Orthonormal basis of the kernel.
Mat nullspace(const Mat& M, double rel_tol);
CMat nullspace(const CMat& M, double rel_tol);

/// dim(span Z1 cap span Z2) for arbitrary bases Z1, Z2.
int intersection_dim(const Mat& Z1, const Mat& Z2, double rel_tol);

/// dim(L1 cap L2) = n - rank(Z1^T Omega Z2) for Lagrangian frames.
int lagrangian_intersection_dim(const Mat& Z1, const Mat& Z2, double rel_tol);

using Rng = std::mt19937_64;

/// Random symmetric matrix with N(0,1) entries, symmetrized.
Mat random_symmetric(int dim, Rng& rng);

/// Random symplectic matrix e^{Omega S} with S symmetric of unit scale.
Mat random_symplectic(int n, Rng& rng, double scale = 1.0);

/// Random Lagrangian subspace: image of the vertical under a random
/// symplectic transformation.
LagrangianFrame random_lagrangian(int n, Rng& rng);

} // namespace lq
