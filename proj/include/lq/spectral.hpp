#pragma once

#include <optional>

#include "lq/model.hpp"

namespace lq {

enum class SpectralClass { Zero, PureImaginary, Hyperbolic };

/// Full spectral picture of a Hamiltonian vector field: one entry per
/// clustered eigenvalue, each with its Jordan block sizes and a class.
/// "Pure imaginary" means |Re| at noise level and |Im| above it;
/// "hyperbolic" collects everything with nonzero real part.
struct SpectrumReport {
    struct Entry {
        JordanStructure jordan;
        SpectralClass spectral_class = SpectralClass::Hyperbolic;
    };

    std::vector<Entry> eigenvalues;
    double field_norm = 0.0;

    std::vector<const Entry*> of_class(SpectralClass c) const {
        std::vector<const Entry*> out;
        for (const auto& e : eigenvalues) {
            if (e.spectral_class == c) out.push_back(&e);
        }
        return out;
    }
    std::optional<JordanStructure> zero_eigenvalue() const {
        for (const auto& e : eigenvalues) {
            if (e.spectral_class == SpectralClass::Zero) return e.jordan;
        }
        return std::nullopt;
    }
};

/// Classifies the spectrum of vecH. Eigenvalue clusters are merged with a
/// multiplicity-aware radius (the roots of a defective eigenvalue of
/// multiplicity m scatter like eps^(1/m) under rounding) before the Jordan
/// analysis, so defective clusters are recovered as one eigenvalue.
SpectrumReport classify_spectrum(const HamiltonianField& field, const ToleranceConfig& tol);

/// A signed frequency of the pure-imaginary, diagonalizable part of the
/// spectrum: omega = sign * beta where sign is the definiteness sign of H
/// on the real eigenplane (the Krein signature).
struct KreinFrequency {
    double beta = 0.0;  ///< > 0
    int sign = +1;      ///< +1 or -1
    double omega = 0.0; ///< sign * beta
    int multiplicity = 1;
};

/// Computes Krein-signed frequencies for every pure imaginary eigenvalue
/// whose blocks are all of size 1. The restriction of H to the invariant
/// subspace of +-i*beta has even inertia (p, q); this yields p/2
/// frequencies +beta and q/2 frequencies -beta. Sorted by descending omega.
/// Throws ClassificationError if the restriction is degenerate at
/// tolerance or has odd inertia.
std::vector<KreinFrequency> krein_frequencies(const HamiltonianField& field,
                                              const SpectrumReport& report,
                                              const ToleranceConfig& tol);

struct DichotomyWitness {
    double beta = 0.0;
    int block_size = 0;
};

/// The two branches of the dichotomy: either the Jacobi curve has no
/// conjugate times at all or their number grows without bound.
struct DichotomyVerdict {
    enum class Kind { NoConjugateTimes, InfinitelyMany };
    Kind kind = Kind::NoConjugateTimes;
    /// One entry per odd block at a pure imaginary eigenvalue with
    /// positive frequency; non-empty exactly when kind == InfinitelyMany.
    std::vector<DichotomyWitness> witnesses;
};

DichotomyVerdict predict_dichotomy(const SpectrumReport& report);

/// Lower bounds on conjugate-time counts from the signed frequencies.
/// With k_reduced = 0 the first conjugate time is at most 3*n*pi/sum_omega
/// and (N + 3n - 1)*pi/sum_omega <= T guarantees N conjugate times in
/// (0, T]. With k_reduced = k > 0 the constants become (4n - 3k).
struct ConjugateTimeBound {
    double sum_omega = 0.0;
    int n = 0;
    int k_reduced = 0;
    double first_time_bound = 0.0;

    /// Largest N guaranteed in (0, T]; never negative.
    int count_lower_bound(double T) const;
};

/// Requires sum of omegas > 0 (throws ConsistencyError otherwise).
ConjugateTimeBound conjugate_time_bounds(const std::vector<KreinFrequency>& freqs,
                                         int n, int k_reduced);

/// Orthonormal basis of the real invariant subspace E_lambda of M
/// (generalized eigenvectors of lambda and conj(lambda) combined).
Mat real_invariant_subspace(const Mat& M, const ComplexEigenvalue& lambda,
                            const ToleranceConfig& tol);

/// Frame of Gamma_plus: the direct sum of the invariant subspaces of
/// eigenvalues with positive real part, plus (when 0 is an eigenvalue
/// with dim E_0 = 2m) an m-dimensional isotropic vecH-invariant subspace
/// of E_0 grown from the deep images of the nilpotent restriction.
/// Isotropy and invariance are verified before returning; throws
/// ConstructionError with the residuals on failure.
IsotropicFrame build_gamma_plus(const HamiltonianField& field, const SpectrumReport& report,
                                const ToleranceConfig& tol);

/// For +-i*beta carrying a single conjugate pair of Jordan blocks of order
/// q: an invariant isotropic frame of dimension 2*floor(q/2) inside
/// E_{i beta} (Lagrangian in E when q is even), built as the image of
/// (vecH^2 + beta^2)^ceil(q/2) restricted to E. Verified before return.
IsotropicFrame invariant_isotropic_subspace(const HamiltonianField& field, double beta,
                                            const ToleranceConfig& tol);

enum class BlockParity { Even, Odd };

/// Normal-form field whose vecH has exactly a conjugate pair of Jordan
/// blocks at +-i*beta: order 2k on a 4k-dimensional space for Even
/// (requires k >= 1), order 2k+1 on a (4k+2)-dimensional space for Odd
/// (k >= 0). These fixtures need not be admissible LQ problems.
HamiltonianField build_imaginary_jordan_fixture(BlockParity parity, int k, double beta,
                                                int sign);

/// Residuals ||E_a' Omega E_b|| for all eigenvalue pairs with
/// a + b != 0 and conj(a) + b != 0 (those must vanish).
struct OmegaOrthogonalityReport {
    struct Entry {
        ComplexEigenvalue a, b;
        double residual = 0.0;
    };
    std::vector<Entry> entries;
    double max_residual = 0.0;
};

OmegaOrthogonalityReport omega_orthogonality_check(const HamiltonianField& field,
                                                   const SpectrumReport& report,
                                                   const ToleranceConfig& tol);

} // namespace lq
