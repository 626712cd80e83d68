#pragma once

#include "qab/basis.hpp"
#include "qab/image.hpp"

#include <Eigen/Dense>
#include <vector>

namespace qab {

/// Piecewise-linear coefficient weights tau_i over the 1-based ascending
/// energy rank: 1 up to s, then decaying by 1/rho per step, then 0.
struct ThresholdProfile {
    int s = 0;
    int rho = 1;

    /// s = ceil(T/2), rho = ceil(T/4): full weight inside half the selected
    /// band, decayed to zero before its end.
    static ThresholdProfile defaults_for(int sparsity);
};

double threshold_weight(const ThresholdProfile& profile, int index);

/// Output of the modified OMP pass: selection order and the least-squares
/// coefficients over the selected atoms.
struct SparseCoefficients {
    std::vector<int> indices; // basis indices in selection order, all < sparsity
    Eigen::VectorXd values;   // aligned with indices
    int sparsity = 0;
};

/// Greedy pursuit restricted to the first `sparsity` basis vectors. Runs
/// exactly `sparsity` iterations; ties in the correlation argmax break to the
/// lowest index; the per-iteration least-squares refit goes through an
/// incrementally extended QR, with linearly dependent atoms pinned to zero.
/// A basis certified orthonormal skips the redundant factorization arithmetic
/// (correlations are invariant, the refit is the projection) but keeps the
/// selection semantics.
SparseCoefficients modified_omp(const Eigen::VectorXd& v, const QuantumBasis& basis,
                                int sparsity);

/// x_hat = sum_i tau_i alpha_i psi_i over the OMP coefficients; tau indexed
/// by energy rank, not selection order.
Eigen::VectorXd denoise(const Eigen::VectorXd& v, const QuantumBasis& basis,
                        int sparsity, const ThresholdProfile& profile);
Image denoise(const Image& v, const QuantumBasis& basis, int sparsity,
              const ThresholdProfile& profile);

/// Reference mode without the pursuit: every stored projection <v, psi_i>
/// weighted by the same tau. Intended for a complete basis.
Eigen::VectorXd denoise_full_projection(const Eigen::VectorXd& v,
                                        const QuantumBasis& basis,
                                        const ThresholdProfile& profile);

} // namespace qab
