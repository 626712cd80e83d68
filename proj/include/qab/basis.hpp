#pragma once

#include "qab/image.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <optional>
#include <string>

namespace qab {

struct HamiltonianParams {
    double planck_factor = 4.0; // kinetic coupling, the lumped hbar^2/2m
    double sigma_qab = 1.0;     // guide-smoothing std-dev in pixels, 0 = none
};

/// Eigenpairs of the discrete Hamiltonian in ascending energy order. May hold
/// only the leading count() pairs when built below an energy cutoff; the
/// stored vectors are orthonormal either way.
struct QuantumBasis {
    Eigen::VectorXd energies;
    Eigen::MatrixXd vectors; // one unit column per energy, same order
    // Certified by the eigensolver and cache paths only; hand-assembled
    // dictionaries leave it false and take the general pursuit path.
    bool orthonormal = false;

    int dim() const { return static_cast<int>(vectors.rows()); }
    int count() const { return static_cast<int>(vectors.cols()); }
    bool complete() const { return count() == dim(); }
};

/// Gaussian low-pass used only to pick the basis, never on the data path.
/// Truncated at radius ceil(4 sigma) and renormalized near borders, so
/// constants pass through unchanged.
Image smooth_guide(const Image& image, double sigma_qab);

/// Affine map onto [0,1]; a constant input maps to all zeros.
Eigen::VectorXd normalize_potential(const Eigen::VectorXd& values);

/// M[i,i] = potential[i] + 4 p, M[i,j] = -p for horizontal neighbors within
/// a row and vertical neighbors i = j +- n; zero padding outside the grid.
Eigen::SparseMatrix<double> assemble_hamiltonian(const Image& potential,
                                                 const HamiltonianParams& params);

/// Full symmetric eigendecomposition, ascending order, first significant
/// component of each vector made positive. The input is consumed.
QuantumBasis eigendecompose(Eigen::MatrixXd matrix);

/// Only the eigenpairs with energy strictly below the cutoff.
QuantumBasis eigendecompose_below(Eigen::MatrixXd matrix, double energy_cutoff);

/// T = #{ i : E_i < cutoff }.
int count_below_energy(const QuantumBasis& basis, double energy_cutoff);

/// smooth -> normalize to [0,1] -> assemble -> eigendecompose, with a
/// Gershgorin bound check on the resulting spectrum.
QuantumBasis build_basis(const Image& guide, const HamiltonianParams& params);
QuantumBasis build_basis_below(const Image& guide, const HamiltonianParams& params,
                               double energy_cutoff);

/// Cache key covering the guide pixels, parameters, and cutoff.
std::uint64_t basis_cache_key(const Image& guide, const HamiltonianParams& params,
                              double energy_cutoff);

bool save_basis(const std::string& path, const QuantumBasis& basis,
                std::uint64_t key);

/// Bit-exact reload; nullopt when the file is absent, malformed, or keyed to
/// different inputs.
std::optional<QuantumBasis> load_basis(const std::string& path, std::uint64_t key);

} // namespace qab
