#include "qab/denoiser.hpp"

#include <cmath>
#include <stdexcept>

namespace qab {

namespace {

void validate(const ThresholdProfile& profile) {
    if (profile.s < 0) throw std::invalid_argument("ThresholdProfile: s must be >= 0");
    if (profile.rho <= 0) throw std::invalid_argument("ThresholdProfile: rho must be > 0");
}

} // namespace

ThresholdProfile ThresholdProfile::defaults_for(int sparsity) {
    if (sparsity < 1)
        throw std::invalid_argument("ThresholdProfile: sparsity must be >= 1");
    return ThresholdProfile{(sparsity + 1) / 2, (sparsity + 3) / 4};
}

double threshold_weight(const ThresholdProfile& profile, int index) {
    validate(profile);
    if (index < 1) throw std::invalid_argument("threshold_weight: index is 1-based");
    if (index <= profile.s) return 1.0;
    const double w = 1.0 - static_cast<double>(index - profile.s) / profile.rho;
    return w > 0.0 ? w : 0.0;
}

SparseCoefficients modified_omp(const Eigen::VectorXd& v, const QuantumBasis& basis,
                                int sparsity) {
    const int dim = basis.dim();
    if (sparsity < 1 || sparsity > dim)
        throw std::invalid_argument("modified_omp: sparsity outside [1, dim]");
    if (sparsity > basis.count())
        throw std::invalid_argument("modified_omp: basis holds fewer vectors than sparsity");
    if (v.size() != dim)
        throw std::invalid_argument("modified_omp: vector/basis size mismatch");

    const auto atoms = basis.vectors.leftCols(sparsity);

    SparseCoefficients out;
    out.sparsity = sparsity;
    out.indices.reserve(sparsity);

    if (basis.orthonormal) {
        // Orthonormal candidates: each residual update is orthogonal to every
        // remaining atom, so correlations never change after the initial scan
        // and the least-squares refit returns the projections themselves. The
        // pursuit reduces to ranked selection over one set of correlations.
        const Eigen::VectorXd corr = atoms.transpose() * v;
        std::vector<char> taken(sparsity, 0);
        out.values = Eigen::VectorXd::Zero(sparsity);
        for (int step = 0; step < sparsity; ++step) {
            int best = -1;
            double best_abs = -1.0;
            for (int j = 0; j < sparsity; ++j) {
                if (taken[j]) continue;
                const double a = std::fabs(corr[j]);
                if (a > best_abs) { // strict: ties keep the lowest index
                    best_abs = a;
                    best = j;
                }
            }
            taken[best] = 1;
            out.indices.push_back(best);
            out.values[step] = corr[best];
        }
        return out;
    }

    Eigen::VectorXd r = v;
    Eigen::MatrixXd q(dim, sparsity);      // orthonormal columns, rank many
    Eigen::MatrixXd rfac = Eigen::MatrixXd::Zero(sparsity, sparsity);
    Eigen::VectorXd beta(sparsity);        // q^T v per independent column
    std::vector<int> column_of(sparsity, -1); // selection slot -> QR column
    std::vector<char> taken(sparsity, 0);
    int rank = 0;

    for (int step = 0; step < sparsity; ++step) {
        const Eigen::VectorXd corr = atoms.transpose() * r;
        int best = -1;
        double best_abs = -1.0;
        for (int j = 0; j < sparsity; ++j) {
            if (taken[j]) continue;
            const double a = std::fabs(corr[j]);
            if (a > best_abs) { // strict: ties keep the lowest index
                best_abs = a;
                best = j;
            }
        }
        taken[best] = 1;
        out.indices.push_back(best);

        // Extend the QR factorization by the chosen atom.
        Eigen::VectorXd w = atoms.col(best);
        Eigen::VectorXd proj(rank);
        for (int i = 0; i < rank; ++i) {
            proj[i] = q.col(i).dot(w);
            w -= proj[i] * q.col(i);
        }
        const double norm = w.norm();
        if (norm > 1e-12 * std::max(1.0, atoms.col(best).norm())) {
            rfac.block(0, rank, rank, 1) = proj;
            rfac(rank, rank) = norm;
            q.col(rank) = w / norm;
            beta[rank] = q.col(rank).dot(r); // equals q^T v: r is v minus prior span
            r -= beta[rank] * q.col(rank);
            column_of[step] = rank;
            ++rank;
        }
        // Dependent atom: adds nothing to the span, coefficient stays zero.
    }

    // Back-substitute R alpha = beta over the independent columns.
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(rank);
    for (int i = rank - 1; i >= 0; --i) {
        double s = beta[i];
        for (int j = i + 1; j < rank; ++j) s -= rfac(i, j) * alpha[j];
        alpha[i] = s / rfac(i, i);
    }

    out.values = Eigen::VectorXd::Zero(sparsity);
    for (int step = 0; step < sparsity; ++step)
        if (column_of[step] >= 0) out.values[step] = alpha[column_of[step]];
    return out;
}

Eigen::VectorXd denoise(const Eigen::VectorXd& v, const QuantumBasis& basis,
                        int sparsity, const ThresholdProfile& profile) {
    validate(profile);
    const SparseCoefficients coeffs = modified_omp(v, basis, sparsity);

    Eigen::VectorXd weighted = Eigen::VectorXd::Zero(sparsity);
    for (std::size_t k = 0; k < coeffs.indices.size(); ++k) {
        const int idx = coeffs.indices[k];
        weighted[idx] = threshold_weight(profile, idx + 1) * coeffs.values[k];
    }
    return basis.vectors.leftCols(sparsity) * weighted;
}

Image denoise(const Image& v, const QuantumBasis& basis, int sparsity,
              const ThresholdProfile& profile) {
    return Image(v.side(), denoise(v.vec(), basis, sparsity, profile));
}

Eigen::VectorXd denoise_full_projection(const Eigen::VectorXd& v,
                                        const QuantumBasis& basis,
                                        const ThresholdProfile& profile) {
    validate(profile);
    if (v.size() != basis.dim())
        throw std::invalid_argument("denoise_full_projection: size mismatch");
    if (basis.count() == 0)
        throw std::invalid_argument("denoise_full_projection: empty basis");

    Eigen::VectorXd alpha = basis.vectors.transpose() * v;
    for (int i = 0; i < alpha.size(); ++i)
        alpha[i] *= threshold_weight(profile, i + 1);
    return basis.vectors * alpha;
}

} // namespace qab
