#pragma once

#include "qab/image.hpp"

#include <Eigen/Dense>
#include <memory>

namespace qab {

/// Normalized k-by-k blur kernel. For even k the anchor tap sits at
/// (k/2 - 1, k/2 - 1) with the continuous center at (k - 1)/2, so the kernel
/// stays symmetric about its own center; odd k anchors at the middle tap.
struct Psf {
    Eigen::MatrixXd taps;

    int size() const { return static_cast<int>(taps.rows()); }
    int anchor() const {
        const int k = size();
        return k % 2 == 0 ? k / 2 - 1 : (k - 1) / 2;
    }
};

/// Gaussian kernel, taps proportional to exp(-(di^2 + dj^2) / (2 sigma^2))
/// about the continuous center (k - 1)/2, normalized to unit sum.
Psf gaussian_psf(int k, double sigma);

/// 2D circular convolution with a fixed PSF on an n-by-n grid (the BCCB
/// operator), applied through its precomputed frequency response. Immutable
/// and safe to share across threads.
class BlurOperator {
public:
    BlurOperator(const Psf& psf, int side);

    Image apply(const Image& x) const;
    Image apply_adjoint(const Image& w) const;

    /// Convolution expressed directly on a raw vector (same layout as Image).
    Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
    Eigen::VectorXd apply_adjoint(const Eigen::VectorXd& w) const;

    int side() const { return side_; }

private:
    Eigen::VectorXd transform(const Eigen::VectorXd& x, bool adjoint) const;

    struct Plans;
    int side_ = 0;
    Eigen::VectorXcd otf_; // r2c half-spectrum, n * (n/2 + 1) coefficients
    std::shared_ptr<const Plans> plans_;
};

} // namespace qab
