#include "qab/blur.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <stdexcept>
#include <vector>

namespace qab {

namespace {

// FFTW planner state is global; serialize plan creation/destruction.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

Psf gaussian_psf(int k, double sigma) {
    if (k < 1) throw std::invalid_argument("gaussian_psf: size must be positive");
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_psf: sigma must be positive");

    Psf psf;
    psf.taps.resize(k, k);
    const double c = (k - 1) / 2.0;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double di = i - c;
            const double dj = j - c;
            psf.taps(i, j) = std::exp(-(di * di + dj * dj) * inv);
        }
    psf.taps /= psf.taps.sum();
    return psf;
}

struct BlurOperator::Plans {
    fftw_plan forward = nullptr;   // r2c
    fftw_plan backward = nullptr;  // c2r

    ~Plans() {
        std::lock_guard<std::mutex> lock(planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

BlurOperator::BlurOperator(const Psf& psf, int side) : side_(side) {
    const int k = psf.size();
    if (side < 1) throw std::invalid_argument("BlurOperator: side must be positive");
    if (k > side) throw std::invalid_argument("BlurOperator: psf larger than image");

    const int n = side;
    const int spectrum = n * (n / 2 + 1);

    // Embed the kernel circularly so that tap (a, a) lands at the origin;
    // the convolution then leaves a centered impulse in place.
    const int a = psf.anchor();
    std::vector<double> kernel(static_cast<std::size_t>(n) * n, 0.0);
    for (int t = 0; t < k; ++t)
        for (int u = 0; u < k; ++u) {
            const int r = ((t - a) % n + n) % n;
            const int s = ((u - a) % n + n) % n;
            kernel[static_cast<std::size_t>(r) * n + s] = psf.taps(t, u);
        }

    auto plans = std::make_shared<Plans>();
    std::vector<double> real(static_cast<std::size_t>(n) * n, 0.0);
    std::vector<fftw_complex> freq(static_cast<std::size_t>(spectrum));
    {
        std::lock_guard<std::mutex> lock(planner_mutex());
        plans->forward = fftw_plan_dft_r2c_2d(n, n, real.data(), freq.data(),
                                              FFTW_ESTIMATE | FFTW_UNALIGNED);
        plans->backward = fftw_plan_dft_c2r_2d(n, n, freq.data(), real.data(),
                                               FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    if (!plans->forward || !plans->backward)
        throw std::runtime_error("BlurOperator: fftw plan creation failed");
    plans_ = plans;

    fftw_execute_dft_r2c(plans_->forward, kernel.data(), freq.data());
    otf_.resize(spectrum);
    for (int i = 0; i < spectrum; ++i)
        otf_[i] = std::complex<double>(freq[i][0], freq[i][1]);
}

Eigen::VectorXd BlurOperator::transform(const Eigen::VectorXd& x, bool adjoint) const {
    const int n = side_;
    if (x.size() != static_cast<Eigen::Index>(n) * n)
        throw std::invalid_argument("BlurOperator: size mismatch");

    const int spectrum = n * (n / 2 + 1);
    std::vector<double> real(x.data(), x.data() + x.size());
    std::vector<fftw_complex> freq(static_cast<std::size_t>(spectrum));

    fftw_execute_dft_r2c(plans_->forward, real.data(), freq.data());
    const double scale = 1.0 / (static_cast<double>(n) * n);
    for (int i = 0; i < spectrum; ++i) {
        std::complex<double> v(freq[i][0], freq[i][1]);
        v *= adjoint ? std::conj(otf_[i]) : otf_[i];
        v *= scale;
        freq[i][0] = v.real();
        freq[i][1] = v.imag();
    }
    fftw_execute_dft_c2r(plans_->backward, freq.data(), real.data());

    return Eigen::Map<const Eigen::VectorXd>(real.data(), x.size());
}

Eigen::VectorXd BlurOperator::apply(const Eigen::VectorXd& x) const {
    return transform(x, false);
}

Eigen::VectorXd BlurOperator::apply_adjoint(const Eigen::VectorXd& w) const {
    return transform(w, true);
}

Image BlurOperator::apply(const Image& x) const {
    return Image(side_, transform(x.vec(), false));
}

Image BlurOperator::apply_adjoint(const Image& w) const {
    return Image(side_, transform(w.vec(), true));
}

} // namespace qab
