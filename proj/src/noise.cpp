#include "qab/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace qab {

namespace {

// Sequential CDF search; fine for small means.
std::int64_t poisson_inversion(double mean, SplitMix64& rng) {
    const double u = rng.next_double();
    double p = std::exp(-mean);
    double cdf = p;
    std::int64_t k = 0;
    while (u > cdf && k < 2000) {
        ++k;
        p *= mean / static_cast<double>(k);
        cdf += p;
    }
    return k;
}

// Hormann's transformed rejection (PTRS); valid for mean >= 10.
std::int64_t poisson_ptrs(double mean, SplitMix64& rng) {
    const double log_mean = std::log(mean);
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);

    for (;;) {
        const double u = rng.next_double() - 0.5;
        const double v = rng.next_double();
        const double us = 0.5 - std::fabs(u);
        const double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<std::int64_t>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
            k * log_mean - mean - std::lgamma(k + 1.0))
            return static_cast<std::int64_t>(k);
    }
}

} // namespace

std::int64_t poisson_draw(double mean, SplitMix64& rng) {
    if (!(mean >= 0.0)) throw std::invalid_argument("poisson_draw: negative mean");
    if (mean == 0.0) return 0;
    return mean < 10.0 ? poisson_inversion(mean, rng) : poisson_ptrs(mean, rng);
}

Eigen::VectorXd sample_poisson(const Eigen::VectorXd& mean, SplitMix64& rng) {
    Eigen::VectorXd out(mean.size());
    for (Eigen::Index i = 0; i < mean.size(); ++i)
        out[i] = static_cast<double>(poisson_draw(mean[i], rng));
    return out;
}

Image sample_poisson(const Image& mean, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return Image(mean.side(), sample_poisson(mean.vec(), rng));
}

double measured_snr_db(const Image& clean_blurred, const Image& observed) {
    if (clean_blurred.side() != observed.side())
        throw std::invalid_argument("measured_snr_db: dimension mismatch");
    const double signal = clean_blurred.vec().squaredNorm();
    const double noise = (observed.vec() - clean_blurred.vec()).squaredNorm();
    if (noise == 0.0) return kInfiniteDecibels;
    return 10.0 * std::log10(signal / noise);
}

double expected_snr_db(const Eigen::VectorXd& mean) {
    const double signal = mean.squaredNorm();
    const double total = mean.sum();
    if (!(signal > 0.0) || !(total > 0.0))
        throw std::invalid_argument("expected_snr_db: degenerate mean field");
    return 10.0 * std::log10(signal / total);
}

NoiseModel calibrate_peak(const Image& clean, const BlurOperator& blur,
                          double target_snr_db, std::uint64_t seed) {
    if (!std::isfinite(target_snr_db))
        throw std::invalid_argument("calibrate_peak: non-finite target");
    if (clean.min_value() < 0.0)
        throw std::invalid_argument("calibrate_peak: negative intensities");

    const Eigen::VectorXd blurred = blur.apply(clean.vec()).cwiseMax(0.0);
    const double signal = blurred.squaredNorm();
    const double total = blurred.sum();
    if (!(signal > 0.0) || !(total > 0.0))
        throw std::invalid_argument("calibrate_peak: image has no intensity");

    // SNR(p) = 10 log10(p * signal / total), exactly linear in log10 p.
    NoiseModel model;
    model.target_snr_db = target_snr_db;
    model.seed = seed;
    model.peak = std::pow(10.0, target_snr_db / 10.0) * total / signal;

    const Degraded check = degrade_image(clean, blur, model, 0);
    if (std::fabs(check.snr_db - target_snr_db) > 6.0)
        throw std::runtime_error("calibrate_peak: sampled verification failed");
    return model;
}

Degraded degrade_image(const Image& clean, const BlurOperator& blur,
                       const NoiseModel& model, std::uint64_t realization) {
    if (!(model.peak > 0.0))
        throw std::invalid_argument("degrade_image: nonpositive peak");

    Degraded out{Image(clean.side(), model.peak * clean.vec()),
                 Image(clean.side(),
                       blur.apply(model.peak * clean.vec()).cwiseMax(0.0)),
                 Image{}, 0.0};
    SplitMix64 rng(derive_seed(model.seed, realization));
    out.observed = Image(clean.side(), sample_poisson(out.blurred.vec(), rng));
    out.snr_db = measured_snr_db(out.blurred, out.observed);
    return out;
}

} // namespace qab
