#pragma once

#include "qab/blur.hpp"
#include "qab/image.hpp"
#include "qab/rng.hpp"

#include <cstdint>

namespace qab {

/// Poisson-noise description for one experiment: observations are drawn as
/// y ~ P(H(peak * clean)), where peak is the intensity scale that brings the
/// expected a-posteriori SNR to the target.
struct NoiseModel {
    double target_snr_db = 0.0;
    std::uint64_t seed = 0;
    double peak = 1.0; // multiplicative intensity scale on the clean image
};

std::int64_t poisson_draw(double mean, SplitMix64& rng);

Eigen::VectorXd sample_poisson(const Eigen::VectorXd& mean, SplitMix64& rng);
Image sample_poisson(const Image& mean, std::uint64_t seed);

/// 10 log10(||Hx||^2 / ||y - Hx||^2); identical inputs give the infinite
/// sentinel.
double measured_snr_db(const Image& clean_blurred, const Image& observed);

/// Expected a-posteriori SNR of Poisson observations with the given mean
/// field, from E||y - m||^2 = sum(m): 10 log10(||m||^2 / sum(m)).
double expected_snr_db(const Eigen::VectorXd& mean);

/// Solve 10 log10(peak * ||H clean||^2 / sum(H clean)) = target for peak,
/// then verify with one sampled draw (gross mismatch means a pathological
/// input and is surfaced as an error).
NoiseModel calibrate_peak(const Image& clean, const BlurOperator& blur,
                          double target_snr_db, std::uint64_t seed);

/// One degraded realization of a clean image under a calibrated model.
struct Degraded {
    Image scaled_clean; // peak * clean — ground truth in count scale
    Image blurred;      // H(peak * clean)
    Image observed;     // Poisson draw
    double snr_db = 0.0; // measured a posteriori on this realization
};

/// Realization index selects an independent stream via seed derivation, so
/// parallel realizations never share generator state.
Degraded degrade_image(const Image& clean, const BlurOperator& blur,
                       const NoiseModel& model, std::uint64_t realization);

} // namespace qab
