#include "qab/noise.hpp"

#include <doctest.h>

#include <cmath>

using namespace qab;

TEST_SUITE("noise") {

TEST_CASE("poisson_draw validates the mean and handles zero") {
    SplitMix64 rng(5);
    CHECK_THROWS_AS(poisson_draw(-1.0, rng), std::invalid_argument);
    for (int i = 0; i < 100; ++i) CHECK(poisson_draw(0.0, rng) == 0);
}

TEST_CASE("small-mean draws have Poisson moments") {
    SplitMix64 rng(17);
    const int n = 200000;
    const double mean = 3.0;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double k = static_cast<double>(poisson_draw(mean, rng));
        sum += k;
        sumsq += k * k;
    }
    const double m = sum / n;
    const double var = (sumsq - n * m * m) / (n - 1);
    CHECK(std::fabs(m - mean) < 0.05);
    CHECK(var / m > 0.95);
    CHECK(var / m < 1.05);
}

TEST_CASE("large-mean draws have Poisson moments") {
    SplitMix64 rng(23);
    const int n = 100000;
    const double mean = 50.0;
    double sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double k = static_cast<double>(poisson_draw(mean, rng));
        sum += k;
        sumsq += k * k;
    }
    const double m = sum / n;
    const double var = (sumsq - n * m * m) / (n - 1);
    CHECK(std::fabs(m - mean) < 0.25);
    CHECK(var / m > 0.95);
    CHECK(var / m < 1.05);
}

TEST_CASE("sampling is reproducible from the seed") {
    const Image mean = Image::constant(8, 42.0);
    const Image a = sample_poisson(mean, 7);
    const Image b = sample_poisson(mean, 7);
    const Image c = sample_poisson(mean, 8);
    CHECK((a.vec() - b.vec()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.vec() - c.vec()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("measured snr closed form") {
    const Image clean = Image::constant(8, 1.0);
    CHECK(measured_snr_db(clean, clean) == kInfiniteDecibels);

    const Image off = Image::constant(8, 1.1);
    CHECK(measured_snr_db(clean, off) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK_THROWS_AS(measured_snr_db(clean, Image::constant(9, 1.0)),
                    std::invalid_argument);
}

TEST_CASE("expected snr of a constant mean field is 10 log10(mean)") {
    CHECK(expected_snr_db(Eigen::VectorXd::Constant(64, 100.0)) ==
          doctest::Approx(20.0).epsilon(1e-12));
    CHECK(expected_snr_db(Eigen::VectorXd::Constant(64, 10.0)) ==
          doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS_AS(expected_snr_db(Eigen::VectorXd::Zero(4)), std::invalid_argument);
}

TEST_CASE("peak calibration solves the constant-image case in closed form") {
    const Image clean = Image::constant(32, 0.5);
    const BlurOperator blur(gaussian_psf(4, 3.0), 32);

    // Blur preserves constants, so the target fixes peak * 0.5 directly.
    const NoiseModel at20 = calibrate_peak(clean, blur, 20.0, 3);
    CHECK(at20.peak * 0.5 == doctest::Approx(100.0).epsilon(1e-9));
    const NoiseModel at10 = calibrate_peak(clean, blur, 10.0, 3);
    CHECK(at10.peak * 0.5 == doctest::Approx(10.0).epsilon(1e-9));

    const NoiseModel at15 = calibrate_peak(clean, blur, 15.0, 3);
    CHECK(at10.peak < at15.peak);
    CHECK(at15.peak < at20.peak);
}

TEST_CASE("calibration makes the expected snr hit the target exactly") {
    SplitMix64 rng(31);
    Eigen::VectorXd v(256);
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = 0.1 + 0.9 * rng.next_double();
    const Image clean(16, v);
    const BlurOperator blur(gaussian_psf(3, 1.5), 16);

    const NoiseModel model = calibrate_peak(clean, blur, 15.0, 4);
    const Eigen::VectorXd mean = blur.apply(model.peak * clean.vec()).cwiseMax(0.0);
    CHECK(expected_snr_db(mean) == doctest::Approx(15.0).epsilon(1e-9));
}

TEST_CASE("degrade produces consistent count-scale fields") {
    const Image clean = Image::constant(32, 0.5);
    const BlurOperator blur(gaussian_psf(4, 3.0), 32);
    const NoiseModel model = calibrate_peak(clean, blur, 20.0, 11);

    const Degraded deg = degrade_image(clean, blur, model, 2);
    CHECK((deg.scaled_clean.vec() - model.peak * clean.vec()).cwiseAbs().maxCoeff() ==
          0.0);
    CHECK((deg.blurred.vec() - blur.apply(model.peak * clean.vec())).cwiseAbs()
              .maxCoeff() < 1e-9);
    CHECK(deg.observed.min_value() >= 0.0);
    for (Eigen::Index i = 0; i < deg.observed.vec().size(); ++i)
        CHECK(deg.observed.vec()[i] == std::floor(deg.observed.vec()[i]));

    // Constant field of ~100 counts over 1024 pixels: the realization snr
    // concentrates tightly around the target.
    CHECK(std::fabs(deg.snr_db - 20.0) < 0.5);

    const Degraded again = degrade_image(clean, blur, model, 2);
    CHECK((again.observed.vec() - deg.observed.vec()).cwiseAbs().maxCoeff() == 0.0);
    const Degraded other = degrade_image(clean, blur, model, 3);
    CHECK((other.observed.vec() - deg.observed.vec()).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("degrade rejects a nonpositive peak") {
    const Image clean = Image::constant(8, 0.5);
    const BlurOperator blur(gaussian_psf(3, 1.0), 8);
    NoiseModel model;
    model.peak = 0.0;
    CHECK_THROWS_AS(degrade_image(clean, blur, model, 0), std::invalid_argument);
}

} // TEST_SUITE
