#include "qab/denoiser.hpp"
#include "qab/rng.hpp"

#include <doctest.h>

#include <Eigen/QR>
#include <cmath>

using namespace qab;

namespace {

Eigen::VectorXd random_vec(Eigen::Index n, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = 2.0 * rng.next_double() - 1.0;
    return v;
}

// Orthonormal test basis from the QR of a random matrix.
QuantumBasis random_orthonormal(int dim, std::uint64_t seed) {
    SplitMix64 rng(seed);
    Eigen::MatrixXd m(dim, dim);
    for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i) m(i, j) = 2.0 * rng.next_double() - 1.0;
    QuantumBasis basis;
    basis.vectors = Eigen::HouseholderQR<Eigen::MatrixXd>(m).householderQ();
    basis.energies = Eigen::VectorXd::LinSpaced(dim, 0.0, 1.0);
    return basis;
}

Eigen::VectorXd weighted_projection(const Eigen::VectorXd& v, const QuantumBasis& basis,
                                    int sparsity, const ThresholdProfile& profile) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(v.size());
    for (int i = 0; i < sparsity; ++i)
        out += threshold_weight(profile, i + 1) * basis.vectors.col(i).dot(v) *
               basis.vectors.col(i);
    return out;
}

} // namespace

TEST_SUITE("denoiser") {

TEST_CASE("threshold weights follow the piecewise-linear ramp") {
    const ThresholdProfile profile{10, 5};
    CHECK(threshold_weight(profile, 1) == 1.0);
    CHECK(threshold_weight(profile, 7) == 1.0);
    CHECK(threshold_weight(profile, 10) == 1.0);
    CHECK(threshold_weight(profile, 12) == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(threshold_weight(profile, 14) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(threshold_weight(profile, 15) == 0.0);
    CHECK(threshold_weight(profile, 40) == 0.0);
    CHECK_THROWS_AS(threshold_weight(profile, 0), std::invalid_argument);
    CHECK_THROWS_AS(threshold_weight({-1, 5}, 1), std::invalid_argument);
    CHECK_THROWS_AS(threshold_weight({5, 0}, 1), std::invalid_argument);
}

TEST_CASE("default profile covers half the band and decays over a quarter") {
    const ThresholdProfile p10 = ThresholdProfile::defaults_for(10);
    CHECK(p10.s == 5);
    CHECK(p10.rho == 3);
    const ThresholdProfile p1 = ThresholdProfile::defaults_for(1);
    CHECK(p1.s == 1);
    CHECK(p1.rho == 1);
    const ThresholdProfile p7 = ThresholdProfile::defaults_for(7);
    CHECK(p7.s == 4);
    CHECK(p7.rho == 2);
    CHECK_THROWS_AS(ThresholdProfile::defaults_for(0), std::invalid_argument);
}

TEST_CASE("omp over an orthonormal dictionary reduces to weighted projection") {
    SplitMix64 seeds(301);
    for (const int dim : {64, 256}) {
        const QuantumBasis basis = random_orthonormal(dim, seeds.next());
        for (int trial = 0; trial < 10; ++trial) {
            const int sparsity = 1 + static_cast<int>(seeds.next() % dim);
            const ThresholdProfile profile = ThresholdProfile::defaults_for(sparsity);
            const Eigen::VectorXd v = random_vec(dim, seeds.next());
            const Eigen::VectorXd greedy = denoise(v, basis, sparsity, profile);
            const Eigen::VectorXd direct = weighted_projection(v, basis, sparsity, profile);
            CHECK((greedy - direct).cwiseAbs().maxCoeff() < 1e-10);
        }
    }
}

TEST_CASE("a pure basis vector is found first and reweighted alone") {
    const QuantumBasis basis = random_orthonormal(32, 311);
    const Eigen::VectorXd v = 0.8 * basis.vectors.col(3);
    const SparseCoefficients coeffs = modified_omp(v, basis, 5);
    REQUIRE(coeffs.indices.size() == 5);
    CHECK(coeffs.indices[0] == 3);
    CHECK(coeffs.values[0] == doctest::Approx(0.8).epsilon(1e-12));
    for (int k = 1; k < 5; ++k)
        CHECK(std::fabs(coeffs.values[k]) < 1e-12);

    const ThresholdProfile profile{2, 2}; // tau(4) = 1 - 2/2 = 0
    CHECK(denoise(v, basis, 5, profile).cwiseAbs().maxCoeff() < 1e-12);
    const ThresholdProfile keep{4, 1};    // tau(4) = 1
    CHECK((denoise(v, basis, 5, keep) - v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("zero input selects the lowest indices with zero coefficients") {
    const QuantumBasis basis = random_orthonormal(16, 321);
    const SparseCoefficients coeffs =
        modified_omp(Eigen::VectorXd::Zero(16), basis, 4);
    for (int k = 0; k < 4; ++k) {
        CHECK(coeffs.indices[k] == k); // argmax ties resolve to the lowest index
        CHECK(coeffs.values[k] == 0.0);
    }
}

TEST_CASE("full basis and unit weights reproduce the input") {
    const QuantumBasis basis = random_orthonormal(64, 331);
    const Eigen::VectorXd v = random_vec(64, 332);
    const ThresholdProfile unit{64, 1};
    CHECK((denoise(v, basis, 64, unit) - v).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((denoise_full_projection(v, basis, unit) - v).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("s = 0 zeroes every coefficient") {
    const QuantumBasis basis = random_orthonormal(16, 341);
    const Eigen::VectorXd v = random_vec(16, 342);
    CHECK(denoise(v, basis, 8, {0, 1}).cwiseAbs().maxCoeff() == 0.0);
    CHECK(denoise_full_projection(v, basis, {0, 1}).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("the denoiser never expands the input") {
    SplitMix64 seeds(351);
    const QuantumBasis basis = random_orthonormal(64, seeds.next());
    for (int trial = 0; trial < 20; ++trial) {
        const int sparsity = 1 + static_cast<int>(seeds.next() % 64);
        const Eigen::VectorXd v = random_vec(64, seeds.next());
        const Eigen::VectorXd d =
            denoise(v, basis, sparsity, ThresholdProfile::defaults_for(sparsity));
        CHECK(d.norm() <= v.norm() + 1e-9);
    }
}

TEST_CASE("binary weights make the denoiser an orthogonal projection") {
    const QuantumBasis basis = random_orthonormal(32, 361);
    const Eigen::VectorXd v = random_vec(32, 362);
    const ThresholdProfile binary{12, 1}; // tau in {0,1}
    const Eigen::VectorXd once = denoise(v, basis, 12, binary);
    const Eigen::VectorXd twice = denoise(once, basis, 12, binary);
    CHECK((twice - once).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("the denoiser scales linearly on an orthonormal basis") {
    const QuantumBasis basis = random_orthonormal(32, 371);
    const Eigen::VectorXd v = random_vec(32, 372);
    const ThresholdProfile profile = ThresholdProfile::defaults_for(10);
    const Eigen::VectorXd d = denoise(v, basis, 10, profile);
    CHECK((denoise(Eigen::VectorXd(2.5 * v), basis, 10, profile) - 2.5 * d)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    CHECK((denoise(Eigen::VectorXd(-v), basis, 10, profile) + d)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("duplicate atoms are pinned to zero and the fit stays least-squares") {
    QuantumBasis dict;
    dict.vectors = Eigen::MatrixXd::Zero(4, 3);
    dict.vectors.col(0) << 1, 0, 0, 0;
    dict.vectors.col(1) << 1, 0, 0, 0; // exact duplicate of atom 0
    dict.vectors.col(2) << 0, 1, 0, 0;
    dict.energies = Eigen::VectorXd::LinSpaced(3, 0.0, 1.0);

    Eigen::VectorXd v(4);
    v << 2.0, 3.0, 0.5, 0.0;
    const SparseCoefficients coeffs = modified_omp(v, dict, 3);
    REQUIRE(coeffs.indices.size() == 3);

    // Reconstruction equals the projection onto span{e1, e2} regardless of
    // which copy carried the coefficient.
    Eigen::VectorXd recon = Eigen::VectorXd::Zero(4);
    for (int k = 0; k < 3; ++k)
        recon += coeffs.values[k] * dict.vectors.col(coeffs.indices[k]);
    Eigen::VectorXd expected(4);
    expected << 2.0, 3.0, 0.0, 0.0;
    CHECK((recon - expected).cwiseAbs().maxCoeff() < 1e-12);

    // One of the duplicate slots must be dead.
    int zeros = 0;
    for (int k = 0; k < 3; ++k)
        if (coeffs.indices[k] <= 1 && coeffs.values[k] == 0.0) ++zeros;
    CHECK(zeros == 1);
}

TEST_CASE("argument validation") {
    const QuantumBasis basis = random_orthonormal(16, 381);
    const Eigen::VectorXd v = random_vec(16, 382);
    CHECK_THROWS_AS(modified_omp(v, basis, 0), std::invalid_argument);
    CHECK_THROWS_AS(modified_omp(v, basis, 17), std::invalid_argument);
    CHECK_THROWS_AS(modified_omp(random_vec(8, 383), basis, 4), std::invalid_argument);

    QuantumBasis partial = basis;
    partial.vectors = basis.vectors.leftCols(5);
    partial.energies = basis.energies.head(5);
    CHECK_THROWS_AS(modified_omp(v, partial, 6), std::invalid_argument);
    CHECK_NOTHROW(modified_omp(v, partial, 5));
    CHECK_THROWS_AS(denoise_full_projection(random_vec(8, 384), basis, {4, 1}),
                    std::invalid_argument);
}

} // TEST_SUITE
