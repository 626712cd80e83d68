#include "qab/basis.hpp"

#include <lapacke.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <vector>

namespace qab {

namespace {

void validate(const HamiltonianParams& params) {
    if (!(params.planck_factor > 0.0))
        throw std::invalid_argument("HamiltonianParams: planck_factor must be positive");
    if (!(params.sigma_qab >= 0.0))
        throw std::invalid_argument("HamiltonianParams: sigma_qab must be nonnegative");
}

// One 1D pass with a truncated Gaussian, renormalized where the window runs
// off the grid. stride selects rows vs columns.
void gaussian_pass(const Eigen::VectorXd& in, Eigen::VectorXd& out, int n,
                   int outer_stride, int inner_stride, double sigma) {
    const int radius = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> w(2 * radius + 1);
    for (int d = -radius; d <= radius; ++d)
        w[d + radius] = std::exp(-(static_cast<double>(d) * d) / (2.0 * sigma * sigma));

    for (int outer = 0; outer < n; ++outer) {
        const int base = outer * outer_stride;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0, norm = 0.0;
            const int lo = std::max(-radius, -i);
            const int hi = std::min(radius, n - 1 - i);
            for (int d = lo; d <= hi; ++d) {
                acc += w[d + radius] * in[base + (i + d) * inner_stride];
                norm += w[d + radius];
            }
            out[base + i * inner_stride] = acc / norm;
        }
    }
}

void fix_signs(Eigen::MatrixXd& vectors) {
    for (Eigen::Index j = 0; j < vectors.cols(); ++j) {
        for (Eigen::Index i = 0; i < vectors.rows(); ++i) {
            if (std::fabs(vectors(i, j)) > 1e-12) {
                if (vectors(i, j) < 0.0) vectors.col(j) = -vectors.col(j);
                break;
            }
        }
    }
}

QuantumBasis decompose(Eigen::MatrixXd matrix, char range, double upper) {
    if (matrix.rows() != matrix.cols())
        throw std::invalid_argument("eigendecompose: matrix not square");
    if (matrix.size() == 0)
        throw std::invalid_argument("eigendecompose: empty matrix");
    const double asym = (matrix - matrix.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, matrix.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("eigendecompose: matrix not symmetric");

    const lapack_int n = static_cast<lapack_int>(matrix.rows());
    Eigen::VectorXd w(n);
    Eigen::MatrixXd z(n, n);
    std::vector<lapack_int> isuppz(2 * static_cast<std::size_t>(n));
    lapack_int found = 0;
    const lapack_int info = LAPACKE_dsyevr(
        LAPACK_COL_MAJOR, 'V', range, 'L', n, matrix.data(), n,
        -std::numeric_limits<double>::max(), upper, 0, 0, 0.0, &found,
        w.data(), z.data(), n, isuppz.data());
    if (info != 0)
        throw std::runtime_error("eigendecompose: dsyevr failed, info=" +
                                 std::to_string(info));

    QuantumBasis basis;
    basis.energies = w.head(found);
    basis.vectors = z.leftCols(found);
    basis.orthonormal = true;
    fix_signs(basis.vectors);
    return basis;
}

void check_spectrum_bounds(const QuantumBasis& basis, const Image& potential,
                           const HamiltonianParams& params) {
    if (basis.count() == 0) return;
    const double lo = potential.min_value();
    const double hi = potential.max_value() + 8.0 * params.planck_factor;
    const double tol = 1e-8 * std::max(1.0, std::fabs(hi));
    if (basis.energies.minCoeff() < lo - tol || basis.energies.maxCoeff() > hi + tol)
        throw std::runtime_error("build_basis: spectrum escapes Gershgorin bounds");
}

constexpr std::uint32_t kCacheVersion = 1;
constexpr char kCacheMagic[8] = {'Q', 'A', 'B', 'B', 'A', 'S', 'I', 'S'};

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t bytes) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < bytes; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

} // namespace

Image smooth_guide(const Image& image, double sigma_qab) {
    if (!(sigma_qab >= 0.0))
        throw std::invalid_argument("smooth_guide: sigma must be nonnegative");
    if (sigma_qab == 0.0) return image;

    const int n = image.side();
    Eigen::VectorXd rows(image.size()), full(image.size());
    gaussian_pass(image.vec(), rows, n, n, 1, sigma_qab); // along rows
    gaussian_pass(rows, full, n, 1, n, sigma_qab);        // along columns
    return Image(n, std::move(full));
}

Eigen::VectorXd normalize_potential(const Eigen::VectorXd& values) {
    if (values.size() == 0)
        throw std::invalid_argument("normalize_potential: empty input");
    const double lo = values.minCoeff();
    const double hi = values.maxCoeff();
    if (hi == lo) return Eigen::VectorXd::Zero(values.size());
    return (values.array() - lo) / (hi - lo);
}

Eigen::SparseMatrix<double> assemble_hamiltonian(const Image& potential,
                                                 const HamiltonianParams& params) {
    validate(params);
    const int n = potential.side();
    const int dim = n * n;
    const double p = params.planck_factor;

    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(5) * dim);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            const int i = pixel_index(r, c, n);
            entries.emplace_back(i, i, potential[i] + 4.0 * p);
            if (c + 1 < n) { // right neighbor, same row only
                entries.emplace_back(i, i + 1, -p);
                entries.emplace_back(i + 1, i, -p);
            }
            if (r + 1 < n) {
                entries.emplace_back(i, i + n, -p);
                entries.emplace_back(i + n, i, -p);
            }
        }

    Eigen::SparseMatrix<double> m(dim, dim);
    m.setFromTriplets(entries.begin(), entries.end());
    return m;
}

QuantumBasis eigendecompose(Eigen::MatrixXd matrix) {
    return decompose(std::move(matrix), 'A', 0.0);
}

QuantumBasis eigendecompose_below(Eigen::MatrixXd matrix, double energy_cutoff) {
    // dsyevr's interval is (vl, vu]; trim to the strict inequality.
    QuantumBasis basis = decompose(std::move(matrix), 'V', energy_cutoff);
    int keep = basis.count();
    while (keep > 0 && basis.energies[keep - 1] >= energy_cutoff) --keep;
    if (keep != basis.count()) {
        basis.energies.conservativeResize(keep);
        basis.vectors.conservativeResize(Eigen::NoChange, keep);
    }
    return basis;
}

int count_below_energy(const QuantumBasis& basis, double energy_cutoff) {
    int t = 0;
    while (t < basis.count() && basis.energies[t] < energy_cutoff) ++t;
    return t;
}

QuantumBasis build_basis(const Image& guide, const HamiltonianParams& params) {
    validate(params);
    const Image potential(guide.side(),
                          normalize_potential(smooth_guide(guide, params.sigma_qab).vec()));
    QuantumBasis basis =
        eigendecompose(Eigen::MatrixXd(assemble_hamiltonian(potential, params)));
    check_spectrum_bounds(basis, potential, params);
    return basis;
}

QuantumBasis build_basis_below(const Image& guide, const HamiltonianParams& params,
                               double energy_cutoff) {
    validate(params);
    const Image potential(guide.side(),
                          normalize_potential(smooth_guide(guide, params.sigma_qab).vec()));
    QuantumBasis basis = eigendecompose_below(
        Eigen::MatrixXd(assemble_hamiltonian(potential, params)), energy_cutoff);
    check_spectrum_bounds(basis, potential, params);
    return basis;
}

std::uint64_t basis_cache_key(const Image& guide, const HamiltonianParams& params,
                              double energy_cutoff) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    const std::int64_t side = guide.side();
    h = fnv1a(h, &side, sizeof side);
    h = fnv1a(h, guide.vec().data(), sizeof(double) * guide.size());
    h = fnv1a(h, &params.planck_factor, sizeof(double));
    h = fnv1a(h, &params.sigma_qab, sizeof(double));
    h = fnv1a(h, &energy_cutoff, sizeof(double));
    return h;
}

bool save_basis(const std::string& path, const QuantumBasis& basis,
                std::uint64_t key) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) return false;
    const std::uint32_t version = kCacheVersion;
    const std::int64_t dim = basis.dim();
    const std::int64_t count = basis.count();
    const std::uint8_t ortho = basis.orthonormal ? 1 : 0;
    out.write(kCacheMagic, sizeof kCacheMagic);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    out.write(reinterpret_cast<const char*>(&key), sizeof key);
    out.write(reinterpret_cast<const char*>(&dim), sizeof dim);
    out.write(reinterpret_cast<const char*>(&count), sizeof count);
    out.write(reinterpret_cast<const char*>(&ortho), sizeof ortho);
    out.write(reinterpret_cast<const char*>(basis.energies.data()),
              static_cast<std::streamsize>(sizeof(double)) * count);
    out.write(reinterpret_cast<const char*>(basis.vectors.data()),
              static_cast<std::streamsize>(sizeof(double)) * dim * count);
    return static_cast<bool>(out);
}

std::optional<QuantumBasis> load_basis(const std::string& path, std::uint64_t key) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;

    char magic[sizeof kCacheMagic];
    std::uint32_t version = 0;
    std::uint64_t stored_key = 0;
    std::int64_t dim = 0, count = 0;
    std::uint8_t ortho = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&version), sizeof version);
    in.read(reinterpret_cast<char*>(&stored_key), sizeof stored_key);
    in.read(reinterpret_cast<char*>(&dim), sizeof dim);
    in.read(reinterpret_cast<char*>(&count), sizeof count);
    in.read(reinterpret_cast<char*>(&ortho), sizeof ortho);
    if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0 ||
        version != kCacheVersion || stored_key != key || dim <= 0 || count < 0 ||
        count > dim || ortho > 1)
        return std::nullopt;

    QuantumBasis basis;
    basis.orthonormal = ortho == 1;
    basis.energies.resize(count);
    basis.vectors.resize(dim, count);
    in.read(reinterpret_cast<char*>(basis.energies.data()),
            static_cast<std::streamsize>(sizeof(double)) * count);
    in.read(reinterpret_cast<char*>(basis.vectors.data()),
            static_cast<std::streamsize>(sizeof(double)) * dim * count);
    if (!in) return std::nullopt;
    return basis;
}

} // namespace qab
