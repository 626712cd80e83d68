#include "qab/image.hpp"

#include <cmath>
#include <stdexcept>

namespace qab {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;
constexpr double kSsimRange = 1.0;

void check_same_size(const Image& a, const Image& b, const char* op) {
    if (a.side() != b.side())
        throw std::invalid_argument(std::string(op) + ": dimension mismatch");
    if (a.empty())
        throw std::invalid_argument(std::string(op) + ": empty image");
}

double mean_squared_error(const Image& a, const Image& b) {
    return (a.vec() - b.vec()).squaredNorm() / static_cast<double>(a.size());
}

Eigen::VectorXd gaussian_window(int size, double sigma) {
    Eigen::VectorXd w(size);
    const double c = (size - 1) / 2.0;
    for (int i = 0; i < size; ++i)
        w[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    return w / w.sum();
}

// Valid-mode separable filtering: rows then columns with the same 1D window.
Eigen::MatrixXd filter_valid(const Eigen::MatrixXd& field, const Eigen::VectorXd& w) {
    const int n = static_cast<int>(field.rows());
    const int k = static_cast<int>(w.size());
    const int m = n - k + 1;
    Eigen::MatrixXd rows(n, m);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < m; ++c)
            rows(r, c) = w.dot(field.row(r).segment(c, k).transpose());
    Eigen::MatrixXd out(m, m);
    for (int c = 0; c < m; ++c)
        for (int r = 0; r < m; ++r)
            out(r, c) = w.dot(rows.col(c).segment(r, k));
    return out;
}

Eigen::MatrixXd as_grid(const Image& img) {
    // Row-major vector -> matrix with (row, col) addressing.
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(img.vec().data(), img.side(),
                                                            img.side());
}

} // namespace

double psnr(const Image& reference, const Image& test) {
    check_same_size(reference, test, "psnr");
    const double mse = mean_squared_error(reference, test);
    if (mse == 0.0)
        return kInfiniteDecibels;
    const double peak = reference.max_value();
    return std::min(10.0 * std::log10(peak * peak / mse), kInfiniteDecibels);
}

double rmse(const Image& reference, const Image& test) {
    check_same_size(reference, test, "rmse");
    return std::sqrt(mean_squared_error(reference, test));
}

double ssim(const Image& reference, const Image& test) {
    check_same_size(reference, test, "ssim");
    const int n = reference.side();
    if (n < kSsimWindow)
        throw std::invalid_argument("ssim: image smaller than 11x11 window");

    const Eigen::VectorXd w = gaussian_window(kSsimWindow, kSsimSigma);
    const Eigen::MatrixXd x = as_grid(reference);
    const Eigen::MatrixXd y = as_grid(test);

    const Eigen::MatrixXd mu_x = filter_valid(x, w);
    const Eigen::MatrixXd mu_y = filter_valid(y, w);
    const Eigen::MatrixXd xx = filter_valid(x.cwiseProduct(x), w);
    const Eigen::MatrixXd yy = filter_valid(y.cwiseProduct(y), w);
    const Eigen::MatrixXd xy = filter_valid(x.cwiseProduct(y), w);

    const double c1 = (kSsimK1 * kSsimRange) * (kSsimK1 * kSsimRange);
    const double c2 = (kSsimK2 * kSsimRange) * (kSsimK2 * kSsimRange);

    double acc = 0.0;
    const int m = static_cast<int>(mu_x.rows());
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            const double mx = mu_x(r, c), my = mu_y(r, c);
            const double vx = xx(r, c) - mx * mx;
            const double vy = yy(r, c) - my * my;
            const double cov = xy(r, c) - mx * my;
            acc += ((2.0 * mx * my + c1) * (2.0 * cov + c2)) /
                   ((mx * mx + my * my + c1) * (vx + vy + c2));
        }
    }
    return acc / (static_cast<double>(m) * m);
}

MetricReport compare(const Image& reference, const Image& test) {
    return MetricReport{psnr(reference, test), ssim(reference, test), rmse(reference, test)};
}

} // namespace qab
