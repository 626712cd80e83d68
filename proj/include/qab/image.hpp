#pragma once

#include <Eigen/Dense>
#include <string>

namespace qab {

/// Row-major (lexicographic) flat index of pixel (row, col) on an n-by-n grid.
/// Throws std::out_of_range on invalid coordinates.
int pixel_index(int row, int col, int side);

/// Square grayscale image stored as a length n*n vector in lexicographic
/// (row-major) order. Immutable after construction; all entries finite.
class Image {
public:
    Image() = default;
    Image(int side, Eigen::VectorXd data);

    static Image zero(int side);
    static Image constant(int side, double value);

    int side() const { return side_; }
    Eigen::Index size() const { return data_.size(); }
    bool empty() const { return side_ == 0; }

    double operator[](Eigen::Index i) const { return data_[i]; }
    double at(int row, int col) const { return data_[pixel_index(row, col, side_)]; }

    const Eigen::VectorXd& vec() const { return data_; }

    double min_value() const { return data_.minCoeff(); }
    double max_value() const { return data_.maxCoeff(); }
    double sum() const { return data_.sum(); }

private:
    int side_ = 0;
    Eigen::VectorXd data_;
};

struct MetricReport {
    double psnr = 0.0;
    double ssim = 0.0;
    double rmse = 0.0;
};

/// Sentinel reported instead of +infinity for zero-error comparisons so CSV
/// output stays numeric.
inline constexpr double kInfiniteDecibels = 999.0;

/// Peak signal-to-noise ratio in dB; peak is the maximum of the reference
/// image (restored intensities may exceed the nominal range).
double psnr(const Image& reference, const Image& test);

/// Mean structural similarity over sliding 11x11 Gaussian windows
/// (sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1.0).
double ssim(const Image& reference, const Image& test);

double rmse(const Image& reference, const Image& test);

MetricReport compare(const Image& reference, const Image& test);

enum class ImageFormat {
    pgm_ascii,   // P2
    pgm_binary,  // P5
    csv,         // one image row per line, full decimal precision
};

/// Reads an image. Either PGM magic (P2/P5) is accepted when a pgm format is
/// requested; intensities are divided by the file maxval so images load into
/// [0, 1]. CSV is read verbatim. Non-square inputs are rejected.
Image read_image(const std::string& path, ImageFormat format);

/// Writes an image. PGM quantizes to the given maxval (255 or 65535) and
/// rejects negative intensities; values above 1 clip at maxval. CSV is a
/// lossless round trip.
void write_image(const Image& image, const std::string& path, ImageFormat format,
                 int maxval = 255);

} // namespace qab
