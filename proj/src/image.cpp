#include "qab/image.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qab {

int pixel_index(int row, int col, int side) {
    if (side <= 0)
        throw std::out_of_range("pixel_index: nonpositive side " + std::to_string(side));
    if (row < 0 || row >= side || col < 0 || col >= side)
        throw std::out_of_range("pixel_index: (" + std::to_string(row) + ", " +
                                std::to_string(col) + ") outside " + std::to_string(side) +
                                "x" + std::to_string(side) + " grid");
    return row * side + col;
}

Image::Image(int side, Eigen::VectorXd data) : side_(side), data_(std::move(data)) {
    if (side_ <= 0)
        throw std::invalid_argument("Image: side must be positive");
    if (data_.size() != static_cast<Eigen::Index>(side_) * side_)
        throw std::invalid_argument("Image: data length " + std::to_string(data_.size()) +
                                    " does not match side " + std::to_string(side_));
    if (!data_.allFinite())
        throw std::invalid_argument("Image: non-finite intensity");
}

Image Image::zero(int side) {
    return Image(side, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(side) * side));
}

Image Image::constant(int side, double value) {
    return Image(side, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(side) * side, value));
}

} // namespace qab
