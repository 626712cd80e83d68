#include "qab/image.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace qab {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

// Reads the next whitespace-separated token, skipping '#' comment lines.
std::string next_header_token(std::istream& in) {
    std::string tok;
    int ch;
    while ((ch = in.get()) != EOF) {
        if (ch == '#') {
            while ((ch = in.get()) != EOF && ch != '\n') {
            }
            continue;
        }
        if (std::isspace(ch))
            continue;
        tok.push_back(static_cast<char>(ch));
        while ((ch = in.get()) != EOF && !std::isspace(ch) && ch != '#')
            tok.push_back(static_cast<char>(ch));
        if (ch == '#')
            in.unget();
        return tok;
    }
    return tok;
}

int parse_int(const std::string& tok, const std::string& path, const char* what) {
    try {
        size_t pos = 0;
        const int v = std::stoi(tok, &pos);
        if (pos != tok.size())
            fail(path, std::string("malformed ") + what + " '" + tok + "'");
        return v;
    } catch (const std::logic_error&) {
        fail(path, std::string("malformed ") + what + " '" + tok + "'");
    }
}

Image read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(path, "cannot open");
    const std::string magic = next_header_token(in);
    if (magic != "P2" && magic != "P5")
        fail(path, "unsupported magic '" + magic + "'");
    const int width = parse_int(next_header_token(in), path, "width");
    const int height = parse_int(next_header_token(in), path, "height");
    const int maxval = parse_int(next_header_token(in), path, "maxval");
    if (width <= 0 || height <= 0)
        fail(path, "nonpositive dimensions");
    if (width != height)
        fail(path, "non-square image (" + std::to_string(width) + "x" +
                       std::to_string(height) + ")");
    if (maxval != 255 && maxval != 65535)
        fail(path, "unsupported maxval " + std::to_string(maxval));

    const Eigen::Index count = static_cast<Eigen::Index>(width) * height;
    Eigen::VectorXd data(count);
    if (magic == "P2") {
        for (Eigen::Index i = 0; i < count; ++i) {
            const std::string tok = next_header_token(in);
            if (tok.empty())
                fail(path, "truncated pixel data");
            const int v = parse_int(tok, path, "pixel");
            if (v < 0 || v > maxval)
                fail(path, "pixel value " + std::to_string(v) + " out of range");
            data[i] = static_cast<double>(v) / maxval;
        }
    } else {
        // Binary data starts after a single whitespace byte following maxval.
        const int bytes = maxval > 255 ? 2 : 1;
        std::vector<unsigned char> raw(static_cast<size_t>(count) * bytes);
        in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
        if (in.gcount() != static_cast<std::streamsize>(raw.size()))
            fail(path, "truncated pixel data");
        for (Eigen::Index i = 0; i < count; ++i) {
            // 16-bit samples are big-endian per the PGM specification.
            const unsigned v = bytes == 1
                                   ? raw[static_cast<size_t>(i)]
                                   : (static_cast<unsigned>(raw[2 * static_cast<size_t>(i)]) << 8) |
                                         raw[2 * static_cast<size_t>(i) + 1];
            if (v > static_cast<unsigned>(maxval))
                fail(path, "pixel value " + std::to_string(v) + " out of range");
            data[i] = static_cast<double>(v) / maxval;
        }
    }
    return Image(width, std::move(data));
}

Image read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        fail(path, "cannot open");
    std::vector<double> values;
    Eigen::Index cols = -1;
    Eigen::Index rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::stringstream ss(line);
        std::string cell;
        Eigen::Index line_cols = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                size_t pos = 0;
                values.push_back(std::stod(cell, &pos));
            } catch (const std::logic_error&) {
                fail(path, "malformed value '" + cell + "'");
            }
            ++line_cols;
        }
        if (cols < 0)
            cols = line_cols;
        else if (cols != line_cols)
            fail(path, "ragged rows");
        ++rows;
    }
    if (rows == 0)
        fail(path, "empty file");
    if (rows != cols)
        fail(path, "non-square image (" + std::to_string(cols) + "x" + std::to_string(rows) + ")");
    return Image(static_cast<int>(rows),
                 Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size())));
}

void write_pgm(const Image& image, const std::string& path, bool binary, int maxval) {
    if (maxval != 255 && maxval != 65535)
        throw std::invalid_argument("write_image: maxval must be 255 or 65535");
    if (image.min_value() < 0.0)
        throw std::invalid_argument("write_image: negative intensity cannot be written as PGM");
    std::ofstream out(path, std::ios::binary);
    if (!out)
        fail(path, "cannot open for writing");
    out << (binary ? "P5" : "P2") << "\n"
        << image.side() << " " << image.side() << "\n"
        << maxval << "\n";
    const Eigen::Index count = image.size();
    for (Eigen::Index i = 0; i < count; ++i) {
        const long q = std::lround(image[i] * maxval);
        const long v = std::min<long>(q, maxval);
        if (binary) {
            if (maxval > 255) {
                const unsigned char hi = static_cast<unsigned char>((v >> 8) & 0xff);
                const unsigned char lo = static_cast<unsigned char>(v & 0xff);
                out.put(static_cast<char>(hi)).put(static_cast<char>(lo));
            } else {
                out.put(static_cast<char>(v));
            }
        } else {
            out << v << ((i + 1) % image.side() == 0 ? '\n' : ' ');
        }
    }
    if (!out)
        fail(path, "write failure");
}

void write_csv(const Image& image, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        fail(path, "cannot open for writing");
    char buf[32];
    const int n = image.side();
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            std::snprintf(buf, sizeof buf, "%.17g", image.at(r, c));
            out << buf << (c + 1 == n ? '\n' : ',');
        }
    }
    if (!out)
        fail(path, "write failure");
}

} // namespace

Image read_image(const std::string& path, ImageFormat format) {
    switch (format) {
    case ImageFormat::pgm_ascii:
    case ImageFormat::pgm_binary:
        return read_pgm(path);
    case ImageFormat::csv:
        return read_csv(path);
    }
    throw std::invalid_argument("read_image: unknown format");
}

void write_image(const Image& image, const std::string& path, ImageFormat format, int maxval) {
    switch (format) {
    case ImageFormat::pgm_ascii:
        write_pgm(image, path, false, maxval);
        return;
    case ImageFormat::pgm_binary:
        write_pgm(image, path, true, maxval);
        return;
    case ImageFormat::csv:
        write_csv(image, path);
        return;
    }
    throw std::invalid_argument("write_image: unknown format");
}

} // namespace qab
