#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace bidpo {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct InvalidRange : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ShapeMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct VocabularyError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Raised when an iterative procedure produces a non-finite value.
struct NumericDivergence : NumericError {
    NumericDivergence(const std::string& what, long step_index)
        : NumericError(what + " (step " + std::to_string(step_index) + ")"), step(step_index) {}
    long step;
};

struct FormatError : std::runtime_error {
    enum class Kind { version_mismatch, checksum_failure, malformed_record, io };
    FormatError(Kind k, const std::string& what, long line_number = 0)
        : std::runtime_error(line_number > 0 ? what + " at line " + std::to_string(line_number) : what),
          kind(k),
          line(line_number) {}
    Kind kind;
    long line;
};

// ---------------------------------------------------------------------------
// Images
// ---------------------------------------------------------------------------

struct ImageShape {
    int grid = 16;
    int channels = 3;

    [[nodiscard]] int cells() const { return grid * grid; }
    [[nodiscard]] int size() const { return grid * grid * channels; }
    bool operator==(const ImageShape&) const = default;
};

/// G x G x C grid, row-major cells with interleaved channels, values in [-1, 1].
struct Image {
    ImageShape shape{};
    std::vector<double> data;

    Image() = default;
    explicit Image(ImageShape s, double fill = 0.0)
        : shape(s), data(static_cast<std::size_t>(s.size()), fill) {}

    [[nodiscard]] std::size_t index(int row, int col, int ch) const {
        return static_cast<std::size_t>((row * shape.grid + col) * shape.channels + ch);
    }
    double& at(int row, int col, int ch) { return data[index(row, col, ch)]; }
    [[nodiscard]] double at(int row, int col, int ch) const { return data[index(row, col, ch)]; }

    [[nodiscard]] bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const Image&) const = default;
};

inline void require_same_shape(const Image& a, const Image& b, const char* where) {
    if (!(a.shape == b.shape) || a.data.size() != b.data.size())
        throw ShapeMismatch(std::string(where) + ": image shapes differ");
}

// ---------------------------------------------------------------------------
// Randomness
// ---------------------------------------------------------------------------

using Rng = std::mt19937_64;

/// splitmix64 finalizer; derives independent stream seeds from (seed, stream).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline Image gaussian_image(ImageShape shape, Rng& rng) {
    Image img(shape);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (double& v : img.data) v = normal(rng);
    return img;
}

inline Image gaussian_image(ImageShape shape, std::uint64_t seed) {
    Rng rng(seed);
    return gaussian_image(shape, rng);
}

inline int uniform_int(Rng& rng, int lo, int hi_inclusive) {
    return std::uniform_int_distribution<int>(lo, hi_inclusive)(rng);
}

}  // namespace bidpo
