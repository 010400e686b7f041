#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "scrollscape/error.hpp"

namespace scrollscape {

/// Integer cell coordinate on a canvas, (row, column).
struct Cell {
    long h = 0;
    long w = 0;

    friend constexpr Cell operator+(Cell a, Cell b) { return {a.h + b.h, a.w + b.w}; }
    friend constexpr Cell operator-(Cell a, Cell b) { return {a.h - b.h, a.w - b.w}; }
    friend constexpr bool operator==(Cell, Cell) = default;
};

/// Height x width extent in cells.
struct Extent {
    std::size_t height = 0;
    std::size_t width = 0;

    constexpr std::size_t cells() const { return height * width; }
    friend constexpr bool operator==(Extent, Extent) = default;
};

/// Dense height x width x channels pixel array, row-major with interleaved
/// channels.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, std::size_t channels, double fill = 0.0)
        : height_(height), width_(width), channels_(channels),
          data_(height * width * channels, fill) {}

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t channels() const { return channels_; }
    Extent extent() const { return {height_, width_}; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t h, std::size_t w, std::size_t c = 0) {
        return data_[(h * width_ + w) * channels_ + c];
    }
    double operator()(std::size_t h, std::size_t w, std::size_t c = 0) const {
        return data_[(h * width_ + w) * channels_ + c];
    }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    std::size_t bytes() const { return data_.size() * sizeof(double); }

    /// Copy of the [top, top+h) x [left, left+w) window.
    Image crop(std::size_t top, std::size_t left, std::size_t h, std::size_t w) const {
        if (top + h > height_ || left + w > width_) {
            throw DimensionError("crop window exceeds image bounds");
        }
        Image out(h, w, channels_);
        for (std::size_t r = 0; r < h; ++r) {
            for (std::size_t x = 0; x < w; ++x) {
                for (std::size_t c = 0; c < channels_; ++c) {
                    out(r, x, c) = (*this)(top + r, left + x, c);
                }
            }
        }
        return out;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::size_t channels_ = 0;
    std::vector<double> data_;
};

}  // namespace scrollscape
