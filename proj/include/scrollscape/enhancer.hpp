#pragma once

// Tile enhancement slot. The real system runs a video super-resolution prior
// here; this library ships identity and bilinear upscaling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <string>
#include <vector>

#include "scrollscape/error.hpp"
#include "scrollscape/image.hpp"

namespace scrollscape {

class TileEnhancer {
public:
    virtual ~TileEnhancer() = default;
    virtual std::string name() const = 0;
    /// Integer spatial factor k; outputs must be k times the input extent.
    virtual std::size_t scale() const = 0;
    virtual Image enhance(const Image& tile) const = 0;
};

class IdentityEnhancer : public TileEnhancer {
public:
    std::string name() const override { return "identity"; }
    std::size_t scale() const override { return 1; }
    Image enhance(const Image& tile) const override { return tile; }
};

/// Bilinear x k. Output pixel centres map to (i + 0.5) / k - 0.5 in input
/// coordinates; past the outermost input centres the nearest pair is
/// extrapolated linearly, so affine images are reproduced exactly.
class BilinearUpscaler : public TileEnhancer {
public:
    explicit BilinearUpscaler(std::size_t k) : k_(k) {
        if (k_ == 0) throw ConfigError("must be >= 1", "enhancer.scale");
    }

    std::string name() const override { return "upscale"; }
    std::size_t scale() const override { return k_; }

    Image enhance(const Image& tile) const override {
        const std::size_t H = tile.height(), W = tile.width(), C = tile.channels();
        Image out(H * k_, W * k_, C);
        const auto ys = taps(H);
        const auto xs = taps(W);
        for (std::size_t y = 0; y < out.height(); ++y) {
            const Tap& ty = ys[y];
            for (std::size_t x = 0; x < out.width(); ++x) {
                const Tap& tx = xs[x];
                for (std::size_t c = 0; c < C; ++c) {
                    const double top = (1.0 - tx.f) * tile(ty.i0, tx.i0, c) + tx.f * tile(ty.i0, tx.i1, c);
                    const double bot = (1.0 - tx.f) * tile(ty.i1, tx.i0, c) + tx.f * tile(ty.i1, tx.i1, c);
                    out(y, x, c) = (1.0 - ty.f) * top + ty.f * bot;
                }
            }
        }
        return out;
    }

private:
    struct Tap {
        std::size_t i0 = 0, i1 = 0;
        double f = 0.0;  // may leave [0, 1] at the borders
    };

    std::vector<Tap> taps(std::size_t n) const {
        std::vector<Tap> out(n * k_);
        for (std::size_t o = 0; o < out.size(); ++o) {
            if (n == 1) continue;
            const double s = (static_cast<double>(o) + 0.5) / static_cast<double>(k_) - 0.5;
            auto i0 = static_cast<long>(std::floor(s));
            i0 = std::clamp(i0, 0L, static_cast<long>(n) - 2);
            out[o] = {static_cast<std::size_t>(i0), static_cast<std::size_t>(i0 + 1), s - static_cast<double>(i0)};
        }
        return out;
    }

    std::size_t k_;
};

inline std::unique_ptr<TileEnhancer> make_enhancer(bool upscale, std::size_t k) {
    if (!upscale) return std::make_unique<IdentityEnhancer>();
    return std::make_unique<BilinearUpscaler>(k);
}

/// Runs `enhancer` and checks the output contract.
inline Image enhance_checked(const TileEnhancer& enhancer, const Image& tile, std::size_t block = 0) {
    Image out = enhancer.enhance(tile);
    const std::size_t k = enhancer.scale();
    if (out.height() != tile.height() * k || out.width() != tile.width() * k || out.channels() != tile.channels()) {
        throw EnhancerError("block " + std::to_string(block) + ": enhancer '" + enhancer.name() + "' returned " +
                            std::to_string(out.height()) + "x" + std::to_string(out.width()) + "x" +
                            std::to_string(out.channels()) + ", expected " + std::to_string(tile.height() * k) + "x" +
                            std::to_string(tile.width() * k) + "x" + std::to_string(tile.channels()));
    }
    return out;
}

/// Enhances every tile of a block.
inline std::vector<Image> upscale_tiles(const std::vector<Image>& tiles, const TileEnhancer& enhancer,
                                        std::size_t block = 0) {
    std::vector<Image> out;
    out.reserve(tiles.size());
    for (const Image& t : tiles) out.push_back(enhance_checked(enhancer, t, block));
    return out;
}

}  // namespace scrollscape
