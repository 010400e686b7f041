#pragma once

// Tile sources: a model-free procedural source keyed by global coordinates,
// and a flow-matching sampler whose attention sees global scan coordinates.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "scrollscape/config.hpp"
#include "scrollscape/error.hpp"
#include "scrollscape/flow_matching.hpp"
#include "scrollscape/formats.hpp"
#include "scrollscape/image.hpp"
#include "scrollscape/scan_trajectory.hpp"
#include "scrollscape/scanpe.hpp"

namespace scrollscape {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t v) { return splitmix64(seed ^ splitmix64(v)); }

template <typename... Ts>
std::uint64_t hash_of(std::uint64_t seed, Ts... vs) {
    ((seed = hash_combine(seed, static_cast<std::uint64_t>(vs))), ...);
    return seed;
}

/// One window as seen by a source: 1-based step, footprint in base cells.
struct WindowRequest {
    std::size_t t = 1;
    Footprint footprint;
    std::size_t frames = 1;
};

class TileSource {
public:
    virtual ~TileSource() = default;
    virtual std::string name() const = 0;
    virtual std::size_t channels() const = 0;
    /// Candidate frames for one window, each with the footprint's extent.
    virtual std::vector<Image> frames(const WindowRequest& req) const = 0;
};

/// Deterministic image defined on the whole base canvas.
class ProceduralPattern {
public:
    ProceduralPattern(Pattern kind, Extent canvas, std::size_t channels, std::uint64_t seed)
        : kind_(kind), canvas_(canvas), channels_(channels), seed_(seed) {}

    std::size_t channels() const { return channels_; }

    double operator()(long h, long w, std::size_t c) const {
        if (kind_ == Pattern::gradient) {
            const double span = static_cast<double>(canvas_.width) + 0.25 * static_cast<double>(canvas_.height);
            const double u = (static_cast<double>(w) + 0.25 * static_cast<double>(h)) / span;
            return 0.1 + 0.7 * u + 0.1 * static_cast<double>(c) / static_cast<double>(channels_);
        }
        return 0.65 * value_noise(h, w, c, 32, 0) + 0.35 * value_noise(h, w, c, 8, 1);
    }

    Image crop(const Footprint& f) const {
        Image img(f.extent.height, f.extent.width, channels_);
        for (std::size_t h = 0; h < f.extent.height; ++h) {
            for (std::size_t w = 0; w < f.extent.width; ++w) {
                for (std::size_t c = 0; c < channels_; ++c) {
                    img(h, w, c) = (*this)(f.origin.h + static_cast<long>(h), f.origin.w + static_cast<long>(w), c);
                }
            }
        }
        return img;
    }

private:
    double lattice(long iy, long ix, std::size_t c, int octave) const {
        const std::uint64_t h = hash_of(seed_, iy, ix, c, octave);
        return static_cast<double>(h >> 11) * 0x1.0p-53;
    }

    double value_noise(long h, long w, std::size_t c, long cell, int octave) const {
        const double y = (static_cast<double>(h) + 0.5) / static_cast<double>(cell);
        const double x = (static_cast<double>(w) + 0.5) / static_cast<double>(cell);
        const auto iy = static_cast<long>(std::floor(y));
        const auto ix = static_cast<long>(std::floor(x));
        auto smooth = [](double f) { return f * f * (3.0 - 2.0 * f); };
        const double fy = smooth(y - static_cast<double>(iy));
        const double fx = smooth(x - static_cast<double>(ix));
        const double a = lattice(iy, ix, c, octave), b = lattice(iy, ix + 1, c, octave);
        const double d = lattice(iy + 1, ix, c, octave), e = lattice(iy + 1, ix + 1, c, octave);
        return (1 - fy) * ((1 - fx) * a + fx * b) + fy * ((1 - fx) * d + fx * e);
    }

    Pattern kind_;
    Extent canvas_;
    std::size_t channels_;
    std::uint64_t seed_;
};

/// Crops the global pattern per window. Optional per-frame noise, and one
/// flickered frame per window (brightness shift) when there are at least
/// three frames to outvote it.
class ProceduralSource : public TileSource {
public:
    ProceduralSource(const ProceduralPattern& pattern, double frame_noise, double flicker, std::uint64_t seed)
        : pattern_(pattern), noise_(frame_noise), flicker_(flicker), seed_(seed) {}

    explicit ProceduralSource(const PipelineConfig& cfg)
        : ProceduralSource(ProceduralPattern(cfg.source.pattern, cfg.base_extent(), cfg.source.channels, cfg.io.seed),
                           cfg.source.frame_noise, cfg.source.flicker, cfg.io.seed) {}

    std::string name() const override { return "procedural"; }
    std::size_t channels() const override { return pattern_.channels(); }

    std::vector<Image> frames(const WindowRequest& req) const override {
        const Image clean = pattern_.crop(req.footprint);
        std::vector<Image> out(req.frames, clean);
        if (noise_ > 0.0) {
            for (std::size_t i = 0; i < out.size(); ++i) {
                std::mt19937_64 rng(hash_of(seed_, 0x6e6f6973ULL, req.t, i));
                std::normal_distribution<double> normal(0.0, noise_);
                for (double& v : out[i].data()) v += normal(rng);
            }
        }
        if (flicker_ != 0.0 && req.frames >= 3) {
            const std::uint64_t h = hash_of(seed_, 0x666c6b72ULL, req.t);
            const std::size_t bad = h % req.frames;
            const double shift = ((h >> 32) & 1u) ? flicker_ : -flicker_;
            for (double& v : out[bad].data()) v += shift;
        }
        return out;
    }

private:
    ProceduralPattern pattern_;
    double noise_;
    double flicker_;
    std::uint64_t seed_;
};

// ---------------------------------------------------------------------------
// Sampler

/// Conditioning vector for a window: its centre on the canvas as angles.
inline Condition anchor_condition(const Footprint& f, Extent canvas) {
    const double ch = (static_cast<double>(f.origin.h) + 0.5 * static_cast<double>(f.extent.height)) /
                      static_cast<double>(canvas.height);
    const double cw = (static_cast<double>(f.origin.w) + 0.5 * static_cast<double>(f.extent.width)) /
                      static_cast<double>(canvas.width);
    const double two_pi = 2.0 * std::numbers::pi;
    return {{std::sin(two_pi * cw), std::cos(two_pi * cw), std::sin(two_pi * ch), std::cos(two_pi * ch)}};
}

inline Matrix image_to_tokens(const Image& img) {
    Matrix m(img.extent().cells(), img.channels());
    auto src = img.data();
    auto dst = m.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = 2.0 * src[i] - 1.0;
    return m;
}

inline Image tokens_to_image(const Matrix& m, Extent extent) {
    if (m.rows() != extent.cells()) throw DimensionError("tokens_to_image: token count mismatch");
    Image img(extent.height, extent.width, m.cols());
    auto src = m.data();
    auto dst = img.data();
    for (std::size_t i = 0; i < src.size(); ++i) dst[i] = 0.5 * (src[i] + 1.0);
    return img;
}

inline NetShape sampler_shape(const PipelineConfig& cfg) {
    NetShape s;
    s.channels = cfg.source.channels;
    s.model_dim = cfg.rope.head_dim;
    s.hidden = 32;
    s.cond_dim = 4;
    s.time_features = 4;
    s.rope = cfg.rope;
    return s;
}

inline void save_checkpoint(const VectorFieldNet& net, const std::filesystem::path& path) {
    const NetShape& s = net.shape();
    TensorArchive ar;
    ar.add("net.shape", {{5},
                         {static_cast<float>(s.channels), static_cast<float>(s.model_dim), static_cast<float>(s.hidden),
                          static_cast<float>(s.cond_dim), static_cast<float>(s.time_features)}});
    ar.add("net.rope", {{4},
                        {static_cast<float>(s.rope.base), static_cast<float>(s.rope.axis_split[0]),
                         static_cast<float>(s.rope.axis_split[1]), static_cast<float>(s.rope.axis_split[2])}});
    for (const ParamSlot& slot : net.slots()) {
        Tensor t{{static_cast<std::uint32_t>(slot.rows), static_cast<std::uint32_t>(slot.cols)}, {}};
        t.values.reserve(slot.size());
        for (std::size_t i = 0; i < slot.size(); ++i) t.values.push_back(static_cast<float>(net.parameters()[slot.offset + i]));
        ar.add(slot.name, std::move(t));
    }
    write_sstf(path, ar);
}

inline VectorFieldNet load_checkpoint(const std::filesystem::path& path) {
    const TensorArchive ar = read_sstf(path);
    if (!ar.contains("net.shape") || !ar.contains("net.rope")) {
        throw ParseError(ParseErrorKind::malformed, path.string() + ": not a checkpoint (missing net.shape/net.rope)");
    }
    const auto& sh = ar.get("net.shape").values;
    const auto& rp = ar.get("net.rope").values;
    if (sh.size() != 5 || rp.size() != 4) throw ParseError(ParseErrorKind::malformed, path.string() + ": bad header arrays");
    NetShape s;
    s.channels = static_cast<std::size_t>(sh[0]);
    s.model_dim = static_cast<std::size_t>(sh[1]);
    s.hidden = static_cast<std::size_t>(sh[2]);
    s.cond_dim = static_cast<std::size_t>(sh[3]);
    s.time_features = static_cast<std::size_t>(sh[4]);
    s.rope.base = rp[0];
    s.rope.head_dim = s.model_dim;
    s.rope.axis_split = {static_cast<std::size_t>(rp[1]), static_cast<std::size_t>(rp[2]), static_cast<std::size_t>(rp[3])};
    VectorFieldNet net(s);
    for (const ParamSlot& slot : net.slots()) {
        if (!ar.contains(slot.name)) throw ParseError(ParseErrorKind::malformed, path.string() + ": missing " + slot.name);
        const Tensor& t = ar.get(slot.name);
        if (t.values.size() != slot.size()) {
            throw ParseError(ParseErrorKind::element_count, path.string() + ": " + slot.name + " has wrong size");
        }
        for (std::size_t i = 0; i < slot.size(); ++i) net.parameters()[slot.offset + i] = t.values[i];
    }
    return net;
}

/// Trains a sampler on windows cropped from the procedural texture along the
/// configured trajectory. Returns the per-iteration losses.
inline std::vector<double> train_sampler(VectorFieldNet& net, const PipelineConfig& cfg) {
    const Extent base = cfg.base_extent();
    const Trajectory traj = plan(cfg.scan);
    const ProceduralPattern pattern(cfg.source.pattern, base, cfg.source.channels, cfg.io.seed);
    const Extent frame = cfg.scan.frame_extent();
    const TokenGrid grid{frame.height, frame.width};

    TrainConfig tc;
    tc.learning_rate = cfg.source.learning_rate;
    tc.batch_size = 4;
    tc.iterations = cfg.source.train_iterations;
    tc.seed = cfg.io.seed;
    tc.validate();

    std::mt19937_64 rng(hash_of(cfg.io.seed, 0x747261696eULL));
    std::uniform_int_distribution<std::size_t> pick(1, traj.size());
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    OptimizerState state;
    std::vector<double> losses;
    losses.reserve(tc.iterations);
    for (std::size_t it = 0; it < tc.iterations; ++it) {
        const std::size_t t = pick(rng);
        const Footprint f = traj.footprint(t);
        const auto coords = grid_coords(grid, static_cast<long>(t), f.origin);
        const Matrix z0 = image_to_tokens(pattern.crop(f));
        const Condition cond = anchor_condition(f, base);
        Batch batch;
        for (std::size_t b = 0; b < tc.batch_size; ++b) {
            BatchItem item;
            item.sample.z0 = z0;
            item.sample.z1 = gaussian_matrix(z0.rows(), z0.cols(), rng);
            item.sample.tau = uniform(rng);
            item.condition = cond;
            batch.push_back(std::move(item));
        }
        losses.push_back(train_step(net, batch, coords, tc, state));
    }
    return losses;
}

/// Frames drawn by Euler sampling; frame i of window t starts from noise
/// seeded by (seed, t, i). Token coordinates are the window's global cells.
class SamplerSource : public TileSource {
public:
    SamplerSource(VectorFieldNet net, const PipelineConfig& cfg)
        : net_(std::move(net)), canvas_(cfg.base_extent()), steps_(cfg.source.sample_steps), seed_(cfg.io.seed) {
        if (net_.shape().channels != cfg.source.channels) {
            throw ConfigError("checkpoint has " + std::to_string(net_.shape().channels) + " channels",
                              "source.channels,source.checkpoint");
        }
    }

    /// Loads `source.checkpoint`, or trains in-process when none is given.
    static SamplerSource from_config(const PipelineConfig& cfg) {
        if (!cfg.source.checkpoint.empty()) return SamplerSource(load_checkpoint(cfg.source.checkpoint), cfg);
        VectorFieldNet net = VectorFieldNet::initialized(sampler_shape(cfg), cfg.io.seed);
        train_sampler(net, cfg);
        return SamplerSource(std::move(net), cfg);
    }

    std::string name() const override { return "sampler"; }
    std::size_t channels() const override { return net_.shape().channels; }
    const VectorFieldNet& net() const { return net_; }

    std::vector<Image> frames(const WindowRequest& req) const override {
        const Extent e = req.footprint.extent;
        const auto coords = grid_coords(TokenGrid{e.height, e.width}, static_cast<long>(req.t), req.footprint.origin);
        const Condition cond = anchor_condition(req.footprint, canvas_);
        std::vector<Image> out;
        out.reserve(req.frames);
        for (std::size_t i = 0; i < req.frames; ++i) {
            std::mt19937_64 rng(hash_of(seed_, 0x73616d70ULL, req.t, i));
            Matrix z = sample(net_, gaussian_matrix(e.cells(), channels(), rng), cond, steps_, coords);
            out.push_back(tokens_to_image(z, e));
        }
        return out;
    }

private:
    VectorFieldNet net_;
    Extent canvas_;
    std::size_t steps_;
    std::uint64_t seed_;
};

}  // namespace scrollscape
