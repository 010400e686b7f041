#pragma once

// Patch-based evaluation of extreme-aspect panoramas: square patch
// partitioning, intra style loss between neighbouring patches and global
// structural diversity between distant ones.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "scrollscape/error.hpp"
#include "scrollscape/formats.hpp"
#include "scrollscape/image.hpp"
#include "scrollscape/matrix.hpp"

namespace scrollscape {

/// Square, non-overlapping patches along the long axis of a panorama.
struct PatchGrid {
    std::vector<Image> patches;
    std::vector<Cell> origins;  // top-left of each patch in the panorama
    std::size_t side = 0;
    bool horizontal = true;     // long axis is the width

    std::size_t size() const { return patches.size(); }
};

/// Patch side = short side; floor(long / short) patches; the remainder along
/// the long axis is cropped, never resampled.
inline PatchGrid partition_patches(const Image& pano) {
    if (pano.height() == 0 || pano.width() == 0 || pano.channels() == 0) {
        throw UsageError("partition_patches: empty image");
    }
    PatchGrid grid;
    grid.horizontal = pano.width() >= pano.height();
    grid.side = std::min(pano.height(), pano.width());
    const std::size_t count = std::max(pano.height(), pano.width()) / grid.side;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t off = i * grid.side;
        const Cell origin = grid.horizontal ? Cell{0, static_cast<long>(off)} : Cell{static_cast<long>(off), 0};
        grid.patches.push_back(pano.crop(static_cast<std::size_t>(origin.h), static_cast<std::size_t>(origin.w),
                                         grid.side, grid.side));
        grid.origins.push_back(origin);
    }
    return grid;
}

/// Inverse of partition_patches on the cropped region.
inline Image reassemble(const PatchGrid& grid) {
    if (grid.patches.empty()) return {};
    const std::size_t n = grid.size();
    const std::size_t C = grid.patches.front().channels();
    Image out(grid.horizontal ? grid.side : grid.side * n, grid.horizontal ? grid.side * n : grid.side, C);
    for (std::size_t i = 0; i < n; ++i) {
        const auto oh = static_cast<std::size_t>(grid.origins[i].h);
        const auto ow = static_cast<std::size_t>(grid.origins[i].w);
        for (std::size_t h = 0; h < grid.side; ++h) {
            for (std::size_t w = 0; w < grid.side; ++w) {
                for (std::size_t c = 0; c < C; ++c) out(oh + h, ow + w, c) = grid.patches[i](h, w, c);
            }
        }
    }
    return out;
}

/// G = F F^T / (C H W) for the C x (H W) flattening of a (C, H, W) map.
inline Matrix gram_matrix(const FeatureMap& f) {
    if (f.shape.size() != 3) throw DimensionError("gram_matrix needs a (C, H, W) feature map");
    const std::size_t C = f.shape[0];
    const std::size_t HW = std::size_t{f.shape[1]} * f.shape[2];
    if (C == 0 || HW == 0) throw DimensionError("gram_matrix: empty feature map");
    const double norm = 1.0 / static_cast<double>(C * HW);
    Matrix g(C, C);
    for (std::size_t a = 0; a < C; ++a) {
        for (std::size_t b = a; b < C; ++b) {
            double s = 0.0;
            for (std::size_t k = 0; k < HW; ++k) {
                s += static_cast<double>(f.values[a * HW + k]) * static_cast<double>(f.values[b * HW + k]);
            }
            g(a, b) = g(b, a) = s * norm;
        }
    }
    return g;
}

/// Cosine similarity clamped to [-1, 1]. Two zero vectors count as identical;
/// one zero vector is orthogonal to everything else.
inline double cosine_similarity(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw DimensionError("cosine: feature lengths differ");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0.0 && nb == 0.0) return 1.0;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

inline double euclidean_distance(const std::vector<float>& a, const std::vector<float>& b) {
    if (a.size() != b.size()) throw DimensionError("distance: feature lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = static_cast<double>(a[i]) - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

namespace detail {

/// Mean of each (channel, cell) over a g x g partition of the patch.
inline std::vector<double> pool(const Image& patch, std::size_t g) {
    const std::size_t H = patch.height(), W = patch.width(), C = patch.channels();
    std::vector<double> out(C * g * g, 0.0);
    for (std::size_t gy = 0; gy < g; ++gy) {
        const std::size_t h0 = gy * H / g, h1 = (gy + 1) * H / g;
        for (std::size_t gx = 0; gx < g; ++gx) {
            const std::size_t w0 = gx * W / g, w1 = (gx + 1) * W / g;
            const double n = static_cast<double>((h1 - h0) * (w1 - w0));
            for (std::size_t c = 0; c < C; ++c) {
                double s = 0.0;
                for (std::size_t h = h0; h < h1; ++h) {
                    for (std::size_t w = w0; w < w1; ++w) s += patch(h, w, c);
                }
                out[(c * g + gy) * g + gx] = s / n;
            }
        }
    }
    return out;
}

}  // namespace detail

/// Deterministic stand-in for a pretrained embedding. Pools the patch to a
/// g x g grid, appends per-channel mean and spread statistics (all measured
/// relative to the patch's grand mean and spread, so a constant offset does
/// not change them), pads to out_dim, then normalises to zero mean and unit
/// norm. A constant patch maps to the zero vector.
inline FeatureMap fallback_features(const Image& patch, std::size_t out_dim) {
    if (out_dim == 0) throw UsageError("fallback_features: out_dim must be >= 1");
    if (patch.empty()) throw UsageError("fallback_features: empty patch");
    const std::size_t C = patch.channels();
    const std::size_t px = patch.height() * patch.width();

    double grand = 0.0;
    for (double v : patch.data()) grand += v;
    grand /= static_cast<double>(patch.size());
    double spread = 0.0;
    for (double v : patch.data()) spread += (v - grand) * (v - grand);
    spread = std::sqrt(spread / static_cast<double>(patch.size()));
    // Rounding leaves a residual spread on constant patches; treat it as zero.
    if (spread <= 1e-12 * std::max(1.0, std::abs(grand))) spread = 0.0;
    const double inv = spread > 0.0 ? 1.0 / spread : 0.0;

    std::size_t g = 1;
    while ((g + 1) * (g + 1) * C + 2 * C <= out_dim && g + 1 <= std::min(patch.height(), patch.width())) ++g;

    std::vector<double> v;
    v.reserve(out_dim);
    for (double p : detail::pool(patch, g)) v.push_back((p - grand) * inv);
    for (std::size_t c = 0; c < C; ++c) {
        double m = 0.0;
        for (std::size_t i = 0; i < px; ++i) m += patch.data()[i * C + c];
        m /= static_cast<double>(px);
        double s = 0.0;
        for (std::size_t i = 0; i < px; ++i) {
            const double d = patch.data()[i * C + c] - m;
            s += d * d;
        }
        s = std::sqrt(s / static_cast<double>(px));
        v.push_back((m - grand) * inv);
        v.push_back(spread > 0.0 ? s * inv - 1.0 : 0.0);
    }
    v.resize(out_dim, 0.0);

    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double norm = 0.0;
    for (double& x : v) {
        x -= mean;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    // Tiny residues from the mean subtraction of an all-zero vector.
    const bool flat = norm < 1e-12;

    FeatureMap f;
    f.shape = {static_cast<std::uint32_t>(out_dim)};
    f.source = FeatureSource::fallback_extractor;
    f.values.reserve(out_dim);
    for (double x : v) f.values.push_back(flat ? 0.0f : static_cast<float>(x / norm));
    return f;
}

/// Style map for the fallback back-end: pooled intensity plus pooled
/// horizontal and vertical absolute gradients, as (3C, g, g).
inline FeatureMap fallback_style_features(const Image& patch, std::size_t grid) {
    if (patch.empty()) throw UsageError("fallback_style_features: empty patch");
    const std::size_t H = patch.height(), W = patch.width(), C = patch.channels();
    const std::size_t g = std::max<std::size_t>(1, std::min({grid, H, W}));
    Image grads(H, W, 3 * C);
    for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t w = 0; w < W; ++w) {
            for (std::size_t c = 0; c < C; ++c) {
                grads(h, w, c) = patch(h, w, c);
                grads(h, w, C + c) = w + 1 < W ? std::abs(patch(h, w + 1, c) - patch(h, w, c)) : 0.0;
                grads(h, w, 2 * C + c) = h + 1 < H ? std::abs(patch(h + 1, w, c) - patch(h, w, c)) : 0.0;
            }
        }
    }
    FeatureMap f;
    f.shape = {static_cast<std::uint32_t>(3 * C), static_cast<std::uint32_t>(g), static_cast<std::uint32_t>(g)};
    f.source = FeatureSource::fallback_extractor;
    for (double x : detail::pool(grads, g)) f.values.push_back(static_cast<float>(x));
    return f;
}

/// Source of per-patch features for the style and diversity metrics.
class FeatureBackend {
public:
    virtual ~FeatureBackend() = default;
    virtual std::string name() const = 0;
    /// (C, H, W) map whose Gram matrix describes the patch's style.
    virtual FeatureMap style_features(const PatchGrid& grid, std::size_t i) const = 0;
    /// Pooled descriptor used for cosine similarity.
    virtual FeatureMap semantic_features(const PatchGrid& grid, std::size_t i) const = 0;
    /// Perceptual distance; Euclidean between semantic descriptors unless a
    /// back-end overrides it.
    virtual double perceptual_distance(std::size_t, std::size_t, const FeatureMap& a, const FeatureMap& b) const {
        return euclidean_distance(a.values, b.values);
    }
};

class FallbackBackend : public FeatureBackend {
public:
    explicit FallbackBackend(std::size_t out_dim = 64, std::size_t style_grid = 8)
        : out_dim_(out_dim), style_grid_(style_grid) {}

    std::string name() const override { return "fallback"; }
    FeatureMap style_features(const PatchGrid& grid, std::size_t i) const override {
        return fallback_style_features(grid.patches.at(i), style_grid_);
    }
    FeatureMap semantic_features(const PatchGrid& grid, std::size_t i) const override {
        return fallback_features(grid.patches.at(i), out_dim_);
    }

private:
    std::size_t out_dim_;
    std::size_t style_grid_;
};

inline std::filesystem::path style_feature_path(const std::filesystem::path& dir, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "style_%04zu.ssft", i);
    return dir / buf;
}

inline std::filesystem::path semantic_feature_path(const std::filesystem::path& dir, std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "semantic_%04zu.ssft", i);
    return dir / buf;
}

inline std::filesystem::path perceptual_distance_path(const std::filesystem::path& dir) {
    return dir / "perceptual.sspd";
}

/// Features computed elsewhere: `style_NNNN.ssft`, `semantic_NNNN.ssft` per
/// patch and an optional `perceptual.sspd` of precomputed distances.
class ExternalBackend : public FeatureBackend {
public:
    explicit ExternalBackend(std::filesystem::path dir) : dir_(std::move(dir)) {
        if (!std::filesystem::is_directory(dir_)) throw IoError("features directory " + dir_.string() + " not found");
        if (std::filesystem::exists(perceptual_distance_path(dir_))) {
            distances_ = load_distance_file(perceptual_distance_path(dir_));
        }
    }

    std::string name() const override { return "external"; }
    FeatureMap style_features(const PatchGrid&, std::size_t i) const override { return load(style_feature_path(dir_, i)); }
    FeatureMap semantic_features(const PatchGrid& grid, std::size_t i) const override {
        if (distances_ && distances_->count() != grid.size()) {
            throw IoError(perceptual_distance_path(dir_).string() + ": holds " + std::to_string(distances_->count()) +
                          " patches, panorama has " + std::to_string(grid.size()));
        }
        return load(semantic_feature_path(dir_, i));
    }
    double perceptual_distance(std::size_t i, std::size_t j, const FeatureMap& a, const FeatureMap& b) const override {
        if (distances_) return (*distances_)(i, j);
        return FeatureBackend::perceptual_distance(i, j, a, b);
    }

private:
    static FeatureMap load(const std::filesystem::path& p) {
        if (!std::filesystem::exists(p)) throw IoError("missing feature file " + p.string());
        return load_feature_file(p);
    }

    std::filesystem::path dir_;
    std::optional<PairwiseDistances> distances_;
};

/// Writes every patch's features from `backend` in the external layout.
inline void export_features(const PatchGrid& grid, const FeatureBackend& backend, const std::filesystem::path& dir) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        write_feature_file(style_feature_path(dir, i), backend.style_features(grid, i));
        write_feature_file(semantic_feature_path(dir, i), backend.semantic_features(grid, i));
    }
}

struct StyleReport {
    double loss = 0.0;
    std::size_t pair_count = 0;
};

/// Mean squared Frobenius distance between Gram matrices of neighbouring
/// patches along the long axis.
inline StyleReport intra_style_loss(const PatchGrid& grid, const FeatureBackend& backend) {
    if (grid.size() < 2) throw InsufficientPatchesError("intra style loss needs at least 2 patches");
    std::vector<Matrix> grams;
    grams.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) grams.push_back(gram_matrix(backend.style_features(grid, i)));
    StyleReport rep;
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        linalg::require_same_shape(grams[i], grams[i + 1], "style gram");
        double f = 0.0;
        auto a = grams[i].data();
        auto b = grams[i + 1].data();
        for (std::size_t k = 0; k < a.size(); ++k) f += (a[k] - b[k]) * (a[k] - b[k]);
        sum += f;
        ++rep.pair_count;
    }
    rep.loss = sum / static_cast<double>(rep.pair_count);
    return rep;
}

struct GsdReport {
    double perceptual = 0.0;  // higher = more diverse
    double semantic = 0.0;    // lower = less redundant
    std::size_t pair_count = 0;
    std::size_t separation = 2;
};

/// Averages over every patch pair at least `separation` grid steps apart.
inline GsdReport gsd(const PatchGrid& grid, const FeatureBackend& backend, std::size_t separation = 2) {
    if (separation < 2) throw ConfigError("must be >= 2", "metrics.separation");
    if (grid.size() <= separation) {
        throw InsufficientPatchesError("no patch pairs at separation " + std::to_string(separation) + " among " +
                                       std::to_string(grid.size()) + " patches");
    }
    std::vector<FeatureMap> feats;
    feats.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) feats.push_back(backend.semantic_features(grid, i));
    GsdReport rep;
    rep.separation = separation;
    double perc = 0.0, sem = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        for (std::size_t j = i + separation; j < grid.size(); ++j) {
            perc += backend.perceptual_distance(i, j, feats[i], feats[j]);
            sem += cosine_similarity(feats[i].values, feats[j].values);
            ++rep.pair_count;
        }
    }
    rep.perceptual = perc / static_cast<double>(rep.pair_count);
    rep.semantic = sem / static_cast<double>(rep.pair_count);
    return rep;
}

/// Table-style report. FID, CLIP and KID need pretrained encoders; they are
/// carried only when supplied from outside.
struct MetricsReport {
    std::optional<double> fid;
    std::optional<double> clip;
    std::optional<double> kid;
    std::optional<double> style_loss;
    std::optional<double> gsd_perceptual;
    std::optional<double> gsd_semantic;
    std::size_t patches = 0;
    std::size_t style_pairs = 0;
    std::size_t gsd_pairs = 0;
    std::size_t separation = 2;
    std::string extractor;

    static constexpr const char* kColumns[] = {"FID", "CLIP", "KID", "Style-L", "GSD-perceptual", "GSD-semantic"};

    std::vector<std::optional<double>> row() const { return {fid, clip, kid, style_loss, gsd_perceptual, gsd_semantic}; }

    std::string to_csv() const {
        std::ostringstream os;
        os.precision(17);
        for (std::size_t i = 0; i < std::size(kColumns); ++i) os << (i ? "," : "") << kColumns[i];
        os << "\n";
        const auto r = row();
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (i) os << ",";
            if (r[i]) os << *r[i];
        }
        os << "\n";
        return os.str();
    }

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        const auto r = row();
        for (std::size_t i = 0; i < r.size(); ++i) j[kColumns[i]] = r[i] ? nlohmann::ordered_json(*r[i]) : nullptr;
        j["patches"] = patches;
        j["style_pairs"] = style_pairs;
        j["gsd_pairs"] = gsd_pairs;
        j["separation"] = separation;
        j["extractor"] = extractor;
        return j;
    }
};

/// Partition, Style-L and GSD in one pass. Style-L needs >= 2 patches and GSD
/// needs a pair at `separation`; a metric that cannot be computed is left
/// empty.
inline MetricsReport evaluate_panorama(const Image& pano, const FeatureBackend& backend, std::size_t separation = 2) {
    const PatchGrid grid = partition_patches(pano);
    MetricsReport rep;
    rep.patches = grid.size();
    rep.separation = separation;
    rep.extractor = backend.name();
    if (grid.size() >= 2) {
        const StyleReport s = intra_style_loss(grid, backend);
        rep.style_loss = s.loss;
        rep.style_pairs = s.pair_count;
    }
    if (grid.size() > separation) {
        const GsdReport g = gsd(grid, backend, separation);
        rep.gsd_perceptual = g.perceptual;
        rep.gsd_semantic = g.semantic;
        rep.gsd_pairs = g.pair_count;
    }
    return rep;
}

}  // namespace scrollscape
