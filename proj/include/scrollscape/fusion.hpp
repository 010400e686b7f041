#pragma once

// Panoramic frame fusion: median-consensus frame selection per block and
// ramp-weighted accumulation of tiles onto a global canvas.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "scrollscape/error.hpp"
#include "scrollscape/image.hpp"
#include "scrollscape/scan_trajectory.hpp"

namespace scrollscape {

enum class StatisticKind { mean, luminance, variance };

inline const char* to_string(StatisticKind k) {
    switch (k) {
        case StatisticKind::mean: return "mean";
        case StatisticKind::luminance: return "luminance";
        case StatisticKind::variance: return "variance";
    }
    return "mean";
}

/// Scalar summary of a frame used for consensus selection. Luminance uses
/// Rec.601 weights for 3-channel frames and the channel mean otherwise.
inline double frame_statistic(const Image& frame, StatisticKind kind = StatisticKind::mean) {
    if (frame.empty()) throw UsageError("frame_statistic: empty frame");
    const auto d = frame.data();
    switch (kind) {
        case StatisticKind::mean: {
            double s = 0.0;
            for (double x : d) s += x;
            return s / static_cast<double>(d.size());
        }
        case StatisticKind::luminance: {
            const std::size_t C = frame.channels();
            const std::size_t px = frame.height() * frame.width();
            double s = 0.0;
            for (std::size_t i = 0; i < px; ++i) {
                if (C == 3) {
                    s += 0.299 * d[3 * i] + 0.587 * d[3 * i + 1] + 0.114 * d[3 * i + 2];
                } else {
                    double m = 0.0;
                    for (std::size_t c = 0; c < C; ++c) m += d[i * C + c];
                    s += m / static_cast<double>(C);
                }
            }
            return s / static_cast<double>(px);
        }
        case StatisticKind::variance: {
            double mean = 0.0;
            for (double x : d) mean += x;
            mean /= static_cast<double>(d.size());
            double v = 0.0;
            for (double x : d) v += (x - mean) * (x - mean);
            return v / static_cast<double>(d.size());
        }
    }
    return 0.0;
}

/// Median with the even-count rule: mean of the two central values.
inline double median_of(std::vector<double> values) {
    if (values.empty()) throw UsageError("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// argmin_i |stats[i] - median(stats)|, lowest index on ties.
inline std::size_t median_consensus_index(std::span<const double> stats) {
    const double med = median_of({stats.begin(), stats.end()});
    std::size_t best = 0;
    double best_dist = std::abs(stats[0] - med);
    for (std::size_t i = 1; i < stats.size(); ++i) {
        const double dist = std::abs(stats[i] - med);
        if (dist < best_dist) {
            best = i;
            best_dist = dist;
        }
    }
    return best;
}

/// Candidate frames produced for one window.
struct TileBlock {
    std::size_t t = 1;
    std::vector<Image> frames;
    Cell anchor;
};

struct ConsensusChoice {
    std::size_t index = 0;
    double median = 0.0;
    std::vector<double> statistics;
};

inline ConsensusChoice median_consensus_choice(const TileBlock& block, StatisticKind kind = StatisticKind::mean) {
    if (block.frames.empty()) throw UsageError("block " + std::to_string(block.t) + " has no frames");
    ConsensusChoice choice;
    choice.statistics.reserve(block.frames.size());
    for (const Image& f : block.frames) {
        if (f.extent() != block.frames.front().extent() || f.channels() != block.frames.front().channels()) {
            throw DimensionError("block " + std::to_string(block.t) + ": frames differ in shape");
        }
        choice.statistics.push_back(frame_statistic(f, kind));
    }
    choice.median = median_of(choice.statistics);
    choice.index = median_consensus_index(choice.statistics);
    return choice;
}

/// Selected index and a reference to the selected frame inside `block`.
inline std::pair<std::size_t, const Image&> median_consensus(const TileBlock& block,
                                                             StatisticKind kind = StatisticKind::mean) {
    const std::size_t i = median_consensus_choice(block, kind).index;
    return {i, block.frames[i]};
}

struct EdgeOverlaps {
    std::size_t top = 0;
    std::size_t bottom = 0;
    std::size_t left = 0;
    std::size_t right = 0;

    friend bool operator==(const EdgeOverlaps&, const EdgeOverlaps&) = default;
};

/// 1-D weight profile of length n. A ramped edge rises k/(ov+1), k = 1..ov,
/// from the boundary inward; the rest is 1.
inline std::vector<double> ramp_profile(std::size_t n, std::size_t lead, std::size_t trail) {
    if (lead >= n || trail >= n) {
        throw ConfigError("overlap " + std::to_string(std::max(lead, trail)) + " must be below tile extent " +
                              std::to_string(n),
                          "fusion.overlap");
    }
    std::vector<double> p(n, 1.0);
    for (std::size_t k = 0; k < lead; ++k) {
        p[k] = std::min(p[k], static_cast<double>(k + 1) / static_cast<double>(lead + 1));
    }
    for (std::size_t k = 0; k < trail; ++k) {
        p[n - 1 - k] = std::min(p[n - 1 - k], static_cast<double>(k + 1) / static_cast<double>(trail + 1));
    }
    return p;
}

/// Separable weight mask: vertical profile times horizontal profile.
struct RampMask {
    Extent extent;
    EdgeOverlaps overlaps;
    std::vector<double> rows;  // vertical profile
    std::vector<double> cols;  // horizontal profile

    double operator()(std::size_t h, std::size_t w) const { return rows[h] * cols[w]; }
};

inline RampMask build_ramp_mask(Extent tile, EdgeOverlaps ov) {
    RampMask m;
    m.extent = tile;
    m.overlaps = ov;
    m.rows = ramp_profile(tile.height, ov.top, ov.bottom);
    m.cols = ramp_profile(tile.width, ov.left, ov.right);
    return m;
}

/// Per-edge overlap depth of footprint `i` with the others, capped below the
/// tile extent.
inline EdgeOverlaps ramp_overlaps(const std::vector<Footprint>& fps, std::size_t i) {
    const Footprint& a = fps[i];
    EdgeOverlaps ov;
    for (std::size_t j = 0; j < fps.size(); ++j) {
        if (j == i) continue;
        const Footprint& b = fps[j];
        const long top = std::max(a.origin.h, b.origin.h);
        const long bottom = std::min(a.bottom(), b.bottom());
        const long left = std::max(a.origin.w, b.origin.w);
        const long right = std::min(a.right(), b.right());
        if (top >= bottom || left >= right) continue;
        const auto ih = static_cast<std::size_t>(bottom - top);
        const auto iw = static_cast<std::size_t>(right - left);
        if (b.origin.w < a.origin.w) ov.left = std::max(ov.left, iw);
        if (b.right() > a.right()) ov.right = std::max(ov.right, iw);
        if (b.origin.h < a.origin.h) ov.top = std::max(ov.top, ih);
        if (b.bottom() > a.bottom()) ov.bottom = std::max(ov.bottom, ih);
    }
    const std::size_t H = a.extent.height, W = a.extent.width;
    ov.top = std::min(ov.top, H - 1);
    ov.bottom = std::min(ov.bottom, H - 1);
    ov.left = std::min(ov.left, W - 1);
    ov.right = std::min(ov.right, W - 1);
    return ov;
}

struct FusedPanorama {
    Image image;
    std::vector<std::uint8_t> uncovered;  // 1 where no tile contributed
    std::size_t uncovered_count = 0;
};

/// Numerator and denominator accumulators of the weighted fusion. Memory is
/// the two accumulators; tiles are streamed through `accumulate`.
class PanoramaCanvas {
public:
    PanoramaCanvas(Extent extent, std::size_t channels)
        : extent_(extent), channels_(channels), value_(extent.cells() * channels, 0.0),
          weight_(extent.cells(), 0.0) {}

    Extent extent() const { return extent_; }
    std::size_t channels() const { return channels_; }
    std::span<const double> values() const { return value_; }
    std::span<const double> weights() const { return weight_; }
    std::size_t bytes() const { return (value_.size() + weight_.size()) * sizeof(double); }

    void accumulate(const Image& tile, const RampMask& mask, Cell anchor, std::size_t block = 0) {
        if (tile.channels() != channels_) {
            throw PlacementError("tile has " + std::to_string(tile.channels()) + " channels, canvas " +
                                     std::to_string(channels_),
                                 block);
        }
        if (mask.extent != tile.extent()) throw PlacementError("mask shape differs from tile", block);
        if (anchor.h < 0 || anchor.w < 0 ||
            anchor.h + static_cast<long>(tile.height()) > static_cast<long>(extent_.height) ||
            anchor.w + static_cast<long>(tile.width()) > static_cast<long>(extent_.width)) {
            std::ostringstream os;
            os << "tile " << tile.height() << "x" << tile.width() << " at (" << anchor.h << ", " << anchor.w
               << ") leaves canvas " << extent_.height << "x" << extent_.width;
            throw PlacementError(os.str(), block);
        }
        const auto oh = static_cast<std::size_t>(anchor.h);
        const auto ow = static_cast<std::size_t>(anchor.w);
        for (std::size_t h = 0; h < tile.height(); ++h) {
            for (std::size_t w = 0; w < tile.width(); ++w) {
                const double m = mask(h, w);
                const std::size_t cell = (oh + h) * extent_.width + (ow + w);
                weight_[cell] += m;
                for (std::size_t c = 0; c < channels_; ++c) value_[cell * channels_ + c] += m * tile(h, w, c);
            }
        }
    }

    /// value / weight where covered; uncovered cells are 0 and flagged.
    FusedPanorama finalize() const {
        FusedPanorama out;
        out.image = Image(extent_.height, extent_.width, channels_);
        out.uncovered.assign(extent_.cells(), 0);
        auto img = out.image.data();
        for (std::size_t cell = 0; cell < weight_.size(); ++cell) {
            const double wsum = weight_[cell];
            if (wsum > 0.0) {
                for (std::size_t c = 0; c < channels_; ++c) img[cell * channels_ + c] = value_[cell * channels_ + c] / wsum;
            } else {
                out.uncovered[cell] = 1;
                ++out.uncovered_count;
            }
        }
        return out;
    }

private:
    Extent extent_;
    std::size_t channels_;
    std::vector<double> value_;
    std::vector<double> weight_;
};

/// Hard concatenation baseline: each cell takes the tile whose footprint
/// centre is nearest, so cuts fall at overlap midpoints.
inline Image concatenate_hard(const std::vector<Image>& tiles, const std::vector<Cell>& anchors, Extent extent) {
    if (tiles.empty() || tiles.size() != anchors.size()) throw UsageError("concatenate_hard: tiles/anchors mismatch");
    const std::size_t C = tiles.front().channels();
    Image out(extent.height, extent.width, C);
    for (std::size_t h = 0; h < extent.height; ++h) {
        for (std::size_t w = 0; w < extent.width; ++w) {
            double best = std::numeric_limits<double>::infinity();
            std::size_t pick = tiles.size();
            for (std::size_t i = 0; i < tiles.size(); ++i) {
                const long lh = static_cast<long>(h) - anchors[i].h;
                const long lw = static_cast<long>(w) - anchors[i].w;
                if (lh < 0 || lw < 0 || lh >= static_cast<long>(tiles[i].height()) ||
                    lw >= static_cast<long>(tiles[i].width())) {
                    continue;
                }
                const double ch = static_cast<double>(anchors[i].h) + 0.5 * static_cast<double>(tiles[i].height());
                const double cw = static_cast<double>(anchors[i].w) + 0.5 * static_cast<double>(tiles[i].width());
                const double dh = static_cast<double>(h) + 0.5 - ch;
                const double dw = static_cast<double>(w) + 0.5 - cw;
                const double d = dh * dh + dw * dw;
                if (d < best) {
                    best = d;
                    pick = i;
                }
            }
            if (pick == tiles.size()) continue;
            for (std::size_t c = 0; c < C; ++c) {
                out(h, w, c) = tiles[pick](static_cast<std::size_t>(static_cast<long>(h) - anchors[pick].h),
                                           static_cast<std::size_t>(static_cast<long>(w) - anchors[pick].w), c);
            }
        }
    }
    return out;
}

enum class SeamAxis { columns, rows };

struct SeamStat {
    long position = 0;  // boundary between position-1 and position
    double max_diff = 0.0;
    double mean_diff = 0.0;
};

struct SeamReport {
    SeamAxis axis = SeamAxis::columns;
    std::vector<SeamStat> seams;
    SeamStat interior;  // over every non-seam boundary; position unused

    std::string to_csv() const {
        std::ostringstream os;
        os.precision(17);
        os << "kind,position,max_diff,mean_diff\n";
        for (const SeamStat& s : seams) os << "seam," << s.position << "," << s.max_diff << "," << s.mean_diff << "\n";
        os << "interior,," << interior.max_diff << "," << interior.mean_diff << "\n";
        return os.str();
    }
};

/// Absolute first differences across the listed boundaries, compared with the
/// same statistics over all other boundaries along the axis.
inline SeamReport seam_energy(const Image& pano, std::span<const long> seams, SeamAxis axis = SeamAxis::columns) {
    SeamReport rep;
    rep.axis = axis;
    const std::size_t along = axis == SeamAxis::columns ? pano.width() : pano.height();
    const std::size_t across = axis == SeamAxis::columns ? pano.height() : pano.width();
    const std::size_t C = pano.channels();
    auto boundary = [&](std::size_t pos, double& mx, double& sum) {
        for (std::size_t a = 0; a < across; ++a) {
            for (std::size_t c = 0; c < C; ++c) {
                const double d = axis == SeamAxis::columns ? std::abs(pano(a, pos, c) - pano(a, pos - 1, c))
                                                           : std::abs(pano(pos, a, c) - pano(pos - 1, a, c));
                mx = std::max(mx, d);
                sum += d;
            }
        }
    };
    std::vector<std::uint8_t> is_seam(along, 0);
    for (long s : seams) {
        if (s < 1 || static_cast<std::size_t>(s) >= along) {
            throw IndexError("seam position " + std::to_string(s) + " outside (0, " + std::to_string(along) + ")");
        }
        is_seam[static_cast<std::size_t>(s)] = 1;
        SeamStat st;
        st.position = s;
        double sum = 0.0;
        boundary(static_cast<std::size_t>(s), st.max_diff, sum);
        st.mean_diff = sum / static_cast<double>(across * C);
        rep.seams.push_back(st);
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t pos = 1; pos < along; ++pos) {
        if (is_seam[pos]) continue;
        boundary(pos, rep.interior.max_diff, sum);
        count += across * C;
    }
    rep.interior.mean_diff = count ? sum / static_cast<double>(count) : 0.0;
    return rep;
}

/// Boundaries where some footprint starts or ends inside the canvas.
inline std::vector<long> footprint_seams(const std::vector<Footprint>& fps, Extent canvas, SeamAxis axis) {
    std::vector<long> out;
    const long limit = static_cast<long>(axis == SeamAxis::columns ? canvas.width : canvas.height);
    for (const Footprint& f : fps) {
        const long a = axis == SeamAxis::columns ? f.origin.w : f.origin.h;
        const long b = axis == SeamAxis::columns ? f.right() : f.bottom();
        if (a > 0 && a < limit) out.push_back(a);
        if (b > 0 && b < limit) out.push_back(b);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace scrollscape
