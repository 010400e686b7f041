#pragma once

// Scan-path planning over the global canvas: anchor positions, window
// intervals, coverage accounting and trajectory-anchored block grouping.
// All coordinates are integer cells.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "scrollscape/error.hpp"
#include "scrollscape/image.hpp"

namespace scrollscape {

enum class ScanMode { linear, snake };

inline const char* to_string(ScanMode m) { return m == ScanMode::linear ? "linear" : "snake"; }

/// Axis-aligned unit step.
struct Direction {
    int dh = 0;
    int dw = 1;

    constexpr bool valid() const {
        const int ah = dh < 0 ? -dh : dh;
        const int aw = dw < 0 ? -dw : dw;
        return (ah == 1 && aw == 0) || (ah == 0 && aw == 1);
    }
    constexpr bool vertical() const { return dh != 0; }
    friend constexpr bool operator==(Direction, Direction) = default;
};

struct ScanConfig {
    std::size_t window_len = 32;      // cells per window along the scan axis
    std::size_t window_cross = 32;    // cells per window across the scan axis
    std::size_t spatial_stride = 16;  // chunk step between window intervals
    std::size_t step_stride = 16;     // anchor displacement per step
    std::size_t n_steps = 1;
    Cell p_init{0, 0};
    ScanMode mode = ScanMode::linear;
    Direction linear_direction{0, 1};
    std::size_t snake_rows = 1;
    std::size_t snake_cols = 1;

    /// Frame extent of a single window. Snake frames scan along rows.
    Extent frame_extent() const {
        if (mode == ScanMode::linear && linear_direction.vertical()) {
            return {window_len, window_cross};
        }
        return {window_cross, window_len};
    }

    void validate() const {
        if (window_len == 0) throw ConfigError("must be positive", "scan.window_len");
        if (window_cross == 0) throw ConfigError("must be positive", "scan.window_cross");
        if (spatial_stride == 0) throw ConfigError("must be positive", "scan.spatial_stride");
        if (step_stride == 0) throw ConfigError("must be positive", "scan.step_stride");
        if (n_steps == 0) throw ConfigError("must be positive", "scan.n_steps");
        if (spatial_stride > window_len) {
            throw ConfigError("spatial stride " + std::to_string(spatial_stride) +
                                  " exceeds window length " + std::to_string(window_len) +
                                  " and would leave gaps",
                              "scan.spatial_stride,scan.window_len");
        }
        if (p_init.h < 0 || p_init.w < 0) throw ConfigError("must be non-negative", "scan.p_init");
        if (mode == ScanMode::linear && !linear_direction.valid()) {
            throw ConfigError("direction must be an axis-aligned unit vector", "scan.direction");
        }
        if (mode == ScanMode::snake && snake_rows * snake_cols != n_steps) {
            throw ConfigError("snake grid " + std::to_string(snake_rows) + "x" +
                                  std::to_string(snake_cols) + " does not hold " +
                                  std::to_string(n_steps) + " steps",
                              "scan.snake_rows,scan.snake_cols,scan.n_steps");
        }
    }
};

/// Half-open rectangle [top, top+extent.height) x [left, left+extent.width).
struct Footprint {
    Cell origin;
    Extent extent;

    long bottom() const { return origin.h + static_cast<long>(extent.height); }
    long right() const { return origin.w + static_cast<long>(extent.width); }
};

struct Trajectory {
    std::vector<Cell> anchors;          // O_1 .. O_N (stored 0-based)
    std::vector<Direction> directions;  // d_1 .. d_{N-1}
    ScanConfig config;

    std::size_t size() const { return anchors.size(); }

    /// Anchor of 1-based block index t.
    Cell anchor(std::size_t t) const {
        if (t < 1 || t > anchors.size()) {
            throw IndexError("block index " + std::to_string(t) + " outside [1, " +
                             std::to_string(anchors.size()) + "]");
        }
        return anchors[t - 1];
    }

    Footprint footprint(std::size_t t) const { return {anchor(t), config.frame_extent()}; }
};

struct WindowSpec {
    std::size_t t = 0;
    long interval_start = 0;
    long interval_end = 0;
    Cell anchor;
};

namespace detail {

inline Trajectory walk(const ScanConfig& config, const std::vector<Direction>& dirs) {
    Trajectory traj;
    traj.config = config;
    traj.directions = dirs;
    traj.anchors.reserve(dirs.size() + 1);
    Cell o = config.p_init;
    traj.anchors.push_back(o);
    const long step = static_cast<long>(config.step_stride);
    for (const Direction& d : dirs) {
        o = o + Cell{step * d.dh, step * d.dw};
        traj.anchors.push_back(o);
    }
    return traj;
}

}  // namespace detail

/// Unidirectional scan: O_t = (t-1) * step_stride * d + p_init.
inline Trajectory plan_linear(const ScanConfig& config) {
    if (config.mode != ScanMode::linear) throw ConfigError("plan_linear needs linear mode", "scan.mode");
    config.validate();
    return detail::walk(config, std::vector<Direction>(config.n_steps - 1, config.linear_direction));
}

/// Boustrophedon over a rows x cols anchor grid: left-to-right on the top row,
/// one step down, right-to-left, and so on.
inline Trajectory plan_snake(const ScanConfig& config) {
    if (config.mode != ScanMode::snake) throw ConfigError("plan_snake needs snake mode", "scan.mode");
    config.validate();
    std::vector<Direction> dirs;
    dirs.reserve(config.n_steps);
    for (std::size_t r = 0; r < config.snake_rows; ++r) {
        const Direction along = (r % 2 == 0) ? Direction{0, 1} : Direction{0, -1};
        for (std::size_t c = 0; c + 1 < config.snake_cols; ++c) dirs.push_back(along);
        if (r + 1 < config.snake_rows) dirs.push_back(Direction{1, 0});
    }
    return detail::walk(config, dirs);
}

inline Trajectory plan(const ScanConfig& config) {
    return config.mode == ScanMode::linear ? plan_linear(config) : plan_snake(config);
}

namespace detail {

inline WindowSpec interval_of(const ScanConfig& config, std::size_t t) {
    if (t < 1 || t > config.n_steps) {
        throw IndexError("block index " + std::to_string(t) + " outside [1, " +
                         std::to_string(config.n_steps) + "]");
    }
    WindowSpec spec;
    spec.t = t;
    spec.interval_start = static_cast<long>((t - 1) * config.spatial_stride);
    spec.interval_end = spec.interval_start + static_cast<long>(config.window_len);
    return spec;
}

}  // namespace detail

/// Window interval of 1-based block t: [(t-1) * spatial_stride, +window_len).
inline WindowSpec window_interval(const ScanConfig& config, std::size_t t) {
    WindowSpec spec = detail::interval_of(config, t);
    spec.anchor = plan(config).anchor(t);
    return spec;
}

inline WindowSpec window_interval(const Trajectory& traj, std::size_t t) {
    WindowSpec spec = detail::interval_of(traj.config, t);
    spec.anchor = traj.anchor(t);
    return spec;
}

/// Window multiplicity over the canvas, stored on the grid induced by the
/// footprint edges so that 32K-wide canvases stay cheap. Each compressed cell
/// stands for a rectangle of canvas cells with identical multiplicity.
class CoverageReport {
public:
    CoverageReport(Extent canvas, const std::vector<Footprint>& footprints) : canvas_(canvas) {
        rows_ = {0, static_cast<long>(canvas.height)};
        cols_ = {0, static_cast<long>(canvas.width)};
        for (const Footprint& f : footprints) {
            rows_.push_back(clamp_h(f.origin.h));
            rows_.push_back(clamp_h(f.bottom()));
            cols_.push_back(clamp_w(f.origin.w));
            cols_.push_back(clamp_w(f.right()));
        }
        dedupe(rows_);
        dedupe(cols_);
        const std::size_t nr = rows_.size() - 1;
        const std::size_t nc = cols_.size() - 1;
        counts_.assign(nr * nc, 0);
        for (const Footprint& f : footprints) {
            const std::size_t r0 = index_of(rows_, clamp_h(f.origin.h));
            const std::size_t r1 = index_of(rows_, clamp_h(f.bottom()));
            const std::size_t c0 = index_of(cols_, clamp_w(f.origin.w));
            const std::size_t c1 = index_of(cols_, clamp_w(f.right()));
            for (std::size_t r = r0; r < r1; ++r) {
                for (std::size_t c = c0; c < c1; ++c) ++counts_[r * nc + c];
            }
        }
        if (canvas.cells() == 0) return;
        min_ = UINT32_MAX;
        for (std::size_t r = 0; r < nr; ++r) {
            for (std::size_t c = 0; c < nc; ++c) {
                const std::uint32_t m = counts_[r * nc + c];
                min_ = std::min(min_, m);
                max_ = std::max(max_, m);
                if (m == 0) {
                    uncovered_count_ += static_cast<std::size_t>((rows_[r + 1] - rows_[r]) *
                                                                 (cols_[c + 1] - cols_[c]));
                    uncovered_.push_back({{rows_[r], cols_[c]},
                                          {static_cast<std::size_t>(rows_[r + 1] - rows_[r]),
                                           static_cast<std::size_t>(cols_[c + 1] - cols_[c])}});
                }
            }
        }
    }

    Extent canvas() const { return canvas_; }
    std::uint32_t min_multiplicity() const { return min_; }
    std::uint32_t max_multiplicity() const { return max_; }
    std::size_t uncovered_count() const { return uncovered_count_; }
    bool complete() const { return uncovered_count_ == 0; }
    /// Uncovered canvas regions as disjoint rectangles.
    const std::vector<Footprint>& uncovered_regions() const { return uncovered_; }

    std::uint32_t multiplicity(std::size_t h, std::size_t w) const {
        if (h >= canvas_.height || w >= canvas_.width) throw IndexError("cell outside canvas");
        const auto r = locate(rows_, static_cast<long>(h));
        const auto c = locate(cols_, static_cast<long>(w));
        return counts_[r * (cols_.size() - 1) + c];
    }

    std::string summary() const {
        std::ostringstream os;
        os << "canvas " << canvas_.height << "x" << canvas_.width << ", multiplicity min "
           << min_ << " max " << max_ << ", uncovered cells " << uncovered_count_;
        for (const Footprint& f : uncovered_) {
            os << "\n  uncovered rows [" << f.origin.h << ", " << f.bottom() << ") cols ["
               << f.origin.w << ", " << f.right() << ")";
        }
        return os.str();
    }

private:
    long clamp_h(long v) const { return std::clamp(v, 0L, static_cast<long>(canvas_.height)); }
    long clamp_w(long v) const { return std::clamp(v, 0L, static_cast<long>(canvas_.width)); }

    static void dedupe(std::vector<long>& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    }
    static std::size_t index_of(const std::vector<long>& v, long x) {
        return static_cast<std::size_t>(std::lower_bound(v.begin(), v.end(), x) - v.begin());
    }
    static std::size_t locate(const std::vector<long>& v, long x) {
        return static_cast<std::size_t>(std::upper_bound(v.begin(), v.end(), x) - v.begin()) - 1;
    }

    Extent canvas_;
    std::vector<long> rows_;
    std::vector<long> cols_;
    std::vector<std::uint32_t> counts_;
    std::uint32_t min_ = 0;
    std::uint32_t max_ = 0;
    std::size_t uncovered_count_ = 0;
    std::vector<Footprint> uncovered_;
};

inline CoverageReport coverage_report(const Trajectory& traj, Extent canvas) {
    std::vector<Footprint> fps;
    fps.reserve(traj.size());
    for (std::size_t t = 1; t <= traj.size(); ++t) fps.push_back(traj.footprint(t));
    return CoverageReport(canvas, fps);
}

struct TapBlock {
    std::size_t first = 0;  // 1-based window indices, inclusive
    std::size_t last = 0;
    Cell anchor_min;
    Cell anchor_max;

    std::size_t size() const { return last - first + 1; }
};

struct TapPartition {
    std::vector<TapBlock> blocks;
    std::size_t primary_anchor_index = 1;

    /// 0-based block holding 1-based window t.
    std::size_t block_of(std::size_t t) const {
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            if (t >= blocks[b].first && t <= blocks[b].last) return b;
        }
        throw IndexError("window " + std::to_string(t) + " not in any block");
    }
};

/// Contiguous grouping of windows into decode blocks of at most block_size.
inline TapPartition tap_partition(const Trajectory& traj, std::size_t block_size) {
    if (block_size == 0) throw ConfigError("must be positive", "tap.block_size");
    TapPartition part;
    const std::size_t n = traj.size();
    for (std::size_t first = 1; first <= n; first += block_size) {
        TapBlock b;
        b.first = first;
        b.last = std::min(n, first + block_size - 1);
        b.anchor_min = b.anchor_max = traj.anchor(first);
        for (std::size_t t = first; t <= b.last; ++t) {
            const Cell o = traj.anchor(t);
            b.anchor_min = {std::min(b.anchor_min.h, o.h), std::min(b.anchor_min.w, o.w)};
            b.anchor_max = {std::max(b.anchor_max.h, o.h), std::max(b.anchor_max.w, o.w)};
        }
        part.blocks.push_back(b);
    }
    part.primary_anchor_index = 1;
    return part;
}

/// `t h w` per anchor, preceded by `#` comment lines describing the plan.
inline std::string to_text(const Trajectory& traj) {
    std::ostringstream os;
    const ScanConfig& c = traj.config;
    os << "# mode " << to_string(c.mode) << " window_len " << c.window_len << " window_cross "
       << c.window_cross << " spatial_stride " << c.spatial_stride << " step_stride "
       << c.step_stride << " n_steps " << c.n_steps << "\n";
    for (std::size_t t = 1; t <= traj.size(); ++t) {
        const Cell o = traj.anchor(t);
        os << t << " " << o.h << " " << o.w << "\n";
    }
    return os.str();
}

/// `block t h w` per window.
inline std::string to_text(const TapPartition& part, const Trajectory& traj) {
    std::ostringstream os;
    os << "# blocks " << part.blocks.size() << " primary_anchor " << part.primary_anchor_index
       << "\n";
    for (std::size_t b = 0; b < part.blocks.size(); ++b) {
        for (std::size_t t = part.blocks[b].first; t <= part.blocks[b].last; ++t) {
            const Cell o = traj.anchor(t);
            os << b + 1 << " " << t << " " << o.h << " " << o.w << "\n";
        }
    }
    return os.str();
}

}  // namespace scrollscape
