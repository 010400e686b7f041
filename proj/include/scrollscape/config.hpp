#pragma once

// Pipeline configuration: line-oriented `key = value` with dotted keys and
// optional `[section]` headers. Parsing resolves every default so the parsed
// result re-serialises to a complete, explicit file.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "scrollscape/error.hpp"
#include "scrollscape/flow_matching.hpp"
#include "scrollscape/formats.hpp"
#include "scrollscape/fusion.hpp"
#include "scrollscape/scan_trajectory.hpp"
#include "scrollscape/scanpe.hpp"

namespace scrollscape {

enum class Orientation { horizontal, vertical };
enum class SourceKind { procedural, sampler };
enum class Pattern { gradient, texture };
enum class EnhancerKind { identity, upscale };
enum class ExtractorKind { fallback, external };

struct CanvasConfig {
    std::size_t short_side = 512;
    std::size_t aspect_num = 8;  // long : short = num : den
    std::size_t aspect_den = 1;
    Orientation orientation = Orientation::horizontal;

    Extent extent() const {
        const std::size_t lng = short_side * aspect_num / aspect_den;
        return orientation == Orientation::horizontal ? Extent{short_side, lng} : Extent{lng, short_side};
    }
};

struct FusionConfig {
    StatisticKind statistic = StatisticKind::mean;
    std::optional<std::size_t> overlap;  // empty: derived from footprints
    std::size_t frames_per_block = 3;
};

struct SourceConfig {
    SourceKind kind = SourceKind::procedural;
    Pattern pattern = Pattern::texture;
    std::size_t channels = 3;
    double frame_noise = 0.0;
    double flicker = 0.2;
    std::string checkpoint;
    std::size_t sample_steps = 20;
    std::size_t train_iterations = 200;
    double learning_rate = 3e-3;
};

struct EnhancerConfig {
    EnhancerKind kind = EnhancerKind::identity;
    double scale = 1.0;
};

struct MetricsConfig {
    std::size_t separation = 2;
    ExtractorKind extractor = ExtractorKind::fallback;
    std::string features_dir;
    std::size_t out_dim = 64;
    std::size_t style_grid = 8;
    std::optional<double> fid;
    std::optional<double> clip;
    std::optional<double> kid;
};

struct IoConfig {
    std::string out_dir = "out";
    std::uint64_t seed = 0;
    bool write_tiles = false;
    std::string tiles_dir;
};

struct PipelineConfig {
    CanvasConfig canvas;
    ScanConfig scan;
    RopeParams rope;
    FusionConfig fusion;
    std::size_t tap_block_size = 4;
    SourceConfig source;
    EnhancerConfig enhancer;
    MetricsConfig metrics;
    IoConfig io;

    /// Integer enhancer factor; validated by resolve().
    std::size_t scale() const { return static_cast<std::size_t>(std::lround(enhancer.scale)); }
    /// Canvas in generation units, before enhancement.
    Extent base_extent() const {
        const Extent e = canvas.extent();
        return {e.height / scale(), e.width / scale()};
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::size_t parse_size(const std::string& key, const std::string& v) {
    std::size_t out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError("expected a non-negative integer, got '" + v + "'", key);
    return out;
}

inline long parse_long(const std::string& key, const std::string& v) {
    long out = 0;
    const auto* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError("expected an integer, got '" + v + "'", key);
    return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    double out = 0.0;
    in >> out;
    if (!in || !in.eof() || !std::isfinite(out)) throw ConfigError("expected a finite number, got '" + v + "'", key);
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected true or false, got '" + v + "'", key);
}

inline std::vector<std::string> split(const std::string& v, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

inline std::pair<long, long> parse_pair(const std::string& key, const std::string& v) {
    const auto parts = split(v, ',');
    if (parts.size() != 2) throw ConfigError("expected 'a,b', got '" + v + "'", key);
    return {parse_long(key, parts[0]), parse_long(key, parts[1])};
}

template <typename E, std::size_t N>
E parse_enum(const std::string& key, const std::string& v, const std::array<std::pair<const char*, E>, N>& names) {
    for (const auto& [n, e] : names) {
        if (v == n) return e;
    }
    std::string allowed;
    for (const auto& [n, e] : names) allowed += (allowed.empty() ? "" : "|") + std::string(n);
    throw ConfigError("expected one of " + allowed + ", got '" + v + "'", key);
}

template <typename E, std::size_t N>
const char* enum_name(E e, const std::array<std::pair<const char*, E>, N>& names) {
    for (const auto& [n, x] : names) {
        if (x == e) return n;
    }
    return "?";
}

inline constexpr std::array<std::pair<const char*, ScanMode>, 2> kModes{{{"linear", ScanMode::linear},
                                                                          {"snake", ScanMode::snake}}};
inline constexpr std::array<std::pair<const char*, Orientation>, 2> kOrientations{
    {{"horizontal", Orientation::horizontal}, {"vertical", Orientation::vertical}}};
inline constexpr std::array<std::pair<const char*, StatisticKind>, 3> kStatistics{
    {{"mean", StatisticKind::mean}, {"luminance", StatisticKind::luminance}, {"variance", StatisticKind::variance}}};
inline constexpr std::array<std::pair<const char*, SourceKind>, 2> kSources{
    {{"procedural", SourceKind::procedural}, {"sampler", SourceKind::sampler}}};
inline constexpr std::array<std::pair<const char*, Pattern>, 2> kPatterns{
    {{"gradient", Pattern::gradient}, {"texture", Pattern::texture}}};
inline constexpr std::array<std::pair<const char*, EnhancerKind>, 2> kEnhancers{
    {{"identity", EnhancerKind::identity}, {"upscale", EnhancerKind::upscale}}};
inline constexpr std::array<std::pair<const char*, ExtractorKind>, 2> kExtractors{
    {{"fallback", ExtractorKind::fallback}, {"external", ExtractorKind::external}}};

/// Shortest text that parses back to the same double.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace detail

/// Raw key/value pairs in file order; later assignments win.
using ConfigValues = std::map<std::string, std::string>;

inline ConfigValues parse_config_text(const std::string& text, const std::string& source = "<config>") {
    ConfigValues values;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t.front() == '[') {
            if (t.back() != ']') throw ConfigError(source + ":" + std::to_string(lineno) + ": unterminated section");
            section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
        }
        std::string key = detail::trim(std::string_view(t).substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        values[key] = detail::trim(std::string_view(t).substr(eq + 1));
    }
    return values;
}

namespace detail {

/// Number of strides needed to reach exactly `target` from `first` extent.
inline std::size_t steps_to_reach(std::size_t target, std::size_t window, std::size_t stride, const char* keys) {
    if (window > target) {
        throw ConfigError("window extent " + std::to_string(window) + " exceeds canvas extent " + std::to_string(target),
                          keys);
    }
    if ((target - window) % stride != 0) {
        throw ConfigError("canvas extent " + std::to_string(target) + " is not reachable: (" + std::to_string(target) +
                              " - " + std::to_string(window) + ") is not a multiple of stride " + std::to_string(stride),
                          keys);
    }
    return (target - window) / stride + 1;
}

}  // namespace detail

/// Applies `values` on top of defaults, fills derived defaults and validates
/// cross-field consistency.
inline PipelineConfig resolve_config(const ConfigValues& values) {
    using namespace detail;
    PipelineConfig cfg;
    std::optional<std::size_t> window_len, window_cross, spatial_stride, step_stride, n_steps, rows, cols;
    std::optional<std::pair<long, long>> direction;
    bool p_init_given = false;

    for (const auto& [key, v] : values) {
        if (key == "canvas.short_side") cfg.canvas.short_side = parse_size(key, v);
        else if (key == "canvas.aspect") {
            const auto parts = split(v, ':');
            if (parts.size() == 1) {
                cfg.canvas.aspect_num = parse_size(key, parts[0]);
                cfg.canvas.aspect_den = 1;
            } else if (parts.size() == 2) {
                cfg.canvas.aspect_num = parse_size(key, parts[0]);
                cfg.canvas.aspect_den = parse_size(key, parts[1]);
            } else {
                throw ConfigError("expected 'N' or 'N:M', got '" + v + "'", key);
            }
        } else if (key == "canvas.orientation") cfg.canvas.orientation = parse_enum(key, v, kOrientations);
        else if (key == "scan.mode") cfg.scan.mode = parse_enum(key, v, kModes);
        else if (key == "scan.window_len") window_len = parse_size(key, v);
        else if (key == "scan.window_cross") window_cross = parse_size(key, v);
        else if (key == "scan.spatial_stride") spatial_stride = parse_size(key, v);
        else if (key == "scan.step_stride") step_stride = parse_size(key, v);
        else if (key == "scan.n_steps") n_steps = parse_size(key, v);
        else if (key == "scan.p_init") {
            const auto [h, w] = parse_pair(key, v);
            cfg.scan.p_init = {h, w};
            p_init_given = true;
        } else if (key == "scan.direction") direction = parse_pair(key, v);
        else if (key == "scan.snake_rows") rows = parse_size(key, v);
        else if (key == "scan.snake_cols") cols = parse_size(key, v);
        else if (key == "rope.base") cfg.rope.base = parse_double(key, v);
        else if (key == "rope.head_dim") cfg.rope.head_dim = parse_size(key, v);
        else if (key == "rope.axis_split") {
            const auto parts = split(v, ',');
            if (parts.size() != 3) throw ConfigError("expected three comma-separated sizes", key);
            for (std::size_t i = 0; i < 3; ++i) cfg.rope.axis_split[i] = parse_size(key, parts[i]);
        } else if (key == "fusion.statistic") cfg.fusion.statistic = parse_enum(key, v, kStatistics);
        else if (key == "fusion.overlap") {
            if (v == "auto") cfg.fusion.overlap.reset();
            else cfg.fusion.overlap = parse_size(key, v);
        } else if (key == "fusion.frames_per_block") cfg.fusion.frames_per_block = parse_size(key, v);
        else if (key == "tap.block_size") cfg.tap_block_size = parse_size(key, v);
        else if (key == "source.kind") cfg.source.kind = parse_enum(key, v, kSources);
        else if (key == "source.pattern") cfg.source.pattern = parse_enum(key, v, kPatterns);
        else if (key == "source.channels") cfg.source.channels = parse_size(key, v);
        else if (key == "source.frame_noise") cfg.source.frame_noise = parse_double(key, v);
        else if (key == "source.flicker") cfg.source.flicker = parse_double(key, v);
        else if (key == "source.checkpoint") cfg.source.checkpoint = v;
        else if (key == "source.sample_steps") cfg.source.sample_steps = parse_size(key, v);
        else if (key == "source.train_iterations") cfg.source.train_iterations = parse_size(key, v);
        else if (key == "source.learning_rate") cfg.source.learning_rate = parse_double(key, v);
        else if (key == "enhancer.kind") cfg.enhancer.kind = parse_enum(key, v, kEnhancers);
        else if (key == "enhancer.scale") cfg.enhancer.scale = parse_double(key, v);
        else if (key == "metrics.separation") cfg.metrics.separation = parse_size(key, v);
        else if (key == "metrics.extractor") cfg.metrics.extractor = parse_enum(key, v, kExtractors);
        else if (key == "metrics.features_dir") cfg.metrics.features_dir = v;
        else if (key == "metrics.out_dim") cfg.metrics.out_dim = parse_size(key, v);
        else if (key == "metrics.style_grid") cfg.metrics.style_grid = parse_size(key, v);
        else if (key == "metrics.fid") cfg.metrics.fid = v.empty() ? std::nullopt : std::optional(parse_double(key, v));
        else if (key == "metrics.clip") cfg.metrics.clip = v.empty() ? std::nullopt : std::optional(parse_double(key, v));
        else if (key == "metrics.kid") cfg.metrics.kid = v.empty() ? std::nullopt : std::optional(parse_double(key, v));
        else if (key == "io.out_dir") cfg.io.out_dir = v;
        else if (key == "io.seed") cfg.io.seed = parse_size(key, v);
        else if (key == "io.write_tiles") cfg.io.write_tiles = parse_bool(key, v);
        else if (key == "io.tiles_dir") cfg.io.tiles_dir = v;
        else throw ConfigError("unknown key", key);
    }

    // Canvas and enhancer.
    if (cfg.canvas.short_side == 0) throw ConfigError("must be positive", "canvas.short_side");
    if (cfg.canvas.aspect_num == 0 || cfg.canvas.aspect_den == 0) throw ConfigError("must be positive", "canvas.aspect");
    if (cfg.canvas.aspect_num < cfg.canvas.aspect_den) {
        throw ConfigError("long side must not be shorter than the short side", "canvas.aspect");
    }
    if ((cfg.canvas.short_side * cfg.canvas.aspect_num) % cfg.canvas.aspect_den != 0) {
        throw ConfigError("short_side * aspect is not an integer extent", "canvas.aspect,canvas.short_side");
    }
    if (cfg.enhancer.kind == EnhancerKind::identity) {
        if (cfg.enhancer.scale != 1.0) throw ConfigError("identity enhancer needs scale 1", "enhancer.scale,enhancer.kind");
    }
    if (!(cfg.enhancer.scale >= 1.0)) throw ConfigError("must be >= 1", "enhancer.scale");
    if (std::abs(cfg.enhancer.scale - std::round(cfg.enhancer.scale)) > 0.0) {
        throw ConfigError("non-integer scale " + fmt_double(cfg.enhancer.scale) +
                              " would give non-integer anchors and overlaps after scaling",
                          "enhancer.scale");
    }
    const std::size_t k = cfg.scale();
    const Extent canvas = cfg.canvas.extent();
    if (canvas.height % k != 0 || canvas.width % k != 0) {
        throw ConfigError("canvas extent is not divisible by the enhancer scale", "canvas.short_side,enhancer.scale");
    }
    const Extent base = cfg.base_extent();
    const bool horizontal = cfg.canvas.orientation == Orientation::horizontal;
    const std::size_t base_short = horizontal ? base.height : base.width;

    // Scan geometry.
    ScanConfig& s = cfg.scan;
    if (s.mode == ScanMode::linear) {
        s.window_len = window_len.value_or(base_short);
        s.window_cross = window_cross.value_or(base_short);
        if (direction) {
            s.linear_direction = {static_cast<int>(direction->first), static_cast<int>(direction->second)};
        } else {
            s.linear_direction = horizontal ? Direction{0, 1} : Direction{1, 0};
        }
    } else {
        s.window_len = window_len.value_or(std::max<std::size_t>(1, base_short / 2));
        s.window_cross = window_cross.value_or(s.window_len);
        if (direction) throw ConfigError("only meaningful in linear mode", "scan.direction");
    }
    s.spatial_stride = spatial_stride.value_or(std::max<std::size_t>(1, s.window_len / 2));
    s.step_stride = step_stride.value_or(s.spatial_stride);
    if (s.spatial_stride == 0) throw ConfigError("must be positive", "scan.spatial_stride");
    if (s.step_stride == 0) throw ConfigError("must be positive", "scan.step_stride");
    if (s.spatial_stride > s.window_len) {
        throw ConfigError("spatial stride " + std::to_string(s.spatial_stride) + " exceeds window length " +
                              std::to_string(s.window_len) + " and would leave gaps",
                          "scan.spatial_stride,scan.window_len");
    }

    if (s.mode == ScanMode::linear) {
        if (!s.linear_direction.valid()) throw ConfigError("direction must be an axis-aligned unit vector", "scan.direction");
        const bool scan_vertical = s.linear_direction.vertical();
        const std::size_t along = scan_vertical ? base.height : base.width;
        const std::size_t across = scan_vertical ? base.width : base.height;
        if (s.window_cross != across) {
            throw ConfigError("window_cross " + std::to_string(s.window_cross) + " must equal the canvas extent " +
                                  std::to_string(across) + " across the scan axis",
                              "scan.window_cross");
        }
        s.n_steps = n_steps.value_or(steps_to_reach(along, s.window_len, s.step_stride, "scan.window_len,scan.step_stride"));
        // Backward scans start at the far end of the canvas.
        if (!p_init_given && s.linear_direction.dh + s.linear_direction.dw < 0) {
            const long start = static_cast<long>((s.n_steps - 1) * s.step_stride);
            s.p_init = scan_vertical ? Cell{start, 0} : Cell{0, start};
        }
    } else {
        const std::size_t r = rows.value_or(steps_to_reach(base.height, s.window_cross, s.step_stride,
                                                           "scan.window_cross,scan.step_stride"));
        const std::size_t c = cols.value_or(steps_to_reach(base.width, s.window_len, s.step_stride,
                                                           "scan.window_len,scan.step_stride"));
        s.snake_rows = r;
        s.snake_cols = c;
        s.n_steps = n_steps.value_or(r * c);
    }
    s.validate();

    // Every footprint must sit inside the base canvas, and together they must
    // cover it.
    const Trajectory traj = plan(s);
    for (std::size_t t = 1; t <= traj.size(); ++t) {
        const Footprint f = traj.footprint(t);
        if (f.origin.h < 0 || f.origin.w < 0 || f.bottom() > static_cast<long>(base.height) ||
            f.right() > static_cast<long>(base.width)) {
            throw ConfigError("window " + std::to_string(t) + " at (" + std::to_string(f.origin.h) + ", " +
                                  std::to_string(f.origin.w) + ") leaves the canvas",
                              "scan.n_steps,scan.p_init,scan.step_stride");
        }
    }
    const CoverageReport cov = coverage_report(traj, base);
    if (!cov.complete()) {
        throw ConfigError("canvas not reachable by the trajectory: " + cov.summary(), "scan.n_steps,canvas.aspect");
    }

    cfg.rope.validate();

    if (cfg.fusion.frames_per_block == 0) throw ConfigError("must be positive", "fusion.frames_per_block");
    if (cfg.fusion.overlap) {
        const Extent frame = s.frame_extent();
        const std::size_t limit = std::min(frame.height, frame.width);
        if (*cfg.fusion.overlap >= limit) {
            throw ConfigError("overlap " + std::to_string(*cfg.fusion.overlap) + " must be below the window extent " +
                                  std::to_string(limit),
                              "fusion.overlap,scan.window_len");
        }
        if (s.window_len > s.step_stride && *cfg.fusion.overlap > s.window_len - s.step_stride) {
            throw ConfigError("overlap exceeds the geometric window overlap " + std::to_string(s.window_len - s.step_stride),
                              "fusion.overlap,scan.window_len,scan.step_stride");
        }
    }
    if (cfg.tap_block_size == 0) throw ConfigError("must be positive", "tap.block_size");
    if (cfg.source.channels == 0) throw ConfigError("must be positive", "source.channels");
    if (cfg.source.frame_noise < 0.0) throw ConfigError("must be non-negative", "source.frame_noise");
    if (cfg.source.sample_steps == 0) throw ConfigError("must be positive", "source.sample_steps");
    if (cfg.source.kind == SourceKind::sampler) {
        const Extent frame = s.frame_extent();
        if (frame.cells() > 1024) {
            throw ConfigError("sampler tiles are limited to 1024 tokens, window has " + std::to_string(frame.cells()),
                              "source.kind,scan.window_len");
        }
        if (cfg.source.checkpoint.empty() && cfg.source.train_iterations == 0) {
            throw ConfigError("sampler needs a checkpoint or training iterations",
                              "source.checkpoint,source.train_iterations");
        }
    }
    if (cfg.metrics.separation < 2) throw ConfigError("must be >= 2", "metrics.separation");
    if (cfg.metrics.out_dim == 0) throw ConfigError("must be positive", "metrics.out_dim");
    if (cfg.metrics.style_grid == 0) throw ConfigError("must be positive", "metrics.style_grid");
    if (cfg.io.out_dir.empty()) throw ConfigError("must not be empty", "io.out_dir");
    return cfg;
}

inline PipelineConfig parse_config_string(const std::string& text, const ConfigValues& overrides = {}) {
    ConfigValues values = parse_config_text(text);
    for (const auto& [k, v] : overrides) values[k] = v;
    return resolve_config(values);
}

inline PipelineConfig parse_config(const std::filesystem::path& path, const ConfigValues& overrides = {}) {
    ConfigValues values = parse_config_text(detail::read_file(path), path.string());
    for (const auto& [k, v] : overrides) values[k] = v;
    return resolve_config(values);
}

/// Every key with its resolved value.
inline std::string to_text(const PipelineConfig& c) {
    using namespace detail;
    std::ostringstream os;
    auto opt = [](const std::optional<double>& v) { return v ? fmt_double(*v) : std::string(); };
    os << "canvas.short_side = " << c.canvas.short_side << "\n";
    os << "canvas.aspect = " << c.canvas.aspect_num << ":" << c.canvas.aspect_den << "\n";
    os << "canvas.orientation = " << enum_name(c.canvas.orientation, kOrientations) << "\n";
    os << "scan.mode = " << enum_name(c.scan.mode, kModes) << "\n";
    os << "scan.window_len = " << c.scan.window_len << "\n";
    os << "scan.window_cross = " << c.scan.window_cross << "\n";
    os << "scan.spatial_stride = " << c.scan.spatial_stride << "\n";
    os << "scan.step_stride = " << c.scan.step_stride << "\n";
    os << "scan.n_steps = " << c.scan.n_steps << "\n";
    os << "scan.p_init = " << c.scan.p_init.h << "," << c.scan.p_init.w << "\n";
    if (c.scan.mode == ScanMode::linear) {
        os << "scan.direction = " << c.scan.linear_direction.dh << "," << c.scan.linear_direction.dw << "\n";
    } else {
        os << "scan.snake_rows = " << c.scan.snake_rows << "\n";
        os << "scan.snake_cols = " << c.scan.snake_cols << "\n";
    }
    os << "rope.base = " << fmt_double(c.rope.base) << "\n";
    os << "rope.head_dim = " << c.rope.head_dim << "\n";
    os << "rope.axis_split = " << c.rope.axis_split[0] << "," << c.rope.axis_split[1] << "," << c.rope.axis_split[2]
       << "\n";
    os << "fusion.statistic = " << enum_name(c.fusion.statistic, kStatistics) << "\n";
    os << "fusion.overlap = " << (c.fusion.overlap ? std::to_string(*c.fusion.overlap) : "auto") << "\n";
    os << "fusion.frames_per_block = " << c.fusion.frames_per_block << "\n";
    os << "tap.block_size = " << c.tap_block_size << "\n";
    os << "source.kind = " << enum_name(c.source.kind, kSources) << "\n";
    os << "source.pattern = " << enum_name(c.source.pattern, kPatterns) << "\n";
    os << "source.channels = " << c.source.channels << "\n";
    os << "source.frame_noise = " << fmt_double(c.source.frame_noise) << "\n";
    os << "source.flicker = " << fmt_double(c.source.flicker) << "\n";
    os << "source.checkpoint = " << c.source.checkpoint << "\n";
    os << "source.sample_steps = " << c.source.sample_steps << "\n";
    os << "source.train_iterations = " << c.source.train_iterations << "\n";
    os << "source.learning_rate = " << fmt_double(c.source.learning_rate) << "\n";
    os << "enhancer.kind = " << enum_name(c.enhancer.kind, kEnhancers) << "\n";
    os << "enhancer.scale = " << fmt_double(c.enhancer.scale) << "\n";
    os << "metrics.separation = " << c.metrics.separation << "\n";
    os << "metrics.extractor = " << enum_name(c.metrics.extractor, kExtractors) << "\n";
    os << "metrics.features_dir = " << c.metrics.features_dir << "\n";
    os << "metrics.out_dim = " << c.metrics.out_dim << "\n";
    os << "metrics.style_grid = " << c.metrics.style_grid << "\n";
    os << "metrics.fid = " << opt(c.metrics.fid) << "\n";
    os << "metrics.clip = " << opt(c.metrics.clip) << "\n";
    os << "metrics.kid = " << opt(c.metrics.kid) << "\n";
    os << "io.out_dir = " << c.io.out_dir << "\n";
    os << "io.seed = " << c.io.seed << "\n";
    os << "io.write_tiles = " << (c.io.write_tiles ? "true" : "false") << "\n";
    os << "io.tiles_dir = " << c.io.tiles_dir << "\n";
    return os.str();
}

}  // namespace scrollscape
