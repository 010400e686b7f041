#pragma once

// End-to-end runs: plan -> generate -> enhance -> select -> fuse -> report.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "scrollscape/config.hpp"
#include "scrollscape/enhancer.hpp"
#include "scrollscape/error.hpp"
#include "scrollscape/formats.hpp"
#include "scrollscape/fusion.hpp"
#include "scrollscape/image.hpp"
#include "scrollscape/metrics.hpp"
#include "scrollscape/scan_trajectory.hpp"
#include "scrollscape/sources.hpp"

namespace scrollscape {

/// Allocation accounting for tile data held by the orchestrator.
class TileLedger {
public:
    void acquire(std::size_t bytes) {
        live_ += bytes;
        peak_ = std::max(peak_, live_);
    }
    void release(std::size_t bytes) {
        if (bytes > live_) throw UsageError("TileLedger: releasing more than is held");
        live_ -= bytes;
    }
    std::size_t live() const { return live_; }
    std::size_t peak() const { return peak_; }

private:
    std::size_t live_ = 0;
    std::size_t peak_ = 0;
};

/// One fused window, as listed in the manifest.
struct WindowRecord {
    std::size_t t = 1;
    std::size_t block = 1;
    Cell anchor;       // output pixels
    Cell base_anchor;  // generation cells
    WindowSpec interval;
    Extent extent;  // output pixels
    EdgeOverlaps overlaps;
    ConsensusChoice choice;
    std::string tile_file;  // relative to the output directory; empty if not written
};

struct RunResult {
    FusedPanorama panorama;
    Trajectory trajectory;
    TapPartition partition;
    std::vector<WindowRecord> windows;
    SeamReport seams;
    std::size_t peak_tile_bytes = 0;
    std::size_t block_tile_bytes = 0;  // tile data of the largest single block
    std::string manifest;
};

namespace detail {

inline std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::string tile_name(std::size_t t) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "window_%04zu.sstf", t);
    return buf;
}

inline Footprint scaled(const Footprint& f, std::size_t k) {
    const auto s = static_cast<long>(k);
    return {{f.origin.h * s, f.origin.w * s}, {f.extent.height * k, f.extent.width * k}};
}

/// Geometric overlaps, each capped at `cap` output pixels.
inline EdgeOverlaps fusion_overlaps(const std::vector<Footprint>& fps, std::size_t i, std::size_t cap) {
    EdgeOverlaps ov = ramp_overlaps(fps, i);
    for (std::size_t* e : {&ov.top, &ov.bottom, &ov.left, &ov.right}) *e = std::min(*e, cap);
    return ov;
}

inline std::size_t overlap_cap(const PipelineConfig& cfg, std::size_t k) {
    return cfg.fusion.overlap ? *cfg.fusion.overlap * k : std::numeric_limits<std::size_t>::max();
}

inline Tensor frames_tensor(const std::vector<Image>& frames) {
    const Image& f = frames.front();
    Tensor t;
    t.shape = {static_cast<std::uint32_t>(frames.size()), static_cast<std::uint32_t>(f.height()),
               static_cast<std::uint32_t>(f.width()), static_cast<std::uint32_t>(f.channels())};
    t.values.reserve(frames.size() * f.size());
    for (const Image& img : frames) {
        for (double v : img.data()) t.values.push_back(static_cast<float>(v));
    }
    return t;
}

inline std::vector<Image> frames_from_tensor(const Tensor& t, const std::string& source) {
    if (t.shape.size() != 4) throw ParseError(ParseErrorKind::malformed, source + ": frames must be rank 4");
    const std::size_t n = t.shape[0], H = t.shape[1], W = t.shape[2], C = t.shape[3];
    std::vector<Image> out;
    out.reserve(n);
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Image img(H, W, C);
        for (double& v : img.data()) v = t.values[k++];
        out.push_back(std::move(img));
    }
    return out;
}

inline Image uncovered_mask(const FusedPanorama& p) {
    Image m(p.image.height(), p.image.width(), 1);
    auto d = m.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = p.uncovered[i] ? 1.0 : 0.0;
    return m;
}

inline SeamAxis long_axis(Extent e) { return e.width >= e.height ? SeamAxis::columns : SeamAxis::rows; }

inline std::string stats_text(const std::vector<double>& s) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? ";" : "") << s[i];
    return os.str();
}

inline std::string manifest_text(const std::string& command, const PipelineConfig& cfg, const RunResult& r,
                                 const std::string& source, const std::string& enhancer, std::size_t scale) {
    std::ostringstream os;
    os.precision(17);
    const Image& img = r.panorama.image;
    os << "# scrollscape manifest\n";
    os << "command = " << command << "\n";
    os << "created = " << utc_timestamp() << "\n";
    os << "source = " << source << "\n";
    os << "enhancer = " << enhancer << " x" << scale << "\n";
    os << "seed = " << cfg.io.seed << "\n";
    os << "canvas = " << img.height() << " " << img.width() << " " << img.channels() << "\n";
    os << "windows = " << r.windows.size() << "\n";
    os << "tap_blocks = " << r.partition.blocks.size() << "\n";
    os << "peak_tile_bytes = " << r.peak_tile_bytes << "\n";
    os << "uncovered = " << r.panorama.uncovered_count << "\n";
    os << "\n[config]\n" << to_text(cfg);
    os << "\n[blocks]\n# block first last\n";
    for (std::size_t b = 0; b < r.partition.blocks.size(); ++b) {
        const TapBlock& blk = r.partition.blocks[b];
        os << "block " << b + 1 << " " << blk.first << " " << blk.last << "\n";
    }
    os << "\n[windows]\n";
    for (const WindowRecord& w : r.windows) {
        os << "window t=" << w.t << " block=" << w.block << " anchor=" << w.anchor.h << "," << w.anchor.w
           << " base_anchor=" << w.base_anchor.h << "," << w.base_anchor.w << " interval=" << w.interval.interval_start << ","
           << w.interval.interval_end << " extent=" << w.extent.height << "x" << w.extent.width << " overlaps=" << w.overlaps.top
           << "," << w.overlaps.bottom << "," << w.overlaps.left << "," << w.overlaps.right
           << " mcs_index=" << w.choice.index << " mcs_median=" << w.choice.median
           << " statistics=" << stats_text(w.choice.statistics) << " tile=" << (w.tile_file.empty() ? "-" : w.tile_file)
           << "\n";
    }
    return os.str();
}

inline void write_outputs(const std::filesystem::path& dir, const RunResult& r) {
    TensorArchive ar;
    ar.add("panorama", to_tensor(r.panorama.image));
    write_sstf(dir / "panorama.sstf", ar);
    const std::size_t C = r.panorama.image.channels();
    if (C == 1 || C == 3) export_image(r.panorama.image, dir / (C == 3 ? "panorama.ppm" : "panorama.pgm"));
    export_image(uncovered_mask(r.panorama), dir / "uncovered.pgm");
    write_file(dir / "seams.csv", r.seams.to_csv());
    write_file(dir / "manifest.txt", r.manifest);
    write_file(dir / "trajectory.txt", to_text(r.trajectory));
}

inline std::unique_ptr<TileSource> make_source(const PipelineConfig& cfg) {
    if (cfg.source.kind == SourceKind::procedural) return std::make_unique<ProceduralSource>(cfg);
    return std::make_unique<SamplerSource>(SamplerSource::from_config(cfg));
}

}  // namespace detail

struct GenerateOptions {
    const TileSource* source = nullptr;      // default: from cfg.source
    const TileEnhancer* enhancer = nullptr;  // default: from cfg.enhancer
    bool write = true;                       // write files under cfg.io.out_dir
};

/// Streams TAP blocks through generation, enhancement, consensus and fusion.
/// Tile data held at any time is bounded by one block.
inline RunResult run_generate(const PipelineConfig& cfg, const GenerateOptions& opts = {}) {
    std::unique_ptr<TileSource> own_source;
    std::unique_ptr<TileEnhancer> own_enhancer;
    const TileSource* source = opts.source;
    const TileEnhancer* enhancer = opts.enhancer;
    if (!source) {
        own_source = detail::make_source(cfg);
        source = own_source.get();
    }
    if (!enhancer) {
        own_enhancer = make_enhancer(cfg.enhancer.kind == EnhancerKind::upscale, cfg.scale());
        enhancer = own_enhancer.get();
    }
    const std::size_t k = enhancer->scale();
    if (k == 0) throw EnhancerError("enhancer '" + enhancer->name() + "' reports scale 0");

    RunResult r;
    r.trajectory = plan(cfg.scan);
    const Extent base = cfg.base_extent();
    const CoverageReport cov = coverage_report(r.trajectory, base);
    if (!cov.complete()) throw CoverageError("trajectory leaves the canvas uncovered: " + cov.summary());
    r.partition = tap_partition(r.trajectory, cfg.tap_block_size);

    const Extent out_extent{base.height * k, base.width * k};
    std::vector<Footprint> fps;
    for (std::size_t t = 1; t <= r.trajectory.size(); ++t) fps.push_back(detail::scaled(r.trajectory.footprint(t), k));
    const std::size_t cap = detail::overlap_cap(cfg, k);

    const std::filesystem::path out_dir = cfg.io.out_dir;
    PanoramaCanvas canvas(out_extent, source->channels());
    TileLedger ledger;

    for (std::size_t b = 0; b < r.partition.blocks.size(); ++b) {
        const TapBlock& blk = r.partition.blocks[b];
        std::vector<TileBlock> held;
        std::size_t block_bytes = 0;
        for (std::size_t t = blk.first; t <= blk.last; ++t) {
            const Footprint base_fp = r.trajectory.footprint(t);
            TileBlock tb;
            tb.t = t;
            tb.anchor = fps[t - 1].origin;
            for (Image& raw : source->frames({t, base_fp, cfg.fusion.frames_per_block})) {
                if (raw.extent() != base_fp.extent || raw.channels() != source->channels()) {
                    throw DimensionError("source '" + source->name() + "' returned a frame of the wrong shape for window " +
                                         std::to_string(t));
                }
                ledger.acquire(raw.bytes());
                Image up = enhance_checked(*enhancer, raw, b + 1);
                ledger.acquire(up.bytes());
                ledger.release(raw.bytes());
                raw = Image();
                block_bytes += up.bytes();
                tb.frames.push_back(std::move(up));
            }
            held.push_back(std::move(tb));
        }
        r.block_tile_bytes = std::max(r.block_tile_bytes, block_bytes);

        for (TileBlock& tb : held) {
            WindowRecord rec;
            rec.t = tb.t;
            rec.block = b + 1;
            rec.anchor = tb.anchor;
            rec.base_anchor = r.trajectory.anchor(tb.t);
            rec.interval = window_interval(r.trajectory, tb.t);
            rec.extent = fps[tb.t - 1].extent;
            rec.overlaps = detail::fusion_overlaps(fps, tb.t - 1, cap);
            rec.choice = median_consensus_choice(tb, cfg.fusion.statistic);
            canvas.accumulate(tb.frames[rec.choice.index], build_ramp_mask(rec.extent, rec.overlaps), tb.anchor, b + 1);
            if (cfg.io.write_tiles && opts.write) {
                TensorArchive ar;
                ar.add("anchor", {{2}, {static_cast<float>(tb.anchor.h), static_cast<float>(tb.anchor.w)}});
                ar.add("window", {{3},
                                  {static_cast<float>(tb.t), static_cast<float>(rec.interval.interval_start),
                                   static_cast<float>(rec.interval.interval_end)}});
                ar.add("frames", detail::frames_tensor(tb.frames));
                rec.tile_file = "tiles/" + detail::tile_name(tb.t);
                write_sstf(out_dir / rec.tile_file, ar);
            }
            r.windows.push_back(std::move(rec));
        }
        for (const TileBlock& tb : held) {
            for (const Image& f : tb.frames) ledger.release(f.bytes());
        }
    }
    r.peak_tile_bytes = ledger.peak();
    r.panorama = canvas.finalize();
    r.seams = seam_energy(r.panorama.image, footprint_seams(fps, out_extent, detail::long_axis(out_extent)),
                          detail::long_axis(out_extent));
    r.manifest = detail::manifest_text("generate", cfg, r, source->name(), enhancer->name(), k);
    if (opts.write) detail::write_outputs(out_dir, r);
    return r;
}

/// Fuses tiles previously written by `generate` (io.write_tiles) from
/// io.tiles_dir. The canvas is the bounding box of the tile footprints.
inline RunResult run_fuse(const PipelineConfig& cfg, bool write = true) {
    if (cfg.io.tiles_dir.empty()) throw ConfigError("fuse needs a tiles directory", "io.tiles_dir");
    const std::filesystem::path dir = cfg.io.tiles_dir;
    if (!std::filesystem::is_directory(dir)) throw IoError("tiles directory " + dir.string() + " not found");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        const std::string n = e.path().filename().string();
        if (e.is_regular_file() && n.rfind("window_", 0) == 0 && e.path().extension() == ".sstf") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no window_*.sstf tiles in " + dir.string());

    // First pass: geometry only.
    std::vector<Footprint> fps;
    std::vector<WindowSpec> intervals;
    std::size_t channels = 0;
    for (const auto& p : files) {
        const TensorArchive ar = read_sstf(p);
        if (!ar.contains("anchor") || !ar.contains("frames")) {
            throw ParseError(ParseErrorKind::malformed, p.string() + ": needs 'anchor' and 'frames' arrays");
        }
        const Tensor& a = ar.get("anchor");
        const Tensor& f = ar.get("frames");
        if (a.values.size() != 2 || f.shape.size() != 4 || f.shape[0] == 0) {
            throw ParseError(ParseErrorKind::malformed, p.string() + ": bad anchor or frames shape");
        }
        if (channels == 0) channels = f.shape[3];
        if (f.shape[3] != channels) throw DimensionError(p.string() + ": channel count differs from earlier tiles");
        fps.push_back({{static_cast<long>(a.values[0]), static_cast<long>(a.values[1])}, {f.shape[1], f.shape[2]}});
        WindowSpec ws;
        if (ar.contains("window") && ar.get("window").values.size() == 3) {
            const auto& w = ar.get("window").values;
            ws.t = static_cast<std::size_t>(w[0]);
            ws.interval_start = static_cast<long>(w[1]);
            ws.interval_end = static_cast<long>(w[2]);
        } else {
            ws.t = intervals.size() + 1;
        }
        intervals.push_back(ws);
    }
    long H = 0, W = 0;
    for (const Footprint& f : fps) {
        if (f.origin.h < 0 || f.origin.w < 0) {
            throw PlacementError("negative anchor", static_cast<std::size_t>(&f - fps.data()) + 1);
        }
        H = std::max(H, f.bottom());
        W = std::max(W, f.right());
    }
    const Extent extent{static_cast<std::size_t>(H), static_cast<std::size_t>(W)};
    const CoverageReport cov(extent, fps);
    if (!cov.complete()) throw CoverageError("tiles leave the canvas uncovered: " + cov.summary());

    RunResult r;
    r.trajectory.anchors.reserve(fps.size());
    for (const Footprint& f : fps) r.trajectory.anchors.push_back(f.origin);
    r.trajectory.config.n_steps = fps.size();
    r.partition = tap_partition(r.trajectory, cfg.tap_block_size);
    const std::size_t cap = detail::overlap_cap(cfg, cfg.scale());

    PanoramaCanvas canvas(extent, channels);
    TileLedger ledger;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const TensorArchive ar = read_sstf(files[i]);
        TileBlock tb;
        tb.t = i + 1;
        tb.anchor = fps[i].origin;
        tb.frames = detail::frames_from_tensor(ar.get("frames"), files[i].string());
        std::size_t bytes = 0;
        for (const Image& f : tb.frames) bytes += f.bytes();
        ledger.acquire(bytes);
        WindowRecord rec;
        rec.t = intervals[i].t;
        rec.block = i / cfg.tap_block_size + 1;
        rec.anchor = tb.anchor;
        rec.base_anchor = tb.anchor;
        rec.interval = intervals[i];
        rec.extent = fps[i].extent;
        rec.overlaps = detail::fusion_overlaps(fps, i, cap);
        rec.choice = median_consensus_choice(tb, cfg.fusion.statistic);
        canvas.accumulate(tb.frames[rec.choice.index], build_ramp_mask(rec.extent, rec.overlaps), tb.anchor, rec.block);
        rec.tile_file = files[i].string();
        r.windows.push_back(std::move(rec));
        ledger.release(bytes);
    }
    r.peak_tile_bytes = ledger.peak();
    r.panorama = canvas.finalize();
    r.seams = seam_energy(r.panorama.image, footprint_seams(fps, extent, detail::long_axis(extent)),
                          detail::long_axis(extent));
    r.manifest = detail::manifest_text("fuse", cfg, r, "tiles:" + dir.string(), "none", 1);
    if (write) detail::write_outputs(cfg.io.out_dir, r);
    return r;
}

inline std::unique_ptr<FeatureBackend> make_backend(const PipelineConfig& cfg) {
    if (cfg.metrics.extractor == ExtractorKind::fallback) {
        return std::make_unique<FallbackBackend>(cfg.metrics.out_dim, cfg.metrics.style_grid);
    }
    if (cfg.metrics.features_dir.empty()) {
        throw ConfigError("external extractor needs a features directory", "metrics.features_dir");
    }
    return std::make_unique<ExternalBackend>(cfg.metrics.features_dir);
}

/// Patch metrics of the panorama at `path`; writes metrics.csv and
/// metrics.json under io.out_dir when `write` is set.
inline MetricsReport run_metrics(const std::filesystem::path& path, const PipelineConfig& cfg, bool write = true) {
    const Image pano = load_panorama(path);
    const auto backend = make_backend(cfg);
    MetricsReport rep = evaluate_panorama(pano, *backend, cfg.metrics.separation);
    rep.fid = cfg.metrics.fid;
    rep.clip = cfg.metrics.clip;
    rep.kid = cfg.metrics.kid;
    if (write) {
        const std::filesystem::path out = cfg.io.out_dir;
        detail::write_file(out / "metrics.csv", rep.to_csv());
        detail::write_file(out / "metrics.json", rep.to_json().dump(2) + "\n");
    }
    return rep;
}

/// Resolved configuration, trajectory, TAP blocks and coverage as text.
inline std::string inspect_text(const PipelineConfig& cfg) {
    const Trajectory traj = plan(cfg.scan);
    const TapPartition part = tap_partition(traj, cfg.tap_block_size);
    const CoverageReport cov = coverage_report(traj, cfg.base_extent());
    std::ostringstream os;
    os << "# config\n" << to_text(cfg) << "\n";
    os << "# base canvas " << cfg.base_extent().height << "x" << cfg.base_extent().width << ", output "
       << cfg.canvas.extent().height << "x" << cfg.canvas.extent().width << "\n";
    os << "# coverage: " << cov.summary() << "\n";
    os << "# windows: t start end\n";
    for (std::size_t t = 1; t <= traj.size(); ++t) {
        const WindowSpec w = window_interval(traj, t);
        os << t << " " << w.interval_start << " " << w.interval_end << "\n";
    }
    os << "\n" << to_text(traj) << "\n" << to_text(part, traj);
    return os.str();
}

struct TrainReport {
    std::vector<double> losses;
    std::filesystem::path checkpoint;
};

/// Trains the sampler network for the configured geometry and writes
/// checkpoint.sstf and train_loss.csv under io.out_dir.
inline TrainReport run_train(const PipelineConfig& cfg) {
    VectorFieldNet net = VectorFieldNet::initialized(sampler_shape(cfg), cfg.io.seed);
    TrainReport rep;
    rep.losses = train_sampler(net, cfg);
    const std::filesystem::path out = cfg.io.out_dir;
    rep.checkpoint = out / "checkpoint.sstf";
    save_checkpoint(net, rep.checkpoint);
    std::ostringstream os;
    os.precision(17);
    os << "iteration,loss\n";
    for (std::size_t i = 0; i < rep.losses.size(); ++i) os << i + 1 << "," << rep.losses[i] << "\n";
    detail::write_file(out / "train_loss.csv", os.str());
    return rep;
}

}  // namespace scrollscape
