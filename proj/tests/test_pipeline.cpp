#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>
#include <string>

#include "scrollscape/scrollscape.hpp"
#include "support.hpp"

using namespace scrollscape;
namespace fs = std::filesystem;

namespace {

PipelineConfig small_config(const ConfigValues& extra = {}) {
    ConfigValues v{{"canvas.short_side", "32"}, {"canvas.aspect", "8"}, {"source.frame_noise", "0.01"}};
    for (const auto& [k, x] : extra) v[k] = x;
    return resolve_config(v);
}

Image ramp_image(std::size_t h, std::size_t w, double a, double b, double c) {
    Image img(h, w, 1);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) img(y, x) = a * static_cast<double>(y) + b * static_cast<double>(x) + c;
    }
    return img;
}

// Returns tiles one pixel too narrow.
class BrokenEnhancer : public TileEnhancer {
public:
    std::string name() const override { return "broken"; }
    std::size_t scale() const override { return 2; }
    Image enhance(const Image& t) const override { return Image(t.height() * 2, t.width() * 2 - 1, t.channels()); }
};

std::string file_bytes(const fs::path& p) { return detail::read_file(p); }

}  // namespace

TEST(TileLedger, TracksPeak) {
    TileLedger l;
    l.acquire(10);
    l.acquire(5);
    l.release(10);
    l.acquire(3);
    EXPECT_EQ(l.live(), 8u);
    EXPECT_EQ(l.peak(), 15u);
}

TEST(Bilinear, Examples) {
    const BilinearUpscaler up(2);
    const Image four = ramp_image(4, 4, 0.1, 0.2, 0.3);
    const Image out = up.enhance(four);
    EXPECT_EQ(out.extent(), (Extent{8, 8}));

    // Output centre o maps to source (o + 0.5) / 2 - 0.5.
    for (std::size_t y = 0; y < 8; ++y) {
        for (std::size_t x = 0; x < 8; ++x) {
            const double sy = (y + 0.5) / 2.0 - 0.5, sx = (x + 0.5) / 2.0 - 0.5;
            EXPECT_NEAR(out(y, x), 0.1 * sy + 0.2 * sx + 0.3, 1e-12);
        }
    }

    const Image flat = up.enhance(Image(3, 5, 2, 0.625));
    for (double v : flat.data()) EXPECT_NEAR(v, 0.625, 1e-15);
    const Image dot = BilinearUpscaler(3).enhance(Image(1, 1, 1, 0.4));
    EXPECT_EQ(dot.extent(), (Extent{3, 3}));
    for (double v : dot.data()) EXPECT_EQ(v, 0.4);

    EXPECT_THROW(BilinearUpscaler(0), ConfigError);
    EXPECT_EQ(make_enhancer(false, 1)->name(), "identity");
    EXPECT_EQ(make_enhancer(true, 4)->scale(), 4u);
}

TEST(Bilinear, ReproducesLinearRamp) {
    const Image src = ramp_image(6, 10, -0.05, 0.03, 0.5);
    const Image out = BilinearUpscaler(4).enhance(src);
    for (std::size_t y = 0; y < out.height(); ++y) {
        for (std::size_t x = 0; x < out.width(); ++x) {
            const double sy = (y + 0.5) / 4.0 - 0.5, sx = (x + 0.5) / 4.0 - 0.5;
            EXPECT_NEAR(out(y, x), -0.05 * sy + 0.03 * sx + 0.5, 1e-6);
        }
    }
}

TEST(Enhancer, MismatchRaises) {
    const BrokenEnhancer bad;
    try {
        enhance_checked(bad, Image(4, 4, 1), 3);
        FAIL();
    } catch (const EnhancerError& e) {
        EXPECT_NE(std::string(e.what()).find("block 3"), std::string::npos) << e.what();
    }
    GenerateOptions opts;
    opts.enhancer = &bad;
    opts.write = false;
    EXPECT_THROW(run_generate(small_config(), opts), EnhancerError);
}

TEST(Generate, GradientSourceReproducesGlobalGradient) {
    const PipelineConfig cfg = small_config({{"source.pattern", "gradient"}, {"source.frame_noise", "0"}});
    GenerateOptions opts;
    opts.write = false;
    const RunResult r = run_generate(cfg, opts);
    const ProceduralPattern pat(Pattern::gradient, cfg.base_extent(), 3, cfg.io.seed);
    const Image& img = r.panorama.image;
    ASSERT_EQ(img.extent(), (Extent{32, 256}));
    double worst = 0.0;
    for (std::size_t h = 0; h < img.height(); ++h) {
        for (std::size_t w = 0; w < img.width(); ++w) {
            for (std::size_t c = 0; c < 3; ++c) {
                worst = std::max(worst, std::abs(img(h, w, c) - pat(static_cast<long>(h), static_cast<long>(w), c)));
            }
        }
    }
    EXPECT_LT(worst, 1e-6);
    EXPECT_EQ(r.panorama.uncovered_count, 0u);
    // The flickered frame is never the consensus choice.
    for (const WindowRecord& w : r.windows) {
        const auto& s = w.choice.statistics;
        EXPECT_NEAR(s[w.choice.index], w.choice.median, 1e-12);
    }
}

TEST(Generate, UpscaledGradientStaysLinear) {
    const PipelineConfig cfg = small_config({{"source.pattern", "gradient"},
                                             {"source.frame_noise", "0"},
                                             {"enhancer.kind", "upscale"},
                                             {"enhancer.scale", "2"}});
    GenerateOptions opts;
    opts.write = false;
    const RunResult r = run_generate(cfg, opts);
    ASSERT_EQ(r.panorama.image.extent(), (Extent{32, 256}));
    const ProceduralPattern pat(Pattern::gradient, cfg.base_extent(), 3, 0);
    // The base gradient is affine, so the fused result is that affine map at
    // the output pixel centres.
    const double g0 = pat(0, 0, 0), gw = pat(0, 1, 0) - g0, gh = pat(1, 0, 0) - g0;
    double worst = 0.0;
    for (std::size_t h = 0; h < 32; ++h) {
        for (std::size_t w = 0; w < 256; ++w) {
            const double sh = (h + 0.5) / 2.0 - 0.5, sw = (w + 0.5) / 2.0 - 0.5;
            worst = std::max(worst, std::abs(r.panorama.image(h, w, 0) - (g0 + gh * sh + gw * sw)));
        }
    }
    EXPECT_LT(worst, 1e-6);
}

TEST(Generate, SingleWindowIsTheTile) {
    // A 1:1 canvas is one window; the panorama is the selected frame.
    const PipelineConfig cfg = small_config({{"canvas.aspect", "1"}, {"source.flicker", "0"}});
    ASSERT_EQ(cfg.scan.n_steps, 1u);
    GenerateOptions opts;
    opts.write = false;
    const RunResult r = run_generate(cfg, opts);
    const ProceduralSource src(cfg);
    const auto frames = src.frames({1, {{0, 0}, {32, 32}}, cfg.fusion.frames_per_block});
    const Image& tile = frames[r.windows.at(0).choice.index];
    for (std::size_t i = 0; i < tile.size(); ++i) EXPECT_EQ(r.panorama.image.data()[i], tile.data()[i]);
}

TEST(Generate, DeterministicOutputs) {
    const auto a_dir = scrollscape::testing::scratch_dir("det_a");
    const auto b_dir = scrollscape::testing::scratch_dir("det_b");
    PipelineConfig a = small_config({{"io.seed", "5"}});
    PipelineConfig b = a;
    a.io.out_dir = a_dir.string();
    b.io.out_dir = b_dir.string();
    run_generate(a);
    run_generate(b);
    for (const char* f : {"panorama.sstf", "panorama.ppm", "uncovered.pgm", "seams.csv", "trajectory.txt"}) {
        EXPECT_EQ(file_bytes(a_dir / f), file_bytes(b_dir / f)) << f;
    }
    PipelineConfig c = a;
    c.io.seed = 6;
    c.io.out_dir = (a_dir / "other").string();
    run_generate(c);
    EXPECT_NE(file_bytes(a_dir / "panorama.sstf"), file_bytes(a_dir / "other" / "panorama.sstf"));
}

TEST(Generate, PeakMemoryIndependentOfLength) {
    GenerateOptions opts;
    opts.write = false;
    const RunResult shorter = run_generate(small_config({{"canvas.aspect", "4"}}), opts);
    const RunResult longer = run_generate(small_config({{"canvas.aspect", "16"}}), opts);
    EXPECT_GT(longer.windows.size(), 2 * shorter.windows.size());
    EXPECT_EQ(shorter.peak_tile_bytes, longer.peak_tile_bytes);
    // One full block of enhanced frames plus one raw frame in flight.
    const std::size_t frame = 32 * 32 * 3 * sizeof(double);
    EXPECT_EQ(longer.block_tile_bytes, 4 * 3 * frame);
    EXPECT_EQ(longer.peak_tile_bytes, 4 * 3 * frame + frame);
}

TEST(Generate, ManifestListsEveryWindow) {
    const auto dir = scrollscape::testing::scratch_dir("manifest");
    PipelineConfig cfg = small_config({{"io.write_tiles", "true"}});
    cfg.io.out_dir = dir.string();
    const RunResult r = run_generate(cfg);
    std::istringstream in(file_bytes(dir / "manifest.txt"));
    std::string line;
    std::size_t windows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("window t=", 0) != 0) continue;
        ++windows;
        const auto tile = line.substr(line.find("tile=") + 5);
        EXPECT_TRUE(fs::exists(dir / tile)) << tile;
    }
    EXPECT_EQ(windows, r.windows.size());
    EXPECT_EQ(windows, cfg.scan.n_steps);
    EXPECT_NE(r.manifest.find("peak_tile_bytes = " + std::to_string(r.peak_tile_bytes)), std::string::npos);
}

TEST(Generate, CoverageGapRaisesBeforeWork) {
    PipelineConfig cfg = small_config();
    cfg.scan.n_steps -= 2;
    GenerateOptions opts;
    opts.write = false;
    EXPECT_THROW(run_generate(cfg, opts), CoverageError);
}

TEST(Fuse, MatchesGenerate) {
    const auto dir = scrollscape::testing::scratch_dir("fuse");
    PipelineConfig cfg = small_config({{"io.write_tiles", "true"}, {"scan.mode", "snake"}});
    cfg.io.out_dir = dir.string();
    const RunResult gen = run_generate(cfg);

    PipelineConfig fcfg = cfg;
    fcfg.io.tiles_dir = (dir / "tiles").string();
    fcfg.io.out_dir = (dir / "fused").string();
    const RunResult fused = run_fuse(fcfg);
    ASSERT_EQ(fused.panorama.image.extent(), gen.panorama.image.extent());
    double worst = 0.0;
    for (std::size_t i = 0; i < gen.panorama.image.size(); ++i) {
        worst = std::max(worst, std::abs(gen.panorama.image.data()[i] - fused.panorama.image.data()[i]));
    }
    EXPECT_LT(worst, 1e-6);  // tiles are stored as f32
    EXPECT_TRUE(fs::exists(dir / "fused" / "panorama.sstf"));

    fcfg.io.tiles_dir = (dir / "nope").string();
    EXPECT_THROW(run_fuse(fcfg, false), IoError);
    fcfg.io.tiles_dir.clear();
    EXPECT_THROW(run_fuse(fcfg, false), ConfigError);
}

TEST(Metrics, ConstantPanorama) {
    const auto dir = scrollscape::testing::scratch_dir("metrics_const");
    TensorArchive ar;
    ar.add("panorama", to_tensor(Image(16, 128, 3, 0.5)));
    write_sstf(dir / "p.sstf", ar);
    PipelineConfig cfg = small_config({{"metrics.fid", "12.5"}});
    cfg.io.out_dir = dir.string();
    const MetricsReport rep = run_metrics(dir / "p.sstf", cfg);
    EXPECT_EQ(rep.patches, 8u);
    EXPECT_EQ(*rep.style_loss, 0.0);
    EXPECT_EQ(*rep.gsd_semantic, 1.0);
    EXPECT_EQ(*rep.fid, 12.5);
    EXPECT_NE(file_bytes(dir / "metrics.csv").find("12.5,,,0,"), std::string::npos);
    EXPECT_TRUE(fs::exists(dir / "metrics.json"));
}

TEST(Metrics, ExternalBackendMatchesFallback) {
    const auto dir = scrollscape::testing::scratch_dir("metrics_ext");
    PipelineConfig cfg = small_config();
    cfg.io.out_dir = dir.string();
    run_generate(cfg);
    const MetricsReport fb = run_metrics(dir / "panorama.sstf", cfg, false);

    const Image pano = load_panorama(dir / "panorama.sstf");
    export_features(partition_patches(pano), FallbackBackend(cfg.metrics.out_dim, cfg.metrics.style_grid),
                    dir / "features");
    PipelineConfig ecfg = cfg;
    ecfg.metrics.extractor = ExtractorKind::external;
    ecfg.metrics.features_dir = (dir / "features").string();
    const MetricsReport ext = run_metrics(dir / "panorama.sstf", ecfg, false);
    EXPECT_EQ(ext.extractor, "external");
    // Features pass through f32 files.
    EXPECT_NEAR(*fb.style_loss, *ext.style_loss, 1e-9);
    EXPECT_NEAR(*fb.gsd_perceptual, *ext.gsd_perceptual, 1e-6);
    EXPECT_NEAR(*fb.gsd_semantic, *ext.gsd_semantic, 1e-6);

    ecfg.metrics.features_dir.clear();
    EXPECT_THROW(make_backend(ecfg), ConfigError);
}

TEST(Sampler, CheckpointRoundTrip) {
    const auto dir = scrollscape::testing::scratch_dir("ckpt");
    const PipelineConfig cfg =
        small_config({{"canvas.short_side", "8"}, {"source.kind", "sampler"}, {"source.train_iterations", "3"}});
    const VectorFieldNet net = VectorFieldNet::initialized(sampler_shape(cfg), 4);
    save_checkpoint(net, dir / "c.sstf");
    const VectorFieldNet back = load_checkpoint(dir / "c.sstf");
    // Parameters are stored as f32.
    ASSERT_EQ(back.parameter_count(), net.parameter_count());
    for (std::size_t i = 0; i < net.parameter_count(); ++i) {
        EXPECT_EQ(back.parameters()[i], static_cast<double>(static_cast<float>(net.parameters()[i])));
    }
    save_checkpoint(back, dir / "d.sstf");
    EXPECT_EQ(file_bytes(dir / "c.sstf"), file_bytes(dir / "d.sstf"));
    EXPECT_EQ(back.shape().hidden, net.shape().hidden);
    EXPECT_THROW(load_checkpoint(dir / "missing.sstf"), IoError);
}

TEST(Sampler, SmallEndToEndRun) {
    const auto dir = scrollscape::testing::scratch_dir("sampler_run");
    PipelineConfig cfg = small_config({{"canvas.short_side", "8"},
                                       {"source.kind", "sampler"},
                                       {"source.train_iterations", "20"},
                                       {"source.sample_steps", "4"}});
    cfg.io.out_dir = dir.string();
    const TrainReport tr = run_train(cfg);
    EXPECT_EQ(tr.losses.size(), 20u);
    EXPECT_TRUE(fs::exists(dir / "train_loss.csv"));

    cfg.source.checkpoint = tr.checkpoint.string();
    GenerateOptions opts;
    opts.write = false;
    const RunResult a = run_generate(cfg, opts);
    const RunResult b = run_generate(cfg, opts);
    EXPECT_EQ(a.panorama.image.extent(), (Extent{8, 64}));
    EXPECT_EQ(a.panorama.uncovered_count, 0u);
    for (std::size_t i = 0; i < a.panorama.image.size(); ++i) {
        ASSERT_TRUE(std::isfinite(a.panorama.image.data()[i]));
        ASSERT_EQ(a.panorama.image.data()[i], b.panorama.image.data()[i]);
    }
}

TEST(Inspect, ListsWindowsAndBlocks) {
    const std::string text = inspect_text(small_config());
    EXPECT_NE(text.find("uncovered cells 0"), std::string::npos);
    EXPECT_NE(text.find("# blocks 4"), std::string::npos);
}
