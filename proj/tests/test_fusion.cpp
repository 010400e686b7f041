#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "scrollscape/fusion.hpp"
#include "scrollscape/scan_trajectory.hpp"

using namespace scrollscape;

namespace {

Image constant(std::size_t h, std::size_t w, double v, std::size_t c = 1) { return Image(h, w, c, v); }

// Independent argmin-to-median: median by counting ranks, then a scan.
std::size_t brute_mcs(const std::vector<double>& s) {
    const std::size_t n = s.size();
    std::vector<double> sorted;
    for (std::size_t rank = 0; rank < n; ++rank) {
        // rank-th smallest without sorting the input: smallest value with at
        // least rank+1 elements <= it.
        double pick = 0.0;
        bool found = false;
        for (double cand : s) {
            std::size_t le = 0;
            for (double x : s) le += x <= cand;
            std::size_t lt = 0;
            for (double x : s) lt += x < cand;
            if (lt <= rank && rank < le) {
                pick = cand;
                found = true;
                break;
            }
        }
        EXPECT_TRUE(found);
        sorted.push_back(pick);
    }
    const double med = n % 2 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
    std::size_t best = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(s[i] - med) < std::abs(s[best] - med)) best = i;
    }
    return best;
}

}  // namespace

TEST(FrameStatistic, Examples) {
    EXPECT_DOUBLE_EQ(frame_statistic(constant(4, 5, 3.0)), 3.0);
    EXPECT_DOUBLE_EQ(frame_statistic(constant(4, 5, 0.0)), 0.0);
    Image g(2, 1, 1);
    g(0, 0) = 0.2;
    g(1, 0) = 0.8;
    EXPECT_DOUBLE_EQ(frame_statistic(g), 0.5);
    EXPECT_THROW(frame_statistic(Image()), UsageError);
}

TEST(FrameStatistic, Kinds) {
    Image rgb(1, 1, 3);
    rgb(0, 0, 0) = 1.0;
    EXPECT_NEAR(frame_statistic(rgb, StatisticKind::luminance), 0.299, 1e-15);
    EXPECT_DOUBLE_EQ(frame_statistic(constant(3, 3, 7.0), StatisticKind::variance), 0.0);
}

TEST(MedianConsensus, Examples) {
    const std::vector<double> s{1.0, 5.0, 1.1, 1.05, 9.0};
    EXPECT_EQ(median_consensus_index(s), 2u);

    TileBlock one{1, {constant(2, 2, 4.0)}, {0, 0}};
    EXPECT_EQ(median_consensus(one).first, 0u);

    TileBlock same{1, {constant(2, 2, 4.0), constant(2, 2, 4.0), constant(2, 2, 4.0)}, {0, 0}};
    EXPECT_EQ(median_consensus(same).first, 0u);
}

TEST(MedianConsensus, RejectsFlickeredFrame) {
    TileBlock b{3, {constant(2, 2, 0.5), constant(2, 2, 0.9), constant(2, 2, 0.52)}, {0, 0}};
    const auto [idx, frame] = median_consensus(b);
    EXPECT_EQ(idx, 2u);
    EXPECT_EQ(&frame, &b.frames[2]);
}

TEST(MedianConsensus, MatchesBruteForceOracle) {
    std::mt19937_64 rng(2024);
    int ties = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 9)(rng);
        std::vector<double> stats(n);
        // Small integer support so ties and equidistant pairs are common. Dyadic
        // values keep the frame mean exact.
        const bool coarse = trial % 2 == 0;
        for (double& x : stats) {
            x = coarse ? static_cast<double>(std::uniform_int_distribution<int>(0, 4)(rng))
                       : std::uniform_int_distribution<int>(-1024, 1024)(rng) / 1024.0;
        }
        TileBlock block;
        block.t = static_cast<std::size_t>(trial + 1);
        for (double x : stats) block.frames.push_back(constant(2, 3, x));
        const std::size_t expect = brute_mcs(stats);
        EXPECT_EQ(median_consensus_choice(block).index, expect) << "trial " << trial;
        std::vector<double> d(n);
        const double med = median_of(stats);
        for (std::size_t i = 0; i < n; ++i) d[i] = std::abs(stats[i] - med);
        ties += std::count(d.begin(), d.end(), *std::min_element(d.begin(), d.end())) > 1;
    }
    EXPECT_GT(ties, 50);  // the tie rule was actually exercised
}

TEST(RampMask, Examples) {
    const RampMask ones = build_ramp_mask({3, 4}, {});
    for (std::size_t h = 0; h < 3; ++h) {
        for (std::size_t w = 0; w < 4; ++w) EXPECT_EQ(ones(h, w), 1.0);
    }
    const auto p = ramp_profile(6, 2, 0);
    const std::vector<double> expect{1.0 / 3, 2.0 / 3, 1, 1, 1, 1};
    for (std::size_t i = 0; i < 6; ++i) EXPECT_DOUBLE_EQ(p[i], expect[i]);
}

TEST(RampMask, OpposingRampsSumToOne) {
    for (std::size_t ov = 1; ov <= 20; ++ov) {
        const std::size_t n = ov + 5;
        const auto a = ramp_profile(n, 0, ov);  // left tile, trailing ramp
        const auto b = ramp_profile(n, ov, 0);  // right tile, leading ramp
        for (std::size_t k = 0; k < ov; ++k) {
            EXPECT_NEAR(a[n - ov + k] + b[k], 1.0, 1e-15);
        }
    }
}

TEST(RampMask, OverlapTooLarge) {
    EXPECT_THROW(build_ramp_mask({4, 6}, {0, 0, 6, 0}), ConfigError);
    EXPECT_THROW(build_ramp_mask({4, 6}, {4, 0, 0, 0}), ConfigError);
}

TEST(Canvas, SingleTileExact) {
    Image tile(3, 4, 2);
    std::mt19937_64 rng(1);
    for (double& v : tile.data()) v = std::uniform_real_distribution<double>()(rng);
    PanoramaCanvas canvas({5, 8}, 2);
    canvas.accumulate(tile, build_ramp_mask(tile.extent(), {}), {1, 2});
    const FusedPanorama out = canvas.finalize();
    for (std::size_t h = 0; h < 3; ++h) {
        for (std::size_t w = 0; w < 4; ++w) {
            for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(out.image(h + 1, w + 2, c), tile(h, w, c));
        }
    }
    EXPECT_EQ(out.uncovered_count, 5u * 8 - 12);
    EXPECT_EQ(out.uncovered[0], 1);
    EXPECT_EQ(out.uncovered[1 * 8 + 2], 0);
}

TEST(Canvas, ConstantTilesOverlap) {
    PanoramaCanvas canvas({4, 10}, 1);
    canvas.accumulate(constant(4, 6, 7.0), build_ramp_mask({4, 6}, {0, 0, 0, 2}), {0, 0});
    canvas.accumulate(constant(4, 6, 7.0), build_ramp_mask({4, 6}, {0, 0, 2, 0}), {0, 4});
    const FusedPanorama out = canvas.finalize();
    for (double v : out.image.data()) EXPECT_NEAR(v, 7.0, 1e-12);
    EXPECT_EQ(out.uncovered_count, 0u);
}

// A = 0 and B = 1 overlapping by 3 with opposing ramps. With B on the left the
// shared cells read 3/4, 2/4, 1/4; mirrored they read 1/4, 2/4, 3/4.
TEST(Canvas, LinearRampAcrossOverlap) {
    const std::size_t n = 6, ov = 3;
    const Image a = constant(1, n, 0.0), b = constant(1, n, 1.0);
    {
        PanoramaCanvas canvas({1, 2 * n - ov}, 1);
        canvas.accumulate(b, build_ramp_mask({1, n}, {0, 0, 0, ov}), {0, 0});
        canvas.accumulate(a, build_ramp_mask({1, n}, {0, 0, ov, 0}), {0, static_cast<long>(n - ov)});
        const Image img = canvas.finalize().image;
        EXPECT_DOUBLE_EQ(img(0, 3), 0.75);
        EXPECT_DOUBLE_EQ(img(0, 4), 0.5);
        EXPECT_DOUBLE_EQ(img(0, 5), 0.25);
    }
    {
        PanoramaCanvas canvas({1, 2 * n - ov}, 1);
        canvas.accumulate(a, build_ramp_mask({1, n}, {0, 0, 0, ov}), {0, 0});
        canvas.accumulate(b, build_ramp_mask({1, n}, {0, 0, ov, 0}), {0, static_cast<long>(n - ov)});
        const Image img = canvas.finalize().image;
        EXPECT_DOUBLE_EQ(img(0, 3), 0.25);
        EXPECT_DOUBLE_EQ(img(0, 4), 0.5);
        EXPECT_DOUBLE_EQ(img(0, 5), 0.75);
    }
}

TEST(Canvas, FinalizeHomogeneity) {
    PanoramaCanvas empty({3, 3}, 1);
    const FusedPanorama e = empty.finalize();
    EXPECT_EQ(e.uncovered_count, 9u);
    for (double v : e.image.data()) EXPECT_EQ(v, 0.0);

    PanoramaCanvas twice({2, 2}, 1);
    const RampMask m = build_ramp_mask({2, 2}, {});
    twice.accumulate(constant(2, 2, 5.0), m, {0, 0});
    twice.accumulate(constant(2, 2, 5.0), m, {0, 0});
    EXPECT_EQ(twice.weights()[0], 2.0);
    const FusedPanorama t = twice.finalize();
    for (double v : t.image.data()) EXPECT_EQ(v, 5.0);
}

TEST(Canvas, PlacementErrors) {
    PanoramaCanvas canvas({4, 4}, 1);
    const Image t = constant(2, 2, 1.0);
    try {
        canvas.accumulate(t, build_ramp_mask({2, 2}, {}), {3, 0}, 7);
        FAIL();
    } catch (const PlacementError& e) {
        EXPECT_EQ(e.block(), 7u);
    }
    EXPECT_THROW(canvas.accumulate(t, build_ramp_mask({2, 2}, {}), {-1, 0}), PlacementError);
    EXPECT_THROW(canvas.accumulate(constant(2, 2, 1.0, 3), build_ramp_mask({2, 2}, {}), {0, 0}), PlacementError);
}

TEST(Canvas, AgreeingTilesReproduceSignal) {
    // Tiles cut from one global image fuse back to that image.
    const Extent canvas_extent{12, 40};
    Image global(canvas_extent.height, canvas_extent.width, 2);
    std::mt19937_64 rng(3);
    for (double& v : global.data()) v = std::uniform_real_distribution<double>()(rng);
    ScanConfig sc;
    sc.mode = ScanMode::snake;
    sc.window_len = 12;
    sc.window_cross = 8;
    sc.spatial_stride = 4;
    sc.step_stride = 4;
    sc.snake_rows = 2;
    sc.snake_cols = 8;
    sc.n_steps = 16;
    const Trajectory tr = plan(sc);
    std::vector<Footprint> fps;
    for (std::size_t t = 1; t <= tr.size(); ++t) fps.push_back(tr.footprint(t));
    PanoramaCanvas canvas(canvas_extent, 2);
    for (std::size_t i = 0; i < fps.size(); ++i) {
        const Footprint& f = fps[i];
        const Image tile = global.crop(f.origin.h, f.origin.w, f.extent.height, f.extent.width);
        canvas.accumulate(tile, build_ramp_mask(f.extent, ramp_overlaps(fps, i)), f.origin);
    }
    const FusedPanorama out = canvas.finalize();
    EXPECT_EQ(out.uncovered_count, 0u);
    for (std::size_t i = 0; i < global.size(); ++i) EXPECT_NEAR(out.image.data()[i], global.data()[i], 1e-12);
}

TEST(RampOverlaps, FromGeometry) {
    std::vector<Footprint> fps{{{0, 0}, {8, 16}}, {{0, 8}, {8, 16}}, {{0, 16}, {8, 16}}};
    EXPECT_EQ(ramp_overlaps(fps, 0), (EdgeOverlaps{0, 0, 0, 8}));
    EXPECT_EQ(ramp_overlaps(fps, 1), (EdgeOverlaps{0, 0, 8, 8}));
    EXPECT_EQ(ramp_overlaps(fps, 2), (EdgeOverlaps{0, 0, 8, 0}));
}

TEST(SeamEnergy, Examples) {
    const Image flat = constant(4, 10, 0.3, 3);
    const std::vector<long> seams{3, 6};
    const SeamReport r = seam_energy(flat, seams);
    for (const SeamStat& s : r.seams) EXPECT_EQ(s.max_diff, 0.0);

    Image ramp(4, 10, 1);
    for (std::size_t h = 0; h < 4; ++h) {
        for (std::size_t w = 0; w < 10; ++w) ramp(h, w) = 0.25 * static_cast<double>(w);
    }
    const SeamReport g = seam_energy(ramp, seams);
    for (const SeamStat& s : g.seams) {
        EXPECT_DOUBLE_EQ(s.max_diff, g.interior.max_diff);
        EXPECT_DOUBLE_EQ(s.mean_diff, g.interior.mean_diff);
    }
    EXPECT_THROW(seam_energy(ramp, std::vector<long>{10}), IndexError);
    EXPECT_NE(g.to_csv().find("interior"), std::string::npos);
}

TEST(SeamEnergy, RampBeatsHardCut) {
    const std::size_t n = 16, ov = 8;
    Image a = constant(4, n, 0.2), b = constant(4, n, 0.7);
    const long off = static_cast<long>(n - ov);
    const Extent e{4, 2 * n - ov};
    PanoramaCanvas canvas(e, 1);
    canvas.accumulate(a, build_ramp_mask(a.extent(), {0, 0, 0, ov}), {0, 0});
    canvas.accumulate(b, build_ramp_mask(b.extent(), {0, 0, ov, 0}), {0, off});
    const Image fused = canvas.finalize().image;
    const Image hard = concatenate_hard({a, b}, {{0, 0}, {0, off}}, e);
    std::vector<long> all(e.width - 1);
    std::iota(all.begin(), all.end(), 1L);
    double fused_max = 0.0, hard_max = 0.0;
    for (const SeamStat& s : seam_energy(fused, all).seams) fused_max = std::max(fused_max, s.max_diff);
    for (const SeamStat& s : seam_energy(hard, all).seams) hard_max = std::max(hard_max, s.max_diff);
    EXPECT_NEAR(hard_max, 0.5, 1e-12);
    EXPECT_NEAR(fused_max, 0.5 / (ov + 1), 1e-12);
}

TEST(FootprintSeams, Positions) {
    std::vector<Footprint> fps{{{0, 0}, {8, 16}}, {{0, 8}, {8, 16}}, {{0, 16}, {8, 16}}};
    EXPECT_EQ(footprint_seams(fps, {8, 32}, SeamAxis::columns), (std::vector<long>{8, 16, 24}));
    EXPECT_TRUE(footprint_seams(fps, {8, 32}, SeamAxis::rows).empty());
}
