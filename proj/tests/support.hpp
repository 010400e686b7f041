#pragma once

// Helpers shared by the unit tests and the acceptance binary.

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "scrollscape/image.hpp"
#include "scrollscape/sources.hpp"

namespace scrollscape::testing {

inline void add_noise(Image& img, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, sigma);
    for (double& v : img.data()) v += n(rng);
}

/// side x (count * side) strip of the texture pattern, lightly noised.
inline Image unique_strip(std::size_t side, std::size_t count, std::uint64_t seed) {
    const ProceduralPattern pat(Pattern::texture, {side, side * count}, 3, seed);
    Image img = pat.crop({{0, 0}, {side, side * count}});
    add_noise(img, 0.01, seed ^ 0x5eed);
    return img;
}

/// Same shape, but the content loops with a period of `period` patches.
inline Image looping_strip(std::size_t side, std::size_t count, std::size_t period, std::uint64_t seed) {
    const ProceduralPattern pat(Pattern::texture, {side, side * period}, 3, seed);
    const Image motif = pat.crop({{0, 0}, {side, side * period}});
    Image img(side, side * count, 3);
    for (std::size_t h = 0; h < side; ++h) {
        for (std::size_t w = 0; w < side * count; ++w) {
            for (std::size_t c = 0; c < 3; ++c) img(h, w, c) = motif(h, w % (side * period), c);
        }
    }
    add_noise(img, 0.01, seed ^ 0x5eed);
    return img;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto p = std::filesystem::temp_directory_path() / ("scrollscape_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace scrollscape::testing
