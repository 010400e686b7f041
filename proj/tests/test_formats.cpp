#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>

#include "scrollscape/formats.hpp"
#include "support.hpp"

using namespace scrollscape;

namespace {

// Hand-rolled little-endian byte builder, independent of the library writer.
struct Bytes {
    std::string s;
    Bytes& raw(std::string_view v) {
        s += v;
        return *this;
    }
    Bytes& u8(unsigned v) {
        s.push_back(static_cast<char>(v));
        return *this;
    }
    Bytes& u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        return *this;
    }
    Bytes& f32(float v) { return u32(std::bit_cast<std::uint32_t>(v)); }
};

Bytes one_array_sstf(std::string_view name, std::vector<std::uint32_t> shape, std::vector<float> values) {
    Bytes b;
    b.raw("SSTF").u8(1).u32(1).u32(static_cast<std::uint32_t>(name.size())).raw(name);
    b.u8(static_cast<unsigned>(shape.size()));
    for (auto d : shape) b.u32(d);
    for (float v : values) b.f32(v);
    return b;
}

template <class F>
ParseErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const ParseError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no ParseError";
    return ParseErrorKind::malformed;
}

TensorArchive sample_archive() {
    std::mt19937_64 rng(3);
    std::normal_distribution<float> n(0.0f, 1.0f);
    TensorArchive a;
    Tensor x{{3, 4, 4}, std::vector<float>(48)};
    for (float& v : x.values) v = n(rng);
    a.add("frames", x);
    a.add("anchor", {{2}, {12.0f, -40.0f}});
    a.add("scalar", {{}, {0.5f}});
    a.add("empty", {{0, 5}, {}});
    return a;
}

}  // namespace

TEST(Sstf, MatchesHandBuiltLayout) {
    TensorArchive a;
    a.add("ab", {{2, 1}, {1.0f, -2.5f}});
    Bytes b;
    b.raw("SSTF").u8(1).u32(1).u32(2).raw("ab").u8(2).u32(2).u32(1).f32(1.0f).f32(-2.5f);
    EXPECT_EQ(encode_sstf(a), b.s);
    EXPECT_EQ(decode_sstf(b.s), a);
}

TEST(Sstf, RoundTripBitwise) {
    const TensorArchive a = sample_archive();
    const std::string bytes = encode_sstf(a);
    const TensorArchive back = decode_sstf(bytes);
    EXPECT_EQ(back, a);
    EXPECT_EQ(encode_sstf(back), bytes);

    const auto dir = scrollscape::testing::scratch_dir("sstf");
    write_sstf(dir / "a.sstf", a);
    EXPECT_EQ(read_sstf(dir / "a.sstf"), a);
}

TEST(Sstf, AcceptsMatchingElementCount) {
    std::vector<float> v(48, 0.25f);
    const TensorArchive a = decode_sstf(one_array_sstf("x", {3, 4, 4}, v).s);
    EXPECT_EQ(a.get("x").values.size(), 48u);
}

TEST(Sstf, NamedErrors) {
    const std::string good = encode_sstf(sample_archive());

    std::string magic = good;
    magic[0] = 'X';
    EXPECT_EQ(kind_of([&] { decode_sstf(magic); }), ParseErrorKind::bad_magic);
    EXPECT_EQ(kind_of([&] { decode_sstf("SS"); }), ParseErrorKind::bad_magic);

    std::string version = good;
    version[4] = 2;
    EXPECT_EQ(kind_of([&] { decode_sstf(version); }), ParseErrorKind::bad_version);

    EXPECT_EQ(kind_of([&] { decode_sstf(good.substr(0, 7)); }), ParseErrorKind::truncated_header);

    try {
        decode_sstf(one_array_sstf("x", {3, 4, 4}, std::vector<float>(47)).s, "t.sstf");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.kind(), ParseErrorKind::element_count);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("48"), std::string::npos) << msg;
        EXPECT_NE(msg.find("47"), std::string::npos) << msg;
        EXPECT_NE(msg.find("t.sstf"), std::string::npos) << msg;
    }

    EXPECT_EQ(kind_of([&] {
                  decode_sstf(one_array_sstf("x", {2}, {1.0f, std::numeric_limits<float>::quiet_NaN()}).s);
              }),
              ParseErrorKind::non_finite);

    Bytes dup;
    dup.raw("SSTF").u8(1).u32(2).u32(1).raw("a").u32(1).raw("a");
    dup.u8(1).u32(1).f32(1.0f).u8(1).u32(1).f32(2.0f);
    EXPECT_EQ(kind_of([&] { decode_sstf(dup.s); }), ParseErrorKind::duplicate_name);

    EXPECT_EQ(kind_of([&] { decode_sstf(good + "x"); }), ParseErrorKind::malformed);
}

TEST(Sstf, WriterRejectsBadArchives) {
    TensorArchive a;
    a.add("x", {{1}, {1.0f}});
    EXPECT_THROW(a.add("x", {{1}, {2.0f}}), ParseError);
    EXPECT_THROW(a.add("y", {{2, 2}, {1.0f}}), DimensionError);
    a.add("inf", {{1}, {std::numeric_limits<float>::infinity()}});
    EXPECT_THROW(encode_sstf(a), ParseError);
    EXPECT_THROW(a.get("missing"), IoError);
}

TEST(Ssft, RoundTripAndLayout) {
    FeatureMap f;
    f.shape = {2, 1, 3};
    f.values = {1, 2, 3, 4, 5, 6.5f};
    Bytes b;
    b.raw("SSFT").u8(1).u8(3).u32(2).u32(1).u32(3);
    for (float v : f.values) b.f32(v);
    EXPECT_EQ(encode_ssft(f), b.s);

    const FeatureMap back = decode_ssft(b.s);
    EXPECT_EQ(back.shape, f.shape);
    EXPECT_EQ(back.values, f.values);
    EXPECT_EQ(back.source, FeatureSource::external_file);
    EXPECT_EQ(encode_ssft(back), b.s);
    EXPECT_EQ(back.channels(), 2u);
    EXPECT_EQ(back.spatial(), 3u);

    const auto dir = scrollscape::testing::scratch_dir("ssft");
    write_feature_file(dir / "f.ssft", f);
    EXPECT_EQ(load_feature_file(dir / "f.ssft").values, f.values);
}

TEST(Ssft, NamedErrors) {
    FeatureMap f;
    f.shape = {4};
    f.values = {1, 2, 3, 4};
    const std::string good = encode_ssft(f);
    EXPECT_EQ(kind_of([&] { decode_ssft("SSTF" + good.substr(4)); }), ParseErrorKind::bad_magic);
    std::string v = good;
    v[4] = 9;
    EXPECT_EQ(kind_of([&] { decode_ssft(v); }), ParseErrorKind::bad_version);
    EXPECT_EQ(kind_of([&] { decode_ssft(good.substr(0, 8)); }), ParseErrorKind::truncated_header);
    EXPECT_EQ(kind_of([&] { decode_ssft(good.substr(0, good.size() - 4)); }), ParseErrorKind::element_count);
    EXPECT_EQ(kind_of([&] { decode_ssft(good + "abcd"); }), ParseErrorKind::malformed);
    f.values[2] = std::numeric_limits<float>::infinity();
    EXPECT_THROW(encode_ssft(f), ParseError);
    f.values.pop_back();
    EXPECT_THROW(encode_ssft(f), DimensionError);
}

TEST(Sspd, RoundTripAndLayout) {
    PairwiseDistances d(3);
    d.set(0, 1, 1.5f);
    d.set(2, 0, 2.0f);
    d.set(1, 2, 0.25f);
    EXPECT_EQ(d(1, 0), 1.5f);
    EXPECT_EQ(d(0, 2), 2.0f);
    EXPECT_EQ(d(1, 1), 0.0f);

    Bytes b;
    b.raw("SSPD").u32(3).f32(1.5f).f32(2.0f).f32(0.25f);
    EXPECT_EQ(encode_sspd(d), b.s);
    EXPECT_EQ(decode_sspd(b.s).upper(), d.upper());

    EXPECT_EQ(kind_of([&] { decode_sspd(b.s.substr(0, b.s.size() - 4)); }), ParseErrorKind::element_count);
    EXPECT_EQ(kind_of([&] { decode_sspd("SSPX"); }), ParseErrorKind::bad_magic);
}

TEST(Pnm, Quantization) {
    EXPECT_EQ(quantize_u8(1.0), 255);
    EXPECT_EQ(quantize_u8(0.5), 128);
    EXPECT_EQ(quantize_u8(2.0), 255);
    EXPECT_EQ(quantize_u8(-0.3), 0);
    EXPECT_EQ(quantize_u8(0.0), 0);
}

TEST(Pnm, EncodeDecode) {
    Image g(2, 3, 1);
    g(0, 0) = 1.0;
    g(1, 2) = 0.5;
    const std::string p5 = encode_pnm(g);
    EXPECT_EQ(p5.substr(0, 11), "P5\n3 2\n255\n");
    EXPECT_EQ(static_cast<unsigned char>(p5[11]), 255);
    EXPECT_EQ(static_cast<unsigned char>(p5[16]), 128);
    const Image back = decode_pnm(p5);
    EXPECT_EQ(back.extent(), g.extent());
    EXPECT_DOUBLE_EQ(back(0, 0), 1.0);

    const std::string p6 = encode_pnm(Image(1, 2, 3, 0.2));
    EXPECT_EQ(p6.substr(0, 2), "P6");
    EXPECT_EQ(p6.size(), std::string("P6\n2 1\n255\n").size() + 6);
    EXPECT_EQ(decode_pnm("P6\n# note\n2 1\n255\n" + p6.substr(11)).channels(), 3u);

    EXPECT_THROW(encode_pnm(Image(1, 1, 2)), UsageError);
    EXPECT_EQ(kind_of([&] { decode_pnm("P3\n1 1\n255\n0"); }), ParseErrorKind::bad_magic);
    EXPECT_EQ(kind_of([&] { decode_pnm("P5\n4 4\n255\nab"); }), ParseErrorKind::element_count);
}

TEST(LoadPanorama, SstfAndPnm) {
    const auto dir = scrollscape::testing::scratch_dir("load_panorama");
    Image img(2, 4, 3);
    for (std::size_t i = 0; i < img.size(); ++i) img.data()[i] = static_cast<double>(i) / 32.0;
    TensorArchive a;
    a.add("panorama", to_tensor(img));
    write_sstf(dir / "p.sstf", a);
    const Image back = load_panorama(dir / "p.sstf");
    EXPECT_EQ(back.extent(), img.extent());
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(back.data()[i], img.data()[i]);

    export_image(img, dir / "p.ppm");
    EXPECT_EQ(load_panorama(dir / "p.ppm").channels(), 3u);
    EXPECT_THROW(load_panorama(dir / "missing.sstf"), IoError);
}
