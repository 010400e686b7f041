#pragma once

// On-disk formats, all little-endian and row-major:
//
//   SSTF  named tensor collection
//         "SSTF" u8 version, u32 count, count x (u32 len, name bytes),
//         then count x (u8 rank, u32 dims[rank], f32 payload)
//   SSFT  single feature array
//         "SSFT" u8 version, u8 rank, u32 dims[rank], f32 payload
//   SSPD  pairwise distances
//         "SSPD" u32 n, f32 upper triangle (i < j, row-major), n(n-1)/2 values
//   P5/P6 8-bit portable pixel maps for export

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scrollscape/error.hpp"
#include "scrollscape/image.hpp"

namespace scrollscape {

inline constexpr std::uint8_t kFormatVersion = 1;

/// f32 array with an explicit shape.
struct Tensor {
    std::vector<std::uint32_t> shape;
    std::vector<float> values;

    std::size_t element_count() const {
        std::size_t n = 1;
        for (std::uint32_t d : shape) n *= d;
        return n;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

inline Tensor to_tensor(const Image& img) {
    Tensor t;
    t.shape = {static_cast<std::uint32_t>(img.height()), static_cast<std::uint32_t>(img.width()),
               static_cast<std::uint32_t>(img.channels())};
    t.values.reserve(img.size());
    for (double v : img.data()) t.values.push_back(static_cast<float>(v));
    return t;
}

inline Image to_image(const Tensor& t) {
    if (t.shape.size() != 3 && t.shape.size() != 2) {
        throw DimensionError("image tensors must have rank 2 or 3, got " + std::to_string(t.shape.size()));
    }
    const std::size_t C = t.shape.size() == 3 ? t.shape[2] : 1;
    Image img(t.shape[0], t.shape[1], C);
    auto d = img.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = t.values[i];
    return img;
}

/// Ordered collection of uniquely named tensors.
class TensorArchive {
public:
    void add(std::string name, Tensor t) {
        if (contains(name)) throw ParseError(ParseErrorKind::duplicate_name, "array '" + name + "' already present");
        if (t.element_count() != t.values.size()) {
            throw DimensionError("array '" + name + "': shape holds " + std::to_string(t.element_count()) +
                                 " values, payload has " + std::to_string(t.values.size()));
        }
        entries_.emplace_back(std::move(name), std::move(t));
    }

    bool contains(std::string_view name) const {
        return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
    }

    const Tensor& get(std::string_view name) const {
        for (const auto& e : entries_) {
            if (e.first == name) return e.second;
        }
        throw IoError("archive has no array named '" + std::string(name) + "'");
    }

    const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    friend bool operator==(const TensorArchive&, const TensorArchive&) = default;

private:
    std::vector<std::pair<std::string, Tensor>> entries_;
};

namespace detail {

class ByteWriter {
public:
    void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }
    void u8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    const std::string& str() const { return buf_; }

private:
    std::string buf_;
};

class ByteReader {
public:
    ByteReader(std::string data, std::string source) : data_(std::move(data)), source_(std::move(source)) {}

    std::size_t remaining() const { return data_.size() - pos_; }
    const std::string& source() const { return source_; }

    void magic(std::string_view expected) {
        if (remaining() < expected.size() || std::string_view(data_).substr(pos_, expected.size()) != expected) {
            throw ParseError(ParseErrorKind::bad_magic, source_ + ": expected magic " + std::string(expected));
        }
        pos_ += expected.size();
    }
    std::uint8_t u8(const char* what) {
        need(1, what);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        pos_ += 4;
        return v;
    }
    std::string text(std::size_t n, const char* what) {
        need(n, what);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    /// Payload of `count` floats; a short payload is an element-count error.
    std::vector<float> floats(std::size_t count, const std::string& what) {
        const std::size_t available = remaining() / 4;
        if (available < count) {
            throw ParseError(ParseErrorKind::element_count, source_ + ": " + what + " expected " +
                                                                std::to_string(count) + " values, found " +
                                                                std::to_string(available));
        }
        std::vector<float> out(count);
        for (std::size_t i = 0; i < count; ++i) {
            out[i] = std::bit_cast<float>(u32("payload"));
            if (!std::isfinite(out[i])) {
                throw ParseError(ParseErrorKind::non_finite,
                                 source_ + ": " + what + " value " + std::to_string(i) + " is not finite");
            }
        }
        return out;
    }
    void expect_end(const char* what) const {
        if (remaining() != 0) {
            throw ParseError(ParseErrorKind::malformed,
                             source_ + ": " + std::to_string(remaining()) + " trailing bytes after " + what);
        }
    }

private:
    void need(std::size_t n, const char* what) const {
        if (remaining() < n) {
            throw ParseError(ParseErrorKind::truncated_header, source_ + ": file ends inside " + std::string(what));
        }
    }

    std::string data_;
    std::string source_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::string& bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("short write to " + path.string());
}

inline void check_finite(const Tensor& t, const std::string& what) {
    for (float v : t.values) {
        if (!std::isfinite(v)) throw ParseError(ParseErrorKind::non_finite, what + " contains non-finite values");
    }
}

inline void write_shape(ByteWriter& w, const std::vector<std::uint32_t>& shape) {
    if (shape.size() > 255) throw DimensionError("rank above 255");
    w.u8(static_cast<std::uint8_t>(shape.size()));
    for (std::uint32_t d : shape) w.u32(d);
}

inline std::vector<std::uint32_t> read_shape(ByteReader& r) {
    const std::uint8_t rank = r.u8("rank");
    std::vector<std::uint32_t> shape(rank);
    for (auto& d : shape) d = r.u32("dims");
    return shape;
}

inline std::size_t count_of(const std::vector<std::uint32_t>& shape) {
    std::size_t n = 1;
    for (std::uint32_t d : shape) n *= d;
    return n;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SSTF

inline std::string encode_sstf(const TensorArchive& archive) {
    detail::ByteWriter w;
    w.bytes("SSTF");
    w.u8(kFormatVersion);
    w.u32(static_cast<std::uint32_t>(archive.size()));
    for (const auto& [name, t] : archive.entries()) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.bytes(name);
    }
    for (const auto& [name, t] : archive.entries()) {
        detail::check_finite(t, "array '" + name + "'");
        detail::write_shape(w, t.shape);
        for (float v : t.values) w.f32(v);
    }
    return w.str();
}

inline TensorArchive decode_sstf(std::string bytes, const std::string& source = "<memory>") {
    detail::ByteReader r(std::move(bytes), source);
    r.magic("SSTF");
    const std::uint8_t version = r.u8("version");
    if (version != kFormatVersion) {
        throw ParseError(ParseErrorKind::bad_version, source + ": version " + std::to_string(version));
    }
    const std::uint32_t count = r.u32("array count");
    std::vector<std::string> names;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = r.u32("name length");
        names.push_back(r.text(len, "name table"));
    }
    TensorArchive archive;
    for (std::uint32_t i = 0; i < count; ++i) {
        if (archive.contains(names[i])) {
            throw ParseError(ParseErrorKind::duplicate_name, source + ": array '" + names[i] + "' appears twice");
        }
        Tensor t;
        t.shape = detail::read_shape(r);
        t.values = r.floats(detail::count_of(t.shape), "array '" + names[i] + "'");
        archive.add(names[i], std::move(t));
    }
    r.expect_end("the last array");
    return archive;
}

inline void write_sstf(const std::filesystem::path& path, const TensorArchive& archive) {
    detail::write_file(path, encode_sstf(archive));
}

inline TensorArchive read_sstf(const std::filesystem::path& path) {
    return decode_sstf(detail::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// SSFT

enum class FeatureSource { external_file, fallback_extractor };

/// Feature array of layout (channels, height, width) or flat (dim).
struct FeatureMap {
    std::vector<std::uint32_t> shape;
    std::vector<float> values;
    FeatureSource source = FeatureSource::fallback_extractor;

    std::size_t channels() const { return shape.size() == 3 ? shape[0] : 1; }
    std::size_t spatial() const { return shape.size() == 3 ? std::size_t{shape[1]} * shape[2] : values.size(); }
};

inline std::string encode_ssft(const FeatureMap& f) {
    if (detail::count_of(f.shape) != f.values.size()) throw DimensionError("feature shape and payload disagree");
    detail::ByteWriter w;
    w.bytes("SSFT");
    w.u8(kFormatVersion);
    detail::write_shape(w, f.shape);
    for (float v : f.values) {
        if (!std::isfinite(v)) throw ParseError(ParseErrorKind::non_finite, "feature map contains non-finite values");
        w.f32(v);
    }
    return w.str();
}

inline FeatureMap decode_ssft(std::string bytes, const std::string& source = "<memory>") {
    detail::ByteReader r(std::move(bytes), source);
    r.magic("SSFT");
    const std::uint8_t version = r.u8("version");
    if (version != kFormatVersion) {
        throw ParseError(ParseErrorKind::bad_version, source + ": version " + std::to_string(version));
    }
    FeatureMap f;
    f.source = FeatureSource::external_file;
    f.shape = detail::read_shape(r);
    f.values = r.floats(detail::count_of(f.shape), "features");
    r.expect_end("the feature payload");
    return f;
}

inline void write_feature_file(const std::filesystem::path& path, const FeatureMap& f) {
    detail::write_file(path, encode_ssft(f));
}

inline FeatureMap load_feature_file(const std::filesystem::path& path) {
    return decode_ssft(detail::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// SSPD

/// Symmetric pairwise distances with a zero diagonal.
class PairwiseDistances {
public:
    PairwiseDistances() = default;
    explicit PairwiseDistances(std::size_t n) : n_(n), upper_(n * (n > 0 ? n - 1 : 0) / 2, 0.0f) {}

    std::size_t count() const { return n_; }
    float operator()(std::size_t i, std::size_t j) const {
        if (i == j) return 0.0f;
        if (i > j) std::swap(i, j);
        return upper_[index(i, j)];
    }
    void set(std::size_t i, std::size_t j, float d) {
        if (i == j) return;
        if (i > j) std::swap(i, j);
        upper_[index(i, j)] = d;
    }
    const std::vector<float>& upper() const { return upper_; }
    std::vector<float>& upper() { return upper_; }

private:
    std::size_t index(std::size_t i, std::size_t j) const {
        // Rows 0..i-1 hold (n-1) + (n-2) + ... entries.
        return i * n_ - i * (i + 1) / 2 + (j - i - 1);
    }

    std::size_t n_ = 0;
    std::vector<float> upper_;
};

inline std::string encode_sspd(const PairwiseDistances& d) {
    detail::ByteWriter w;
    w.bytes("SSPD");
    w.u32(static_cast<std::uint32_t>(d.count()));
    for (float v : d.upper()) w.f32(v);
    return w.str();
}

inline PairwiseDistances decode_sspd(std::string bytes, const std::string& source = "<memory>") {
    detail::ByteReader r(std::move(bytes), source);
    r.magic("SSPD");
    const std::uint32_t n = r.u32("patch count");
    PairwiseDistances d(n);
    d.upper() = r.floats(d.upper().size(), "distances");
    r.expect_end("the distance payload");
    return d;
}

inline void write_distance_file(const std::filesystem::path& path, const PairwiseDistances& d) {
    detail::write_file(path, encode_sspd(d));
}

inline PairwiseDistances load_distance_file(const std::filesystem::path& path) {
    return decode_sspd(detail::read_file(path), path.string());
}

// ---------------------------------------------------------------------------
// 8-bit export

/// clamp to [0, 1], then round(v * 255) with halves rounding up.
inline std::uint8_t quantize_u8(double v) {
    const double c = std::clamp(v, 0.0, 1.0);
    return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

inline std::string encode_pnm(const Image& img) {
    if (!(img.channels() == 1 || img.channels() == 3)) {
        throw UsageError("export_image: " + std::to_string(img.channels()) + " channels; only 1 or 3 supported");
    }
    std::ostringstream os;
    os << (img.channels() == 3 ? "P6" : "P5") << "\n" << img.width() << " " << img.height() << "\n255\n";
    std::string out = os.str();
    out.reserve(out.size() + img.size());
    for (double v : img.data()) {
        if (!std::isfinite(v)) throw UsageError("export_image: non-finite pixel");
        out.push_back(static_cast<char>(quantize_u8(v)));
    }
    return out;
}

inline void export_image(const Image& img, const std::filesystem::path& path) {
    detail::write_file(path, encode_pnm(img));
}

/// Reads binary P5/P6 with maxval 255 into [0, 1] values.
inline Image decode_pnm(const std::string& bytes, const std::string& source = "<memory>") {
    std::istringstream in(bytes);
    std::string magic;
    in >> magic;
    if (magic != "P5" && magic != "P6") throw ParseError(ParseErrorKind::bad_magic, source + ": expected P5 or P6");
    auto next_int = [&]() {
        in >> std::ws;
        while (in.peek() == '#') {
            std::string line;
            std::getline(in, line);
            in >> std::ws;
        }
        long v = -1;
        in >> v;
        if (!in || v < 0) throw ParseError(ParseErrorKind::truncated_header, source + ": bad pixel-map header");
        return static_cast<std::size_t>(v);
    };
    const std::size_t w = next_int();
    const std::size_t h = next_int();
    const std::size_t maxval = next_int();
    if (maxval != 255) throw ParseError(ParseErrorKind::malformed, source + ": only maxval 255 is supported");
    in.get();
    const std::size_t C = magic == "P6" ? 3 : 1;
    Image img(h, w, C);
    const auto offset = static_cast<std::size_t>(in.tellg());
    if (bytes.size() - offset < img.size()) {
        throw ParseError(ParseErrorKind::element_count, source + ": expected " + std::to_string(img.size()) +
                                                            " samples, found " + std::to_string(bytes.size() - offset));
    }
    auto d = img.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = static_cast<unsigned char>(bytes[offset + i]) / 255.0;
    return img;
}

/// Loads a panorama from SSTF (array `panorama`, or the only array) or P5/P6.
inline Image load_panorama(const std::filesystem::path& path) {
    std::string bytes = detail::read_file(path);
    if (bytes.rfind("SSTF", 0) == 0) {
        const TensorArchive a = decode_sstf(std::move(bytes), path.string());
        if (a.contains("panorama")) return to_image(a.get("panorama"));
        if (a.size() == 1) return to_image(a.entries().front().second);
        throw IoError(path.string() + ": no 'panorama' array");
    }
    return decode_pnm(bytes, path.string());
}

}  // namespace scrollscape
