#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace scrollscape {

/// Root of every error thrown by the library. `exit_code()` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 2; }
};

/// Invalid or inconsistent configuration. `key()` carries the dotted key path
/// (possibly several, comma separated) when one is known.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, std::string key = {})
        : Error(key.empty() ? msg : key + ": " + msg), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

class InsufficientPatchesError : public Error {
public:
    using Error::Error;
};

/// A tile that does not fit on the canvas. Carries the offending block index.
class PlacementError : public Error {
public:
    PlacementError(const std::string& msg, std::size_t block)
        : Error("block " + std::to_string(block) + ": " + msg), block_(block) {}
    std::size_t block() const noexcept { return block_; }

private:
    std::size_t block_;
};

/// The trajectory leaves canvas cells uncovered; raised before any fusion work.
class CoverageError : public Error {
public:
    using Error::Error;
};

class EnhancerError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

enum class ParseErrorKind {
    bad_magic,
    bad_version,
    truncated_header,
    element_count,
    non_finite,
    duplicate_name,
    malformed,
};

inline const char* to_string(ParseErrorKind k) {
    switch (k) {
        case ParseErrorKind::bad_magic: return "bad magic";
        case ParseErrorKind::bad_version: return "unsupported version";
        case ParseErrorKind::truncated_header: return "truncated header";
        case ParseErrorKind::element_count: return "element count mismatch";
        case ParseErrorKind::non_finite: return "non-finite value";
        case ParseErrorKind::duplicate_name: return "duplicate array name";
        case ParseErrorKind::malformed: return "malformed file";
    }
    return "parse error";
}

class ParseError : public IoError {
public:
    ParseError(ParseErrorKind kind, const std::string& msg)
        : IoError(std::string(to_string(kind)) + ": " + msg), kind_(kind) {}
    ParseErrorKind kind() const noexcept { return kind_; }

private:
    ParseErrorKind kind_;
};

/// Non-finite loss or state during training or sampling.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, std::size_t iteration)
        : Error(msg + " at iteration " + std::to_string(iteration)), iteration_(iteration) {}
    std::size_t iteration() const noexcept { return iteration_; }
    int exit_code() const noexcept override { return 4; }

private:
    std::size_t iteration_;
};

}  // namespace scrollscape
