#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace robust {

using Byte = std::uint8_t;
using Bytes = std::vector<Byte>;
using Key = std::uint64_t;
using ServerId = std::uint32_t;
using Timestamp = std::uint32_t;  // global period counter, 0 = never written

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments to a pure function (codec sizes, out-of-range levels, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

class InsufficientPieces : public Error {
public:
    using Error::Error;
};

class MixedVersion : public Error {
public:
    using Error::Error;
};

class InsufficientCodewords : public Error {
public:
    using Error::Error;
};

// A system invariant was broken. Carries the invariant's stable name.
class InvariantViolation : public Error {
public:
    InvariantViolation(std::string invariant, const std::string& detail)
        : Error(invariant + ": " + detail), invariant_(std::move(invariant)) {}
    const std::string& invariant() const noexcept { return invariant_; }

private:
    std::string invariant_;
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& detail)
        : Error("config field '" + field + "': " + detail), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

inline void put_be32(Bytes& out, std::uint32_t v) {
    out.push_back(static_cast<Byte>(v >> 24));
    out.push_back(static_cast<Byte>(v >> 16));
    out.push_back(static_cast<Byte>(v >> 8));
    out.push_back(static_cast<Byte>(v));
}

inline std::uint32_t get_be32(const Byte* p) {
    return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
           std::uint32_t{p[3]};
}

constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

// ceil(log2(x)) for x >= 1
constexpr unsigned ceil_log2(std::uint64_t x) {
    unsigned r = 0;
    std::uint64_t v = 1;
    while (v < x) {
        v <<= 1;
        ++r;
    }
    return r;
}

// SplitMix64 finalizer; used for seeded hash functions and stream derivation.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

}  // namespace robust

namespace robust {

// The unit written and looked up. Payload length is fixed per run.
struct DataItem {
    Key key = 0;
    Bytes payload;
    Timestamp version = 0;

    friend bool operator==(const DataItem&, const DataItem&) = default;
};

}  // namespace robust
