#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "robust/types.hpp"

namespace robust::codec {

// One of the c MDS shares of a data item.
struct Piece {
    Key item_key = 0;
    int index = 0;  // 1..c
    Bytes body;
    Timestamp version = 0;

    friend bool operator==(const Piece&, const Piece&) = default;
};

// Systematic rate-1/3 Reed-Solomon code over GF(256).
//
// The payload is cut into t = ceil(c/3) data pieces of length L = ceil(S/t)
// (zero padded). Piece j sits at evaluation point x_j = j; pieces 1..t carry
// the data verbatim and pieces t+1..c are the evaluations of the degree < t
// interpolating polynomial. Any t pieces recover the payload.
class PieceCodec {
public:
    PieceCodec(int c, std::size_t payload_len);

    int pieces() const noexcept { return c_; }
    int threshold() const noexcept { return t_; }
    std::size_t payload_len() const noexcept { return payload_len_; }
    std::size_t piece_len() const noexcept { return piece_len_; }

    std::vector<Piece> encode(const DataItem& item) const;

    // Recovers the payload from at least threshold() pieces of one item.
    Bytes decode(std::span<const Piece> pieces) const;

private:
    int c_;
    int t_;
    std::size_t payload_len_;
    std::size_t piece_len_;
    // parity_coef_[(j - t) * t + i] = l_i(x_{j+1}) for the Lagrange basis over points 1..t
    std::vector<std::uint8_t> parity_coef_;
};

std::vector<Piece> rs_encode(const DataItem& item, int c);

// pieces: any subset of one item's shares; expected_len trims the zero padding.
Bytes rs_decode(std::span<const Piece> pieces, int c, std::size_t expected_len);

constexpr int rs_threshold(int c) { return (c + 2) / 3; }

}  // namespace robust::codec
