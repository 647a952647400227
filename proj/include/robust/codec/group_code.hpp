#pragma once

#include <optional>
#include <span>
#include <vector>

#include "robust/types.hpp"

namespace robust::codec {

// Diagonal XOR parity over a group of k blocks.
//
// Each block is framed with its 4-byte big-endian true length, zero padded to
// the group's common length z and cut into k-1 fragments of ceil(z/(k-1))
// bytes. Member i keeps its own block plus
//
//     p_i = XOR_{j != i} fragment_j[(j - i) mod k]        (fragments numbered 1..k-1)
//
// so any k-1 members recover the missing block: each surviving p_i yields
// fragment (m - i) mod k of the missing member m, and those cover 1..k-1.
struct BlockGroupCodeword {
    Bytes own_block;  // systematic part, unpadded
    Bytes parity_fragment;
    int group_index = 0;

    friend bool operator==(const BlockGroupCodeword&, const BlockGroupCodeword&) = default;
};

std::vector<BlockGroupCodeword> group_encode(std::span<const Bytes> blocks);

// Same, reading the blocks through pointers (no copies of the inputs).
std::vector<Bytes> group_parities(std::span<const Bytes* const> blocks);

// Recovers all k blocks from at least k-1 codewords. If `missing` is given it
// must match the one absent group index.
std::vector<Bytes> group_decode(std::span<const BlockGroupCodeword> codewords, int k,
                                std::optional<int> missing = std::nullopt);

// Recovers only the missing member's block from the k-1 survivors, given as
// (group_index, own_block, parity) views.
struct CodewordView {
    int group_index = 0;
    std::span<const Byte> own_block;
    std::span<const Byte> parity_fragment;
};
Bytes group_recover_missing(std::span<const CodewordView> survivors, int k, int missing);

// Byte layout: [own length, 4 bytes BE][own block][parity fragment].
Bytes serialize_codeword(const BlockGroupCodeword& cw);
BlockGroupCodeword parse_codeword(std::span<const Byte> bytes, int group_index);

// Size of the framed block (header + body).
constexpr std::size_t framed_size(std::size_t raw) { return raw + 4; }
constexpr std::size_t parity_size(std::size_t padded_framed, int k) {
    return static_cast<std::size_t>(ceil_div(padded_framed, static_cast<std::uint64_t>(k - 1)));
}

}  // namespace robust::codec
