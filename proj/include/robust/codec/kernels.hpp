#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "robust/codec/reed_solomon.hpp"
#include "robust/types.hpp"

// Batch kernels used by the encode path. Each has a serial reference and an
// OpenMP version that must agree bit for bit.
namespace robust::codec::kernels {

std::vector<std::vector<Piece>> encode_items_serial(const PieceCodec& codec, std::span<const DataItem> items);
std::vector<std::vector<Piece>> encode_items_parallel(const PieceCodec& codec, std::span<const DataItem> items);

// Group parities for one butterfly level. `codewords[col]` is the level below's
// codeword of column col; the group of col is the k columns that differ only
// in the base-k digit of weight `stride`. Returns the parity of every column.
std::vector<Bytes> level_parities_serial(std::span<const Bytes* const> codewords, int k, std::uint32_t stride);
std::vector<Bytes> level_parities_parallel(std::span<const Bytes* const> codewords, int k, std::uint32_t stride);

int max_threads();

}  // namespace robust::codec::kernels
