#include "robust/codec/kernels.hpp"

#include "robust/codec/group_code.hpp"

#ifdef ROBUST_HAVE_OPENMP
#include <omp.h>
#endif

namespace robust::codec::kernels {

namespace {

void check_level(std::size_t n, int k, std::uint32_t stride) {
    if (k < 2 || stride == 0 || n % (static_cast<std::size_t>(stride) * k) != 0) {
        throw ParameterError("column count is not a multiple of the group span");
    }
}

// Parities of the group whose lowest member is `base`.
void one_group(std::span<const Bytes* const> codewords, int k, std::uint32_t stride, std::size_t base,
               std::vector<Bytes>& out) {
    std::vector<const Bytes*> members(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) members[j] = codewords[base + static_cast<std::size_t>(j) * stride];
    auto parity = group_parities(members);
    for (int j = 0; j < k; ++j) out[base + static_cast<std::size_t>(j) * stride] = std::move(parity[j]);
}

std::size_t group_base(std::size_t g, int k, std::uint32_t stride) {
    // g-th group: low digits below stride, high digits above stride*k
    return (g / stride) * stride * static_cast<std::size_t>(k) + g % stride;
}

}  // namespace

std::vector<std::vector<Piece>> encode_items_serial(const PieceCodec& codec, std::span<const DataItem> items) {
    std::vector<std::vector<Piece>> out(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) out[i] = codec.encode(items[i]);
    return out;
}

std::vector<std::vector<Piece>> encode_items_parallel(const PieceCodec& codec, std::span<const DataItem> items) {
    std::vector<std::vector<Piece>> out(items.size());
    const auto count = static_cast<std::int64_t>(items.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < count; ++i) out[i] = codec.encode(items[i]);
    return out;
}

std::vector<Bytes> level_parities_serial(std::span<const Bytes* const> codewords, int k, std::uint32_t stride) {
    check_level(codewords.size(), k, stride);
    std::vector<Bytes> out(codewords.size());
    const std::size_t groups = codewords.size() / static_cast<std::size_t>(k);
    for (std::size_t g = 0; g < groups; ++g) one_group(codewords, k, stride, group_base(g, k, stride), out);
    return out;
}

std::vector<Bytes> level_parities_parallel(std::span<const Bytes* const> codewords, int k, std::uint32_t stride) {
    check_level(codewords.size(), k, stride);
    std::vector<Bytes> out(codewords.size());
    const auto groups = static_cast<std::int64_t>(codewords.size() / static_cast<std::size_t>(k));
#pragma omp parallel for schedule(dynamic, 4)
    for (std::int64_t g = 0; g < groups; ++g) {
        one_group(codewords, k, stride, group_base(static_cast<std::size_t>(g), k, stride), out);
    }
    return out;
}

int max_threads() {
#ifdef ROBUST_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

}  // namespace robust::codec::kernels
