#include "robust/codec/group_code.hpp"

#include <algorithm>
#include <string>

namespace robust::codec {

namespace {

// fragment number (1..k-1) of member j that enters parity i
int fragment_of(int i, int j, int k) { return ((j - i) % k + k) % k; }

void xor_fragment(Byte* dst, std::span<const Byte> own, int fragment, std::size_t frag_len) {
    // framed block = [be32 len][own], zero padded; fragment r covers bytes [(r-1)f, rf)
    const std::size_t begin = static_cast<std::size_t>(fragment - 1) * frag_len;
    const std::size_t framed = own.size() + 4;
    Byte header[4] = {static_cast<Byte>(own.size() >> 24), static_cast<Byte>(own.size() >> 16),
                      static_cast<Byte>(own.size() >> 8), static_cast<Byte>(own.size())};
    const std::size_t end = std::min(begin + frag_len, framed);
    for (std::size_t pos = begin; pos < end; ++pos) {
        dst[pos - begin] ^= pos < 4 ? header[pos] : own[pos - 4];
    }
}

}  // namespace

std::vector<Bytes> group_parities(std::span<const Bytes* const> blocks) {
    const int k = static_cast<int>(blocks.size());
    if (k < 2) throw ParameterError("group code needs k >= 2");
    std::size_t z = 0;
    for (const auto* b : blocks) z = std::max(z, framed_size(b->size()));
    const std::size_t f = parity_size(z, k);
    std::vector<Bytes> parity(k, Bytes(f, 0));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            if (j == i) continue;
            xor_fragment(parity[i].data(), *blocks[j], fragment_of(i, j, k), f);
        }
    }
    return parity;
}

std::vector<BlockGroupCodeword> group_encode(std::span<const Bytes> blocks) {
    std::vector<const Bytes*> ptrs;
    ptrs.reserve(blocks.size());
    for (const auto& b : blocks) ptrs.push_back(&b);
    auto parity = group_parities(ptrs);
    std::vector<BlockGroupCodeword> out(blocks.size());
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        out[i].own_block = blocks[i];
        out[i].parity_fragment = std::move(parity[i]);
        out[i].group_index = static_cast<int>(i);
    }
    return out;
}

Bytes group_recover_missing(std::span<const CodewordView> survivors, int k, int missing) {
    if (k < 2) throw ParameterError("group code needs k >= 2");
    if (static_cast<int>(survivors.size()) < k - 1) {
        throw InsufficientCodewords("need " + std::to_string(k - 1) + " codewords, got " +
                                    std::to_string(survivors.size()));
    }
    const std::size_t f = survivors.front().parity_fragment.size();
    for (const auto& s : survivors) {
        if (s.parity_fragment.size() != f) throw ParameterError("parity fragments of unequal length");
        if (framed_size(s.own_block.size()) > f * static_cast<std::size_t>(k - 1)) {
            throw ParameterError("own block longer than the group's padded length");
        }
    }
    Bytes framed(f * static_cast<std::size_t>(k - 1), 0);
    for (const auto& s : survivors) {
        const int i = s.group_index;
        Byte* dst = framed.data() + static_cast<std::size_t>(fragment_of(i, missing, k) - 1) * f;
        std::copy(s.parity_fragment.begin(), s.parity_fragment.end(), dst);
        for (const auto& o : survivors) {
            if (o.group_index == i) continue;
            xor_fragment(dst, o.own_block, fragment_of(i, o.group_index, k), f);
        }
    }
    const std::uint32_t len = get_be32(framed.data());
    if (len + 4ull > framed.size()) throw ParameterError("recovered block has a corrupt length header");
    return Bytes(framed.begin() + 4, framed.begin() + 4 + len);
}

std::vector<Bytes> group_decode(std::span<const BlockGroupCodeword> codewords, int k, std::optional<int> missing) {
    if (k < 2) throw ParameterError("group code needs k >= 2");
    std::vector<const BlockGroupCodeword*> by_index(k, nullptr);
    for (const auto& cw : codewords) {
        if (cw.group_index < 0 || cw.group_index >= k) throw ParameterError("group index out of range");
        by_index[cw.group_index] = &cw;
    }
    std::vector<int> absent;
    for (int i = 0; i < k; ++i) {
        if (!by_index[i]) absent.push_back(i);
    }
    if (absent.size() >= 2) {
        throw InsufficientCodewords(std::to_string(absent.size()) + " of " + std::to_string(k) +
                                    " codewords missing");
    }
    if (missing && (absent.empty() ? by_index[*missing] == nullptr : absent.front() != *missing)) {
        throw ParameterError("declared missing index does not match the codewords");
    }
    std::vector<Bytes> out(k);
    std::vector<CodewordView> views;
    for (int i = 0; i < k; ++i) {
        if (!by_index[i]) continue;
        out[i] = by_index[i]->own_block;
        views.push_back({i, by_index[i]->own_block, by_index[i]->parity_fragment});
    }
    if (!absent.empty()) out[absent.front()] = group_recover_missing(views, k, absent.front());
    return out;
}

Bytes serialize_codeword(const BlockGroupCodeword& cw) {
    Bytes out;
    out.reserve(4 + cw.own_block.size() + cw.parity_fragment.size());
    put_be32(out, static_cast<std::uint32_t>(cw.own_block.size()));
    out.insert(out.end(), cw.own_block.begin(), cw.own_block.end());
    out.insert(out.end(), cw.parity_fragment.begin(), cw.parity_fragment.end());
    return out;
}

BlockGroupCodeword parse_codeword(std::span<const Byte> bytes, int group_index) {
    if (bytes.size() < 4) throw ParameterError("codeword shorter than its header");
    const std::uint32_t len = get_be32(bytes.data());
    if (4ull + len > bytes.size()) throw ParameterError("codeword header exceeds its size");
    BlockGroupCodeword cw;
    cw.own_block.assign(bytes.begin() + 4, bytes.begin() + 4 + len);
    cw.parity_fragment.assign(bytes.begin() + 4 + len, bytes.end());
    cw.group_index = group_index;
    return cw;
}

}  // namespace robust::codec
