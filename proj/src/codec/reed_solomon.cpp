#include "robust/codec/reed_solomon.hpp"

#include <algorithm>
#include <string>

#include "robust/codec/gf256.hpp"

namespace robust::codec {

namespace {

using gf256::div;
using gf256::mul;

// Barycentric weights w_s = 1 / prod_{u != s} (x_s - x_u).
std::vector<std::uint8_t> barycentric_weights(std::span<const std::uint8_t> xs) {
    std::vector<std::uint8_t> w(xs.size());
    for (std::size_t s = 0; s < xs.size(); ++s) {
        std::uint8_t denom = 1;
        for (std::size_t u = 0; u < xs.size(); ++u) {
            if (u != s) denom = mul(denom, static_cast<std::uint8_t>(xs[s] ^ xs[u]));
        }
        w[s] = gf256::inv(denom);
    }
    return w;
}

// Lagrange basis at x (x not in xs): out[s] = l_s(x).
void lagrange_at(std::span<const std::uint8_t> xs, std::span<const std::uint8_t> weights, std::uint8_t x,
                 std::vector<std::uint8_t>& out) {
    out.assign(xs.size(), 0);
    std::uint8_t full = 1;
    for (auto xu : xs) full = mul(full, static_cast<std::uint8_t>(x ^ xu));
    for (std::size_t s = 0; s < xs.size(); ++s) {
        out[s] = div(mul(full, weights[s]), static_cast<std::uint8_t>(x ^ xs[s]));
    }
}

}  // namespace

PieceCodec::PieceCodec(int c, std::size_t payload_len) : c_(c), t_(rs_threshold(c)), payload_len_(payload_len) {
    if (c < 3) throw ParameterError("piece code needs c >= 3, got " + std::to_string(c));
    if (c > 255) throw ParameterError("piece code supports at most 255 pieces, got " + std::to_string(c));
    if (payload_len == 0) throw ParameterError("payload must be non-empty");
    piece_len_ = ceil_div(payload_len, static_cast<std::size_t>(t_));

    std::vector<std::uint8_t> data_points(t_);
    for (int i = 0; i < t_; ++i) data_points[i] = static_cast<std::uint8_t>(i + 1);
    parity_coef_.resize(static_cast<std::size_t>(c_ - t_) * t_);
    const auto weights = barycentric_weights(data_points);
    std::vector<std::uint8_t> w;
    for (int j = t_; j < c_; ++j) {
        lagrange_at(data_points, weights, static_cast<std::uint8_t>(j + 1), w);
        std::copy(w.begin(), w.end(), parity_coef_.begin() + static_cast<std::ptrdiff_t>(j - t_) * t_);
    }
}

std::vector<Piece> PieceCodec::encode(const DataItem& item) const {
    if (item.payload.size() != payload_len_) {
        throw ParameterError("payload length " + std::to_string(item.payload.size()) + " != configured " +
                             std::to_string(payload_len_));
    }
    std::vector<Piece> out(c_);
    for (int j = 0; j < c_; ++j) {
        out[j].item_key = item.key;
        out[j].index = j + 1;
        out[j].version = item.version;
        out[j].body.assign(piece_len_, 0);
    }
    for (int i = 0; i < t_; ++i) {
        const std::size_t begin = static_cast<std::size_t>(i) * piece_len_;
        if (begin >= payload_len_) break;
        const std::size_t len = std::min(piece_len_, payload_len_ - begin);
        std::copy_n(item.payload.begin() + static_cast<std::ptrdiff_t>(begin), len, out[i].body.begin());
    }
    for (int j = t_; j < c_; ++j) {
        auto& dst = out[j].body;
        const auto* coef = parity_coef_.data() + static_cast<std::size_t>(j - t_) * t_;
        for (int i = 0; i < t_; ++i) gf256::mul_add_row(dst.data(), out[i].body.data(), coef[i], piece_len_);
    }
    return out;
}

Bytes PieceCodec::decode(std::span<const Piece> pieces) const {
    // keep one piece per index, lowest indices first
    std::vector<const Piece*> chosen;
    chosen.reserve(pieces.size());
    for (const auto& p : pieces) {
        if (p.index < 1 || p.index > c_) throw ParameterError("piece index out of range: " + std::to_string(p.index));
        chosen.push_back(&p);
    }
    if (!chosen.empty()) {
        const auto& first = *chosen.front();
        for (const auto* p : chosen) {
            if (p->version != first.version || p->item_key != first.item_key) {
                throw MixedVersion("pieces carry different versions or keys");
            }
        }
    }
    std::sort(chosen.begin(), chosen.end(), [](const Piece* a, const Piece* b) { return a->index < b->index; });
    chosen.erase(std::unique(chosen.begin(), chosen.end(),
                             [](const Piece* a, const Piece* b) { return a->index == b->index; }),
                 chosen.end());
    if (static_cast<int>(chosen.size()) < t_) {
        throw InsufficientPieces("need " + std::to_string(t_) + " distinct pieces, got " +
                                 std::to_string(chosen.size()));
    }
    chosen.resize(t_);
    for (const auto* p : chosen) {
        if (p->body.size() != piece_len_) throw ParameterError("piece body has wrong length");
    }

    Bytes padded(static_cast<std::size_t>(t_) * piece_len_, 0);
    std::vector<std::uint8_t> xs(t_);
    std::vector<bool> have(t_ + 1, false);
    for (int s = 0; s < t_; ++s) {
        xs[s] = static_cast<std::uint8_t>(chosen[s]->index);
        if (chosen[s]->index <= t_) {
            have[chosen[s]->index] = true;
            std::copy(chosen[s]->body.begin(), chosen[s]->body.end(),
                      padded.begin() + static_cast<std::ptrdiff_t>(chosen[s]->index - 1) * piece_len_);
        }
    }
    const auto weights = barycentric_weights(xs);
    std::vector<std::uint8_t> w;
    for (int m = 1; m <= t_; ++m) {
        if (have[m]) continue;
        lagrange_at(xs, weights, static_cast<std::uint8_t>(m), w);
        auto* dst = padded.data() + static_cast<std::size_t>(m - 1) * piece_len_;
        for (int s = 0; s < t_; ++s) gf256::mul_add_row(dst, chosen[s]->body.data(), w[s], piece_len_);
    }
    padded.resize(payload_len_);
    return padded;
}

std::vector<Piece> rs_encode(const DataItem& item, int c) { return PieceCodec(c, item.payload.size()).encode(item); }

Bytes rs_decode(std::span<const Piece> pieces, int c, std::size_t expected_len) {
    return PieceCodec(c, expected_len).decode(pieces);
}

}  // namespace robust::codec
