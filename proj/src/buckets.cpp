#include "robust/buckets.hpp"

#include <sstream>

namespace robust {

std::string BucketId::prefix_string() const {
    std::string s;
    s.reserve(static_cast<std::size_t>(zone));
    for (int i = 0; i < zone; ++i) s.push_back(key_bit(prefix, i) ? '1' : '0');
    return s;
}

BucketId fbucket(int zone, Key key, int address_bits) {
    if (zone < 0 || zone > address_bits) {
        throw ParameterError("zone " + std::to_string(zone) + " outside 0.." + std::to_string(address_bits));
    }
    const std::uint64_t mask = zone >= 64 ? ~0ull : ((1ull << zone) - 1);
    return {zone, key & mask};
}

bool bucket_size_ok(const BucketId& id, std::uint64_t item_count, std::uint64_t n) {
    if (id.is_root()) return item_count <= 2 * n;
    return item_count == 0 || (item_count >= n && item_count <= 2 * n);
}

namespace block_format {

Bytes build(std::span<const codec::Piece> pieces) {
    Bytes out;
    std::size_t total = 4;
    for (const auto& p : pieces) total += kRecordHeader + p.body.size();
    out.reserve(total);
    put_be32(out, static_cast<std::uint32_t>(pieces.size()));
    for (const auto& p : pieces) {
        put_be32(out, static_cast<std::uint32_t>(p.item_key >> 32));
        put_be32(out, static_cast<std::uint32_t>(p.item_key));
        out.push_back(static_cast<Byte>(p.index));
        put_be32(out, p.version);
        out.insert(out.end(), p.body.begin(), p.body.end());
    }
    return out;
}

std::vector<codec::Piece> parse(std::span<const Byte> block, std::size_t piece_len) {
    if (block.size() < 4) throw ParameterError("data block shorter than its header");
    const std::uint32_t count = get_be32(block.data());
    if (4 + static_cast<std::uint64_t>(count) * (kRecordHeader + piece_len) > block.size()) {
        throw ParameterError("data block truncated");
    }
    std::vector<codec::Piece> out(count);
    const Byte* p = block.data() + 4;
    for (auto& piece : out) {
        piece.item_key = (static_cast<Key>(get_be32(p)) << 32) | get_be32(p + 4);
        piece.index = p[8];
        piece.version = get_be32(p + 9);
        piece.body.assign(p + kRecordHeader, p + kRecordHeader + piece_len);
        p += kRecordHeader + piece_len;
    }
    return out;
}

}  // namespace block_format

Bytes wrap_codeword(std::span<const Byte> own, std::span<const Byte> parity) {
    Bytes out;
    out.reserve(4 + own.size() + parity.size());
    put_be32(out, static_cast<std::uint32_t>(own.size()));
    out.insert(out.end(), own.begin(), own.end());
    out.insert(out.end(), parity.begin(), parity.end());
    return out;
}

Bytes unwrap_codeword(std::span<const Byte> codeword, int from_level, int target_level) {
    std::span<const Byte> cur = codeword;
    for (int level = from_level; level > target_level; --level) {
        if (cur.size() < 4) throw ParameterError("codeword shorter than its header");
        const std::uint32_t len = get_be32(cur.data());
        if (4ull + len > cur.size()) throw ParameterError("codeword header exceeds its size");
        cur = cur.subspan(4, len);
    }
    return Bytes(cur.begin(), cur.end());
}

Bytes StoredBucket::codeword(int level) const {
    if (level < 0 || level > top_level()) throw ParameterError("codeword level beyond the stored stack");
    Bytes cur = block ? *block : Bytes{};
    for (int l = 1; l <= level; ++l) cur = wrap_codeword(cur, *parities[static_cast<std::size_t>(l - 1)]);
    return cur;
}

std::uint64_t StoredBucket::stored_bytes() const {
    std::uint64_t total = sizeof(timestamp) + sizeof(item_count) + 8 * hash_seeds.size();
    if (block) total += block->size();
    for (const auto& p : parities) total += 4 + p->size();
    return total;
}

std::optional<codec::Piece> StoredBucket::find_piece(Key key, int index, std::size_t piece_len) const {
    if (!block) return std::nullopt;
    const std::size_t rec = block_format::kRecordHeader + piece_len;
    if (!indexed_) {
        const std::uint32_t count = get_be32(block->data());
        piece_offsets_.reserve(count);
        for (std::uint32_t r = 0; r < count; ++r) {
            const std::size_t off = 4 + r * rec;
            const Byte* p = block->data() + off;
            const Key k = (static_cast<Key>(get_be32(p)) << 32) | get_be32(p + 4);
            piece_offsets_[mix64(k) ^ p[8]] = off;
        }
        indexed_ = true;
    }
    auto it = piece_offsets_.find(mix64(key) ^ static_cast<std::uint64_t>(index));
    if (it == piece_offsets_.end()) return std::nullopt;
    const Byte* p = block->data() + it->second;
    codec::Piece piece;
    piece.item_key = (static_cast<Key>(get_be32(p)) << 32) | get_be32(p + 4);
    piece.index = p[8];
    if (piece.item_key != key || piece.index != index) return std::nullopt;  // hash collision
    piece.version = get_be32(p + 9);
    piece.body.assign(p + block_format::kRecordHeader, p + rec);
    return piece;
}

void GlobalDirectory::record_write(Key key, Timestamp version, Bytes payload, ServerId writer) {
    latest_[key] = Entry{version, std::move(payload), writer};
}

const GlobalDirectory::Entry* GlobalDirectory::latest(Key key) const {
    auto it = latest_.find(key);
    return it == latest_.end() ? nullptr : &it->second;
}

void GlobalDirectory::set_bucket(const BucketId& id, BucketRecord rec) { buckets_[id] = std::move(rec); }

const GlobalDirectory::BucketRecord* GlobalDirectory::bucket(const BucketId& id) const {
    auto it = buckets_.find(id);
    return it == buckets_.end() ? nullptr : &it->second;
}

std::optional<std::string> GlobalDirectory::check_freshness(int address_bits) const {
    for (const auto& [key, entry] : latest_) {
        std::optional<Timestamp> shallowest;
        Timestamp newest = 0;
        for (int z = 0; z <= address_bits; ++z) {
            const auto* rec = bucket(fbucket(z, key, address_bits));
            if (!rec) break;  // children exist only below a materialized parent
            auto it = rec->members.find(key);
            if (it == rec->members.end()) continue;
            if (!shallowest) shallowest = it->second;
            newest = std::max(newest, it->second);
        }
        if (!shallowest) return "key " + std::to_string(key) + " is stored in no bucket";
        if (*shallowest != newest) {
            return "key " + std::to_string(key) + ": shallowest copy has version " + std::to_string(*shallowest) +
                   " but a deeper bucket holds " + std::to_string(newest);
        }
        if (*shallowest != entry.version) {
            return "key " + std::to_string(key) + ": stored version " + std::to_string(*shallowest) +
                   " differs from the latest write " + std::to_string(entry.version);
        }
    }
    return std::nullopt;
}

std::optional<std::string> GlobalDirectory::check_bucket_sizes(std::uint64_t n) const {
    for (const auto& [id, rec] : buckets_) {
        if (!bucket_size_ok(id, rec.members.size(), n)) {
            return "bucket (" + std::to_string(id.zone) + ",'" + id.prefix_string() + "') holds " +
                   std::to_string(rec.members.size()) + " items";
        }
    }
    return std::nullopt;
}

std::string GlobalDirectory::snapshot() const {
    std::ostringstream out;
    for (const auto& [id, rec] : buckets_) {
        out << id.zone << ' ' << (id.zone == 0 ? "-" : id.prefix_string()) << ' ' << rec.members.size() << ' '
            << rec.timestamp << '\n';
    }
    return out.str();
}

}  // namespace robust
