#pragma once

#include <compare>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "robust/codec/reed_solomon.hpp"
#include "robust/types.hpp"

namespace robust {

// A node of the binary bucket tree. prefix holds key bits d_0..d_{zone-1},
// bit i of `prefix` being d_i.
struct BucketId {
    int zone = 0;
    std::uint64_t prefix = 0;

    friend auto operator<=>(const BucketId&, const BucketId&) = default;

    BucketId child(unsigned bit) const {
        return {zone + 1, prefix | (static_cast<std::uint64_t>(bit & 1u) << zone)};
    }
    bool is_root() const { return zone == 0; }
    // "d_0 d_1 ... d_{zone-1}", empty for the root
    std::string prefix_string() const;
};

inline unsigned key_bit(Key key, int i) { return static_cast<unsigned>((key >> i) & 1u); }

// The unique bucket that may hold `key` in `zone`. address_bits is the key width.
BucketId fbucket(int zone, Key key, int address_bits);

bool bucket_size_ok(const BucketId& id, std::uint64_t item_count, std::uint64_t n);

// The c hash functions h_1..h_c : U -> [n] of one bucket encoding.
class HashFamily {
public:
    HashFamily() = default;
    HashFamily(std::vector<std::uint64_t> seeds, std::uint32_t n) : seeds_(std::move(seeds)), n_(n) {}

    int size() const { return static_cast<int>(seeds_.size()); }
    const std::vector<std::uint64_t>& seeds() const { return seeds_; }

    // h_j(key), j in 1..c
    std::uint32_t operator()(int j, Key key) const {
        return static_cast<std::uint32_t>(mix64(seeds_[static_cast<std::size_t>(j - 1)] ^ mix64(key)) % n_);
    }

private:
    std::vector<std::uint64_t> seeds_;
    std::uint32_t n_ = 1;
};

// Level-0 data block: all pieces one server holds for one bucket.
// Layout: [record count, 4 bytes BE] then per piece
// [key 8 bytes BE][index 1 byte][version 4 bytes BE][body piece_len bytes].
namespace block_format {

inline constexpr std::size_t kRecordHeader = 13;

Bytes build(std::span<const codec::Piece> pieces);
std::vector<codec::Piece> parse(std::span<const Byte> block, std::size_t piece_len);

}  // namespace block_format

// One server's share of one bucket: metadata plus the nested butterfly
// codeword, stored as the level-0 block and the per-level parity fragments.
struct StoredBucket {
    Timestamp timestamp = 0;
    std::vector<std::uint64_t> hash_seeds;
    std::uint32_t item_count = 0;
    std::shared_ptr<const Bytes> block;                  // level 0
    std::vector<std::shared_ptr<const Bytes>> parities;  // level l at index l-1

    int top_level() const { return static_cast<int>(parities.size()); }

    // Codeword at `level`: C_0 = block, C_l = [|C_{l-1}| BE32][C_{l-1}][parity_l].
    Bytes codeword(int level) const;

    std::uint64_t stored_bytes() const;

    // Piece (key, index) if this server holds it.
    std::optional<codec::Piece> find_piece(Key key, int index, std::size_t piece_len) const;

private:
    mutable std::unordered_map<std::uint64_t, std::size_t> piece_offsets_;
    mutable bool indexed_ = false;
};

// Strips nested codeword framing down to `target_level`.
Bytes unwrap_codeword(std::span<const Byte> codeword, int from_level, int target_level);
// [own length BE32][own] ++ parity
Bytes wrap_codeword(std::span<const Byte> own, std::span<const Byte> parity);

// Simulator-side ground truth. Never consulted by protocol logic; used to
// verify answers and check invariants.
class GlobalDirectory {
public:
    struct Entry {
        Timestamp version = 0;
        Bytes payload;
        ServerId writer = 0;
    };
    struct BucketRecord {
        Timestamp timestamp = 0;
        std::map<Key, Timestamp> members;  // key -> version stored
    };

    void record_write(Key key, Timestamp version, Bytes payload, ServerId writer);
    const Entry* latest(Key key) const;
    const std::map<Key, Entry>& entries() const { return latest_; }

    void set_bucket(const BucketId& id, BucketRecord rec);
    const BucketRecord* bucket(const BucketId& id) const;
    const std::map<BucketId, BucketRecord>& buckets() const { return buckets_; }
    BucketRecord& mutable_bucket(const BucketId& id) { return buckets_[id]; }

    // For every key with a stored version, the shallowest bucket holding it
    // must hold the newest version and that must be the latest write.
    // Returns a description of the first violation.
    std::optional<std::string> check_freshness(int address_bits) const;

    std::optional<std::string> check_bucket_sizes(std::uint64_t n) const;

    // zone prefix size timestamp, one bucket per line
    std::string snapshot() const;

private:
    std::map<Key, Entry> latest_;
    std::map<BucketId, BucketRecord> buckets_;
};

}  // namespace robust
