#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "robust/buckets.hpp"
#include "robust/butterfly.hpp"
#include "robust/types.hpp"

namespace robust {

class RoundCapExceeded : public Error {
public:
    using Error::Error;
};

// Run parameters shared by every module.
struct Params {
    std::uint32_t n = 16;
    int k = 4;
    int d = 2;
    int p = 2;                     // address width factor: Lambda = p * ceil(log2 n)
    int c = 24;                    // pieces per item
    std::size_t payload_len = 64;  // S_d in bytes
    int c_bits = 1;
    int alpha = 73;
    int beta = 3;
    int c_kappa = 4;
    std::uint32_t crash_budget = 0;
    std::uint64_t round_cap = 0;  // 0: derive from c_rounds
    double c_rounds = 2.0;
    std::uint64_t seed = 1;

    int log2n() const { return static_cast<int>(ceil_log2(n)); }
    int address_bits() const { return p * log2n(); }
    int threshold() const { return (c + 2) / 3; }
    int kappa() const { return c_kappa * log2n(); }
    std::uint64_t effective_round_cap() const;

    // Throws ConfigError naming the offending field.
    void validate() const;
};

enum class MsgKind : std::uint8_t {
    probe,
    fail,
    not_exists,
    piece,
    decode,
    decode_check,
    cong,
    full,
    partly,
    count_tuple,
    block_transfer,
    hash_bcast,
    rep_ctrl,
    meta_request,
    meta_reply,
    seed_request,
    seed_reply,
    key_claim,
    key_drop,
    item_transfer,
};

const char* to_string(MsgKind kind);

struct Message {
    MsgKind kind = MsgKind::probe;
    ServerId src = 0;
    ServerId dst = 0;
    NodeId from{};
    NodeId to{};
    Key key = 0;
    std::int32_t index = 0;
    Timestamp ts = 0;
    std::int32_t level = 0;
    Column target = 0;
    std::uint64_t a = 0;
    std::uint64_t b = 0;
    std::uint64_t ref = 0;  // protocol-side handle (request id, piece slot, ...)
    std::shared_ptr<const Bytes> data;
    std::uint32_t bytes = 0;  // accounted size of the payload
    std::uint32_t seq = 0;    // set by the engine
};

// Per-round traffic summary.
struct RoundStats {
    std::uint64_t round = 0;
    std::string phase;
    std::uint64_t messages = 0;
    std::uint32_t max_sent = 0;
    std::uint32_t max_received = 0;
    std::uint32_t congestion = 0;  // max over servers of max(sent, received)
    std::uint32_t max_bytes = 0;
    std::uint64_t dropped = 0;     // addressed to a crashed server
};

// Synchronous lockstep delivery. Messages sent during round r are delivered
// at the start of round r+1, ordered by destination, then (source, sequence).
class Network {
public:
    explicit Network(std::uint32_t n);

    void set_crashed(const std::vector<bool>* crashed) { crashed_ = crashed; }
    void set_phase(std::string phase) { phase_ = std::move(phase); }
    const std::string& phase() const { return phase_; }
    void set_round_cap(std::uint64_t cap) { cap_ = cap; }
    // Keep the full per-server matrix for every round (memory heavy).
    void set_detailed(bool on) { detailed_ = on; }

    void send(Message m);
    bool idle() const { return outbox_.empty(); }
    std::size_t in_flight() const { return outbox_.size(); }

    // Advances one round and returns the delivered messages.
    std::vector<Message> run_round();

    std::uint64_t round() const { return round_; }
    const std::vector<RoundStats>& stats() const { return stats_; }
    // detail()[r][s] = {sent, received} of server s in stats()[r]
    const std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>>& detail() const { return detail_; }
    void reset();

private:
    std::uint32_t n_;
    const std::vector<bool>* crashed_ = nullptr;
    std::string phase_;
    std::uint64_t cap_ = 0;
    bool detailed_ = false;
    std::uint64_t round_ = 0;
    std::uint32_t seq_ = 0;
    std::vector<Message> outbox_;
    std::vector<RoundStats> stats_;
    std::vector<std::vector<std::pair<std::uint32_t, std::uint32_t>>> detail_;
};

struct ServerState {
    ServerId id = 0;
    bool crashed = false;
    std::map<BucketId, StoredBucket> buckets;

    const StoredBucket* bucket(const BucketId& b) const {
        auto it = buckets.find(b);
        return it == buckets.end() ? nullptr : &it->second;
    }
    Timestamp timestamp(const BucketId& b) const {
        const auto* s = bucket(b);
        return s ? s->timestamp : 0;
    }
};

struct WriteRequest {
    ServerId server = 0;
    Key key = 0;
    Bytes payload;
};

struct LookupRequest {
    ServerId server = 0;
    Key key = 0;
};

struct RequestBatch {
    std::vector<WriteRequest> writes;
    std::vector<LookupRequest> lookups;
};

enum class Outcome { answered, not_exists, failed, applied, dropped };
const char* to_string(Outcome o);

struct RequestOutcome {
    std::uint32_t id = 0;
    bool is_write = false;
    ServerId server = 0;
    Key key = 0;
    Outcome outcome = Outcome::failed;
    Timestamp version = 0;
    std::optional<Bytes> value;
    int zone = -1;
    bool correct = true;  // checked against the directory
    std::string note;
};

struct PhaseStat {
    std::string name;
    int zone = -1;
    std::uint64_t rounds = 0;
    std::uint32_t congestion = 0;
};

struct PeriodReport {
    Timestamp period = 0;
    std::vector<ServerId> crashed;
    std::uint64_t rounds_used = 0;
    std::uint64_t write_rounds = 0;
    std::uint64_t lookup_rounds = 0;
    std::uint64_t preprocessing_rounds = 0;
    std::uint32_t max_congestion = 0;
    std::uint32_t max_congestion_decoding = 0;
    std::uint32_t max_message_bytes = 0;
    std::uint64_t messages = 0;
    std::vector<PhaseStat> phases;
    std::vector<RoundStats> round_stats;
    int write_phases = 0;
    std::uint64_t stored_bytes = 0;
    std::uint64_t live_bytes = 0;
    double redundancy = 0.0;
    std::vector<RequestOutcome> outcomes;
    std::vector<std::string> events;
    // lemma statistics
    std::map<int, std::uint64_t> belongs_to_level;    // level -> distinct keys, after probing
    std::map<int, std::uint64_t> entering_subphase;   // level -> distinct keys
    int max_pieces_in_blocked = 0;                    // over re-written items and levels
    std::uint64_t items_rewritten = 0;
    std::uint64_t combined_probes = 0;                // probe messages saved by combining
    std::uint64_t probe_messages = 0;
    std::uint64_t safety_violations = 0;
    bool aborted = false;
    std::string abort_kind;  // "invariant" or "round-cap"
    std::string abort_reason;
};

// Everything the simulator owns. Protocol code reaches storage only through
// the servers; the directory is the oracle and never feeds protocol logic.
class Cluster {
public:
    explicit Cluster(Params params);

    const Params& params() const { return params_; }
    const Topology& topology() const { return topo_; }
    Network& network() { return net_; }
    const Network& network() const { return net_; }
    std::vector<ServerState>& servers() { return servers_; }
    const std::vector<ServerState>& servers() const { return servers_; }
    GlobalDirectory& directory() { return directory_; }
    const GlobalDirectory& directory() const { return directory_; }
    const std::vector<bool>& crash_flags() const { return crashed_; }

    bool is_crashed(ServerId s) const { return crashed_.at(s); }
    Timestamp now() const { return period_; }

    struct PeriodContext {
        Timestamp period = 0;
        std::vector<WriteRequest> writes;    // accepted, sorted by server
        std::vector<LookupRequest> lookups;  // accepted, sorted by server
        std::vector<RequestOutcome> dropped;
    };

    // Applies the crash set and validates the batch. Throws ConfigError when
    // the crash budget or the one-request-per-kind bound is violated.
    PeriodContext begin_period(const std::vector<ServerId>& crash_set, const RequestBatch& batch);

    // Independent random stream for (purpose, a, b) within the current period.
    std::mt19937_64 stream(std::uint64_t purpose, std::uint64_t a = 0, std::uint64_t b = 0) const;

    std::uint64_t stored_bytes() const;

private:
    Params params_;
    Topology topo_;
    Network net_;
    std::vector<ServerState> servers_;
    std::vector<bool> crashed_;
    GlobalDirectory directory_;
    Timestamp period_ = 0;
};

// Stream purposes.
namespace streams {
inline constexpr std::uint64_t hash_seeds = 1;
inline constexpr std::uint64_t probe_starts = 2;
inline constexpr std::uint64_t partly_choice = 3;
inline constexpr std::uint64_t decode_choice = 4;
inline constexpr std::uint64_t meta_samples = 5;
inline constexpr std::uint64_t dedup_salt = 6;
inline constexpr std::uint64_t adversary = 7;
inline constexpr std::uint64_t workload = 8;
}  // namespace streams

}  // namespace robust
