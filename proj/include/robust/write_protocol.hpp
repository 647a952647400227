#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <vector>

#include "robust/buckets.hpp"
#include "robust/butterfly.hpp"
#include "robust/simnet.hpp"

namespace robust {

// rep[s] == s for intact s; otherwise the intact server standing in for s.
struct RepresentativeMap {
    std::vector<ServerId> rep;
    std::vector<int> load;  // crashed servers represented by each server

    ServerId operator[](Column c) const { return rep[c]; }
    bool stands_in(Column c) const { return rep[c] != c; }
};

// Crashed servers sorted by id are dealt round-robin over the intact servers
// sorted by id. Throws InvariantViolation("representative-load") if some
// intact server would cover more than two crashed ones.
RepresentativeMap assign_representatives(const std::vector<bool>& crashed);

// One round in which every representative introduces itself to the intact
// butterfly neighbours of the servers it covers.
void introduce_representatives(Network& net, const Topology& topo, const RepresentativeMap& reps,
                               const std::vector<bool>& crashed);

// What a phase step needs to talk over the butterfly.
struct WriteEnv {
    Network& net;
    const Topology& topo;
    const Params& params;
    const RepresentativeMap& reps;
    const std::vector<bool>& crashed;
    std::uint64_t rng_seed = 0;  // per-phase randomness root
};

// Items of one phase, per butterfly column. Column i's sets live on rep(i).
struct PhaseContext {
    int zone = 0;
    BucketId bucket{};
    std::vector<std::vector<DataItem>> requests;    // W_i
    std::vector<std::vector<DataItem>> maintained;  // M_i

    explicit PhaseContext(std::uint32_t n = 0) : requests(n), maintained(n) {}
    std::uint64_t total() const;
};

// Bucket metadata agreed on by an all-reduce at the start of a phase.
struct BucketMeta {
    Timestamp timestamp = 0;
    std::uint32_t item_count = 0;
    std::vector<std::uint64_t> seeds;
    bool empty() const { return timestamp == 0 || item_count == 0; }
};

BucketMeta acquire_bucket_meta(WriteEnv& env, const std::vector<ServerState>& servers, const BucketId& bucket);

// ---- distributed decoding of (sub-)butterflies ----

// Decode BF at `level` whose columns start at `base`, for `bucket` at `ts`.
struct DecodeJob {
    BucketId bucket{};
    Timestamp ts = 0;
    int level = 0;
    Column base = 0;
};

struct DecodeOutcome {
    std::vector<Column> unrecovered;                          // level-0 blocks that could not be rebuilt
    std::map<Column, std::shared_ptr<const Bytes>> blocks;    // level-0 block per recovered column
};

// Bottom-up decode of all jobs in lockstep (max level rounds). A column is
// needy if crashed or its stored timestamp differs from the job's; needy
// columns are rebuilt from k-1 functional group members, level by level.
// Level-0 blocks of non-needy columns are included when `include_intact`.
std::vector<DecodeOutcome> distributed_decode(Network& net, const Topology& topo, const RepresentativeMap& reps,
                                              const std::vector<bool>& crashed,
                                              const std::vector<ServerState>& servers,
                                              std::span<const DecodeJob> jobs, bool include_intact);

struct BucketDecodeResult {
    bool ok = true;
    std::vector<Column> unrecovered_columns;
    std::uint64_t lost_items = 0;
};

// Decodes B_z completely and hands each item to the representative of its
// maintaining column (h_1). Fills ctx.maintained.
BucketDecodeResult decode_bucket(WriteEnv& env, const std::vector<ServerState>& servers, const BucketMeta& meta,
                                 PhaseContext& ctx);

// Resolves duplicate keys across W and M through a hashed coordinator: new
// writes beat stored copies; among new writes the highest column wins.
// Returns the dropped (column, key) pairs of request items.
std::vector<std::pair<Column, Key>> deduplicate(WriteEnv& env, PhaseContext& ctx, std::uint64_t salt);

struct CountResult {
    std::uint64_t num0 = 0;
    std::uint64_t num1 = 0;
    // node_sum[level][column]: tuple aggregated at node (level, column)
    std::vector<std::vector<std::array<std::uint64_t, 2>>> node_sum;
    std::uint64_t total() const { return num0 + num1; }
};

// Bottom-up tuple aggregation by key bit `ctx.zone`; every level-0 node ends
// with the global tuple.
CountResult count_items(WriteEnv& env, const PhaseContext& ctx);

struct SelectResult {
    unsigned bit = 0;
    std::uint64_t selected = 0;
    // D_{z+1} after load balancing: column r holds the item of rank r
    std::vector<std::vector<DataItem>> next_requests;
};

// FULL/PARTLY selection of exactly n items with key bit `ctx.zone` equal to
// the chosen bit, removed from ctx, then load-balanced one per column.
SelectResult select_overflow(WriteEnv& env, PhaseContext& ctx, const CountResult& count);

struct EncodeResult {
    std::vector<StoredBucket> shares;  // per column
    std::map<Key, Timestamp> members;
    int max_pieces_in_blocked = 0;
    std::uint64_t items = 0;
};

// Re-encodes the items held in ctx (W and M) into `bucket` with fresh seeds
// and timestamp `ts`. Produces the new share of every column; the caller
// stores them at intact servers.
EncodeResult encode_bucket(WriteEnv& env, const PhaseContext& ctx, const std::vector<std::uint64_t>& seeds,
                           Timestamp ts, ServerId seed_chooser);

// blocked[l][col / k^l]: the level-l sub-butterfly holds at least
// ceil(2^(l-1)) crashed columns.
std::vector<std::vector<bool>> blocked_sub_butterflies(const Topology& topo, const std::vector<bool>& crashed);

// Pieces of `key` mapped into blocked sub-butterflies, maximised over levels.
int pieces_in_blocked(const Topology& topo, const std::vector<std::vector<bool>>& blocked, const HashFamily& h,
                      Key key);

struct WriteStageResult {
    bool applied = false;
    int phases = 0;
    std::vector<std::pair<Column, Key>> superseded;
    std::string failure;
};

// All phases z = 0, 1, ... for this period's writes. Bucket updates are
// committed only if every phase succeeds.
WriteStageResult write_stage(Cluster& cluster, const RepresentativeMap& reps,
                             const std::vector<WriteRequest>& writes, PeriodReport& report);

}  // namespace robust
