#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "robust/write_protocol.hpp"

using namespace robust;

namespace {

Params small_params(std::uint32_t n = 16, int k = 4, int d = 2) {
    Params p;
    p.n = n;
    p.k = k;
    p.d = d;
    p.c = 6;
    p.payload_len = 16;
    p.crash_budget = 3;
    p.seed = 7;
    return p;
}

Bytes payload_for(Key key, Timestamp t, std::size_t len) {
    Bytes b(len);
    std::uint64_t x = mix64(key * 31 + t);
    for (auto& v : b) {
        v = static_cast<Byte>(x);
        x = mix64(x);
    }
    return b;
}

std::vector<WriteRequest> random_writes(const Params& p, std::mt19937_64& rng, Timestamp t, Key key_space) {
    std::vector<WriteRequest> out;
    key_space = std::min<Key>(key_space, Key{1} << p.address_bits());
    for (ServerId s = 0; s < p.n; ++s) {
        const Key key = rng() % key_space;
        out.push_back({s, key, payload_for(key, t, p.payload_len)});
    }
    return out;
}

// Runs one write stage the way the harness does.
WriteStageResult run_writes(Cluster& cl, const std::vector<ServerId>& crash, const std::vector<WriteRequest>& w,
                            PeriodReport& rep) {
    RequestBatch batch;
    batch.writes = w;
    auto ctx = cl.begin_period(crash, batch);
    auto reps = assign_representatives(cl.crash_flags());
    introduce_representatives(cl.network(), cl.topology(), reps, cl.crash_flags());
    return write_stage(cl, reps, ctx.writes, rep);
}

// Items each intact server's block says it holds, decoded from the pieces.
std::map<Key, Bytes> decode_from_blocks(const Cluster& cl, const BucketId& id) {
    const auto& p = cl.params();
    codec::PieceCodec codec(p.c, p.payload_len);
    std::map<Key, std::vector<codec::Piece>> pieces;
    for (const auto& s : cl.servers()) {
        const auto* b = s.bucket(id);
        if (!b) continue;
        for (auto& pc : block_format::parse(*b->block, codec.piece_len())) pieces[pc.item_key].push_back(pc);
    }
    std::map<Key, Bytes> out;
    for (auto& [k, v] : pieces) out[k] = codec.decode(v);
    return out;
}

}  // namespace

TEST(Representatives, NineServersTwoCrashed) {
    std::vector<bool> crashed(9, false);
    crashed[0] = crashed[1] = true;
    auto r = assign_representatives(crashed);
    EXPECT_EQ(r[0], 2u);
    EXPECT_EQ(r[1], 3u);
    EXPECT_NE(r[0], r[1]);
    for (ServerId s = 2; s < 9; ++s) EXPECT_EQ(r[s], s);
    EXPECT_TRUE(r.stands_in(0));
    EXPECT_FALSE(r.stands_in(5));
}

TEST(Representatives, OverloadAborts) {
    std::vector<bool> crashed{true, true, true, false};
    EXPECT_THROW(assign_representatives(crashed), InvariantViolation);
}

TEST(Representatives, LoadAtMostTwo) {
    std::vector<bool> crashed(16, false);
    for (int s : {0, 3, 5, 6, 9, 10, 11}) crashed[s] = true;
    auto r = assign_representatives(crashed);
    for (ServerId s = 0; s < 16; ++s) {
        EXPECT_FALSE(crashed[r[s]]);
        EXPECT_LE(r.load[s], 2);
    }
}

TEST(WriteStage, StoredItemsMatchDirectory) {
    auto p = small_params();
    Cluster cl(p);
    std::mt19937_64 rng(3);
    for (int period = 1; period <= 5; ++period) {
        PeriodReport rep;
        auto w = random_writes(p, rng, static_cast<Timestamp>(period), 1000);
        auto res = run_writes(cl, {}, w, rep);
        ASSERT_TRUE(res.applied) << res.failure;
        EXPECT_FALSE(cl.directory().check_freshness(p.address_bits()).has_value());
        EXPECT_FALSE(cl.directory().check_bucket_sizes(p.n).has_value());
    }
    for (const auto& [id, rec] : cl.directory().buckets()) {
        auto items = decode_from_blocks(cl, id);
        ASSERT_EQ(items.size(), rec.members.size());
        for (const auto& [key, version] : rec.members) {
            ASSERT_TRUE(items.count(key));
            EXPECT_EQ(items[key], payload_for(key, version, p.payload_len));
        }
    }
    // 80 distinct-ish keys into 16 servers must overflow the root
    EXPECT_GT(cl.directory().buckets().size(), 1u);
}

TEST(WriteStage, SurvivesCrashesAcrossPeriods) {
    auto p = small_params();
    Cluster cl(p);
    std::mt19937_64 rng(11);
    const std::vector<std::vector<ServerId>> crashes{{}, {3}, {3, 12}, {0, 5, 9}, {}, {7}};
    for (std::size_t i = 0; i < crashes.size(); ++i) {
        PeriodReport rep;
        auto w = random_writes(p, rng, static_cast<Timestamp>(i + 1), 200);
        auto res = run_writes(cl, crashes[i], w, rep);
        ASSERT_TRUE(res.applied) << res.failure;
        EXPECT_FALSE(cl.directory().check_freshness(p.address_bits()).has_value()) << "period " << i + 1;
    }
}

TEST(WriteStage, DuplicateKeysHighestServerWins) {
    auto p = small_params();
    Cluster cl(p);
    std::vector<WriteRequest> w;
    for (ServerId s : {2u, 9u, 5u}) w.push_back({s, 42, payload_for(42, s, p.payload_len)});
    PeriodReport rep;
    auto res = run_writes(cl, {}, w, rep);
    ASSERT_TRUE(res.applied);
    EXPECT_EQ(res.superseded.size(), 2u);
    const auto* e = cl.directory().latest(42);
    ASSERT_NE(e, nullptr);
    EXPECT_EQ(e->writer, 9u);
    EXPECT_EQ(cl.directory().bucket(BucketId{})->members.size(), 1u);
}

TEST(DistributedDecode, RebuildsCrashedAndOutdatedColumns) {
    auto p = small_params(27, 3, 3);
    Cluster cl(p);
    std::mt19937_64 rng(5);
    PeriodReport rep;
    ASSERT_TRUE(run_writes(cl, {}, random_writes(p, rng, 1, 5000), rep).applied);
    // server 4 crashes during period 2 and misses that update
    ASSERT_TRUE(run_writes(cl, {4}, random_writes(p, rng, 2, 5000), rep).applied);
    RequestBatch none;
    cl.begin_period({13, 20}, none);
    auto reps = assign_representatives(cl.crash_flags());
    const auto* ref = cl.servers()[0].bucket(BucketId{});
    DecodeJob job{BucketId{}, ref->timestamp, 3, 0};
    auto out = distributed_decode(cl.network(), cl.topology(), reps, cl.crash_flags(), cl.servers(),
                                  std::span(&job, 1), true);
    EXPECT_TRUE(out[0].unrecovered.empty());
    ASSERT_EQ(out[0].blocks.size(), 27u);
    EXPECT_EQ(cl.network().round(), 3u);

    // crashed servers keep their (current) shares on disk, so they are the reference
    for (Column x : {13u, 20u}) EXPECT_EQ(*out[0].blocks[x], *cl.servers()[x].bucket(BucketId{})->block);
    // server 4 missed period 2; its rebuilt block holds exactly the pieces hashing to it
    codec::PieceCodec codec(p.c, p.payload_len);
    HashFamily h(ref->hash_seeds, p.n);
    std::size_t expect = 0;
    for (const auto& [key, v] : cl.directory().bucket(BucketId{})->members) {
        for (int j = 1; j <= p.c; ++j) expect += h(j, key) == 4u ? 1 : 0;
    }
    auto rebuilt = block_format::parse(*out[0].blocks[4], codec.piece_len());
    EXPECT_EQ(rebuilt.size(), expect);
    for (const auto& pc : rebuilt) EXPECT_EQ(h(pc.index, pc.item_key), 4u);
    EXPECT_EQ(*out[0].blocks[1], *cl.servers()[1].bucket(BucketId{})->block);
}

TEST(DistributedDecode, TwoCrashesInOneGroupAreUnrecoverableLocally) {
    auto p = small_params(9, 3, 2);
    Cluster cl(p);
    std::mt19937_64 rng(9);
    PeriodReport rep;
    ASSERT_TRUE(run_writes(cl, {}, random_writes(p, rng, 1, 5000), rep).applied);
    RequestBatch none;
    cl.begin_period({0, 1}, none);
    auto reps = assign_representatives(cl.crash_flags());
    DecodeJob job{BucketId{}, 1, 1, 0};
    auto out = distributed_decode(cl.network(), cl.topology(), reps, cl.crash_flags(), cl.servers(),
                                  std::span(&job, 1), false);
    EXPECT_EQ(out[0].unrecovered, (std::vector<Column>{0, 1}));
    // at full height the other level-1 groups supply the missing blocks
    job.level = 2;
    out = distributed_decode(cl.network(), cl.topology(), reps, cl.crash_flags(), cl.servers(), std::span(&job, 1),
                             false);
    EXPECT_TRUE(out[0].unrecovered.empty());
    EXPECT_EQ(out[0].blocks.size(), 2u);
}

TEST(CountAndSelect, MatchesDirectTally) {
    auto p = small_params();
    Cluster cl(p);
    RequestBatch none;
    cl.begin_period({2}, none);
    auto reps = assign_representatives(cl.crash_flags());
    WriteEnv env{cl.network(), cl.topology(), cl.params(), reps, cl.crash_flags(), 99};
    PhaseContext ctx(p.n);
    ctx.zone = 1;
    std::mt19937_64 rng(1);
    std::uint64_t ones = 0, zeros = 0;
    std::set<Key> used;
    for (Column x = 0; x < p.n; ++x) {
        for (int i = 0; i < 3; ++i) {
            Key key;
            do key = rng() % 100000; while (!used.insert(key).second);
            (key_bit(key, 1) ? ones : zeros)++;
            (i == 0 ? ctx.requests[x] : ctx.maintained[x]).push_back({key, Bytes(p.payload_len, 1), 1});
        }
    }
    auto count = count_items(env, ctx);
    EXPECT_EQ(count.num0, zeros);
    EXPECT_EQ(count.num1, ones);
    for (Column x = 0; x < p.n; ++x) {
        EXPECT_EQ(count.node_sum[0][x][0], zeros);
        EXPECT_EQ(count.node_sum[0][x][1], ones);
    }
    auto sel = select_overflow(env, ctx, count);
    const unsigned bit = zeros > p.n ? 0 : 1;
    EXPECT_EQ(sel.bit, bit);
    EXPECT_EQ(sel.selected, p.n);
    for (Column x = 0; x < p.n; ++x) {
        ASSERT_EQ(sel.next_requests[x].size(), 1u);
        EXPECT_EQ(key_bit(sel.next_requests[x][0].key, 1), bit);
    }
    EXPECT_EQ(ctx.total(), 48u - p.n);
}

TEST(Blocked, ThresholdPerLevel) {
    Topology topo(2, 3);
    std::vector<bool> crashed(8, false);
    crashed[1] = true;
    auto b = blocked_sub_butterflies(topo, crashed);
    EXPECT_TRUE(b[0][1]);
    EXPECT_FALSE(b[0][0]);
    EXPECT_TRUE(b[1][0]);   // ceil(2^0) = 1
    EXPECT_FALSE(b[2][0]);  // needs 2
    crashed[3] = true;
    b = blocked_sub_butterflies(topo, crashed);
    EXPECT_TRUE(b[2][0]);
    EXPECT_FALSE(b[3][0]);  // needs 4
}
