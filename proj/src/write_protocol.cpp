#include "robust/write_protocol.hpp"

#include <algorithm>
#include <random>
#include <optional>
#include <set>
#include <tuple>
#include <unordered_map>

#include "robust/codec/group_code.hpp"
#include "robust/codec/kernels.hpp"

namespace robust {

namespace {

Message hop(const RepresentativeMap& reps, MsgKind kind, NodeId from, NodeId to) {
    Message m;
    m.kind = kind;
    m.from = from;
    m.to = to;
    m.src = reps[from.column];
    m.dst = reps[to.column];
    return m;
}

// Columns that differ from `col` in exactly one digit.
std::vector<Column> one_digit_neighbours(const Topology& topo, Column col) {
    std::vector<Column> out;
    for (int pos = 0; pos < topo.d(); ++pos) {
        for (int b = 0; b < topo.k(); ++b) {
            if (static_cast<unsigned>(b) == topo.digit(col, pos)) continue;
            out.push_back(topo.with_digit(col, pos, static_cast<unsigned>(b)));
        }
    }
    return out;
}

// Moves each prepared message from level d down to level 0, one hop per
// round, fixing digit l of the column on the step to level l. Returns the
// deliveries at level 0.
std::vector<Message> route_down(WriteEnv& env, std::vector<Message> first) {
    const auto& topo = env.topo;
    if (topo.d() == 0) return first;
    for (auto& m : first) env.net.send(std::move(m));
    for (int level = topo.d() - 1;; --level) {
        auto got = env.net.run_round();
        if (level == 0) return got;
        for (auto& m : got) {
            m.from = m.to;
            m.to = {level - 1, topo.with_digit(m.from.column, level - 1, topo.digit(m.target, level - 1))};
            m.src = env.reps[m.from.column];
            m.dst = env.reps[m.to.column];
            env.net.send(std::move(m));
        }
    }
}

Message first_hop(WriteEnv& env, MsgKind kind, Column start, Column target) {
    const auto& topo = env.topo;
    const int d = topo.d();
    Message m = hop(env.reps, kind, {d, start},
                    {d - 1, topo.with_digit(start, d - 1, topo.digit(target, d - 1))});
    m.target = target;
    return m;
}

}  // namespace

RepresentativeMap assign_representatives(const std::vector<bool>& crashed) {
    const auto n = static_cast<std::uint32_t>(crashed.size());
    RepresentativeMap reps;
    reps.rep.resize(n);
    reps.load.assign(n, 0);
    std::vector<ServerId> intact, down;
    for (std::uint32_t s = 0; s < n; ++s) {
        reps.rep[s] = s;
        (crashed[s] ? down : intact).push_back(s);
    }
    if (down.empty()) return reps;
    if (intact.empty()) throw InvariantViolation("representative-load", "no intact server left");
    for (std::size_t r = 0; r < down.size(); ++r) {
        const ServerId t = intact[r % intact.size()];
        reps.rep[down[r]] = t;
        if (++reps.load[t] > 2) {
            throw InvariantViolation("representative-load",
                                     "server " + std::to_string(t) + " would represent more than two crashed servers");
        }
    }
    return reps;
}

void introduce_representatives(Network& net, const Topology& topo, const RepresentativeMap& reps,
                               const std::vector<bool>& crashed) {
    for (Column s = 0; s < topo.n(); ++s) {
        if (!crashed[s]) continue;
        std::set<ServerId> told;
        for (Column y : one_digit_neighbours(topo, s)) {
            if (crashed[y] || y == reps[s] || !told.insert(y).second) continue;
            Message m;
            m.kind = MsgKind::rep_ctrl;
            m.src = reps[s];
            m.dst = y;
            m.from = {0, s};
            m.to = {0, y};
            m.a = s;
            m.bytes = 8;
            net.send(std::move(m));
        }
    }
    net.run_round();
}

std::uint64_t PhaseContext::total() const {
    std::uint64_t t = 0;
    for (const auto& w : requests) t += w.size();
    for (const auto& m : maintained) t += m.size();
    return t;
}

BucketMeta acquire_bucket_meta(WriteEnv& env, const std::vector<ServerState>& servers, const BucketId& bucket) {
    const auto& topo = env.topo;
    const std::uint32_t n = topo.n();
    using Tuple = std::pair<Timestamp, std::uint64_t>;
    std::vector<Tuple> cur(n, {0, 0});
    for (Column x = 0; x < n; ++x) {
        if (env.crashed[x]) continue;
        if (const auto* b = servers[x].bucket(bucket)) cur[x] = {b->timestamp, b->item_count};
    }
    for (int level = topo.d(); level >= 1; --level) {
        for (Column x = 0; x < n; ++x) {
            for (int b = 0; b < topo.k(); ++b) {
                Message m = hop(env.reps, MsgKind::meta_reply, {level, x},
                                {level - 1, topo.with_digit(x, level - 1, static_cast<unsigned>(b))});
                m.ts = cur[x].first;
                m.a = cur[x].second;
                m.bytes = 12;
                env.net.send(std::move(m));
            }
        }
        std::vector<Tuple> next(n, {0, 0});
        for (const auto& m : env.net.run_round()) next[m.to.column] = std::max(next[m.to.column], Tuple{m.ts, m.a});
        cur = std::move(next);
    }
    for (Column x = 1; x < n; ++x) {
        if (cur[x] != cur[0]) throw InvariantViolation("meta-agreement", "level-0 nodes disagree on the bucket tuple");
    }

    BucketMeta meta;
    meta.timestamp = cur[0].first;
    meta.item_count = static_cast<std::uint32_t>(cur[0].second);
    if (meta.timestamp == 0) return meta;

    auto fresh = [&](Column x) { return !env.crashed[x] && servers[x].timestamp(bucket) == meta.timestamp; };
    for (Column x = 0; x < n; ++x) {
        if (fresh(x) && meta.seeds.empty()) meta.seeds = servers[x].bucket(bucket)->hash_seeds;
        if (env.crashed[x] || fresh(x)) continue;
        std::set<ServerId> asked;
        for (Column y : one_digit_neighbours(topo, x)) {
            const ServerId s = env.reps[y];
            if (s == x || !asked.insert(s).second) continue;
            Message m;
            m.kind = MsgKind::seed_request;
            m.src = x;
            m.dst = s;
            m.from = {0, x};
            m.to = {0, y};
            m.ts = meta.timestamp;
            m.bytes = 8;
            env.net.send(std::move(m));
        }
    }
    for (const auto& m : env.net.run_round()) {
        if (!fresh(m.dst)) continue;
        Message r;
        r.kind = MsgKind::seed_reply;
        r.src = m.dst;
        r.dst = m.src;
        r.from = m.to;
        r.to = m.from;
        r.ts = meta.timestamp;
        r.bytes = static_cast<std::uint32_t>(8 * meta.seeds.size() + 8);
        env.net.send(std::move(r));
    }
    env.net.run_round();
    return meta;
}

std::vector<DecodeOutcome> distributed_decode(Network& net, const Topology& topo, const RepresentativeMap& reps,
                                              const std::vector<bool>& crashed,
                                              const std::vector<ServerState>& servers,
                                              std::span<const DecodeJob> jobs, bool include_intact) {
    struct Col {
        const StoredBucket* stored = nullptr;   // up to date, read in place
        std::shared_ptr<const Bytes> cw;        // rebuilt codeword at the current level
    };
    std::vector<std::vector<Col>> state(jobs.size());
    int top = 0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        const auto& job = jobs[j];
        top = std::max(top, job.level);
        state[j].resize(topo.power(job.level));
        for (std::uint32_t i = 0; i < state[j].size(); ++i) {
            const Column x = job.base + i;
            if (crashed[x]) continue;
            const auto* b = servers[x].bucket(job.bucket);
            if (b && b->timestamp == job.ts && b->top_level() >= job.level) state[j][i].stored = b;
        }
    }
    auto functional = [](const Col& c) { return c.stored != nullptr || c.cw != nullptr; };

    for (int level = top; level >= 1; --level) {
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            const auto& job = jobs[j];
            if (job.level < level) continue;
            auto& cols = state[j];
            std::map<Column, std::shared_ptr<const Bytes>> cache;
            for (std::uint32_t i = 0; i < cols.size(); ++i) {
                if (functional(cols[i])) continue;
                const Column y = job.base + i;
                for (Column x : topo.group_columns(level - 1, y)) {
                    const auto& cx = cols[x - job.base];
                    if (x == y || !functional(cx)) continue;
                    auto& data = cache[x];
                    if (!data) data = cx.cw ? cx.cw : std::make_shared<const Bytes>(cx.stored->codeword(level));
                    Message m = hop(reps, MsgKind::block_transfer, {level, x}, {level - 1, y});
                    m.ts = job.ts;
                    m.level = level;
                    m.ref = j;
                    m.data = data;
                    m.bytes = static_cast<std::uint32_t>(data->size());
                    net.send(std::move(m));
                }
            }
        }
        std::map<std::pair<std::size_t, Column>, std::vector<codec::CodewordView>> received;
        const auto got = net.run_round();
        for (const auto& m : got) {
            if (m.ts != jobs[m.ref].ts) continue;
            const Bytes& cw = *m.data;
            const std::uint32_t len = get_be32(cw.data());
            codec::CodewordView v;
            v.group_index = static_cast<int>(topo.digit(m.from.column, level - 1));
            v.own_block = std::span<const Byte>(cw).subspan(4, len);
            v.parity_fragment = std::span<const Byte>(cw).subspan(4 + len);
            received[{m.ref, m.to.column}].push_back(v);
        }
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            const auto& job = jobs[j];
            if (job.level < level) continue;
            for (std::uint32_t i = 0; i < state[j].size(); ++i) {
                auto& c = state[j][i];
                if (c.stored) continue;
                if (c.cw) {
                    const std::uint32_t len = get_be32(c.cw->data());
                    c.cw = std::make_shared<const Bytes>(c.cw->begin() + 4, c.cw->begin() + 4 + len);
                    continue;
                }
                const Column y = job.base + i;
                auto it = received.find({j, y});
                if (it == received.end() || static_cast<int>(it->second.size()) < topo.k() - 1) continue;
                c.cw = std::make_shared<const Bytes>(
                    codec::group_recover_missing(it->second, topo.k(), static_cast<int>(topo.digit(y, level - 1))));
            }
        }
    }

    std::vector<DecodeOutcome> out(jobs.size());
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        for (std::uint32_t i = 0; i < state[j].size(); ++i) {
            const Column x = jobs[j].base + i;
            const auto& c = state[j][i];
            if (c.stored) {
                if (include_intact) out[j].blocks[x] = c.stored->block;
            } else if (c.cw) {
                out[j].blocks[x] = c.cw;
            } else {
                out[j].unrecovered.push_back(x);
            }
        }
    }
    return out;
}

BucketDecodeResult decode_bucket(WriteEnv& env, const std::vector<ServerState>& servers, const BucketMeta& meta,
                                 PhaseContext& ctx) {
    BucketDecodeResult res;
    const auto& topo = env.topo;
    const DecodeJob job{ctx.bucket, meta.timestamp, topo.d(), 0};
    auto outcome = distributed_decode(env.net, topo, env.reps, env.crashed, servers, std::span(&job, 1), true);
    res.unrecovered_columns = outcome[0].unrecovered;

    const codec::PieceCodec codec(env.params.c, env.params.payload_len);
    const HashFamily h(meta.seeds, topo.n());
    std::vector<codec::Piece> table;
    for (const auto& [x, block] : outcome[0].blocks) {
        for (auto& piece : block_format::parse(*block, codec.piece_len())) {
            const Column m = h(1, piece.item_key);
            Message msg = hop(env.reps, MsgKind::piece, {0, x}, {0, m});
            msg.key = piece.item_key;
            msg.index = piece.index;
            msg.ts = piece.version;
            msg.ref = table.size();
            msg.bytes = static_cast<std::uint32_t>(block_format::kRecordHeader + codec.piece_len());
            env.net.send(std::move(msg));
            table.push_back(std::move(piece));
        }
    }
    std::map<std::pair<Column, Key>, std::vector<codec::Piece>> gathered;
    for (const auto& m : env.net.run_round()) gathered[{m.to.column, m.key}].push_back(std::move(table[m.ref]));

    std::uint64_t decoded = 0;
    for (auto& [where, pieces] : gathered) {
        if (static_cast<int>(pieces.size()) < codec.threshold()) continue;
        DataItem item;
        item.key = where.second;
        item.version = pieces.front().version;
        item.payload = codec.decode(pieces);
        ctx.maintained[where.first].push_back(std::move(item));
        ++decoded;
    }
    for (auto& m : ctx.maintained) {
        std::sort(m.begin(), m.end(), [](const DataItem& a, const DataItem& b) { return a.key < b.key; });
    }
    if (decoded < meta.item_count) res.lost_items = meta.item_count - decoded;
    res.ok = res.lost_items == 0;
    return res;
}

std::vector<std::pair<Column, Key>> deduplicate(WriteEnv& env, PhaseContext& ctx, std::uint64_t salt) {
    const std::uint32_t n = env.topo.n();
    for (Column x = 0; x < n; ++x) {
        for (int fresh = 0; fresh < 2; ++fresh) {
            const auto& items = fresh ? ctx.requests[x] : ctx.maintained[x];
            for (const auto& it : items) {
                const Column coord = static_cast<Column>(mix64(it.key ^ salt) % n);
                Message m = hop(env.reps, MsgKind::key_claim, {0, x}, {0, coord});
                m.key = it.key;
                m.ts = it.version;
                m.a = static_cast<std::uint64_t>(fresh);
                m.b = x;
                m.bytes = 17;
                env.net.send(std::move(m));
            }
        }
    }
    struct Claim {
        bool fresh;
        Timestamp version;
        Column column;
    };
    std::map<Key, std::vector<Claim>> claims;
    std::map<Key, Column> coordinator;
    for (const auto& m : env.net.run_round()) {
        claims[m.key].push_back({m.a != 0, m.ts, static_cast<Column>(m.b)});
        coordinator[m.key] = m.to.column;
    }
    for (const auto& [key, list] : claims) {
        if (list.size() < 2) continue;
        auto better = [](const Claim& a, const Claim& b) {
            return std::tie(a.fresh, a.version, a.column) < std::tie(b.fresh, b.version, b.column);
        };
        const Claim win = *std::max_element(list.begin(), list.end(), better);
        for (const auto& c : list) {
            if (c.fresh == win.fresh && c.column == win.column) continue;
            Message m = hop(env.reps, MsgKind::key_drop, {0, coordinator[key]}, {0, c.column});
            m.key = key;
            m.a = c.fresh ? 1 : 0;
            m.bytes = 9;
            env.net.send(std::move(m));
        }
    }
    std::vector<std::pair<Column, Key>> dropped;
    for (const auto& m : env.net.run_round()) {
        auto& items = m.a ? ctx.requests[m.to.column] : ctx.maintained[m.to.column];
        auto it = std::find_if(items.begin(), items.end(), [&](const DataItem& d) { return d.key == m.key; });
        if (it == items.end()) continue;
        items.erase(it);
        if (m.a) dropped.emplace_back(m.to.column, m.key);
    }
    std::sort(dropped.begin(), dropped.end());
    return dropped;
}

CountResult count_items(WriteEnv& env, const PhaseContext& ctx) {
    const auto& topo = env.topo;
    const std::uint32_t n = topo.n();
    const int d = topo.d();
    CountResult res;
    res.node_sum.assign(static_cast<std::size_t>(d) + 1, std::vector<std::array<std::uint64_t, 2>>(n, {0, 0}));
    for (Column x = 0; x < n; ++x) {
        for (const auto* set : {&ctx.requests[x], &ctx.maintained[x]}) {
            for (const auto& it : *set) ++res.node_sum[d][x][key_bit(it.key, ctx.zone)];
        }
    }
    for (int level = d; level >= 1; --level) {
        for (Column x = 0; x < n; ++x) {
            for (int b = 0; b < topo.k(); ++b) {
                Message m = hop(env.reps, MsgKind::count_tuple, {level, x},
                                {level - 1, topo.with_digit(x, level - 1, static_cast<unsigned>(b))});
                m.a = res.node_sum[level][x][0];
                m.b = res.node_sum[level][x][1];
                m.bytes = 16;
                env.net.send(std::move(m));
            }
        }
        for (const auto& m : env.net.run_round()) {
            res.node_sum[level - 1][m.to.column][0] += m.a;
            res.node_sum[level - 1][m.to.column][1] += m.b;
        }
    }
    res.num0 = res.node_sum[0][0][0];
    res.num1 = res.node_sum[0][0][1];
    return res;
}

SelectResult select_overflow(WriteEnv& env, PhaseContext& ctx, const CountResult& count) {
    const auto& topo = env.topo;
    const std::uint32_t n = topo.n();
    const int d = topo.d();
    SelectResult res;
    res.bit = count.num0 > n ? 0u : 1u;
    const unsigned j = res.bit;

    // (need, offset) reaching each level-d column; need == UINT64_MAX marks FULL.
    constexpr std::uint64_t kFull = ~std::uint64_t{0};
    std::map<Column, std::pair<std::uint64_t, std::uint64_t>> orders{{0, {n, 0}}};
    for (int level = 0; level < d; ++level) {
        for (const auto& [x, order] : orders) {
            auto [need, offset] = order;
            for (int b = 0; b < topo.k(); ++b) {
                const Column y = topo.with_digit(x, level, static_cast<unsigned>(b));
                const std::uint64_t have = count.node_sum[level + 1][y][j];
                if (have == 0) continue;
                std::uint64_t give = 0;
                if (need == kFull || need >= have) {
                    give = kFull;
                    if (need != kFull) need -= have;
                } else if (need > 0) {
                    give = need;
                    need = 0;
                } else {
                    break;
                }
                Message m = hop(env.reps, give == kFull ? MsgKind::full : MsgKind::partly, {level, x}, {level + 1, y});
                m.a = give;
                m.b = offset;
                m.bytes = 16;
                env.net.send(std::move(m));
                offset += give == kFull ? have : give;
            }
        }
        orders.clear();
        for (const auto& m : env.net.run_round()) orders[m.to.column] = {m.a, m.b};
    }

    struct Chosen {
        std::uint64_t rank;
        Column column;
        DataItem item;
    };
    std::vector<Chosen> chosen;
    for (const auto& [x, order] : orders) {
        const auto [need, offset] = order;
        std::vector<std::pair<bool, std::size_t>> cand;  // (from requests, position)
        for (std::size_t i = 0; i < ctx.requests[x].size(); ++i) {
            if (key_bit(ctx.requests[x][i].key, ctx.zone) == j) cand.emplace_back(true, i);
        }
        for (std::size_t i = 0; i < ctx.maintained[x].size(); ++i) {
            if (key_bit(ctx.maintained[x][i].key, ctx.zone) == j) cand.emplace_back(false, i);
        }
        if (need != kFull && need < cand.size()) {
            std::mt19937_64 rng(mix64(env.rng_seed ^ mix64(x + 1)));
            std::shuffle(cand.begin(), cand.end(), rng);
            cand.resize(need);
        }
        auto item_of = [&](const std::pair<bool, std::size_t>& c) -> const DataItem& {
            return c.first ? ctx.requests[x][c.second] : ctx.maintained[x][c.second];
        };
        std::sort(cand.begin(), cand.end(), [&](const auto& a, const auto& b) { return item_of(a).key < item_of(b).key; });
        std::uint64_t rank = offset;
        for (const auto& c : cand) chosen.push_back({rank++, x, item_of(c)});
        std::set<Key> gone;
        for (const auto& c : cand) gone.insert(item_of(c).key);
        auto drop = [&](std::vector<DataItem>& v) {
            v.erase(std::remove_if(v.begin(), v.end(), [&](const DataItem& it) { return gone.count(it.key) > 0; }),
                    v.end());
        };
        drop(ctx.requests[x]);
        drop(ctx.maintained[x]);
    }
    res.selected = chosen.size();
    if (res.selected != n) {
        throw InvariantViolation("select-count", "selected " + std::to_string(res.selected) + " items, expected " +
                                                     std::to_string(n));
    }

    std::vector<DataItem> slots;
    std::vector<Message> first;
    for (auto& c : chosen) {
        Message m = first_hop(env, MsgKind::item_transfer, c.column, static_cast<Column>(c.rank));
        m.key = c.item.key;
        m.ts = c.item.version;
        m.ref = slots.size();
        m.bytes = static_cast<std::uint32_t>(12 + c.item.payload.size());
        first.push_back(std::move(m));
        slots.push_back(std::move(c.item));
    }
    res.next_requests.assign(n, {});
    for (auto& m : route_down(env, std::move(first))) res.next_requests[m.to.column].push_back(std::move(slots[m.ref]));
    return res;
}

std::vector<std::vector<bool>> blocked_sub_butterflies(const Topology& topo, const std::vector<bool>& crashed) {
    std::vector<std::vector<bool>> blocked(static_cast<std::size_t>(topo.d()) + 1);
    for (int level = 0; level <= topo.d(); ++level) {
        const std::uint32_t width = topo.power(level);
        const std::uint64_t limit = level == 0 ? 1 : (std::uint64_t{1} << (level - 1));
        blocked[level].assign(topo.n() / width, false);
        for (std::uint32_t blk = 0; blk < topo.n() / width; ++blk) {
            std::uint64_t down = 0;
            for (std::uint32_t i = 0; i < width; ++i) down += crashed[blk * width + i] ? 1 : 0;
            blocked[level][blk] = down >= limit;
        }
    }
    return blocked;
}

int pieces_in_blocked(const Topology& topo, const std::vector<std::vector<bool>>& blocked, const HashFamily& h,
                      Key key) {
    int best = 0;
    for (int level = 0; level <= topo.d(); ++level) {
        int in = 0;
        for (int j = 1; j <= h.size(); ++j) in += blocked[level][h(j, key) / topo.power(level)] ? 1 : 0;
        best = std::max(best, in);
    }
    return best;
}

EncodeResult encode_bucket(WriteEnv& env, const PhaseContext& ctx, const std::vector<std::uint64_t>& seeds,
                           Timestamp ts, ServerId seed_chooser) {
    const auto& topo = env.topo;
    const std::uint32_t n = topo.n();
    const int d = topo.d();
    EncodeResult res;

    // hash seeds and timestamp travel up the tree of (d, seed_chooser)
    std::vector<Column> holders{seed_chooser};
    for (int level = d; level >= 1; --level) {
        for (Column x : holders) {
            for (int b = 0; b < topo.k(); ++b) {
                Message m = hop(env.reps, MsgKind::hash_bcast, {level, x},
                                {level - 1, topo.with_digit(x, level - 1, static_cast<unsigned>(b))});
                m.ts = ts;
                m.bytes = static_cast<std::uint32_t>(8 * seeds.size() + 4);
                env.net.send(std::move(m));
            }
        }
        std::set<Column> next;
        for (const auto& m : env.net.run_round()) next.insert(m.to.column);
        holders.assign(next.begin(), next.end());
    }
    if (holders.size() != n) throw InvariantViolation("hash-broadcast", "seeds did not reach every column");

    const codec::PieceCodec codec(env.params.c, env.params.payload_len);
    const HashFamily h(seeds, n);
    std::vector<DataItem> items;
    std::vector<Column> origin;
    for (Column x = 0; x < n; ++x) {
        for (const auto* set : {&ctx.requests[x], &ctx.maintained[x]}) {
            for (const auto& it : *set) {
                items.push_back(it);
                origin.push_back(x);
            }
        }
    }
    res.items = items.size();
    auto encoded = codec::kernels::encode_items_parallel(codec, items);

    const auto blocked = blocked_sub_butterflies(topo, env.crashed);
    std::vector<codec::Piece> slots;
    std::vector<Message> first;
    for (std::size_t i = 0; i < items.size(); ++i) {
        res.members[items[i].key] = items[i].version;
        res.max_pieces_in_blocked = std::max(res.max_pieces_in_blocked, pieces_in_blocked(topo, blocked, h, items[i].key));
        for (auto& piece : encoded[i]) {
            Message m = first_hop(env, MsgKind::piece, origin[i], h(piece.index, piece.item_key));
            m.key = piece.item_key;
            m.index = piece.index;
            m.ts = piece.version;
            m.ref = slots.size();
            m.bytes = static_cast<std::uint32_t>(block_format::kRecordHeader + codec.piece_len());
            first.push_back(std::move(m));
            slots.push_back(std::move(piece));
        }
    }
    std::vector<std::vector<codec::Piece>> at(n);
    for (auto& m : route_down(env, std::move(first))) at[m.to.column].push_back(std::move(slots[m.ref]));

    std::vector<std::shared_ptr<const Bytes>> cw(n);
    res.shares.resize(n);
    for (Column x = 0; x < n; ++x) {
        std::sort(at[x].begin(), at[x].end(), [](const codec::Piece& a, const codec::Piece& b) {
            return std::tie(a.item_key, a.index) < std::tie(b.item_key, b.index);
        });
        cw[x] = std::make_shared<const Bytes>(block_format::build(at[x]));
        auto& share = res.shares[x];
        share.timestamp = ts;
        share.hash_seeds = seeds;
        share.item_count = static_cast<std::uint32_t>(items.size());
        share.block = cw[x];
    }

    for (int level = 1; level <= d; ++level) {
        for (Column x = 0; x < n; ++x) {
            for (int b = 0; b < topo.k(); ++b) {
                Message m = hop(env.reps, MsgKind::block_transfer, {level - 1, x},
                                {level, topo.with_digit(x, level - 1, static_cast<unsigned>(b))});
                m.ts = ts;
                m.level = level;
                m.data = cw[x];
                m.bytes = static_cast<std::uint32_t>(cw[x]->size());
                env.net.send(std::move(m));
            }
        }
        std::vector<int> got(n, 0);
        for (const auto& m : env.net.run_round()) ++got[m.to.column];
        for (Column x = 0; x < n; ++x) {
            if (got[x] != topo.k()) throw InvariantViolation("parity-exchange", "group member missing at a column");
        }
        std::vector<const Bytes*> view(n);
        for (Column x = 0; x < n; ++x) view[x] = cw[x].get();
        auto parities = codec::kernels::level_parities_parallel(view, topo.k(), topo.power(level - 1));
        for (Column x = 0; x < n; ++x) {
            auto p = std::make_shared<const Bytes>(std::move(parities[x]));
            res.shares[x].parities.push_back(p);
            if (level < d) cw[x] = std::make_shared<const Bytes>(wrap_codeword(*cw[x], *p));
        }
    }
    return res;
}

WriteStageResult write_stage(Cluster& cluster, const RepresentativeMap& reps,
                             const std::vector<WriteRequest>& writes, PeriodReport& report) {
    WriteStageResult res;
    if (writes.empty()) {
        res.applied = true;
        return res;
    }
    auto& net = cluster.network();
    const auto& params = cluster.params();
    const auto& topo = cluster.topology();
    const auto& crashed = cluster.crash_flags();
    const Timestamp ts = cluster.now();
    const int lambda = params.address_bits();
    WriteEnv env{net, topo, params, reps, crashed, 0};

    ServerId chooser = 0;
    while (crashed[chooser]) ++chooser;

    PhaseContext ctx(params.n);
    for (const auto& w : writes) ctx.requests[w.server].push_back(DataItem{w.key, w.payload, ts});

    struct Pending {
        BucketId bucket;
        EncodeResult enc;
    };
    std::vector<Pending> pending;
    BucketId bucket{};

    for (int z = 0;; ++z) {
        if (z > lambda) throw InvariantViolation("zone-overflow", "write phase beyond the deepest zone");
        ctx.zone = z;
        ctx.bucket = bucket;
        env.rng_seed = cluster.stream(streams::partly_choice, static_cast<std::uint64_t>(z))();

        auto step = [&](const std::string& name, auto&& body) {
            const std::size_t first = net.stats().size();
            net.set_phase(name);
            body();
            PhaseStat ps;
            ps.name = name;
            ps.zone = z;
            for (std::size_t r = first; r < net.stats().size(); ++r) {
                ++ps.rounds;
                ps.congestion = std::max(ps.congestion, net.stats()[r].congestion);
            }
            report.phases.push_back(std::move(ps));
        };

        BucketMeta meta;
        step("write.meta", [&] { meta = acquire_bucket_meta(env, cluster.servers(), bucket); });
        if (!meta.empty()) {
            BucketDecodeResult dec;
            step("write.decode", [&] { dec = decode_bucket(env, cluster.servers(), meta, ctx); });
            if (!dec.ok) {
                res.failure = "bucket " + std::to_string(z) + ":" + bucket.prefix_string() + " lost " +
                              std::to_string(dec.lost_items) + " items (" +
                              std::to_string(dec.unrecovered_columns.size()) + " columns unrecovered)";
                report.events.push_back("write stage aborted: " + res.failure);
                return res;
            }
        }
        step("write.dedup", [&] {
            auto dropped = deduplicate(env, ctx, cluster.stream(streams::dedup_salt, static_cast<std::uint64_t>(z))());
            if (z == 0) res.superseded = std::move(dropped);
        });
        CountResult count;
        step("write.count", [&] { count = count_items(env, ctx); });

        std::optional<PhaseContext> next;
        BucketId next_bucket{};
        if (count.total() > 2ull * params.n) {
            if (z == lambda) throw InvariantViolation("zone-overflow", "deepest zone bucket overflows");
            step("write.select", [&] {
                auto sel = select_overflow(env, ctx, count);
                next.emplace(params.n);
                next->requests = std::move(sel.next_requests);
                next_bucket = bucket.child(sel.bit);
            });
        }

        auto rng = cluster.stream(streams::hash_seeds, static_cast<std::uint64_t>(z), bucket.prefix);
        std::vector<std::uint64_t> seeds(static_cast<std::size_t>(params.c));
        for (auto& s : seeds) s = rng();
        EncodeResult enc;
        step("write.encode", [&] { enc = encode_bucket(env, ctx, seeds, ts, chooser); });
        report.max_pieces_in_blocked = std::max(report.max_pieces_in_blocked, enc.max_pieces_in_blocked);
        report.items_rewritten += enc.items;
        pending.push_back({bucket, std::move(enc)});
        ++res.phases;

        if (!next) break;
        ctx = std::move(*next);
        bucket = next_bucket;
    }

    auto& servers = cluster.servers();
    auto& dir = cluster.directory();
    for (auto& p : pending) {
        if (!bucket_size_ok(p.bucket, p.enc.items, params.n)) {
            throw InvariantViolation("bucket-size", "bucket " + std::to_string(p.bucket.zone) + ":" +
                                                        p.bucket.prefix_string() + " holds " +
                                                        std::to_string(p.enc.items) + " items");
        }
        for (Column x = 0; x < params.n; ++x) {
            if (!crashed[x]) servers[x].buckets[p.bucket] = p.enc.shares[x];
        }
        dir.set_bucket(p.bucket, {ts, std::move(p.enc.members)});
    }
    std::set<std::pair<Column, Key>> lost(res.superseded.begin(), res.superseded.end());
    for (const auto& w : writes) {
        if (!lost.count({w.server, w.key})) dir.record_write(w.key, ts, w.payload, w.server);
    }
    res.applied = true;
    report.write_phases = res.phases;
    return res;
}

}  // namespace robust
