#include "robust/lookup_protocol.hpp"

#include <algorithm>
#include <climits>
#include <map>
#include <set>
#include <tuple>

namespace robust {

namespace {

struct PairKey {
    Key key = 0;
    int index = 0;
    Timestamp ts = 0;
    friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

PairKey pair_of(const Message& m) { return {m.key, m.index, m.ts}; }

// Routes (key, index, ts) messages from requesters down the butterfly,
// merging equal ones per node, and carries answers back along the recorded
// origins, splitting where messages had been merged.
class ComboRouter {
public:
    ComboRouter(Cluster& cl, const RepresentativeMap& reps, MsgKind kind, int stop_level, std::uint64_t threshold,
                bool every_level)
        : net_(cl.network()),
          topo_(cl.topology()),
          reps_(reps),
          kind_(kind),
          stop_(stop_level),
          threshold_(threshold),
          every_level_(every_level) {}

    int requester_level() const { return topo_.d() + 1; }

    void launch(ServerId requester, const PairKey& p, Column start, Column target, std::uint32_t bytes) {
        send(kind_, {requester_level(), requester}, {topo_.d(), start}, p, target, bytes);
        ++sent_;
    }

    void add_origin(NodeId node, const PairKey& p, NodeId origin) { origins_[node][p].push_back(origin); }

    // Starts an answer at `node` towards everyone that sent it p.
    void answer(NodeId node, const PairKey& p, MsgKind kind, int level, Column target,
                std::shared_ptr<const Bytes> body, Timestamp version) {
        auto it = origins_.find(node);
        if (it == origins_.end()) return;
        auto jt = it->second.find(p);
        if (jt == it->second.end()) return;
        for (const auto& o : jt->second) {
            Message m = make(kind, node, o, p, target);
            m.level = level;
            m.a = version;
            m.data = body;
            m.bytes = static_cast<std::uint32_t>(24 + (body ? body->size() : 0));
            net_.send(std::move(m));
        }
    }

    // Runs rounds until nothing is in flight. on_arrival(node, pairs) is
    // called for messages reaching the stop level; on_final(server, msg) for
    // answers reaching their requester.
    template <class Arrive, class Final>
    void run(Arrive&& on_arrival, Final&& on_final) {
        while (!net_.idle()) {
            auto got = net_.run_round();
            std::map<NodeId, std::map<PairKey, Column>> arrivals;
            for (auto& m : got) {
                const PairKey p = pair_of(m);
                if (m.kind == kind_) {
                    auto& slot = origins_[m.to][p];
                    if (!slot.empty()) ++absorbed_;
                    slot.push_back(m.from);
                    arrivals[m.to][p] = m.target;
                    continue;
                }
                if (m.to.level == requester_level()) {
                    on_final(m.to.column, m);
                    continue;
                }
                auto it = origins_.find(m.to);
                if (it == origins_.end()) continue;
                auto jt = it->second.find(p);
                if (jt == it->second.end()) continue;
                for (const auto& o : jt->second) {
                    Message fwd = m;
                    fwd.from = m.to;
                    fwd.to = o;
                    fwd.src = reps_[fwd.from.column];
                    fwd.dst = o.level == requester_level() ? o.column : reps_[o.column];
                    net_.send(std::move(fwd));
                }
            }
            for (auto& [node, pairs] : arrivals) {
                const bool check = every_level_ || node.level == stop_;
                if (check && pairs.size() > threshold_) {
                    ++congested_;
                    for (const auto& [p, target] : pairs) answer(node, p, MsgKind::fail, node.level, target, nullptr, 0);
                    continue;
                }
                if (node.level == stop_) {
                    on_arrival(node, pairs);
                    continue;
                }
                const int next = node.level - 1;
                for (const auto& [p, target] : pairs) {
                    const NodeId to{next, topo_.with_digit(node.column, next, topo_.digit(target, next))};
                    send(kind_, node, to, p, target, 24);
                    ++sent_;
                }
            }
        }
    }

    std::uint64_t sent() const { return sent_; }
    std::uint64_t absorbed() const { return absorbed_; }
    std::uint64_t congested() const { return congested_; }

private:
    Message make(MsgKind kind, NodeId from, NodeId to, const PairKey& p, Column target) const {
        Message m;
        m.kind = kind;
        m.from = from;
        m.to = to;
        m.src = from.level == requester_level() ? from.column : reps_[from.column];
        m.dst = to.level == requester_level() ? to.column : reps_[to.column];
        m.key = p.key;
        m.index = p.index;
        m.ts = p.ts;
        m.target = target;
        return m;
    }
    void send(MsgKind kind, NodeId from, NodeId to, const PairKey& p, Column target, std::uint32_t bytes) {
        Message m = make(kind, from, to, p, target);
        m.bytes = bytes;
        net_.send(std::move(m));
    }

    Network& net_;
    const Topology& topo_;
    const RepresentativeMap& reps_;
    MsgKind kind_;
    int stop_;
    std::uint64_t threshold_;
    bool every_level_;
    std::map<NodeId, std::map<PairKey, std::vector<NodeId>>> origins_;
    std::uint64_t sent_ = 0;
    std::uint64_t absorbed_ = 0;
    std::uint64_t congested_ = 0;
};

std::vector<ServerId> intact_servers(const Cluster& cl) {
    std::vector<ServerId> out;
    for (ServerId s = 0; s < cl.params().n; ++s) {
        if (!cl.is_crashed(s)) out.push_back(s);
    }
    return out;
}

// Requester-side decode of collected pieces.
void try_answer(ActiveLookup& l, const codec::PieceCodec& codec) {
    if (static_cast<int>(l.pieces.size()) < codec.threshold()) return;
    try {
        l.value = codec.decode(l.pieces);
        l.version = l.pieces.front().version;
        l.status = ActiveLookup::Status::answered;
    } catch (const Error& e) {
        l.status = ActiveLookup::Status::failed;
        l.note = std::string("piece decode failed: ") + e.what();
    }
}

}  // namespace

int ActiveLookup::active_at(int l) const {
    int n = 0;
    for (int f : fail_level) n += f < l ? 1 : 0;
    return n;
}

int classify_level(const ActiveLookup& l, int c, int d) {
    for (int level = 1; level <= d; ++level) {
        if (6 * l.active_at(level) >= 5 * c) return level;
    }
    return 0;
}

void acquire_metadata(LookupEnv& env, std::vector<ActiveLookup>& lookups) {
    auto& cl = env.cluster;
    auto& net = cl.network();
    const auto& servers = cl.servers();
    const auto intact = intact_servers(cl);
    const int kappa = cl.params().kappa();

    std::map<ServerId, std::size_t> by_server;
    // one stream per zone; each lookup draws a partial Fisher-Yates prefix
    std::map<int, std::mt19937_64> rngs;
    std::vector<ServerId> pool = intact;
    std::vector<ServerId> sample;
    for (std::size_t i = 0; i < lookups.size(); ++i) {
        auto& l = lookups[i];
        if (l.status != ActiveLookup::Status::pending) continue;
        by_server[l.server] = i;
        auto it = rngs.find(l.zone);
        if (it == rngs.end()) it = rngs.emplace(l.zone, cl.stream(streams::meta_samples, static_cast<std::uint64_t>(l.zone), 0)).first;
        auto& rng = it->second;
        sample.clear();
        for (std::size_t j = 0; j < pool.size() && sample.size() < static_cast<std::size_t>(kappa); ++j) {
            std::swap(pool[j], pool[j + rng() % (pool.size() - j)]);
            if (pool[j] != l.server) sample.push_back(pool[j]);
        }
        for (auto s : sample) {
            Message m;
            m.kind = MsgKind::meta_request;
            m.src = l.server;
            m.dst = s;
            m.from = {0, l.server};
            m.to = {0, s};
            m.key = l.key;
            m.a = static_cast<std::uint64_t>(l.bucket.zone);
            m.b = l.bucket.prefix;
            m.bytes = 16;
            net.send(std::move(m));
        }
    }
    for (const auto& m : net.run_round()) {
        const BucketId b{static_cast<int>(m.a), m.b};
        Message r;
        r.kind = MsgKind::meta_reply;
        r.src = m.dst;
        r.dst = m.src;
        r.from = m.to;
        r.to = m.from;
        r.key = m.key;
        r.ts = servers[m.dst].timestamp(b);
        r.bytes = 12;
        net.send(std::move(r));
    }
    std::map<ServerId, std::pair<Timestamp, ServerId>> best;  // requester -> (ts, lowest holder)
    for (const auto& m : net.run_round()) {
        auto& b = best[m.dst];
        if (m.ts > b.first || (m.ts == b.first && m.src < b.second)) b = {m.ts, m.src};
    }

    for (auto& [server, i] : by_server) {
        auto& l = lookups[i];
        const auto* own = servers[server].bucket(l.bucket);
        const Timestamp own_ts = own ? own->timestamp : 0;
        const auto b = best.count(server) ? best[server] : std::pair<Timestamp, ServerId>{0, 0};
        l.ts = std::max(own_ts, b.first);
        l.empty = l.ts == 0;
        if (l.empty) {
            l.status = ActiveLookup::Status::next_zone;
            continue;
        }
        if (own_ts >= b.first) {
            l.seeds = own->hash_seeds;
            continue;
        }
        Message m;
        m.kind = MsgKind::seed_request;
        m.src = server;
        m.dst = b.second;
        m.from = {0, server};
        m.to = {0, b.second};
        m.a = static_cast<std::uint64_t>(l.bucket.zone);
        m.b = l.bucket.prefix;
        m.ts = l.ts;
        m.bytes = 24;
        net.send(std::move(m));
    }
    for (const auto& m : net.run_round()) {
        Message r;
        r.kind = MsgKind::seed_reply;
        r.src = m.dst;
        r.dst = m.src;
        r.from = m.to;
        r.to = m.from;
        r.a = m.a;
        r.b = m.b;
        r.ts = m.ts;
        r.bytes = static_cast<std::uint32_t>(8 * cl.params().c + 8);
        net.send(std::move(r));
    }
    for (const auto& m : net.run_round()) {
        const auto* held = servers[m.src].bucket(BucketId{static_cast<int>(m.a), m.b});
        auto& l = lookups[by_server.at(m.dst)];
        if (held && held->timestamp == l.ts) l.seeds = held->hash_seeds;
    }
    for (auto& [server, i] : by_server) {
        auto& l = lookups[i];
        if (l.status == ActiveLookup::Status::pending && l.seeds.empty()) {
            l.status = ActiveLookup::Status::failed;
            l.note = "no hash seeds for the newest bucket copy";
        }
    }
}

void probing_phase(LookupEnv& env, std::vector<ActiveLookup>& lookups) {
    auto& cl = env.cluster;
    const auto& params = cl.params();
    const auto& topo = cl.topology();
    const int c = params.c;
    const codec::PieceCodec codec(c, params.payload_len);
    const auto intact = intact_servers(cl);

    ComboRouter router(cl, env.reps, MsgKind::probe, 0, static_cast<std::uint64_t>(params.alpha) * c, true);
    std::map<ServerId, std::size_t> by_server;
    int zone = -1;
    for (std::size_t idx = 0; idx < lookups.size(); ++idx) {
        auto& l = lookups[idx];
        if (l.status != ActiveLookup::Status::pending) continue;
        zone = l.zone;
        by_server[l.server] = idx;
        const HashFamily h(l.seeds, params.n);
        auto rng = cl.stream(streams::probe_starts, static_cast<std::uint64_t>(l.zone), l.request);
        std::uniform_int_distribution<std::size_t> pick(0, intact.size() - 1);
        l.starts.assign(static_cast<std::size_t>(c), 0);
        l.fail_level.assign(static_cast<std::size_t>(c), INT_MAX);
        l.pieces.clear();
        l.saw_not_exists = false;
        for (int i = 1; i <= c; ++i) {
            l.starts[i - 1] = intact[pick(rng)];
            router.launch(l.server, {l.key, i, l.ts}, l.starts[i - 1], h(i, l.key), 24);
        }
    }
    if (by_server.empty()) return;

    const auto& servers = cl.servers();
    const int address_bits = params.address_bits();
    router.run(
        [&](NodeId node, const std::map<PairKey, Column>& pairs) {
            const Column g = node.column;
            for (const auto& [p, target] : pairs) {
                const BucketId b = fbucket(zone, p.key, address_bits);
                const StoredBucket* sb = cl.is_crashed(g) ? nullptr : servers[g].bucket(b);
                if (!sb || sb->timestamp != p.ts) {
                    router.answer(node, p, MsgKind::fail, 0, target, nullptr, 0);
                    continue;
                }
                auto piece = sb->find_piece(p.key, p.index, codec.piece_len());
                if (!piece) {
                    router.answer(node, p, MsgKind::not_exists, 0, target, nullptr, 0);
                    continue;
                }
                router.answer(node, p, MsgKind::piece, 0, target, std::make_shared<const Bytes>(std::move(piece->body)),
                              piece->version);
            }
        },
        [&](ServerId server, const Message& m) {
            auto& l = lookups[by_server.at(server)];
            if (m.ts != l.ts || m.key != l.key) return;
            auto& slot = l.fail_level[static_cast<std::size_t>(m.index - 1)];
            if (m.kind == MsgKind::fail) {
                slot = m.level;
            } else {
                slot = -1;
                if (m.kind == MsgKind::not_exists) {
                    l.saw_not_exists = true;
                } else {
                    l.pieces.push_back({m.key, m.index, *m.data, static_cast<Timestamp>(m.a)});
                }
            }
        });
    env.report.probe_messages += router.sent();
    env.report.combined_probes += router.absorbed();

    int mixed = 0, fallback = 0;
    for (auto& [server, idx] : by_server) {
        auto& l = lookups[idx];
        try_answer(l, codec);
        if (l.status != ActiveLookup::Status::pending) continue;
        if (l.saw_not_exists) {
            l.status = ActiveLookup::Status::next_zone;
            continue;
        }
        bool low = false, high = false;
        for (int f : l.fail_level) {
            low |= f == 0;
            high |= f > 0;
        }
        mixed += low && high ? 1 : 0;
        l.status = ActiveLookup::Status::belongs;
        l.level = classify_level(l, c, topo.d());
        if (l.level == 0) {
            l.level = 1;
            ++fallback;
        }
    }
    if (mixed > 0) {
        env.report.events.push_back("zone " + std::to_string(zone) + ": " + std::to_string(mixed) +
                                    " lookups with FAILs from level 0 and above");
    }
    if (fallback > 0) {
        env.report.events.push_back("zone " + std::to_string(zone) + ": " + std::to_string(fallback) +
                                    " lookups without a level holding 5c/6 active probes, sent to level 1");
    }
}

void decoding_subphase(LookupEnv& env, std::vector<ActiveLookup>& lookups, int level) {
    auto& cl = env.cluster;
    auto& net = cl.network();
    const auto& params = cl.params();
    const auto& topo = cl.topology();
    const int c = params.c;
    const int k = topo.k();
    const int d = topo.d();
    const codec::PieceCodec codec(c, params.payload_len);
    const std::uint64_t limit = static_cast<std::uint64_t>(params.beta) * c * k;
    const int want = (5 * c + 5) / 6;

    ComboRouter router(cl, env.reps, MsgKind::decode, level, limit, false);
    std::map<ServerId, std::size_t> by_server;
    int zone = -1;
    for (std::size_t idx = 0; idx < lookups.size(); ++idx) {
        auto& l = lookups[idx];
        if (l.status != ActiveLookup::Status::belongs || l.level != level) continue;
        zone = l.zone;
        by_server[l.server] = idx;
        std::vector<int> active;
        for (int i = 1; i <= c; ++i) {
            if (l.fail_level[i - 1] < level) active.push_back(i);
        }
        auto rng = cl.stream(streams::decode_choice, static_cast<std::uint64_t>(l.zone),
                             l.request * static_cast<std::uint64_t>(d + 1) + static_cast<std::uint64_t>(level));
        std::shuffle(active.begin(), active.end(), rng);
        active.resize(std::min<std::size_t>(active.size(), static_cast<std::size_t>(want)));
        std::sort(active.begin(), active.end());
        const HashFamily h(l.seeds, params.n);
        l.pieces.clear();
        l.saw_not_exists = false;
        for (int i : active) router.launch(l.server, {l.key, i, l.ts}, l.starts[i - 1], h(i, l.key), 24);
    }
    if (by_server.empty()) return;

    auto on_final = [&](ServerId server, const Message& m) {
        auto& l = lookups[by_server.at(server)];
        if (m.ts != l.ts || m.key != l.key) return;
        if (m.kind == MsgKind::not_exists) l.saw_not_exists = true;
        if (m.kind == MsgKind::piece) l.pieces.push_back({m.key, m.index, *m.data, static_cast<Timestamp>(m.a)});
    };

    // DECODE messages down to level `level`
    std::map<NodeId, std::map<PairKey, Column>> at_v;
    router.run([&](NodeId node, const std::map<PairKey, Column>& pairs) { at_v[node] = pairs; }, on_final);

    // DECODE_CHECK through UT(v), exactly 2*level rounds
    std::vector<NodeId> vs;
    for (const auto& [v, pairs] : at_v) vs.push_back(v);
    std::vector<bool> v_failed(vs.size(), false);
    std::map<NodeId, std::map<std::uint32_t, NodeId>> parent;
    std::set<NodeId> stopped, cong;
    std::map<NodeId, std::set<std::uint32_t>> fail_sent;
    std::vector<std::vector<std::uint32_t>> fail_lists;

    auto send_children = [&](MsgKind kind, NodeId from, const PairKey& p, std::uint32_t vidx, std::uint32_t bytes) {
        for (int b = 0; b < k; ++b) {
            Message m;
            m.kind = kind;
            m.from = from;
            m.to = {from.level - 1, topo.with_digit(from.column, from.level - 1, static_cast<unsigned>(b))};
            m.src = env.reps[from.column];
            m.dst = env.reps[m.to.column];
            m.key = p.key;
            m.index = p.index;
            m.ts = p.ts;
            m.ref = vidx;
            m.bytes = bytes;
            net.send(std::move(m));
        }
    };
    auto send_fail = [&](NodeId from, NodeId to, std::vector<std::uint32_t> list) {
        Message m;
        m.kind = MsgKind::fail;
        m.from = from;
        m.to = to;
        m.src = env.reps[from.column];
        m.dst = env.reps[to.column];
        m.bytes = static_cast<std::uint32_t>(8 + 4 * list.size());
        m.ref = fail_lists.size();
        fail_lists.push_back(std::move(list));
        net.send(std::move(m));
    };
    auto spread_cong = [&](NodeId node) {
        if (node.level == 0 || !cong.insert(node).second) return;
        send_children(MsgKind::cong, node, {}, 0, 8);
    };

    for (std::uint32_t vi = 0; vi < vs.size(); ++vi) {
        for (const auto& [p, target] : at_v[vs[vi]]) send_children(MsgKind::decode_check, vs[vi], p, vi, 32);
    }
    for (int round = 1; round <= 2 * level; ++round) {
        auto got = net.run_round();
        for (const auto& m : got) {
            if (m.kind == MsgKind::cong) {
                if (m.to.level == 0) {
                    cong.insert(m.to);
                } else {
                    spread_cong(m.to);
                }
            }
        }
        std::map<NodeId, std::vector<const Message*>> checks;
        for (const auto& m : got) {
            if (m.kind != MsgKind::decode_check) continue;
            checks[m.to].push_back(&m);
            parent[m.to][static_cast<std::uint32_t>(m.ref)] = m.from;
        }
        for (const auto& [node, msgs] : checks) {
            std::set<PairKey> distinct;
            for (const auto* m : msgs) distinct.insert(pair_of(*m));
            if (stopped.count(node) || distinct.size() > limit || cong.count(node)) {
                if (!stopped.insert(node).second) continue;
                std::map<NodeId, std::set<std::uint32_t>> by_edge;
                for (const auto* m : msgs) by_edge[m->from].insert(static_cast<std::uint32_t>(m->ref));
                for (auto& [from, set] : by_edge) {
                    fail_sent[node].insert(set.begin(), set.end());
                    send_fail(node, from, {set.begin(), set.end()});
                }
                spread_cong(node);
                continue;
            }
            if (node.level == 0) continue;
            for (const auto* m : msgs) {
                send_children(MsgKind::decode_check, node, pair_of(*m), static_cast<std::uint32_t>(m->ref), 32);
            }
        }
        for (const auto& m : got) {
            if (m.kind != MsgKind::fail) continue;
            std::map<NodeId, std::vector<std::uint32_t>> up;
            for (auto vi : fail_lists[m.ref]) {
                if (m.to == vs[vi]) {
                    v_failed[vi] = true;
                    continue;
                }
                if (!fail_sent[m.to].insert(vi).second) continue;
                up[parent[m.to].at(vi)].push_back(vi);
            }
            for (auto& [to, list] : up) send_fail(m.to, to, std::move(list));
        }
    }
    if (!net.idle()) throw InvariantViolation("check-window", "messages outlived the DECODE_CHECK window");

    // one distributed decode per (bucket, timestamp, sub-butterfly)
    std::map<std::tuple<BucketId, Timestamp, Column>, std::size_t> job_of;
    std::vector<DecodeJob> jobs;
    for (std::uint32_t vi = 0; vi < vs.size(); ++vi) {
        if (v_failed[vi]) continue;
        const Column base = topo.sub_butterfly_base(vs[vi]);
        for (const auto& [p, target] : at_v[vs[vi]]) {
            const BucketId b = fbucket(zone, p.key, params.address_bits());
            if (job_of.emplace(std::tuple{b, p.ts, base}, jobs.size()).second) jobs.push_back({b, p.ts, level, base});
        }
    }
    const auto outcomes =
        distributed_decode(net, topo, env.reps, cl.crash_flags(), cl.servers(), jobs, true);

    std::set<std::pair<Column, PairKey>> started;
    for (std::uint32_t vi = 0; vi < vs.size(); ++vi) {
        const NodeId v = vs[vi];
        for (const auto& [p, target] : at_v[v]) {
            if (v_failed[vi]) {
                router.answer(v, p, MsgKind::fail, level, target, nullptr, 0);
                continue;
            }
            for (int l = 0; l < level; ++l) {
                router.add_origin({l, topo.path_column(v.column, target, l)}, p,
                                  {l + 1, topo.path_column(v.column, target, l + 1)});
            }
            if (!started.insert({target, p}).second) continue;
            const BucketId b = fbucket(zone, p.key, params.address_bits());
            const auto& out = outcomes[job_of.at({b, p.ts, topo.sub_butterfly_base(v)})];
            auto it = out.blocks.find(target);
            const NodeId leaf{0, target};
            if (it == out.blocks.end()) {
                router.answer(leaf, p, MsgKind::fail, 0, target, nullptr, 0);
                continue;
            }
            std::optional<codec::Piece> found;
            for (auto& pc : block_format::parse(*it->second, codec.piece_len())) {
                if (pc.item_key == p.key && pc.index == p.index) {
                    found = std::move(pc);
                    break;
                }
            }
            if (!found) {
                router.answer(leaf, p, MsgKind::not_exists, 0, target, nullptr, 0);
            } else {
                router.answer(leaf, p, MsgKind::piece, 0, target, std::make_shared<const Bytes>(std::move(found->body)),
                              found->version);
            }
        }
    }
    router.run([](NodeId, const std::map<PairKey, Column>&) {}, on_final);

    for (auto& [server, idx] : by_server) {
        auto& l = lookups[idx];
        try_answer(l, codec);
        if (l.status != ActiveLookup::Status::belongs) continue;
        if (l.saw_not_exists) {
            l.status = ActiveLookup::Status::next_zone;
        } else if (level < d) {
            l.level = level + 1;
        } else {
            l.status = ActiveLookup::Status::failed;
            l.note = "not answered after the last decoding sub-phase";
        }
    }
}

std::vector<RequestOutcome> lookup_stage(Cluster& cluster, const RepresentativeMap& reps,
                                         const std::vector<LookupRequest>& requests, PeriodReport& report) {
    using Status = ActiveLookup::Status;
    auto& net = cluster.network();
    const auto& params = cluster.params();
    const int d = params.d;
    const int lambda = params.address_bits();
    LookupEnv env{cluster, reps, report};

    std::vector<ActiveLookup> all(requests.size());
    for (std::size_t i = 0; i < requests.size(); ++i) {
        all[i].request = i;
        all[i].server = requests[i].server;
        all[i].key = requests[i].key;
        all[i].status = Status::next_zone;
    }
    std::map<int, std::set<Key>> belongs, entering;

    auto step = [&](const std::string& name, int zone, auto&& body) {
        const std::size_t first = net.stats().size();
        net.set_phase(name);
        body();
        PhaseStat ps;
        ps.name = name;
        ps.zone = zone;
        for (std::size_t r = first; r < net.stats().size(); ++r) {
            ++ps.rounds;
            ps.congestion = std::max(ps.congestion, net.stats()[r].congestion);
        }
        if (name.rfind("lookup.decode", 0) == 0) {
            report.max_congestion_decoding = std::max(report.max_congestion_decoding, ps.congestion);
        }
        if (ps.rounds > 0) report.phases.push_back(std::move(ps));
    };

    for (int z = 0; z <= lambda; ++z) {
        bool any = false;
        for (auto& l : all) {
            if (l.status != Status::next_zone) continue;
            any = true;
            l.status = Status::pending;
            l.zone = z;
            l.bucket = fbucket(z, l.key, lambda);
            l.seeds.clear();
            l.ts = 0;
            l.empty = false;
        }
        if (!any) break;
        step("lookup.meta", z, [&] { acquire_metadata(env, all); });
        if (std::none_of(all.begin(), all.end(), [](const ActiveLookup& l) { return l.status == Status::pending; })) {
            continue;
        }
        step("lookup.probe", z, [&] { probing_phase(env, all); });
        for (const auto& l : all) {
            if (l.status == Status::belongs && l.zone == z) belongs[l.level].insert(l.key);
        }
        for (int level = 1; level <= d; ++level) {
            bool here = false;
            for (const auto& l : all) {
                if (l.status == Status::belongs && l.level == level) {
                    here = true;
                    entering[level].insert(l.key);
                }
            }
            if (!here) continue;
            step("lookup.decode." + std::to_string(level), z, [&] { decoding_subphase(env, all, level); });
        }
    }
    for (const auto& [level, keys] : belongs) report.belongs_to_level[level] += keys.size();
    for (const auto& [level, keys] : entering) report.entering_subphase[level] += keys.size();

    std::vector<RequestOutcome> out(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        const auto& l = all[i];
        auto& o = out[i];
        o.server = l.server;
        o.key = l.key;
        o.zone = l.zone;
        o.note = l.note;
        switch (l.status) {
            case Status::answered:
                o.outcome = Outcome::answered;
                o.value = l.value;
                o.version = l.version;
                break;
            case Status::failed:
                o.outcome = Outcome::failed;
                break;
            default:
                o.outcome = Outcome::not_exists;
                o.zone = lambda;
                break;
        }
    }
    return out;
}

}  // namespace robust
