#include "robust/adversary.hpp"

#include <algorithm>
#include <set>

namespace robust {

CrashStrategy parse_crash_strategy(const std::string& s) {
    if (s == "none") return CrashStrategy::none;
    if (s == "random") return CrashStrategy::random;
    if (s == "prefix") return CrashStrategy::prefix;
    if (s == "placement") return CrashStrategy::placement;
    if (s == "scripted") return CrashStrategy::scripted;
    throw ConfigError("crash.strategy", "unknown strategy '" + s + "'");
}

WorkloadKind parse_workload_kind(const std::string& s) {
    if (s == "none") return WorkloadKind::none;
    if (s == "random") return WorkloadKind::random;
    if (s == "hotspot") return WorkloadKind::hotspot;
    if (s == "nonexistent") return WorkloadKind::nonexistent;
    if (s == "scripted") return WorkloadKind::scripted;
    throw ConfigError("workload.kind", "unknown workload '" + s + "'");
}

const char* to_string(CrashStrategy s) {
    switch (s) {
        case CrashStrategy::none: return "none";
        case CrashStrategy::random: return "random";
        case CrashStrategy::prefix: return "prefix";
        case CrashStrategy::placement: return "placement";
        case CrashStrategy::scripted: return "scripted";
    }
    return "?";
}

const char* to_string(WorkloadKind w) {
    switch (w) {
        case WorkloadKind::none: return "none";
        case WorkloadKind::random: return "random";
        case WorkloadKind::hotspot: return "hotspot";
        case WorkloadKind::nonexistent: return "nonexistent";
        case WorkloadKind::scripted: return "scripted";
    }
    return "?";
}

std::mt19937_64 Adversary::rng(std::uint64_t purpose, const Cluster& cluster) const {
    const std::uint64_t x = mix64(seed_ ^ mix64(streams::adversary * 0x9e37ull + purpose)) ^ mix64(cluster.now() + 1);
    std::seed_seq seq{static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(x >> 32)};
    return std::mt19937_64(seq);
}

std::vector<ServerId> heaviest_holders(const Cluster& cluster, Key key, std::uint32_t count) {
    const auto& p = cluster.params();
    const auto& dir = cluster.directory();
    for (int z = 0; z <= p.address_bits(); ++z) {
        const BucketId id = fbucket(z, key, p.address_bits());
        const auto* rec = dir.bucket(id);
        if (!rec || !rec->members.count(key)) continue;
        const StoredBucket* share = nullptr;
        for (const auto& s : cluster.servers()) {
            const auto* b = s.bucket(id);
            if (b && b->timestamp == rec->timestamp) {
                share = b;
                break;
            }
        }
        if (!share) return {};
        const HashFamily h(share->hash_seeds, p.n);
        std::vector<std::uint32_t> pieces(p.n, 0);
        for (int j = 1; j <= h.size(); ++j) ++pieces[h(j, key)];
        std::vector<ServerId> order;
        for (ServerId s = 0; s < p.n; ++s) {
            if (pieces[s] > 0) order.push_back(s);
        }
        std::stable_sort(order.begin(), order.end(),
                         [&](ServerId a, ServerId b) { return pieces[a] > pieces[b]; });
        if (order.size() > count) order.resize(count);
        std::sort(order.begin(), order.end());
        return order;
    }
    return {};
}

std::vector<ServerId> Adversary::choose_crash_set(const Cluster& cluster, const CrashSpec& spec) {
    const auto& p = cluster.params();
    const std::uint32_t count = std::min(spec.count, p.crash_budget);
    auto r = rng(1, cluster);
    victim_.reset();
    std::vector<ServerId> out;

    auto random_set = [&] {
        std::vector<ServerId> all(p.n);
        for (ServerId s = 0; s < p.n; ++s) all[s] = s;
        std::shuffle(all.begin(), all.end(), r);
        all.resize(count);
        return all;
    };

    switch (spec.strategy) {
        case CrashStrategy::none:
            break;
        case CrashStrategy::random:
            out = random_set();
            break;
        case CrashStrategy::prefix: {
            const auto& topo = cluster.topology();
            int level = 0;
            while (level < topo.d() && topo.power(level) < count) ++level;
            const std::uint32_t width = topo.power(level);
            const std::uint32_t block = static_cast<std::uint32_t>(r() % (p.n / width));
            for (std::uint32_t i = 0; i < count; ++i) out.push_back(block * width + i);
            break;
        }
        case CrashStrategy::placement: {
            std::optional<Key> victim = spec.victim;
            const auto& entries = cluster.directory().entries();
            if (!victim && !entries.empty()) {
                auto it = entries.begin();
                std::advance(it, static_cast<long>(r() % entries.size()));
                victim = it->first;
            }
            if (victim) out = heaviest_holders(cluster, *victim, count);
            if (out.empty()) {
                out = random_set();
            } else {
                victim_ = victim;
            }
            break;
        }
        case CrashStrategy::scripted:
            out = spec.servers;
            break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

RequestBatch Adversary::choose_requests(const Cluster& cluster, const WorkloadSpec& spec,
                                        const std::vector<ServerId>& crash_set) {
    const auto& p = cluster.params();
    RequestBatch batch;
    auto r = rng(2, cluster);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    const int bits = p.address_bits();
    std::uint64_t space = bits >= 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits);
    if (spec.key_space > 0) space = std::min(space, spec.key_space);

    std::vector<Key> existing;
    for (const auto& [key, e] : cluster.directory().entries()) existing.push_back(key);
    std::set<Key> known(existing.begin(), existing.end());

    auto payload = [&] {
        Bytes b(p.payload_len);
        for (auto& v : b) v = static_cast<Byte>(r());
        return b;
    };
    auto random_key = [&] { return r() % space; };
    auto old_key = [&] { return existing.empty() ? random_key() : existing[r() % existing.size()]; };
    auto fresh_key = [&] {
        for (int tries = 0; tries < 64; ++tries) {
            const Key k = random_key();
            if (!known.count(k)) return k;
        }
        return random_key();
    };

    std::vector<bool> down(p.n, false);
    for (auto s : crash_set) down[s] = true;
    std::vector<ServerId> intact;
    for (ServerId s = 0; s < p.n; ++s) {
        if (!down[s]) intact.push_back(s);
    }

    auto random_writes = [&] {
        for (auto s : intact) {
            if (u(r) >= spec.write_rate) continue;
            const Key key = u(r) < spec.overwrite_rate ? old_key() : random_key();
            batch.writes.push_back({s, key, payload()});
        }
    };

    switch (spec.kind) {
        case WorkloadKind::none:
            break;
        case WorkloadKind::random:
            random_writes();
            for (auto s : intact) {
                if (u(r) >= spec.lookup_rate) continue;
                batch.lookups.push_back({s, u(r) < spec.miss_rate ? fresh_key() : old_key()});
            }
            break;
        case WorkloadKind::hotspot: {
            random_writes();
            const Key hot = victim_ ? *victim_ : old_key();
            for (auto s : intact) batch.lookups.push_back({s, hot});
            break;
        }
        case WorkloadKind::nonexistent:
            for (auto s : intact) batch.lookups.push_back({s, fresh_key()});
            break;
        case WorkloadKind::scripted:
            batch.writes = spec.writes;
            for (auto& w : batch.writes) {
                if (w.payload.empty()) w.payload = payload();
            }
            batch.lookups = spec.lookups;
            break;
    }

    // the attacked item is always looked up
    if (victim_ && spec.kind != WorkloadKind::scripted && !intact.empty()) {
        const ServerId s = intact.front();
        auto it = std::find_if(batch.lookups.begin(), batch.lookups.end(),
                               [&](const LookupRequest& l) { return l.server == s; });
        if (it == batch.lookups.end()) {
            batch.lookups.insert(batch.lookups.begin(), {s, *victim_});
        } else {
            it->key = *victim_;
        }
    }
    return batch;
}

}  // namespace robust
