#include "robust/simnet.hpp"

#include <algorithm>
#include <cmath>

namespace robust {

std::uint64_t Params::effective_round_cap() const {
    if (round_cap > 0) return round_cap;
    const double l = std::log2(static_cast<double>(n));
    return static_cast<std::uint64_t>(std::ceil(c_rounds * l * l * l * l));
}

void Params::validate() const {
    if (k < 2) throw ConfigError("k", "must be >= 2");
    if (d < 1) throw ConfigError("d", "must be >= 1");
    std::uint64_t pw = 1;
    for (int i = 0; i < d; ++i) pw *= static_cast<std::uint64_t>(k);
    if (pw != n) throw ConfigError("n", "must equal k^d (" + std::to_string(pw) + ")");
    if (p < 1) throw ConfigError("p", "must be >= 1");
    if (address_bits() > 64) throw ConfigError("p", "address width p*ceil(log2 n) exceeds 64 bits");
    if (c < 3) throw ConfigError("c", "must be >= 3");
    if (c > 255) throw ConfigError("c", "must be <= 255");
    if (payload_len == 0) throw ConfigError("payload_len", "must be positive");
    if (c_bits < 1) throw ConfigError("c_bits", "must be >= 1");
    const std::uint64_t min_bits = static_cast<std::uint64_t>(c_bits) * log2n() * address_bits();
    if (payload_len * 8 < min_bits) {
        throw ConfigError("payload_len", "needs at least " + std::to_string(min_bits) + " bits");
    }
    if (alpha < 1) throw ConfigError("alpha", "must be >= 1");
    if (beta < 1) throw ConfigError("beta", "must be >= 1");
    if (c_kappa < 1) throw ConfigError("c_kappa", "must be >= 1");
    if (crash_budget >= n) throw ConfigError("crash_budget", "must be below n");
}

const char* to_string(MsgKind kind) {
    switch (kind) {
        case MsgKind::probe: return "PROBE";
        case MsgKind::fail: return "FAIL";
        case MsgKind::not_exists: return "NOT_EXISTS";
        case MsgKind::piece: return "PIECE";
        case MsgKind::decode: return "DECODE";
        case MsgKind::decode_check: return "DECODE_CHECK";
        case MsgKind::cong: return "CONG";
        case MsgKind::full: return "FULL";
        case MsgKind::partly: return "PARTLY";
        case MsgKind::count_tuple: return "COUNT_TUPLE";
        case MsgKind::block_transfer: return "BLOCK_TRANSFER";
        case MsgKind::hash_bcast: return "HASH_BCAST";
        case MsgKind::rep_ctrl: return "REP_CTRL";
        case MsgKind::meta_request: return "META_REQUEST";
        case MsgKind::meta_reply: return "META_REPLY";
        case MsgKind::seed_request: return "SEED_REQUEST";
        case MsgKind::seed_reply: return "SEED_REPLY";
        case MsgKind::key_claim: return "KEY_CLAIM";
        case MsgKind::key_drop: return "KEY_DROP";
        case MsgKind::item_transfer: return "ITEM_TRANSFER";
    }
    return "?";
}

const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::answered: return "answered";
        case Outcome::not_exists: return "not_exists";
        case Outcome::failed: return "failed";
        case Outcome::applied: return "applied";
        case Outcome::dropped: return "dropped";
    }
    return "?";
}

Network::Network(std::uint32_t n) : n_(n) {}

void Network::reset() {
    round_ = 0;
    seq_ = 0;
    outbox_.clear();
    stats_.clear();
    detail_.clear();
}

void Network::send(Message m) {
    if (m.src >= n_ || m.dst >= n_) throw ParameterError("message endpoint out of range");
    if (crashed_ && (*crashed_)[m.src]) {
        throw InvariantViolation("crashed-silent", "crashed server " + std::to_string(m.src) + " tried to send");
    }
    m.seq = seq_++;
    outbox_.push_back(std::move(m));
}

std::vector<Message> Network::run_round() {
    ++round_;
    if (cap_ > 0 && round_ > cap_) {
        throw RoundCapExceeded("round cap of " + std::to_string(cap_) + " exceeded in phase " + phase_);
    }
    std::vector<Message> sent_now;
    sent_now.swap(outbox_);
    // outbox order is seq order, so a stable sort on (dst, src) suffices
    std::vector<std::pair<std::uint64_t, std::uint32_t>> order(sent_now.size());
    for (std::size_t i = 0; i < sent_now.size(); ++i) {
        order[i] = {(static_cast<std::uint64_t>(sent_now[i].dst) << 32) | sent_now[i].src, static_cast<std::uint32_t>(i)};
    }
    std::sort(order.begin(), order.end());
    std::vector<Message> batch;
    batch.reserve(sent_now.size());
    for (const auto& [key, i] : order) batch.push_back(std::move(sent_now[i]));

    RoundStats st;
    st.round = round_;
    st.phase = phase_;
    st.messages = batch.size();
    std::vector<std::uint32_t> sent(n_, 0), recv(n_, 0);
    std::vector<Message> delivered;
    delivered.reserve(batch.size());
    for (auto& m : batch) {
        ++sent[m.src];
        st.max_bytes = std::max(st.max_bytes, m.bytes);
        if (crashed_ && (*crashed_)[m.dst]) {
            ++st.dropped;
            continue;
        }
        ++recv[m.dst];
        delivered.push_back(std::move(m));
    }
    for (std::uint32_t s = 0; s < n_; ++s) {
        st.max_sent = std::max(st.max_sent, sent[s]);
        st.max_received = std::max(st.max_received, recv[s]);
    }
    st.congestion = std::max(st.max_sent, st.max_received);
    if (detailed_) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> row(n_);
        for (std::uint32_t s = 0; s < n_; ++s) row[s] = {sent[s], recv[s]};
        detail_.push_back(std::move(row));
    }
    stats_.push_back(std::move(st));
    return delivered;
}

Cluster::Cluster(Params params)
    : params_((params.validate(), params)),
      topo_(params_.k, params_.d),
      net_(params_.n),
      servers_(params_.n),
      crashed_(params_.n, false) {
    for (std::uint32_t s = 0; s < params_.n; ++s) servers_[s].id = s;
    net_.set_crashed(&crashed_);
    net_.set_round_cap(params_.effective_round_cap());
}

std::mt19937_64 Cluster::stream(std::uint64_t purpose, std::uint64_t a, std::uint64_t b) const {
    std::uint64_t x = mix64(params_.seed ^ mix64(purpose * 0x100000001b3ull + period_));
    x = mix64(x ^ mix64(a + 0x51ed27ull));
    x = mix64(x ^ mix64(b + 0x2545f491ull));
    std::seed_seq seq{static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(x >> 32)};
    return std::mt19937_64(seq);
}

Cluster::PeriodContext Cluster::begin_period(const std::vector<ServerId>& crash_set, const RequestBatch& batch) {
    if (crash_set.size() > params_.crash_budget) {
        throw ConfigError("crash_set", std::to_string(crash_set.size()) + " crashes exceed the budget of " +
                                           std::to_string(params_.crash_budget));
    }
    std::vector<bool> flags(params_.n, false);
    for (auto s : crash_set) {
        if (s >= params_.n) throw ConfigError("crash_set", "server " + std::to_string(s) + " out of range");
        flags[s] = true;
    }
    std::vector<int> writes_at(params_.n, 0), lookups_at(params_.n, 0);
    for (const auto& w : batch.writes) {
        if (w.server >= params_.n) throw ConfigError("writes", "server out of range");
        if (w.payload.size() != params_.payload_len) throw ConfigError("writes", "payload length differs from S_d");
        if (params_.address_bits() < 64 && (w.key >> params_.address_bits()) != 0) {
            throw ConfigError("writes", "key wider than the address space");
        }
        if (++writes_at[w.server] > 1) {
            throw ConfigError("writes", "more than one write request at server " + std::to_string(w.server));
        }
    }
    for (const auto& l : batch.lookups) {
        if (l.server >= params_.n) throw ConfigError("lookups", "server out of range");
        if (params_.address_bits() < 64 && (l.key >> params_.address_bits()) != 0) {
            throw ConfigError("lookups", "key wider than the address space");
        }
        if (++lookups_at[l.server] > 1) {
            throw ConfigError("lookups", "more than one lookup request at server " + std::to_string(l.server));
        }
    }

    ++period_;
    crashed_ = std::move(flags);
    for (std::uint32_t s = 0; s < params_.n; ++s) servers_[s].crashed = crashed_[s];
    net_.reset();

    PeriodContext ctx;
    ctx.period = period_;
    std::uint32_t id = 0;
    for (const auto& w : batch.writes) {
        if (crashed_[w.server]) {
            RequestOutcome o;
            o.id = id++;
            o.is_write = true;
            o.server = w.server;
            o.key = w.key;
            o.outcome = Outcome::dropped;
            o.note = "addressed to a crashed server";
            ctx.dropped.push_back(std::move(o));
            continue;
        }
        ctx.writes.push_back(w);
    }
    for (const auto& l : batch.lookups) {
        if (crashed_[l.server]) {
            RequestOutcome o;
            o.id = id++;
            o.server = l.server;
            o.key = l.key;
            o.outcome = Outcome::dropped;
            o.note = "addressed to a crashed server";
            ctx.dropped.push_back(std::move(o));
            continue;
        }
        ctx.lookups.push_back(l);
    }
    auto by_server = [](const auto& a, const auto& b) { return a.server < b.server; };
    std::sort(ctx.writes.begin(), ctx.writes.end(), by_server);
    std::sort(ctx.lookups.begin(), ctx.lookups.end(), by_server);
    return ctx;
}

std::uint64_t Cluster::stored_bytes() const {
    std::uint64_t total = 0;
    for (const auto& s : servers_) {
        for (const auto& [id, b] : s.buckets) total += b.stored_bytes();
    }
    return total;
}

}  // namespace robust
