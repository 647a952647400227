#include "robust/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>

#include "robust/lookup_protocol.hpp"
#include "robust/write_protocol.hpp"

namespace robust {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const std::string& name, T fallback, const std::string& path = "") {
    auto it = j.find(name);
    if (it == j.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path + name, "wrong type");
    }
}

std::string hex(const Bytes& b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(b.size() * 2);
    for (Byte v : b) {
        s.push_back(digits[v >> 4]);
        s.push_back(digits[v & 15]);
    }
    return s;
}

Bytes unhex(const std::string& s, const std::string& path) {
    if (s.size() % 2 != 0) throw ConfigError(path, "hex string of odd length");
    Bytes out(s.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        try {
            out[i] = static_cast<Byte>(std::stoul(s.substr(2 * i, 2), nullptr, 16));
        } catch (const std::exception&) {
            throw ConfigError(path, "not a hex string");
        }
    }
    return out;
}

CrashSpec parse_crash(const json& j, const std::string& path) {
    CrashSpec c;
    if (!j.is_object()) throw ConfigError(path, "must be an object");
    try {
        c.strategy = parse_crash_strategy(field<std::string>(j, "strategy", "none", path));
    } catch (const ConfigError& e) {
        if (e.field() != "crash.strategy") throw;
        throw ConfigError(path + "strategy", "unknown strategy");
    }
    c.count = field<std::uint32_t>(j, "count", 0, path);
    if (j.contains("victim")) c.victim = field<Key>(j, "victim", 0, path);
    c.servers = field<std::vector<ServerId>>(j, "servers", {}, path);
    return c;
}

WorkloadSpec parse_workload(const json& j, const std::string& path) {
    WorkloadSpec w;
    if (!j.is_object()) throw ConfigError(path, "must be an object");
    try {
        w.kind = parse_workload_kind(field<std::string>(j, "kind", "random", path));
    } catch (const ConfigError& e) {
        if (e.field() != "workload.kind") throw;
        throw ConfigError(path + "kind", "unknown workload");
    }
    w.write_rate = field<double>(j, "write_rate", w.write_rate, path);
    w.lookup_rate = field<double>(j, "lookup_rate", w.lookup_rate, path);
    w.overwrite_rate = field<double>(j, "overwrite_rate", w.overwrite_rate, path);
    w.miss_rate = field<double>(j, "miss_rate", w.miss_rate, path);
    w.key_space = field<std::uint64_t>(j, "key_space", 0, path);
    for (const char* rate : {"write_rate", "lookup_rate", "overwrite_rate", "miss_rate"}) {
        const double v = field<double>(j, rate, 0.0, path);
        if (v < 0.0 || v > 1.0) throw ConfigError(path + rate, "must lie in [0, 1]");
    }
    if (auto it = j.find("writes"); it != j.end()) {
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            const std::string p = path + "writes[" + std::to_string(i) + "].";
            WriteRequest r;
            r.server = field<ServerId>(e, "server", 0, p);
            r.key = field<Key>(e, "key", 0, p);
            if (e.contains("payload")) r.payload = unhex(field<std::string>(e, "payload", "", p), p + "payload");
            w.writes.push_back(std::move(r));
        }
    }
    if (auto it = j.find("lookups"); it != j.end()) {
        for (std::size_t i = 0; i < it->size(); ++i) {
            const auto& e = (*it)[i];
            const std::string p = path + "lookups[" + std::to_string(i) + "].";
            w.lookups.push_back({field<ServerId>(e, "server", 0, p), field<Key>(e, "key", 0, p)});
        }
    }
    return w;
}

double log2n(const Params& p) { return std::log2(static_cast<double>(p.n)); }

}  // namespace

Scenario parse_scenario(const json& j) {
    if (!j.is_object()) throw ConfigError("scenario", "must be a JSON object");
    Scenario s;
    s.schema = field<int>(j, "schema", kScenarioSchema);
    if (s.schema != kScenarioSchema) {
        throw ConfigError("schema", "unsupported version " + std::to_string(s.schema));
    }
    s.name = field<std::string>(j, "name", "");
    auto& p = s.params;
    if (!j.contains("n")) throw ConfigError("n", "missing");
    if (!j.contains("k")) throw ConfigError("k", "missing");
    p.n = field<std::uint32_t>(j, "n", 0);
    p.k = field<int>(j, "k", 0);
    if (p.k < 2) throw ConfigError("k", "must be >= 2");
    int d = 0;
    for (std::uint64_t w = 1; w < p.n; w *= static_cast<std::uint64_t>(p.k)) ++d;
    p.d = field<int>(j, "d", d);
    p.p = field<int>(j, "p", p.p);
    // 18 log2 of the key universe, capped by the field size
    p.c = field<int>(j, "c", std::min(255, 18 * p.p * p.log2n()));
    p.payload_len = field<std::size_t>(j, "payload_len", p.payload_len);
    p.c_bits = field<int>(j, "c_bits", p.c_bits);
    p.alpha = field<int>(j, "alpha", p.alpha);
    p.beta = field<int>(j, "beta", p.beta);
    p.c_kappa = field<int>(j, "c_kappa", p.c_kappa);
    p.crash_budget = field<std::uint32_t>(j, "crash_budget", 0);
    p.round_cap = field<std::uint64_t>(j, "round_cap", 0);
    p.c_rounds = field<double>(j, "c_rounds", p.c_rounds);
    p.seed = field<std::uint64_t>(j, "seed", 1);
    p.validate();

    if (auto it = j.find("bounds"); it != j.end()) {
        s.bounds.c_phase = field<double>(*it, "c_phase", s.bounds.c_phase, "bounds.");
        s.bounds.c_ws = field<double>(*it, "c_ws", s.bounds.c_ws, "bounds.");
        s.bounds.c_cong = field<double>(*it, "c_cong", s.bounds.c_cong, "bounds.");
        s.bounds.c_red = field<double>(*it, "c_red", s.bounds.c_red, "bounds.");
        s.bounds.max_message_bytes = field<std::uint64_t>(*it, "max_message_bytes", 0, "bounds.");
    }
    s.detailed = field<bool>(j, "detailed", false);
    s.fixture = field<std::string>(j, "fixture", "");
    if (!s.fixture.empty() && s.fixture != "oversized-bucket") throw ConfigError("fixture", "unknown fixture");

    auto it = j.find("periods");
    if (it == j.end() || !it->is_array()) throw ConfigError("periods", "missing or not a list");
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& e = (*it)[i];
        const std::string path = "periods[" + std::to_string(i) + "].";
        PeriodPlan plan;
        plan.repeat = field<int>(e, "repeat", 1, path);
        if (plan.repeat < 1) throw ConfigError(path + "repeat", "must be >= 1");
        if (e.contains("crash")) plan.crash = parse_crash(e.at("crash"), path + "crash.");
        if (e.contains("workload")) plan.workload = parse_workload(e.at("workload"), path + "workload.");
        if (plan.crash.count > p.crash_budget) throw ConfigError(path + "crash.count", "exceeds crash_budget");
        if (plan.crash.servers.size() > p.crash_budget) throw ConfigError(path + "crash.servers", "exceeds crash_budget");
        s.periods.push_back(std::move(plan));
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario", "cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("scenario", std::string("malformed JSON: ") + e.what());
    }
    return parse_scenario(j);
}

Redundancy measure_redundancy(const Cluster& cluster) {
    Redundancy r;
    r.stored = cluster.stored_bytes();
    r.live = cluster.directory().entries().size() * cluster.params().payload_len;
    r.ratio = r.live == 0 ? 0.0 : static_cast<double>(r.stored) / static_cast<double>(r.live);
    return r;
}

double predicted_redundancy(const Params& p) {
    const std::uint64_t t = static_cast<std::uint64_t>(p.threshold());
    const double piece = static_cast<double>(ceil_div(p.payload_len, t));
    const double spread = std::pow(static_cast<double>(p.k) / (p.k - 1), p.d);
    return p.c * piece / static_cast<double>(p.payload_len) * spread;
}

double predicted_redundancy(const Params& p, std::uint64_t items) {
    if (items == 0) return 0.0;
    const std::uint64_t t = static_cast<std::uint64_t>(p.threshold());
    const double piece = static_cast<double>(ceil_div(p.payload_len, t));
    const double per_server = static_cast<double>(items) * p.c / p.n;
    double cw = 4.0 + per_server * (block_format::kRecordHeader + piece);
    double stored = cw + sizeof(Timestamp) + sizeof(std::uint32_t) + 8.0 * p.c;
    for (int l = 1; l <= p.d; ++l) {
        const double parity = std::ceil((cw + 4.0) / (p.k - 1));
        stored += 4.0 + parity;
        cw += 4.0 + parity;
    }
    return stored * p.n / (static_cast<double>(items) * p.payload_len);
}

LemmaCheck check_lemmas(const PeriodReport& r, const Params& p) {
    LemmaCheck out;
    const std::uint64_t k = static_cast<std::uint64_t>(p.k);
    for (const auto& [level, count] : r.belongs_to_level) {
        std::uint64_t pw = 1;
        for (int i = 1; i < level; ++i) pw *= k;
        if (36 * count * pw > p.n) out.probe_levels = false;
    }
    for (const auto& [level, count] : r.entering_subphase) {
        std::uint64_t pw = 1;
        for (int i = 0; i < level; ++i) pw *= k;
        if (12 * count * pw > static_cast<std::uint64_t>(p.n) * k) out.decode_entries = false;
    }
    out.placement = 6 * r.max_pieces_in_blocked <= p.c;
    return out;
}

BoundCheck check_bounds(const PeriodReport& r, const Params& p, const Bounds& b) {
    BoundCheck out;
    const double l = log2n(p);
    std::map<int, std::uint64_t> per_zone;
    for (const auto& ph : r.phases) {
        if (ph.name.rfind("write.", 0) == 0) per_zone[ph.zone] += ph.rounds;
    }
    for (const auto& [z, rounds] : per_zone) out.phase = out.phase && rounds <= b.c_phase * l;
    out.write_stage = r.write_rounds <= b.c_ws * l * l;
    out.period = r.rounds_used <= p.c_rounds * l * l * l * l;
    out.congestion = r.max_congestion <= b.c_cong * l * l * l;
    out.decoding = r.max_congestion_decoding <= static_cast<std::uint64_t>(p.beta) * p.c * p.k * p.k;
    out.message_size = b.max_message_bytes == 0 || r.max_message_bytes <= b.max_message_bytes;
    out.redundancy = r.live_bytes == 0 || r.redundancy <= b.c_red * l;
    return out;
}

json to_json(const PeriodReport& r, bool detailed) {
    json j;
    j["type"] = "period";
    j["period"] = r.period;
    j["crashed"] = r.crashed;
    j["rounds_used"] = r.rounds_used;
    j["preprocessing_rounds"] = r.preprocessing_rounds;
    j["write_rounds"] = r.write_rounds;
    j["lookup_rounds"] = r.lookup_rounds;
    j["write_phases"] = r.write_phases;
    j["max_congestion"] = r.max_congestion;
    j["max_congestion_decoding"] = r.max_congestion_decoding;
    j["max_message_bytes"] = r.max_message_bytes;
    j["messages"] = r.messages;
    j["stored_bytes"] = r.stored_bytes;
    j["live_bytes"] = r.live_bytes;
    j["redundancy"] = r.redundancy;
    j["items_rewritten"] = r.items_rewritten;
    j["max_pieces_in_blocked"] = r.max_pieces_in_blocked;
    j["probe_messages"] = r.probe_messages;
    j["combined_probes"] = r.combined_probes;
    json belongs = json::object(), entering = json::object();
    for (const auto& [l, v] : r.belongs_to_level) belongs[std::to_string(l)] = v;
    for (const auto& [l, v] : r.entering_subphase) entering[std::to_string(l)] = v;
    j["belongs_to_level"] = belongs;
    j["entering_subphase"] = entering;
    json phases = json::array();
    for (const auto& ph : r.phases) {
        phases.push_back({{"name", ph.name}, {"zone", ph.zone}, {"rounds", ph.rounds}, {"congestion", ph.congestion}});
    }
    j["phases"] = phases;
    json outcomes = json::array();
    for (const auto& o : r.outcomes) {
        json e{{"id", o.id},
               {"type", o.is_write ? "write" : "lookup"},
               {"server", o.server},
               {"key", o.key},
               {"outcome", to_string(o.outcome)},
               {"version", o.version},
               {"zone", o.zone},
               {"correct", o.correct}};
        if (!o.note.empty()) e["note"] = o.note;
        if (detailed && o.value) e["value"] = hex(*o.value);
        outcomes.push_back(std::move(e));
    }
    j["outcomes"] = outcomes;
    j["events"] = r.events;
    j["safety_violations"] = r.safety_violations;
    j["aborted"] = r.aborted;
    if (r.aborted) {
        j["abort_kind"] = r.abort_kind;
        j["abort_reason"] = r.abort_reason;
    }
    if (detailed) {
        json rounds = json::array();
        for (const auto& st : r.round_stats) {
            rounds.push_back({{"round", st.round},
                              {"phase", st.phase},
                              {"messages", st.messages},
                              {"max_sent", st.max_sent},
                              {"max_received", st.max_received},
                              {"congestion", st.congestion},
                              {"max_bytes", st.max_bytes},
                              {"dropped", st.dropped}});
        }
        j["round_stats"] = rounds;
    }
    return j;
}

void Summary::add(const PeriodReport& r, const Params& p, const Bounds& b) {
    ++periods;
    max_rounds = std::max(max_rounds, r.rounds_used);
    max_write_rounds = std::max(max_write_rounds, r.write_rounds);
    std::map<int, std::uint64_t> per_zone;
    for (const auto& ph : r.phases) {
        if (ph.name.rfind("write.", 0) == 0) per_zone[ph.zone] += ph.rounds;
    }
    for (const auto& [z, rounds] : per_zone) max_phase_rounds = std::max(max_phase_rounds, rounds);
    max_congestion = std::max(max_congestion, r.max_congestion);
    max_congestion_decoding = std::max(max_congestion_decoding, r.max_congestion_decoding);
    max_redundancy = std::max(max_redundancy, r.redundancy);
    final_redundancy = r.redundancy;
    safety_violations += r.safety_violations;
    for (const auto& o : r.outcomes) {
        if (o.outcome == Outcome::dropped) {
            ++dropped;
        } else if (o.is_write) {
            ++writes;
            failed_writes += o.outcome == Outcome::failed ? 1 : 0;
        } else {
            ++lookups;
            answered += o.outcome == Outcome::answered ? 1 : 0;
            not_exists += o.outcome == Outcome::not_exists ? 1 : 0;
            failed_lookups += o.outcome == Outcome::failed ? 1 : 0;
        }
    }
    const auto bc = check_bounds(r, p, b);
    bound_failures += (bc.phase && bc.write_stage && bc.period && bc.congestion && bc.decoding && bc.message_size && bc.redundancy) ? 0 : 1;
    const auto lc = check_lemmas(r, p);
    ++lemma_periods;
    probe_lemma_pass += lc.probe_levels ? 1 : 0;
    decode_lemma_pass += lc.decode_entries ? 1 : 0;
    placement_lemma_pass += lc.placement ? 1 : 0;
    if (r.aborted) {
        aborted = true;
        abort_reason = r.abort_reason;
    }
}

json Summary::to_json(bool with_lemmas) const {
    json j{{"type", "summary"},
           {"periods", periods},
           {"max_rounds", max_rounds},
           {"max_write_rounds", max_write_rounds},
           {"max_phase_rounds", max_phase_rounds},
           {"max_congestion", max_congestion},
           {"max_congestion_decoding", max_congestion_decoding},
           {"max_redundancy", max_redundancy},
           {"final_redundancy", final_redundancy},
           {"safety_violations", safety_violations},
           {"lookups", lookups},
           {"answered", answered},
           {"not_exists", not_exists},
           {"failed_lookups", failed_lookups},
           {"writes", writes},
           {"failed_writes", failed_writes},
           {"dropped", dropped},
           {"bound_failures", bound_failures},
           {"aborted", aborted}};
    if (aborted) j["abort_reason"] = abort_reason;
    if (with_lemmas) {
        j["lemmas"] = {{"periods", lemma_periods},
                       {"probe_levels_pass", probe_lemma_pass},
                       {"decode_entries_pass", decode_lemma_pass},
                       {"placement_pass", placement_lemma_pass}};
    }
    return j;
}

Runner::Runner(Scenario scenario)
    : scenario_(std::move(scenario)),
      cluster_(std::make_unique<Cluster>(scenario_.params)),
      adversary_(mix64(scenario_.params.seed ^ 0xad7e25a7ull)) {
    cluster_->network().set_detailed(scenario_.detailed);
}

PeriodReport Runner::run_period(const PeriodPlan& plan) {
    const auto crash = adversary_.choose_crash_set(*cluster_, plan.crash);
    const auto batch = adversary_.choose_requests(*cluster_, plan.workload, crash);
    return run_batch(crash, batch);
}

PeriodReport Runner::run_batch(const std::vector<ServerId>& crash_set, const RequestBatch& batch) {
    auto& cl = *cluster_;
    auto ctx = cl.begin_period(crash_set, batch);
    auto& net = cl.network();
    PeriodReport r;
    r.period = ctx.period;
    r.crashed = crash_set;
    std::sort(r.crashed.begin(), r.crashed.end());

    std::vector<RequestOutcome> writes, lookups;
    try {
        net.set_phase("preprocessing");
        const auto reps = assign_representatives(cl.crash_flags());
        introduce_representatives(net, cl.topology(), reps, cl.crash_flags());
        r.preprocessing_rounds = net.round();

        const auto ws = write_stage(cl, reps, ctx.writes, r);
        std::set<std::pair<Column, Key>> superseded(ws.superseded.begin(), ws.superseded.end());
        for (const auto& w : ctx.writes) {
            RequestOutcome o;
            o.is_write = true;
            o.server = w.server;
            o.key = w.key;
            o.version = ctx.period;
            if (!ws.applied) {
                o.outcome = Outcome::failed;
                o.note = ws.failure;
            } else {
                o.outcome = Outcome::applied;
                if (superseded.count({w.server, w.key})) o.note = "superseded by a concurrent write";
            }
            writes.push_back(std::move(o));
        }
        lookups = lookup_stage(cl, reps, ctx.lookups, r);
    } catch (const RoundCapExceeded& e) {
        r.aborted = true;
        r.abort_kind = "round-cap";
        r.abort_reason = e.what();
    } catch (const InvariantViolation& e) {
        r.aborted = true;
        r.abort_kind = "invariant";
        r.abort_reason = e.what();
        ++r.safety_violations;
    }

    std::uint32_t id = 0;
    for (auto* list : {&writes, &lookups, &ctx.dropped}) {
        for (auto& o : *list) {
            o.id = id++;
            r.outcomes.push_back(std::move(o));
        }
    }

    for (const auto& ph : r.phases) {
        if (ph.name.rfind("write.", 0) == 0) r.write_rounds += ph.rounds;
        if (ph.name.rfind("lookup.", 0) == 0) r.lookup_rounds += ph.rounds;
    }
    r.rounds_used = net.round();
    for (const auto& st : net.stats()) {
        r.max_congestion = std::max(r.max_congestion, st.congestion);
        r.max_message_bytes = std::max(r.max_message_bytes, st.max_bytes);
        r.messages += st.messages;
    }
    if (scenario_.detailed) r.round_stats = net.stats();
    const auto red = measure_redundancy(cl);
    r.stored_bytes = red.stored;
    r.live_bytes = red.live;
    r.redundancy = red.ratio;

    if (!r.aborted) check(r);
    summary_.add(r, scenario_.params, scenario_.bounds);
    return r;
}

void Runner::check(PeriodReport& r) {
    const auto& dir = cluster_->directory();
    for (auto& o : r.outcomes) {
        if (o.is_write) continue;
        const auto* e = dir.latest(o.key);
        if (o.outcome == Outcome::answered) {
            o.correct = e && o.value && *o.value == e->payload && o.version == e->version;
        } else if (o.outcome == Outcome::not_exists) {
            o.correct = e == nullptr;
        }
        if (!o.correct) {
            ++r.safety_violations;
            r.events.push_back("safety lookup-answer: request " + std::to_string(o.id) + " for key " +
                               std::to_string(o.key) + " returned " + to_string(o.outcome));
        }
    }
    if (auto bad = dir.check_freshness(cluster_->params().address_bits())) {
        ++r.safety_violations;
        r.events.push_back("invariant freshness: " + *bad);
    }
    if (scenario_.fixture == "oversized-bucket") {
        // hostile fixture: the root record claims 2n+1 members
        auto& rec = cluster_->directory().mutable_bucket(BucketId{});
        for (Key key = 0; rec.members.size() <= 2ull * scenario_.params.n; ++key) rec.members.emplace(key, rec.timestamp);
    }
    if (auto bad = dir.check_bucket_sizes(cluster_->params().n)) {
        ++r.safety_violations;
        r.events.push_back("invariant bucket-size: " + *bad);
    }
}

int run_scenario(const Scenario& scenario, std::ostream& out, bool lemmas) {
    Runner runner(scenario);
    int code = exit_ok;
    for (const auto& plan : scenario.periods) {
        for (int rep = 0; rep < plan.repeat && code == exit_ok; ++rep) {
            const auto r = runner.run_period(plan);
            auto j = to_json(r, scenario.detailed);
            const auto bc = check_bounds(r, scenario.params, scenario.bounds);
            j["bounds_ok"] = {{"phase", bc.phase},           {"write_stage", bc.write_stage},
                              {"period", bc.period},         {"congestion", bc.congestion},
                              {"decoding", bc.decoding},     {"message_size", bc.message_size},
                              {"redundancy", bc.redundancy}};
            out << j.dump() << '\n';
            if (r.aborted) {
                code = r.abort_kind == "round-cap" ? exit_round_cap : exit_safety;
            } else if (r.safety_violations > 0) {
                code = exit_safety;
            }
        }
        if (code != exit_ok) break;
    }
    auto sum = runner.summary().to_json(lemmas);
    const auto& b = scenario.bounds;
    const double l = log2n(scenario.params);
    sum["bounds"] = {{"c_phase", b.c_phase},
                     {"c_ws", b.c_ws},
                     {"c_rounds", scenario.params.c_rounds},
                     {"c_cong", b.c_cong},
                     {"c_red", b.c_red},
                     {"phase_limit", b.c_phase * l},
                     {"write_stage_limit", b.c_ws * l * l},
                     {"period_limit", scenario.params.c_rounds * l * l * l * l},
                     {"congestion_limit", b.c_cong * l * l * l},
                     {"decoding_congestion_limit", scenario.params.beta * scenario.params.c * scenario.params.k * scenario.params.k},
                     {"redundancy_limit", b.c_red * l},
                     {"max_message_bytes", b.max_message_bytes}};
    out << sum.dump() << '\n';
    return code;
}

}  // namespace robust
