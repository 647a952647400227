#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "robust/adversary.hpp"
#include "robust/simnet.hpp"

namespace robust {

inline constexpr int kScenarioSchema = 1;

// Bound constants: rounds and congestion are compared against
// constant * log2(n)^power. Defaults measured at n in {16, 81, 256, 4096}.
struct Bounds {
    double c_phase = 8.0;   // one write phase (all sub-phases of one zone), power 1
    double c_ws = 16.0;     // whole write stage, power 2: up to 2 log2 n zones of c_phase each
    double c_cong = 24.0;   // per server per round, power 3; encode routing peaks near 8c
    double c_red = 8.0;     // stored / live bytes, power 1
    std::uint64_t max_message_bytes = 0;  // 0: not checked
};

struct PeriodPlan {
    CrashSpec crash;
    WorkloadSpec workload;
    int repeat = 1;
};

struct Scenario {
    int schema = kScenarioSchema;
    std::string name;
    Params params;
    Bounds bounds;
    bool detailed = false;  // per-server traffic and values in the reports
    std::string fixture;    // test only: "oversized-bucket" plants a bad directory record
    std::vector<PeriodPlan> periods;
};

// Throws ConfigError naming the offending field.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::string& path);

// Stored bytes over the plain bytes of the newest version of every live key.
// 0 when nothing is live.
struct Redundancy {
    std::uint64_t stored = 0;
    std::uint64_t live = 0;
    double ratio = 0.0;
};
Redundancy measure_redundancy(const Cluster& cluster);

// Expected stored/live ratio of one bucket without padding or framing:
// c * ceil(S/t) / S * (k/(k-1))^d.
double predicted_redundancy(const Params& p);

// Same for one bucket of `items` live items, counting record headers, length
// framing, parity rounding and per-server metadata, assuming every server
// holds the average number of pieces.
double predicted_redundancy(const Params& p, std::uint64_t items);

// Per-period lemma checks (exact integer comparisons, gamma = 1/36).
struct LemmaCheck {
    bool probe_levels = true;     // belongs_to_level(l) <= gamma n / k^(l-1)
    bool decode_entries = true;   // entering(l) <= 3 gamma k n / k^l
    bool placement = true;        // pieces in blocked sub-butterflies <= c/6
};
LemmaCheck check_lemmas(const PeriodReport& r, const Params& p);

struct BoundCheck {
    bool phase = true;
    bool write_stage = true;
    bool period = true;
    bool congestion = true;
    bool decoding = true;  // beta * c * k^2 in decoding rounds
    bool message_size = true;
    bool redundancy = true;
};
BoundCheck check_bounds(const PeriodReport& r, const Params& p, const Bounds& b);

nlohmann::json to_json(const PeriodReport& r, bool detailed);

struct Summary {
    std::uint64_t periods = 0;
    std::uint64_t max_rounds = 0;
    std::uint64_t max_write_rounds = 0;
    std::uint64_t max_phase_rounds = 0;
    std::uint32_t max_congestion = 0;
    std::uint32_t max_congestion_decoding = 0;
    double max_redundancy = 0.0;
    double final_redundancy = 0.0;
    std::uint64_t safety_violations = 0;
    std::uint64_t lookups = 0;
    std::uint64_t answered = 0;
    std::uint64_t not_exists = 0;
    std::uint64_t failed_lookups = 0;
    std::uint64_t writes = 0;
    std::uint64_t failed_writes = 0;
    std::uint64_t dropped = 0;
    std::uint64_t bound_failures = 0;
    std::uint64_t lemma_periods = 0;
    std::uint64_t probe_lemma_pass = 0;
    std::uint64_t decode_lemma_pass = 0;
    std::uint64_t placement_lemma_pass = 0;
    bool aborted = false;
    std::string abort_reason;

    void add(const PeriodReport& r, const Params& p, const Bounds& b);
    nlohmann::json to_json(bool with_lemmas) const;
};

// Drives one scenario period by period.
class Runner {
public:
    explicit Runner(Scenario scenario);

    const Scenario& scenario() const { return scenario_; }
    Cluster& cluster() { return *cluster_; }
    const Summary& summary() const { return summary_; }

    // Adversary choice, protocol, then oracle checks. Protocol exceptions
    // propagate after the report is marked aborted.
    PeriodReport run_period(const PeriodPlan& plan);

    // Runs a batch chosen by the caller instead of the adversary.
    PeriodReport run_batch(const std::vector<ServerId>& crash_set, const RequestBatch& batch);

private:
    void check(PeriodReport& r);

    Scenario scenario_;
    std::unique_ptr<Cluster> cluster_;
    Adversary adversary_;
    Summary summary_;
};

enum ExitCode : int { exit_ok = 0, exit_config = 1, exit_safety = 2, exit_round_cap = 3 };

// Runs all periods, writing one JSON line per period and a summary line.
int run_scenario(const Scenario& scenario, std::ostream& out, bool lemmas);

}  // namespace robust
