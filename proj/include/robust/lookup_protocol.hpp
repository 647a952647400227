#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robust/codec/reed_solomon.hpp"
#include "robust/simnet.hpp"
#include "robust/write_protocol.hpp"

namespace robust {

// One lookup while it is being examined in some zone.
struct ActiveLookup {
    enum class Status { pending, answered, next_zone, belongs, failed };

    std::size_t request = 0;  // position in the stage's request list
    ServerId server = 0;
    Key key = 0;
    Status status = Status::pending;

    int zone = 0;
    BucketId bucket{};
    Timestamp ts = 0;  // bucket timestamp learned from the samples
    std::vector<std::uint64_t> seeds;
    bool empty = false;  // none of the samples holds the bucket

    std::vector<Column> starts;    // s_1..s_c
    std::vector<int> fail_level;   // -1: came back with a piece or NOT_EXISTS
    std::vector<codec::Piece> pieces;
    bool saw_not_exists = false;

    int level = 0;  // current decoding sub-phase once status == belongs
    Bytes value;
    Timestamp version = 0;
    std::string note;

    // probes that got past level `l` (their FAIL, if any, came from below it)
    int active_at(int l) const;
};

struct LookupEnv {
    Cluster& cluster;
    const RepresentativeMap& reps;
    PeriodReport& report;
};

// Samples kappa intact servers per request for the bucket's timestamp and
// fetches the hash seeds from one holder of the newest copy. 4 rounds.
void acquire_metadata(LookupEnv& env, std::vector<ActiveLookup>& lookups);

// Sends the c probes of every non-empty lookup towards h_i(key) with
// combining and congestion control, then classifies each lookup.
void probing_phase(LookupEnv& env, std::vector<ActiveLookup>& lookups);

// Decoding sub-phase `level` for the lookups currently at that level.
void decoding_subphase(LookupEnv& env, std::vector<ActiveLookup>& lookups, int level);

// Smallest level in 1..d with at least 5c/6 active probes, 0 if none.
int classify_level(const ActiveLookup& l, int c, int d);

// Runs all zones for the period's lookups. Outcomes are returned in request
// order; ids and correctness are left to the caller.
std::vector<RequestOutcome> lookup_stage(Cluster& cluster, const RepresentativeMap& reps,
                                         const std::vector<LookupRequest>& lookups, PeriodReport& report);

}  // namespace robust
