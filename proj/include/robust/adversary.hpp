#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "robust/simnet.hpp"

namespace robust {

enum class CrashStrategy { none, random, prefix, placement, scripted };
enum class WorkloadKind { none, random, hotspot, nonexistent, scripted };

CrashStrategy parse_crash_strategy(const std::string& s);
WorkloadKind parse_workload_kind(const std::string& s);
const char* to_string(CrashStrategy s);
const char* to_string(WorkloadKind w);

struct CrashSpec {
    CrashStrategy strategy = CrashStrategy::none;
    std::uint32_t count = 0;           // servers to crash (capped by the budget)
    std::optional<Key> victim;         // placement: item to attack, else a random live key
    std::vector<ServerId> servers;     // scripted
};

struct WorkloadSpec {
    WorkloadKind kind = WorkloadKind::random;
    double write_rate = 0.5;      // chance that an intact server issues a write
    double lookup_rate = 0.5;     // chance that it issues a lookup
    double overwrite_rate = 0.3;  // writes hitting an existing key
    double miss_rate = 0.1;       // lookups for keys never written
    std::uint64_t key_space = 0;  // 0: whole address space
    std::vector<WriteRequest> writes;   // scripted
    std::vector<LookupRequest> lookups; // scripted
};

// Batch-based adaptive adversary with full read access to the cluster as it
// stands at the period boundary. Its own randomness is independent of the
// protocol's.
class Adversary {
public:
    explicit Adversary(std::uint64_t seed) : seed_(seed) {}

    std::vector<ServerId> choose_crash_set(const Cluster& cluster, const CrashSpec& spec);

    // The victim chosen by the last placement attack, if any.
    std::optional<Key> last_victim() const { return victim_; }

    RequestBatch choose_requests(const Cluster& cluster, const WorkloadSpec& spec,
                                 const std::vector<ServerId>& crash_set);

private:
    std::mt19937_64 rng(std::uint64_t purpose, const Cluster& cluster) const;

    std::uint64_t seed_;
    std::optional<Key> victim_;
};

// Servers holding the most pieces of `key` in its current (shallowest) bucket,
// ties to the lower id. Empty if the key is not stored.
std::vector<ServerId> heaviest_holders(const Cluster& cluster, Key key, std::uint32_t count);

}  // namespace robust
