#ifndef MIXNET_SEARCH_HPP
#define MIXNET_SEARCH_HPP

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "mixnet/graphs.hpp"
#include "mixnet/model.hpp"

namespace mixnet {

enum class Propagation { none, forward_check, relational };

enum class Task { cpe, mpe, count };

/// One record per node event, for diagnostics, DOT export and replay.
struct TraceRecord {
    enum class Event { or_expand, and_expand, or_complete, and_complete, cache_hit, value_pruned };
    Event event;
    int variable = -1;
    int value = -1;
    int depth = 0;
    double g = 0.0;            // label at and_expand, final g at completes/hits
    bool cacheable = false;    // or_expand / cache_hit
    std::uint64_t cache_key = 0;
};

struct SearchOptions {
    Propagation propagation = Propagation::none;
    /// Cache subtree values for variables whose context has at most this
    /// many variables. 0 disables caching entirely.
    int cache_i_bound = 0;
    Task task = Task::cpe;
    std::vector<TraceRecord>* trace = nullptr;
};

struct SearchStats {
    std::uint64_t or_nodes = 0;    // OR nodes expanded (cache hits excluded)
    std::uint64_t and_nodes = 0;   // AND nodes expanded
    std::uint64_t dead_ends = 0;   // pruned values + OR nodes left with no successor
    std::uint64_t cache_hits = 0;
    std::uint64_t cache_entries = 0;
    double elapsed_seconds = 0.0;
};

/// Per-variable store of completed subtree values keyed by the context
/// assignment, encoded in mixed radix. Lives for a single query.
class CacheTable {
public:
    struct Entry {
        double g = 0.0;
        std::vector<std::pair<int, int>> assignment;  // mpe witness fragment
    };

    explicit CacheTable(int num_vars) : tables_(num_vars) {}

    const Entry* find(int var, std::uint64_t key) const;
    void store(int var, std::uint64_t key, Entry entry);
    std::uint64_t size() const;

private:
    std::vector<std::unordered_map<std::uint64_t, Entry>> tables_;
};

struct SearchResult {
    double value = 0.0;
    SearchStats stats;
};

struct MpeSearchResult {
    double value = 0.0;
    std::optional<Assignment> assignment;  // absent when the value is 0
    SearchStats stats;
};

/// Depth-first AND/OR traversal guided by the legal tree t: OR nodes sum
/// the labeled values of their children, AND nodes multiply. Returns the
/// probability that a random tuple of the belief part satisfies the
/// constraint part. t must be legal for the mixed moral graph of m.
SearchResult and_or_cpe(const MixedNetwork& m, const LegalTree& t, const SearchOptions& opts = {});

/// AND/OR search over the chain tree along d: the classical OR space.
SearchResult or_cpe(const MixedNetwork& m, const Ordering& d, const SearchOptions& opts = {});

/// Maximization variant: value is max over solutions of the joint
/// probability, with one witnessing assignment when the value is > 0.
MpeSearchResult and_or_mpe(const MixedNetwork& m, const LegalTree& t,
                           const SearchOptions& opts = {});

/// Solution count of the constraint part via search with unit labels.
/// Exact for counts up to 2^53.
SearchResult and_or_count(const MixedNetwork& m, const LegalTree& t,
                          const SearchOptions& opts = {});

/// Product of the entries of every CPT whose scope contains x and is
/// fully assigned by path (which already includes x = v); 1 if none.
double and_label(int x, int v, const Assignment& path, const BeliefNetwork& net);

/// Values of x, ascending, that pass the constraint checks of the given
/// propagation level against path. x must be unassigned in path;
/// path is restored before returning. pruned, when given, counts
/// rejected values.
std::vector<int> consistent_successors(int x, Assignment& path, const MixedNetwork& m,
                                       Propagation prop, std::uint64_t* pruned = nullptr);

/// False iff some constraint whose scope is contained in the assigned
/// variables plus one unassigned variable Y admits no value of Y.
bool forward_check(const Assignment& path_plus, const ConstraintNetwork& cn);

/// False iff some constraint's allowed tuples, filtered to those that
/// agree with the assigned portion of its scope, vanish entirely.
/// Rejects at least whatever forward_check rejects.
bool relational_forward_check(const Assignment& path_plus, const ConstraintNetwork& cn);

}  // namespace mixnet

#endif
