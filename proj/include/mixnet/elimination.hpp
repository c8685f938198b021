#ifndef MIXNET_ELIMINATION_HPP
#define MIXNET_ELIMINATION_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixnet/graphs.hpp"
#include "mixnet/model.hpp"

namespace mixnet {

/// Nonnegative function over an ordered variable scope, dense row-major
/// with the last scope variable running fastest.
struct Factor {
    std::vector<int> scope;
    std::vector<double> table;
};

/// Thrown when an intermediate factor would exceed the table budget.
class WidthLimitError : public std::runtime_error {
public:
    WidthLimitError(int scope_size, std::uint64_t entries, std::uint64_t limit)
        : std::runtime_error("bucket elimination refused: intermediate scope of " +
                             std::to_string(scope_size) + " variables needs " +
                             std::to_string(entries) + " entries (limit " +
                             std::to_string(limit) + ")"),
          scope_size(scope_size) {}
    int scope_size;
};

/// Conditioning on evidence that no solution supports.
class InconsistentEvidenceError : public std::runtime_error {
public:
    InconsistentEvidenceError()
        : std::runtime_error("conditioning on inconsistent evidence") {}
};

struct EliminationOptions {
    /// Largest dense table an intermediate factor may materialize.
    /// The default corresponds to 22 binary variables.
    std::uint64_t max_table_entries = std::uint64_t{1} << 22;
};

/// Sum-product elimination along d over the auxiliary network with every
/// constraint indicator clamped to its satisfied slice. The scalar that
/// remains is the probability that a random tuple satisfies the
/// constraint part, the same quantity and_or_cpe computes.
double bucket_elimination_cpe(const MixedNetwork& m, const Ordering& d,
                              const EliminationOptions& opts = {});

enum class BeliefBackend { search, elimination };

/// Posterior P(x = v | constraint part) for each value v, normalized.
/// Throws InconsistentEvidenceError when the constraint part has
/// probability zero.
std::vector<double> belief_given_cnf(const MixedNetwork& m, int x,
                                     BeliefBackend backend = BeliefBackend::search,
                                     const EliminationOptions& opts = {});

}  // namespace mixnet

#endif
