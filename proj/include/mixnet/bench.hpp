#ifndef MIXNET_BENCH_HPP
#define MIXNET_BENCH_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixnet/model.hpp"
#include "mixnet/search.hpp"

namespace mixnet {

/// Deterministic generator state. All sampling goes through the helpers
/// below so results are identical across platforms and standard
/// libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();
    /// Uniform integer in [0, bound), bound >= 1.
    std::uint64_t below(std::uint64_t bound);
    /// Uniform double in [0, 1).
    double uniform();
    /// k distinct values from [0, bound), ascending.
    std::vector<std::uint64_t> sample_without_replacement(std::uint64_t bound, std::uint64_t k);

private:
    std::uint64_t state_[4];
};

/// Parameters of the random mixed-network family: (n, k, r, p) shape the
/// belief part, (n, k, c, s, tightness) the constraint part.
struct GenParams {
    int n = 10;            // variables
    int k = 2;             // domain size
    int r = 1;             // root variables
    int p = 2;             // parents per non-root CPT
    int c = 0;             // constraints
    int s = 2;             // constraint scope size
    double tightness = 1.0;  // fraction of allowed tuples, in (0, 1]
    std::uint64_t seed = 0;
};

/// Fully seeded random mixed network: roots get priors, variable i >= r
/// draws min(p, i) parents from its predecessors, CPT rows are uniform
/// draws normalized per row; each constraint scope is s distinct
/// variables and allows max(1, round(tightness * k^s)) distinct tuples.
MixedNetwork generate_mixed(const GenParams& params);

/// Thrown when an enumeration would exceed the tuple budget.
class EnumerationBudgetError : public std::runtime_error {
public:
    explicit EnumerationBudgetError(const std::string& what) : std::runtime_error(what) {}
};

constexpr std::uint64_t kDefaultEnumerationBudget = std::uint64_t{1} << 24;

enum class EnumerationMode {
    serial,    // reference implementation, plain loop
    parallel,  // fixed-block OpenMP kernel, deterministic result
};

/// Sum of joint probabilities over all solutions, by exhaustive
/// enumeration. The oracle against which the search engines are checked.
double brute_force_cpe(const MixedNetwork& m,
                       EnumerationMode mode = EnumerationMode::serial,
                       std::uint64_t budget = kDefaultEnumerationBudget);

struct BruteForceMpe {
    double value = 0.0;
    std::optional<Assignment> assignment;  // lexicographically first maximizer
};

/// Max joint probability over solutions with its first maximizer; no
/// assignment when the maximum is 0.
BruteForceMpe brute_force_mpe(const MixedNetwork& m,
                              EnumerationMode mode = EnumerationMode::serial,
                              std::uint64_t budget = kDefaultEnumerationBudget);

/// Number of solutions of the constraint part.
std::uint64_t brute_force_count(const MixedNetwork& m,
                                EnumerationMode mode = EnumerationMode::serial,
                                std::uint64_t budget = kDefaultEnumerationBudget);

/// Exhaustive check of P_M(W | Y, Z) = P_M(W | Z) over every value
/// combination whose conditioning context has positive probability.
/// Throws std::domain_error when m is inconsistent.
bool independence_holds(const MixedNetwork& m, const std::vector<int>& w,
                        const std::vector<int>& z, const std::vector<int>& y,
                        double tolerance = 1e-9,
                        std::uint64_t budget = kDefaultEnumerationBudget);

struct AlgorithmResult {
    std::string name;
    Propagation propagation = Propagation::none;
    int i_bound = 0;
    double value = 0.0;
    SearchStats stats;
};

struct TrialReport {
    GenParams params;
    int induced_width = 0;
    int tree_depth = 0;
    std::uint64_t full_space = 0;  // n * k^(depth+1), the tree-size reference
    std::optional<std::uint64_t> solution_count;
    std::vector<AlgorithmResult> results;
};

struct ExperimentGrid {
    std::vector<GenParams> cells;  // seed field is the base seed of the cell
    std::vector<Propagation> propagations{Propagation::none, Propagation::forward_check,
                                          Propagation::relational};
    std::vector<int> i_bounds{0};
    bool include_or_search = true;
    bool include_elimination = true;
    std::uint64_t enumeration_budget = kDefaultEnumerationBudget;
    std::uint64_t elimination_table_limit = std::uint64_t{1} << 22;
};

/// Runs every cell for `trials` seeds, checks that all sound algorithms
/// agree on the value within 1e-9, and returns one report per trial.
/// On disagreement the failing instance is shrunk by dropping
/// constraints, dumped via the sink (when given), and the run aborts
/// with std::runtime_error. Trials run in parallel; reports keep
/// deterministic order.
std::vector<TrialReport> run_experiment(const ExperimentGrid& grid, int trials,
                                        std::ostream* failing_instance_sink = nullptr);

}  // namespace mixnet

#endif
