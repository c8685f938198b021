#include "mixnet/bench.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <unordered_set>

#include "mixnet/elimination.hpp"
#include "mixnet/graphs.hpp"
#include "mixnet/io.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mixnet {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) word = splitmix64(s);
}

std::uint64_t Rng::next() {
    // xoshiro256**
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0)
        throw std::invalid_argument("Rng::below: zero bound");
    const std::uint64_t threshold = (0 - bound) % bound;  // rejection cutoff
    for (;;) {
        const std::uint64_t r = next();
        if (r >= threshold) return r % bound;
    }
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::vector<std::uint64_t> Rng::sample_without_replacement(std::uint64_t bound,
                                                           std::uint64_t k) {
    if (k > bound)
        throw std::invalid_argument("sample_without_replacement: k exceeds population");
    std::vector<std::uint64_t> out;
    out.reserve(k);
    if (bound <= (std::uint64_t{1} << 20)) {
        std::vector<std::uint64_t> pool(bound);
        for (std::uint64_t i = 0; i < bound; ++i) pool[i] = i;
        for (std::uint64_t i = 0; i < k; ++i) {
            const std::uint64_t j = i + below(bound - i);
            std::swap(pool[i], pool[j]);
            out.push_back(pool[i]);
        }
    } else {
        std::unordered_set<std::uint64_t> chosen;
        while (chosen.size() < k) chosen.insert(below(bound));
        out.assign(chosen.begin(), chosen.end());
    }
    std::sort(out.begin(), out.end());
    return out;
}

MixedNetwork generate_mixed(const GenParams& params) {
    if (params.n < 1 || params.k < 1)
        throw std::invalid_argument("generate_mixed: need n >= 1 and k >= 1");
    if (params.r < 1 || params.r > params.n)
        throw std::invalid_argument("generate_mixed: need 1 <= r <= n");
    if (params.p < 0 || params.p >= params.n)
        throw std::invalid_argument("generate_mixed: need 0 <= p < n");
    if (params.c < 0)
        throw std::invalid_argument("generate_mixed: need c >= 0");
    if (params.s < 1 || params.s > params.n)
        throw std::invalid_argument("generate_mixed: need 1 <= s <= n");
    if (!(params.tightness > 0.0 && params.tightness <= 1.0))
        throw std::invalid_argument("generate_mixed: need tightness in (0, 1]");

    Rng rng(params.seed);
    const int n = params.n;
    const int k = params.k;

    std::vector<Variable> vars(n);
    for (int i = 0; i < n; ++i) vars[i] = {i, "X" + std::to_string(i), k};

    std::vector<Cpt> cpts(n);
    for (int i = 0; i < n; ++i) {
        Cpt& c = cpts[i];
        c.child = i;
        if (i >= params.r && i > 0) {
            const int num_parents = std::min(params.p, i);
            for (std::uint64_t v :
                 rng.sample_without_replacement(static_cast<std::uint64_t>(i),
                                                static_cast<std::uint64_t>(num_parents)))
                c.parents.push_back(static_cast<int>(v));
        }
        std::uint64_t rows = 1;
        for (std::size_t j = 0; j < c.parents.size(); ++j) rows *= k;
        c.table.resize(rows * k);
        for (std::uint64_t r = 0; r < rows; ++r) {
            double sum = 0.0;
            for (int v = 0; v < k; ++v) {
                const double draw = rng.uniform();
                c.table[r * k + v] = draw;
                sum += draw;
            }
            if (sum < 1e-12) {
                for (int v = 0; v < k; ++v) c.table[r * k + v] = 1.0 / k;
            } else {
                for (int v = 0; v < k; ++v) c.table[r * k + v] /= sum;
            }
        }
    }
    BeliefNetwork belief(vars, std::move(cpts));

    std::uint64_t tuple_space = 1;
    for (int j = 0; j < params.s; ++j) {
        tuple_space *= static_cast<std::uint64_t>(k);
        if (tuple_space > (std::uint64_t{1} << 20))
            throw std::invalid_argument("generate_mixed: constraint tuple space k^s too large");
    }
    const std::uint64_t allowed_count = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(
               std::llround(params.tightness * static_cast<double>(tuple_space))));

    std::vector<TableConstraint> tables;
    tables.reserve(params.c);
    for (int j = 0; j < params.c; ++j) {
        std::vector<int> scope;
        for (std::uint64_t v :
             rng.sample_without_replacement(static_cast<std::uint64_t>(n),
                                            static_cast<std::uint64_t>(params.s)))
            scope.push_back(static_cast<int>(v));
        std::vector<std::vector<int>> allowed;
        allowed.reserve(allowed_count);
        for (std::uint64_t code : rng.sample_without_replacement(tuple_space, allowed_count)) {
            std::vector<int> tuple(params.s);
            std::uint64_t rem = code;
            for (int i = params.s - 1; i >= 0; --i) {
                tuple[i] = static_cast<int>(rem % k);
                rem /= k;
            }
            allowed.push_back(std::move(tuple));
        }
        tables.emplace_back(std::move(scope), std::move(allowed), vars);
    }
    return MixedNetwork(std::move(belief),
                        ConstraintNetwork(vars, std::move(tables), {}));
}

namespace {

std::uint64_t tuple_space_size(const MixedNetwork& m, std::uint64_t budget,
                               const char* caller) {
    std::uint64_t total = 1;
    for (int i = 0; i < m.num_vars(); ++i) {
        const std::uint64_t k = static_cast<std::uint64_t>(m.cardinality(i));
        if (k != 0 && total > budget / k + 1) total = budget + 1;
        else total *= k;
        if (total > budget)
            throw EnumerationBudgetError(std::string(caller) +
                                         ": tuple space exceeds enumeration budget");
    }
    return total;
}

// Walks assignments with indices in [begin, end); index 0 is the
// all-zero tuple and the first variable is the most significant digit,
// so ascending index order is lexicographic order.
template <typename Fn>
void enumerate_range(const MixedNetwork& m, std::uint64_t begin, std::uint64_t end, Fn&& fn) {
    const int n = m.num_vars();
    Assignment x(n);
    std::uint64_t rem = begin;
    std::vector<int> decoded(n);
    for (int i = n - 1; i >= 0; --i) {
        decoded[i] = static_cast<int>(rem % m.cardinality(i));
        rem /= m.cardinality(i);
    }
    for (int i = 0; i < n; ++i) x.assign(i, decoded[i]);
    for (std::uint64_t idx = begin; idx < end; ++idx) {
        fn(idx, x);
        if (idx + 1 == end) break;
        int i = n - 1;
        while (x.value(i) == m.cardinality(i) - 1) {
            x.unassign(i);
            --i;
        }
        const int bumped = x.value(i) + 1;
        x.unassign(i);
        x.assign(i, bumped);
        for (++i; i < n; ++i) x.assign(i, 0);
    }
}

constexpr std::uint64_t kEnumerationBlock = 1 << 14;

// Applies block_fn to each fixed-size block of the tuple space, in
// parallel when OpenMP is enabled, then combine_fn to the block results
// in ascending block order. Fixed blocks keep the result independent of
// the thread count.
template <typename BlockFn, typename CombineFn>
void blocked_enumeration(const MixedNetwork& m, std::uint64_t total, BlockFn&& block_fn,
                         CombineFn&& combine_fn) {
    const std::int64_t num_blocks =
        static_cast<std::int64_t>((total + kEnumerationBlock - 1) / kEnumerationBlock);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t b = 0; b < num_blocks; ++b) {
        const std::uint64_t begin = static_cast<std::uint64_t>(b) * kEnumerationBlock;
        const std::uint64_t end = std::min(total, begin + kEnumerationBlock);
        block_fn(b, begin, end);
    }
    for (std::int64_t b = 0; b < num_blocks; ++b) combine_fn(b);
}

}  // namespace

double brute_force_cpe(const MixedNetwork& m, EnumerationMode mode, std::uint64_t budget) {
    const std::uint64_t total = tuple_space_size(m, budget, "brute_force_cpe");
    if (mode == EnumerationMode::serial) {
        double sum = 0.0;
        enumerate_range(m, 0, total, [&](std::uint64_t, const Assignment& x) {
            if (is_solution(m.constraints(), x)) sum += joint_probability(m.belief(), x);
        });
        return sum;
    }
    std::vector<double> partial((total + kEnumerationBlock - 1) / kEnumerationBlock, 0.0);
    double sum = 0.0;
    blocked_enumeration(
        m, total,
        [&](std::int64_t b, std::uint64_t begin, std::uint64_t end) {
            double local = 0.0;
            enumerate_range(m, begin, end, [&](std::uint64_t, const Assignment& x) {
                if (is_solution(m.constraints(), x)) local += joint_probability(m.belief(), x);
            });
            partial[b] = local;
        },
        [&](std::int64_t b) { sum += partial[b]; });
    return sum;
}

std::uint64_t brute_force_count(const MixedNetwork& m, EnumerationMode mode,
                                std::uint64_t budget) {
    const std::uint64_t total = tuple_space_size(m, budget, "brute_force_count");
    if (mode == EnumerationMode::serial) {
        std::uint64_t count = 0;
        enumerate_range(m, 0, total, [&](std::uint64_t, const Assignment& x) {
            if (is_solution(m.constraints(), x)) ++count;
        });
        return count;
    }
    std::vector<std::uint64_t> partial((total + kEnumerationBlock - 1) / kEnumerationBlock, 0);
    std::uint64_t count = 0;
    blocked_enumeration(
        m, total,
        [&](std::int64_t b, std::uint64_t begin, std::uint64_t end) {
            std::uint64_t local = 0;
            enumerate_range(m, begin, end, [&](std::uint64_t, const Assignment& x) {
                if (is_solution(m.constraints(), x)) ++local;
            });
            partial[b] = local;
        },
        [&](std::int64_t b) { count += partial[b]; });
    return count;
}

BruteForceMpe brute_force_mpe(const MixedNetwork& m, EnumerationMode mode,
                              std::uint64_t budget) {
    const std::uint64_t total = tuple_space_size(m, budget, "brute_force_mpe");
    struct Best {
        double value = 0.0;
        std::uint64_t index = 0;
        bool found = false;
    };
    auto scan = [&](std::uint64_t begin, std::uint64_t end) {
        Best best;
        enumerate_range(m, begin, end, [&](std::uint64_t idx, const Assignment& x) {
            if (!is_solution(m.constraints(), x)) return;
            const double p = joint_probability(m.belief(), x);
            if (!best.found || p > best.value) {
                best.value = p;
                best.index = idx;
                best.found = true;
            }
        });
        return best;
    };

    Best best;
    if (mode == EnumerationMode::serial) {
        best = scan(0, total);
    } else {
        std::vector<Best> partial((total + kEnumerationBlock - 1) / kEnumerationBlock);
        blocked_enumeration(
            m, total,
            [&](std::int64_t b, std::uint64_t begin, std::uint64_t end) {
                partial[b] = scan(begin, end);
            },
            [&](std::int64_t b) {
                const Best& cand = partial[b];
                if (cand.found && (!best.found || cand.value > best.value)) best = cand;
            });
    }

    BruteForceMpe out;
    if (!best.found || best.value <= 0.0) return out;
    out.value = best.value;
    Assignment a(m.num_vars());
    std::uint64_t rem = best.index;
    std::vector<int> decoded(m.num_vars());
    for (int i = m.num_vars() - 1; i >= 0; --i) {
        decoded[i] = static_cast<int>(rem % m.cardinality(i));
        rem /= m.cardinality(i);
    }
    for (int i = 0; i < m.num_vars(); ++i) a.assign(i, decoded[i]);
    out.assignment = std::move(a);
    return out;
}

bool independence_holds(const MixedNetwork& m, const std::vector<int>& w,
                        const std::vector<int>& z, const std::vector<int>& y,
                        double tolerance, std::uint64_t budget) {
    const std::uint64_t total = tuple_space_size(m, budget, "independence_holds");

    auto block_size = [&](const std::vector<int>& set) {
        std::uint64_t size = 1;
        for (int v : set) size *= static_cast<std::uint64_t>(m.cardinality(v));
        return size;
    };
    const std::uint64_t kw = block_size(w), kz = block_size(z), ky = block_size(y);

    auto project = [&](const std::vector<int>& set, const Assignment& x) {
        std::uint64_t idx = 0;
        for (int v : set)
            idx = idx * static_cast<std::uint64_t>(m.cardinality(v)) +
                  static_cast<std::uint64_t>(x.value(v));
        return idx;
    };

    std::vector<double> p_wzy(kw * kz * ky, 0.0), p_zy(kz * ky, 0.0), p_wz(kw * kz, 0.0),
        p_z(kz, 0.0);
    double mass = 0.0;
    enumerate_range(m, 0, total, [&](std::uint64_t, const Assignment& x) {
        if (!is_solution(m.constraints(), x)) return;
        const double p = joint_probability(m.belief(), x);
        const std::uint64_t iw = project(w, x), iz = project(z, x), iy = project(y, x);
        p_wzy[(iw * kz + iz) * ky + iy] += p;
        p_zy[iz * ky + iy] += p;
        p_wz[iw * kz + iz] += p;
        p_z[iz] += p;
        mass += p;
    });
    if (!(mass > 0.0))
        throw std::domain_error("independence_holds: inconsistent mixed network");

    for (std::uint64_t iz = 0; iz < kz; ++iz) {
        if (!(p_z[iz] > 0.0)) continue;
        for (std::uint64_t iy = 0; iy < ky; ++iy) {
            if (!(p_zy[iz * ky + iy] > 0.0)) continue;
            for (std::uint64_t iw = 0; iw < kw; ++iw) {
                const double lhs = p_wzy[(iw * kz + iz) * ky + iy] / p_zy[iz * ky + iy];
                const double rhs = p_wz[iw * kz + iz] / p_z[iz];
                if (std::fabs(lhs - rhs) > tolerance) return false;
            }
        }
    }
    return true;
}

namespace {

const char* propagation_name(Propagation p) {
    switch (p) {
        case Propagation::none: return "AO-C";
        case Propagation::forward_check: return "AO-FC";
        case Propagation::relational: return "AO-RFC";
    }
    return "AO-?";
}

std::uint64_t full_space_bound(int n, int k, int depth) {
    long double bound = static_cast<long double>(n);
    for (int i = 0; i <= depth; ++i) {
        bound *= k;
        if (bound > 1e18L) return std::uint64_t{1} << 62;
    }
    return static_cast<std::uint64_t>(bound);
}

// Greedily drops constraints while the instance still shows the failure.
MixedNetwork shrink_failing_instance(const MixedNetwork& m,
                                     const std::function<bool(const MixedNetwork&)>& fails) {
    MixedNetwork current = m;
    bool shrunk = true;
    while (shrunk) {
        shrunk = false;
        for (std::size_t drop = 0; drop < current.constraints().tables().size(); ++drop) {
            std::vector<TableConstraint> tables = current.constraints().tables();
            tables.erase(tables.begin() + static_cast<std::ptrdiff_t>(drop));
            MixedNetwork candidate(
                current.belief(),
                ConstraintNetwork(current.variables(), std::move(tables),
                                  current.constraints().clauses()));
            if (fails(candidate)) {
                current = std::move(candidate);
                shrunk = true;
                break;
            }
        }
        for (std::size_t drop = 0; drop < current.constraints().clauses().size(); ++drop) {
            std::vector<Clause> clauses = current.constraints().clauses();
            clauses.erase(clauses.begin() + static_cast<std::ptrdiff_t>(drop));
            MixedNetwork candidate(
                current.belief(),
                ConstraintNetwork(current.variables(), current.constraints().tables(),
                                  std::move(clauses)));
            if (fails(candidate)) {
                current = std::move(candidate);
                shrunk = true;
                break;
            }
        }
    }
    return current;
}

}  // namespace

std::vector<TrialReport> run_experiment(const ExperimentGrid& grid, int trials,
                                        std::ostream* failing_instance_sink) {
    std::vector<TrialReport> reports;
    reports.resize(grid.cells.size() * static_cast<std::size_t>(trials));
    std::vector<std::optional<std::string>> failures(reports.size());

    const std::int64_t total_trials = static_cast<std::int64_t>(reports.size());
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t slot = 0; slot < total_trials; ++slot) {
        const std::size_t cell_index = static_cast<std::size_t>(slot) / trials;
        const int trial = static_cast<int>(slot % trials);
        GenParams params = grid.cells[cell_index];
        params.seed += static_cast<std::uint64_t>(trial);

        TrialReport report;
        report.params = params;
        const MixedNetwork m = generate_mixed(params);
        const UndirectedGraph g = mixed_moral_graph(m);
        const Ordering d = min_fill_ordering(g);
        const LegalTree tree = build_legal_tree(g, d);
        report.induced_width = induced_graph_and_width(g, d).width;
        report.tree_depth = tree.depth;
        report.full_space = full_space_bound(params.n, params.k, tree.depth);

        for (Propagation prop : grid.propagations) {
            for (int i_bound : grid.i_bounds) {
                SearchOptions opts;
                opts.propagation = prop;
                opts.cache_i_bound = i_bound;
                const SearchResult res = and_or_cpe(m, tree, opts);
                report.results.push_back(
                    {propagation_name(prop), prop, i_bound, res.value, res.stats});
            }
        }
        if (grid.include_or_search) {
            const SearchResult res = or_cpe(m, d, {});
            report.results.push_back({"OR-C", Propagation::none, 0, res.value, res.stats});
        }
        if (grid.include_elimination) {
            try {
                EliminationOptions eopts;
                eopts.max_table_entries = grid.elimination_table_limit;
                const double value = bucket_elimination_cpe(m, d, eopts);
                report.results.push_back({"BE", Propagation::none, 0, value, {}});
            } catch (const WidthLimitError&) {
                // width too high for elimination; search results stand alone
            }
        }

        bool enumerable = true;
        try {
            const std::uint64_t count =
                tuple_space_size(m, grid.enumeration_budget, "run_experiment");
            (void)count;
        } catch (const EnumerationBudgetError&) {
            enumerable = false;
        }
        if (enumerable) {
            report.results.push_back({"BF", Propagation::none, 0,
                                      brute_force_cpe(m, EnumerationMode::serial,
                                                      grid.enumeration_budget),
                                      {}});
            report.solution_count =
                static_cast<std::uint64_t>(and_or_count(m, tree).value + 0.5);
        }

        double lo = report.results.front().value, hi = lo;
        for (const auto& r : report.results) {
            lo = std::min(lo, r.value);
            hi = std::max(hi, r.value);
        }
        if (hi - lo > 1e-9) {
            auto fails = [&](const MixedNetwork& candidate) {
                const UndirectedGraph cg = mixed_moral_graph(candidate);
                const Ordering cd = min_fill_ordering(cg);
                const double search = and_or_cpe(candidate, build_legal_tree(cg, cd)).value;
                double reference;
                try {
                    reference = brute_force_cpe(candidate, EnumerationMode::serial,
                                                grid.enumeration_budget);
                } catch (const EnumerationBudgetError&) {
                    reference = bucket_elimination_cpe(candidate, cd);
                }
                return std::fabs(search - reference) > 1e-9;
            };
            std::string dump = "value disagreement of " + std::to_string(hi - lo) +
                               " at seed " + std::to_string(params.seed);
            MixedNetwork shrunk = fails(m) ? shrink_failing_instance(m, fails) : m;
            dump += "\n" + serialize_uai(shrunk.belief());
            dump += "\n" + serialize_constraints(shrunk.constraints().tables());
            failures[slot] = std::move(dump);
        }
        reports[slot] = std::move(report);
    }

    for (std::size_t slot = 0; slot < failures.size(); ++slot) {
        if (!failures[slot]) continue;
        if (failing_instance_sink) *failing_instance_sink << *failures[slot] << "\n";
        throw std::runtime_error("run_experiment: sound algorithms disagree; "
                                 "minimized instance dumped");
    }
    return reports;
}

}  // namespace mixnet
