#ifndef MIXNET_TESTS_HELPERS_HPP
#define MIXNET_TESTS_HELPERS_HPP

#include <algorithm>
#include <vector>

#include "mixnet/bench.hpp"
#include "mixnet/graphs.hpp"
#include "mixnet/model.hpp"

namespace testutil {

using namespace mixnet;

inline std::vector<Variable> make_vars(const std::vector<int>& cards) {
    std::vector<Variable> vars(cards.size());
    for (int i = 0; i < static_cast<int>(cards.size()); ++i)
        vars[i] = {i, "X" + std::to_string(i), cards[i]};
    return vars;
}

inline Cpt make_cpt(int child, std::vector<int> parents, std::vector<double> table) {
    Cpt c;
    c.child = child;
    c.parents = std::move(parents);
    c.table = std::move(table);
    return c;
}

inline Cpt uniform_cpt(int child, std::vector<int> parents, const std::vector<int>& cards) {
    std::size_t rows = 1;
    for (int p : parents) rows *= static_cast<std::size_t>(cards[p]);
    const int k = cards[child];
    return make_cpt(child, std::move(parents),
                    std::vector<double>(rows * k, 1.0 / k));
}

inline BeliefNetwork independent_uniform(int n, int k) {
    std::vector<int> cards(n, k);
    std::vector<Cpt> cpts;
    for (int i = 0; i < n; ++i) cpts.push_back(uniform_cpt(i, {}, cards));
    return BeliefNetwork(make_vars(cards), std::move(cpts));
}

inline Assignment full_assignment(const std::vector<int>& values) {
    Assignment x(static_cast<int>(values.size()));
    for (int i = 0; i < static_cast<int>(values.size()); ++i) x.assign(i, values[i]);
    return x;
}

inline MixedNetwork no_constraints(BeliefNetwork bn) {
    ConstraintNetwork cn(bn.variables(), {}, {});
    return MixedNetwork(std::move(bn), std::move(cn));
}

// W = 0, P = 1, Q = 2, Y = 3; arcs P -> W and Q -> Y; the optional
// constraint forces P == Q.
inline MixedNetwork example1_network(bool with_constraint) {
    const std::vector<int> cards(4, 2);
    std::vector<Cpt> cpts;
    cpts.push_back(make_cpt(0, {1}, {0.8, 0.2, 0.25, 0.75}));  // W | P
    cpts.push_back(make_cpt(1, {}, {0.6, 0.4}));               // P
    cpts.push_back(make_cpt(2, {}, {0.3, 0.7}));               // Q
    cpts.push_back(make_cpt(3, {2}, {0.55, 0.45, 0.1, 0.9}));  // Y | Q
    std::vector<Variable> vars = make_vars(cards);
    vars[0].name = "W";
    vars[1].name = "P";
    vars[2].name = "Q";
    vars[3].name = "Y";
    BeliefNetwork bn(vars, std::move(cpts));
    std::vector<TableConstraint> tables;
    if (with_constraint) tables.emplace_back(std::vector<int>{1, 2},
                                             std::vector<std::vector<int>>{{0, 0}, {1, 1}},
                                             vars);
    return MixedNetwork(std::move(bn), ConstraintNetwork(vars, std::move(tables), {}));
}

// A = 0, B = 1, C = 2, D = 3; A and B priors, C | A,B, D | C, with the
// clause (A or not B). A legal tree for it: A -> C -> {B, D}.
inline MixedNetwork fig6_network() {
    const std::vector<int> cards(4, 2);
    std::vector<Cpt> cpts;
    cpts.push_back(make_cpt(0, {}, {0.6, 0.4}));
    cpts.push_back(make_cpt(1, {}, {0.7, 0.3}));
    cpts.push_back(make_cpt(2, {0, 1}, {0.2, 0.8, 0.35, 0.65, 0.5, 0.5, 0.9, 0.1}));
    cpts.push_back(make_cpt(3, {2}, {0.45, 0.55, 0.3, 0.7}));
    const std::vector<Variable> vars = make_vars(cards);
    BeliefNetwork bn(vars, std::move(cpts));
    Clause clause;
    clause.literals = {{0, true}, {1, false}};
    return MixedNetwork(std::move(bn), ConstraintNetwork(vars, {}, {clause}));
}

inline LegalTree fig6_tree(const MixedNetwork& m) {
    // parents: A root, C under A, B and D under C
    return make_tree_from_parents(mixed_moral_graph(m), {-1, 2, 0, 2});
}

// Complete binary tree over n binary variables, parent (i-1)/2.
inline BeliefNetwork balanced_tree_network(int n) {
    const std::vector<int> cards(n, 2);
    std::vector<Cpt> cpts;
    cpts.push_back(make_cpt(0, {}, {0.4, 0.6}));
    for (int i = 1; i < n; ++i)
        cpts.push_back(make_cpt(i, {(i - 1) / 2}, {0.3, 0.7, 0.8, 0.2}));
    return BeliefNetwork(make_vars(cards), std::move(cpts));
}

// Random clauses over binary variables, appended to an existing network.
inline MixedNetwork with_random_clauses(const MixedNetwork& m, std::uint64_t seed,
                                        int count) {
    Rng rng(seed);
    std::vector<Clause> clauses = m.constraints().clauses();
    for (int j = 0; j < count; ++j) {
        const int arity = 1 + static_cast<int>(rng.below(
                                  std::min<std::uint64_t>(3, m.num_vars())));
        Clause clause;
        for (std::uint64_t v : rng.sample_without_replacement(
                 static_cast<std::uint64_t>(m.num_vars()),
                 static_cast<std::uint64_t>(arity)))
            clause.literals.push_back({static_cast<int>(v), rng.below(2) == 1});
        clauses.push_back(std::move(clause));
    }
    return MixedNetwork(m.belief(), ConstraintNetwork(m.variables(),
                                                      m.constraints().tables(),
                                                      std::move(clauses)));
}

// Test-local enumeration of the probability that a random tuple is a
// solution; deliberately a different code path from the library kernels.
inline double enum_cpe(const MixedNetwork& m) {
    const int n = m.num_vars();
    std::vector<int> values(n, 0);
    double total = 0.0;
    for (;;) {
        Assignment x = full_assignment(values);
        if (is_solution(m.constraints(), x)) total += joint_probability(m.belief(), x);
        int i = n - 1;
        while (i >= 0 && values[i] == m.cardinality(i) - 1) values[i--] = 0;
        if (i < 0) break;
        ++values[i];
    }
    return total;
}

// Exact treewidth by dynamic programming over vertex subsets: the best
// elimination order's worst degree, with fill expressed as reachability
// through already-eliminated vertices. Exponential; keep n small.
inline int exact_treewidth(const UndirectedGraph& g) {
    const int n = g.num_nodes();
    const int full = (1 << n) - 1;
    auto degree_after = [&](int v, int eliminated) {
        // neighbors of v among the survivors, connecting through eliminated
        std::vector<bool> seen(n, false);
        std::vector<int> stack{v};
        seen[v] = true;
        int degree = 0;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int w : g.neighbors(u)) {
                if (seen[w]) continue;
                seen[w] = true;
                if (eliminated & (1 << w))
                    stack.push_back(w);
                else
                    ++degree;
            }
        }
        return degree;
    };
    std::vector<int> best(full + 1, n);
    best[0] = 0;
    for (int mask = 1; mask <= full; ++mask) {
        for (int v = 0; v < n; ++v) {
            if (!(mask & (1 << v))) continue;
            const int rest = mask ^ (1 << v);
            const int width = std::max(best[rest], degree_after(v, rest));
            best[mask] = std::min(best[mask], width);
        }
    }
    return best[full];
}

}  // namespace testutil

#endif
