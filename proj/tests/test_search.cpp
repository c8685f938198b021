#include "doctest.h"

#include <cmath>
#include <map>
#include <set>

#include "helpers.hpp"
#include "mixnet/bench.hpp"
#include "mixnet/graphs.hpp"
#include "mixnet/search.hpp"

using namespace mixnet;
using namespace testutil;

namespace {

MixedNetwork random_instance(std::uint64_t seed, int n, int c, double t, int k = 2) {
    GenParams p;
    p.n = n;
    p.k = k;
    p.r = 1 + static_cast<int>(seed % 2);
    p.p = 2;
    p.c = c;
    p.s = 2 + static_cast<int>(seed % 2);
    p.tightness = t;
    p.seed = seed;
    return generate_mixed(p);
}

LegalTree default_tree(const MixedNetwork& m) {
    const UndirectedGraph g = mixed_moral_graph(m);
    return build_legal_tree(g, min_fill_ordering(g));
}

Ordering natural_order(int n) {
    Ordering d;
    for (int i = 0; i < n; ++i) d.perm.push_back(i);
    return d;
}

// Replays a trace and checks the label algebra: an OR value is the sum
// of its children's values (or the maximum for mpe), an AND value is its
// expansion label times the product of its children's values.
void replay_label_algebra(const std::vector<TraceRecord>& trace, bool maximization) {
    struct Node {
        bool is_or;
        double label = 1.0;  // AND expansion label
        double acc;          // running sum/max (OR) or product (AND)
    };
    std::vector<Node> stack;
    for (const auto& rec : trace) {
        switch (rec.event) {
            case TraceRecord::Event::or_expand:
                stack.push_back({true, 1.0, 0.0});
                break;
            case TraceRecord::Event::and_expand:
                stack.push_back({false, rec.g, rec.g});
                break;
            case TraceRecord::Event::cache_hit:
                REQUIRE(!stack.empty());
                REQUIRE_FALSE(stack.back().is_or);
                stack.back().acc *= rec.g;
                break;
            case TraceRecord::Event::value_pruned:
                break;
            case TraceRecord::Event::or_complete: {
                REQUIRE(!stack.empty());
                REQUIRE(stack.back().is_or);
                const double got = stack.back().acc;
                stack.pop_back();
                CHECK(std::fabs(got - rec.g) <= 1e-12 * (1.0 + std::fabs(rec.g)));
                if (!stack.empty()) stack.back().acc *= rec.g;
                break;
            }
            case TraceRecord::Event::and_complete: {
                REQUIRE(!stack.empty());
                REQUIRE_FALSE(stack.back().is_or);
                const double got = stack.back().acc;
                stack.pop_back();
                CHECK(std::fabs(got - rec.g) <= 1e-12 * (1.0 + std::fabs(rec.g)));
                if (!stack.empty()) {
                    Node& parent = stack.back();
                    REQUIRE(parent.is_or);
                    parent.acc = maximization ? std::max(parent.acc, rec.g)
                                              : parent.acc + rec.g;
                }
                break;
            }
        }
    }
    CHECK(stack.empty());
}

}  // namespace

TEST_CASE("total probability without constraints is one") {
    for (std::uint64_t seed : {7, 8, 9}) {
        const MixedNetwork m = no_constraints(random_instance(seed, 9, 0, 1.0).belief());
        const SearchResult res = and_or_cpe(m, default_tree(m));
        CHECK(std::fabs(res.value - 1.0) <= 1e-12);
        CHECK(res.stats.dead_ends == 0);
    }
}

TEST_CASE("contradictory unit clauses give exactly zero") {
    const BeliefNetwork bn = independent_uniform(3, 2);
    Clause pos, neg;
    pos.literals = {{1, true}};
    neg.literals = {{1, false}};
    const MixedNetwork m(bn, ConstraintNetwork(bn.variables(), {}, {pos, neg}));
    const SearchResult res = and_or_cpe(m, default_tree(m));
    CHECK(res.value == 0.0);
    CHECK(res.stats.dead_ends > 0);
}

TEST_CASE("search agrees with the enumeration oracle across options") {
    const std::vector<Propagation> props{Propagation::none, Propagation::forward_check,
                                         Propagation::relational};
    for (std::uint64_t seed = 201; seed < 241; ++seed) {
        const int k = (seed % 4 == 0) ? 3 : 2;
        const int n = (k == 3) ? 5 + static_cast<int>(seed % 3) : 7 + static_cast<int>(seed % 5);
        MixedNetwork m = random_instance(seed, n, static_cast<int>(seed % 6),
                                         0.3 + 0.1 * static_cast<double>(seed % 7), k);
        if (k == 2 && seed % 3 == 0) m = with_random_clauses(m, seed + 1000, 2);
        const double oracle = brute_force_cpe(m, EnumerationMode::serial);
        const LegalTree tree = default_tree(m);
        for (Propagation prop : props) {
            for (int i_bound : {0, 2, 4, n}) {
                SearchOptions opts;
                opts.propagation = prop;
                opts.cache_i_bound = i_bound;
                const SearchResult res = and_or_cpe(m, tree, opts);
                CHECK(std::fabs(res.value - oracle) <= 1e-9);
            }
        }
    }
}

TEST_CASE("fig-6 labels follow the worked run") {
    const MixedNetwork m = fig6_network();
    const LegalTree tree = fig6_tree(m);

    Assignment path(4);
    path.assign(0, 0);  // A = 0
    path.assign(2, 0);  // C = 0
    // B unassigned, so P(C|A,B) waits for a deeper node
    CHECK(and_label(2, 0, path, m.belief()) == doctest::Approx(1.0));

    path.assign(1, 0);  // B = 0
    const double expected = 0.7 * 0.2;  // P(B=0) * P(C=0 | A=0, B=0)
    CHECK(and_label(1, 0, path, m.belief()) == doctest::Approx(expected));
    path.unassign(1);

    // under A=0 the clause (A or not B) allows only B=0
    std::vector<int> succ = consistent_successors(1, path, m, Propagation::none);
    CHECK(succ == std::vector<int>{0});

    // g(<A,0>) = P(A=0) straight from the trace
    std::vector<TraceRecord> trace;
    SearchOptions opts;
    opts.trace = &trace;
    and_or_cpe(m, tree, opts);
    bool found = false;
    for (const auto& rec : trace)
        if (rec.event == TraceRecord::Event::and_expand && rec.variable == 0 &&
            rec.value == 0) {
            CHECK(rec.g == doctest::Approx(0.6));
            found = true;
            break;
        }
    CHECK(found);
}

TEST_CASE("every CPT labels exactly one AND node per root-to-leaf path") {
    for (std::uint64_t seed : {301, 302, 303}) {
        const MixedNetwork m = random_instance(seed, 8, 3, 0.6);
        const LegalTree tree = default_tree(m);
        std::vector<TraceRecord> trace;
        SearchOptions opts;
        opts.trace = &trace;
        and_or_cpe(m, tree, opts);

        // walk the trace with an explicit path of assigned variables
        Assignment path(m.num_vars());
        std::vector<std::vector<int>> consumed_stack;  // cpts consumed per AND level
        std::set<int> consumed;
        for (const auto& rec : trace) {
            if (rec.event == TraceRecord::Event::and_expand) {
                path.assign(rec.variable, rec.value);
                std::vector<int> here;
                for (int child = 0; child < m.num_vars(); ++child) {
                    const Cpt& c = m.belief().cpt(child);
                    bool contains = (child == rec.variable);
                    for (int p : c.parents) contains = contains || p == rec.variable;
                    bool full = path.is_assigned(child);
                    for (int p : c.parents) full = full && path.is_assigned(p);
                    if (contains && full) here.push_back(child);
                }
                for (int c : here) {
                    CHECK(consumed.count(c) == 0);  // never consumed twice on a path
                    consumed.insert(c);
                }
                consumed_stack.push_back(here);
                // at a leaf AND node, every CPT whose scope lies on the
                // path must have been consumed exactly once
                if (tree.children[rec.variable].empty()) {
                    for (int child = 0; child < m.num_vars(); ++child) {
                        const Cpt& c = m.belief().cpt(child);
                        bool full = path.is_assigned(child);
                        for (int p : c.parents) full = full && path.is_assigned(p);
                        if (full) CHECK(consumed.count(child) == 1);
                    }
                }
            } else if (rec.event == TraceRecord::Event::and_complete) {
                for (int c : consumed_stack.back()) consumed.erase(c);
                consumed_stack.pop_back();
                path.unassign(rec.variable);
            }
        }
    }
}

TEST_CASE("successor filtering is sound for pruning") {
    for (std::uint64_t seed : {311, 312}) {
        const MixedNetwork m = random_instance(seed, 6, 4, 0.4);
        for (Propagation prop :
             {Propagation::none, Propagation::forward_check, Propagation::relational}) {
            Assignment path(6);
            path.assign(0, static_cast<int>(seed % 2));
            const std::vector<int> succ = consistent_successors(1, path, m, prop);
            // any value leading to a full solution must survive
            for (int v = 0; v < 2; ++v) {
                bool extendable = false;
                for (int bits = 0; bits < 16; ++bits) {
                    std::vector<int> values{path.value(0), v, (bits >> 0) & 1,
                                            (bits >> 1) & 1, (bits >> 2) & 1,
                                            (bits >> 3) & 1};
                    extendable =
                        extendable || is_solution(m.constraints(), full_assignment(values));
                }
                if (extendable)
                    CHECK(std::find(succ.begin(), succ.end(), v) != succ.end());
            }
        }
    }
}

TEST_CASE("forward check prunes the exhausted less-than chain") {
    // X0 < X1 over domain {0..3}: choosing X0 = 3 leaves X1 empty
    const std::vector<Variable> vars = make_vars({4, 4});
    std::vector<std::vector<int>> less;
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) less.push_back({a, b});
    const TableConstraint lt({0, 1}, less, vars);
    const ConstraintNetwork cn(vars, {lt}, {});

    Assignment path(2);
    path.assign(0, 3);
    CHECK_FALSE(forward_check(path, cn));
    CHECK_FALSE(relational_forward_check(path, cn));
    CHECK_FALSE(violates_partial(cn, path));  // scope not fully assigned

    path.unassign(0);
    path.assign(0, 2);
    CHECK(forward_check(path, cn));
}

TEST_CASE("forward check without constraints always passes") {
    const MixedNetwork m = no_constraints(independent_uniform(4, 2));
    Assignment path(4);
    path.assign(2, 1);
    CHECK(forward_check(path, m.constraints()));
    CHECK(relational_forward_check(path, m.constraints()));
}

TEST_CASE("forward check false means no solution extends the path") {
    for (std::uint64_t seed = 321; seed < 327; ++seed) {
        const MixedNetwork m = random_instance(seed, 6, 4, 0.35);
        Rng rng(seed * 3);
        for (int round = 0; round < 30; ++round) {
            Assignment path(6);
            for (int v = 0; v < 6; ++v)
                if (rng.below(2) == 0) path.assign(v, static_cast<int>(rng.below(2)));
            const bool fc = forward_check(path, m.constraints());
            const bool rfc = relational_forward_check(path, m.constraints());
            // relational projection rejects at least as often
            if (!fc) CHECK_FALSE(rfc);
            if (fc && rfc) continue;
            for (int bits = 0; bits < 64; ++bits) {
                std::vector<int> values(6);
                bool extends = true;
                for (int i = 0; i < 6; ++i) {
                    values[i] = (bits >> i) & 1;
                    if (path.is_assigned(i) && path.value(i) != values[i]) extends = false;
                }
                if (extends)
                    CHECK_FALSE(is_solution(m.constraints(), full_assignment(values)));
            }
        }
    }
}

TEST_CASE("relational check rejects an empty projection early") {
    const std::vector<Variable> vars = make_vars({2, 2, 2});
    const TableConstraint only_zeros({0, 1, 2}, {{0, 0, 0}}, vars);
    const ConstraintNetwork cn(vars, {only_zeros}, {});
    Assignment path(3);
    path.assign(0, 1);
    CHECK_FALSE(relational_forward_check(path, cn));
    // forward checking needs two more assignments to notice
    CHECK(forward_check(path, cn));
}

TEST_CASE("relational check on a fully assigned scope matches violates_partial") {
    const std::vector<Variable> vars = make_vars({2, 2});
    const TableConstraint c({0, 1}, {{0, 1}, {1, 0}}, vars);
    const ConstraintNetwork cn(vars, {c}, {});
    Assignment path(2);
    path.assign(0, 0);
    path.assign(1, 0);
    CHECK(violates_partial(cn, path));
    CHECK_FALSE(relational_forward_check(path, cn));
}

TEST_CASE("caching disabled stores and hits nothing") {
    const MixedNetwork m = random_instance(401, 8, 3, 0.6);
    const SearchResult res = and_or_cpe(m, default_tree(m), {});
    CHECK(res.stats.cache_hits == 0);
    CHECK(res.stats.cache_entries == 0);
}

TEST_CASE("full caching bounds expansions by the context bound") {
    for (std::uint64_t seed : {411, 412, 413}) {
        const MixedNetwork m = random_instance(seed, 9, 3, 0.7);
        const LegalTree tree = default_tree(m);
        std::vector<TraceRecord> trace;
        SearchOptions opts;
        opts.cache_i_bound = m.num_vars();
        opts.trace = &trace;
        const SearchResult res = and_or_cpe(m, tree, opts);

        std::map<int, std::uint64_t> expansions;
        for (const auto& rec : trace)
            if (rec.event == TraceRecord::Event::or_expand) ++expansions[rec.variable];
        std::uint64_t total = 0;
        for (int v = 0; v < m.num_vars(); ++v) {
            const double bound = std::pow(2.0, static_cast<double>(tree.contexts[v].size()));
            CHECK(static_cast<double>(expansions[v]) <= bound);
            total += expansions[v];
        }
        CHECK(total == res.stats.or_nodes);
        CHECK(static_cast<double>(total) <=
              m.num_vars() * std::pow(2.0, static_cast<double>(tree.width)));
    }
}

TEST_CASE("cached and uncached searches return the same value") {
    for (std::uint64_t seed = 421; seed < 433; ++seed) {
        const MixedNetwork m = random_instance(seed, 9, 4, 0.5);
        const LegalTree tree = default_tree(m);
        const double plain = and_or_cpe(m, tree, {}).value;
        for (int i_bound : {1, 3, 9}) {
            SearchOptions opts;
            opts.cache_i_bound = i_bound;
            opts.propagation = Propagation::forward_check;
            CHECK(std::fabs(and_or_cpe(m, tree, opts).value - plain) <= 1e-12);
        }
    }
}

TEST_CASE("or search matches the and/or value and typically costs more") {
    std::uint64_t or_nodes = 0, ao_nodes = 0;
    for (std::uint64_t seed = 441; seed < 449; ++seed) {
        const MixedNetwork m = random_instance(seed, 9, 3, 0.6);
        const UndirectedGraph g = mixed_moral_graph(m);
        const Ordering d = min_fill_ordering(g);
        const SearchResult ao = and_or_cpe(m, build_legal_tree(g, d));
        const SearchResult orc = or_cpe(m, d);
        CHECK(std::fabs(ao.value - orc.value) <= 1e-12);
        or_nodes += orc.stats.or_nodes + orc.stats.and_nodes;
        ao_nodes += ao.stats.or_nodes + ao.stats.and_nodes;
    }
    CHECK(ao_nodes <= or_nodes);
}

TEST_CASE("or search on a single variable is the and/or search") {
    const MixedNetwork m = no_constraints(independent_uniform(1, 3));
    const SearchResult a = and_or_cpe(m, default_tree(m));
    const SearchResult b = or_cpe(m, natural_order(1));
    CHECK(a.value == b.value);
    CHECK(a.stats.or_nodes == b.stats.or_nodes);
}

TEST_CASE("propagation strength orders node and dead-end counts") {
    for (std::uint64_t seed = 451; seed < 459; ++seed) {
        const MixedNetwork m = random_instance(seed, 10, 5, 0.35);
        const LegalTree tree = default_tree(m);
        SearchStats by_prop[3];
        int i = 0;
        for (Propagation prop :
             {Propagation::none, Propagation::forward_check, Propagation::relational}) {
            SearchOptions opts;
            opts.propagation = prop;
            by_prop[i++] = and_or_cpe(m, tree, opts).stats;
        }
        CHECK(by_prop[2].or_nodes + by_prop[2].and_nodes <=
              by_prop[1].or_nodes + by_prop[1].and_nodes);
        CHECK(by_prop[1].or_nodes + by_prop[1].and_nodes <=
              by_prop[0].or_nodes + by_prop[0].and_nodes);
        CHECK(by_prop[2].dead_ends <= by_prop[1].dead_ends);
        CHECK(by_prop[1].dead_ends <= by_prop[0].dead_ends);
    }
}

TEST_CASE("node counts stay within the tree-size bound") {
    for (std::uint64_t seed : {461, 462, 463}) {
        const MixedNetwork m = random_instance(seed, 9, 3, 0.6);
        const LegalTree tree = default_tree(m);
        const SearchResult res = and_or_cpe(m, tree, {});
        const double bound =
            2.0 * m.num_vars() * std::pow(2.0, static_cast<double>(tree.depth + 1));
        CHECK(static_cast<double>(res.stats.or_nodes + res.stats.and_nodes) <= bound);
    }
}

TEST_CASE("trace replay validates the label algebra") {
    for (std::uint64_t seed : {471, 472}) {
        MixedNetwork m = random_instance(seed, 8, 3, 0.5);
        m = with_random_clauses(m, seed + 5, 1);
        const LegalTree tree = default_tree(m);
        for (int i_bound : {0, 3}) {
            std::vector<TraceRecord> trace;
            SearchOptions opts;
            opts.cache_i_bound = i_bound;
            opts.trace = &trace;
            and_or_cpe(m, tree, opts);
            replay_label_algebra(trace, false);

            trace.clear();
            and_or_mpe(m, tree, opts);
            replay_label_algebra(trace, true);
        }
    }
}

TEST_CASE("leaf AND labels are positive exactly on solved leaves") {
    // strictly positive CPTs: a completed leaf is always solved
    for (std::uint64_t seed : {481, 482}) {
        const MixedNetwork m = random_instance(seed, 7, 3, 0.5);
        const LegalTree tree = default_tree(m);
        std::vector<TraceRecord> trace;
        SearchOptions opts;
        opts.trace = &trace;
        and_or_cpe(m, tree, opts);
        for (const auto& rec : trace)
            if (rec.event == TraceRecord::Event::and_complete &&
                tree.children[rec.variable].empty())
                CHECK(rec.g > 0.0);
    }
}

TEST_CASE("mpe on deterministic point-mass CPTs finds the forced assignment") {
    const std::vector<int> cards{2, 2};
    std::vector<Cpt> cpts;
    cpts.push_back(make_cpt(0, {}, {0.0, 1.0}));
    cpts.push_back(make_cpt(1, {0}, {1.0, 0.0, 0.0, 1.0}));  // X1 == X0
    const MixedNetwork m = no_constraints(BeliefNetwork(make_vars(cards), std::move(cpts)));
    const MpeSearchResult res = and_or_mpe(m, default_tree(m));
    CHECK(res.value == doctest::Approx(1.0));
    REQUIRE(res.assignment.has_value());
    CHECK(res.assignment->value(0) == 1);
    CHECK(res.assignment->value(1) == 1);
}

TEST_CASE("mpe never exceeds the cpe mass and matches brute force") {
    for (std::uint64_t seed = 491; seed < 511; ++seed) {
        MixedNetwork m = random_instance(seed, 8, 3, 0.45);
        if (seed % 2 == 0) m = with_random_clauses(m, seed + 7, 1);
        const LegalTree tree = default_tree(m);
        for (int i_bound : {0, 8}) {
            SearchOptions opts;
            opts.cache_i_bound = i_bound;
            opts.propagation = Propagation::forward_check;
            const MpeSearchResult res = and_or_mpe(m, tree, opts);
            const BruteForceMpe oracle = brute_force_mpe(m);
            CHECK(std::fabs(res.value - oracle.value) <= 1e-9);
            CHECK(res.value <= and_or_cpe(m, tree).value + 1e-12);
            if (oracle.assignment) {
                REQUIRE(res.assignment.has_value());
                // the witness must reproduce the optimal probability
                CHECK(std::fabs(joint_probability(m.belief(), *res.assignment) -
                                oracle.value) <= 1e-12);
                CHECK(is_solution(m.constraints(), *res.assignment));
            } else {
                CHECK_FALSE(res.assignment.has_value());
            }
        }
    }
}

TEST_CASE("mpe on an inconsistent network reports zero and no assignment") {
    const BeliefNetwork bn = independent_uniform(3, 2);
    Clause pos, neg;
    pos.literals = {{0, true}};
    neg.literals = {{0, false}};
    const MixedNetwork m(bn, ConstraintNetwork(bn.variables(), {}, {pos, neg}));
    const MpeSearchResult res = and_or_mpe(m, default_tree(m));
    CHECK(res.value == 0.0);
    CHECK_FALSE(res.assignment.has_value());
}

TEST_CASE("counting search equals brute-force solution counts") {
    for (std::uint64_t seed = 521; seed < 531; ++seed) {
        MixedNetwork m = random_instance(seed, 8, 4, 0.4);
        if (seed % 2 == 0) m = with_random_clauses(m, seed + 3, 2);
        const LegalTree tree = default_tree(m);
        for (Propagation prop : {Propagation::none, Propagation::relational}) {
            SearchOptions opts;
            opts.propagation = prop;
            opts.cache_i_bound = 4;
            CHECK(and_or_count(m, tree, opts).value ==
                  static_cast<double>(brute_force_count(m)));
        }
    }
}

TEST_CASE("an illegal tree is rejected up front") {
    // B and C share an edge in the mixed moral graph of the fig-6
    // network; making them siblings under A breaks the back-arc property
    const MixedNetwork m = fig6_network();
    LegalTree bogus;
    bogus.parent = {-1, 0, 0, 2};
    bogus.children = {{1, 2}, {}, {3}, {}};
    bogus.roots = {0};
    bogus.depth_of = {0, 1, 1, 2};
    bogus.depth = 2;
    bogus.contexts.assign(4, {});
    CHECK_THROWS_AS(and_or_cpe(m, bogus), std::invalid_argument);
}

TEST_CASE("i-bound zero never caches even empty contexts") {
    const MixedNetwork m = random_instance(551, 8, 2, 0.8);
    SearchOptions opts;
    opts.cache_i_bound = 0;
    const SearchResult res = and_or_cpe(m, default_tree(m), opts);
    CHECK(res.stats.cache_entries == 0);
    CHECK(res.stats.cache_hits == 0);
}
