#include "mixnet/elimination.hpp"

#include <algorithm>

#include "mixnet/search.hpp"

namespace mixnet {

namespace {

std::uint64_t table_size(const std::vector<int>& scope, const MixedNetwork& m) {
    std::uint64_t size = 1;
    for (int v : scope) size *= static_cast<std::uint64_t>(m.cardinality(v));
    return size;
}

// Iterates all value tuples of `scope` in row-major order (last variable
// fastest) and hands each one to fn together with its running index.
template <typename Fn>
void for_each_tuple(const std::vector<int>& scope, const MixedNetwork& m, Fn&& fn) {
    std::vector<int> tuple(scope.size(), 0);
    const std::uint64_t total = table_size(scope, m);
    for (std::uint64_t idx = 0; idx < total; ++idx) {
        fn(idx, tuple);
        for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i) {
            if (++tuple[i] < m.cardinality(scope[i])) break;
            tuple[i] = 0;
        }
    }
}

// Multiplies factors over the union scope and sums out `var`.
Factor eliminate(const std::vector<Factor>& factors, int var, const MixedNetwork& m,
                 const EliminationOptions& opts) {
    std::vector<int> joint;
    for (const auto& f : factors)
        for (int v : f.scope)
            if (std::find(joint.begin(), joint.end(), v) == joint.end()) joint.push_back(v);
    std::sort(joint.begin(), joint.end());

    std::vector<int> result_scope;
    for (int v : joint)
        if (v != var) result_scope.push_back(v);

    const std::uint64_t joint_size = table_size(joint, m);
    if (joint_size > opts.max_table_entries)
        throw WidthLimitError(static_cast<int>(joint.size()), joint_size,
                              opts.max_table_entries);

    // positions of each factor's scope inside the joint tuple
    std::vector<std::vector<int>> slots(factors.size());
    std::vector<int> joint_pos(m.num_vars(), -1);
    for (std::size_t i = 0; i < joint.size(); ++i) joint_pos[joint[i]] = static_cast<int>(i);
    for (std::size_t f = 0; f < factors.size(); ++f)
        for (int v : factors[f].scope) slots[f].push_back(joint_pos[v]);

    Factor out;
    out.scope = result_scope;
    out.table.assign(table_size(result_scope, m), 0.0);
    std::vector<int> out_pos;
    for (int v : result_scope) out_pos.push_back(joint_pos[v]);

    for_each_tuple(joint, m, [&](std::uint64_t, const std::vector<int>& tuple) {
        double product = 1.0;
        for (std::size_t f = 0; f < factors.size(); ++f) {
            const auto& fac = factors[f];
            std::uint64_t idx = 0;
            for (std::size_t i = 0; i < fac.scope.size(); ++i)
                idx = idx * static_cast<std::uint64_t>(m.cardinality(fac.scope[i])) +
                      static_cast<std::uint64_t>(tuple[slots[f][i]]);
            product *= fac.table[idx];
        }
        std::uint64_t out_idx = 0;
        for (std::size_t i = 0; i < result_scope.size(); ++i)
            out_idx = out_idx * static_cast<std::uint64_t>(m.cardinality(result_scope[i])) +
                      static_cast<std::uint64_t>(tuple[out_pos[i]]);
        out.table[out_idx] += product;
    });
    return out;
}

// CPTs as factors over (parents..., child) plus one 0/1 indicator factor
// per constraint: the auxiliary network with its indicator children
// already clamped to the satisfied slice.
std::vector<Factor> build_factors(const MixedNetwork& m) {
    std::vector<Factor> factors;
    for (int i = 0; i < m.num_vars(); ++i) {
        const Cpt& c = m.belief().cpt(i);
        Factor f;
        f.scope = c.parents;
        f.scope.push_back(i);
        f.table = c.table;
        factors.push_back(std::move(f));
    }
    auto add_indicator = [&](const TableConstraint& t) {
        Factor f;
        f.scope = t.scope();
        f.table.assign(table_size(f.scope, m), 0.0);
        for_each_tuple(f.scope, m, [&](std::uint64_t idx, const std::vector<int>& tuple) {
            if (t.contains(tuple)) f.table[idx] = 1.0;
        });
        factors.push_back(std::move(f));
    };
    for (const auto& t : m.constraints().tables()) add_indicator(t);
    for (const auto& c : m.constraints().clauses()) {
        std::vector<int> scope;
        for (const auto& lit : c.literals) scope.push_back(lit.var);
        add_indicator(TableConstraint(scope, clause_to_tuples(c, m.variables()),
                                      m.variables()));
    }
    return factors;
}

}  // namespace

double bucket_elimination_cpe(const MixedNetwork& m, const Ordering& d,
                              const EliminationOptions& opts) {
    const int n = m.num_vars();
    if (d.size() != n || !d.is_valid())
        throw std::invalid_argument("bucket_elimination_cpe: bad ordering");

    std::vector<Factor> factors = build_factors(m);
    const std::vector<int> pos = d.positions();

    // bucket of a factor: its latest scope variable in d
    std::vector<std::vector<Factor>> buckets(n);
    double constant = 1.0;
    auto place = [&](Factor&& f) {
        if (f.scope.empty()) {
            constant *= f.table[0];
            return;
        }
        int latest = f.scope[0];
        for (int v : f.scope)
            if (pos[v] > pos[latest]) latest = v;
        buckets[pos[latest]].push_back(std::move(f));
    };
    for (auto& f : factors) place(std::move(f));

    for (int i = n - 1; i >= 0; --i) {
        if (buckets[i].empty()) continue;
        Factor msg = eliminate(buckets[i], d.at(i), m, opts);
        buckets[i].clear();
        place(std::move(msg));
    }
    return constant;
}

std::vector<double> belief_given_cnf(const MixedNetwork& m, int x, BeliefBackend backend,
                                     const EliminationOptions& opts) {
    if (x < 0 || x >= m.num_vars())
        throw std::invalid_argument("belief_given_cnf: variable out of range");

    auto cpe_with_value = [&](int value) {
        // conjoin the query (x = value) as a unary constraint
        std::vector<TableConstraint> tables = m.constraints().tables();
        tables.emplace_back(std::vector<int>{x}, std::vector<std::vector<int>>{{value}},
                            m.variables());
        MixedNetwork conditioned(
            m.belief(),
            ConstraintNetwork(m.variables(), std::move(tables), m.constraints().clauses()));
        const UndirectedGraph g = mixed_moral_graph(conditioned);
        const Ordering d = min_fill_ordering(g);
        if (backend == BeliefBackend::elimination)
            return bucket_elimination_cpe(conditioned, d, opts);
        return and_or_cpe(conditioned, build_legal_tree(g, d)).value;
    };

    std::vector<double> numerators(m.cardinality(x));
    double total = 0.0;
    for (int v = 0; v < m.cardinality(x); ++v) {
        numerators[v] = cpe_with_value(v);
        total += numerators[v];
    }
    if (!(total > 0.0)) throw InconsistentEvidenceError();
    for (double& p : numerators) p /= total;
    return numerators;
}

}  // namespace mixnet
