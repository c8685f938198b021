#include "mixnet/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mixnet {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

void check_variables(const std::vector<Variable>& vars) {
    for (int i = 0; i < static_cast<int>(vars.size()); ++i) {
        if (vars[i].index != i)
            fail("variable indices must be dense 0..n-1");
        if (vars[i].cardinality < 1)
            fail("variable cardinality must be >= 1");
    }
}

}  // namespace

void Assignment::assign(int var, int val) {
    if (var < 0 || var >= size())
        fail("assign: variable out of range");
    if (values_[var] >= 0)
        fail("assign: variable already assigned");
    if (val < 0)
        fail("assign: negative value");
    values_[var] = val;
    order_.push_back(var);
}

void Assignment::unassign(int var) {
    if (order_.empty() || order_.back() != var)
        fail("unassign: only the most recent assignment can be retracted");
    values_[var] = -1;
    order_.pop_back();
}

BeliefNetwork::BeliefNetwork(std::vector<Variable> vars, std::vector<Cpt> cpts)
    : vars_(std::move(vars)) {
    check_variables(vars_);
    const int n = num_vars();
    if (static_cast<int>(cpts.size()) != n)
        fail("belief network needs exactly one CPT per variable");

    cpts_.resize(n);
    std::vector<bool> seen(n, false);
    for (auto& c : cpts) {
        if (c.child < 0 || c.child >= n)
            fail("CPT child out of range");
        if (seen[c.child])
            fail("duplicate CPT child");
        seen[c.child] = true;
        cpts_[c.child] = std::move(c);
    }

    for (int i = 0; i < n; ++i) {
        const Cpt& c = cpts_[i];
        std::size_t rows = 1;
        std::vector<bool> in_scope(n, false);
        in_scope[i] = true;
        for (int p : c.parents) {
            if (p < 0 || p >= n)
                fail("CPT parent out of range");
            if (in_scope[p])
                fail("duplicate variable in CPT scope");
            in_scope[p] = true;
            rows *= static_cast<std::size_t>(vars_[p].cardinality);
        }
        const std::size_t k = static_cast<std::size_t>(vars_[i].cardinality);
        if (c.table.size() != rows * k)
            fail("CPT table size does not match scope cardinalities");
        for (double v : c.table)
            if (!(v >= 0.0 && v <= 1.0 + 1e-12) || !std::isfinite(v))
                fail("CPT entry outside [0,1]");
        for (std::size_t r = 0; r < rows; ++r) {
            double s = 0.0;
            for (std::size_t v = 0; v < k; ++v) s += c.table[r * k + v];
            if (std::fabs(s - 1.0) > 1e-9)
                fail("CPT row does not sum to 1");
        }
    }

    // acyclicity
    if (static_cast<int>(topological_order().size()) != n)
        fail("belief network graph is cyclic");
}

std::vector<int> BeliefNetwork::topological_order() const {
    const int n = num_vars();
    std::vector<int> indegree(n, 0);
    std::vector<std::vector<int>> children(n);
    for (int i = 0; i < n; ++i) {
        for (int p : cpts_[i].parents) {
            children[p].push_back(i);
            ++indegree[i];
        }
    }
    std::vector<int> order;
    order.reserve(n);
    std::vector<int> ready;
    for (int i = n - 1; i >= 0; --i)
        if (indegree[i] == 0) ready.push_back(i);
    while (!ready.empty()) {
        int v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (int c : children[v])
            if (--indegree[c] == 0) ready.push_back(c);
    }
    return order;  // shorter than n iff cyclic
}

double BeliefNetwork::cpt_entry(int var, const Assignment& x) const {
    const Cpt& c = cpts_[var];
    std::size_t row = 0;
    for (int p : c.parents) {
        if (!x.is_assigned(p))
            fail("cpt_entry: parent not assigned");
        row = row * static_cast<std::size_t>(vars_[p].cardinality) +
              static_cast<std::size_t>(x.value(p));
    }
    if (!x.is_assigned(var))
        fail("cpt_entry: child not assigned");
    return c.table[row * static_cast<std::size_t>(vars_[var].cardinality) +
                   static_cast<std::size_t>(x.value(var))];
}

TableConstraint::TableConstraint(std::vector<int> scope,
                                 std::vector<std::vector<int>> allowed,
                                 const std::vector<Variable>& vars)
    : scope_(std::move(scope)), allowed_(std::move(allowed)) {
    const int n = static_cast<int>(vars.size());
    std::vector<bool> seen(n, false);
    for (int v : scope_) {
        if (v < 0 || v >= n)
            fail("constraint scope variable out of range");
        if (seen[v])
            fail("duplicate variable in constraint scope");
        seen[v] = true;
    }
    radix_.resize(scope_.size());
    std::uint64_t prod = 1;
    for (int i = static_cast<int>(scope_.size()) - 1; i >= 0; --i) {
        radix_[i] = prod;
        prod *= static_cast<std::uint64_t>(vars[scope_[i]].cardinality);
    }
    encoded_.reserve(allowed_.size());
    for (const auto& t : allowed_) {
        if (t.size() != scope_.size())
            fail("constraint tuple arity does not match scope");
        std::uint64_t code = 0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            if (t[i] < 0 || t[i] >= vars[scope_[i]].cardinality)
                fail("constraint tuple value outside variable domain");
            code += static_cast<std::uint64_t>(t[i]) * radix_[i];
        }
        encoded_.push_back(code);
    }
    std::sort(encoded_.begin(), encoded_.end());
    if (std::adjacent_find(encoded_.begin(), encoded_.end()) != encoded_.end())
        fail("duplicate tuple in constraint");
}

bool TableConstraint::contains(const std::vector<int>& tuple) const {
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i)
        code += static_cast<std::uint64_t>(tuple[i]) * radix_[i];
    return std::binary_search(encoded_.begin(), encoded_.end(), code);
}

bool TableConstraint::projection_nonempty(const Assignment& x) const {
    for (const auto& t : allowed_) {
        bool agrees = true;
        for (std::size_t i = 0; i < scope_.size(); ++i) {
            const int v = scope_[i];
            if (x.is_assigned(v) && x.value(v) != t[i]) {
                agrees = false;
                break;
            }
        }
        if (agrees) return true;
    }
    return false;
}

ConstraintNetwork::ConstraintNetwork(std::vector<Variable> vars,
                                     std::vector<TableConstraint> tables,
                                     std::vector<Clause> clauses)
    : vars_(std::move(vars)), tables_(std::move(tables)), clauses_(std::move(clauses)) {
    check_variables(vars_);
    const int n = num_vars();
    for (const auto& t : tables_)
        for (int v : t.scope())
            if (v < 0 || v >= n)
                fail("constraint scope references missing variable");
    for (const auto& c : clauses_) {
        std::vector<bool> seen(n, false);
        for (const auto& lit : c.literals) {
            if (lit.var < 0 || lit.var >= n)
                fail("clause literal references missing variable");
            if (vars_[lit.var].cardinality != 2)
                fail("clause over non-binary variable");
            if (seen[lit.var])
                fail("duplicate variable in clause");
            seen[lit.var] = true;
        }
    }
}

MixedNetwork::MixedNetwork(BeliefNetwork belief, ConstraintNetwork constraints)
    : belief_(std::move(belief)), constraints_(std::move(constraints)) {
    if (belief_.num_vars() != constraints_.num_vars())
        fail("mixed network parts disagree on variable count");
    for (int i = 0; i < belief_.num_vars(); ++i)
        if (belief_.cardinality(i) != constraints_.cardinality(i))
            fail("mixed network parts disagree on a variable cardinality");
}

double joint_probability(const BeliefNetwork& net, const Assignment& x) {
    if (!x.is_full())
        fail("joint_probability requires a full assignment");
    double p = 1.0;
    for (int i = 0; i < net.num_vars(); ++i)
        p *= net.cpt_entry(i, x);
    return p;
}

namespace {

bool clause_satisfied(const Clause& c, const Assignment& x) {
    for (const auto& lit : c.literals)
        if (x.value(lit.var) == (lit.positive ? 1 : 0)) return true;
    return false;
}

}  // namespace

bool is_solution(const ConstraintNetwork& cn, const Assignment& x) {
    if (!x.is_full())
        fail("is_solution requires a full assignment");
    std::vector<int> tuple;
    for (const auto& t : cn.tables()) {
        tuple.clear();
        for (int v : t.scope()) tuple.push_back(x.value(v));
        if (!t.contains(tuple)) return false;
    }
    for (const auto& c : cn.clauses())
        if (!clause_satisfied(c, x)) return false;
    return true;
}

bool violates_partial(const ConstraintNetwork& cn, const Assignment& p) {
    std::vector<int> tuple;
    for (const auto& t : cn.tables()) {
        bool full = true;
        for (int v : t.scope())
            if (!p.is_assigned(v)) {
                full = false;
                break;
            }
        if (!full) continue;
        tuple.clear();
        for (int v : t.scope()) tuple.push_back(p.value(v));
        if (!t.contains(tuple)) return true;
    }
    for (const auto& c : cn.clauses()) {
        bool full = true;
        bool satisfied = false;
        for (const auto& lit : c.literals) {
            if (!p.is_assigned(lit.var)) {
                full = false;
                break;
            }
            if (p.value(lit.var) == (lit.positive ? 1 : 0)) {
                satisfied = true;
                break;
            }
        }
        if (full && !satisfied) return true;
    }
    return false;
}

std::vector<std::vector<int>> clause_to_tuples(const Clause& clause,
                                               const std::vector<Variable>& vars) {
    const int arity = static_cast<int>(clause.literals.size());
    std::size_t total = 1;
    for (const auto& lit : clause.literals)
        total *= static_cast<std::size_t>(vars[lit.var].cardinality);
    std::vector<std::vector<int>> tuples;
    std::vector<int> t(arity, 0);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rem = idx;
        for (int i = arity - 1; i >= 0; --i) {
            const int k = vars[clause.literals[i].var].cardinality;
            t[i] = static_cast<int>(rem % k);
            rem /= k;
        }
        bool satisfied = false;
        for (int i = 0; i < arity; ++i)
            if (t[i] == (clause.literals[i].positive ? 1 : 0)) {
                satisfied = true;
                break;
            }
        if (satisfied) tuples.push_back(t);
    }
    return tuples;
}

BeliefNetwork build_auxiliary(const MixedNetwork& m) {
    const auto& bn = m.belief();
    const int n = bn.num_vars();
    std::vector<Variable> vars = bn.variables();
    std::vector<Cpt> cpts = bn.cpts();

    auto add_indicator = [&](const std::vector<int>& scope,
                             const std::vector<std::vector<int>>& allowed) {
        const int aux = static_cast<int>(vars.size());
        vars.push_back({aux, "A" + std::to_string(aux - n), 2});
        TableConstraint table(scope, allowed, bn.variables());
        std::size_t rows = 1;
        for (int v : scope) rows *= static_cast<std::size_t>(bn.cardinality(v));
        Cpt cpt;
        cpt.child = aux;
        cpt.parents = scope;
        cpt.table.assign(rows * 2, 0.0);
        std::vector<int> tuple(scope.size(), 0);
        for (std::size_t r = 0; r < rows; ++r) {
            std::size_t rem = r;
            for (int i = static_cast<int>(scope.size()) - 1; i >= 0; --i) {
                const int k = bn.cardinality(scope[i]);
                tuple[i] = static_cast<int>(rem % k);
                rem /= k;
            }
            const bool in = table.contains(tuple);
            cpt.table[r * 2 + 0] = in ? 0.0 : 1.0;
            cpt.table[r * 2 + 1] = in ? 1.0 : 0.0;
        }
        cpts.push_back(std::move(cpt));
    };

    for (const auto& t : m.constraints().tables())
        add_indicator(t.scope(), t.allowed());
    for (const auto& c : m.constraints().clauses()) {
        std::vector<int> scope;
        for (const auto& lit : c.literals) scope.push_back(lit.var);
        add_indicator(scope, clause_to_tuples(c, bn.variables()));
    }
    return BeliefNetwork(std::move(vars), std::move(cpts));
}

double mixed_probability(const MixedNetwork& m, const Assignment& x, double z) {
    if (!(z > 0.0))
        throw std::domain_error("mixed network is inconsistent: P_M undefined");
    if (!is_solution(m.constraints(), x)) return 0.0;
    return joint_probability(m.belief(), x) / z;
}

}  // namespace mixnet
