#ifndef MIXNET_MODEL_HPP
#define MIXNET_MODEL_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace mixnet {

/// A discrete variable with domain {0, ..., cardinality-1}.
struct Variable {
    int index = 0;
    std::string name;
    int cardinality = 1;
};

/// Partial assignment over a fixed set of variables. Remembers the order
/// in which variables were assigned (the current search path).
class Assignment {
public:
    Assignment() = default;
    explicit Assignment(int num_vars) : values_(num_vars, -1) {}

    int size() const { return static_cast<int>(values_.size()); }
    int num_assigned() const { return static_cast<int>(order_.size()); }
    bool is_full() const { return num_assigned() == size(); }
    bool is_assigned(int var) const { return values_[var] >= 0; }
    int value(int var) const { return values_[var]; }

    void assign(int var, int val);
    void unassign(int var);

    /// Variables in assignment order, oldest first.
    const std::vector<int>& order() const { return order_; }
    /// Raw value array, -1 for unassigned.
    const std::vector<int>& values() const { return values_; }

private:
    std::vector<int> values_;
    std::vector<int> order_;
};

/// Conditional probability table P(child | parents). The flat table is
/// row-major over (parents..., child): the child value is the fastest
/// running index, the last parent the next fastest, matching the UAI
/// table convention.
struct Cpt {
    int child = 0;
    std::vector<int> parents;
    std::vector<double> table;
};

class BeliefNetwork {
public:
    BeliefNetwork() = default;
    /// Validates: one CPT per variable, acyclic parent structure, table
    /// sizes, entries in [0,1], rows normalized within 1e-9.
    BeliefNetwork(std::vector<Variable> vars, std::vector<Cpt> cpts);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int cardinality(int var) const { return vars_[var].cardinality; }
    const std::vector<Variable>& variables() const { return vars_; }
    const Variable& variable(int var) const { return vars_[var]; }
    /// CPT whose child is `var`.
    const Cpt& cpt(int var) const { return cpts_[var]; }
    const std::vector<Cpt>& cpts() const { return cpts_; }

    /// Table entry P(child = value of var in x | parents as in x).
    /// Every variable in the CPT scope must be assigned in x.
    double cpt_entry(int var, const Assignment& x) const;

    /// Topological order of the parent-to-child DAG (parents first).
    std::vector<int> topological_order() const;

private:
    std::vector<Variable> vars_;
    std::vector<Cpt> cpts_;  // cpts_[i].child == i
};

/// Relational constraint: an explicit list of allowed value tuples over
/// an ordered scope. The allowed set may be empty (unsatisfiable).
class TableConstraint {
public:
    TableConstraint() = default;
    TableConstraint(std::vector<int> scope, std::vector<std::vector<int>> allowed,
                    const std::vector<Variable>& vars);

    const std::vector<int>& scope() const { return scope_; }
    const std::vector<std::vector<int>>& allowed() const { return allowed_; }

    /// Membership of a full tuple over the scope.
    bool contains(const std::vector<int>& tuple) const;

    /// True iff some allowed tuple agrees with x on every scope variable
    /// that x assigns (the relational projection is non-empty).
    bool projection_nonempty(const Assignment& x) const;

private:
    std::vector<int> scope_;
    std::vector<std::vector<int>> allowed_;
    std::vector<std::uint64_t> encoded_;  // sorted mixed-radix codes
    std::vector<std::uint64_t> radix_;
};

/// CNF clause over binary variables.
struct Clause {
    struct Literal {
        int var = 0;
        bool positive = true;
    };
    std::vector<Literal> literals;
};

/// Constraint network: table constraints and/or clauses over a shared
/// variable set.
class ConstraintNetwork {
public:
    ConstraintNetwork() = default;
    ConstraintNetwork(std::vector<Variable> vars, std::vector<TableConstraint> tables,
                      std::vector<Clause> clauses);

    int num_vars() const { return static_cast<int>(vars_.size()); }
    int cardinality(int var) const { return vars_[var].cardinality; }
    const std::vector<Variable>& variables() const { return vars_; }
    const std::vector<TableConstraint>& tables() const { return tables_; }
    const std::vector<Clause>& clauses() const { return clauses_; }
    int num_constraints() const
    { return static_cast<int>(tables_.size() + clauses_.size()); }

private:
    std::vector<Variable> vars_;
    std::vector<TableConstraint> tables_;
    std::vector<Clause> clauses_;
};

/// Belief network plus constraint network over identical variables.
class MixedNetwork {
public:
    MixedNetwork() = default;
    MixedNetwork(BeliefNetwork belief, ConstraintNetwork constraints);

    const BeliefNetwork& belief() const { return belief_; }
    const ConstraintNetwork& constraints() const { return constraints_; }
    int num_vars() const { return belief_.num_vars(); }
    int cardinality(int var) const { return belief_.cardinality(var); }
    const std::vector<Variable>& variables() const { return belief_.variables(); }

private:
    BeliefNetwork belief_;
    ConstraintNetwork constraints_;
};

/// Product of all CPT entries for the full assignment x.
double joint_probability(const BeliefNetwork& net, const Assignment& x);

/// True iff x satisfies every table constraint and every clause.
bool is_solution(const ConstraintNetwork& cn, const Assignment& x);

/// True iff some constraint whose scope is fully assigned by p is
/// violated. False is not a promise of global satisfiability.
bool violates_partial(const ConstraintNetwork& cn, const Assignment& p);

/// Belief network over the original variables plus one binary indicator
/// child per constraint, whose CPT puts mass 1 on value 1 exactly for
/// allowed parent tuples. Clauses are expanded to table form.
BeliefNetwork build_auxiliary(const MixedNetwork& m);

/// P_M(x): joint_probability(x)/z when x is a solution, else 0. The
/// caller supplies z = P_B(solution); z <= 0 means the constraint part
/// is inconsistent and P_M is undefined.
double mixed_probability(const MixedNetwork& m, const Assignment& x, double z);

/// Allowed tuples of a clause over its variable list (all tuples except
/// the single falsifying one).
std::vector<std::vector<int>> clause_to_tuples(const Clause& clause,
                                               const std::vector<Variable>& vars);

}  // namespace mixnet

#endif
