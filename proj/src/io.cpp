#include "mixnet/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace mixnet {

namespace {

// Whitespace-separated token stream that remembers token positions.
class Tokenizer {
public:
    explicit Tokenizer(const std::string& text) : text_(text) {}

    bool peek_token(std::string& out) {
        skip_space();
        if (pos_ >= text_.size()) return false;
        std::size_t end = pos_;
        while (end < text_.size() && !is_space(text_[end])) ++end;
        out = text_.substr(pos_, end - pos_);
        return true;
    }

    std::string next_token(const char* what) {
        skip_space();
        token_line_ = line_;
        token_col_ = col_;
        if (pos_ >= text_.size())
            throw ParseError(std::string("unexpected end of input, expected ") + what,
                             line_, col_);
        std::size_t end = pos_;
        while (end < text_.size() && !is_space(text_[end])) ++end;
        std::string token = text_.substr(pos_, end - pos_);
        advance_to(end);
        return token;
    }

    long long next_int(const char* what, long long min, long long max) {
        const std::string token = next_token(what);
        long long value = 0;
        const auto [ptr, ec] =
            std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size())
            throw ParseError(std::string("expected integer for ") + what + ", got '" +
                             token + "'", token_line_, token_col_);
        if (value < min || value > max)
            throw ParseError(std::string(what) + " value " + std::to_string(value) +
                             " outside [" + std::to_string(min) + ", " +
                             std::to_string(max) + "]", token_line_, token_col_);
        return value;
    }

    double next_double(const char* what) {
        const std::string token = next_token(what);
        double value = 0.0;
        const auto [ptr, ec] =
            std::from_chars(token.data(), token.data() + token.size(), value);
        if (ec != std::errc{} || ptr != token.data() + token.size())
            throw ParseError(std::string("expected number for ") + what + ", got '" +
                             token + "'", token_line_, token_col_);
        return value;
    }

    void expect_end(const char* format) {
        skip_space();
        if (pos_ < text_.size())
            throw ParseError(std::string("trailing content after ") + format, line_, col_);
    }

    int token_line() const { return token_line_; }
    int token_column() const { return token_col_; }
    int line() const { return line_; }
    int column() const { return col_; }

private:
    static bool is_space(char c) {
        return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\v' || c == '\f';
    }

    void skip_space() {
        while (pos_ < text_.size() && is_space(text_[pos_])) step();
    }

    void advance_to(std::size_t end) {
        while (pos_ < end) step();
    }

    void step() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    int token_line_ = 1;
    int token_col_ = 1;
};

std::string format_double(double v) {
    char buffer[64];
    const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), v);
    (void)ec;
    return std::string(buffer, ptr);
}

std::string format_short(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6g", v);
    return buffer;
}

constexpr long long kMaxVars = 1 << 20;
constexpr long long kMaxTableEntries = 1 << 26;

}  // namespace

BeliefNetwork parse_uai(const std::string& text) {
    Tokenizer tok(text);
    const std::string header = tok.next_token("network type header");
    if (header != "BAYES")
        throw ParseError("expected BAYES header, got '" + header + "'",
                         tok.token_line(), tok.token_column());

    const int n = static_cast<int>(tok.next_int("variable count", 1, kMaxVars));
    std::vector<Variable> vars(n);
    for (int i = 0; i < n; ++i)
        vars[i] = {i, "X" + std::to_string(i),
                   static_cast<int>(tok.next_int("variable cardinality", 1, kMaxVars))};

    const int num_functions =
        static_cast<int>(tok.next_int("function count", 0, kMaxVars));
    if (num_functions != n)
        throw ParseError("Bayes network needs exactly one function per variable, got " +
                         std::to_string(num_functions) + " for " + std::to_string(n) +
                         " variables", tok.token_line(), tok.token_column());

    std::vector<Cpt> cpts(n);
    std::vector<bool> child_seen(n, false);
    std::vector<int> function_child(n);
    for (int f = 0; f < n; ++f) {
        const int arity = static_cast<int>(tok.next_int("scope size", 1, n));
        std::vector<int> scope(arity);
        std::vector<bool> in_scope(n, false);
        for (int i = 0; i < arity; ++i) {
            scope[i] = static_cast<int>(tok.next_int("scope variable", 0, n - 1));
            if (in_scope[scope[i]])
                throw ParseError("duplicate variable in scope",
                                 tok.token_line(), tok.token_column());
            in_scope[scope[i]] = true;
        }
        const int child = scope.back();
        if (child_seen[child])
            throw ParseError("variable " + std::to_string(child) +
                             " is the child of two functions",
                             tok.token_line(), tok.token_column());
        child_seen[child] = true;
        function_child[f] = child;
        cpts[child].child = child;
        cpts[child].parents.assign(scope.begin(), scope.end() - 1);
    }

    for (int f = 0; f < n; ++f) {
        const int child = function_child[f];
        Cpt& cpt = cpts[child];
        long long expected = vars[child].cardinality;
        for (int p : cpt.parents) {
            expected *= vars[p].cardinality;
            if (expected > kMaxTableEntries)
                throw ParseError("function table too large", tok.line(), tok.column());
        }
        const long long count = tok.next_int("table entry count", 0, kMaxTableEntries);
        if (count != expected)
            throw ParseError("table for child " + std::to_string(child) + " lists " +
                             std::to_string(count) + " entries, scope needs " +
                             std::to_string(expected),
                             tok.token_line(), tok.token_column());
        cpt.table.resize(static_cast<std::size_t>(count));
        for (auto& entry : cpt.table) {
            entry = tok.next_double("table entry");
            if (!(entry >= 0.0 && entry <= 1.0 + 1e-9) || !std::isfinite(entry))
                throw ParseError("probability outside [0, 1]",
                                 tok.token_line(), tok.token_column());
        }
        const int k = vars[child].cardinality;
        for (std::size_t row = 0; row * k < cpt.table.size(); ++row) {
            double sum = 0.0;
            for (int v = 0; v < k; ++v) sum += cpt.table[row * k + v];
            if (std::fabs(sum - 1.0) > 1e-6)
                throw ParseError("row " + std::to_string(row) + " of child " +
                                 std::to_string(child) + " sums to " +
                                 format_short(sum) + ", not 1",
                                 tok.token_line(), tok.token_column());
            if (std::fabs(sum - 1.0) > 1e-9)
                for (int v = 0; v < k; ++v) cpt.table[row * k + v] /= sum;
        }
    }
    tok.expect_end("UAI network");

    try {
        return BeliefNetwork(std::move(vars), std::move(cpts));
    } catch (const std::invalid_argument& e) {
        throw ParseError(e.what(), tok.line(), tok.column());
    }
}

std::string serialize_uai(const BeliefNetwork& net) {
    std::string out = "BAYES\n";
    out += std::to_string(net.num_vars());
    out += '\n';
    for (int i = 0; i < net.num_vars(); ++i) {
        if (i > 0) out += ' ';
        out += std::to_string(net.cardinality(i));
    }
    out += '\n';
    out += std::to_string(net.num_vars());
    out += '\n';
    for (int i = 0; i < net.num_vars(); ++i) {
        const Cpt& c = net.cpt(i);
        out += std::to_string(c.parents.size() + 1);
        for (int p : c.parents) {
            out += ' ';
            out += std::to_string(p);
        }
        out += ' ';
        out += std::to_string(i);
        out += '\n';
    }
    for (int i = 0; i < net.num_vars(); ++i) {
        const Cpt& c = net.cpt(i);
        out += '\n';
        out += std::to_string(c.table.size());
        out += '\n';
        const int k = net.cardinality(i);
        for (std::size_t e = 0; e < c.table.size(); ++e) {
            out += format_double(c.table[e]);
            out += (static_cast<int>(e % k) == k - 1) ? '\n' : ' ';
        }
    }
    return out;
}

DimacsCnf parse_dimacs(const std::string& text) {
    // blank out comment lines, keeping line numbers intact
    std::string filtered = text;
    std::size_t pos = 0;
    while (pos < filtered.size()) {
        std::size_t line_end = filtered.find('\n', pos);
        if (line_end == std::string::npos) line_end = filtered.size();
        std::size_t first = pos;
        while (first < line_end && (filtered[first] == ' ' || filtered[first] == '\t'))
            ++first;
        if (first < line_end && filtered[first] == 'c')
            for (std::size_t i = pos; i < line_end; ++i) filtered[i] = ' ';
        pos = line_end + 1;
    }

    Tokenizer tok(filtered);
    std::string token = tok.next_token("'p' header");
    if (token != "p")
        throw ParseError("expected 'p cnf' header, got '" + token + "'",
                         tok.token_line(), tok.token_column());
    token = tok.next_token("'cnf' format tag");
    if (token != "cnf")
        throw ParseError("expected format 'cnf', got '" + token + "'",
                         tok.token_line(), tok.token_column());

    DimacsCnf cnf;
    cnf.num_vars = static_cast<int>(tok.next_int("variable count", 0, kMaxVars));
    const int num_clauses = static_cast<int>(tok.next_int("clause count", 0, kMaxVars));
    cnf.clauses.reserve(num_clauses);
    for (int i = 0; i < num_clauses; ++i) {
        Clause clause;
        std::vector<bool> seen(cnf.num_vars, false);
        for (;;) {
            const long long lit = tok.next_int("literal or clause terminator",
                                               -kMaxVars, kMaxVars);
            if (lit == 0) break;
            const int var = static_cast<int>(lit > 0 ? lit : -lit) - 1;
            if (var >= cnf.num_vars)
                throw ParseError("literal " + std::to_string(lit) +
                                 " exceeds declared variable count",
                                 tok.token_line(), tok.token_column());
            if (seen[var])
                throw ParseError("duplicate variable in clause",
                                 tok.token_line(), tok.token_column());
            seen[var] = true;
            clause.literals.push_back({var, lit > 0});
        }
        cnf.clauses.push_back(std::move(clause));
    }
    tok.expect_end("CNF formula");
    return cnf;
}

std::string serialize_dimacs(const DimacsCnf& cnf) {
    std::string out = "p cnf " + std::to_string(cnf.num_vars) + ' ' +
                      std::to_string(cnf.clauses.size()) + '\n';
    for (const auto& clause : cnf.clauses) {
        for (const auto& lit : clause.literals) {
            out += std::to_string(lit.positive ? lit.var + 1 : -(lit.var + 1));
            out += ' ';
        }
        out += "0\n";
    }
    return out;
}

std::vector<RawTable> parse_constraints(const std::string& text,
                                        const std::vector<Variable>* vars) {
    Tokenizer tok(text);
    const std::string header = tok.next_token("CONSTRAINTS header");
    if (header != "CONSTRAINTS")
        throw ParseError("expected CONSTRAINTS header, got '" + header + "'",
                         tok.token_line(), tok.token_column());
    const int max_var = vars ? static_cast<int>(vars->size()) - 1
                             : static_cast<int>(kMaxVars);
    const int count = static_cast<int>(tok.next_int("constraint count", 0, kMaxVars));
    std::vector<RawTable> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        RawTable raw;
        const int arity = static_cast<int>(tok.next_int("scope size", 1, max_var + 1));
        std::set<int> seen;
        for (int j = 0; j < arity; ++j) {
            const int v = static_cast<int>(tok.next_int("scope variable", 0, max_var));
            if (!seen.insert(v).second)
                throw ParseError("duplicate variable in constraint scope",
                                 tok.token_line(), tok.token_column());
            raw.scope.push_back(v);
        }
        const int tuples = static_cast<int>(tok.next_int("tuple count", 0, kMaxTableEntries));
        std::set<std::vector<int>> unique;
        for (int t = 0; t < tuples; ++t) {
            std::vector<int> tuple(arity);
            for (int j = 0; j < arity; ++j) {
                const int limit = vars ? (*vars)[raw.scope[j]].cardinality - 1
                                       : static_cast<int>(kMaxVars);
                tuple[j] = static_cast<int>(tok.next_int("tuple value", 0, limit));
            }
            if (!unique.insert(tuple).second)
                throw ParseError("duplicate tuple in constraint " + std::to_string(i),
                                 tok.token_line(), tok.token_column());
            raw.tuples.push_back(std::move(tuple));
        }
        out.push_back(std::move(raw));
    }
    tok.expect_end("constraint list");
    return out;
}

std::string serialize_constraints(const std::vector<TableConstraint>& tables) {
    std::string out = "CONSTRAINTS " + std::to_string(tables.size()) + '\n';
    for (const auto& t : tables) {
        out += std::to_string(t.scope().size());
        for (int v : t.scope()) {
            out += ' ';
            out += std::to_string(v);
        }
        out += '\n';
        out += std::to_string(t.allowed().size());
        out += '\n';
        for (const auto& tuple : t.allowed()) {
            for (std::size_t j = 0; j < tuple.size(); ++j) {
                if (j > 0) out += ' ';
                out += std::to_string(tuple[j]);
            }
            out += '\n';
        }
    }
    return out;
}

std::vector<std::pair<int, int>> parse_evidence(const std::string& text) {
    Tokenizer tok(text);
    const int count = static_cast<int>(tok.next_int("evidence count", 0, kMaxVars));
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < count; ++i) {
        const int var = static_cast<int>(tok.next_int("evidence variable", 0, kMaxVars));
        const int val = static_cast<int>(tok.next_int("evidence value", 0, kMaxVars));
        out.emplace_back(var, val);
    }
    tok.expect_end("evidence list");
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    out << content;
}

MixedNetwork load_bundle(const ProblemBundle& bundle) {
    BeliefNetwork belief = parse_uai(read_file(bundle.belief_path));
    const std::vector<Variable>& vars = belief.variables();

    std::vector<TableConstraint> tables;
    if (!bundle.table_constraints_path.empty()) {
        for (const RawTable& raw :
             parse_constraints(read_file(bundle.table_constraints_path), &vars))
            tables.emplace_back(raw.scope, raw.tuples, vars);
    }
    std::vector<Clause> clauses;
    if (!bundle.cnf_path.empty()) {
        const DimacsCnf cnf = parse_dimacs(read_file(bundle.cnf_path));
        if (cnf.num_vars > belief.num_vars())
            throw std::runtime_error("CNF declares more variables than the network");
        for (const auto& clause : cnf.clauses)
            for (const auto& lit : clause.literals)
                if (belief.cardinality(lit.var) != 2)
                    throw std::runtime_error("CNF literal over non-binary variable X" +
                                             std::to_string(lit.var));
        clauses = cnf.clauses;
    }
    for (auto [var, val] : bundle.evidence) {
        if (var < 0 || var >= belief.num_vars())
            throw std::runtime_error("evidence variable out of range");
        if (val < 0 || val >= belief.cardinality(var))
            throw std::runtime_error("evidence value out of range");
        tables.emplace_back(std::vector<int>{var},
                            std::vector<std::vector<int>>{{val}}, vars);
    }
    return MixedNetwork(std::move(belief),
                        ConstraintNetwork(vars, std::move(tables), std::move(clauses)));
}

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    out += '"';
    return out;
}

}  // namespace

std::string export_dot(const UndirectedGraph& g, const std::vector<Variable>& vars) {
    std::string out = "graph mixnet {\n";
    for (int v = 0; v < g.num_nodes(); ++v)
        out += "  n" + std::to_string(v) + " [label=" + quote(vars[v].name) + "];\n";
    for (int v = 0; v < g.num_nodes(); ++v)
        for (int u : g.neighbors(v))
            if (u > v)
                out += "  n" + std::to_string(v) + " -- n" + std::to_string(u) + ";\n";
    out += "}\n";
    return out;
}

std::string export_dot(const LegalTree& t, const std::vector<Variable>& vars) {
    std::string out = "digraph legal_tree {\n";
    for (int v = 0; v < t.num_nodes(); ++v)
        out += "  n" + std::to_string(v) + " [label=" + quote(vars[v].name) + "];\n";
    for (int v = 0; v < t.num_nodes(); ++v)
        if (t.parent[v] >= 0)
            out += "  n" + std::to_string(t.parent[v]) + " -> n" + std::to_string(v) + ";\n";
    out += "}\n";
    return out;
}

namespace {

struct DotBuilder {
    std::map<std::string, std::string> node_attrs;  // id -> attrs
    std::vector<std::pair<std::string, std::string>> edges;
    std::set<std::pair<std::string, std::string>> edge_set;
    int counter = 0;

    std::string fresh(const std::string& prefix) { return prefix + std::to_string(counter++); }

    void edge(const std::string& from, const std::string& to) {
        if (edge_set.insert({from, to}).second) edges.emplace_back(from, to);
    }

    std::string render(const char* name) const {
        std::string out = std::string("digraph ") + name + " {\n";
        for (const auto& [id, attrs] : node_attrs)
            out += "  " + id + " [" + attrs + "];\n";
        for (const auto& [from, to] : edges)
            out += "  " + from + " -> " + to + ";\n";
        out += "}\n";
        return out;
    }
};

}  // namespace

std::string export_dot_search_tree(const std::vector<TraceRecord>& trace,
                                   const std::vector<Variable>& vars) {
    DotBuilder dot;
    std::vector<std::string> stack;
    for (const auto& rec : trace) {
        switch (rec.event) {
            case TraceRecord::Event::or_expand: {
                const std::string id = dot.fresh("o");
                dot.node_attrs[id] = "shape=ellipse, label=" + quote(vars[rec.variable].name);
                if (!stack.empty()) dot.edge(stack.back(), id);
                stack.push_back(id);
                break;
            }
            case TraceRecord::Event::and_expand: {
                const std::string id = dot.fresh("a");
                dot.node_attrs[id] =
                    "shape=box, label=" + quote(std::to_string(rec.value));
                if (!stack.empty()) dot.edge(stack.back(), id);
                stack.push_back(id);
                break;
            }
            case TraceRecord::Event::value_pruned: {
                const std::string id = dot.fresh("p");
                dot.node_attrs[id] = "shape=box, style=filled, fillcolor=gray, label=" +
                                     quote(std::to_string(rec.value));
                if (!stack.empty()) dot.edge(stack.back(), id);
                break;
            }
            case TraceRecord::Event::cache_hit: {
                const std::string id = dot.fresh("h");
                dot.node_attrs[id] = "shape=diamond, style=dashed, label=" +
                                     quote(vars[rec.variable].name + " g=" +
                                           format_short(rec.g));
                if (!stack.empty()) dot.edge(stack.back(), id);
                break;
            }
            case TraceRecord::Event::or_complete:
            case TraceRecord::Event::and_complete:
                if (!stack.empty()) {
                    dot.node_attrs[stack.back()] += ", xlabel=" + quote("g=" + format_short(rec.g));
                    stack.pop_back();
                }
                break;
        }
    }
    return dot.render("and_or_tree");
}

std::string export_dot_search_graph(const std::vector<TraceRecord>& trace,
                                    const std::vector<Variable>& vars) {
    DotBuilder dot;
    std::map<std::pair<int, std::uint64_t>, std::string> merged;  // (var, context key)
    std::vector<std::string> stack;

    auto or_id = [&](const TraceRecord& rec) {
        if (!rec.cacheable) return dot.fresh("o");
        auto [it, inserted] = merged.try_emplace({rec.variable, rec.cache_key});
        if (inserted) it->second = dot.fresh("m");
        return it->second;
    };

    for (const auto& rec : trace) {
        switch (rec.event) {
            case TraceRecord::Event::or_expand:
            case TraceRecord::Event::cache_hit: {
                const std::string id = or_id(rec);
                dot.node_attrs.try_emplace(
                    id, "shape=ellipse, label=" + quote(vars[rec.variable].name));
                if (!stack.empty()) dot.edge(stack.back(), id);
                if (rec.event == TraceRecord::Event::or_expand) stack.push_back(id);
                break;
            }
            case TraceRecord::Event::and_expand: {
                const std::string id = stack.back() + "v" + std::to_string(rec.value);
                dot.node_attrs.try_emplace(
                    id, "shape=box, label=" + quote(std::to_string(rec.value)));
                dot.edge(stack.back(), id);
                stack.push_back(id);
                break;
            }
            case TraceRecord::Event::value_pruned:
                break;
            case TraceRecord::Event::or_complete:
            case TraceRecord::Event::and_complete:
                if (!stack.empty()) stack.pop_back();
                break;
        }
    }
    return dot.render("and_or_graph");
}

}  // namespace mixnet
