#ifndef MIXNET_IO_HPP
#define MIXNET_IO_HPP

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "mixnet/graphs.hpp"
#include "mixnet/model.hpp"
#include "mixnet/search.hpp"

namespace mixnet {

/// Structured parse failure with the 1-based position of the offending
/// token. Every malformed input surfaces as this type.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what + " (line " + std::to_string(line) + ", column " +
                             std::to_string(column) + ")"),
          line(line),
          column(column) {}
    int line;
    int column;
};

/// UAI Bayes-network file. Scopes list parents first and the child
/// last; tables are row-major with the child running fastest. Rows may
/// deviate from unit sum by at most 1e-6 and are renormalized when they
/// deviate by more than 1e-9.
BeliefNetwork parse_uai(const std::string& text);

/// Canonical text for parse_uai; shortest round-tripping numerals, so
/// parse and serialize are mutually inverse on canonical files.
std::string serialize_uai(const BeliefNetwork& net);

struct DimacsCnf {
    int num_vars = 0;
    std::vector<Clause> clauses;
};

/// DIMACS CNF: `p cnf V C` header, 1-based signed literals, clauses
/// terminated by 0, comment lines starting with 'c'.
DimacsCnf parse_dimacs(const std::string& text);

std::string serialize_dimacs(const DimacsCnf& cnf);

/// Table constraints before domain validation.
struct RawTable {
    std::vector<int> scope;
    std::vector<std::vector<int>> tuples;
};

/// Constraint file: `CONSTRAINTS c` header, then per constraint the
/// scope size, the scope variables, the tuple count and the tuples.
/// Passing the variable list enables domain checks with positions.
std::vector<RawTable> parse_constraints(const std::string& text,
                                        const std::vector<Variable>* vars = nullptr);

std::string serialize_constraints(const std::vector<TableConstraint>& tables);

/// UAI evidence file: a count followed by variable/value pairs.
std::vector<std::pair<int, int>> parse_evidence(const std::string& text);

/// Input files of one query. Empty paths are simply absent parts.
struct ProblemBundle {
    std::string belief_path;
    std::string table_constraints_path;
    std::string cnf_path;
    std::vector<std::pair<int, int>> evidence;  // clamped as unary constraints
};

MixedNetwork load_bundle(const ProblemBundle& bundle);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// DOT renderings. Search exports replay a trace: OR nodes are
/// ellipses, AND nodes boxes, pruned values grey boxes, cache hits
/// dashed diamonds. The graph form merges OR nodes by context so merged
/// nodes appear once with in-degree above one (needs caching enabled).
std::string export_dot(const UndirectedGraph& g, const std::vector<Variable>& vars);
std::string export_dot(const LegalTree& t, const std::vector<Variable>& vars);
std::string export_dot_search_tree(const std::vector<TraceRecord>& trace,
                                   const std::vector<Variable>& vars);
std::string export_dot_search_graph(const std::vector<TraceRecord>& trace,
                                    const std::vector<Variable>& vars);

}  // namespace mixnet

#endif
