#ifndef MIXNET_GRAPHS_HPP
#define MIXNET_GRAPHS_HPP

#include <utility>
#include <vector>

#include "mixnet/model.hpp"

namespace mixnet {

/// Simple undirected graph with sorted adjacency lists. No self-loops.
class UndirectedGraph {
public:
    UndirectedGraph() = default;
    explicit UndirectedGraph(int n) : adj_(n) {}

    int num_nodes() const { return static_cast<int>(adj_.size()); }
    void add_edge(int u, int v);
    bool has_edge(int u, int v) const;
    const std::vector<int>& neighbors(int v) const { return adj_[v]; }
    int num_edges() const;
    int degree(int v) const { return static_cast<int>(adj_[v].size()); }

    bool operator==(const UndirectedGraph& other) const { return adj_ == other.adj_; }

private:
    std::vector<std::vector<int>> adj_;
};

/// Directed belief arcs plus undirected constraint edges over one node set.
class MixedGraph {
public:
    MixedGraph() = default;
    MixedGraph(int n, std::vector<std::vector<int>> parents, UndirectedGraph constraint_edges);

    /// Structure of a mixed network: CPT arcs + constraint primal edges.
    static MixedGraph from_network(const MixedNetwork& m);

    int num_nodes() const { return static_cast<int>(parents_.size()); }
    const std::vector<int>& parents(int v) const { return parents_[v]; }
    const UndirectedGraph& constraint_edges() const { return constraint_; }

private:
    std::vector<std::vector<int>> parents_;
    UndirectedGraph constraint_;
};

/// A permutation of 0..n-1. The induced-width convention processes it
/// from last position to first, so position 0 is eliminated last.
struct Ordering {
    std::vector<int> perm;

    int size() const { return static_cast<int>(perm.size()); }
    int at(int pos) const { return perm[pos]; }
    /// Positions indexed by node.
    std::vector<int> positions() const;
    bool is_valid() const;
};

/// Rooted spanning structure in which every graph edge connects a node
/// to one of its tree ancestors. Disconnected graphs become a forest
/// (one root per component, conceptually joined by a virtual root that
/// carries no edges and no context).
struct LegalTree {
    std::vector<int> parent;                 // -1 for component roots
    std::vector<std::vector<int>> children;  // exploration order
    std::vector<int> roots;
    std::vector<int> depth_of;               // root depth 0
    int depth = 0;                           // max node depth
    std::vector<std::vector<int>> contexts;  // ancestor-ordered, root first
    int width = 0;                           // max context size

    int num_nodes() const { return static_cast<int>(parent.size()); }
    /// Preorder over all components, children in stored order.
    std::vector<int> dfs_order() const;
    bool is_ancestor(int anc, int node) const;
};

/// Moral graph: arcs undirected plus a clique over each CPT scope.
UndirectedGraph moral_graph(const BeliefNetwork& net);

/// Union of the belief moral graph and the constraint primal graph.
UndirectedGraph mixed_moral_graph(const MixedNetwork& m);

/// Constraint primal graph alone: a clique per constraint scope.
UndirectedGraph constraint_graph(const ConstraintNetwork& cn);

/// Separation test graph for the query set y: the moralized belief
/// subgraph over the belief-ancestral closure of y together with every
/// constraint scope, unioned with the full constraint graph. Nodes
/// outside the closure are isolated. Conditioning on the constraint
/// part keeps its scopes relevant to every query, which is why the
/// closure seeds include them.
UndirectedGraph ancestral_mixed_graph(const MixedGraph& g, const std::vector<int>& y);

/// True iff every path between w and y in the ancestral mixed graph of
/// w ∪ z ∪ y is intercepted by z (deletion plus reachability).
bool dm_separated(const MixedGraph& g, const std::vector<int>& w,
                  const std::vector<int>& z, const std::vector<int>& y);

struct InducedResult {
    UndirectedGraph graph;
    int width = 0;
};

/// Induced graph along d: processing nodes last to first, connect each
/// node's earlier neighbors. Width is the maximum earlier-neighbor count.
InducedResult induced_graph_and_width(const UndirectedGraph& g, const Ordering& d);

/// Greedy min-fill elimination ordering, ties broken by lowest node
/// index, returned with the first-eliminated node in the last position
/// so induced_graph_and_width consumes it directly.
Ordering min_fill_ordering(const UndirectedGraph& g);

/// Pseudo tree: DFS of the induced graph along d, rooted at d's first
/// node, children explored in d order. Contexts are filled in.
LegalTree build_legal_tree(const UndirectedGraph& g, const Ordering& d);

/// Chain tree following d (the OR search space). Any chain is legal.
LegalTree make_chain_tree(const UndirectedGraph& g, const Ordering& d);

/// Tree from an explicit parent array (-1 for roots), children in
/// ascending index order. Must be legal for g; contexts are filled in.
LegalTree make_tree_from_parents(const UndirectedGraph& g, const std::vector<int>& parent);

/// Checks the back-arc property of t with respect to g.
bool verify_legal(const UndirectedGraph& g, const LegalTree& t);

/// Context of each variable: its tree ancestors adjacent in g to the
/// variable itself or to one of its tree descendants, listed in
/// root-to-leaf order. Keys of this size make subtree values cacheable.
std::vector<std::vector<int>> compute_contexts(const UndirectedGraph& g, const LegalTree& t);

}  // namespace mixnet

#endif
