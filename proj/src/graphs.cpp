#include "mixnet/graphs.hpp"

#include <algorithm>
#include <stdexcept>

namespace mixnet {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

void add_clique(UndirectedGraph& g, const std::vector<int>& scope) {
    for (std::size_t i = 0; i < scope.size(); ++i)
        for (std::size_t j = i + 1; j < scope.size(); ++j)
            g.add_edge(scope[i], scope[j]);
}

}  // namespace

void UndirectedGraph::add_edge(int u, int v) {
    if (u == v) return;
    auto insert = [](std::vector<int>& list, int x) {
        auto it = std::lower_bound(list.begin(), list.end(), x);
        if (it == list.end() || *it != x) list.insert(it, x);
    };
    insert(adj_[u], v);
    insert(adj_[v], u);
}

bool UndirectedGraph::has_edge(int u, int v) const {
    return std::binary_search(adj_[u].begin(), adj_[u].end(), v);
}

int UndirectedGraph::num_edges() const {
    int total = 0;
    for (const auto& list : adj_) total += static_cast<int>(list.size());
    return total / 2;
}

MixedGraph::MixedGraph(int n, std::vector<std::vector<int>> parents,
                       UndirectedGraph constraint_edges)
    : parents_(std::move(parents)), constraint_(std::move(constraint_edges)) {
    if (static_cast<int>(parents_.size()) != n || constraint_.num_nodes() != n)
        fail("mixed graph parts disagree on node count");
}

MixedGraph MixedGraph::from_network(const MixedNetwork& m) {
    const int n = m.num_vars();
    std::vector<std::vector<int>> parents(n);
    for (int i = 0; i < n; ++i) parents[i] = m.belief().cpt(i).parents;
    return MixedGraph(n, std::move(parents), constraint_graph(m.constraints()));
}

std::vector<int> Ordering::positions() const {
    std::vector<int> pos(perm.size(), -1);
    for (int i = 0; i < size(); ++i) pos[perm[i]] = i;
    return pos;
}

bool Ordering::is_valid() const {
    std::vector<bool> seen(perm.size(), false);
    for (int v : perm) {
        if (v < 0 || v >= size() || seen[v]) return false;
        seen[v] = true;
    }
    return true;
}

std::vector<int> LegalTree::dfs_order() const {
    std::vector<int> order;
    order.reserve(parent.size());
    std::vector<int> stack;
    for (auto it = roots.rbegin(); it != roots.rend(); ++it) stack.push_back(*it);
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        order.push_back(v);
        const auto& ch = children[v];
        for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
    }
    return order;
}

bool LegalTree::is_ancestor(int anc, int node) const {
    for (int v = parent[node]; v >= 0; v = parent[v])
        if (v == anc) return true;
    return false;
}

UndirectedGraph moral_graph(const BeliefNetwork& net) {
    UndirectedGraph g(net.num_vars());
    for (int i = 0; i < net.num_vars(); ++i) {
        std::vector<int> scope = net.cpt(i).parents;
        scope.push_back(i);
        add_clique(g, scope);
    }
    return g;
}

UndirectedGraph constraint_graph(const ConstraintNetwork& cn) {
    UndirectedGraph g(cn.num_vars());
    for (const auto& t : cn.tables()) add_clique(g, t.scope());
    for (const auto& c : cn.clauses()) {
        std::vector<int> scope;
        for (const auto& lit : c.literals) scope.push_back(lit.var);
        add_clique(g, scope);
    }
    return g;
}

UndirectedGraph mixed_moral_graph(const MixedNetwork& m) {
    UndirectedGraph g = moral_graph(m.belief());
    const UndirectedGraph cg = constraint_graph(m.constraints());
    for (int v = 0; v < cg.num_nodes(); ++v)
        for (int u : cg.neighbors(v))
            if (u > v) g.add_edge(v, u);
    return g;
}

UndirectedGraph ancestral_mixed_graph(const MixedGraph& g, const std::vector<int>& y) {
    if (y.empty()) fail("ancestral_mixed_graph: empty query set");
    const int n = g.num_nodes();

    // Belief-ancestral closure of the query variables and of every
    // constraint scope variable.
    std::vector<bool> keep(n, false);
    std::vector<int> stack;
    auto seed = [&](int v) {
        if (v < 0 || v >= n) fail("ancestral_mixed_graph: node out of range");
        if (!keep[v]) {
            keep[v] = true;
            stack.push_back(v);
        }
    };
    for (int v : y) seed(v);
    for (int v = 0; v < n; ++v)
        if (g.constraint_edges().degree(v) > 0) seed(v);
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int p : g.parents(v))
            if (!keep[p]) {
                keep[p] = true;
                stack.push_back(p);
            }
    }

    // Moralize the belief subgraph restricted to the closure.
    UndirectedGraph out(n);
    for (int v = 0; v < n; ++v) {
        if (!keep[v]) continue;
        std::vector<int> scope;
        for (int p : g.parents(v))
            if (keep[p]) scope.push_back(p);
        scope.push_back(v);
        add_clique(out, scope);
    }
    // Union with the full constraint graph.
    const auto& cg = g.constraint_edges();
    for (int v = 0; v < n; ++v)
        for (int u : cg.neighbors(v))
            if (u > v) out.add_edge(v, u);
    return out;
}

bool dm_separated(const MixedGraph& g, const std::vector<int>& w,
                  const std::vector<int>& z, const std::vector<int>& y) {
    const int n = g.num_nodes();
    std::vector<int> query;
    query.insert(query.end(), w.begin(), w.end());
    query.insert(query.end(), z.begin(), z.end());
    query.insert(query.end(), y.begin(), y.end());
    {
        std::vector<int> check = query;
        std::sort(check.begin(), check.end());
        if (std::adjacent_find(check.begin(), check.end()) != check.end())
            fail("dm_separated: W, Z, Y must be pairwise disjoint");
    }
    if (w.empty() || y.empty()) return true;

    const UndirectedGraph amg = ancestral_mixed_graph(g, query);
    std::vector<bool> blocked(n, false);
    for (int v : z) blocked[v] = true;

    std::vector<bool> reached(n, false);
    std::vector<int> stack;
    for (int v : w)
        if (!blocked[v]) {
            reached[v] = true;
            stack.push_back(v);
        }
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int u : amg.neighbors(v)) {
            if (blocked[u] || reached[u]) continue;
            reached[u] = true;
            stack.push_back(u);
        }
    }
    for (int v : y)
        if (reached[v]) return false;
    return true;
}

InducedResult induced_graph_and_width(const UndirectedGraph& g, const Ordering& d) {
    if (d.size() != g.num_nodes() || !d.is_valid())
        fail("induced_graph_and_width: ordering is not a permutation of the nodes");
    InducedResult res;
    res.graph = g;
    const std::vector<int> pos = d.positions();
    std::vector<int> earlier;
    for (int i = d.size() - 1; i >= 0; --i) {
        const int v = d.at(i);
        earlier.clear();
        for (int u : res.graph.neighbors(v))
            if (pos[u] < i) earlier.push_back(u);
        res.width = std::max(res.width, static_cast<int>(earlier.size()));
        add_clique(res.graph, earlier);
    }
    return res;
}

Ordering min_fill_ordering(const UndirectedGraph& g) {
    const int n = g.num_nodes();
    std::vector<std::vector<bool>> adj(n, std::vector<bool>(n, false));
    std::vector<int> degree(n, 0);
    for (int v = 0; v < n; ++v)
        for (int u : g.neighbors(v)) {
            adj[v][u] = true;
            ++degree[v];
        }

    std::vector<bool> eliminated(n, false);
    std::vector<int> elimination;
    elimination.reserve(n);
    for (int step = 0; step < n; ++step) {
        int best = -1;
        long best_fill = -1;
        for (int v = 0; v < n; ++v) {
            if (eliminated[v]) continue;
            long fill = 0;
            for (int a = 0; a < n; ++a) {
                if (a == v || eliminated[a] || !adj[v][a]) continue;
                for (int b = a + 1; b < n; ++b) {
                    if (b == v || eliminated[b] || !adj[v][b]) continue;
                    if (!adj[a][b]) ++fill;
                }
            }
            if (best < 0 || fill < best_fill) {
                best = v;
                best_fill = fill;
            }
        }
        eliminated[best] = true;
        elimination.push_back(best);
        for (int a = 0; a < n; ++a) {
            if (eliminated[a] || !adj[best][a]) continue;
            for (int b = a + 1; b < n; ++b) {
                if (eliminated[b] || !adj[best][b]) continue;
                adj[a][b] = adj[b][a] = true;
            }
        }
    }
    Ordering d;
    d.perm.assign(elimination.rbegin(), elimination.rend());
    return d;
}

namespace {

LegalTree finish_tree(const UndirectedGraph& g, std::vector<int> parent,
                      std::vector<std::vector<int>> children, std::vector<int> roots) {
    LegalTree t;
    t.parent = std::move(parent);
    t.children = std::move(children);
    t.roots = std::move(roots);
    const int n = t.num_nodes();
    t.depth_of.assign(n, 0);
    for (int v : t.dfs_order()) {
        if (t.parent[v] >= 0) t.depth_of[v] = t.depth_of[t.parent[v]] + 1;
        t.depth = std::max(t.depth, t.depth_of[v]);
    }
    t.contexts = compute_contexts(g, t);
    t.width = 0;
    for (const auto& c : t.contexts)
        t.width = std::max(t.width, static_cast<int>(c.size()));
    return t;
}

}  // namespace

LegalTree build_legal_tree(const UndirectedGraph& g, const Ordering& d) {
    const int n = g.num_nodes();
    if (d.size() != n || !d.is_valid())
        fail("build_legal_tree: ordering is not a permutation of the nodes");

    const UndirectedGraph induced = induced_graph_and_width(g, d).graph;
    const std::vector<int> pos = d.positions();

    std::vector<int> parent(n, -1);
    std::vector<std::vector<int>> children(n);
    std::vector<int> roots;
    std::vector<bool> visited(n, false);

    for (int i = 0; i < n; ++i) {
        const int root = d.at(i);
        if (visited[root]) continue;
        roots.push_back(root);
        visited[root] = true;
        std::vector<int> stack{root};
        while (!stack.empty()) {
            const int v = stack.back();
            // first unvisited neighbor in d order
            int next = -1;
            for (int u : induced.neighbors(v)) {
                if (visited[u]) continue;
                if (next < 0 || pos[u] < pos[next]) next = u;
            }
            if (next < 0) {
                stack.pop_back();
                continue;
            }
            visited[next] = true;
            parent[next] = v;
            children[v].push_back(next);
            stack.push_back(next);
        }
    }
    return finish_tree(g, std::move(parent), std::move(children), std::move(roots));
}

LegalTree make_chain_tree(const UndirectedGraph& g, const Ordering& d) {
    const int n = g.num_nodes();
    if (d.size() != n || !d.is_valid())
        fail("make_chain_tree: ordering is not a permutation of the nodes");
    std::vector<int> parent(n, -1);
    std::vector<std::vector<int>> children(n);
    for (int i = 1; i < n; ++i) {
        parent[d.at(i)] = d.at(i - 1);
        children[d.at(i - 1)].push_back(d.at(i));
    }
    std::vector<int> roots;
    if (n > 0) roots.push_back(d.at(0));
    return finish_tree(g, std::move(parent), std::move(children), std::move(roots));
}

LegalTree make_tree_from_parents(const UndirectedGraph& g, const std::vector<int>& parent) {
    const int n = g.num_nodes();
    if (static_cast<int>(parent.size()) != n)
        fail("make_tree_from_parents: parent array size mismatch");
    std::vector<std::vector<int>> children(n);
    std::vector<int> roots;
    for (int v = 0; v < n; ++v) {
        if (parent[v] < 0)
            roots.push_back(v);
        else
            children[parent[v]].push_back(v);
    }
    LegalTree t = finish_tree(g, std::vector<int>(parent), std::move(children), std::move(roots));
    return t;
}

bool verify_legal(const UndirectedGraph& g, const LegalTree& t) {
    if (g.num_nodes() != t.num_nodes()) return false;
    const int n = g.num_nodes();
    std::vector<bool> seen(n, false);
    for (int v : t.dfs_order()) {
        if (v < 0 || v >= n || seen[v]) return false;
        seen[v] = true;
    }
    for (bool s : seen)
        if (!s) return false;  // must span all nodes
    for (int v = 0; v < n; ++v)
        for (int u : g.neighbors(v)) {
            if (u < v) continue;
            if (!t.is_ancestor(u, v) && !t.is_ancestor(v, u)) return false;
        }
    return true;
}

std::vector<std::vector<int>> compute_contexts(const UndirectedGraph& g, const LegalTree& t) {
    if (!verify_legal(g, t))
        fail("compute_contexts: tree is not legal for the graph");
    const int n = g.num_nodes();

    // Neighbors of the subtree rooted at each node, accumulated bottom-up.
    std::vector<std::vector<bool>> subtree_nbrs(n, std::vector<bool>(n, false));
    std::vector<int> order = t.dfs_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int v = *it;
        for (int u : g.neighbors(v)) subtree_nbrs[v][u] = true;
        for (int c : t.children[v])
            for (int u = 0; u < n; ++u)
                if (subtree_nbrs[c][u]) subtree_nbrs[v][u] = true;
    }

    std::vector<std::vector<int>> contexts(n);
    for (int v = 0; v < n; ++v) {
        std::vector<int> chain;  // ancestors, root first
        for (int a = t.parent[v]; a >= 0; a = t.parent[a]) chain.push_back(a);
        std::reverse(chain.begin(), chain.end());
        for (int a : chain)
            if (subtree_nbrs[v][a]) contexts[v].push_back(a);
    }
    return contexts;
}

}  // namespace mixnet
