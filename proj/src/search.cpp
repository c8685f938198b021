#include "mixnet/search.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <stdexcept>

namespace mixnet {

const CacheTable::Entry* CacheTable::find(int var, std::uint64_t key) const {
    const auto& table = tables_[var];
    auto it = table.find(key);
    return it == table.end() ? nullptr : &it->second;
}

void CacheTable::store(int var, std::uint64_t key, Entry entry) {
    tables_[var].emplace(key, std::move(entry));
}

std::uint64_t CacheTable::size() const {
    std::uint64_t total = 0;
    for (const auto& t : tables_) total += t.size();
    return total;
}

double and_label(int x, int v, const Assignment& path, const BeliefNetwork& net) {
    if (path.value(x) != v)
        throw std::invalid_argument("and_label: path does not assign x = v");
    double label = 1.0;
    for (int child = 0; child < net.num_vars(); ++child) {
        const Cpt& c = net.cpt(child);
        bool contains_x = (child == x);
        bool full = path.is_assigned(child);
        for (int p : c.parents) {
            contains_x = contains_x || (p == x);
            full = full && path.is_assigned(p);
        }
        if (contains_x && full) label *= net.cpt_entry(child, path);
    }
    return label;
}

bool forward_check(const Assignment& path_plus, const ConstraintNetwork& cn) {
    std::vector<int> tuple;
    for (const auto& t : cn.tables()) {
        int unassigned = -1;
        int unassigned_count = 0;
        for (int v : t.scope())
            if (!path_plus.is_assigned(v)) {
                unassigned = v;
                if (++unassigned_count > 1) break;
            }
        if (unassigned_count > 1) continue;
        if (unassigned_count == 0) {
            tuple.clear();
            for (int v : t.scope()) tuple.push_back(path_plus.value(v));
            if (!t.contains(tuple)) return false;
            continue;
        }
        // exactly one future variable: does any of its values extend?
        bool extendable = false;
        const int k = cn.cardinality(unassigned);
        tuple.assign(t.scope().size(), 0);
        for (int y = 0; y < k && !extendable; ++y) {
            for (std::size_t i = 0; i < t.scope().size(); ++i) {
                const int v = t.scope()[i];
                tuple[i] = (v == unassigned) ? y : path_plus.value(v);
            }
            extendable = t.contains(tuple);
        }
        if (!extendable) return false;
    }
    // A clause with an unassigned variable always admits a satisfying
    // value for it, so only fully assigned clauses can fail here.
    for (const auto& c : cn.clauses()) {
        bool full = true;
        bool satisfied = false;
        for (const auto& lit : c.literals) {
            if (!path_plus.is_assigned(lit.var)) {
                full = false;
                break;
            }
            if (path_plus.value(lit.var) == (lit.positive ? 1 : 0)) {
                satisfied = true;
                break;
            }
        }
        if (full && !satisfied) return false;
    }
    return true;
}

bool relational_forward_check(const Assignment& path_plus, const ConstraintNetwork& cn) {
    for (const auto& t : cn.tables())
        if (!t.projection_nonempty(path_plus)) return false;
    for (const auto& c : cn.clauses()) {
        bool full = true;
        bool satisfied = false;
        for (const auto& lit : c.literals) {
            if (!path_plus.is_assigned(lit.var)) {
                full = false;
                break;
            }
            if (path_plus.value(lit.var) == (lit.positive ? 1 : 0)) {
                satisfied = true;
                break;
            }
        }
        if (full && !satisfied) return false;
    }
    return true;
}

std::vector<int> consistent_successors(int x, Assignment& path, const MixedNetwork& m,
                                       Propagation prop, std::uint64_t* pruned) {
    if (path.is_assigned(x))
        throw std::invalid_argument("consistent_successors: variable already assigned");
    std::vector<int> values;
    const int k = m.cardinality(x);
    for (int v = 0; v < k; ++v) {
        path.assign(x, v);
        bool ok = !violates_partial(m.constraints(), path);
        if (ok && prop == Propagation::forward_check)
            ok = forward_check(path, m.constraints());
        if (ok && prop == Propagation::relational)
            ok = relational_forward_check(path, m.constraints());
        path.unassign(x);
        if (ok)
            values.push_back(v);
        else if (pruned)
            ++*pruned;
    }
    return values;
}

namespace {

struct Frame {
    bool is_or = false;
    int var = -1;
    int value = -1;   // AND frames
    double g = 0.0;   // OR: accumulating sum/max; AND: label times child values
    std::vector<int> items;  // OR: consistent values; AND: tree children
    std::size_t next = 0;
    bool cacheable = false;   // OR frames
    std::uint64_t key = 0;
    std::vector<std::pair<int, int>> fragment;       // AND: mpe witness below here
    std::vector<std::pair<int, int>> best_fragment;  // OR: winning child fragment
};

class Engine {
public:
    Engine(const MixedNetwork& m, const LegalTree& t, const SearchOptions& opts)
        : net_(m), tree_(t), opts_(opts), path_(m.num_vars()), cache_(m.num_vars()) {
        const int n = net_.num_vars();
        context_radix_.resize(n);
        context_ok_.assign(n, false);
        for (int v = 0; v < n; ++v) {
            const auto& ctx = tree_.contexts[v];
            if (static_cast<int>(ctx.size()) > opts_.cache_i_bound) continue;
            double magnitude = 1.0;
            std::vector<std::uint64_t> radix(ctx.size());
            std::uint64_t prod = 1;
            for (int i = static_cast<int>(ctx.size()) - 1; i >= 0; --i) {
                radix[i] = prod;
                prod *= static_cast<std::uint64_t>(net_.cardinality(ctx[i]));
                magnitude *= net_.cardinality(ctx[i]);
            }
            if (magnitude > 9e18) continue;  // key would overflow
            context_radix_[v] = std::move(radix);
            context_ok_[v] = true;
        }
        cpts_containing_.resize(n);
        for (int child = 0; child < n; ++child) {
            cpts_containing_[child].push_back(child);
            for (int p : net_.belief().cpt(child).parents)
                cpts_containing_[p].push_back(child);
        }
    }

    double run(SearchStats& stats, std::vector<std::pair<int, int>>* witness) {
        const bool mpe = opts_.task == Task::mpe;
        const bool caching = opts_.cache_i_bound > 0;

        Frame root;
        root.is_or = false;
        root.g = 1.0;
        root.items = tree_.roots;
        stack_.push_back(std::move(root));

        double result = 0.0;
        while (!stack_.empty()) {
            Frame& f = stack_.back();
            if (f.is_or) {
                if (f.next < f.items.size()) {
                    const int v = f.items[f.next++];
                    path_.assign(f.var, v);
                    const double label =
                        opts_.task == Task::count ? 1.0 : label_at(f.var);
                    ++stats.and_nodes;
                    trace({TraceRecord::Event::and_expand, f.var, v,
                           tree_.depth_of[f.var], label});
                    Frame child;
                    child.is_or = false;
                    child.var = f.var;
                    child.value = v;
                    child.g = label;
                    child.items = tree_.children[f.var];
                    if (mpe) child.fragment.emplace_back(f.var, v);
                    stack_.push_back(std::move(child));
                } else {
                    // OR node complete
                    trace({TraceRecord::Event::or_complete, f.var, -1,
                           tree_.depth_of[f.var], f.g, f.cacheable, f.key});
                    if (caching && f.cacheable) {
                        CacheTable::Entry entry;
                        entry.g = f.g;
                        if (mpe) entry.assignment = f.best_fragment;
                        cache_.store(f.var, f.key, std::move(entry));
                        ++stats.cache_entries;
                    }
                    const double g = f.g;
                    auto frag = std::move(f.best_fragment);
                    stack_.pop_back();
                    Frame& parent = stack_.back();
                    parent.g *= g;
                    if (mpe)
                        parent.fragment.insert(parent.fragment.end(), frag.begin(), frag.end());
                }
            } else {
                if (f.next < f.items.size()) {
                    expand_or(f.items[f.next++], f, stats);
                } else {
                    // AND node complete
                    const double g = f.g;
                    const int var = f.var;
                    const int value = f.value;
                    auto frag = std::move(f.fragment);
                    if (var >= 0)
                        trace({TraceRecord::Event::and_complete, var, value,
                               tree_.depth_of[var], g});
                    stack_.pop_back();
                    if (var < 0) {
                        result = g;
                        if (witness) *witness = std::move(frag);
                        break;
                    }
                    path_.unassign(var);
                    Frame& parent = stack_.back();
                    if (mpe) {
                        if (g > parent.g) {
                            parent.g = g;
                            parent.best_fragment = std::move(frag);
                        }
                    } else {
                        parent.g += g;
                    }
                }
            }
        }
        stats.cache_hits = cache_hits_;
        return result;
    }

private:
    void expand_or(int x, Frame& and_parent, SearchStats& stats) {
        const bool mpe = opts_.task == Task::mpe;
        std::uint64_t key = 0;
        bool cacheable = false;
        if (opts_.cache_i_bound > 0 && context_ok_[x]) {
            const auto& ctx = tree_.contexts[x];
            for (std::size_t i = 0; i < ctx.size(); ++i)
                key += static_cast<std::uint64_t>(path_.value(ctx[i])) * context_radix_[x][i];
            cacheable = true;
            if (const CacheTable::Entry* hit = cache_.find(x, key)) {
                ++cache_hits_;
                trace({TraceRecord::Event::cache_hit, x, -1, tree_.depth_of[x],
                       hit->g, true, key});
                and_parent.g *= hit->g;
                if (mpe)
                    and_parent.fragment.insert(and_parent.fragment.end(),
                                               hit->assignment.begin(), hit->assignment.end());
                return;
            }
        }
        std::uint64_t pruned = 0;
        std::vector<int> values =
            consistent_successors(x, path_, net_, opts_.propagation, &pruned);
        stats.dead_ends += pruned;
        ++stats.or_nodes;
        trace({TraceRecord::Event::or_expand, x, -1, tree_.depth_of[x], 0.0, cacheable, key});
        if (opts_.trace && pruned > 0) {
            std::size_t kept = 0;
            for (int v = 0; v < net_.cardinality(x); ++v) {
                if (kept < values.size() && values[kept] == v)
                    ++kept;
                else
                    trace({TraceRecord::Event::value_pruned, x, v, tree_.depth_of[x], 0.0});
            }
        }
        if (values.empty()) ++stats.dead_ends;

        Frame frame;
        frame.is_or = true;
        frame.var = x;
        frame.g = 0.0;
        frame.items = std::move(values);
        frame.cacheable = cacheable;
        frame.key = key;
        stack_.push_back(std::move(frame));
    }

    // Same contract as and_label, restricted to CPTs that mention x.
    double label_at(int x) const {
        double label = 1.0;
        for (int child : cpts_containing_[x]) {
            const Cpt& c = net_.belief().cpt(child);
            bool full = path_.is_assigned(child);
            for (int p : c.parents) full = full && path_.is_assigned(p);
            if (full) label *= net_.belief().cpt_entry(child, path_);
        }
        return label;
    }

    void trace(TraceRecord record) {
        if (opts_.trace) opts_.trace->push_back(record);
    }

    const MixedNetwork& net_;
    const LegalTree& tree_;
    SearchOptions opts_;
    Assignment path_;
    CacheTable cache_;
    std::vector<Frame> stack_;
    std::vector<std::vector<std::uint64_t>> context_radix_;
    std::vector<bool> context_ok_;
    std::vector<std::vector<int>> cpts_containing_;
    std::uint64_t cache_hits_ = 0;
};

void check_tree(const MixedNetwork& m, const LegalTree& t) {
    if (t.num_nodes() != m.num_vars() ||
        static_cast<int>(t.contexts.size()) != m.num_vars())
        throw std::invalid_argument("search: tree does not match the network");
    if (!verify_legal(mixed_moral_graph(m), t))
        throw std::invalid_argument("search: tree is not legal for the mixed moral graph");
}

SearchResult run_search(const MixedNetwork& m, const LegalTree& t, SearchOptions opts,
                        std::vector<std::pair<int, int>>* witness) {
    check_tree(m, t);
    const auto start = std::chrono::steady_clock::now();
    SearchResult res;
    Engine engine(m, t, opts);
    res.value = engine.run(res.stats, witness);
    res.stats.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

}  // namespace

SearchResult and_or_cpe(const MixedNetwork& m, const LegalTree& t, const SearchOptions& opts) {
    SearchOptions o = opts;
    o.task = Task::cpe;
    return run_search(m, t, o, nullptr);
}

SearchResult and_or_count(const MixedNetwork& m, const LegalTree& t, const SearchOptions& opts) {
    SearchOptions o = opts;
    o.task = Task::count;
    return run_search(m, t, o, nullptr);
}

SearchResult or_cpe(const MixedNetwork& m, const Ordering& d, const SearchOptions& opts) {
    const LegalTree chain = make_chain_tree(mixed_moral_graph(m), d);
    SearchOptions o = opts;
    o.task = Task::cpe;
    return run_search(m, chain, o, nullptr);
}

MpeSearchResult and_or_mpe(const MixedNetwork& m, const LegalTree& t, const SearchOptions& opts) {
    SearchOptions o = opts;
    o.task = Task::mpe;
    std::vector<std::pair<int, int>> witness;
    SearchResult res = run_search(m, t, o, &witness);
    MpeSearchResult out;
    out.value = res.value;
    out.stats = res.stats;
    if (out.value > 0.0) {
        Assignment a(m.num_vars());
        for (auto [var, val] : witness) a.assign(var, val);
        if (!a.is_full())
            throw std::logic_error("and_or_mpe: incomplete witness assignment");
        out.assignment = std::move(a);
    }
    return out;
}

}  // namespace mixnet
