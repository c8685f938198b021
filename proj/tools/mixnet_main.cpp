#include <array>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mixnet/bench.hpp"
#include "mixnet/elimination.hpp"
#include "mixnet/graphs.hpp"
#include "mixnet/io.hpp"
#include "mixnet/model.hpp"
#include "mixnet/search.hpp"

namespace {

using nlohmann::json;

std::string format_value(double v) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.15e", v);
    return buffer;
}

int find_variable(const std::vector<mixnet::Variable>& vars, const std::string& token) {
    try {
        std::size_t used = 0;
        const int index = std::stoi(token, &used);
        if (used == token.size() && index >= 0 && index < static_cast<int>(vars.size()))
            return index;
    } catch (const std::exception&) {
    }
    for (const auto& v : vars)
        if (v.name == token) return v.index;
    throw std::runtime_error("unknown variable '" + token + "'");
}

std::vector<int> parse_var_list(const std::vector<mixnet::Variable>& vars,
                                const std::string& list) {
    std::vector<int> out;
    std::size_t pos = 0;
    while (pos < list.size()) {
        std::size_t comma = list.find(',', pos);
        if (comma == std::string::npos) comma = list.size();
        const std::string token = list.substr(pos, comma - pos);
        if (!token.empty()) out.push_back(find_variable(vars, token));
        pos = comma + 1;
    }
    return out;
}

mixnet::Propagation parse_prop(const std::string& name) {
    if (name == "none") return mixnet::Propagation::none;
    if (name == "fc") return mixnet::Propagation::forward_check;
    if (name == "rfc") return mixnet::Propagation::relational;
    throw CLI::ValidationError("--prop", "expected one of none|fc|rfc");
}

void print_stats(const mixnet::SearchStats& stats, int width, int depth) {
    std::printf("induced_width=%d\n", width);
    std::printf("tree_depth=%d\n", depth);
    std::printf("or_nodes=%llu\n", static_cast<unsigned long long>(stats.or_nodes));
    std::printf("and_nodes=%llu\n", static_cast<unsigned long long>(stats.and_nodes));
    std::printf("dead_ends=%llu\n", static_cast<unsigned long long>(stats.dead_ends));
    std::printf("cache_hits=%llu\n", static_cast<unsigned long long>(stats.cache_hits));
    std::printf("cache_entries=%llu\n", static_cast<unsigned long long>(stats.cache_entries));
    std::printf("elapsed=%.6f\n", stats.elapsed_seconds);
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content;
    else
        mixnet::write_file(out_path, content);
}

int run_gen(const mixnet::GenParams& params, const std::string& out_prefix) {
    const mixnet::MixedNetwork m = mixnet::generate_mixed(params);
    mixnet::write_file(out_prefix + ".uai", mixnet::serialize_uai(m.belief()));
    mixnet::write_file(out_prefix + ".con",
                       mixnet::serialize_constraints(m.constraints().tables()));
    std::printf("wrote %s.uai and %s.con\n", out_prefix.c_str(), out_prefix.c_str());
    return 0;
}

struct SolveArgs {
    mixnet::ProblemBundle bundle;
    std::string evid_path;
    std::string task = "cpe";
    std::string prop = "none";
    int cache_i = 0;
    std::string order = "minfill";
    bool stats = false;
    std::string backend = "search";
};

int run_solve(const SolveArgs& args) {
    mixnet::ProblemBundle bundle = args.bundle;
    if (!args.evid_path.empty())
        bundle.evidence = mixnet::parse_evidence(mixnet::read_file(args.evid_path));
    const mixnet::MixedNetwork m = mixnet::load_bundle(bundle);

    const mixnet::UndirectedGraph g = mixnet::mixed_moral_graph(m);
    const mixnet::Ordering d = mixnet::min_fill_ordering(g);
    const mixnet::LegalTree tree = mixnet::build_legal_tree(g, d);
    const int width = mixnet::induced_graph_and_width(g, d).width;

    mixnet::SearchOptions opts;
    opts.propagation = parse_prop(args.prop);
    opts.cache_i_bound = args.cache_i;

    if (args.task == "cpe") {
        if (args.backend == "be") {
            std::printf("cpe=%s\n",
                        format_value(mixnet::bucket_elimination_cpe(m, d)).c_str());
            return 0;
        }
        const mixnet::SearchResult res = mixnet::and_or_cpe(m, tree, opts);
        std::printf("cpe=%s\n", format_value(res.value).c_str());
        if (args.stats) print_stats(res.stats, width, tree.depth);
        return 0;
    }
    if (args.task == "mpe") {
        const mixnet::MpeSearchResult res = mixnet::and_or_mpe(m, tree, opts);
        std::printf("mpe=%s\n", format_value(res.value).c_str());
        if (res.assignment) {
            std::string line = "argmax=";
            for (int i = 0; i < m.num_vars(); ++i) {
                if (i > 0) line += ' ';
                line += std::to_string(res.assignment->value(i));
            }
            std::printf("%s\n", line.c_str());
        } else {
            std::printf("argmax=none\n");
        }
        if (args.stats) print_stats(res.stats, width, tree.depth);
        return 0;
    }
    if (args.task.rfind("belief:", 0) == 0) {
        const int var = find_variable(m.variables(), args.task.substr(7));
        const auto backend = args.backend == "be" ? mixnet::BeliefBackend::elimination
                                                  : mixnet::BeliefBackend::search;
        const std::vector<double> belief = mixnet::belief_given_cnf(m, var, backend);
        std::string line = "belief=";
        for (std::size_t v = 0; v < belief.size(); ++v) {
            if (v > 0) line += ' ';
            line += format_value(belief[v]);
        }
        std::printf("%s\n", line.c_str());
        return 0;
    }
    throw CLI::ValidationError("--task", "expected cpe, mpe or belief:<var>");
}

struct DsepArgs {
    mixnet::ProblemBundle bundle;
    std::string w, z, y;
};

int run_dsep(const DsepArgs& args) {
    const mixnet::MixedNetwork m = mixnet::load_bundle(args.bundle);
    const mixnet::MixedGraph g = mixnet::MixedGraph::from_network(m);
    const bool separated =
        mixnet::dm_separated(g, parse_var_list(m.variables(), args.w),
                             parse_var_list(m.variables(), args.z),
                             parse_var_list(m.variables(), args.y));
    std::printf("separated=%s\n", separated ? "true" : "false");
    return 0;
}

struct ExportArgs {
    mixnet::ProblemBundle bundle;
    std::string what = "graph";
    std::string prop = "none";
    int cache_i = 0;
    std::string out;
};

int run_export(const ExportArgs& args) {
    const mixnet::MixedNetwork m = mixnet::load_bundle(args.bundle);
    const mixnet::UndirectedGraph g = mixnet::mixed_moral_graph(m);
    const mixnet::Ordering d = mixnet::min_fill_ordering(g);

    if (args.what == "graph") {
        emit(args.out, mixnet::export_dot(g, m.variables()));
        return 0;
    }
    if (args.what == "tree") {
        emit(args.out, mixnet::export_dot(mixnet::build_legal_tree(g, d), m.variables()));
        return 0;
    }
    if (args.what == "search-tree" || args.what == "search-graph") {
        std::vector<mixnet::TraceRecord> trace;
        mixnet::SearchOptions opts;
        opts.propagation = parse_prop(args.prop);
        opts.cache_i_bound = args.cache_i;
        opts.trace = &trace;
        mixnet::and_or_cpe(m, mixnet::build_legal_tree(g, d), opts);
        emit(args.out, args.what == "search-tree"
                           ? mixnet::export_dot_search_tree(trace, m.variables())
                           : mixnet::export_dot_search_graph(trace, m.variables()));
        return 0;
    }
    throw CLI::ValidationError("--what", "expected graph|tree|search-tree|search-graph");
}

mixnet::ExperimentGrid grid_from_json(const json& spec) {
    mixnet::ExperimentGrid grid;
    for (const auto& cell : spec.at("cells")) {
        mixnet::GenParams p;
        p.n = cell.at("n").get<int>();
        p.k = cell.at("k").get<int>();
        p.r = cell.at("r").get<int>();
        p.p = cell.at("p").get<int>();
        p.c = cell.at("c").get<int>();
        p.s = cell.at("s").get<int>();
        p.tightness = cell.at("t").get<double>();
        p.seed = cell.value("seed", std::uint64_t{1});
        grid.cells.push_back(p);
    }
    if (spec.contains("props")) {
        grid.propagations.clear();
        for (const auto& name : spec.at("props"))
            grid.propagations.push_back(parse_prop(name.get<std::string>()));
    }
    if (spec.contains("i_bounds"))
        grid.i_bounds = spec.at("i_bounds").get<std::vector<int>>();
    grid.include_or_search = spec.value("include_or", true);
    grid.include_elimination = spec.value("include_be", true);
    if (spec.contains("budget"))
        grid.enumeration_budget = spec.at("budget").get<std::uint64_t>();
    return grid;
}

json report_to_json(const mixnet::TrialReport& report) {
    json cell = {{"n", report.params.n},       {"k", report.params.k},
                 {"r", report.params.r},       {"p", report.params.p},
                 {"c", report.params.c},       {"s", report.params.s},
                 {"t", report.params.tightness}};
    json algorithms = json::array();
    for (const auto& r : report.results) {
        json a = {{"name", r.name},
                  {"i", r.i_bound},
                  {"value", r.value},
                  {"or_nodes", r.stats.or_nodes},
                  {"and_nodes", r.stats.and_nodes},
                  {"dead_ends", r.stats.dead_ends},
                  {"cache_hits", r.stats.cache_hits},
                  {"cache_entries", r.stats.cache_entries},
                  {"elapsed", r.stats.elapsed_seconds}};
        algorithms.push_back(std::move(a));
    }
    json out = {{"cell", std::move(cell)},
                {"seed", report.params.seed},
                {"w", report.induced_width},
                {"h", report.tree_depth},
                {"full_space", report.full_space},
                {"algorithms", std::move(algorithms)}};
    if (report.solution_count) out["num_solutions"] = *report.solution_count;
    return out;
}

int run_bench(const std::string& grid_path, int trials, const std::string& report_path) {
    const json spec = json::parse(mixnet::read_file(grid_path));
    const mixnet::ExperimentGrid grid = grid_from_json(spec);
    const std::vector<mixnet::TrialReport> reports =
        mixnet::run_experiment(grid, trials, &std::cerr);

    std::string jsonl;
    for (const auto& report : reports) {
        jsonl += report_to_json(report).dump();
        jsonl += '\n';
    }
    if (!report_path.empty()) mixnet::write_file(report_path, jsonl);

    // mean statistics per cell and algorithm configuration
    std::printf("%-28s %-8s %4s %12s %14s %14s %10s\n", "cell", "algo", "i",
                "mean_time", "mean_nodes", "mean_deadends", "#sol");
    for (std::size_t cell = 0; cell < grid.cells.size(); ++cell) {
        const auto& p = grid.cells[cell];
        char cell_name[128];
        std::snprintf(cell_name, sizeof(cell_name), "N=%d K=%d R=%d P=%d C=%d S=%d t=%g",
                      p.n, p.k, p.r, p.p, p.c, p.s, p.tightness);
        std::map<std::pair<std::string, int>, std::array<double, 4>> agg;
        double mean_solutions = 0.0;
        int counted = 0;
        for (int trial = 0; trial < trials; ++trial) {
            const auto& report = reports[cell * trials + trial];
            if (report.solution_count) {
                mean_solutions += static_cast<double>(*report.solution_count);
                ++counted;
            }
            for (const auto& r : report.results) {
                auto& a = agg[{r.name, r.i_bound}];
                a[0] += r.stats.elapsed_seconds;
                a[1] += static_cast<double>(r.stats.or_nodes + r.stats.and_nodes);
                a[2] += static_cast<double>(r.stats.dead_ends);
                a[3] += 1.0;
            }
        }
        for (const auto& [key, a] : agg) {
            char sol[32] = "-";
            if (counted > 0)
                std::snprintf(sol, sizeof(sol), "%.3g", mean_solutions / counted);
            std::printf("%-28s %-8s %4d %12.4f %14.1f %14.1f %10s\n", cell_name,
                        key.first.c_str(), key.second, a[0] / a[3], a[1] / a[3],
                        a[2] / a[3], sol);
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mixed belief/constraint network solver"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a random mixed network");
    mixnet::GenParams gen_params;
    std::string gen_out = "instance";
    gen->add_option("--n", gen_params.n, "number of variables");
    gen->add_option("--k", gen_params.k, "domain size");
    gen->add_option("--r", gen_params.r, "number of root variables");
    gen->add_option("--p", gen_params.p, "parents per CPT");
    gen->add_option("--c", gen_params.c, "number of constraints");
    gen->add_option("--s", gen_params.s, "constraint scope size");
    gen->add_option("--t", gen_params.tightness, "fraction of allowed tuples in (0,1]");
    gen->add_option("--seed", gen_params.seed, "generator seed");
    gen->add_option("--out", gen_out, "output path prefix");

    // solve
    auto* solve = app.add_subcommand("solve", "run a query on a problem");
    SolveArgs solve_args;
    solve->add_option("--net", solve_args.bundle.belief_path, "UAI belief network")
        ->required();
    solve->add_option("--con", solve_args.bundle.table_constraints_path,
                      "table constraint file");
    solve->add_option("--cnf", solve_args.bundle.cnf_path, "DIMACS CNF file");
    solve->add_option("--evid", solve_args.evid_path, "UAI evidence file");
    solve->add_option("--task", solve_args.task, "cpe | mpe | belief:<var>");
    solve->add_option("--prop", solve_args.prop, "constraint propagation: none | fc | rfc");
    solve->add_option("--cache-i", solve_args.cache_i, "context cache bound (0 = off)");
    solve->add_option("--order", solve_args.order, "variable ordering heuristic")
        ->check(CLI::IsMember({"minfill"}));
    solve->add_option("--backend", solve_args.backend, "search | be")
        ->check(CLI::IsMember({"search", "be"}));
    solve->add_flag("--stats", solve_args.stats, "print search statistics");

    // dsep
    auto* dsep = app.add_subcommand("dsep", "dm-separation query");
    DsepArgs dsep_args;
    dsep->add_option("--net", dsep_args.bundle.belief_path, "UAI belief network")
        ->required();
    dsep->add_option("--con", dsep_args.bundle.table_constraints_path,
                     "table constraint file");
    dsep->add_option("--cnf", dsep_args.bundle.cnf_path, "DIMACS CNF file");
    dsep->add_option("--w", dsep_args.w, "first variable set, comma separated")->required();
    dsep->add_option("--z", dsep_args.z, "conditioning set, comma separated");
    dsep->add_option("--y", dsep_args.y, "second variable set, comma separated")->required();

    // export-dot
    auto* exp = app.add_subcommand("export-dot", "emit DOT diagnostics");
    ExportArgs export_args;
    exp->add_option("--net", export_args.bundle.belief_path, "UAI belief network")
        ->required();
    exp->add_option("--con", export_args.bundle.table_constraints_path,
                    "table constraint file");
    exp->add_option("--cnf", export_args.bundle.cnf_path, "DIMACS CNF file");
    exp->add_option("--what", export_args.what, "graph | tree | search-tree | search-graph");
    exp->add_option("--prop", export_args.prop, "propagation for search exports");
    exp->add_option("--cache-i", export_args.cache_i, "cache bound for search exports");
    exp->add_option("--out", export_args.out, "output file (stdout when absent)");

    // bench
    auto* bench = app.add_subcommand("bench", "run an experiment grid");
    std::string bench_grid, bench_report;
    int bench_trials = 10;
    bench->add_option("--grid", bench_grid, "JSON grid description")->required();
    bench->add_option("--trials", bench_trials, "instances per cell");
    bench->add_option("--report", bench_report, "JSONL output path");

    try {
        app.parse(argc, argv);
        if (gen->parsed()) return run_gen(gen_params, gen_out);
        if (solve->parsed()) return run_solve(solve_args);
        if (dsep->parsed()) return run_dsep(dsep_args);
        if (exp->parsed()) return run_export(export_args);
        if (bench->parsed()) return run_bench(bench_grid, bench_trials, bench_report);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const mixnet::InconsistentEvidenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
