#include "cli.hpp"

#include <sys/wait.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "qinv/ann.hpp"
#include "qinv/chemgraph.hpp"
#include "qinv/dataset.hpp"
#include "qinv/descriptors.hpp"
#include "qinv/graphsearch.hpp"
#include "qinv/milp.hpp"

namespace qinv::cli {

namespace {

struct Infeasible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) throw std::runtime_error("cannot write " + path);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

std::vector<chem::ChemicalGraph> read_graphs(const std::string& path, const chem::ChemicalAlphabet& A,
                                             std::ostream& err) {
    auto text = read_file(path);
    if (has_suffix(path, ".sdf") || has_suffix(path, ".sd") || has_suffix(path, ".mol")) {
        auto r = data::ingest_sdf(text, A);
        for (const auto& s : r.skipped)
            err << path << ": record " << s.record + 1 << " (" << s.title << ") skipped: " << s.reason << "\n";
        return r.graphs;
    }
    try {
        return chem::parse_graphs(text, A);
    } catch (const chem::ParseError& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

std::string join_graphs(const std::vector<chem::ChemicalGraph>& gs, const chem::ChemicalAlphabet& A) {
    std::string s;
    for (size_t i = 0; i < gs.size(); ++i) s += (i ? "\n" : "") + chem::format_graph(gs[i], A);
    return s;
}

// Flat key=value file; '#' starts a comment.
std::map<std::string, std::string> read_config(const std::string& path) {
    std::map<std::string, std::string> kv;
    std::istringstream in(read_file(path));
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        auto eq = line.find('=');
        auto trim = [](std::string s) {
            s.erase(0, s.find_first_not_of(" \t\r"));
            s.erase(s.find_last_not_of(" \t\r") + 1);
            return s;
        };
        if (trim(line).empty()) continue;
        if (eq == std::string::npos) throw std::runtime_error(path + ":" + std::to_string(no) + ": expected key=value");
        auto key = trim(line.substr(0, eq));
        for (auto& c : key)
            if (c == '_') c = '-';
        kv[key] = trim(line.substr(eq + 1));
    }
    return kv;
}

std::string config_path(const std::vector<std::string>& args) {
    for (size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
        if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
    }
    if (const char* e = std::getenv("QINV_CONFIG")) return e;
    return "";
}

std::string env_name(const std::string& opt) {
    std::string s = "QINV_";
    for (char c : opt) s += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

// Environment variables for every long option, and config values as defaults, so that
// flags override the environment, which overrides the config file.
void attach_sources(CLI::App& app, std::map<std::string, std::string>& config, std::set<std::string>& used) {
    for (auto* opt : app.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const auto& name = opt->get_lnames().front();
        if (name == "help" || name == "config") continue;
        if (opt->get_envname().empty()) opt->envname(env_name(name));
        if (auto it = config.find(name); it != config.end()) {
            opt->default_val(it->second);
            used.insert(name);
        }
    }
    for (auto* sub : app.get_subcommands({})) attach_sources(*sub, config, used);
}

struct Global {
    std::string config;
    uint64_t seed = 0;
    int threads = 1;
    std::string alphabet = "C,N,O";
    std::string valence;

    chem::ChemicalAlphabet make_alphabet() const {
        std::map<std::string, int> val;
        for (const auto& kv : split(valence, ',')) {
            auto eq = kv.find('=');
            if (eq == std::string::npos) throw std::runtime_error("--valence expects SYMBOL=VALUE pairs");
            val[kv.substr(0, eq)] = std::stoi(kv.substr(eq + 1));
        }
        return chem::ChemicalAlphabet::from_symbols(split(alphabet, ','), val);
    }
};

int run_stats(const Global& g, const std::vector<std::string>& inputs, const std::vector<int>& ks,
              const std::string& csv, bool no_filter, std::ostream& out, std::ostream& err) {
    auto A = g.make_alphabet();
    std::vector<chem::ChemicalGraph> graphs;
    for (const auto& p : inputs) {
        auto gs = read_graphs(p, A, err);
        graphs.insert(graphs.end(), gs.begin(), gs.end());
    }
    if (!no_filter) {
        auto f = data::stage1_filter(graphs, A);
        std::map<std::string, int> reasons;
        for (const auto& r : f.rejected) ++reasons[r.reason];
        for (const auto& [why, n] : reasons) err << "rejected " << n << ": " << why << "\n";
        graphs = std::move(f.accepted);
    }
    auto s = data::corpus_stats(graphs, ks);
    out << data::stats_table(s);
    if (!csv.empty()) write_file(csv, data::stats_csv(s));
    return 0;
}

int run_features(const Global& g, const std::string& in, const std::string& outp, int k, std::ostream& out,
                 std::ostream& err) {
    auto A = g.make_alphabet();
    auto csv = desc::feature_csv(read_graphs(in, A, err), A, k);
    if (outp.empty())
        out << csv;
    else
        write_file(outp, csv);
    return 0;
}

int run_train(const Global& g, const std::string& csv, const std::string& outp, const std::vector<int>& hidden,
              int folds, ann::Hyper hyper, std::ostream& out) {
    hyper.seed = g.seed;
    auto data = ann::read_dataset_csv(read_file(csv));
    auto r = ann::train(data, hidden, hyper, folds);
    char buf[128];
    double sum = 0;
    for (size_t i = 0; i < r.fold_r2_test.size(); ++i) {
        std::snprintf(buf, sizeof buf, "fold %zu: R2 train %.6f test %.6f\n", i + 1, r.fold_r2_train[i],
                      r.fold_r2_test[i]);
        out << buf;
        sum += r.fold_r2_test[i];
    }
    if (!r.fold_r2_test.empty()) {
        std::snprintf(buf, sizeof buf, "mean test R2 %.6f, best fold %d\n", sum / static_cast<double>(r.fold_r2_test.size()),
                      r.best_fold + 1);
        out << buf;
    }
    write_file(outp, ann::save_weights(r.net));
    return 0;
}

struct InferArgs {
    int n = 0, dmax = 3, dia = 0, k = 2, bh = 1, bl = 2, t = 0;
    double y = 0.0, eps = 0.02;
    std::string weights, corpus, lp, sol, solver, out_graph, out_x;
    bool solve = false;
};

int run_infer(const Global& g, const InferArgs& a, std::ostream& out, std::ostream& err) {
    auto A = g.make_alphabet();
    milp::TargetSpec spec;
    spec.alphabet = A;
    spec.n_star = a.n;
    spec.d_max = a.dmax;
    spec.dia_star = a.dia;
    spec.k_star = a.k;
    spec.bh_star = a.bh;
    spec.bl_star = a.bl;
    spec.y_star = a.y;
    spec.epsilon = a.eps;
    spec.t_star_override = a.t;
    spec.validate();
    milp::SchemeGraph sg;
    milp::DescriptorBounds bounds;
    try {
        sg = milp::scheme_graph(spec);
        if (a.corpus.empty()) {
            bounds = milp::open_bounds(A, a.n);
        } else {
            auto D = read_graphs(a.corpus, A, err);
            std::vector<chem::ChemicalGraph> slice;
            for (const auto& h : D)
                if (h.n() == a.n) slice.push_back(h);
            bounds = milp::compute_bounds(D, a.n, slice, A, a.k);
        }
        bounds.check();
    } catch (const milp::InfeasibleSpec& e) {
        throw Infeasible(e.what());
    }
    auto net = ann::load_weights(read_file(a.weights));
    auto model = milp::build_model(spec, bounds, net);
    write_file(a.lp, milp::emit_lp(model));
    int bin = 0, integer = 0, cont = 0;
    for (const auto& v : model.variables()) {
        if (v.type == milp::VarType::Binary) ++bin;
        else if (v.type == milp::VarType::Integer) ++integer;
        else ++cont;
    }
    out << "variables " << model.num_vars() << " (binary " << bin << ", integer " << integer << ", continuous " << cont
        << "), constraints " << model.num_constraints() << "\n";
    for (const auto& [group, n] : model.group_counts()) out << "  " << group << " " << n << "\n";
    out << "wrote " << a.lp << "\n";
    if (!a.solve) return 0;

    if (a.solver.empty()) throw std::runtime_error("--solve needs a solver command (--solver or SOLVER_CMD)");
    std::string sol = a.sol.empty() ? a.lp + ".sol" : a.sol;
    std::remove(sol.c_str());
    std::string cmd = a.solver;
    for (auto [key, val] : {std::pair<std::string, std::string>{"{lp}", a.lp}, {"{sol}", sol}})
        for (size_t p; (p = cmd.find(key)) != std::string::npos;) cmd.replace(p, key.size(), val);
    int status = std::system(cmd.c_str());
    int code = status == -1 ? -1 : WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    if (code == 2) throw Infeasible("solver reports the model infeasible");
    if (code != 0) throw std::runtime_error("solver command failed (status " + std::to_string(code) + "): " + cmd);
    auto asg = milp::parse_solution(read_file(sol), model);
    auto v = milp::check_assignment(model, asg, g.threads);
    if (!v.empty()) {
        for (size_t i = 0; i < v.size() && i < 10; ++i) err << v[i].describe() << "\n";
        throw std::runtime_error("solver solution violates " + std::to_string(v.size()) + " constraints");
    }
    auto graph = milp::decode_graph(asg, sg, spec);
    auto rep = chem::validate(graph, A);
    if (!rep.ok()) throw std::runtime_error("decoded graph is invalid: " + rep.describe());
    double y = ann::forward(net, desc::feature_values(desc::feature_vector(graph, A, a.k)));
    out << "decoded graph: n=" << graph.n() << ", predicted y " << y << "\n";
    auto gtext = chem::format_graph(graph, A);
    if (a.out_graph.empty())
        out << gtext;
    else
        write_file(a.out_graph, gtext);
    if (!a.out_x.empty()) write_file(a.out_x, search::format_target(search::target_of(graph, A), A));
    return 0;
}

struct EnumArgs {
    std::string target, outp;
    int bl = 0, dia = 0, dmax = 0;
    search::SearchLimits limits;
};

int run_enumerate(const Global& g, EnumArgs a, std::ostream& out) {
    auto A = g.make_alphabet();
    auto t = search::parse_target(read_file(a.target), A);
    int bl = a.bl ? a.bl : t.bl;
    int dia = a.dia ? a.dia : t.dia;
    if (bl == 0) throw std::runtime_error(a.target + ": no 'bl' line; pass --bl");
    a.limits.threads = g.threads;
    a.limits.check();
    search::SearchResult r;
    try {
        r = search::search(search::SearchProblem::make(A, t.x, dia, bl, a.dmax), a.limits);
    } catch (const search::InfeasibleTarget& e) {
        throw Infeasible(e.what());
    }
    auto text = join_graphs(r.graphs, A);
    if (a.outp.empty())
        out << text << (r.graphs.empty() ? "" : "\n");
    else
        write_file(a.outp, text);
    out << r.summary() << "\n";
    return r.graphs.empty() && r.complete ? 2 : 0;
}

int run_check(const Global& g, const std::string& lp, const std::string& sol, std::ostream& out) {
    auto model = milp::parse_lp(read_file(lp));
    auto asg = milp::parse_solution(read_file(sol), model);
    for (const auto& w : asg.warnings) out << "warning: " << w << "\n";
    auto v = milp::check_assignment(model, asg, g.threads);
    std::map<std::string, int> by_group;
    for (const auto& x : v) ++by_group[x.group.empty() ? "bounds" : x.group];
    out << "violations " << v.size() << "\n";
    for (const auto& [grp, n] : by_group) out << "  " << grp << " " << n << "\n";
    for (const auto& x : v) out << x.describe() << "\n";
    return v.empty() ? 0 : 2;
}

int run_target(const Global& g, const std::string& in, int index, const std::string& outp, std::ostream& out,
               std::ostream& err) {
    auto A = g.make_alphabet();
    auto gs = read_graphs(in, A, err);
    if (index < 0 || index >= static_cast<int>(gs.size()))
        throw std::runtime_error(in + ": no graph at index " + std::to_string(index));
    auto text = search::format_target(search::target_of(gs[static_cast<size_t>(index)], A), A);
    if (outp.empty())
        out << text;
    else
        write_file(outp, text);
    return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inverse QSAR pipeline for acyclic chemical graphs", args.empty() ? "qinv" : args[0]};
    app.require_subcommand(1);
    app.fallthrough();
    Global g;
    app.add_option("--config", g.config, "flat key=value file of option defaults (env QINV_CONFIG)");
    app.add_option("--seed", g.seed, "seed for randomized steps")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--alphabet", g.alphabet, "comma-separated element symbols")->capture_default_str();
    app.add_option("--valence", g.valence, "valence overrides, e.g. N=3,S=2");

    auto* st = app.add_subcommand("stats", "corpus statistics of graph or SDF files");
    std::vector<std::string> st_in;
    std::vector<int> st_k{1, 2, 3};
    std::string st_csv;
    bool st_nofilter = false;
    st->add_option("inputs", st_in, "graph or SDF files")->required()->check(CLI::ExistingFile);
    st->add_option("--k", st_k, "branch parameters")->delimiter(',')->allow_extra_args(false)->capture_default_str();
    st->add_option("--csv", st_csv, "also write the statistics as CSV");
    st->add_flag("--no-filter", st_nofilter, "skip the stage-1 filter");

    auto* fe = app.add_subcommand("features", "descriptor CSV of a graph file");
    std::string fe_in, fe_out;
    int fe_k = 2;
    fe->add_option("input", fe_in, "graph or SDF file")->required();
    fe->add_option("output", fe_out, "CSV file (default stdout)");
    fe->add_option("--k", fe_k, "branch parameter")->capture_default_str();

    auto* tr = app.add_subcommand("train", "cross-validated training of a ReLU network");
    std::string tr_csv, tr_out;
    std::vector<int> tr_hidden{10};
    int tr_folds = 5;
    ann::Hyper hyper;
    tr->add_option("csv", tr_csv, "descriptor CSV with a final 'value' column")->required();
    tr->add_option("output", tr_out, "weights file")->required();
    tr->add_option("--hidden", tr_hidden, "hidden layer widths")->delimiter(',')->allow_extra_args(false)->capture_default_str();
    tr->add_option("--folds", tr_folds, "cross-validation folds")->capture_default_str();
    tr->add_option("--epochs", hyper.epochs, "training epochs")->capture_default_str();
    tr->add_option("--lr", hyper.lr, "learning rate")->capture_default_str();
    tr->add_option("--batch", hyper.batch, "mini-batch size")->capture_default_str();

    auto* in = app.add_subcommand("infer", "build the inverse MILP and optionally solve it");
    InferArgs ia;
    in->add_option("--n", ia.n, "number of vertices n*")->required();
    in->add_option("--dmax", ia.dmax, "maximum degree (3 or 4)")->capture_default_str();
    in->add_option("--dia", ia.dia, "diameter")->required();
    in->add_option("--k", ia.k, "branch parameter")->capture_default_str();
    in->add_option("--bh", ia.bh, "k-branch height")->capture_default_str();
    in->add_option("--bl", ia.bl, "k-branch leaf number")->capture_default_str();
    in->add_option("--t", ia.t, "override for t* (0 = formula)")->capture_default_str();
    in->add_option("--y", ia.y, "target property value")->required();
    in->add_option("--eps", ia.eps, "relative tolerance: |y - y*| <= eps * |y*|")->capture_default_str();
    in->add_option("--weights", ia.weights, "weights file from train")->required();
    in->add_option("--corpus", ia.corpus, "graphs for descriptor bounds (default: open bounds)");
    in->add_option("--lp", ia.lp, "LP file to write")->required();
    in->add_flag("--solve", ia.solve, "run the solver command and decode its solution");
    in->add_option("--solver", ia.solver, "solver command with {lp} and {sol} placeholders")->envname("SOLVER_CMD");
    in->add_option("--sol", ia.sol, "solution file (default <lp>.sol)");
    in->add_option("--out-graph", ia.out_graph, "decoded graph file (default stdout)");
    in->add_option("--out-x", ia.out_x, "target file of the decoded graph");

    auto* en = app.add_subcommand("enumerate", "all graphs with a given frequency vector");
    EnumArgs ea;
    en->add_option("target", ea.target, "target file (dia, bl, in/ex counts)")->required();
    en->add_option("--bl", ea.bl, "leaf 2-branch number (default: from the file)");
    en->add_option("--dia", ea.dia, "diameter (default: from the file)");
    en->add_option("--dmax", ea.dmax, "maximum degree (default: from the target)");
    en->add_option("--ub", ea.limits.ub, "vectors kept per bucket")->capture_default_str();
    en->add_option("--max-output", ea.limits.max_output, "graphs to assemble")->capture_default_str();
    en->add_option("--time-limit", ea.limits.time_limit, "seconds per step")->capture_default_str();
    en->add_flag("--exhaustive", ea.limits.exhaustive, "store every tree per vector");
    en->add_option("--out", ea.outp, "graph file (default stdout)");

    auto* ch = app.add_subcommand("check", "violation report of a solution against an LP model");
    std::string ch_lp, ch_sol;
    ch->add_option("model", ch_lp, "LP file")->required();
    ch->add_option("solution", ch_sol, "solution file with 'name value' lines")->required();

    auto* ta = app.add_subcommand("target", "target file (frequency vector, dia, bl) of a graph");
    std::string ta_in, ta_out;
    int ta_index = 0;
    ta->add_option("input", ta_in, "graph or SDF file")->required();
    ta->add_option("output", ta_out, "target file (default stdout)");
    ta->add_option("--index", ta_index, "0-based graph index in the input")->capture_default_str();

    try {
        auto cfg = config_path(args);
        std::map<std::string, std::string> config;
        if (!cfg.empty()) config = read_config(cfg);
        std::set<std::string> used;
        attach_sources(app, config, used);
        for (const auto& [key, val] : config)
            if (!used.count(key)) throw std::runtime_error(cfg + ": unknown key '" + key + "'");
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        if (!rev.empty()) rev.pop_back();
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        auto subs = app.get_subcommands();
        err << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    try {
        if (st->parsed()) return run_stats(g, st_in, st_k, st_csv, st_nofilter, out, err);
        if (fe->parsed()) return run_features(g, fe_in, fe_out, fe_k, out, err);
        if (tr->parsed()) return run_train(g, tr_csv, tr_out, tr_hidden, tr_folds, hyper, out);
        if (in->parsed()) return run_infer(g, ia, out, err);
        if (en->parsed()) return run_enumerate(g, ea, out);
        if (ch->parsed()) return run_check(g, ch_lp, ch_sol, out);
        if (ta->parsed()) return run_target(g, ta_in, ta_index, ta_out, out, err);
    } catch (const Infeasible& e) {
        err << "infeasible: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace qinv::cli
