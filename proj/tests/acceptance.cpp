// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "cli.hpp"
#include "qinv/ann.hpp"
#include "qinv/descriptors.hpp"
#include "qinv/graphsearch.hpp"
#include "qinv/milp.hpp"
#include "search_suite.hpp"
#include "support.hpp"

using namespace qinv;
using chem::ChemicalAlphabet;
using chem::ChemicalGraph;

namespace {

const ChemicalAlphabet kCNO = ChemicalAlphabet::cno();

// Collects failed expectations for one criterion.
struct Check {
    int failures = 0;
    std::string first;
    void expect(bool ok, const std::string& what) {
        if (ok) return;
        if (failures++ == 0) first = what;
    }
};

struct Outcome {
    bool pass;
    std::string detail;
};

Outcome finish(const Check& c, const std::string& summary) {
    if (c.failures == 0) return {true, summary};
    return {false, summary + "; " + std::to_string(c.failures) + " failed, first: " + c.first};
}

int max_degree(const ChemicalGraph& g) {
    int d = 0;
    for (int v = 0; v < g.n(); ++v) d = std::max(d, g.degree(v));
    return d;
}

milp::TargetSpec make_spec(int n, int dmax, int dia, int bh, int bl, int k = 2) {
    milp::TargetSpec s;
    s.alphabet = kCNO;
    s.n_star = n;
    s.d_max = dmax;
    s.dia_star = dia;
    s.k_star = k;
    s.bh_star = bh;
    s.bl_star = bl;
    return s;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct SuiteCase {
    int bl;
    testsupport::OracleOutcome o;
};

// Random in-class targets compared with the brute-force oracle; shared by criteria 1 and 2.
std::vector<SuiteCase> run_search_suite(double& elapsed) {
    std::vector<SuiteCase> cases;
    std::mt19937_64 rng(7001);
    auto t0 = std::chrono::steady_clock::now();
    for (int bl : {2, 3}) {
        int want = bl == 2 ? 100 : 50, done = 0;
        while (done < want) {
            ChemicalGraph g;
            if (!testsupport::random_in_class(rng, kCNO, bl == 2 ? 7 : 10, bl == 2 ? 12 : 13, bl, g)) continue;
            ++done;
            cases.push_back({bl, testsupport::compare_with_oracle(g, kCNO)});
        }
    }
    elapsed = seconds_since(t0);
    return cases;
}

Outcome criterion1(const std::vector<SuiteCase>& cases, double elapsed) {
    Check c;
    int n2 = 0, n3 = 0;
    for (size_t i = 0; i < cases.size(); ++i) {
        const auto& o = cases[i].o;
        (cases[i].bl == 2 ? n2 : n3) += 1;
        c.expect(o.same_set, "case " + std::to_string(i) + ": " + o.note);
        c.expect(o.contains_input, "case " + std::to_string(i) + " misses its input graph");
        c.expect(o.complete, "case " + std::to_string(i) + " incomplete");
    }
    c.expect(n2 >= 100 && n3 >= 50, "suite too small");
    c.expect(elapsed <= 600.0, "runtime over 10 min");
    std::ostringstream s;
    s << n2 << " bl=2 and " << n3 << " bl=3 targets, " << std::fixed;
    s.precision(1);
    s << elapsed << " s";
    return finish(c, s.str());
}

Outcome criterion2(const std::vector<SuiteCase>& cases) {
    Check c;
    int exact = 0, symmetric = 0;
    for (size_t i = 0; i < cases.size(); ++i) {
        const auto& o = cases[i].o;
        search::Count truth(o.truth);
        std::string tag = "case " + std::to_string(i) + " lb " + o.lower_bound.str() + " truth " + truth.str();
        c.expect(o.lower_bound <= truth && truth <= 2 * o.lower_bound, tag);
        if (o.symmetric) {
            ++symmetric;
        } else {
            c.expect(o.lower_bound == truth, tag + " not symmetric");
            ++exact;
        }
    }
    return finish(c, std::to_string(exact) + " exact, " + std::to_string(symmetric) + " symmetric");
}

Outcome criterion3() {
    Check c;
    std::mt19937_64 rng(3003);
    int done = 0, tries = 0, mutated = 0, caught = 0;
    while (done < 50 && ++tries < 20000) {
        int n = std::uniform_int_distribution<int>(7, 12)(rng);
        int cap = std::uniform_int_distribution<int>(3, 4)(rng);
        auto g = testsupport::random_tree(rng, n, cap);
        auto b = testsupport::definitional_branches(g, 2);
        if (b.bl < 2 || b.dia < 3 || max_degree(g) < 3) continue;
        if (!testsupport::decorate(rng, g, kCNO)) continue;
        auto sp = make_spec(g.n(), max_degree(g), b.dia, b.bh, b.bl);
        if (milp::formula_t_star(sp) <= 0) continue;
        auto sg = milp::scheme_graph(sp);
        milp::Assignment a;
        try {
            a = milp::encode_graph(g, sg, sp);
        } catch (const milp::ClassError&) {
            continue;
        }
        auto bounds = milp::compute_bounds({g}, n, {}, kCNO, 2);
        auto net = ann::random_net({desc::descriptor_count(kCNO), 3, 1}, 500 + done);
        sp.y_star = ann::forward(net, desc::feature_values(desc::feature_vector(g, kCNO, 2)));
        auto m = milp::build_model(sp, bounds, net);
        milp::encode_ann(a, net, milp::input_names(kCNO));
        auto v = milp::check_assignment(m, a);
        std::string tag = "graph " + std::to_string(done);
        c.expect(v.empty(), tag + ": " + (v.empty() ? "" : v.front().describe()));
        auto h = milp::decode_graph(a, sg, sp);
        c.expect(testsupport::iso_key(h) == testsupport::iso_key(g), tag + " decodes to a different graph");
        for (int vi = 0; vi < m.num_vars(); ++vi) {
            const auto& var = m.variables()[vi];
            const auto& name = var.name;
            bool pick = name.rfind("u_", 0) == 0 || name.rfind("v_", 0) == 0 || name.rfind("alpha_", 0) == 0 ||
                        name.rfind("ba_", 0) == 0 || name.rfind("be_", 0) == 0 || name.rfind("bst_", 0) == 0 ||
                        name.rfind("bt_", 0) == 0;
            if (!pick) continue;
            milp::Value old = a.get(name);
            milp::Value now = old + 1 <= milp::Value(var.hi) ? milp::Value(old + 1) : milp::Value(old - 1);
            auto b2 = a;
            b2.set(name, now);
            ++mutated;
            bool hit = !milp::check_constraints(m, b2, m.constraints_of(vi)).empty();
            caught += hit;
            c.expect(hit, tag + ": mutation of " + name + " unnoticed");
        }
        ++done;
    }
    c.expect(done == 50, "only " + std::to_string(done) + " in-class graphs");
    return finish(c, std::to_string(done) + " graphs, " + std::to_string(caught) + "/" + std::to_string(mutated) +
                         " mutations caught");
}

Outcome criterion4() {
    Check c;
    std::mt19937_64 rng(4004);
    int perturbations = 0;
    for (int it = 0; it < 20; ++it) {
        std::uniform_int_distribution<int> W(1, 4);
        std::vector<int> sizes{W(rng)};
        int hidden = std::uniform_int_distribution<int>(1, 2)(rng);
        for (int h = 0; h < hidden; ++h) sizes.push_back(W(rng));
        sizes.push_back(1);
        auto net = ann::random_net(sizes, 4000 + it);
        int K = sizes[0];
        std::uniform_real_distribution<double> U(-3, 3);
        milp::MilpModel m;
        std::vector<int> xs;
        std::vector<double> lo, hi, x;
        std::vector<std::string> names;
        milp::Assignment a;
        for (int j = 0; j < K; ++j) {
            names.push_back("x_" + std::to_string(j));
            xs.push_back(m.add_continuous(names.back(), -10, 10));
            x.push_back(U(rng));
            lo.push_back(-3);
            hi.push_back(3);
            a.set(names.back(), milp::Value(x.back()));
            m.add_constraint("C1", "C1_fix_" + std::to_string(j), {{xs.back(), 1}}, milp::Sense::EQ, x.back());
        }
        milp::add_ann_block(m, net, xs, lo, hi);
        milp::encode_ann(a, net, names);
        std::string tag = "net " + std::to_string(it);
        c.expect(milp::check_assignment(m, a).empty(), tag + " infeasible at forward activations");
        double y = ann::forward(net, x);
        c.expect(std::abs(milp::to_double(a.get("y")) - y) < 1e-9, tag + " y differs from forward");
        for (double d : {1.5e-5, -1.5e-5, 1e-3, -0.5, 10.0}) {
            auto b = a;
            b.set("y", milp::Value(y + d));
            ++perturbations;
            c.expect(!milp::check_assignment(m, b).empty(), tag + " accepts y off by " + std::to_string(d));
        }
        for (const auto& var : m.variables()) {
            if (var.name.rfind("h_", 0) != 0) continue;
            auto b = a;
            b.set(var.name, a.get(var.name) + milp::Value(0.25));
            ++perturbations;
            c.expect(!milp::check_assignment(m, b).empty(), tag + " accepts a shifted " + var.name);
        }
    }
    return finish(c, "20 nets, " + std::to_string(perturbations) + " perturbations rejected");
}

Outcome criterion5() {
    Check c;
    std::mt19937_64 rng(5005);
    int points = 0;
    double worst = 0.0;
    while (points < 100) {
        int k = std::uniform_int_distribution<int>(1, 5)(rng);
        int h = std::uniform_int_distribution<int>(1, 6)(rng);
        auto net = ann::random_net({k, h, 1}, rng());
        for (auto& bb : net.b)
            for (int i = 0; i < bb.size(); ++i) bb[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
        std::vector<double> x(static_cast<size_t>(k));
        for (auto& v : x) v = std::uniform_real_distribution<double>(-1, 1)(rng);
        auto tr = ann::forward_trace(net, x);
        bool near_kink = false;
        for (size_t l = 0; l + 1 < tr.z.size(); ++l)
            for (int i = 0; i < tr.z[l].size(); ++i)
                if (std::abs(tr.z[l][i]) < 1e-3) near_kink = true;
        if (near_kink) continue;
        auto g = ann::output_gradient(net, x);
        auto th = ann::flatten(net);
        for (size_t p = 0; p < th.size(); ++p) {
            auto up = th, down = th;
            up[p] += 1e-5;
            down[p] -= 1e-5;
            ann::NeuralNet a = net, b = net;
            ann::unflatten(a, up);
            ann::unflatten(b, down);
            double num = (ann::forward(a, x) - ann::forward(b, x)) / 2e-5;
            double den = std::max(std::abs(num), std::abs(g[p]));
            double rel = den < 1e-12 ? 0.0 : std::abs(num - g[p]) / den;
            worst = std::max(worst, rel);
            c.expect(rel <= 1e-4, "point " + std::to_string(points) + " parameter " + std::to_string(p));
        }
        ++points;
    }
    std::ostringstream s;
    s << points << " points, worst relative error " << worst;
    return finish(c, s.str());
}

Outcome criterion6() {
    Check c;
    auto C = ChemicalAlphabet::from_symbols({"C"});
    search::BruteOptions opt;
    opt.max_mult = 1;
    opt.d_max = 4;
    const int expected[] = {2, 3, 5, 9, 18};
    std::string counts;
    for (int n = 4; n <= 8; ++n) {
        auto trees = search::brute_force_enumerate(C, n, opt);
        std::set<std::string> by_roots, by_test;
        for (const auto& t : trees) {
            by_roots.insert(chem::canonical_form_all_roots(t));
            by_test.insert(testsupport::iso_key(t));
        }
        std::string tag = "n=" + std::to_string(n);
        c.expect(trees.size() == static_cast<size_t>(expected[n - 4]), tag + " count " + std::to_string(trees.size()));
        c.expect(by_roots.size() == trees.size() && by_test.size() == trees.size(), tag + " duplicates");
        counts += (counts.empty() ? "" : ",") + std::to_string(trees.size());
    }
    return finish(c, "n=4..8: " + counts);
}

Outcome criterion7() {
    Check c;
    auto sg = milp::scheme_graph(make_spec(20, 3, 8, 2, 2));
    c.expect(sg.s_star == 10, "s* for (20,3,8,2,2)");
    c.expect(sg.c_star == 9, "c* for (20,3,8,2,2)");
    c.expect(sg.n_tree_S == 7, "n_tree_S for (20,3,8,2,2)");
    c.expect(sg.n_tree_T == 4, "n_tree_T for (20,3,8,2,2)");
    c.expect(sg.leaves == std::vector<int>{5, 6, 7, 8, 9, 10}, "leaf range for bh*=2");
    c.expect(milp::formula_t_star(make_spec(37, 3, 10, 2, 3)) == 27, "t* for (37,3,10,2,3)");
    auto sg4 = milp::scheme_graph(make_spec(12, 4, 6, 1, 2));
    c.expect(sg4.s_star == 5 && sg4.c_star == 4, "s*, c* for (12,4,6,1,2)");
    c.expect(sg4.n_tree_S == 13 && sg4.n_tree_T == 9, "n_tree for (12,4,6,1,2)");
    c.expect(search::bl2_deltas(6) == std::pair<int, int>{0, 1}, "delta for dia 6");
    c.expect(search::bl2_deltas(7) == std::pair<int, int>{1, 1}, "delta for dia 7");
    c.expect(search::bl2_deltas(8) == std::pair<int, int>{1, 2}, "delta for dia 8");
    c.expect(search::bl2_deltas(11) == std::pair<int, int>{3, 3}, "delta for dia 11");
    c.expect(search::bl3_delta3(10, 10) == 2, "delta3 for n_inl 10, dia 10");
    c.expect(search::bl3_delta1_range(10, 2) == std::pair<int, int>{2, 2}, "delta1 range dia 10 delta3 2");
    c.expect(search::bl3_delta2_range(10, 2) == std::pair<int, int>{2, 2}, "delta2 range dia 10 delta3 2");
    c.expect(search::bl3_delta3(8, 10) == 0, "delta3 for n_inl 8, dia 10");
    c.expect(search::bl3_delta1_range(10, 0) == std::pair<int, int>{2, 4}, "delta1 range dia 10 delta3 0");
    c.expect(search::bl3_delta2_range(10, 0) == std::pair<int, int>{0, 2}, "delta2 range dia 10 delta3 0");
    c.expect(search::bl3_delta1_range(9, 1) == std::pair<int, int>{2, 2}, "delta1 range dia 9 delta3 1");
    c.expect(search::bl3_delta2_range(9, 1) == std::pair<int, int>{1, 1}, "delta2 range dia 9 delta3 1");
    return finish(c, "scheme graph and backbone fixtures");
}

Outcome criterion8() {
    Check c;
    std::mt19937_64 rng(8008);
    int graphs = 0;
    while (graphs < 1000) {
        int n = std::uniform_int_distribution<int>(2, 30)(rng);
        auto g = testsupport::random_tree(rng, n, 4);
        if (!testsupport::decorate(rng, g, kCNO)) continue;
        int k = std::uniform_int_distribution<int>(1, 3)(rng);
        auto f = desc::feature_vector(g, kCNO, k);
        std::string tag = "graph " + std::to_string(graphs);
        int sdg = 0, sce = 0, sac = 0;
        for (int d = 1; d <= 4; ++d) sdg += f.dg_in[d] + f.dg_ex[d];
        for (int a = 0; a < 3; ++a) sce += f.ce_in[a] + f.ce_ex[a];
        for (size_t i = 0; i < f.ac_in.size(); ++i) sac += f.ac_in[i] + f.ac_ex[i];
        c.expect(sdg == n, tag + " degree counts");
        c.expect(sce == n, tag + " element counts");
        c.expect(sac == n - 1, tag + " edge counts");
        for (int m = 2; m <= 3; ++m) {
            int si = 0, se = 0;
            for (size_t i = 0; i < kCNO.gamma().size(); ++i)
                if (kCNO.gamma()[i].m == m) {
                    si += f.ac_in[i];
                    se += f.ac_ex[i];
                }
            c.expect(f.bd_in[m] == si && f.bd_ex[m] == se, tag + " bd from ac");
        }
        c.expect(f.n_h == desc::hydrogen_count(g, kCNO), tag + " n_H from the graph");
        c.expect(f.n_h == desc::hydrogen_count_ac(f, kCNO), tag + " n_H from ac counts");
        int in_bc = 0, sbc = 0;
        for (const auto& e : g.edges())
            if (std::max(g.degree(e.u), g.degree(e.v)) + e.m <= 4) ++in_bc;
        for (size_t j = 0; j < f.bc_in.size(); ++j) sbc += f.bc_in[j] + f.bc_ex[j];
        c.expect(sbc == in_bc, tag + " bc counts");
        auto o = testsupport::definitional_branches(g, k);
        std::vector<int> ce_in(3, 0);
        for (int v : o.v_in) ce_in[g.label(v)] += 1;
        c.expect(ce_in == f.ce_in, tag + " internal element split");
        c.expect(f.bl == o.bl && f.bh == o.bh, tag + " bl/bh");
        ++graphs;
    }
    return finish(c, std::to_string(graphs) + " graphs");
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome criterion9() {
    Check c;
    auto dir = std::filesystem::temp_directory_path() / ("qinv_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::mt19937_64 rng(9009);
    ChemicalGraph g;
    search::Target t;
    while (true) {
        if (!testsupport::random_in_class(rng, kCNO, 11, 12, 2, g)) continue;
        t = search::target_of(g, kCNO);
        if (search::search(search::SearchProblem::make(kCNO, t.x, t.dia, t.bl), {}).graphs.size() >= 3) break;
    }
    auto target = dir / "g.target";
    std::ofstream(target) << search::format_target(t, kCNO);
    std::vector<std::string> outputs;
    for (int run = 0; run < 2; ++run) {
        auto out = dir / ("run" + std::to_string(run) + ".txt");
        std::ostringstream so, se;
        int rc = cli::run({"qinv", "--seed", "42", "--threads", "1", "enumerate", target.string(), "--ub", "50",
                           "--max-output", "20", "--out", out.string()},
                          so, se);
        c.expect(rc == 0, "run " + std::to_string(run) + " exit " + std::to_string(rc) + ": " + se.str());
        outputs.push_back(slurp(out));
    }
    c.expect(!outputs[0].empty(), "empty output");
    c.expect(outputs[0] == outputs[1], "outputs differ");
    std::filesystem::remove_all(dir);
    auto graphs = chem::parse_graphs(outputs[0], kCNO).size();
    return finish(c, std::to_string(graphs) + " graphs, " + std::to_string(outputs[0].size()) + " bytes, identical");
}

}  // namespace

int main() {
    int failed = 0;
    auto report = [&](int id, const Outcome& o) {
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << std::endl;
        failed += !o.pass;
    };
    auto guarded = [](const std::function<Outcome()>& f) -> Outcome {
        try {
            return f();
        } catch (const std::exception& e) {
            return {false, std::string("exception: ") + e.what()};
        }
    };
    double elapsed = 0;
    std::vector<SuiteCase> suite;
    std::string suite_error;
    try {
        suite = run_search_suite(elapsed);
    } catch (const std::exception& e) {
        suite_error = e.what();
    }
    if (suite_error.empty()) {
        report(1, criterion1(suite, elapsed));
        report(2, criterion2(suite));
    } else {
        report(1, {false, "exception: " + suite_error});
        report(2, {false, "exception: " + suite_error});
    }
    report(3, guarded(criterion3));
    report(4, guarded(criterion4));
    report(5, guarded(criterion5));
    report(6, guarded(criterion6));
    report(7, guarded(criterion7));
    report(8, guarded(criterion8));
    report(9, guarded(criterion9));
    return failed == 0 ? 0 : 1;
}
