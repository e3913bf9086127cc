#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "qinv/dataset.hpp"
#include "qinv/graphsearch.hpp"
#include "support.hpp"

using namespace qinv;
using chem::ChemicalAlphabet;
using chem::ChemicalGraph;

namespace {

const ChemicalAlphabet kCNO = ChemicalAlphabet::cno();

// Ethanol with explicit hydrogens.
const char* kEthanol = R"(ethanol
  hand

  9  8  0  0  0  0  0  0  0  0999 V2000
   -0.8900    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    0.6200    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.1000    1.3300    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0
   -1.2500   -1.0200    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0
   -1.2500    0.5100    0.8800 H   0  0  0  0  0  0  0  0  0  0  0  0
   -1.2500    0.5100   -0.8800 H   0  0  0  0  0  0  0  0  0  0  0  0
    0.9800   -0.5100    0.8800 H   0  0  0  0  0  0  0  0  0  0  0  0
    0.9800   -0.5100   -0.8800 H   0  0  0  0  0  0  0  0  0  0  0  0
    2.0700    1.3300    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0
  2  3  1  0
  1  4  1  0
  1  5  1  0
  1  6  1  0
  2  7  1  0
  2  8  1  0
  3  9  1  0
M  END
> <NAME>
ethanol

$$$$
)";

// Acetate anion, charge given on an M  CHG line.
const char* kAcetate = R"(acetate
  hand

  4  3  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.5000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    2.1000    1.1000    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0
    2.1000   -1.1000    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0
  2  3  2  0
  2  4  1  0
M  CHG  1   4  -1
M  END
$$$$
)";

// Methylammonium, charge given in the atom block only.
const char* kAmmonium = R"(methylammonium
  hand

  2  1  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.5000    0.0000    0.0000 N   0  3  0  0  0  0  0  0  0  0  0  0
  1  2  1  0
M  END
$$$$
)";

const char* kChloro = R"(chloromethane
  hand

  2  1  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.8000    0.0000    0.0000 Cl  0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0
M  END
$$$$
)";

const char* kCorrupt = R"(broken
  hand

  3  2  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
$$$$
)";

ChemicalGraph chain(int n, int label = 0) {
    ChemicalGraph g(std::vector<int>(n, label));
    for (int i = 0; i + 1 < n; ++i) g.add_edge(i, i + 1, 1);
    return g;
}

// Root degree of the 2-branch-tree from the definitional branch sets: branches
// whose path to the nearest root vertex passes no other branch.
int oracle_root_degree(const ChemicalGraph& g) {
    auto r = testsupport::definitional_branches(g, 2);
    auto d = testsupport::all_pairs(g);
    std::set<int> branches(r.leaf);
    branches.insert(r.nonleaf.begin(), r.nonleaf.end());
    for (int c : r.roots) branches.erase(c);
    int deg = 0;
    for (int b : branches) {
        int root = *r.roots.begin();
        for (int c : r.roots)
            if (d[b][c] < d[b][root]) root = c;
        auto path = testsupport::tree_path(d, g, b, root);
        bool direct = true;
        for (size_t i = 1; i + 1 < path.size(); ++i)
            if (branches.count(path[i]) || r.roots.count(path[i])) direct = false;
        if (direct) ++deg;
    }
    return deg;
}

}  // namespace

TEST_CASE("ingesting hand-written records") {
    auto r = data::ingest_sdf(kEthanol, kCNO);
    REQUIRE(r.graphs.size() == 1);
    const auto& g = r.graphs[0];
    CHECK(g.n() == 3);
    CHECK(g.label(0) == kCNO.index_of("C"));
    CHECK(g.label(1) == kCNO.index_of("C"));
    CHECK(g.label(2) == kCNO.index_of("O"));
    REQUIRE(g.num_edges() == 2);
    for (const auto& e : g.edges()) CHECK(e.m == 1);
    CHECK(r.titles[0] == "ethanol");
    CHECK(r.skipped.empty());

    std::string batch = std::string(kAcetate) + kCorrupt + kChloro + kAmmonium + kEthanol;
    auto b = data::ingest_sdf(batch, kCNO);
    REQUIRE(b.graphs.size() == 1);
    CHECK(b.records == std::vector<int>{4});
    REQUIRE(b.skipped.size() == 4);
    CHECK(b.skipped[0].title == "acetate");
    CHECK(b.skipped[0].reason == "charged element");
    CHECK(b.skipped[1].reason == "truncated atom or bond block");
    CHECK(b.skipped[2].reason == "element Cl outside the alphabet");
    CHECK(b.skipped[3].reason == "charged element");
    CHECK(data::ingest_sdf("", kCNO).graphs.empty());
}

TEST_CASE("sdf and graph text round trips") {
    std::mt19937_64 rng(3);
    std::string batch;
    std::vector<ChemicalGraph> src;
    for (int i = 0; i < 40; ++i) {
        int n = std::uniform_int_distribution<int>(1, 25)(rng);
        auto g = testsupport::random_tree(rng, n, 4);
        if (!testsupport::decorate(rng, g, kCNO)) continue;
        src.push_back(g);
        batch += data::write_sdf(g, kCNO, "g" + std::to_string(i));
    }
    auto r = data::ingest_sdf(batch, kCNO);
    REQUIRE(r.graphs.size() == src.size());
    std::string text;
    for (size_t i = 0; i < src.size(); ++i) {
        CHECK(testsupport::iso_key(r.graphs[i]) == testsupport::iso_key(src[i]));
        text += chem::format_graph(r.graphs[i], kCNO) + "\n";
    }
    auto back = chem::parse_graphs(text, kCNO);
    REQUIRE(back.size() == src.size());
    for (size_t i = 0; i < src.size(); ++i) CHECK(testsupport::iso_key(back[i]) == testsupport::iso_key(src[i]));
}

TEST_CASE("stage-1 filter rules") {
    auto propane = chain(3), butane = chain(4);
    auto ring = chain(6);
    ring.add_edge(5, 0, 1);
    auto split = chain(4);
    split.add_vertex(0);
    ChemicalGraph over(std::vector<int>{0, 0, 0, 0, 2});
    over.add_edge(0, 1, 1);
    over.add_edge(1, 2, 1);
    over.add_edge(2, 3, 1);
    over.add_edge(3, 4, 3);  // O with a triple bond
    ChemicalGraph foreign(std::vector<int>{0, 0, 0, 0, 5});
    for (int i = 0; i < 4; ++i) foreign.add_edge(i, i + 1, 1);
    auto amine = chain(5);
    amine.set_label(4, kCNO.index_of("N"));

    std::vector<ChemicalGraph> all{propane, butane, ring, split, over, foreign, amine};
    auto r = data::stage1_filter(all, kCNO);
    CHECK(r.accepted_index == std::vector<int>{1, 6});
    REQUIRE(r.rejected.size() == 5);
    CHECK(r.rejected[0].reason == "at most three carbon atoms");
    CHECK(r.rejected[1].reason == "cyclic");
    CHECK(r.rejected[2].reason == "disconnected");
    CHECK(r.rejected[3].reason == "valence mismatch");
    CHECK(r.rejected[4].reason == "element outside the alphabet");

    auto again = data::stage1_filter(r.accepted, kCNO);
    CHECK(again.rejected.empty());
    REQUIRE(again.accepted.size() == r.accepted.size());
    for (size_t i = 0; i < again.accepted.size(); ++i)
        CHECK(chem::format_graph(again.accepted[i], kCNO) == chem::format_graph(r.accepted[i], kCNO));
}

TEST_CASE("corpus statistics on decane isomers") {
    auto C = ChemicalAlphabet::from_symbols({"C"});
    search::BruteOptions opt;
    opt.max_mult = 1;
    auto alkanes = search::brute_force_enumerate(C, 10, opt);
    REQUIRE(alkanes.size() == 75);
    auto s = data::corpus_stats(alkanes, {1, 2});
    CHECK(s.graphs == 75);
    data::Histogram bh, bl, rd;
    long long fringe_graphs = 0;
    for (const auto& g : alkanes) {
        auto r = testsupport::definitional_branches(g, 2);
        ++bh[r.bh];
        ++bl[r.bl];
        ++rd[oracle_root_degree(g)];
        // without branches the whole tree, rooted at its first center vertex, is the fringe tree
        bool ok = r.v_in.empty() ? g.n() <= 2 * g.degree(*r.roots.begin()) + 2
                                 : testsupport::definitional_fringe_ok(g, r);
        if (ok) ++fringe_graphs;
    }
    CHECK(s.bh.at(2) == bh);
    CHECK(s.bl.at(2) == bl);
    CHECK(s.bt_root_degree == rd);
    CHECK(s.graphs_fringe_ok == fringe_graphs);
    for (const auto& [k, h] : s.bl) {
        long long total = 0;
        for (const auto& [v, n] : h) total += n;
        CHECK(total == 75);
    }
}

TEST_CASE("corpus statistics fixtures") {
    auto s = data::corpus_stats({chain(5)}, {2});
    CHECK(s.bl.at(2).at(0) == 1);
    CHECK(s.fraction(s.bl.at(2), 0) == 1.0);
    CHECK(s.bh_at_most(2, 0) == 1.0);

    std::vector<ChemicalGraph> mixed{chain(1), chain(4), chain(7), chain(9)};
    ChemicalGraph star(std::vector<int>{0, 0, 0, 0, 0});
    for (int i = 1; i < 5; ++i) star.add_edge(0, i, 1);
    mixed.push_back(star);
    auto m = data::corpus_stats(mixed, {1, 2, 3});
    CHECK(m.graphs == 5);
    for (const auto* fam : {&m.bl, &m.bh})
        for (const auto& [k, h] : *fam) {
            long long total = 0;
            for (const auto& [v, n] : h) total += n;
            CHECK(total == 5);
        }
    long long md = 0;
    for (const auto& [v, n] : m.max_degree) md += n;
    CHECK(md == 5);
    CHECK(m.max_degree.at(4) == 1);
    CHECK(m.max_degree.at(0) == 1);

    // ratios in the CSV recomputed from its counts
    std::istringstream csv(data::stats_csv(m));
    std::string line;
    std::getline(csv, line);
    std::map<std::string, long long> fringe_total;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(csv, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string c;
        while (std::getline(ls, c, ',')) cells.push_back(c);
        if (cells.size() == 4) cells.push_back("");
        REQUIRE(cells.size() == 5);
        if (cells[0] == "fringe_total") fringe_total[cells[2]] = std::stoll(cells[3]);
        rows.push_back(cells);
    }
    for (const auto& r : rows) {
        if (r[4].empty() || r[0] == "graphs") continue;
        double want = r[0] == "fringe_ok" ? static_cast<double>(std::stoll(r[3])) / fringe_total.at(r[2])
                                          : static_cast<double>(std::stoll(r[3])) / 5.0;
        CHECK(std::abs(std::stod(r[4]) - want) < 1e-9);
    }
    CHECK_THROWS_AS(data::corpus_stats({[] {
                                            auto g = chain(3);
                                            g.add_edge(2, 0, 1);
                                            return g;
                                        }()},
                                       {2}),
                    std::invalid_argument);
    CHECK(data::stats_table(m).find("graphs: 5") == 0);
}
