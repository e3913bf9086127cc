#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qinv/chemgraph.hpp"

namespace qinv::data {

using chem::ChemicalAlphabet;
using chem::ChemicalGraph;

struct Rejection {
    int record = 0;  // 0-based position in the input
    std::string title;
    std::string reason;
};

struct IngestResult {
    std::vector<ChemicalGraph> graphs;
    std::vector<std::string> titles;
    std::vector<int> records;  // input position of each graph
    std::vector<Rejection> skipped;
};

// V2000 connection tables separated by "$$$$". Hydrogens are removed, bond
// orders 1-3 become multiplicities. Charged records, elements outside the
// alphabet and corrupt blocks are skipped with a reason.
IngestResult ingest_sdf(std::string_view text, const ChemicalAlphabet& alphabet);

// V2000 record with zero coordinates; inverse of ingest_sdf on hydrogen-free graphs.
std::string write_sdf(const ChemicalGraph& g, const ChemicalAlphabet& alphabet, const std::string& title = "");

struct FilterResult {
    std::vector<ChemicalGraph> accepted;
    std::vector<int> accepted_index;
    std::vector<Rejection> rejected;
};

// Keeps acyclic, connected graphs over the alphabet with more than three
// carbon atoms and no valence overflow.
FilterResult stage1_filter(const std::vector<ChemicalGraph>& graphs, const ChemicalAlphabet& alphabet);

using Histogram = std::map<int, long long>;

struct CorpusStats {
    long long graphs = 0;
    std::map<int, Histogram> bl, bh;  // per k
    Histogram max_degree;
    Histogram bt_root_degree;          // root degree of the 2-branch-tree, center pair contracted
    Histogram fringe_total, fringe_ok;  // 2-fringe-trees by root children; ok means n <= 2d + 2
    long long graphs_fringe_ok = 0;     // graphs all of whose 2-fringe-trees are ok

    // Fraction of graphs with bh_k <= h.
    double bh_at_most(int k, int h) const;
    double fraction(const Histogram& hist, int key) const;
    // Fraction of 2-fringe-trees with d root children that have at most 2d + 2 vertices.
    double fringe_ratio(int d) const;
};

CorpusStats corpus_stats(const std::vector<ChemicalGraph>& graphs, const std::vector<int>& ks);

// Rows "section,k,key,count,ratio".
std::string stats_csv(const CorpusStats& s);
std::string stats_table(const CorpusStats& s);

}  // namespace qinv::data
