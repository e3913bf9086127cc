#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace qinv::chem {

struct Element {
    std::string symbol;
    int val = 0;
    int mass10 = 0;  // floor(10 * atomic mass)
};

// Adjacency-configuration (a, b, m) over element indices with a <= b.
struct Gamma {
    int a = 0, b = 0, m = 0;
    auto operator<=>(const Gamma&) const = default;
};

// Bond-configuration (d1, d2, m) with d1 <= d2.
struct BondConfig {
    int d1 = 0, d2 = 0, m = 0;
    auto operator<=>(const BondConfig&) const = default;
};

class ChemicalAlphabet {
public:
    ChemicalAlphabet() = default;
    explicit ChemicalAlphabet(std::vector<Element> elems);

    // Builds from symbols using the built-in valence/mass table.
    static ChemicalAlphabet from_symbols(const std::vector<std::string>& symbols,
                                         const std::map<std::string, int>& valence_override = {});
    static ChemicalAlphabet cno() { return from_symbols({"C", "N", "O"}); }

    int size() const { return static_cast<int>(elems_.size()); }
    const std::vector<Element>& elements() const { return elems_; }
    const Element& element(int i) const { return elems_.at(static_cast<size_t>(i)); }
    int val(int i) const { return element(i).val; }
    int mass10(int i) const { return element(i).mass10; }
    const std::string& symbol(int i) const { return element(i).symbol; }
    // -1 if the symbol is not in the alphabet.
    int index_of(std::string_view symbol) const;
    // [a]: positive code of element index i; epsilon is 0.
    static int code(int i) { return i + 1; }

    bool proper(int a, int b, int m) const;
    const std::vector<Gamma>& gamma() const { return gamma_; }
    std::vector<Gamma> gamma_lt() const;
    std::vector<Gamma> gamma_eq() const;
    // Index into gamma() after normalizing a <= b; -1 if not proper.
    int gamma_index(int a, int b, int m) const;

    const std::vector<BondConfig>& bc() const { return bc_; }
    // Index into bc() after normalizing d1 <= d2; -1 outside Bc.
    int bc_index(int d1, int d2, int m) const;

    std::string gamma_name(const Gamma& g) const;
    static std::string bc_name(const BondConfig& b);

private:
    std::vector<Element> elems_;
    std::vector<Gamma> gamma_;
    std::vector<BondConfig> bc_;
    std::map<std::tuple<int, int, int>, int> gamma_idx_;
};

struct Edge {
    int u = 0, v = 0, m = 1;
};

struct Neighbor {
    int v;
    int edge;
};

class ChemicalGraph {
public:
    ChemicalGraph() = default;
    explicit ChemicalGraph(std::vector<int> labels) : labels_(std::move(labels)), adj_(labels_.size()) {}

    int add_vertex(int label);
    int add_edge(int u, int v, int m);

    int n() const { return static_cast<int>(labels_.size()); }
    int num_edges() const { return static_cast<int>(edges_.size()); }
    int label(int v) const { return labels_[static_cast<size_t>(v)]; }
    void set_label(int v, int a) { labels_[static_cast<size_t>(v)] = a; }
    const std::vector<int>& labels() const { return labels_; }
    const std::vector<Edge>& edges() const { return edges_; }
    const Edge& edge(int e) const { return edges_[static_cast<size_t>(e)]; }
    const std::vector<Neighbor>& neighbors(int v) const { return adj_[static_cast<size_t>(v)]; }
    int degree(int v) const { return static_cast<int>(adj_[static_cast<size_t>(v)].size()); }
    // beta(v): sum of incident multiplicities.
    int bond_sum(int v) const;
    int other(int e, int v) const { return edges_[e].u == v ? edges_[e].v : edges_[e].u; }
    bool connected() const;
    bool is_tree() const { return n() > 0 && num_edges() == n() - 1 && connected(); }

private:
    std::vector<int> labels_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Neighbor>> adj_;
};

struct ParseError : std::runtime_error {
    int line;
    ParseError(int line_no, const std::string& msg)
        : std::runtime_error("line " + std::to_string(line_no) + ": " + msg), line(line_no) {}
};

struct NotATree : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

ChemicalGraph parse_graph(std::string_view text, const ChemicalAlphabet& alphabet);
std::vector<ChemicalGraph> parse_graphs(std::string_view text, const ChemicalAlphabet& alphabet);
std::string format_graph(const ChemicalGraph& g, const ChemicalAlphabet& alphabet);

struct ValidityReport {
    bool connected = true;
    bool acyclic = true;
    std::vector<int> valence_overflow;  // vertices with beta(v) > val
    std::vector<int> improper_edges;    // edges whose tuple is not in Gamma
    bool ok() const { return connected && acyclic && valence_overflow.empty() && improper_edges.empty(); }
    std::string describe() const;
};

ValidityReport validate(const ChemicalGraph& g, const ChemicalAlphabet& alphabet);

struct DiameterCenter {
    int dia = 0;
    std::vector<int> center;  // one vertex, or an adjacent pair in index order
};

DiameterCenter diameter_and_center(const ChemicalGraph& g);

struct FringeTree {
    int root = 0;
    std::vector<int> vertices;  // root first, then BFS order
    int height = 0;
    int root_children = 0;
};

struct BranchDecomposition {
    int k = 0;
    std::vector<int> root;  // center vertex or ordered center pair
    std::vector<int> parent;  // -1 for root vertices
    std::vector<int> depth;
    std::vector<int> height;  // height within the center-rooted tree
    std::vector<int> leaf_branches, nonleaf_branches;
    std::vector<int> v_in, v_ex;
    std::vector<int> e_in, e_ex;  // edge indices
    std::vector<bool> internal;   // per vertex
    std::vector<FringeTree> fringe_trees;
    int bl = 0;
    int bh = 0;
    // k-branch-tree: nodes are root vertices and k-branches; node_parent is -1 at roots.
    std::vector<int> branch_tree_nodes;
    std::vector<int> branch_tree_parent;

    bool is_root(int v) const;
};

BranchDecomposition branch_decomposition(const ChemicalGraph& g, int k);

struct RootedTreeTemplate {
    int a = 0, b = 0, c = 0;
    int n = 0;
    int n_nonleaf = 0;
    // 1-based; prt[1] = 0.
    std::vector<int> prt;
    std::vector<std::vector<int>> cld;
    std::vector<int> depth;
    std::vector<std::pair<int, int>> p_prc;

    std::vector<int> leaves() const;
    // Vertices of depth exactly d.
    std::vector<int> at_depth(int d) const;
};

RootedTreeTemplate tree_template(int a, int b, int c);

// AHU-style canonical string of the subtree at root, labels (element, bond to parent).
// If avoid >= 0, the neighbor avoid is treated as the parent of root.
std::string rooted_canonical(const ChemicalGraph& g, int root, int avoid = -1);
// Free-tree canonical form taken at the center; equal strings iff isomorphic.
std::string canonical_form(const ChemicalGraph& g);
// Independent canonization: lexicographic minimum over all roots.
std::string canonical_form_all_roots(const ChemicalGraph& g);

// Vertex v of g becomes perm[v] in the result.
ChemicalGraph permute(const ChemicalGraph& g, const std::vector<int>& perm);

}  // namespace qinv::chem
