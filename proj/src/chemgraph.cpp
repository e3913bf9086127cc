#include "qinv/chemgraph.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>

namespace qinv::chem {

namespace {

struct KnownElement {
    const char* symbol;
    int val;
    double mass;
};

constexpr KnownElement kElementTable[] = {
    {"B", 3, 10.81},   {"C", 4, 12.011},  {"N", 3, 14.007}, {"O", 2, 15.999},
    {"F", 1, 18.998},  {"Si", 4, 28.086}, {"P", 3, 30.974}, {"S", 2, 32.06},
    {"Cl", 1, 35.45},  {"Br", 1, 79.904}, {"I", 1, 126.904},
};

}  // namespace

ChemicalAlphabet::ChemicalAlphabet(std::vector<Element> elems) : elems_(std::move(elems)) {
    std::stable_sort(elems_.begin(), elems_.end(),
                     [](const Element& x, const Element& y) { return x.mass10 < y.mass10; });
    for (size_t i = 0; i < elems_.size(); ++i) {
        if (elems_[i].val < 1 || elems_[i].val > 4)
            throw std::invalid_argument("valence of " + elems_[i].symbol + " outside [1,4]");
        for (size_t j = 0; j < i; ++j)
            if (elems_[j].symbol == elems_[i].symbol)
                throw std::invalid_argument("duplicate element " + elems_[i].symbol);
    }
    int na = size();
    for (int a = 0; a < na; ++a)
        for (int b = a; b < na; ++b)
            for (int m = 1; m <= 3; ++m)
                if (proper(a, b, m)) {
                    gamma_idx_[{a, b, m}] = static_cast<int>(gamma_.size());
                    gamma_.push_back({a, b, m});
                }
    for (int d1 = 1; d1 <= 4; ++d1)
        for (int d2 = d1; d2 <= 4; ++d2)
            for (int m = 1; m <= 3; ++m)
                if (d2 + m <= 4) bc_.push_back({d1, d2, m});
}

ChemicalAlphabet ChemicalAlphabet::from_symbols(const std::vector<std::string>& symbols,
                                                const std::map<std::string, int>& valence_override) {
    std::vector<Element> out;
    for (const auto& s : symbols) {
        const KnownElement* hit = nullptr;
        for (const auto& e : kElementTable)
            if (s == e.symbol) hit = &e;
        if (!hit) throw std::invalid_argument("unknown element symbol " + s);
        Element el{s, hit->val, static_cast<int>(std::floor(10.0 * hit->mass))};
        if (auto it = valence_override.find(s); it != valence_override.end()) el.val = it->second;
        out.push_back(el);
    }
    return ChemicalAlphabet(std::move(out));
}

int ChemicalAlphabet::index_of(std::string_view symbol) const {
    for (int i = 0; i < size(); ++i)
        if (elems_[static_cast<size_t>(i)].symbol == symbol) return i;
    return -1;
}

bool ChemicalAlphabet::proper(int a, int b, int m) const {
    if (a < 0 || b < 0 || a >= size() || b >= size() || m < 1 || m > 3) return false;
    int lo = std::min(val(a), val(b)), hi = std::max(val(a), val(b));
    return m <= lo && m <= hi - 1;
}

std::vector<Gamma> ChemicalAlphabet::gamma_lt() const {
    std::vector<Gamma> out;
    for (const auto& g : gamma_)
        if (g.a < g.b) out.push_back(g);
    return out;
}

std::vector<Gamma> ChemicalAlphabet::gamma_eq() const {
    std::vector<Gamma> out;
    for (const auto& g : gamma_)
        if (g.a == g.b) out.push_back(g);
    return out;
}

int ChemicalAlphabet::gamma_index(int a, int b, int m) const {
    if (a > b) std::swap(a, b);
    auto it = gamma_idx_.find({a, b, m});
    return it == gamma_idx_.end() ? -1 : it->second;
}

int ChemicalAlphabet::bc_index(int d1, int d2, int m) const {
    if (d1 > d2) std::swap(d1, d2);
    for (size_t i = 0; i < bc_.size(); ++i)
        if (bc_[i].d1 == d1 && bc_[i].d2 == d2 && bc_[i].m == m) return static_cast<int>(i);
    return -1;
}

std::string ChemicalAlphabet::gamma_name(const Gamma& g) const {
    return symbol(g.a) + symbol(g.b) + std::to_string(g.m);
}

std::string ChemicalAlphabet::bc_name(const BondConfig& b) {
    return std::to_string(b.d1) + std::to_string(b.d2) + std::to_string(b.m);
}

int ChemicalGraph::add_vertex(int label) {
    labels_.push_back(label);
    adj_.emplace_back();
    return n() - 1;
}

int ChemicalGraph::add_edge(int u, int v, int m) {
    if (u < 0 || v < 0 || u >= n() || v >= n() || u == v)
        throw std::invalid_argument("bad edge endpoints");
    int e = num_edges();
    edges_.push_back({u, v, m});
    adj_[static_cast<size_t>(u)].push_back({v, e});
    adj_[static_cast<size_t>(v)].push_back({u, e});
    return e;
}

int ChemicalGraph::bond_sum(int v) const {
    int s = 0;
    for (const auto& nb : neighbors(v)) s += edges_[static_cast<size_t>(nb.edge)].m;
    return s;
}

bool ChemicalGraph::connected() const {
    if (n() == 0) return true;
    std::vector<char> seen(static_cast<size_t>(n()), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int cnt = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (const auto& nb : neighbors(v))
            if (!seen[static_cast<size_t>(nb.v)]) {
                seen[static_cast<size_t>(nb.v)] = 1;
                ++cnt;
                stack.push_back(nb.v);
            }
    }
    return cnt == n();
}

namespace {

std::string strip_comment(std::string_view line) {
    auto pos = line.find('#');
    return std::string(line.substr(0, pos));
}

std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

int to_int(const std::string& tok, int line_no) {
    size_t used = 0;
    int v = 0;
    try {
        v = std::stoi(tok, &used);
    } catch (const std::exception&) {
        throw ParseError(line_no, "expected integer, got '" + tok + "'");
    }
    if (used != tok.size()) throw ParseError(line_no, "expected integer, got '" + tok + "'");
    return v;
}

struct Line {
    int no;
    std::vector<std::string> tokens;
};

ChemicalGraph parse_block(const std::vector<Line>& block, const ChemicalAlphabet& alphabet) {
    const Line& head = block[0];
    if (head.tokens.size() != 1) throw ParseError(head.no, "expected vertex count");
    int n = to_int(head.tokens[0], head.no);
    if (n < 1) throw ParseError(head.no, "vertex count must be positive");
    if (block.size() < 2) throw ParseError(head.no, "missing element line");
    const Line& syms = block[1];
    if (static_cast<int>(syms.tokens.size()) != n)
        throw ParseError(syms.no, "expected " + std::to_string(n) + " element symbols, got " +
                                      std::to_string(syms.tokens.size()));
    ChemicalGraph g;
    for (const auto& s : syms.tokens) {
        int a = alphabet.index_of(s);
        if (a < 0) throw ParseError(syms.no, "unknown element '" + s + "'");
        g.add_vertex(a);
    }
    for (size_t i = 2; i < block.size(); ++i) {
        const Line& ln = block[i];
        if (ln.tokens.size() != 3) throw ParseError(ln.no, "expected 'u v m'");
        int u = to_int(ln.tokens[0], ln.no), v = to_int(ln.tokens[1], ln.no), m = to_int(ln.tokens[2], ln.no);
        if (u < 1 || u > n || v < 1 || v > n) throw ParseError(ln.no, "vertex index out of range");
        if (u == v) throw ParseError(ln.no, "self-loop");
        if (m < 1 || m > 3) throw ParseError(ln.no, "multiplicity " + std::to_string(m) + " outside [1,3]");
        g.add_edge(u - 1, v - 1, m);
    }
    return g;
}

}  // namespace

std::vector<ChemicalGraph> parse_graphs(std::string_view text, const ChemicalAlphabet& alphabet) {
    std::vector<std::vector<Line>> blocks(1);
    int line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        ++line_no;
        bool comment_only = raw.find('#') != std::string_view::npos;
        auto toks = split_ws(strip_comment(raw));
        if (!toks.empty()) {
            blocks.back().push_back({line_no, std::move(toks)});
        } else if (!comment_only && !blocks.back().empty()) {
            blocks.emplace_back();
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    std::vector<ChemicalGraph> out;
    for (const auto& b : blocks)
        if (!b.empty()) out.push_back(parse_block(b, alphabet));
    return out;
}

ChemicalGraph parse_graph(std::string_view text, const ChemicalAlphabet& alphabet) {
    auto gs = parse_graphs(text, alphabet);
    if (gs.empty()) throw ParseError(1, "no graph found");
    if (gs.size() > 1) throw ParseError(1, "expected one graph, found " + std::to_string(gs.size()));
    return gs.front();
}

std::string format_graph(const ChemicalGraph& g, const ChemicalAlphabet& alphabet) {
    std::string out = std::to_string(g.n()) + "\n";
    for (int v = 0; v < g.n(); ++v) {
        if (v) out += ' ';
        out += alphabet.symbol(g.label(v));
    }
    out += '\n';
    for (const auto& e : g.edges())
        out += std::to_string(e.u + 1) + " " + std::to_string(e.v + 1) + " " + std::to_string(e.m) + "\n";
    return out;
}

std::string ValidityReport::describe() const {
    std::string s;
    auto add = [&](const std::string& x) { s += (s.empty() ? "" : "; ") + x; };
    if (!connected) add("disconnected");
    if (!acyclic) add("cyclic");
    for (int v : valence_overflow) add("valence overflow at vertex " + std::to_string(v + 1));
    for (int e : improper_edges) add("edge " + std::to_string(e + 1) + " tuple not in Gamma");
    return s.empty() ? "valid" : s;
}

ValidityReport validate(const ChemicalGraph& g, const ChemicalAlphabet& alphabet) {
    ValidityReport r;
    r.connected = g.connected();
    // A connected graph is acyclic iff |E| = |V| - 1; in general count components.
    {
        std::vector<int> comp(static_cast<size_t>(g.n()), -1);
        int ncomp = 0;
        for (int s = 0; s < g.n(); ++s) {
            if (comp[static_cast<size_t>(s)] >= 0) continue;
            std::vector<int> st{s};
            comp[static_cast<size_t>(s)] = ncomp;
            while (!st.empty()) {
                int v = st.back();
                st.pop_back();
                for (const auto& nb : g.neighbors(v))
                    if (comp[static_cast<size_t>(nb.v)] < 0) {
                        comp[static_cast<size_t>(nb.v)] = ncomp;
                        st.push_back(nb.v);
                    }
            }
            ++ncomp;
        }
        r.acyclic = g.num_edges() == g.n() - ncomp;
    }
    for (int v = 0; v < g.n(); ++v)
        if (g.bond_sum(v) > alphabet.val(g.label(v))) r.valence_overflow.push_back(v);
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto& ed = g.edge(e);
        if (alphabet.gamma_index(g.label(ed.u), g.label(ed.v), ed.m) < 0) r.improper_edges.push_back(e);
    }
    return r;
}

namespace {

std::vector<int> bfs_dist(const ChemicalGraph& g, int s, std::vector<int>* parent = nullptr) {
    std::vector<int> d(static_cast<size_t>(g.n()), -1);
    if (parent) parent->assign(static_cast<size_t>(g.n()), -1);
    std::queue<int> q;
    d[static_cast<size_t>(s)] = 0;
    q.push(s);
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (const auto& nb : g.neighbors(v))
            if (d[static_cast<size_t>(nb.v)] < 0) {
                d[static_cast<size_t>(nb.v)] = d[static_cast<size_t>(v)] + 1;
                if (parent) (*parent)[static_cast<size_t>(nb.v)] = v;
                q.push(nb.v);
            }
    }
    return d;
}

int farthest(const std::vector<int>& d) {
    return static_cast<int>(std::max_element(d.begin(), d.end()) - d.begin());
}

}  // namespace

DiameterCenter diameter_and_center(const ChemicalGraph& g) {
    if (!g.is_tree()) throw NotATree("diameter_and_center: input is not a tree");
    int x = farthest(bfs_dist(g, 0));
    std::vector<int> par;
    auto dx = bfs_dist(g, x, &par);
    int y = farthest(dx);
    std::vector<int> path{y};
    while (path.back() != x) path.push_back(par[static_cast<size_t>(path.back())]);
    DiameterCenter out;
    out.dia = static_cast<int>(path.size()) - 1;
    if (out.dia % 2 == 0) {
        out.center = {path[static_cast<size_t>(out.dia / 2)]};
    } else {
        int c1 = path[static_cast<size_t>(out.dia / 2)], c2 = path[static_cast<size_t>(out.dia / 2 + 1)];
        out.center = {std::min(c1, c2), std::max(c1, c2)};
    }
    return out;
}

bool BranchDecomposition::is_root(int v) const {
    return std::find(root.begin(), root.end(), v) != root.end();
}

BranchDecomposition branch_decomposition(const ChemicalGraph& g, int k) {
    if (k < 0) throw std::invalid_argument("branch parameter must be non-negative");
    auto dc = diameter_and_center(g);
    const size_t n = static_cast<size_t>(g.n());
    BranchDecomposition bd;
    bd.k = k;
    bd.root = dc.center;
    bd.parent.assign(n, -1);
    bd.depth.assign(n, -1);
    bd.height.assign(n, 0);
    std::vector<int> order;
    std::queue<int> q;
    for (int r : bd.root) {
        bd.depth[static_cast<size_t>(r)] = 0;
        q.push(r);
    }
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        order.push_back(v);
        for (const auto& nb : g.neighbors(v))
            if (bd.depth[static_cast<size_t>(nb.v)] < 0) {
                bd.depth[static_cast<size_t>(nb.v)] = bd.depth[static_cast<size_t>(v)] + 1;
                bd.parent[static_cast<size_t>(nb.v)] = v;
                q.push(nb.v);
            }
    }
    std::vector<std::vector<int>> children(n);
    for (int v : order)
        if (bd.parent[static_cast<size_t>(v)] >= 0) children[static_cast<size_t>(bd.parent[static_cast<size_t>(v)])].push_back(v);
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        for (int c : children[static_cast<size_t>(*it)])
            bd.height[static_cast<size_t>(*it)] = std::max(bd.height[static_cast<size_t>(*it)], bd.height[static_cast<size_t>(c)] + 1);

    std::vector<char> is_branch(n, 0);
    for (int v : order) {
        int tall = 0;
        for (int c : children[static_cast<size_t>(v)])
            if (bd.height[static_cast<size_t>(c)] >= k) ++tall;
        bool root = bd.is_root(v);
        if (!root && bd.height[static_cast<size_t>(v)] == k) {
            bd.leaf_branches.push_back(v);
            is_branch[static_cast<size_t>(v)] = 1;
        } else if (tall >= 2) {
            bd.nonleaf_branches.push_back(v);
            if (!root) is_branch[static_cast<size_t>(v)] = 1;
        }
    }
    bd.bl = static_cast<int>(bd.leaf_branches.size());
    std::sort(bd.leaf_branches.begin(), bd.leaf_branches.end());
    std::sort(bd.nonleaf_branches.begin(), bd.nonleaf_branches.end());

    // Every non-root vertex of height >= k lies on a root-to-leaf-branch path.
    bool any_branch = bd.bl > 0;
    bd.internal.assign(n, false);
    for (int v : order)
        if (any_branch && (bd.is_root(v) || bd.height[static_cast<size_t>(v)] >= k)) bd.internal[static_cast<size_t>(v)] = true;
    for (int v = 0; v < g.n(); ++v) (bd.internal[static_cast<size_t>(v)] ? bd.v_in : bd.v_ex).push_back(v);
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto& ed = g.edge(e);
        bool in = bd.internal[static_cast<size_t>(ed.u)] && bd.internal[static_cast<size_t>(ed.v)];
        (in ? bd.e_in : bd.e_ex).push_back(e);
    }

    auto collect_fringe = [&](int r, bool whole) {
        FringeTree ft;
        ft.root = r;
        std::vector<int> lvl(n, -1);
        std::queue<int> fq;
        fq.push(r);
        lvl[static_cast<size_t>(r)] = 0;
        while (!fq.empty()) {
            int v = fq.front();
            fq.pop();
            ft.vertices.push_back(v);
            ft.height = std::max(ft.height, lvl[static_cast<size_t>(v)]);
            for (const auto& nb : g.neighbors(v)) {
                int w = nb.v;
                if (lvl[static_cast<size_t>(w)] >= 0) continue;
                if (!whole && (bd.internal[static_cast<size_t>(w)] || bd.parent[static_cast<size_t>(w)] != v)) continue;
                lvl[static_cast<size_t>(w)] = lvl[static_cast<size_t>(v)] + 1;
                if (v == r) ++ft.root_children;
                fq.push(w);
            }
        }
        bd.fringe_trees.push_back(std::move(ft));
    };
    if (any_branch) {
        for (int v : order)
            if (bd.internal[static_cast<size_t>(v)]) collect_fringe(v, false);
    } else {
        collect_fringe(bd.root.front(), true);
    }

    std::vector<int> cnt(n, 0), anc(n, -1);
    for (int v : order) {
        int p = bd.parent[static_cast<size_t>(v)];
        if (p < 0) continue;
        cnt[static_cast<size_t>(v)] = cnt[static_cast<size_t>(p)] + is_branch[static_cast<size_t>(v)];
        bool p_node = bd.is_root(p) || is_branch[static_cast<size_t>(p)];
        anc[static_cast<size_t>(v)] = p_node ? p : anc[static_cast<size_t>(p)];
    }
    bd.bh = 0;
    for (int v : order) bd.bh = std::max(bd.bh, cnt[static_cast<size_t>(v)]);
    std::vector<int> node_of(n, -1);
    for (int v : order) {
        if (!bd.is_root(v) && !is_branch[static_cast<size_t>(v)]) continue;
        node_of[static_cast<size_t>(v)] = static_cast<int>(bd.branch_tree_nodes.size());
        bd.branch_tree_nodes.push_back(v);
        int a = bd.is_root(v) ? -1 : anc[static_cast<size_t>(v)];
        bd.branch_tree_parent.push_back(a < 0 ? -1 : node_of[static_cast<size_t>(a)]);
    }
    return bd;
}

std::vector<int> RootedTreeTemplate::leaves() const {
    std::vector<int> out;
    for (int i = 1; i <= n; ++i)
        if (cld[static_cast<size_t>(i)].empty()) out.push_back(i);
    return out;
}

std::vector<int> RootedTreeTemplate::at_depth(int d) const {
    std::vector<int> out;
    for (int i = 1; i <= n; ++i)
        if (depth[static_cast<size_t>(i)] == d) out.push_back(i);
    return out;
}

RootedTreeTemplate tree_template(int a, int b, int c) {
    if (a < 1 || b < 2 || c < 0) throw std::invalid_argument("tree_template requires a>=1, b>=2, c>=0");
    RootedTreeTemplate t;
    t.a = a;
    t.b = b;
    t.c = c;
    t.prt = {0, 0};
    t.depth = {0, 0};
    t.cld.assign(2, {});
    std::vector<int> frontier{1};
    for (int level = 1; level <= c; ++level) {
        std::vector<int> next;
        for (int p : frontier) {
            int fan = p == 1 ? a : b;
            for (int j = 0; j < fan; ++j) {
                int id = static_cast<int>(t.prt.size());
                t.prt.push_back(p);
                t.depth.push_back(level);
                t.cld.emplace_back();
                t.cld[static_cast<size_t>(p)].push_back(id);
                next.push_back(id);
            }
        }
        frontier = std::move(next);
    }
    t.n = static_cast<int>(t.prt.size()) - 1;
    for (int i = 1; i <= t.n; ++i)
        if (!t.cld[static_cast<size_t>(i)].empty()) ++t.n_nonleaf;
    for (int j = 2; j <= t.n; ++j) {
        int p = t.prt[static_cast<size_t>(j)];
        t.p_prc.emplace_back(p, j);
        const auto& sib = t.cld[static_cast<size_t>(p)];
        auto it = std::find(sib.begin(), sib.end(), j);
        if (it != sib.begin()) t.p_prc.emplace_back(*(it - 1), j);
    }
    return t;
}

ChemicalGraph permute(const ChemicalGraph& g, const std::vector<int>& perm) {
    std::vector<int> labels(static_cast<size_t>(g.n()));
    for (int v = 0; v < g.n(); ++v) labels[static_cast<size_t>(perm[static_cast<size_t>(v)])] = g.label(v);
    ChemicalGraph h(labels);
    for (const auto& e : g.edges()) h.add_edge(perm[static_cast<size_t>(e.u)], perm[static_cast<size_t>(e.v)], e.m);
    return h;
}

}  // namespace qinv::chem
