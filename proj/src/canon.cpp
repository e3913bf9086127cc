#include <algorithm>

#include "qinv/chemgraph.hpp"

namespace qinv::chem {

namespace {

std::string encode(const ChemicalGraph& g, int v, int parent, int bond) {
    std::vector<std::string> kids;
    for (const auto& nb : g.neighbors(v))
        if (nb.v != parent) kids.push_back(encode(g, nb.v, v, g.edge(nb.edge).m));
    std::sort(kids.begin(), kids.end());
    std::string s = "(" + std::to_string(g.label(v)) + "," + std::to_string(bond);
    for (const auto& k : kids) s += k;
    s += ")";
    return s;
}

}  // namespace

std::string rooted_canonical(const ChemicalGraph& g, int root, int avoid) {
    return encode(g, root, avoid, 0);
}

std::string canonical_form(const ChemicalGraph& g) {
    auto dc = diameter_and_center(g);
    if (dc.center.size() == 1) return "R" + rooted_canonical(g, dc.center[0]);
    int c1 = dc.center[0], c2 = dc.center[1];
    int m = 0;
    for (const auto& nb : g.neighbors(c1))
        if (nb.v == c2) m = g.edge(nb.edge).m;
    auto s1 = rooted_canonical(g, c1, c2), s2 = rooted_canonical(g, c2, c1);
    if (s2 < s1) std::swap(s1, s2);
    return "P" + std::to_string(m) + s1 + s2;
}

std::string canonical_form_all_roots(const ChemicalGraph& g) {
    if (!g.is_tree()) throw NotATree("canonical_form_all_roots: input is not a tree");
    std::string best;
    for (int v = 0; v < g.n(); ++v) {
        auto s = rooted_canonical(g, v);
        if (v == 0 || s < best) best = std::move(s);
    }
    return best;
}

}  // namespace qinv::chem
