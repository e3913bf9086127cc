#pragma once

#include <string>
#include <vector>

#include "qinv/milp.hpp"

namespace qinv::milp::detail {

template <typename... Ts>
std::string nm(const std::string& prefix, Ts... idx) {
    std::string s = prefix;
    ((s += "_" + std::to_string(idx)), ...);
    return s;
}

// Vertex (p, i) of the scheme graph: p <= s* is u_{p,i}, otherwise v_{p-s*,i}.
struct Slot {
    int p = 0, i = 0;
};

inline std::string used_name(const SchemeGraph& sg, Slot x) {
    return x.p <= sg.s_star ? nm("u", x.p, x.i) : nm("v", x.p - sg.s_star, x.i);
}

inline int tree_size(const SchemeGraph& sg, int p) { return p <= sg.s_star ? sg.n_tree_S : sg.n_tree_T; }

inline const RootedTreeTemplate& tree_of(const SchemeGraph& sg, int p) {
    return p <= sg.s_star ? sg.s_tree : sg.t_tree;
}

enum class EdgeKind { Base, Link, Hat, Tree };

// An edge of the scheme graph that can carry a bond.
struct EdgeRef {
    EdgeKind kind;
    std::string tag;   // a3, e5, h2_4, t7_3
    std::string beta;  // multiplicity variable
    Slot tail, head;
    bool internal;
};

inline std::vector<EdgeRef> scheme_edges(const SchemeGraph& sg) {
    std::vector<EdgeRef> out;
    int S = sg.s_star, T = sg.t_star;
    for (int i = 1; i <= sg.c_star; ++i)
        out.push_back({EdgeKind::Base, "a" + std::to_string(i), nm("ba", i), {sg.tail[i], 1}, {sg.head[i], 1}, true});
    for (int t = 2; t <= T; ++t)
        out.push_back({EdgeKind::Link, "e" + std::to_string(t), nm("be", t), {S + t - 1, 1}, {S + t, 1}, true});
    for (int s = 1; s <= S; ++s)
        for (int t = 1; t <= T; ++t)
            out.push_back({EdgeKind::Hat, "h" + std::to_string(s) + "_" + std::to_string(t), nm("bst", s, t), {s, 1},
                           {S + t, 1}, true});
    for (int p = 1; p <= S + T; ++p) {
        const auto& tr = tree_of(sg, p);
        for (int i = 2; i <= tree_size(sg, p); ++i)
            out.push_back({EdgeKind::Tree, "t" + std::to_string(p) + "_" + std::to_string(i), nm("bt", p, i),
                           {p, tr.prt[static_cast<size_t>(i)]}, {p, i}, false});
    }
    return out;
}

// Ordered adjacency tuples over element codes (0 = null): proper tuples in both orientations,
// then every (a, b, 0).
struct OrderedTuple {
    int a, b, m;
    int gamma;  // index into alphabet.gamma(), -1 for m = 0
};

inline std::vector<OrderedTuple> ordered_tuples(const ChemicalAlphabet& A) {
    std::vector<OrderedTuple> out;
    const auto& G = A.gamma();
    for (size_t j = 0; j < G.size(); ++j) {
        out.push_back({G[j].a + 1, G[j].b + 1, G[j].m, static_cast<int>(j)});
        if (G[j].a != G[j].b) out.push_back({G[j].b + 1, G[j].a + 1, G[j].m, static_cast<int>(j)});
    }
    for (int a = 0; a <= A.size(); ++a)
        for (int b = 0; b <= A.size(); ++b) out.push_back({a, b, 0, -1});
    return out;
}

// Where each serialized descriptor comes from in the model.
struct InputSource {
    enum Kind { Constant, Var, MassRatio, DiaRatio } kind;
    std::string var;
    desc::Rational value;
};

std::vector<InputSource> input_sources(const TargetSpec& spec);

}  // namespace qinv::milp::detail
