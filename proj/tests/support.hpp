// Test-side helpers: random generators and brute-force oracles that do not
// call into the library routines they are used to check.
#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "qinv/chemgraph.hpp"

namespace testsupport {

using qinv::chem::ChemicalAlphabet;
using qinv::chem::ChemicalGraph;

// Uniform random attachment tree with shuffled vertex order; max_deg <= 0 means unbounded.
inline ChemicalGraph random_tree(std::mt19937_64& rng, int n, int max_deg = 0, int label = 0) {
    std::vector<int> parent(n, -1), deg(n, 0);
    for (int i = 1; i < n; ++i) {
        int p;
        do {
            p = std::uniform_int_distribution<int>(0, i - 1)(rng);
        } while (max_deg > 0 && deg[p] >= max_deg);
        parent[i] = p;
        ++deg[p];
        ++deg[i];
    }
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ChemicalGraph g(std::vector<int>(n, label));
    for (int i = 1; i < n; ++i) g.add_edge(perm[i], perm[parent[i]], 1);
    return g;
}

// Labels a skeleton with random elements and multiplicities while keeping
// every valence and Gamma condition; retries a bounded number of times.
inline bool decorate(std::mt19937_64& rng, ChemicalGraph& skel, const ChemicalAlphabet& alph,
                     double multi_bond_prob = 0.3) {
    const int n = skel.n();
    for (int attempt = 0; attempt < 50; ++attempt) {
        std::vector<int> lab(n);
        bool ok = true;
        for (int v = 0; v < n; ++v) {
            std::vector<int> fits;
            for (int a = 0; a < alph.size(); ++a)
                if (alph.val(a) >= skel.degree(v)) fits.push_back(a);
            if (fits.empty()) {
                ok = false;
                break;
            }
            lab[v] = fits[std::uniform_int_distribution<size_t>(0, fits.size() - 1)(rng)];
        }
        if (!ok) continue;
        ChemicalGraph g(lab);
        std::vector<int> used(n);
        for (int v = 0; v < n; ++v) used[v] = skel.degree(v);
        std::vector<int> order(skel.num_edges());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<int> mult(skel.num_edges(), 1);
        for (int e : order) {
            const auto& ed = skel.edge(e);
            if (std::uniform_real_distribution<double>(0, 1)(rng) >= multi_bond_prob) continue;
            int extra = std::uniform_int_distribution<int>(1, 2)(rng);
            while (extra > 0) {
                int m = 1 + extra;
                if (used[ed.u] + extra <= alph.val(lab[ed.u]) && used[ed.v] + extra <= alph.val(lab[ed.v]) &&
                    alph.gamma_index(lab[ed.u], lab[ed.v], m) >= 0)
                    break;
                --extra;
            }
            if (extra > 0) {
                mult[e] += extra;
                used[ed.u] += extra;
                used[ed.v] += extra;
            }
        }
        for (int e = 0; e < skel.num_edges(); ++e) {
            const auto& ed = skel.edge(e);
            if (alph.gamma_index(lab[ed.u], lab[ed.v], mult[e]) < 0) ok = false;
            g.add_edge(ed.u, ed.v, mult[e]);
        }
        if (!ok) continue;
        skel = g;
        return true;
    }
    return false;
}

inline std::vector<std::vector<int>> all_pairs(const ChemicalGraph& g) {
    int n = g.n();
    std::vector<std::vector<int>> d(n, std::vector<int>(n, -1));
    for (int s = 0; s < n; ++s) {
        std::queue<int> q;
        q.push(s);
        d[s][s] = 0;
        while (!q.empty()) {
            int v = q.front();
            q.pop();
            for (const auto& nb : g.neighbors(v))
                if (d[s][nb.v] < 0) {
                    d[s][nb.v] = d[s][v] + 1;
                    q.push(nb.v);
                }
        }
    }
    return d;
}

// Vertex sequence of the unique tree path from s to t.
inline std::vector<int> tree_path(const std::vector<std::vector<int>>& d, const ChemicalGraph& g, int s, int t) {
    std::vector<int> p{s};
    while (p.back() != t) {
        int v = p.back();
        for (const auto& nb : g.neighbors(v))
            if (d[nb.v][t] == d[v][t] - 1) {
                p.push_back(nb.v);
                break;
            }
    }
    return p;
}

struct DefinitionalBranches {
    int dia = 0;
    std::set<int> roots;
    std::vector<int> height;
    std::set<int> leaf, nonleaf;
    std::set<int> v_in;
    std::set<std::pair<int, int>> e_in;
    int bl = 0, bh = 0;
};

// Evaluates the k-branch notions straight from their definitions using
// all-pairs distances (centers from eccentricities, descendants from
// distance additivity, branch-paths from pairwise path scans).
inline DefinitionalBranches definitional_branches(const ChemicalGraph& g, int k) {
    DefinitionalBranches r;
    int n = g.n();
    auto d = all_pairs(g);
    std::vector<int> ecc(n, 0);
    for (int v = 0; v < n; ++v) ecc[v] = *std::max_element(d[v].begin(), d[v].end());
    r.dia = *std::max_element(ecc.begin(), ecc.end());
    int rad = *std::min_element(ecc.begin(), ecc.end());
    for (int v = 0; v < n; ++v)
        if (ecc[v] == rad) r.roots.insert(v);
    auto rootdist = [&](int w) {
        int best = n;
        for (int c : r.roots) best = std::min(best, d[c][w]);
        return best;
    };
    auto is_desc = [&](int w, int v) { return rootdist(w) == rootdist(v) + d[v][w]; };
    r.height.assign(n, 0);
    for (int v = 0; v < n; ++v)
        for (int w = 0; w < n; ++w)
            if (is_desc(w, v)) r.height[v] = std::max(r.height[v], d[v][w]);
    for (int v = 0; v < n; ++v) {
        if (!r.roots.count(v) && r.height[v] == k) r.leaf.insert(v);
        int tall = 0;
        for (int w = 0; w < n; ++w)
            if (d[v][w] == 1 && is_desc(w, v) && r.height[w] >= k) ++tall;
        if (tall >= 2) r.nonleaf.insert(v);
    }
    r.bl = static_cast<int>(r.leaf.size());
    auto special = [&](int v) { return r.roots.count(v) || r.leaf.count(v) || r.nonleaf.count(v); };
    for (int u = 0; u < n; ++u)
        for (int w = u + 1; w < n; ++w) {
            if (!special(u) || !special(w)) continue;
            if (r.roots.count(u) && r.roots.count(w)) continue;  // the center pair acts as one root
            auto p = tree_path(d, g, u, w);
            bool clean = true;
            for (size_t i = 1; i + 1 < p.size(); ++i)
                if (special(p[i])) clean = false;
            if (!clean) continue;
            for (size_t i = 0; i + 1 < p.size(); ++i) {
                r.e_in.insert({std::min(p[i], p[i + 1]), std::max(p[i], p[i + 1])});
                r.v_in.insert(p[i]);
                r.v_in.insert(p[i + 1]);
            }
        }
    if (!r.e_in.empty() && r.roots.size() == 2) {
        int a = *r.roots.begin(), b = *r.roots.rbegin();
        r.e_in.insert({a, b});
        r.v_in.insert(a);
        r.v_in.insert(b);
    }
    for (int w = 0; w < n; ++w) {
        int best_root = -1;
        for (int c : r.roots)
            if (d[c][w] == rootdist(w)) best_root = c;
        auto p = tree_path(d, g, best_root, w);
        int cnt = 0;
        for (int x : p)
            if (!r.roots.count(x) && (r.leaf.count(x) || r.nonleaf.count(x))) ++cnt;
        r.bh = std::max(r.bh, cnt);
    }
    return r;
}

// Isomorphism key for labeled trees: the smallest nested-bracket string over all roots,
// children sorted by their own strings.
inline std::string iso_key(const ChemicalGraph& g) {
    std::function<std::string(int, int, int)> enc = [&](int v, int from, int m) {
        std::vector<std::string> kids;
        for (const auto& nb : g.neighbors(v))
            if (nb.v != from) kids.push_back(enc(nb.v, v, g.edge(nb.edge).m));
        std::sort(kids.begin(), kids.end());
        std::string s = "(" + std::to_string(m) + ":" + std::to_string(g.label(v));
        for (const auto& k : kids) s += k;
        return s + ")";
    };
    std::string best;
    for (int r = 0; r < g.n(); ++r) {
        auto s = enc(r, -1, 0);
        if (best.empty() || s < best) best = s;
    }
    return best;
}

}  // namespace testsupport

namespace testsupport {

// Nested-bracket string of the subtree at v, treating `from` as its parent.
inline std::string rooted_key(const ChemicalGraph& g, int v, int from = -1, int m = 0) {
    std::vector<std::string> kids;
    for (const auto& nb : g.neighbors(v))
        if (nb.v != from) kids.push_back(rooted_key(g, nb.v, v, g.edge(nb.edge).m));
    std::sort(kids.begin(), kids.end());
    std::string s = "(" + std::to_string(m) + ":" + std::to_string(g.label(v));
    for (const auto& k : kids) s += k;
    return s + ")";
}

// Every 2-fringe-tree (internal vertex plus its external descendants) has n <= 2d + 2.
inline bool definitional_fringe_ok(const ChemicalGraph& g, const DefinitionalBranches& r) {
    for (int v : r.v_in) {
        int n = 1, d = 0;
        std::vector<int> stack;
        std::set<int> seen{v};
        for (const auto& nb : g.neighbors(v))
            if (!r.v_in.count(nb.v)) {
                ++d;
                stack.push_back(nb.v);
                seen.insert(nb.v);
            }
        while (!stack.empty()) {
            int w = stack.back();
            stack.pop_back();
            ++n;
            for (const auto& nb : g.neighbors(w))
                if (!seen.count(nb.v) && !r.v_in.count(nb.v)) {
                    seen.insert(nb.v);
                    stack.push_back(nb.v);
                }
        }
        if (n > 2 * d + 2) return false;
    }
    return true;
}

}  // namespace testsupport
