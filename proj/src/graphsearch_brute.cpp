#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "qinv/graphsearch.hpp"

namespace qinv::search {

using desc::KeyLayout;

namespace {

// Totals (internal plus external) that a growing tree may not exceed.
struct Budget {
    std::vector<int> elem, gamma;
    int deg_at_least[6] = {};
};

// Running totals of one tree, checked against a budget one added leaf at a time.
struct Counts {
    std::vector<int> elem, gamma;
    int ge[6] = {};
};

Counts count(const ChemicalGraph& g, const ChemicalAlphabet& A) {
    Counts c;
    c.elem.assign(static_cast<size_t>(A.size()), 0);
    c.gamma.assign(A.gamma().size(), 0);
    for (int v = 0; v < g.n(); ++v) {
        ++c.elem[static_cast<size_t>(g.label(v))];
        for (int j = 1; j <= std::min(g.degree(v), 5); ++j) ++c.ge[j];
    }
    for (const auto& e : g.edges()) ++c.gamma[static_cast<size_t>(A.gamma_index(g.label(e.u), g.label(e.v), e.m))];
    return c;
}

bool within(const Counts& c, const Budget& b) {
    for (size_t a = 0; a < c.elem.size(); ++a)
        if (c.elem[a] > b.elem[a]) return false;
    for (size_t i = 0; i < c.gamma.size(); ++i)
        if (c.gamma[i] > b.gamma[i]) return false;
    for (int j = 1; j <= 5; ++j)
        if (c.ge[j] > b.deg_at_least[j]) return false;
    return true;
}

// Whether attaching a leaf labelled b to v by a bond of multiplicity q (edge type gi) stays within budget.
bool leaf_within(const Counts& c, const Budget& bud, int dv, int b, int gi) {
    if (c.elem[static_cast<size_t>(b)] + 1 > bud.elem[static_cast<size_t>(b)]) return false;
    if (c.gamma[static_cast<size_t>(gi)] + 1 > bud.gamma[static_cast<size_t>(gi)]) return false;
    if (c.ge[1] + 1 > bud.deg_at_least[1]) return false;
    if (dv + 1 <= 5 && c.ge[dv + 1] + 1 > bud.deg_at_least[dv + 1]) return false;
    return true;
}

// Largest distance from each vertex.
std::vector<int> eccentricities(const ChemicalGraph& g) {
    std::vector<int> ecc(static_cast<size_t>(g.n()), 0), dist(static_cast<size_t>(g.n()));
    std::vector<int> queue(static_cast<size_t>(g.n()));
    for (int s = 0; s < g.n(); ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        size_t head = 0, tail = 0;
        queue[tail++] = s;
        dist[static_cast<size_t>(s)] = 0;
        while (head < tail) {
            int u = queue[head++];
            for (const auto& nb : g.neighbors(u))
                if (dist[static_cast<size_t>(nb.v)] < 0) {
                    dist[static_cast<size_t>(nb.v)] = dist[static_cast<size_t>(u)] + 1;
                    queue[tail++] = nb.v;
                }
        }
        ecc[static_cast<size_t>(s)] = dist[static_cast<size_t>(queue[tail - 1])];
    }
    return ecc;
}

std::vector<ChemicalGraph> grow(const ChemicalAlphabet& A, int n, const BruteOptions& opt, const Budget* budget) {
    if (n > 14) throw std::invalid_argument("brute_force_enumerate is limited to n <= 14");
    std::vector<ChemicalGraph> level;
    if (n < 1) return level;
    for (int a = 0; a < A.size(); ++a) {
        ChemicalGraph g(std::vector<int>{a});
        if (!budget || within(count(g, A), *budget)) level.push_back(g);
    }
    for (int size = 2; size <= n; ++size) {
        std::set<std::string> seen;
        std::vector<ChemicalGraph> next;
        for (const auto& g : level) {
            Counts c = budget ? count(g, A) : Counts{};
            std::vector<int> ecc = eccentricities(g);
            int dia = *std::max_element(ecc.begin(), ecc.end());
            for (int v = 0; v < g.n(); ++v) {
                if (g.degree(v) >= opt.d_max) continue;
                if (opt.max_dia >= 0 && std::max(dia, ecc[static_cast<size_t>(v)] + 1) > opt.max_dia) continue;
                int free = A.val(g.label(v)) - g.bond_sum(v);
                for (int b = 0; b < A.size(); ++b)
                    for (int q = 1; q <= std::min(opt.max_mult, free); ++q) {
                        int gi = A.gamma_index(g.label(v), b, q);
                        if (gi < 0) continue;
                        if (budget && !leaf_within(c, *budget, g.degree(v), b, gi)) continue;
                        ChemicalGraph h = g;
                        h.add_edge(v, h.add_vertex(b), q);
                        if (!seen.insert(chem::canonical_form(h)).second) continue;
                        next.push_back(std::move(h));
                        if (next.size() > opt.cap)
                            throw CapExceeded("brute-force enumeration exceeded " + std::to_string(opt.cap) +
                                              " trees at size " + std::to_string(size));
                    }
            }
        }
        level = std::move(next);
    }
    return level;
}

}  // namespace

std::vector<ChemicalGraph> brute_force_enumerate(const ChemicalAlphabet& alphabet, int n, const BruteOptions& opt) {
    return grow(alphabet, n, opt, nullptr);
}

std::vector<ChemicalGraph> brute_force_enumerate(const ChemicalAlphabet& alphabet, const FrequencyVector& x,
                                                 const BruteOptions& opt) {
    KeyLayout L(alphabet);
    if (static_cast<int>(x.in.size()) != L.size()) throw std::invalid_argument("target vector has the wrong dimension");
    Budget b;
    int n = 0;
    for (int a = 0; a < L.n_elem; ++a) {
        b.elem.push_back(x.in[L.elem(a)] + x.ex[L.elem(a)]);
        n += b.elem.back();
    }
    for (int i = 0; i < L.n_gamma; ++i) b.gamma.push_back(x.in[L.gamma(i)] + x.ex[L.gamma(i)]);
    for (int j = 1; j <= 4; ++j)
        for (int d = j; d <= 4; ++d) b.deg_at_least[j] += x.in[L.dg(d)] + x.ex[L.dg(d)];
    std::vector<ChemicalGraph> out;
    for (auto& g : grow(alphabet, n, opt, &b))
        if (desc::to_frequency(desc::feature_vector(g, alphabet, 2), alphabet) == x) out.push_back(std::move(g));
    return out;
}

Target target_of(const ChemicalGraph& g, const ChemicalAlphabet& alphabet) {
    auto f = desc::feature_vector(g, alphabet, 2);
    return Target{desc::to_frequency(f, alphabet), f.dia, f.bl};
}

std::string format_target(const Target& t, const ChemicalAlphabet& alphabet) {
    KeyLayout L(alphabet);
    std::ostringstream os;
    os << "dia " << t.dia << "\n";
    os << "bl " << t.bl << "\n";
    for (int side = 0; side < 2; ++side) {
        const auto& v = side == 0 ? t.x.in : t.x.ex;
        for (int i = 0; i < L.size(); ++i)
            if (v[static_cast<size_t>(i)] != 0)
                os << (side == 0 ? "in " : "ex ") << L.key_name(i, alphabet) << " " << v[static_cast<size_t>(i)] << "\n";
    }
    return os.str();
}

Target parse_target(const std::string& text, const ChemicalAlphabet& alphabet) {
    KeyLayout L(alphabet);
    std::map<std::string, int> index;
    for (int i = 0; i < L.size(); ++i) index[L.key_name(i, alphabet)] = i;
    Target t;
    t.x = FrequencyVector(L.size());
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool have_dia = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        auto fail = [&](const std::string& msg) {
            throw SearchError("target line " + std::to_string(line_no) + ": " + msg);
        };
        if (tag == "dia" || tag == "bl") {
            int v;
            if (!(ls >> v) || v < 0) fail("expected a non-negative integer after " + tag);
            (tag == "dia" ? t.dia : t.bl) = v;
            have_dia = have_dia || tag == "dia";
        } else if (tag == "in" || tag == "ex") {
            std::string key;
            int v;
            if (!(ls >> key >> v)) fail("expected '<in|ex> <key> <count>'");
            auto it = index.find(key);
            if (it == index.end()) fail("unknown key '" + key + "'");
            if (v < 0) fail("negative count for " + key);
            (tag == "in" ? t.x.in : t.x.ex)[static_cast<size_t>(it->second)] = v;
        } else {
            fail("unknown tag '" + tag + "'");
        }
        std::string extra;
        if (ls >> extra) fail("trailing text '" + extra + "'");
    }
    if (!have_dia) throw SearchError("target is missing the 'dia' line");
    return t;
}

}  // namespace qinv::search
