#include "qinv/descriptors.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace qinv::desc {

FeatureVector feature_vector(const ChemicalGraph& g, const ChemicalAlphabet& alphabet, int k) {
    if (!g.is_tree()) throw chem::NotATree("feature_vector: input is not a tree");
    auto bd = chem::branch_decomposition(g, k);
    auto dc = chem::diameter_and_center(g);
    FeatureVector f;
    f.k = k;
    f.n = g.n();
    f.dia = dc.dia;
    f.dia_bar = Rational(dc.dia, g.n());
    f.bl = bd.bl;
    f.bh = bd.bh;
    f.ce_in.assign(alphabet.size(), 0);
    f.ce_ex.assign(alphabet.size(), 0);
    f.ac_in.assign(alphabet.gamma().size(), 0);
    f.ac_ex.assign(alphabet.gamma().size(), 0);
    f.bc_in.assign(alphabet.bc().size(), 0);
    f.bc_ex.assign(alphabet.bc().size(), 0);
    long long mass = 0;
    for (int v = 0; v < g.n(); ++v) {
        bool in = bd.internal[v];
        int d = g.degree(v);
        if (d >= 1 && d <= 4) (in ? f.dg_in : f.dg_ex)[d] += 1;
        (in ? f.ce_in : f.ce_ex)[g.label(v)] += 1;
        mass += alphabet.mass10(g.label(v));
    }
    f.ms_bar = Rational(mass, g.n());
    for (int e = 0; e < g.num_edges(); ++e) {
        const auto& ed = g.edge(e);
        bool in = bd.internal[ed.u] && bd.internal[ed.v];
        (in ? f.bd_in : f.bd_ex)[ed.m] += 1;
        int gi = alphabet.gamma_index(g.label(ed.u), g.label(ed.v), ed.m);
        if (gi < 0) throw std::invalid_argument("feature_vector: edge tuple not in Gamma");
        (in ? f.ac_in : f.ac_ex)[gi] += 1;
        int bi = alphabet.bc_index(g.degree(ed.u), g.degree(ed.v), ed.m);
        if (bi >= 0) (in ? f.bc_in : f.bc_ex)[bi] += 1;
    }
    f.n_h = hydrogen_count_ac(f, alphabet);
    if (f.n_h < 0) throw std::invalid_argument("feature_vector: negative hydrogen count");
    return f;
}

int hydrogen_count(const ChemicalGraph& g, const ChemicalAlphabet& alphabet) {
    int s = 0;
    for (int v = 0; v < g.n(); ++v) s += alphabet.val(g.label(v));
    for (const auto& e : g.edges()) s -= 2 * e.m;
    if (s < 0) throw std::invalid_argument("hydrogen_count: negative result, graph violates valence");
    return s;
}

int hydrogen_count_ac(const FeatureVector& f, const ChemicalAlphabet& alphabet) {
    int s = 0;
    for (int a = 0; a < alphabet.size(); ++a) s += alphabet.val(a) * (f.ce_in[a] + f.ce_ex[a]);
    const auto& gam = alphabet.gamma();
    for (size_t i = 0; i < gam.size(); ++i) s -= 2 * gam[i].m * (f.ac_in[i] + f.ac_ex[i]);
    return s;
}

std::vector<std::string> feature_names(const ChemicalAlphabet& alphabet) {
    std::vector<std::string> out{"n"};
    for (const char* t : {"in", "ex"})
        for (int d = 1; d <= 4; ++d) out.push_back("dg" + std::to_string(d) + "_" + t);
    out.insert(out.end(), {"dia_bar", "bl", "bh"});
    for (const char* t : {"in", "ex"})
        for (int a = 0; a < alphabet.size(); ++a) out.push_back(std::string("ce_") + t + "_" + alphabet.symbol(a));
    out.push_back("ms_bar");
    for (const char* t : {"in", "ex"})
        for (int m = 2; m <= 3; ++m) out.push_back("bd" + std::to_string(m) + "_" + t);
    for (const char* t : {"in", "ex"})
        for (const auto& g : alphabet.gamma()) out.push_back(std::string("ac_") + t + "_" + alphabet.gamma_name(g));
    for (const char* t : {"in", "ex"})
        for (const auto& b : alphabet.bc()) out.push_back(std::string("bc_") + t + "_" + ChemicalAlphabet::bc_name(b));
    out.push_back("nH");
    return out;
}

int descriptor_count(const ChemicalAlphabet& alphabet) { return static_cast<int>(feature_names(alphabet).size()); }

namespace {

template <class F>
void for_each_value(const FeatureVector& f, F&& emit_int, auto&& emit_rat) {
    emit_int(f.n);
    for (int d = 1; d <= 4; ++d) emit_int(f.dg_in[d]);
    for (int d = 1; d <= 4; ++d) emit_int(f.dg_ex[d]);
    emit_rat(f.dia_bar);
    emit_int(f.bl);
    emit_int(f.bh);
    for (int x : f.ce_in) emit_int(x);
    for (int x : f.ce_ex) emit_int(x);
    emit_rat(f.ms_bar);
    for (int m = 2; m <= 3; ++m) emit_int(f.bd_in[m]);
    for (int m = 2; m <= 3; ++m) emit_int(f.bd_ex[m]);
    for (int x : f.ac_in) emit_int(x);
    for (int x : f.ac_ex) emit_int(x);
    for (int x : f.bc_in) emit_int(x);
    for (int x : f.bc_ex) emit_int(x);
    emit_int(f.n_h);
}

}  // namespace

std::vector<double> feature_values(const FeatureVector& f) {
    std::vector<double> out;
    for_each_value(
        f, [&](int x) { out.push_back(x); },
        [&](const Rational& r) { out.push_back(static_cast<double>(r.numerator()) / static_cast<double>(r.denominator())); });
    return out;
}

std::string format_rational(const Rational& r, int digits) {
    long long scale = 1;
    for (int i = 0; i < digits; ++i) scale *= 10;
    long long num = r.numerator(), den = r.denominator();
    bool neg = num < 0;
    if (neg) num = -num;
    // round half up on the magnitude
    __int128 scaled = (static_cast<__int128>(num) * scale * 2 + den) / (2 * static_cast<__int128>(den));
    long long ip = static_cast<long long>(scaled / scale), fp = static_cast<long long>(scaled % scale);
    std::string frac = std::to_string(fp);
    frac.insert(0, static_cast<size_t>(digits) - frac.size(), '0');
    return (neg ? "-" : "") + std::to_string(ip) + (digits > 0 ? "." + frac : "");
}

std::vector<std::string> feature_strings(const FeatureVector& f) {
    std::vector<std::string> out;
    for_each_value(
        f, [&](int x) { out.push_back(std::to_string(x)); },
        [&](const Rational& r) { out.push_back(format_rational(r)); });
    return out;
}

std::string feature_csv(const std::vector<ChemicalGraph>& graphs, const ChemicalAlphabet& alphabet, int k) {
    std::string out;
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
        return s + "\n";
    };
    out += join(feature_names(alphabet));
    for (const auto& g : graphs) out += join(feature_strings(feature_vector(g, alphabet, k)));
    return out;
}

std::string KeyLayout::key_name(int idx, const ChemicalAlphabet& a) const {
    if (idx < n_elem) return a.symbol(idx);
    idx -= n_elem;
    if (idx < n_gamma) return a.gamma_name(a.gamma()[idx]);
    idx -= n_gamma;
    if (idx < n_bc) return "bc" + ChemicalAlphabet::bc_name(a.bc()[idx]);
    idx -= n_bc;
    return "dg" + std::to_string(idx + 1);
}

bool FrequencyVector::leq(const FrequencyVector& o) const {
    for (size_t i = 0; i < in.size(); ++i)
        if (in[i] > o.in[i] || ex[i] > o.ex[i]) return false;
    return true;
}

bool FrequencyVector::nonnegative() const {
    return std::all_of(in.begin(), in.end(), [](int x) { return x >= 0; }) &&
           std::all_of(ex.begin(), ex.end(), [](int x) { return x >= 0; });
}

FrequencyVector& FrequencyVector::operator+=(const FrequencyVector& o) {
    for (size_t i = 0; i < in.size(); ++i) {
        in[i] += o.in[i];
        ex[i] += o.ex[i];
    }
    return *this;
}

FrequencyVector& FrequencyVector::operator-=(const FrequencyVector& o) {
    for (size_t i = 0; i < in.size(); ++i) {
        in[i] -= o.in[i];
        ex[i] -= o.ex[i];
    }
    return *this;
}

FrequencyVector FrequencyVector::project(const std::vector<int>& keys) const {
    FrequencyVector out(static_cast<int>(in.size()));
    for (int k : keys) {
        out.in[k] = in[k];
        out.ex[k] = ex[k];
    }
    return out;
}

FrequencyVector to_frequency(const FeatureVector& f, const ChemicalAlphabet& alphabet) {
    KeyLayout L(alphabet);
    FrequencyVector w(L.size());
    for (int a = 0; a < L.n_elem; ++a) {
        w.in[L.elem(a)] = f.ce_in[a];
        w.ex[L.elem(a)] = f.ce_ex[a];
    }
    for (int i = 0; i < L.n_gamma; ++i) {
        w.in[L.gamma(i)] = f.ac_in[i];
        w.ex[L.gamma(i)] = f.ac_ex[i];
    }
    for (int j = 0; j < L.n_bc; ++j) {
        w.in[L.bc(j)] = f.bc_in[j];
        w.ex[L.bc(j)] = f.bc_ex[j];
    }
    for (int d = 1; d <= 4; ++d) {
        w.in[L.dg(d)] = f.dg_in[d];
        w.ex[L.dg(d)] = f.dg_ex[d];
    }
    return w;
}

namespace {

std::vector<int> path_between(const ChemicalGraph& t, int s, int goal) {
    std::vector<int> par(t.n(), -2);
    std::queue<int> q;
    q.push(s);
    par[s] = -1;
    while (!q.empty()) {
        int v = q.front();
        q.pop();
        for (const auto& nb : t.neighbors(v))
            if (par[nb.v] == -2) {
                par[nb.v] = v;
                q.push(nb.v);
            }
    }
    if (par[goal] == -2) throw std::invalid_argument("fragment terminals are disconnected");
    std::vector<int> p;
    for (int v = goal; v != -1; v = par[v]) p.push_back(v);
    std::reverse(p.begin(), p.end());
    return p;
}

}  // namespace

RootedFragment make_fragment(ChemicalGraph tree, int r1, int r2, int r3) {
    if (!tree.is_tree()) throw chem::NotATree("make_fragment: input is not a tree");
    RootedFragment f;
    f.tree = std::move(tree);
    f.r1 = r1;
    f.r2 = r2;
    f.r3 = r3;
    const auto& t = f.tree;
    f.backbone = path_between(t, r1, r2);
    f.v_in.assign(t.n(), false);
    f.e_in.assign(t.num_edges(), false);
    auto mark = [&](const std::vector<int>& p) {
        for (size_t i = 0; i < p.size(); ++i) {
            f.v_in[p[i]] = true;
            if (i + 1 < p.size())
                for (const auto& nb : t.neighbors(p[i]))
                    if (nb.v == p[i + 1]) f.e_in[nb.edge] = true;
        }
    };
    mark(f.backbone);
    if (r3 >= 0) {
        mark(path_between(t, r3, r1));
        mark(path_between(t, r3, r2));
    }
    return f;
}

FrequencyVector frequency_vector(const RootedFragment& frag, const ChemicalAlphabet& alphabet) {
    KeyLayout L(alphabet);
    FrequencyVector w(L.size());
    const auto& t = frag.tree;
    for (int v = 0; v < t.n(); ++v) {
        auto& side = frag.v_in[v] ? w.in : w.ex;
        side[L.elem(t.label(v))] += 1;
        int d = t.degree(v);
        if (d >= 1 && d <= 4) side[L.dg(d)] += 1;
    }
    for (int e = 0; e < t.num_edges(); ++e) {
        const auto& ed = t.edge(e);
        auto& side = frag.e_in[e] ? w.in : w.ex;
        int gi = alphabet.gamma_index(t.label(ed.u), t.label(ed.v), ed.m);
        if (gi >= 0) side[L.gamma(gi)] += 1;
        int bi = alphabet.bc_index(t.degree(ed.u), t.degree(ed.v), ed.m);
        if (bi >= 0) side[L.bc(bi)] += 1;
    }
    return w;
}

FrequencyVector apply_adjust(const FrequencyVector& w, const RootedFragment& frag, const ChemicalAlphabet& alphabet,
                             Adjust mode, int sign) {
    KeyLayout L(alphabet);
    const auto& t = frag.tree;
    int v = mode == Adjust::Joint1 ? frag.r3 : frag.r1;
    if (v < 0) throw std::invalid_argument("fictitious_adjust: fragment has no joint terminal");
    int p = mode == Adjust::Plus2 ? 2 : mode == Adjust::Plus3 ? 3 : 1;
    int d = t.degree(v);
    if (d + p > 4) throw std::invalid_argument("fictitious_adjust: degree overflow beyond 4");
    FrequencyVector out = w;
    auto& vs = frag.v_in[v] ? out.in : out.ex;
    if (d >= 1) vs[L.dg(d)] -= sign;
    vs[L.dg(d + p)] += sign;
    for (const auto& nb : t.neighbors(v)) {
        int m = t.edge(nb.edge).m, dw = t.degree(nb.v);
        auto& es = frag.e_in[nb.edge] ? out.in : out.ex;
        int before = alphabet.bc_index(d, dw, m), after = alphabet.bc_index(d + p, dw, m);
        if (before >= 0) es[L.bc(before)] -= sign;
        if (after >= 0) es[L.bc(after)] += sign;
    }
    return out;
}

FrequencyVector fictitious_adjust(const RootedFragment& frag, const ChemicalAlphabet& alphabet, Adjust mode) {
    return apply_adjust(frequency_vector(frag, alphabet), frag, alphabet, mode, +1);
}

}  // namespace qinv::desc
