#include <algorithm>
#include <limits>

#include "milp_internal.hpp"

namespace qinv::milp {

void TargetSpec::validate() const {
    auto need = [](bool ok, const std::string& what) {
        if (!ok) throw std::invalid_argument("target spec: " + what);
    };
    need(alphabet.size() > 0, "empty alphabet");
    need(n_star >= 3, "n* must be at least 3");
    need(d_max == 3 || d_max == 4, "d_max must be 3 or 4");
    need(dia_star >= 3, "dia* must be at least 3");
    need(k_star >= 1, "k* must be at least 1");
    need(bh_star >= 1, "bh* must be at least 1");
    need(bl_star >= 2, "bl* must be at least 2");
    need(epsilon >= 0.0, "epsilon must be non-negative");
    need(t_star_override >= 0, "t* override must be non-negative");
}

int formula_t_star(const TargetSpec& spec) {
    return spec.n_star - (spec.bh_star - 1) - (spec.k_star + 1) * spec.bl_star;
}

SchemeGraph scheme_graph(const TargetSpec& spec) {
    spec.validate();
    SchemeGraph sg;
    int a = spec.d_max, b = spec.d_max - 1, c = spec.bh_star;
    long long pw = 1;
    for (int i = 0; i < c; ++i) pw *= b;
    sg.s_star = static_cast<int>(a * (pw - 1) / (b - 1) + 1);
    sg.c_star = sg.s_star - 1;
    sg.t_star = spec.t_star_override > 0 ? spec.t_star_override : formula_t_star(spec);
    if (sg.t_star <= 0) throw InfeasibleSpec("t* = " + std::to_string(sg.t_star) + " leaves no room for link vertices");

    sg.base = chem::tree_template(spec.d_max, spec.d_max - 1, spec.bh_star);
    sg.s_tree = chem::tree_template(spec.d_max - 1, spec.d_max - 1, spec.k_star);
    sg.t_tree = chem::tree_template(spec.d_max - 2, spec.d_max - 1, spec.k_star);
    if (sg.base.n != sg.s_star) throw std::logic_error("base tree size disagrees with s*");
    sg.n_tree_S = sg.s_tree.n;
    sg.n_tree_T = sg.t_tree.n;

    int S = sg.s_star;
    sg.head.assign(static_cast<size_t>(S), 0);
    sg.tail.assign(static_cast<size_t>(S), 0);
    sg.e_plus.assign(static_cast<size_t>(S + 1), {});
    sg.e_minus.assign(static_cast<size_t>(S + 1), {});
    sg.e_b.assign(static_cast<size_t>(S + 1), {});
    for (int i = 1; i <= sg.c_star; ++i) {
        int h = i + 1, t = sg.base.prt[static_cast<size_t>(h)];
        sg.head[static_cast<size_t>(i)] = h;
        sg.tail[static_cast<size_t>(i)] = t;
        sg.e_plus[static_cast<size_t>(t)].push_back(i);
        sg.e_minus[static_cast<size_t>(h)].push_back(i);
    }
    for (int s = 1; s <= S; ++s) {
        auto& eb = sg.e_b[static_cast<size_t>(s)];
        eb = sg.e_minus[static_cast<size_t>(s)];
        eb.insert(eb.end(), sg.e_plus[static_cast<size_t>(s)].begin(), sg.e_plus[static_cast<size_t>(s)].end());
        std::sort(eb.begin(), eb.end());
    }
    sg.leaves = sg.base.leaves();
    int s = 1;
    while (!sg.base.cld[static_cast<size_t>(s)].empty()) s = sg.base.cld[static_cast<size_t>(s)].front();
    sg.s_left = s;
    s = 1;
    while (!sg.base.cld[static_cast<size_t>(s)].empty()) s = sg.base.cld[static_cast<size_t>(s)].back();
    sg.s_right = s;
    sg.v_path.assign(static_cast<size_t>(S + 1), {});
    sg.e_path.assign(static_cast<size_t>(S + 1), {});
    for (int x = 2; x <= S; ++x) {
        std::vector<int> vs;
        for (int y = x; y != 1; y = sg.base.prt[static_cast<size_t>(y)]) vs.push_back(y);
        std::reverse(vs.begin(), vs.end());
        sg.v_path[static_cast<size_t>(x)] = vs;
        for (int y : vs) sg.e_path[static_cast<size_t>(x)].push_back(y - 1);
    }
    return sg;
}

void DescriptorBounds::check() const {
    auto one = [](const Range& r, const std::string& what) {
        if (r.lo > r.hi) throw InfeasibleSpec("descriptor bounds: lower bound above upper bound for " + what);
    };
    for (int d = 1; d <= 4; ++d) {
        one(dg_in[d], "dg_in" + std::to_string(d));
        one(dg_ex[d], "dg_ex" + std::to_string(d));
    }
    for (int m = 2; m <= 3; ++m) {
        one(bd_in[m], "bd_in" + std::to_string(m));
        one(bd_ex[m], "bd_ex" + std::to_string(m));
    }
    auto many = [&](const std::vector<Range>& v, const std::string& what) {
        for (size_t i = 0; i < v.size(); ++i) one(v[i], what + "[" + std::to_string(i) + "]");
    };
    many(ce_in, "ce_in");
    many(ce_ex, "ce_ex");
    many(ac_in, "ac_in");
    many(ac_ex, "ac_ex");
    many(bc_in, "bc_in");
    many(bc_ex, "bc_ex");
}

DescriptorBounds open_bounds(const ChemicalAlphabet& alphabet, int n_star) {
    DescriptorBounds b;
    Range vr{0, n_star}, er{0, n_star - 1};
    for (int d = 1; d <= 4; ++d) b.dg_in[d] = b.dg_ex[d] = vr;
    for (int m = 2; m <= 3; ++m) b.bd_in[m] = b.bd_ex[m] = er;
    b.ce_in.assign(static_cast<size_t>(alphabet.size()), vr);
    b.ce_ex = b.ce_in;
    b.ac_in.assign(alphabet.gamma().size(), er);
    b.ac_ex = b.ac_in;
    b.bc_in.assign(alphabet.bc().size(), er);
    b.bc_ex = b.bc_in;
    return b;
}

namespace {

struct MinMax {
    bool seen = false;
    desc::Rational lo, hi;
    void add(const desc::Rational& r) {
        if (!seen) {
            lo = hi = r;
            seen = true;
        } else {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
    }
    Range scaled(int factor, int fallback_hi) const {
        if (!seen) return {0, fallback_hi};
        return {lo * factor, hi * factor};
    }
};

}  // namespace

DescriptorBounds compute_bounds(const std::vector<ChemicalGraph>& D, int n_star,
                                const std::vector<ChemicalGraph>& db_slice, const ChemicalAlphabet& alphabet,
                                int k) {
    if (D.empty()) throw std::invalid_argument("compute_bounds: empty corpus");
    int L = alphabet.size(), G = static_cast<int>(alphabet.gamma().size()), B = static_cast<int>(alphabet.bc().size());
    MinMax dg_in[5], dg_ex[5], bd_in[4], bd_ex[4];
    std::vector<MinMax> ce_in(L), ce_ex(L), ac_in(G), ac_ex(G), bc_in(B), bc_ex(B);
    auto take = [&](const ChemicalGraph& g) {
        auto f = desc::feature_vector(g, alphabet, k);
        desc::Rational n(f.n);
        for (int d = 1; d <= 4; ++d) {
            dg_in[d].add(f.dg_in[d] / n);
            dg_ex[d].add(f.dg_ex[d] / n);
        }
        for (int a = 0; a < L; ++a) {
            ce_in[a].add(f.ce_in[a] / n);
            ce_ex[a].add(f.ce_ex[a] / n);
        }
        if (f.n < 2) return;
        desc::Rational e(f.n - 1);
        for (int m = 2; m <= 3; ++m) {
            bd_in[m].add(f.bd_in[m] / e);
            bd_ex[m].add(f.bd_ex[m] / e);
        }
        for (int j = 0; j < G; ++j) {
            ac_in[j].add(f.ac_in[j] / e);
            ac_ex[j].add(f.ac_ex[j] / e);
        }
        for (int j = 0; j < B; ++j) {
            bc_in[j].add(f.bc_in[j] / e);
            bc_ex[j].add(f.bc_ex[j] / e);
        }
    };
    for (const auto& g : D) take(g);
    for (const auto& g : db_slice) take(g);
    DescriptorBounds b;
    int ne = n_star - 1;
    for (int d = 1; d <= 4; ++d) {
        b.dg_in[d] = dg_in[d].scaled(n_star, n_star);
        b.dg_ex[d] = dg_ex[d].scaled(n_star, n_star);
    }
    for (int m = 2; m <= 3; ++m) {
        b.bd_in[m] = bd_in[m].scaled(ne, ne);
        b.bd_ex[m] = bd_ex[m].scaled(ne, ne);
    }
    for (int a = 0; a < L; ++a) {
        b.ce_in.push_back(ce_in[a].scaled(n_star, n_star));
        b.ce_ex.push_back(ce_ex[a].scaled(n_star, n_star));
    }
    for (int j = 0; j < G; ++j) {
        b.ac_in.push_back(ac_in[j].scaled(ne, ne));
        b.ac_ex.push_back(ac_ex[j].scaled(ne, ne));
    }
    for (int j = 0; j < B; ++j) {
        b.bc_in.push_back(bc_in[j].scaled(ne, ne));
        b.bc_ex.push_back(bc_ex[j].scaled(ne, ne));
    }
    return b;
}

std::vector<std::string> input_names(const ChemicalAlphabet& alphabet) {
    int K = desc::descriptor_count(alphabet);
    std::vector<std::string> out;
    for (int j = 0; j < K; ++j) out.push_back(detail::nm("x", j));
    return out;
}

namespace detail {

std::vector<InputSource> input_sources(const TargetSpec& spec) {
    const auto& A = spec.alphabet;
    std::vector<InputSource> out;
    auto var = [&](const std::string& v) { out.push_back({InputSource::Var, v, 0}); };
    auto cst = [&](desc::Rational r) { out.push_back({InputSource::Constant, "", r}); };
    cst(spec.n_star);
    for (int d = 1; d <= 4; ++d) var(nm("dg_in", d));
    for (int d = 1; d <= 4; ++d) var(nm("dg_ex", d));
    out.push_back({InputSource::DiaRatio, "", desc::Rational(spec.dia_star, spec.n_star)});
    cst(spec.bl_star);
    cst(spec.bh_star);
    for (int a = 0; a < A.size(); ++a) var(nm("ce_in", a + 1));
    for (int a = 0; a < A.size(); ++a) var(nm("ce_ex", a + 1));
    out.push_back({InputSource::MassRatio, "mass", 0});
    for (int m = 2; m <= 3; ++m) var(nm("bd_in", m));
    for (int m = 2; m <= 3; ++m) var(nm("bd_ex", m));
    for (size_t j = 0; j < A.gamma().size(); ++j) var(nm("ac_in", j + 1));
    for (size_t j = 0; j < A.gamma().size(); ++j) var(nm("ac_ex", j + 1));
    for (size_t j = 0; j < A.bc().size(); ++j) var(nm("bc_in", j + 1));
    for (size_t j = 0; j < A.bc().size(); ++j) var(nm("bc_ex", j + 1));
    var("nH");
    if (static_cast<int>(out.size()) != desc::descriptor_count(A))
        throw std::logic_error("descriptor input layout disagrees with the serialized descriptor list");
    return out;
}

}  // namespace detail

}  // namespace qinv::milp
