#include <algorithm>
#include <map>
#include <queue>
#include <set>

#include "milp_internal.hpp"

namespace qinv::milp {

using namespace detail;

namespace {

struct Rooted {
    std::vector<int> parent, depth, height;
    std::vector<std::vector<int>> children;
};

Rooted root_at(const ChemicalGraph& g, int r) {
    Rooted t;
    int n = g.n();
    t.parent.assign(n, -1);
    t.depth.assign(n, 0);
    t.height.assign(n, 0);
    t.children.assign(n, {});
    std::vector<int> order{r};
    std::vector<bool> seen(n, false);
    seen[r] = true;
    for (size_t q = 0; q < order.size(); ++q) {
        int v = order[q];
        for (const auto& nb : g.neighbors(v))
            if (!seen[nb.v]) {
                seen[nb.v] = true;
                t.parent[nb.v] = v;
                t.depth[nb.v] = t.depth[v] + 1;
                t.children[v].push_back(nb.v);
                order.push_back(nb.v);
            }
    }
    for (auto& c : t.children) std::sort(c.begin(), c.end());
    for (auto it = order.rbegin(); it != order.rend(); ++it)
        if (t.parent[*it] >= 0) t.height[t.parent[*it]] = std::max(t.height[t.parent[*it]], t.height[*it] + 1);
    return t;
}

// Branch structure of g seen from a single root, as the scheme graph represents it.
struct Skeleton {
    int root = 0;
    Rooted tree;
    std::vector<bool> on;         // root or height >= k
    std::vector<bool> branch;     // root or k-branch
    std::vector<int> bparent;     // nearest branch ancestor, -1 at root
    std::vector<int> bdepth;
    std::vector<std::vector<int>> bkids;
    std::vector<int> leaves;
    int left = -1, right = -1;
    int bh = 0;
};

std::string analyse(const ChemicalGraph& g, int r, const TargetSpec& sp, Skeleton& sk) {
    int k = sp.k_star, n = g.n();
    sk.root = r;
    sk.tree = root_at(g, r);
    const auto& t = sk.tree;
    sk.on.assign(n, false);
    sk.branch.assign(n, false);
    sk.bparent.assign(n, -1);
    sk.bdepth.assign(n, 0);
    sk.bkids.assign(n, {});
    sk.leaves.clear();
    for (int v = 0; v < n; ++v) {
        sk.on[v] = v == r || t.height[v] >= k;
        if (v == r) {
            sk.branch[v] = true;
            continue;
        }
        int tall = 0;
        for (int c : t.children[v]) tall += t.height[c] >= k;
        if (t.height[v] == k) {
            sk.branch[v] = true;
            sk.leaves.push_back(v);
        } else if (tall >= 2) {
            sk.branch[v] = true;
        }
    }
    // BFS order keeps parents first.
    std::vector<int> order{r};
    for (size_t q = 0; q < order.size(); ++q)
        for (int c : t.children[order[q]]) order.push_back(c);
    sk.bh = 0;
    for (int v : order) {
        if (v == r || !sk.branch[v]) continue;
        int p = t.parent[v];
        while (!sk.branch[p]) p = t.parent[p];
        sk.bparent[v] = p;
        sk.bdepth[v] = sk.bdepth[p] + 1;
        sk.bkids[p].push_back(v);
        sk.bh = std::max(sk.bh, sk.bdepth[v]);
    }
    if (static_cast<int>(sk.leaves.size()) != sp.bl_star)
        return "k-branch leaves seen from the chosen root: " + std::to_string(sk.leaves.size()) + ", bl* = " +
               std::to_string(sp.bl_star);
    if (sk.bh != sp.bh_star)
        return "k-branch height seen from the chosen root: " + std::to_string(sk.bh) + ", bh* = " +
               std::to_string(sp.bh_star);
    int up = (sp.dia_star + 1) / 2 - k, down = sp.dia_star / 2 - k;
    auto top = [&](int v) {
        while (t.parent[v] != r) v = t.parent[v];
        return v;
    };
    sk.left = sk.right = -1;
    for (int v : sk.leaves)
        if (t.depth[v] == up) {
            sk.left = v;
            break;
        }
    if (sk.left < 0) return "no k-branch leaf at distance ceil(dia/2) - k from the root";
    for (int v : sk.leaves)
        if (v != sk.left && t.depth[v] == down && top(v) != top(sk.left)) {
            sk.right = v;
            break;
        }
    if (sk.right < 0) return "no second deepest k-branch leaf in another subtree of the root";
    for (int v : sk.leaves)
        if (v != sk.left && v != sk.right && t.depth[v] > down)
            return "more than one k-branch leaf at distance ceil(dia/2) - k from the root";
    return "";
}

bool is_ancestor(const Rooted& t, int a, int v) {
    for (; v >= 0; v = t.parent[v])
        if (v == a) return true;
    return false;
}

int edge_mult(const ChemicalGraph& g, int a, int b) {
    for (const auto& nb : g.neighbors(a))
        if (nb.v == b) return g.edge(nb.edge).m;
    throw std::logic_error("edge_mult: vertices are not adjacent");
}

struct Layout {
    std::vector<std::vector<int>> vert;  // [p][i] -> vertex of g or -1
    std::vector<int> a, e, chi, sigma;
    std::vector<std::vector<int>> est, ets;  // est[s][t], ets[t][s]
};

void put(Assignment& asg, const std::string& name, long long v) {
    if (v != 0) asg.values[name] = Value(v);
}

}  // namespace

Assignment encode_graph(const ChemicalGraph& g, const SchemeGraph& sg, const TargetSpec& sp) {
    sp.validate();
    const auto& A = sp.alphabet;
    auto rep = chem::validate(g, A);
    if (!rep.ok()) throw ClassError("graph is not a valid chemical tree: " + rep.describe());
    if (g.n() != sp.n_star) throw ClassError("n = " + std::to_string(g.n()) + " differs from n* = " + std::to_string(sp.n_star));
    int maxdeg = 0;
    for (int v = 0; v < g.n(); ++v) maxdeg = std::max(maxdeg, g.degree(v));
    if (maxdeg != sp.d_max)
        throw ClassError("maximum degree " + std::to_string(maxdeg) + " differs from d_max = " + std::to_string(sp.d_max));
    auto dc = chem::diameter_and_center(g);
    if (dc.dia != sp.dia_star)
        throw ClassError("diameter " + std::to_string(dc.dia) + " differs from dia* = " + std::to_string(sp.dia_star));
    auto bd = chem::branch_decomposition(g, sp.k_star);
    if (bd.bl != sp.bl_star) throw ClassError("bl_k = " + std::to_string(bd.bl) + " differs from bl* = " + std::to_string(sp.bl_star));
    if (bd.bh != sp.bh_star) throw ClassError("bh_k = " + std::to_string(bd.bh) + " differs from bh* = " + std::to_string(sp.bh_star));

    Skeleton sk;
    std::string why;
    bool found = false;
    for (int r : dc.center) {
        why = analyse(g, r, sp, sk);
        if (why.empty()) {
            found = true;
            break;
        }
    }
    if (!found) throw ClassError("not representable in the scheme graph: " + why);
    const auto& rt = sk.tree;

    int S = sg.s_star, T = sg.t_star, C = sg.c_star;
    Layout lay;
    lay.vert.assign(static_cast<size_t>(S + T + 1), {});
    for (int p = 1; p <= S + T; ++p) lay.vert[p].assign(static_cast<size_t>(tree_size(sg, p) + 1), -1);
    lay.a.assign(static_cast<size_t>(C + 1), 0);
    lay.e.assign(static_cast<size_t>(T + 2), 0);
    lay.chi.assign(static_cast<size_t>(T + 1), 0);
    lay.sigma.assign(static_cast<size_t>(S + 1), 0);
    lay.est.assign(static_cast<size_t>(S + 1), std::vector<int>(static_cast<size_t>(T + 1), 0));
    lay.ets.assign(static_cast<size_t>(T + 1), std::vector<int>(static_cast<size_t>(S + 1), 0));

    // Branch tree into the base tree, deepest leaf on the leftmost path and the second on the rightmost.
    std::vector<int> base_of(g.n(), 0);
    std::vector<std::pair<int, int>> todo{{sk.root, 1}};
    while (!todo.empty()) {
        auto [v, s] = todo.back();
        todo.pop_back();
        base_of[v] = s;
        lay.vert[s][1] = v;
        lay.sigma[s] = (v == sk.root || !sk.bkids[v].empty()) ? 1 : 0;
        const auto& slots = sg.base.cld[static_cast<size_t>(s)];
        const auto& kids = sk.bkids[v];
        if (kids.size() > slots.size())
            throw ClassError("vertex " + std::to_string(v + 1) + " has more k-branch children than the base tree allows");
        int lk = -1, rk = -1;
        for (int c : kids) {
            if (is_ancestor(rt, c, sk.left)) lk = c;
            if (is_ancestor(rt, c, sk.right)) rk = c;
        }
        std::vector<int> order;
        if (lk >= 0) order.push_back(lk);
        for (int c : kids)
            if (c != lk && c != rk) order.push_back(c);
        size_t next = 0;
        for (int c : order) todo.emplace_back(c, slots[next++]);
        if (rk >= 0) todo.emplace_back(rk, slots.back());
    }

    // Branch paths: direct base edges or colored link segments.
    struct Segment {
        int color;
        std::vector<int> inner;  // from the tail side
    };
    std::vector<Segment> segs;
    for (int v = 0; v < g.n(); ++v) {
        if (!sk.branch[v] || v == sk.root) continue;
        int s = base_of[v], i = s - 1;
        std::vector<int> inner;
        for (int w = rt.parent[v]; w != sk.bparent[v]; w = rt.parent[w]) inner.push_back(w);
        std::reverse(inner.begin(), inner.end());
        if (inner.empty())
            lay.a[i] = 1;
        else
            segs.push_back({i, inner});
    }
    std::sort(segs.begin(), segs.end(), [](const Segment& x, const Segment& y) { return x.color > y.color; });
    int t = 0;
    for (const auto& sgm : segs) {
        int first = t + 1;
        for (int w : sgm.inner) {
            ++t;
            if (t > T) throw ClassError("branch paths need more than t* = " + std::to_string(T) + " link vertices");
            lay.vert[S + t][1] = w;
            lay.chi[t] = sgm.color;
            if (t > first) lay.e[t] = 1;
        }
        lay.est[sg.tail[sgm.color]][first] = 1;
        lay.ets[t][sg.head[sgm.color]] = 1;
    }

    // Fringe trees into the S_s / T_t templates.
    for (int p = 1; p <= S + T; ++p) {
        int w = lay.vert[p][1];
        if (w < 0) continue;
        const auto& tr = tree_of(sg, p);
        int count = 1, rootkids = 0;
        std::vector<std::pair<int, int>> stack{{w, 1}};
        while (!stack.empty()) {
            auto [x, i] = stack.back();
            stack.pop_back();
            std::vector<int> kids;
            for (int c : rt.children[x])
                if (!sk.on[c]) kids.push_back(c);
            if (i == 1) rootkids = static_cast<int>(kids.size());
            const auto& slots = tr.cld[static_cast<size_t>(i)];
            if (kids.size() > slots.size())
                throw ClassError("fringe tree at vertex " + std::to_string(w + 1) + " does not fit its template");
            for (size_t j = 0; j < kids.size(); ++j) {
                lay.vert[p][slots[j]] = kids[j];
                stack.emplace_back(kids[j], slots[j]);
                ++count;
            }
        }
        if (count > 2 + 2 * rootkids)
            throw ClassError("fringe tree at vertex " + std::to_string(w + 1) + " has " + std::to_string(count) +
                             " vertices, more than 2d + 2 for root degree d = " + std::to_string(rootkids));
    }

    // Primary and derived variables.
    Assignment asg;
    auto vx = [&](Slot x) { return lay.vert[x.p][x.i]; };
    for (int i = 1; i <= C; ++i) put(asg, nm("a", i), lay.a[i]);
    for (int s = 1; s <= S; ++s)
        for (int tt = 1; tt <= T; ++tt) {
            put(asg, nm("est", s, tt), lay.est[s][tt]);
            put(asg, nm("ets", tt, s), lay.ets[tt][s]);
        }
    std::vector<int> clr(static_cast<size_t>(C + 1), 0);
    for (int tt = 1; tt <= T; ++tt) {
        put(asg, nm("chi", tt), lay.chi[tt]);
        put(asg, nm("dclr", tt, lay.chi[tt]), 1);
        clr[lay.chi[tt]] += 1;
    }
    for (int c = 0; c <= C; ++c) put(asg, nm("clr", c), clr[c]);
    for (int s = 1; s <= S; ++s) {
        int in = s >= 2 ? lay.a[s - 1] : 0, out = 0;
        for (int i : sg.e_plus[s]) out += lay.a[i];
        for (int tt = 1; tt <= T; ++tt) {
            in += lay.ets[tt][s];
            out += lay.est[s][tt];
        }
        put(asg, nm("degbm", s), in);
        put(asg, nm("degbp", s), out);
        put(asg, nm("sigma", s), lay.vert[s][1] >= 0 ? lay.sigma[s] : 0);
    }
    for (int p = 1; p <= S + T; ++p)
        for (int i = 1; i <= tree_size(sg, p); ++i) {
            int w = lay.vert[p][i];
            put(asg, used_name(sg, {p, i}), w >= 0);
            int code = w >= 0 ? g.label(w) + 1 : 0;
            put(asg, nm("alpha", p, i), code);
            put(asg, nm("dalpha", p, i, code), 1);
            int d = w >= 0 ? g.degree(w) : 0;
            put(asg, nm("deg", p, i), d);
            put(asg, nm("ddeg", p, i, d), 1);
        }
    for (int tt = 1; tt <= T + 1; ++tt) put(asg, nm("e", tt), lay.e[tt]);

    auto edges = scheme_edges(sg);
    auto tuples = ordered_tuples(A);
    std::map<std::tuple<int, int, int>, int> tuple_index;
    for (size_t j = 0; j < tuples.size(); ++j) tuple_index[{tuples[j].a, tuples[j].b, tuples[j].m}] = static_cast<int>(j);
    int L = A.size();
    std::vector<int> ce_in(L + 1, 0), ce_ex(L + 1, 0), bd_in(4, 0), bd_ex(4, 0), dg_in(5, 0), dg_ex(5, 0);
    std::vector<int> ac_in(A.gamma().size(), 0), ac_ex(A.gamma().size(), 0), bc_in(A.bc().size(), 0),
        bc_ex(A.bc().size(), 0);
    for (const auto& e : edges) {
        int x = vx(e.tail), y = vx(e.head);
        bool used = false;
        switch (e.kind) {
            case EdgeKind::Base: used = lay.a[std::stoi(e.tag.substr(1))] == 1; break;
            case EdgeKind::Link: used = lay.e[std::stoi(e.tag.substr(1))] == 1; break;
            case EdgeKind::Hat: {
                int s = e.tail.p, tt = e.head.p - S;
                used = lay.est[s][tt] || lay.ets[tt][s];
                break;
            }
            case EdgeKind::Tree: used = y >= 0; break;
        }
        int m = used ? edge_mult(g, x, y) : 0;
        put(asg, e.beta, m);
        put(asg, nm("d" + e.beta, m), 1);
        int ca = x >= 0 ? g.label(x) + 1 : 0, cb = y >= 0 ? g.label(y) + 1 : 0;
        int ti = tuple_index.at({ca, cb, m});
        put(asg, "dtau_" + e.tag + "_" + std::to_string(ti + 1), 1);
        int dx = x >= 0 ? g.degree(x) : 0, dy = y >= 0 ? g.degree(y) : 0;
        put(asg, nm("ddc_" + e.tag, dx, dy, m), 1);
        if (m >= 1) {
            (e.internal ? bd_in : bd_ex)[m] += 1;
            (e.internal ? ac_in : ac_ex)[static_cast<size_t>(tuples[static_cast<size_t>(ti)].gamma)] += 1;
            int bj = A.bc_index(dx, dy, m);
            if (bj >= 0) (e.internal ? bc_in : bc_ex)[static_cast<size_t>(bj)] += 1;
        }
    }
    // Fictitious link edges e_1 and e_{t*+1} carry nothing.
    put(asg, nm("dbe", 0 + 1, 0), 1);
    put(asg, nm("dbe", T + 1, 0), 1);
    for (int p = 1; p <= S + T; ++p)
        for (int i = 1; i <= tree_size(sg, p); ++i) {
            int w = lay.vert[p][i];
            if (w < 0) continue;
            (i == 1 ? ce_in : ce_ex)[g.label(w) + 1] += 1;
            int d = g.degree(w);
            if (d >= 1) (i == 1 ? dg_in : dg_ex)[d] += 1;
        }
    long long mass = 0, vsum = 0;
    for (int a = 1; a <= L; ++a) {
        put(asg, nm("ce_in", a), ce_in[a]);
        put(asg, nm("ce_ex", a), ce_ex[a]);
        mass += static_cast<long long>(A.mass10(a - 1)) * (ce_in[a] + ce_ex[a]);
        vsum += static_cast<long long>(A.val(a - 1)) * (ce_in[a] + ce_ex[a]);
    }
    put(asg, "mass", mass);
    for (int q = 1; q <= 3; ++q) {
        put(asg, nm("bd_in", q), bd_in[q]);
        put(asg, nm("bd_ex", q), bd_ex[q]);
    }
    put(asg, "nH", vsum - 2 * (sp.n_star - 1) - 2 * (bd_in[2] + bd_ex[2]) - 4 * (bd_in[3] + bd_ex[3]));
    for (int d = 1; d <= 4; ++d) {
        put(asg, nm("dg_in", d), dg_in[d]);
        put(asg, nm("dg_ex", d), dg_ex[d]);
    }
    for (size_t j = 0; j < ac_in.size(); ++j) {
        put(asg, nm("ac_in", j + 1), ac_in[j]);
        put(asg, nm("ac_ex", j + 1), ac_ex[j]);
    }
    for (size_t j = 0; j < bc_in.size(); ++j) {
        put(asg, nm("bc_in", j + 1), bc_in[j]);
        put(asg, nm("bc_ex", j + 1), bc_ex[j]);
    }
    // Descriptor inputs x.
    auto src = input_sources(sp);
    for (size_t j = 0; j < src.size(); ++j) {
        const auto& s = src[j];
        Value x;
        switch (s.kind) {
            case InputSource::Constant:
            case InputSource::DiaRatio: x = Value(s.value.numerator(), s.value.denominator()); break;
            case InputSource::MassRatio: x = Value(mass, sp.n_star); break;
            case InputSource::Var: x = asg.get(s.var); break;
        }
        if (x != 0) asg.values[nm("x", j)] = x;
    }
    return asg;
}

void encode_ann(Assignment& asg, const ann::NeuralNet& net, const std::vector<std::string>& names) {
    if (static_cast<int>(names.size()) != net.input_size()) throw ann::ShapeError("encode_ann: input count mismatch");
    std::vector<double> x;
    for (const auto& n : names) x.push_back(to_double(asg.get(n)));
    auto tr = ann::forward_trace(net, x);
    for (int l = 0; l < net.num_layers(); ++l) {
        bool last = l + 1 == net.num_layers();
        const auto& z = tr.z[static_cast<size_t>(l)];
        for (int r = 0; r < z.size(); ++r) {
            if (last) {
                asg.values["y"] = Value(z[r]);
                continue;
            }
            asg.values[nm("z", l + 1, r + 1)] = Value(z[r]);
            asg.values[nm("h", l + 1, r + 1)] = Value(z[r] > 0 ? z[r] : 0.0);
            asg.values[nm("dr", l + 1, r + 1)] = Value(z[r] > 0 ? 1 : 0);
        }
    }
}

Assignment encode_graph(const ChemicalGraph& g, const SchemeGraph& sg, const TargetSpec& spec,
                        const ann::NeuralNet& net) {
    auto asg = encode_graph(g, sg, spec);
    encode_ann(asg, net, input_names(spec.alphabet));
    return asg;
}

ChemicalGraph decode_graph(const Assignment& asg, const SchemeGraph& sg, const TargetSpec& sp) {
    const auto& A = sp.alphabet;
    int S = sg.s_star, T = sg.t_star;
    auto on = [&](const std::string& n) {
        Value v = asg.get(n);
        if (v != 0 && v != 1) throw DecodeError(n + " is not 0/1");
        return v == 1;
    };
    auto ival = [&](const std::string& n) {
        Value v = asg.get(n);
        if (denominator(v) != 1) throw DecodeError(n + " is not integral");
        return numerator(v).convert_to<int>();
    };
    std::vector<std::vector<int>> id(static_cast<size_t>(S + T + 1));
    std::vector<int> labels;
    for (int p = 1; p <= S + T; ++p) {
        id[p].assign(static_cast<size_t>(tree_size(sg, p) + 1), -1);
        for (int i = 1; i <= tree_size(sg, p); ++i) {
            if (!on(used_name(sg, {p, i}))) continue;
            int code = ival(nm("alpha", p, i));
            if (code < 1 || code > A.size()) throw DecodeError("used vertex " + used_name(sg, {p, i}) + " has no element");
            id[p][i] = static_cast<int>(labels.size());
            labels.push_back(code - 1);
        }
    }
    ChemicalGraph g(labels);
    auto join = [&](Slot x, Slot y, const std::string& beta) {
        int a = id[x.p][x.i], b = id[y.p][y.i];
        if (a < 0 || b < 0) throw DecodeError("edge " + beta + " touches an unused vertex");
        int m = ival(beta);
        if (m < 1 || m > 3) throw DecodeError("edge " + beta + " has multiplicity " + std::to_string(m));
        g.add_edge(a, b, m);
    };
    for (const auto& e : scheme_edges(sg)) {
        bool used = false;
        switch (e.kind) {
            case EdgeKind::Base: used = on(nm("a", std::stoi(e.tag.substr(1)))); break;
            case EdgeKind::Link: used = on(nm("e", std::stoi(e.tag.substr(1)))); break;
            case EdgeKind::Hat: {
                int s = e.tail.p, t = e.head.p - S;
                bool x = on(nm("est", s, t)), y = on(nm("ets", t, s));
                if (x && y) throw DecodeError("both directions chosen for " + e.tag);
                used = x || y;
                break;
            }
            case EdgeKind::Tree: used = id[e.head.p][e.head.i] >= 0; break;
        }
        if (used) join(e.tail, e.head, e.beta);
    }
    if (g.n() != sp.n_star) throw DecodeError("decoded graph has " + std::to_string(g.n()) + " vertices");
    if (!g.is_tree()) throw DecodeError("indicator pattern is not a connected acyclic graph");
    auto rep = chem::validate(g, A);
    if (!rep.ok()) throw DecodeError("decoded graph is invalid: " + rep.describe());
    auto f = desc::feature_vector(g, A, sp.k_star);
    if (f.dia != sp.dia_star) throw DecodeError("decoded diameter " + std::to_string(f.dia));
    if (f.bl != sp.bl_star || f.bh != sp.bh_star)
        throw DecodeError("decoded bl/bh " + std::to_string(f.bl) + "/" + std::to_string(f.bh));
    auto expect = [&](const std::string& n, long long v) {
        if (asg.get(n) != Value(v))
            throw DecodeError("descriptor " + n + " of the assignment differs from the decoded graph");
    };
    for (int d = 1; d <= 4; ++d) {
        expect(nm("dg_in", d), f.dg_in[d]);
        expect(nm("dg_ex", d), f.dg_ex[d]);
    }
    for (int a = 0; a < A.size(); ++a) {
        expect(nm("ce_in", a + 1), f.ce_in[a]);
        expect(nm("ce_ex", a + 1), f.ce_ex[a]);
    }
    for (int q = 1; q <= 3; ++q) {
        expect(nm("bd_in", q), f.bd_in[q]);
        expect(nm("bd_ex", q), f.bd_ex[q]);
    }
    for (size_t j = 0; j < A.gamma().size(); ++j) {
        expect(nm("ac_in", j + 1), f.ac_in[j]);
        expect(nm("ac_ex", j + 1), f.ac_ex[j]);
    }
    for (size_t j = 0; j < A.bc().size(); ++j) {
        expect(nm("bc_in", j + 1), f.bc_in[j]);
        expect(nm("bc_ex", j + 1), f.bc_ex[j]);
    }
    expect("nH", f.n_h);
    if (asg.get("mass") != Value(f.ms_bar.numerator() * sp.n_star / f.ms_bar.denominator()))
        throw DecodeError("descriptor mass of the assignment differs from the decoded graph");
    return g;
}

}  // namespace qinv::milp
