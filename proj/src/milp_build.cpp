#include <algorithm>
#include <cmath>

#include "milp_internal.hpp"

namespace qinv::milp {

using namespace detail;

namespace {

constexpr Sense LE = Sense::LE, GE = Sense::GE, EQ = Sense::EQ;

double rat(const desc::Rational& r) { return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator()); }

class Builder {
public:
    Builder(const TargetSpec& spec, const DescriptorBounds& bounds, MilpModel& m)
        : sp_(spec), bounds_(bounds), sg_(scheme_graph(spec)), A_(spec.alphabet), m_(m) {
        S = sg_.s_star;
        T = sg_.t_star;
        C = sg_.c_star;
        L = A_.size();
        nS = sg_.n_tree_S;
        nT = sg_.n_tree_T;
        edges_ = scheme_edges(sg_);
        tuples_ = ordered_tuples(A_);
    }

    void build() {
        bounds_.check();
        declare();
        sg_group();
        ss_group();
        am_group();
        ae_group();
        ne_group();
        nd_group();
        nac_group();
        nbc_group();
        ad_group();
    }

private:
    const TargetSpec& sp_;
    const DescriptorBounds& bounds_;
    SchemeGraph sg_;
    const ChemicalAlphabet& A_;
    MilpModel& m_;
    int S = 0, T = 0, C = 0, L = 0, nS = 0, nT = 0;
    std::vector<EdgeRef> edges_;
    std::vector<OrderedTuple> tuples_;

    int V(const std::string& n) const { return m_.var(n); }
    void add(const std::string& group, const std::string& name, std::vector<Term> t, Sense s, double rhs) {
        m_.add_constraint(group, group + "_" + name, std::move(t), s, rhs);
    }
    std::string slot_var(Slot x) const { return used_name(sg_, x); }
    std::string alpha(Slot x) const { return nm("alpha", x.p, x.i); }
    std::string deg(Slot x) const { return nm("deg", x.p, x.i); }
    std::vector<std::string> beta_vars() const {
        std::vector<std::string> out;
        for (int i = 1; i <= C; ++i) out.push_back(nm("ba", i));
        for (int t = 1; t <= T + 1; ++t) out.push_back(nm("be", t));
        for (int s = 1; s <= S; ++s)
            for (int t = 1; t <= T; ++t) out.push_back(nm("bst", s, t));
        for (int p = 1; p <= S + T; ++p)
            for (int i = 2; i <= tree_size(sg_, p); ++i) out.push_back(nm("bt", p, i));
        return out;
    }

    void declare() {
        int n = sp_.n_star;
        for (int i = 1; i <= C; ++i) m_.add_binary(nm("a", i));
        for (int s = 1; s <= S; ++s)
            for (int t = 1; t <= T; ++t) {
                m_.add_binary(nm("est", s, t));
                m_.add_binary(nm("ets", t, s));
            }
        for (int t = 1; t <= T; ++t) {
            m_.add_integer(nm("chi", t), 0, C);
            for (int c = 0; c <= C; ++c) m_.add_binary(nm("dclr", t, c));
        }
        for (int c = 0; c <= C; ++c) m_.add_integer(nm("clr", c), 0, T);
        for (int s = 1; s <= S; ++s) {
            m_.add_integer(nm("degbm", s), 0, 4);
            m_.add_integer(nm("degbp", s), 0, 4);
            m_.add_binary(nm("sigma", s));
        }
        for (int s = 1; s <= S; ++s)
            for (int i = 1; i <= nS; ++i) m_.add_binary(nm("u", s, i));
        for (int t = 1; t <= T; ++t)
            for (int i = 1; i <= nT; ++i) m_.add_binary(nm("v", t, i));
        for (int t = 1; t <= T + 1; ++t) m_.add_binary(nm("e", t));
        for (const auto& b : beta_vars()) {
            m_.add_integer(b, 0, 3);
            for (int q = 0; q <= 3; ++q) m_.add_binary(nm("d" + b, q));
        }
        for (int p = 1; p <= S + T; ++p)
            for (int i = 1; i <= tree_size(sg_, p); ++i) {
                m_.add_integer(nm("alpha", p, i), 0, L);
                for (int a = 0; a <= L; ++a) m_.add_binary(nm("dalpha", p, i, a));
                m_.add_integer(nm("deg", p, i), 0, 4);
                for (int d = 0; d <= 4; ++d) m_.add_binary(nm("ddeg", p, i, d));
            }
        for (const auto& e : edges_) {
            for (size_t g = 0; g < tuples_.size(); ++g) m_.add_binary("dtau_" + e.tag + "_" + std::to_string(g + 1));
            for (int d = 0; d <= 4; ++d)
                for (int d2 = 0; d2 <= 4; ++d2)
                    for (int q = 0; q <= 3; ++q) m_.add_binary(nm("ddc_" + e.tag, d, d2, q));
        }
        int maxmass = 0, maxval = 0;
        for (int a = 0; a < L; ++a) {
            maxmass = std::max(maxmass, A_.mass10(a));
            maxval = std::max(maxval, A_.val(a));
        }
        for (int a = 1; a <= L; ++a) {
            m_.add_integer(nm("ce_in", a), 0, n);
            m_.add_integer(nm("ce_ex", a), 0, n);
        }
        m_.add_integer("mass", 0, static_cast<double>(maxmass) * n);
        for (int q = 1; q <= 3; ++q) {
            m_.add_integer(nm("bd_in", q), 0, 2 * n);
            m_.add_integer(nm("bd_ex", q), 0, 2 * n);
        }
        m_.add_integer("nH", 0, static_cast<double>(maxval) * n);
        for (int d = 1; d <= 4; ++d) {
            m_.add_integer(nm("dg_in", d), 0, n);
            m_.add_integer(nm("dg_ex", d), 0, n);
        }
        for (size_t j = 1; j <= A_.gamma().size(); ++j) {
            m_.add_integer(nm("ac_in", j), 0, n);
            m_.add_integer(nm("ac_ex", j), 0, n);
        }
        for (size_t j = 1; j <= A_.bc().size(); ++j) {
            m_.add_integer(nm("bc_in", j), 0, n - 1);
            m_.add_integer(nm("bc_ex", j), 0, n - 1);
        }
    }

    void sg_group() {
        const std::string G = "SG";
        for (int t = 1; t <= T; ++t) {
            std::vector<Term> one, val{{V(nm("chi", t)), -1}};
            for (int c = 0; c <= C; ++c) {
                one.push_back({V(nm("dclr", t, c)), 1});
                val.push_back({V(nm("dclr", t, c)), static_cast<double>(c)});
            }
            add(G, nm("clr_onehot", t), one, EQ, 1);
            add(G, nm("clr_value", t), val, EQ, 0);
        }
        for (int c = 0; c <= C; ++c) {
            std::vector<Term> tt{{V(nm("clr", c)), -1}};
            for (int t = 1; t <= T; ++t) tt.push_back({V(nm("dclr", t, c)), 1});
            add(G, nm("clr_count", c), tt, EQ, 0);
        }
        for (int i = 1; i <= C; ++i)
            add(G, nm("direct_or_colored", i), {{V(nm("a", i)), double(T)}, {V(nm("clr", i)), 1}}, LE, T);
        for (int s = 1; s <= S; ++s)
            for (int t = 1; t <= T; ++t)
                add(G, nm("one_direction", s, t), {{V(nm("est", s, t)), 1}, {V(nm("ets", t, s)), 1}}, LE, 1);
        for (int c = 1; c <= C; ++c)
            for (int t = 1; t <= T; ++t) {
                std::vector<Term> out{{V(nm("dclr", t, c)), 1}}, in{{V(nm("dclr", t, c)), 1}};
                for (int s = 1; s <= S; ++s) {
                    if (s != sg_.head[static_cast<size_t>(c)]) out.push_back({V(nm("ets", t, s)), 1});
                    if (s != sg_.tail[static_cast<size_t>(c)]) in.push_back({V(nm("est", s, t)), 1});
                }
                add(G, nm("exit_head", t, c), out, LE, 1);
                add(G, nm("enter_tail", t, c), in, LE, 1);
            }
        for (int s = 1; s <= S; ++s) {
            std::vector<Term> mi{{V(nm("degbm", s)), -1}}, pl{{V(nm("degbp", s)), -1}};
            for (int i : sg_.e_minus[static_cast<size_t>(s)]) mi.push_back({V(nm("a", i)), 1});
            for (int i : sg_.e_plus[static_cast<size_t>(s)]) pl.push_back({V(nm("a", i)), 1});
            for (int t = 1; t <= T; ++t) {
                mi.push_back({V(nm("ets", t, s)), 1});
                pl.push_back({V(nm("est", s, t)), 1});
            }
            add(G, nm("degb_in", s), mi, EQ, 0);
            add(G, nm("degb_out", s), pl, EQ, 0);
            add(G, nm("degb_max", s), {{V(nm("degbm", s)), 1}, {V(nm("degbp", s)), 1}}, LE, sp_.d_max);
        }
    }

    void ss_group() {
        const std::string G = "SS";
        int k = sp_.k_star;
        for (int s = 1; s <= S; ++s)
            for (auto [i, j] : sg_.s_tree.p_prc)
                add(G, nm("prc_u", s, i, j), {{V(nm("u", s, i)), 1}, {V(nm("u", s, j)), -1}}, GE, 0);
        for (int t = 1; t <= T; ++t)
            for (auto [i, j] : sg_.t_tree.p_prc)
                add(G, nm("prc_v", t, i, j), {{V(nm("v", t, i)), 1}, {V(nm("v", t, j)), -1}}, GE, 0);
        std::vector<Term> all;
        for (int s = 1; s <= S; ++s)
            for (int i = 1; i <= nS; ++i) all.push_back({V(nm("u", s, i)), 1});
        for (int t = 1; t <= T; ++t)
            for (int i = 1; i <= nT; ++i) all.push_back({V(nm("v", t, i)), 1});
        add(G, "vertex_count", all, EQ, sp_.n_star);
        for (int s = 1; s <= S; ++s) {
            std::vector<Term> tt;
            for (int i = 1; i <= nS; ++i) tt.push_back({V(nm("u", s, i)), 1});
            for (int j : sg_.s_tree.cld[1]) tt.push_back({V(nm("u", s, j)), -2});
            add(G, nm("fringe_size_u", s), tt, LE, 2);
        }
        for (int t = 1; t <= T; ++t) {
            std::vector<Term> tt;
            for (int i = 1; i <= nT; ++i) tt.push_back({V(nm("v", t, i)), 1});
            for (int j : sg_.t_tree.cld[1]) tt.push_back({V(nm("v", t, j)), -2});
            add(G, nm("fringe_size_v", t), tt, LE, 2);
        }
        add(G, "link_first", {{V(nm("e", 1)), 1}}, EQ, 0);
        add(G, "link_last", {{V(nm("e", T + 1)), 1}}, EQ, 0);
        for (int t = 1; t <= T; ++t) {
            std::vector<Term> out{{V(nm("e", t + 1)), 1}, {V(nm("v", t, 1)), -1}};
            std::vector<Term> in{{V(nm("e", t)), 1}, {V(nm("v", t, 1)), -1}};
            for (int s = 1; s <= S; ++s) {
                out.push_back({V(nm("ets", t, s)), 1});
                in.push_back({V(nm("est", s, t)), 1});
            }
            add(G, nm("link_out", t), out, EQ, 0);
            add(G, nm("link_in", t), in, EQ, 0);
            std::vector<Term> col{{V(nm("v", t, 1)), -1}};
            for (int c = 1; c <= C; ++c) col.push_back({V(nm("dclr", t, c)), 1});
            add(G, nm("colored", t), col, EQ, 0);
        }
        for (int t = 1; t + 1 <= T; ++t) {
            add(G, nm("color_order_hi", t),
                {{V(nm("chi", t)), 1}, {V(nm("chi", t + 1)), -1}, {V(nm("e", t + 1)), double(C)}}, LE, C);
            add(G, nm("color_order_lo", t),
                {{V(nm("chi", t)), 1}, {V(nm("chi", t + 1)), -1}, {V(nm("v", t, 1)), -1}, {V(nm("e", t + 1)), 1}}, GE,
                0);
        }
        for (int i = 1; i <= C; ++i) {
            std::vector<Term> tt{{V(nm("a", i)), 1}, {V(nm("u", i + 1, 1)), -1}};
            for (int t = 1; t <= T; ++t) tt.push_back({V(nm("ets", t, i + 1)), 1});
            add(G, nm("head_reached", i), tt, EQ, 0);
        }
        add(G, "root_sigma", {{V(nm("sigma", 1)), 1}}, EQ, 1);
        add(G, "root_used", {{V(nm("u", 1, 1)), 1}}, EQ, 1);
        for (int s = 1; s <= S; ++s) add(G, nm("sigma_used", s), {{V(nm("sigma", s)), 1}, {V(nm("u", s, 1)), -1}}, LE, 0);
        auto deep = sg_.s_tree.at_depth(k);
        for (int s = 2; s <= S; ++s) {
            std::vector<Term> hi{{V(nm("sigma", s)), -double(sp_.d_max - 1)}}, lo{{V(nm("sigma", s)), -2}};
            for (int c : sg_.base.cld[static_cast<size_t>(s)]) {
                hi.push_back({V(nm("u", c, 1)), 1});
                lo.push_back({V(nm("u", c, 1)), 1});
            }
            add(G, nm("branch_children_hi", s), hi, LE, 0);
            add(G, nm("branch_children_lo", s), lo, GE, 0);
            std::vector<Term> lf{{V(nm("u", s, 1)), -1}, {V(nm("sigma", s)), 1}};
            for (int i : deep) lf.push_back({V(nm("u", s, i)), 1});
            add(G, nm("leaf_height", s), lf, GE, 0);
        }
        std::vector<Term> bl;
        for (int s = 2; s <= S; ++s) {
            bl.push_back({V(nm("u", s, 1)), 1});
            bl.push_back({V(nm("sigma", s)), -1});
        }
        add(G, "leaf_count", bl, EQ, sp_.bl_star);
        std::vector<Term> bh;
        for (int s : sg_.v_at_depth(sp_.bh_star)) bh.push_back({V(nm("u", s, 1)), 1});
        add(G, "branch_height", bh, GE, 1);
        auto path_terms = [&](int leaf) {
            std::vector<Term> tt;
            for (int s : sg_.v_path[static_cast<size_t>(leaf)]) tt.push_back({V(nm("u", s, 1)), 1});
            for (int i : sg_.e_path[static_cast<size_t>(leaf)]) tt.push_back({V(nm("clr", i)), 1});
            return tt;
        };
        int up = (sp_.dia_star + 1) / 2 - k, down = sp_.dia_star / 2 - k;
        add(G, "diameter_left", path_terms(sg_.s_left), EQ, up);
        add(G, "diameter_right", path_terms(sg_.s_right), EQ, down);
        for (int leaf : sg_.leaves)
            if (leaf != sg_.s_left && leaf != sg_.s_right) add(G, nm("diameter_other", leaf), path_terms(leaf), LE, down);
    }

    void between(const std::string& G, const std::string& name, const std::string& beta,
                 const std::vector<std::string>& used) {
        std::vector<Term> lo{{V(beta), 1}}, hi{{V(beta), 1}};
        for (const auto& u : used) {
            lo.push_back({V(u), -1});
            hi.push_back({V(u), -3});
        }
        add(G, name + "_lo", lo, GE, 0);
        add(G, name + "_hi", hi, LE, 0);
    }

    void am_group() {
        const std::string G = "AM";
        for (int i = 1; i <= C; ++i) between(G, nm("base", i), nm("ba", i), {nm("a", i)});
        for (int s = 1; s <= S; ++s)
            for (int i = 2; i <= nS; ++i) between(G, nm("tree_u", s, i), nm("bt", s, i), {nm("u", s, i)});
        for (int t = 1; t <= T; ++t)
            for (int i = 2; i <= nT; ++i) between(G, nm("tree_v", t, i), nm("bt", S + t, i), {nm("v", t, i)});
        for (int t = 1; t <= T + 1; ++t) between(G, nm("link", t), nm("be", t), {nm("e", t)});
        for (int s = 1; s <= S; ++s)
            for (int t = 1; t <= T; ++t) between(G, nm("cross", s, t), nm("bst", s, t), {nm("est", s, t), nm("ets", t, s)});
    }

    std::vector<Term> valence(Slot x) const {
        std::vector<Term> tt;
        for (int a = 1; a <= L; ++a) tt.push_back({V(nm("dalpha", x.p, x.i, a)), -double(A_.val(a - 1))});
        return tt;
    }

    void ae_group() {
        const std::string G = "AE";
        for (int p = 1; p <= S + T; ++p)
            for (int i = 1; i <= tree_size(sg_, p); ++i) {
                std::vector<Term> one, val{{V(nm("alpha", p, i)), -1}};
                for (int a = 0; a <= L; ++a) {
                    one.push_back({V(nm("dalpha", p, i, a)), 1});
                    val.push_back({V(nm("dalpha", p, i, a)), double(a)});
                }
                add(G, nm("elem_onehot", p, i), one, EQ, 1);
                add(G, nm("elem_value", p, i), val, EQ, 0);
                add(G, nm("elem_used", p, i), {{V(nm("dalpha", p, i, 0)), 1}, {V(slot_var({p, i})), 1}}, EQ, 1);
            }
        for (const auto& b : beta_vars()) {
            std::vector<Term> one, val{{V(b), -1}};
            for (int q = 0; q <= 3; ++q) {
                one.push_back({V(nm("d" + b, q)), 1});
                val.push_back({V(nm("d" + b, q)), double(q)});
            }
            add(G, "mult_onehot_" + b, one, EQ, 1);
            add(G, "mult_value_" + b, val, EQ, 0);
        }
        for (int s = 1; s <= S; ++s) {
            auto tt = valence({s, 1});
            for (int i : sg_.e_b[static_cast<size_t>(s)]) tt.push_back({V(nm("ba", i)), 1});
            for (int t = 1; t <= T; ++t) tt.push_back({V(nm("bst", s, t)), 1});
            for (int j : sg_.s_tree.cld[1]) tt.push_back({V(nm("bt", s, j)), 1});
            add(G, nm("valence_base", s), tt, LE, 0);
        }
        for (int t = 1; t <= T; ++t) {
            auto tt = valence({S + t, 1});
            for (int s = 1; s <= S; ++s) tt.push_back({V(nm("bst", s, t)), 1});
            tt.push_back({V(nm("be", t)), 1});
            tt.push_back({V(nm("be", t + 1)), 1});
            for (int j : sg_.t_tree.cld[1]) tt.push_back({V(nm("bt", S + t, j)), 1});
            add(G, nm("valence_link", t), tt, LE, 0);
        }
        for (int p = 1; p <= S + T; ++p) {
            const auto& tr = tree_of(sg_, p);
            for (int i = 2; i <= tree_size(sg_, p); ++i) {
                auto tt = valence({p, i});
                tt.push_back({V(nm("bt", p, i)), 1});
                for (int j : tr.cld[static_cast<size_t>(i)]) tt.push_back({V(nm("bt", p, j)), 1});
                add(G, nm("valence_tree", p, i), tt, LE, 0);
            }
        }
    }

    void ne_group() {
        const std::string G = "NE";
        for (int a = 1; a <= L; ++a) {
            std::vector<Term> in{{V(nm("ce_in", a)), -1}}, ex{{V(nm("ce_ex", a)), -1}};
            for (int p = 1; p <= S + T; ++p) {
                in.push_back({V(nm("dalpha", p, 1, a)), 1});
                for (int i = 2; i <= tree_size(sg_, p); ++i) ex.push_back({V(nm("dalpha", p, i, a)), 1});
            }
            add(G, nm("elem_in", a), in, EQ, 0);
            add(G, nm("elem_ex", a), ex, EQ, 0);
        }
        std::vector<Term> mass{{V("mass"), -1}};
        for (int a = 1; a <= L; ++a) {
            mass.push_back({V(nm("ce_in", a)), double(A_.mass10(a - 1))});
            mass.push_back({V(nm("ce_ex", a)), double(A_.mass10(a - 1))});
        }
        add(G, "mass", mass, EQ, 0);
        for (int q = 1; q <= 3; ++q) {
            std::vector<Term> in{{V(nm("bd_in", q)), -1}}, ex{{V(nm("bd_ex", q)), -1}};
            for (const auto& e : edges_) (e.internal ? in : ex).push_back({V(nm("d" + e.beta, q)), 1});
            add(G, nm("bond_in", q), in, EQ, 0);
            add(G, nm("bond_ex", q), ex, EQ, 0);
        }
        std::vector<Term> h{{V("nH"), -1}};
        for (int a = 1; a <= L; ++a) {
            h.push_back({V(nm("ce_in", a)), double(A_.val(a - 1))});
            h.push_back({V(nm("ce_ex", a)), double(A_.val(a - 1))});
        }
        for (int q = 2; q <= 3; ++q) {
            h.push_back({V(nm("bd_in", q)), -2.0 * (q - 1)});
            h.push_back({V(nm("bd_ex", q)), -2.0 * (q - 1)});
        }
        add(G, "hydrogen", h, EQ, 2.0 * (sp_.n_star - 1));
    }

    void nd_group() {
        const std::string G = "ND";
        for (int s = 1; s <= S; ++s) {
            std::vector<Term> tt{{V(deg({s, 1})), -1}};
            for (int i : sg_.e_b[static_cast<size_t>(s)]) tt.push_back({V(nm("a", i)), 1});
            for (int t = 1; t <= T; ++t) {
                tt.push_back({V(nm("est", s, t)), 1});
                tt.push_back({V(nm("ets", t, s)), 1});
            }
            for (int j : sg_.s_tree.cld[1]) tt.push_back({V(nm("u", s, j)), 1});
            add(G, nm("degree_base", s), tt, EQ, 0);
        }
        for (int t = 1; t <= T; ++t) {
            std::vector<Term> tt{{V(deg({S + t, 1})), -1}, {V(nm("v", t, 1)), 2}};
            for (int j : sg_.t_tree.cld[1]) tt.push_back({V(nm("v", t, j)), 1});
            add(G, nm("degree_link", t), tt, EQ, 0);
        }
        for (int p = 1; p <= S + T; ++p) {
            const auto& tr = tree_of(sg_, p);
            for (int i = 2; i <= tree_size(sg_, p); ++i) {
                std::vector<Term> tt{{V(deg({p, i})), -1}, {V(slot_var({p, i})), 1}};
                for (int j : tr.cld[static_cast<size_t>(i)]) tt.push_back({V(slot_var({p, j})), 1});
                add(G, nm("degree_tree", p, i), tt, EQ, 0);
            }
        }
        for (int p = 1; p <= S + T; ++p)
            for (int i = 1; i <= tree_size(sg_, p); ++i) {
                std::vector<Term> one, val{{V(deg({p, i})), -1}};
                for (int d = 0; d <= 4; ++d) {
                    one.push_back({V(nm("ddeg", p, i, d)), 1});
                    val.push_back({V(nm("ddeg", p, i, d)), double(d)});
                }
                add(G, nm("degree_onehot", p, i), one, EQ, 1);
                add(G, nm("degree_value", p, i), val, EQ, 0);
            }
        for (int d = 1; d <= 4; ++d) {
            std::vector<Term> in{{V(nm("dg_in", d)), -1}}, ex{{V(nm("dg_ex", d)), -1}};
            for (int p = 1; p <= S + T; ++p) {
                in.push_back({V(nm("ddeg", p, 1, d)), 1});
                for (int i = 2; i <= tree_size(sg_, p); ++i) ex.push_back({V(nm("ddeg", p, i, d)), 1});
            }
            add(G, nm("dg_in", d), in, EQ, 0);
            add(G, nm("dg_ex", d), ex, EQ, 0);
        }
        std::vector<Term> four{{V(nm("dg_in", 4)), 1}, {V(nm("dg_ex", 4)), 1}};
        if (sp_.d_max == 4)
            add(G, "max_degree", four, GE, 1);
        else
            add(G, "max_degree", four, EQ, 0);
    }

    void nac_group() {
        const std::string G = "NAC";
        size_t ng = A_.gamma().size();
        std::vector<std::vector<Term>> in(ng), ex(ng);
        for (size_t j = 0; j < ng; ++j) {
            in[j].push_back({V(nm("ac_in", j + 1)), -1});
            ex[j].push_back({V(nm("ac_ex", j + 1)), -1});
        }
        for (const auto& e : edges_) {
            std::vector<Term> one, ta{{V(alpha(e.tail)), -1}}, hb{{V(alpha(e.head)), -1}}, mm{{V(e.beta), -1}};
            for (size_t g = 0; g < tuples_.size(); ++g) {
                int v = V("dtau_" + e.tag + "_" + std::to_string(g + 1));
                const auto& tp = tuples_[g];
                one.push_back({v, 1});
                ta.push_back({v, double(tp.a)});
                hb.push_back({v, double(tp.b)});
                mm.push_back({v, double(tp.m)});
                if (tp.gamma >= 0) (e.internal ? in : ex)[static_cast<size_t>(tp.gamma)].push_back({v, 1});
            }
            add(G, "onehot_" + e.tag, one, EQ, 1);
            add(G, "tail_" + e.tag, ta, EQ, 0);
            add(G, "head_" + e.tag, hb, EQ, 0);
            add(G, "mult_" + e.tag, mm, EQ, 0);
        }
        for (size_t j = 0; j < ng; ++j) {
            add(G, nm("ac_in", j + 1), in[j], EQ, 0);
            add(G, nm("ac_ex", j + 1), ex[j], EQ, 0);
        }
    }

    void nbc_group() {
        const std::string G = "NBC";
        size_t nb = A_.bc().size();
        std::vector<std::vector<Term>> in(nb), ex(nb);
        for (size_t j = 0; j < nb; ++j) {
            in[j].push_back({V(nm("bc_in", j + 1)), -1});
            ex[j].push_back({V(nm("bc_ex", j + 1)), -1});
        }
        for (const auto& e : edges_) {
            std::vector<Term> one, mm{{V(e.beta), -1}}, dt{{V(deg(e.tail)), -1}}, dh{{V(deg(e.head)), -1}};
            for (int d = 0; d <= 4; ++d)
                for (int d2 = 0; d2 <= 4; ++d2)
                    for (int q = 0; q <= 3; ++q) {
                        int v = V(nm("ddc_" + e.tag, d, d2, q));
                        one.push_back({v, 1});
                        mm.push_back({v, double(q)});
                        dt.push_back({v, double(d)});
                        dh.push_back({v, double(d2)});
                        int j = A_.bc_index(d, d2, q);
                        if (q >= 1 && j >= 0) (e.internal ? in : ex)[static_cast<size_t>(j)].push_back({v, 1});
                    }
            add(G, "onehot_" + e.tag, one, EQ, 1);
            add(G, "mult_" + e.tag, mm, EQ, 0);
            add(G, "tail_" + e.tag, dt, EQ, 0);
            add(G, "head_" + e.tag, dh, EQ, 0);
        }
        for (size_t j = 0; j < nb; ++j) {
            add(G, nm("bc_in", j + 1), in[j], EQ, 0);
            add(G, nm("bc_ex", j + 1), ex[j], EQ, 0);
        }
    }

    void range(const std::string& var, const Range& r) {
        const std::string G = "AD";
        auto lo = r.lo, hi = r.hi;
        add(G, "lo_" + var, {{V(var), double(lo.denominator())}}, GE, double(lo.numerator()));
        add(G, "hi_" + var, {{V(var), double(hi.denominator())}}, LE, double(hi.numerator()));
    }

    void ad_group() {
        const auto& b = bounds_;
        if (static_cast<int>(b.ce_in.size()) != L || b.ac_in.size() != A_.gamma().size() ||
            b.bc_in.size() != A_.bc().size())
            throw std::invalid_argument("descriptor bounds do not match the alphabet");
        for (int d = 1; d <= 4; ++d) {
            range(nm("dg_in", d), b.dg_in[d]);
            range(nm("dg_ex", d), b.dg_ex[d]);
        }
        for (int a = 1; a <= L; ++a) {
            range(nm("ce_in", a), b.ce_in[static_cast<size_t>(a - 1)]);
            range(nm("ce_ex", a), b.ce_ex[static_cast<size_t>(a - 1)]);
        }
        for (int q = 2; q <= 3; ++q) {
            range(nm("bd_in", q), b.bd_in[q]);
            range(nm("bd_ex", q), b.bd_ex[q]);
        }
        for (size_t j = 0; j < A_.gamma().size(); ++j) {
            range(nm("ac_in", j + 1), b.ac_in[j]);
            range(nm("ac_ex", j + 1), b.ac_ex[j]);
        }
        for (size_t j = 0; j < A_.bc().size(); ++j) {
            range(nm("bc_in", j + 1), b.bc_in[j]);
            range(nm("bc_ex", j + 1), b.bc_ex[j]);
        }
    }
};

}  // namespace

std::vector<std::pair<double, double>> descriptor_box(const TargetSpec& spec, const DescriptorBounds& bounds) {
    const auto& A = spec.alphabet;
    auto src = input_sources(spec);
    std::vector<std::pair<double, double>> box;
    double mlo = 1e300, mhi = 0, vmax = 0;
    for (int a = 0; a < A.size(); ++a) {
        mlo = std::min(mlo, double(A.mass10(a)));
        mhi = std::max(mhi, double(A.mass10(a)));
        vmax = std::max(vmax, double(A.val(a)));
    }
    auto r = [](const Range& x) { return std::make_pair(rat(x.lo), rat(x.hi)); };
    for (const auto& s : src) {
        const std::string& v = s.var;
        if (s.kind == InputSource::Constant || s.kind == InputSource::DiaRatio) {
            box.emplace_back(rat(s.value), rat(s.value));
        } else if (s.kind == InputSource::MassRatio) {
            box.emplace_back(mlo, mhi);
        } else if (v == "nH") {
            box.emplace_back(0.0, vmax * spec.n_star);
        } else {
            auto idx = [&](const std::string& prefix) { return std::stoi(v.substr(prefix.size())); };
            if (v.rfind("dg_in_", 0) == 0) box.push_back(r(bounds.dg_in[idx("dg_in_")]));
            else if (v.rfind("dg_ex_", 0) == 0) box.push_back(r(bounds.dg_ex[idx("dg_ex_")]));
            else if (v.rfind("ce_in_", 0) == 0) box.push_back(r(bounds.ce_in.at(idx("ce_in_") - 1)));
            else if (v.rfind("ce_ex_", 0) == 0) box.push_back(r(bounds.ce_ex.at(idx("ce_ex_") - 1)));
            else if (v.rfind("bd_in_", 0) == 0) box.push_back(r(bounds.bd_in[idx("bd_in_")]));
            else if (v.rfind("bd_ex_", 0) == 0) box.push_back(r(bounds.bd_ex[idx("bd_ex_")]));
            else if (v.rfind("ac_in_", 0) == 0) box.push_back(r(bounds.ac_in.at(idx("ac_in_") - 1)));
            else if (v.rfind("ac_ex_", 0) == 0) box.push_back(r(bounds.ac_ex.at(idx("ac_ex_") - 1)));
            else if (v.rfind("bc_in_", 0) == 0) box.push_back(r(bounds.bc_in.at(idx("bc_in_") - 1)));
            else if (v.rfind("bc_ex_", 0) == 0) box.push_back(r(bounds.bc_ex.at(idx("bc_ex_") - 1)));
            else throw std::logic_error("no box for descriptor " + v);
        }
    }
    return box;
}

int add_ann_block(MilpModel& model, const ann::NeuralNet& net, const std::vector<int>& inputs,
                  const std::vector<double>& lo, const std::vector<double>& hi) {
    const std::string G = "C1";
    int K = net.input_size();
    if (static_cast<int>(inputs.size()) != K || static_cast<int>(lo.size()) != K || static_cast<int>(hi.size()) != K)
        throw ann::ShapeError("ANN block: input count does not match the net");
    if (!net.scaling.empty() && static_cast<int>(net.scaling.size()) != K)
        throw ann::ShapeError("ANN block: scaling size does not match the net");
    // Scaled input s_j = coef_j * (x_j - shift_j).
    std::vector<double> coef(K, 1.0), shift(K, 0.0), slo(K), shi(K);
    for (int j = 0; j < K; ++j) {
        if (!net.scaling.empty()) {
            coef[j] = net.scale_coef(j);
            shift[j] = net.scaling[static_cast<size_t>(j)].first;
        }
        double a = coef[j] * (lo[j] - shift[j]), b = coef[j] * (hi[j] - shift[j]);
        slo[j] = std::min({0.0, a, b});
        shi[j] = std::max({1.0, a, b});
    }
    auto pad = [](double x, double dir) { return x + dir * 1e-6 * (1.0 + std::abs(x)); };
    std::vector<int> prev = inputs;
    std::vector<double> plo = slo, phi = shi;
    bool first = true;
    int out = -1;
    for (int l = 0; l < net.num_layers(); ++l) {
        const auto& W = net.W[static_cast<size_t>(l)];
        const auto& b = net.b[static_cast<size_t>(l)];
        bool last = l + 1 == net.num_layers();
        std::vector<int> cur;
        std::vector<double> clo, chi;
        for (int r = 0; r < W.rows(); ++r) {
            double zl = b[r], zh = b[r];
            for (int c = 0; c < W.cols(); ++c) {
                double w = W(r, c);
                zl += w > 0 ? w * plo[c] : w * phi[c];
                zh += w > 0 ? w * phi[c] : w * plo[c];
            }
            if (!std::isfinite(zl) || !std::isfinite(zh)) throw ModelError("ANN block: non-finite activation bound");
            zl = pad(zl, -1);
            zh = pad(zh, 1);
            std::string zname = last ? "y" : nm("z", l + 1, r + 1);
            int z = model.add_continuous(zname, zl, zh);
            std::vector<Term> tt{{z, 1}};
            double rhs = b[r];
            for (int c = 0; c < W.cols(); ++c) {
                double w = W(r, c);
                if (first) {
                    tt.push_back({prev[c], -w * coef[c]});
                    rhs -= w * coef[c] * shift[c];
                } else {
                    tt.push_back({prev[c], -w});
                }
            }
            model.add_constraint(G, last ? std::string("C1_output") : nm("C1_affine", l + 1, r + 1), tt, Sense::EQ, rhs);
            if (last) {
                out = z;
                continue;
            }
            double lm = std::min(zl, 0.0), um = std::max(zh, 0.0);
            int h = model.add_continuous(nm("h", l + 1, r + 1), 0.0, um);
            int d = model.add_binary(nm("dr", l + 1, r + 1));
            model.add_constraint(G, nm("C1_relu_ge", l + 1, r + 1), {{h, 1}, {z, -1}}, Sense::GE, 0);
            model.add_constraint(G, nm("C1_relu_le", l + 1, r + 1), {{h, 1}, {z, -1}, {d, -lm}}, Sense::LE, -lm);
            model.add_constraint(G, nm("C1_relu_on", l + 1, r + 1), {{h, 1}, {d, -um}}, Sense::LE, 0);
            cur.push_back(h);
            clo.push_back(0.0);
            chi.push_back(um);
        }
        prev = cur;
        plo = clo;
        phi = chi;
        first = false;
    }
    return out;
}

MilpModel build_structure_model(const TargetSpec& spec, const DescriptorBounds& bounds) {
    MilpModel m;
    Builder(spec, bounds, m).build();
    return m;
}

MilpModel build_model(const TargetSpec& spec, const DescriptorBounds& bounds, const ann::NeuralNet& net) {
    int K = desc::descriptor_count(spec.alphabet);
    if (net.input_size() != K)
        throw ann::ShapeError("net input size " + std::to_string(net.input_size()) + " differs from descriptor count " +
                              std::to_string(K));
    MilpModel m = build_structure_model(spec, bounds);
    auto src = input_sources(spec);
    auto box = descriptor_box(spec, bounds);
    std::vector<int> xs;
    std::vector<double> lo, hi;
    for (int j = 0; j < K; ++j) {
        double a = box[j].first, b = box[j].second;
        if (a > b) throw InfeasibleSpec("descriptor box is empty for input " + std::to_string(j));
        int x = m.add_continuous(nm("x", j), a, b);
        xs.push_back(x);
        lo.push_back(a);
        hi.push_back(b);
        const auto& s = src[j];
        std::string cname = nm("C1_input", j);
        switch (s.kind) {
            case InputSource::Constant:
                m.add_constraint("C1", cname, {{x, double(s.value.denominator())}}, Sense::EQ,
                                 double(s.value.numerator()));
                break;
            case InputSource::DiaRatio:
                m.add_constraint("C1", cname, {{x, double(spec.n_star)}}, Sense::EQ, double(spec.dia_star));
                break;
            case InputSource::MassRatio:
                m.add_constraint("C1", cname, {{x, double(spec.n_star)}, {m.var("mass"), -1}}, Sense::EQ, 0);
                break;
            case InputSource::Var:
                m.add_constraint("C1", cname, {{x, 1}, {m.var(s.var), -1}}, Sense::EQ, 0);
                break;
        }
    }
    int y = add_ann_block(m, net, xs, lo, hi);
    double a = (1 - spec.epsilon) * spec.y_star, b = (1 + spec.epsilon) * spec.y_star;
    if (a > b) std::swap(a, b);
    m.add_constraint("C1", "C1_target_lo", {{y, 1}}, Sense::GE, a);
    m.add_constraint("C1", "C1_target_hi", {{y, 1}}, Sense::LE, b);
    return m;
}

}  // namespace qinv::milp
