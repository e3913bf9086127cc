#pragma once

#include <boost/rational.hpp>
#include <compare>
#include <string>
#include <vector>

#include "qinv/chemgraph.hpp"

namespace qinv::desc {

using Rational = boost::rational<long long>;
using chem::ChemicalAlphabet;
using chem::ChemicalGraph;

struct FeatureVector {
    int k = 0;
    int n = 0;
    int dia = 0;
    int dg_in[5] = {}, dg_ex[5] = {};  // index 1..4
    Rational dia_bar;
    int bl = 0, bh = 0;
    std::vector<int> ce_in, ce_ex;  // per element index
    Rational ms_bar;
    int bd_in[4] = {}, bd_ex[4] = {};  // index 1..3; only 2 and 3 are serialized
    std::vector<int> ac_in, ac_ex;     // per alphabet.gamma() index
    std::vector<int> bc_in, bc_ex;     // per alphabet.bc() index
    int n_h = 0;
};

FeatureVector feature_vector(const ChemicalGraph& g, const ChemicalAlphabet& alphabet, int k);

// Sum of valences minus twice the bond multiplicity sum; throws on a negative result.
int hydrogen_count(const ChemicalGraph& g, const ChemicalAlphabet& alphabet);
// Adjacency-configuration form: sum val*ce - sum 2m*ac.
int hydrogen_count_ac(const FeatureVector& f, const ChemicalAlphabet& alphabet);

// Serialized descriptor list (the ANN/MILP input order).
std::vector<std::string> feature_names(const ChemicalAlphabet& alphabet);
std::vector<double> feature_values(const FeatureVector& f);
std::vector<std::string> feature_strings(const FeatureVector& f);
// Number of serialized descriptors K.
int descriptor_count(const ChemicalAlphabet& alphabet);
std::string format_rational(const Rational& r, int digits = 6);
std::string feature_csv(const std::vector<ChemicalGraph>& graphs, const ChemicalAlphabet& alphabet, int k);

// Index layout of frequency vectors over Lambda, Gamma, Bc, Dg.
struct KeyLayout {
    int n_elem = 0, n_gamma = 0, n_bc = 0;
    explicit KeyLayout(const ChemicalAlphabet& a)
        : n_elem(a.size()), n_gamma(static_cast<int>(a.gamma().size())), n_bc(static_cast<int>(a.bc().size())) {}
    KeyLayout() = default;
    int elem(int a) const { return a; }
    int gamma(int i) const { return n_elem + i; }
    int bc(int j) const { return n_elem + n_gamma + j; }
    int dg(int d) const { return n_elem + n_gamma + n_bc + d - 1; }
    int size() const { return n_elem + n_gamma + n_bc + 4; }
    std::string key_name(int idx, const ChemicalAlphabet& a) const;
};

struct FrequencyVector {
    std::vector<int> in, ex;

    FrequencyVector() = default;
    explicit FrequencyVector(int dim) : in(static_cast<size_t>(dim), 0), ex(static_cast<size_t>(dim), 0) {}

    bool leq(const FrequencyVector& o) const;
    bool nonnegative() const;
    FrequencyVector& operator+=(const FrequencyVector& o);
    FrequencyVector& operator-=(const FrequencyVector& o);
    friend FrequencyVector operator+(FrequencyVector a, const FrequencyVector& b) { return a += b; }
    friend FrequencyVector operator-(FrequencyVector a, const FrequencyVector& b) { return a -= b; }
    auto operator<=>(const FrequencyVector&) const = default;
    bool operator==(const FrequencyVector&) const = default;
    // Restriction to the given key indices (others zeroed).
    FrequencyVector project(const std::vector<int>& keys) const;
};

// Feature vector restricted to Lambda, Gamma, Bc, Dg in/ex parts.
FrequencyVector to_frequency(const FeatureVector& f, const ChemicalAlphabet& alphabet);

struct RootedFragment {
    ChemicalGraph tree;
    int r1 = 0, r2 = 0, r3 = -1;
    std::vector<int> backbone;   // vertices of the r1..r2 path
    std::vector<bool> v_in;      // per vertex
    std::vector<bool> e_in;      // per edge
    int length() const { return static_cast<int>(backbone.size()) - 1; }
};

RootedFragment make_fragment(ChemicalGraph tree, int r1, int r2, int r3 = -1);

FrequencyVector frequency_vector(const RootedFragment& frag, const ChemicalAlphabet& alphabet);

enum class Adjust { Plus1, Plus2, Plus3, Joint1 };

// f(T[+p]) (degree of r1 raised by p) or f(T<+1>) (degree of r3 raised by one).
FrequencyVector fictitious_adjust(const RootedFragment& frag, const ChemicalAlphabet& alphabet, Adjust mode);
// The change f(T[+p]) - f(T) applied to w (sign +1) or removed from it (sign -1).
FrequencyVector apply_adjust(const FrequencyVector& w, const RootedFragment& frag, const ChemicalAlphabet& alphabet,
                             Adjust mode, int sign);

}  // namespace qinv::desc
