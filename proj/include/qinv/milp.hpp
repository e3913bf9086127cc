#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "qinv/ann.hpp"
#include "qinv/chemgraph.hpp"
#include "qinv/descriptors.hpp"

namespace qinv::milp {

using chem::ChemicalAlphabet;
using chem::ChemicalGraph;
using chem::RootedTreeTemplate;
using Value = boost::multiprecision::cpp_rational;

// ---------------------------------------------------------------------------
// Model IR

enum class VarType { Binary, Integer, Continuous };
enum class Sense { LE, GE, EQ };

struct Variable {
    std::string name;
    VarType type = VarType::Continuous;
    double lo = 0.0, hi = 0.0;
};

struct Term {
    int var = 0;
    double coef = 0.0;
};

struct Constraint {
    std::string name;
    std::string group;
    std::vector<Term> terms;  // sorted by variable, merged
    Sense sense = Sense::LE;
    double rhs = 0.0;
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class MilpModel {
public:
    int add_var(const std::string& name, VarType type, double lo, double hi);
    int add_binary(const std::string& name) { return add_var(name, VarType::Binary, 0, 1); }
    int add_integer(const std::string& name, double lo, double hi) { return add_var(name, VarType::Integer, lo, hi); }
    int add_continuous(const std::string& name, double lo, double hi) {
        return add_var(name, VarType::Continuous, lo, hi);
    }

    // Terms with zero coefficient are dropped. A constraint left without terms is checked
    // statically: it is skipped when it holds and raises ModelError otherwise.
    void add_constraint(const std::string& group, const std::string& name, std::vector<Term> terms, Sense sense,
                        double rhs);

    int var(const std::string& name) const;   // throws ModelError
    int find(const std::string& name) const;  // -1 if absent
    const std::vector<Variable>& variables() const { return vars_; }
    const std::vector<Constraint>& constraints() const { return cons_; }
    int num_vars() const { return static_cast<int>(vars_.size()); }
    int num_constraints() const { return static_cast<int>(cons_.size()); }
    // Indices of constraints that mention variable v.
    const std::vector<int>& constraints_of(int v) const;
    // Number of constraints per group label.
    std::map<std::string, int> group_counts() const;

private:
    std::vector<Variable> vars_;
    std::vector<Constraint> cons_;
    std::unordered_map<std::string, int> index_;
    mutable std::vector<std::vector<int>> by_var_;
    mutable bool by_var_ready_ = false;
};

std::string emit_lp(const MilpModel& model);
// Reads the subset of LP text written by emit_lp. Constraint groups are recovered from the
// name prefix before the first underscore.
MilpModel parse_lp(const std::string& text);

struct Assignment {
    std::map<std::string, Value> values;
    std::vector<std::string> warnings;

    void set(const std::string& name, const Value& v) { values[name] = v; }
    Value get(const std::string& name) const;
};

// Exact value of a decimal or scientific literal.
Value parse_decimal(const std::string& text);
double to_double(const Value& v);

// "name value" per line; blank lines and lines starting with '#' are ignored.
Assignment parse_solution(const std::string& text, const MilpModel& model);
std::string format_solution(const Assignment& asg, const MilpModel& model);

struct Violation {
    int constraint = -1;  // -1 for a bound violation
    std::string name;
    std::string group;
    double lhs = 0.0, rhs = 0.0;
    std::string describe() const;
};

constexpr double kTolerance = 1e-6;

// Every constraint and variable bound, evaluated exactly; missing values count as 0.
std::vector<Violation> check_assignment(const MilpModel& model, const Assignment& asg, int threads = 1);
// Only the given constraints (and no bounds).
std::vector<Violation> check_constraints(const MilpModel& model, const Assignment& asg,
                                         const std::vector<int>& constraint_ids);

// ---------------------------------------------------------------------------
// Target and scheme graph

struct TargetSpec {
    ChemicalAlphabet alphabet;
    int n_star = 0;
    int d_max = 3;
    int dia_star = 0;
    int k_star = 2;
    int bh_star = 1;
    int bl_star = 2;
    double y_star = 0.0;
    double epsilon = 0.02;
    int t_star_override = 0;  // 0 means the formula value

    void validate() const;  // throws std::invalid_argument
};

struct SchemeGraph {
    int s_star = 0, c_star = 0, t_star = 0;
    int n_tree_S = 0, n_tree_T = 0;
    RootedTreeTemplate base, s_tree, t_tree;
    // 1-based edge index i: a_i joins tail(i) = prt(i+1) and head(i) = i+1.
    std::vector<int> head, tail;
    // 1-based vertex index s.
    std::vector<std::vector<int>> e_plus, e_minus, e_b;
    std::vector<int> leaves;
    int s_left = 0, s_right = 0;
    // Non-root vertices and edges on the path from the root to s.
    std::vector<std::vector<int>> v_path, e_path;

    std::vector<int> v_at_depth(int d) const { return base.at_depth(d); }
};

struct InfeasibleSpec : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

int formula_t_star(const TargetSpec& spec);
SchemeGraph scheme_graph(const TargetSpec& spec);

// ---------------------------------------------------------------------------
// Descriptor bounds

struct Range {
    desc::Rational lo, hi;
};

struct DescriptorBounds {
    Range dg_in[5], dg_ex[5];  // 1..4
    std::vector<Range> ce_in, ce_ex;
    Range bd_in[4], bd_ex[4];  // 2..3
    std::vector<Range> ac_in, ac_ex, bc_in, bc_ex;

    // Every lower bound at or below its upper bound; throws InfeasibleSpec otherwise.
    void check() const;
};

// Scaled min/max over D and the slice of graphs with n = n*. Ratios that need n(G) - 1 skip
// single-vertex graphs.
DescriptorBounds compute_bounds(const std::vector<ChemicalGraph>& D, int n_star,
                                const std::vector<ChemicalGraph>& db_slice, const ChemicalAlphabet& alphabet,
                                int k);

// Bounds that admit any value in [0, n*] (or [0, n*-1] for edge families).
DescriptorBounds open_bounds(const ChemicalAlphabet& alphabet, int n_star);

// ---------------------------------------------------------------------------
// Model construction

// Adds hidden, activation and indicator variables for the ReLU net on the given input variables,
// whose raw values range over [lo, hi]. Returns the index of the output variable "y".
int add_ann_block(MilpModel& model, const ann::NeuralNet& net, const std::vector<int>& inputs,
                  const std::vector<double>& lo, const std::vector<double>& hi);

// Raw value box of each serialized descriptor under a TargetSpec and its bounds.
std::vector<std::pair<double, double>> descriptor_box(const TargetSpec& spec, const DescriptorBounds& bounds);

MilpModel build_model(const TargetSpec& spec, const DescriptorBounds& bounds, const ann::NeuralNet& net);
// Graph part only (no descriptor inputs x, ANN block or target window).
MilpModel build_structure_model(const TargetSpec& spec, const DescriptorBounds& bounds);

// ---------------------------------------------------------------------------
// Encoding and decoding

struct ClassError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

Assignment encode_graph(const ChemicalGraph& g, const SchemeGraph& sg, const TargetSpec& spec);
// Also fills x, the ANN block and y.
Assignment encode_graph(const ChemicalGraph& g, const SchemeGraph& sg, const TargetSpec& spec,
                        const ann::NeuralNet& net);
// Fills the ANN block variables from the x values already present in asg.
void encode_ann(Assignment& asg, const ann::NeuralNet& net, const std::vector<std::string>& input_names);

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ChemicalGraph decode_graph(const Assignment& asg, const SchemeGraph& sg, const TargetSpec& spec);

// Names of the serialized descriptor inputs x.
std::vector<std::string> input_names(const ChemicalAlphabet& alphabet);

}  // namespace qinv::milp
