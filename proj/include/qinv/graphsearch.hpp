#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qinv/chemgraph.hpp"
#include "qinv/descriptors.hpp"

namespace qinv::search {

using chem::ChemicalAlphabet;
using chem::ChemicalGraph;
using desc::FrequencyVector;
using Count = boost::multiprecision::cpp_int;

struct SearchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// The target admits no graph of the requested class (backbone lengths do not fit).
struct InfeasibleTarget : SearchError {
    using SearchError::SearchError;
};

struct SearchLimits {
    double time_limit = 600.0;          // seconds per step
    std::size_t ub = 10'000'000;        // vectors kept per bucket
    std::size_t max_output = 1'000'000;  // assembled graphs
    bool exhaustive = false;            // keep every tree per vector, not just one sample
    int threads = 1;
    void check() const;
};

enum class BucketKind { End, Inl, Inl3, End2, Main };
std::string kind_name(BucketKind k);

// A fragment tree. attach is the terminal joined by the next combination step
// (r1 of end trees, the root of fringe trees, the joint vertex of main trees).
// ends holds the leaf-branch terminals: one vertex, or two for main trees.
struct Sample {
    ChemicalGraph tree;
    int attach = 0;
    std::vector<int> ends;

    desc::RootedFragment fragment() const;
};

struct Entry {
    Count count = 0;
    std::vector<Sample> samples;
};

struct BucketKey {
    int a = 0, d = 0, m = 0;
    auto operator<=>(const BucketKey&) const = default;
};

struct VectorBucket {
    BucketKind kind = BucketKind::End;
    int h = 0;
    BucketKey key;
    std::map<FrequencyVector, Entry> entries;
};

// All buckets of one kind and backbone length, keyed by (a, d, m).
struct BucketFamily {
    BucketKind kind = BucketKind::End;
    int h = 0;
    std::map<BucketKey, VectorBucket> buckets;
    bool truncated = false;

    std::size_t size() const;
};

std::pair<int, int> bl2_deltas(int dia);
int bl3_delta3(int n_inl, int dia);
std::pair<int, int> bl3_delta1_range(int dia, int delta3);
std::pair<int, int> bl3_delta2_range(int dia, int delta3);

struct SearchProblem {
    ChemicalAlphabet alphabet;
    FrequencyVector x;
    int dia = 0;
    int bl = 2;
    int d_max = 4;
    int n_star = 0, n_inl = 0;
    int delta1 = 0, delta2 = 0;  // bl = 2
    int delta3 = 0;              // bl = 3; delta1 ranges over bl3_delta1_range

    // d_max defaults to the largest degree with a nonzero count in x.
    static SearchProblem make(const ChemicalAlphabet& alphabet, FrequencyVector x, int dia, int bl, int d_max = 0);
};

// Necessary conditions for a fringe fragment with frequency vector f0 to be
// completed within x: every remaining external atom needs a remaining external edge.
bool extensible(const FrequencyVector& f0, const FrequencyVector& x, const ChemicalAlphabet& alphabet);
int neighbor_budget(const FrequencyVector& f0, const FrequencyVector& x, const ChemicalAlphabet& alphabet, int a);
// Condition for appending a new atom to an atom of element a.
bool extensible_append(const FrequencyVector& f0, const FrequencyVector& x, const ChemicalAlphabet& alphabet, int a);

struct FringeBuckets {
    BucketFamily end0, inl, inl3;
    bool truncated = false;
};

FringeBuckets enumerate_fringe_trees(const SearchProblem& p, const SearchLimits& limits);

// W_end^(h) (from an Inl family) or W_end+2^(h) (from an Inl3 family) out of W_end^(h-1).
BucketFamily extend_end(const BucketFamily& prev_end, const BucketFamily& fringe, const SearchProblem& p,
                        const SearchLimits& limits);

// (x_in - w_in - 1_gamma - 1_mu, x_ex - w_ex); bc < 0 means mu lies outside Bc.
std::optional<FrequencyVector> complement(const FrequencyVector& w, int gamma, int bc, const FrequencyVector& x,
                                          const desc::KeyLayout& layout);

struct FeasiblePair {
    BucketKey k1, k2;
    int m = 0;
    const FrequencyVector* w1 = nullptr;
    const FrequencyVector* w2 = nullptr;
    const Entry* e1 = nullptr;  // point into the families passed to feasible_pairs
    const Entry* e2 = nullptr;
};

std::vector<FeasiblePair> feasible_pairs(const BucketFamily& A, const BucketFamily& B, const SearchProblem& p);

BucketFamily build_main(const BucketFamily& end2, const BucketFamily& end, const SearchProblem& p,
                        const SearchLimits& limits);

struct SearchResult {
    std::vector<ChemicalGraph> graphs;
    std::size_t pair_count = 0;
    Count weighted_pairs = 0;  // sum of t(w1) t(w2)
    Count lower_bound = 0;
    bool complete = true;
    std::string summary() const;
};

SearchResult search_bl2(const SearchProblem& p, const SearchLimits& limits);
SearchResult search_bl3(const SearchProblem& p, const SearchLimits& limits);
SearchResult search(const SearchProblem& p, const SearchLimits& limits);

// n <= 2d + 2 on every 2-fringe-tree of g (n vertices, d root children).
bool fringe_size_ok(const ChemicalGraph& g);

struct CapExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BruteOptions {
    std::size_t cap = 2'000'000;
    int d_max = 4;
    int max_mult = 3;
    int max_dia = -1;  // prune growth beyond this diameter; -1 = none
};

// All pairwise non-isomorphic chemical trees on n vertices over the alphabet.
std::vector<ChemicalGraph> brute_force_enumerate(const ChemicalAlphabet& alphabet, int n, const BruteOptions& opt = {});
// All pairwise non-isomorphic chemical trees whose k=2 frequency vector equals x.
std::vector<ChemicalGraph> brute_force_enumerate(const ChemicalAlphabet& alphabet, const FrequencyVector& x,
                                                 const BruteOptions& opt = {});

struct Target {
    FrequencyVector x;
    int dia = 0;
    int bl = 0;
};

Target target_of(const ChemicalGraph& g, const ChemicalAlphabet& alphabet);
std::string format_target(const Target& t, const ChemicalAlphabet& alphabet);
Target parse_target(const std::string& text, const ChemicalAlphabet& alphabet);

}  // namespace qinv::search
