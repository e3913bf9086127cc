#include "qinv/graphsearch.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

namespace qinv::search {

using desc::KeyLayout;

void SearchLimits::check() const {
    if (!(time_limit > 0)) throw SearchError("time limit must be positive");
    if (ub == 0) throw SearchError("vector-set cap must be positive");
    if (max_output == 0) throw SearchError("output cap must be positive");
    if (threads < 1) throw SearchError("thread count must be positive");
}

std::string kind_name(BucketKind k) {
    switch (k) {
        case BucketKind::End: return "end";
        case BucketKind::Inl: return "inl";
        case BucketKind::Inl3: return "inl+3";
        case BucketKind::End2: return "end+2";
        case BucketKind::Main: return "main";
    }
    return "?";
}

desc::RootedFragment Sample::fragment() const {
    if (ends.size() == 2) return desc::make_fragment(tree, ends[0], ends[1], attach);
    return desc::make_fragment(tree, attach, ends.empty() ? attach : ends[0]);
}

std::size_t BucketFamily::size() const {
    std::size_t s = 0;
    for (const auto& [k, b] : buckets) s += b.entries.size();
    return s;
}

std::pair<int, int> bl2_deltas(int dia) {
    if (dia < 6) throw InfeasibleTarget("bl=2 needs dia* >= 6, got " + std::to_string(dia));
    return {(dia - 5) / 2, (dia - 4) / 2};
}

int bl3_delta3(int n_inl, int dia) { return n_inl - dia + 2; }

std::pair<int, int> bl3_delta1_range(int dia, int delta3) { return {(dia + 1) / 2 - 3, dia - 6 - delta3}; }

std::pair<int, int> bl3_delta2_range(int dia, int delta3) { return {delta3, dia / 2 - 3}; }

SearchProblem SearchProblem::make(const ChemicalAlphabet& alphabet, FrequencyVector x, int dia, int bl, int d_max) {
    KeyLayout L(alphabet);
    if (static_cast<int>(x.in.size()) != L.size() || static_cast<int>(x.ex.size()) != L.size())
        throw SearchError("target vector has the wrong dimension");
    if (!x.nonnegative()) throw SearchError("target vector has a negative entry");
    if (bl != 2 && bl != 3) throw SearchError("only bl = 2 and bl = 3 are supported");
    SearchProblem p;
    p.alphabet = alphabet;
    p.x = std::move(x);
    p.dia = dia;
    p.bl = bl;
    for (int a = 0; a < L.n_elem; ++a) {
        p.n_inl += p.x.in[L.elem(a)];
        p.n_star += p.x.in[L.elem(a)] + p.x.ex[L.elem(a)];
    }
    if (d_max <= 0) {
        d_max = 1;
        for (int d = 1; d <= 4; ++d)
            if (p.x.in[L.dg(d)] + p.x.ex[L.dg(d)] > 0) d_max = d;
    }
    if (d_max < 2 || d_max > 4) throw SearchError("d_max must lie in [2, 4] for a target with branches");
    p.d_max = d_max;
    if (bl == 2) {
        std::tie(p.delta1, p.delta2) = bl2_deltas(dia);
    } else {
        if (dia < 6) throw InfeasibleTarget("bl=3 needs dia* >= 6, got " + std::to_string(dia));
        p.delta3 = bl3_delta3(p.n_inl, dia);
        if (p.delta3 < 0) throw InfeasibleTarget("bl=3 impossible for this x*/dia*");
    }
    return p;
}

namespace {

int rem(const FrequencyVector& f0, const FrequencyVector& x, int idx) { return x.ex[idx] - f0.ex[idx]; }

}  // namespace

bool extensible(const FrequencyVector& f0, const FrequencyVector& x, const ChemicalAlphabet& alphabet) {
    KeyLayout L(alphabet);
    const auto& G = alphabet.gamma();
    for (unsigned mask = 1; mask < (1u << L.n_elem); ++mask) {
        auto in_set = [&](int a) { return (mask >> a) & 1u; };
        long long lhs = 0, rhs = 0;
        for (int a = 0; a < L.n_elem; ++a)
            if (in_set(a)) lhs += rem(f0, x, L.elem(a));
        for (int i = 0; i < L.n_gamma; ++i) {
            bool ia = in_set(G[i].a), ib = in_set(G[i].b);
            if (ia && ib)
                rhs += 2LL * rem(f0, x, L.gamma(i));
            else if (ia || ib)
                rhs += rem(f0, x, L.gamma(i));
        }
        if (lhs > rhs) return false;
    }
    return true;
}

int neighbor_budget(const FrequencyVector& f0, const FrequencyVector& x, const ChemicalAlphabet& alphabet, int a) {
    KeyLayout L(alphabet);
    const auto& G = alphabet.gamma();
    int nb = 0;
    for (int i = 0; i < L.n_gamma; ++i) {
        if (G[i].a == a && G[i].b == a)
            nb += 2 * rem(f0, x, L.gamma(i));
        else if (G[i].a == a || G[i].b == a)
            nb += rem(f0, x, L.gamma(i));
    }
    return nb;
}

bool extensible_append(const FrequencyVector& f0, const FrequencyVector& x, const ChemicalAlphabet& alphabet, int a) {
    KeyLayout L(alphabet);
    return rem(f0, x, L.elem(a)) <= neighbor_budget(f0, x, alphabet, a) - 1;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Deadline {
    Clock::time_point end;
    explicit Deadline(double seconds)
        : end(Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(seconds))) {}
    bool passed() const { return Clock::now() > end; }
};

// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

// Entry slot for w, or nullptr when the bucket is full and w sorts after every kept vector.
Entry* admit(VectorBucket& b, const FrequencyVector& w, std::size_t ub, bool& truncated) {
    auto it = b.entries.find(w);
    if (it != b.entries.end()) return &it->second;
    if (b.entries.size() >= ub) {
        truncated = true;
        auto last = std::prev(b.entries.end());
        if (!(w < last->first)) return nullptr;
        b.entries.erase(last);
    }
    return &b.entries.emplace(w, Entry{}).first->second;
}

Sample join(const Sample& A, const Sample& B, int q) {
    Sample s;
    s.tree = A.tree;
    int off = A.tree.n();
    for (int v = 0; v < B.tree.n(); ++v) s.tree.add_vertex(B.tree.label(v));
    for (const auto& e : B.tree.edges()) s.tree.add_edge(e.u + off, e.v + off, e.m);
    s.tree.add_edge(A.attach, B.attach + off, q);
    s.attach = A.attach;
    s.ends = A.ends;
    for (int v : B.ends) s.ends.push_back(v + off);
    return s;
}

void record(Entry& e, const Entry& e1, const Entry& e2, int q, bool exhaustive) {
    e.count += e1.count * e2.count;
    if (exhaustive) {
        for (const auto& s1 : e1.samples)
            for (const auto& s2 : e2.samples) e.samples.push_back(join(s1, s2, q));
    } else if (e.samples.empty()) {
        e.samples.push_back(join(e1.samples.front(), e2.samples.front(), q));
    }
}

bool sum_fits(const FrequencyVector& a, const FrequencyVector& b, const FrequencyVector& x, int gi, int bi) {
    for (std::size_t i = 0; i < x.in.size(); ++i) {
        int v = a.in[i] + b.in[i] + (static_cast<int>(i) == gi) + (static_cast<int>(i) == bi);
        if (v > x.in[i] || a.ex[i] + b.ex[i] > x.ex[i]) return false;
    }
    return true;
}

// Joins the attach terminal of every fragment in A (whose attach terminal keeps
// `room` further backbone bonds) to the attach terminal of every fragment in B.
BucketFamily combine(const BucketFamily& A, const BucketFamily& B, int room, BucketKind kind, int h,
                     const SearchProblem& p, const SearchLimits& limits) {
    const auto& alph = p.alphabet;
    KeyLayout L(alph);
    struct Job {
        const VectorBucket* a;
        const VectorBucket* b;
        int q, gi, bi;
    };
    std::map<BucketKey, std::vector<Job>> jobs;
    for (const auto& [kb, bb] : B.buckets)
        for (const auto& [ka, ba] : A.buckets) {
            int d = ka.d + 1;
            if (d + room > p.d_max) continue;
            for (int q = 1; q <= 3; ++q) {
                int gi = alph.gamma_index(ka.a, kb.a, q);
                if (gi < 0 || q > alph.val(kb.a) - kb.m || ka.m + q + room > alph.val(ka.a)) continue;
                int bi = alph.bc_index(ka.d + room + 1, kb.d + 1, q);
                jobs[BucketKey{ka.a, d, ka.m + q}].push_back(
                    Job{&ba, &bb, q, L.gamma(gi), bi >= 0 ? L.bc(bi) : -1});
            }
        }
    std::vector<BucketKey> keys;
    for (const auto& [k, v] : jobs) keys.push_back(k);
    std::vector<VectorBucket> out(keys.size());
    std::vector<char> trunc(keys.size(), 0);
    Deadline deadline(limits.time_limit);
    parallel_for(keys.size(), limits.threads, [&](std::size_t i) {
        VectorBucket& vb = out[i];
        vb.kind = kind;
        vb.h = h;
        vb.key = keys[i];
        bool t = false;
        for (const auto& job : jobs.at(keys[i])) {
            for (const auto& [w2, e2] : job.b->entries) {
                if (deadline.passed()) {
                    t = true;
                    break;
                }
                for (const auto& [w1, e1] : job.a->entries) {
                    if (!sum_fits(w1, w2, p.x, job.gi, job.bi)) continue;
                    FrequencyVector w = w1 + w2;
                    w.in[job.gi] += 1;
                    if (job.bi >= 0) w.in[job.bi] += 1;
                    Entry* e = admit(vb, w, limits.ub, t);
                    if (e) record(*e, e1, e2, job.q, limits.exhaustive);
                }
            }
        }
        trunc[i] = t;
    });
    BucketFamily fam;
    fam.kind = kind;
    fam.h = h;
    fam.truncated = A.truncated || B.truncated;
    for (std::size_t i = 0; i < keys.size(); ++i) {
        if (trunc[i]) fam.truncated = true;
        if (!out[i].entries.empty()) fam.buckets.emplace(keys[i], std::move(out[i]));
    }
    return fam;
}

struct ChildType {
    int b = 0, q = 0;
    std::vector<std::pair<int, int>> leaves;  // (element, multiplicity), nondecreasing
    FrequencyVector ex;                       // all but the bond-configuration of the edge to the root
    int deg = 1;
};

// Children of a root with element a: a child atom with its own pendant atoms.
std::vector<ChildType> child_types(int a, const SearchProblem& p) {
    const auto& alph = p.alphabet;
    KeyLayout L(alph);
    std::vector<ChildType> out;
    FrequencyVector zero(L.size());
    for (int b = 0; b < alph.size(); ++b)
        for (int q = 1; q <= 3; ++q) {
            int g0 = alph.gamma_index(a, b, q);
            if (g0 < 0) continue;
            std::vector<std::pair<int, int>> opts;
            for (int c = 0; c < alph.size(); ++c)
                for (int r = 1; r <= 3; ++r)
                    if (alph.gamma_index(b, c, r) >= 0) opts.push_back({c, r});
            ChildType base;
            base.b = b;
            base.q = q;
            base.ex = zero;
            base.ex.ex[L.elem(b)] += 1;
            base.ex.ex[L.gamma(g0)] += 1;
            if (!base.ex.leq(p.x)) continue;
            // leaves are chosen first, then the degree-dependent entries are added
            std::function<void(std::size_t, ChildType&, int)> grow = [&](std::size_t start, ChildType& cur, int bonds) {
                ChildType t = cur;
                t.deg = 1 + static_cast<int>(cur.leaves.size());
                t.ex.ex[L.dg(t.deg)] += 1;
                for (const auto& [c, r] : cur.leaves) {
                    t.ex.ex[L.dg(1)] += 1;
                    int bi = alph.bc_index(t.deg, 1, r);
                    if (bi >= 0) t.ex.ex[L.bc(bi)] += 1;
                }
                if (t.ex.leq(p.x)) out.push_back(std::move(t));
                if (static_cast<int>(cur.leaves.size()) >= p.d_max - 1) return;
                if (!extensible_append(cur.ex, p.x, alph, b)) return;
                for (std::size_t i = start; i < opts.size(); ++i) {
                    auto [c, r] = opts[i];
                    if (bonds + r > alph.val(b)) continue;
                    ChildType nxt = cur;
                    nxt.leaves.push_back({c, r});
                    nxt.ex.ex[L.elem(c)] += 1;
                    nxt.ex.ex[L.gamma(alph.gamma_index(b, c, r))] += 1;
                    if (!nxt.ex.leq(p.x)) continue;
                    grow(i, nxt, bonds + r);
                }
            };
            grow(0, base, q);
        }
    return out;
}

Sample fringe_sample(int a, const std::vector<const ChildType*>& kids) {
    Sample s;
    s.tree.add_vertex(a);
    s.attach = 0;
    for (const ChildType* c : kids) {
        int v = s.tree.add_vertex(c->b);
        s.tree.add_edge(0, v, c->q);
        for (const auto& [e, r] : c->leaves) s.tree.add_edge(v, s.tree.add_vertex(e), r);
    }
    return s;
}

}  // namespace

FringeBuckets enumerate_fringe_trees(const SearchProblem& p, const SearchLimits& limits) {
    const auto& alph = p.alphabet;
    KeyLayout L(alph);
    FringeBuckets fb;
    fb.end0.kind = BucketKind::End;
    fb.inl.kind = BucketKind::Inl;
    fb.inl3.kind = BucketKind::Inl3;
    Deadline deadline(limits.time_limit);
    bool stop = false;
    for (int a = 0; a < alph.size() && !stop; ++a) {
        if (p.x.in[L.elem(a)] == 0) continue;
        auto types = child_types(a, p);
        std::vector<const ChildType*> kids;
        FrequencyVector acc(L.size());
        // one emission per root-degree raise p: 1 for end, 2 for inl, 3 for inl+3
        auto emit = [&](int size, int m, bool tall) {
            int d = static_cast<int>(kids.size());
            if (size > 2 * d + 2) return;
            for (int raise = 1; raise <= 3; ++raise) {
                if (d + raise > p.d_max || m + raise > alph.val(a)) continue;
                if (raise == 1 && (!tall || d == 0)) continue;
                int D = d + raise;
                FrequencyVector w = acc;
                w.in[L.elem(a)] += 1;
                w.in[L.dg(D)] += 1;
                for (const ChildType* c : kids) {
                    int bi = alph.bc_index(D, c->deg, c->q);
                    if (bi >= 0) w.ex[L.bc(bi)] += 1;
                }
                if (!w.leq(p.x) || !extensible(w, p.x, alph)) continue;
                BucketFamily& fam = raise == 1 ? fb.end0 : raise == 2 ? fb.inl : fb.inl3;
                BucketKey key{a, d, m};
                auto& vb = fam.buckets[key];
                vb.kind = fam.kind;
                vb.key = key;
                Entry* e = admit(vb, w, limits.ub, fam.truncated);
                if (!e) continue;
                e->count += 1;
                if (e->samples.empty() || limits.exhaustive) {
                    Sample s = fringe_sample(a, kids);
                    if (raise == 1) s.ends = {0};
                    e->samples.push_back(std::move(s));
                }
            }
        };
        std::function<void(std::size_t, int, int, bool)> rec = [&](std::size_t start, int size, int m, bool tall) {
            if (deadline.passed()) {
                stop = true;
                return;
            }
            emit(size, m, tall);
            if (static_cast<int>(kids.size()) >= p.d_max - 1) return;
            for (std::size_t i = start; i < types.size(); ++i) {
                const ChildType& c = types[i];
                if (m + c.q + 1 > alph.val(a)) continue;
                int nsize = size + 1 + static_cast<int>(c.leaves.size());
                if (nsize > 2 * p.d_max) continue;
                if (!extensible_append(acc, p.x, alph, a)) return;
                FrequencyVector before = acc;
                acc += c.ex;
                if (acc.leq(p.x)) {
                    kids.push_back(&c);
                    rec(i, nsize, m + c.q, tall || !c.leaves.empty());
                    kids.pop_back();
                }
                acc = std::move(before);
                if (stop) return;
            }
        };
        rec(0, 1, 0, false);
    }
    for (auto* fam : {&fb.end0, &fb.inl, &fb.inl3}) {
        for (auto it = fam->buckets.begin(); it != fam->buckets.end();)
            it = it->second.entries.empty() ? fam->buckets.erase(it) : std::next(it);
        if (stop) fam->truncated = true;
        fb.truncated = fb.truncated || fam->truncated;
    }
    return fb;
}

BucketFamily extend_end(const BucketFamily& prev_end, const BucketFamily& fringe, const SearchProblem& p,
                        const SearchLimits& limits) {
    if (prev_end.kind != BucketKind::End) throw std::invalid_argument("extend_end: previous family is not an end family");
    if (fringe.kind == BucketKind::Inl)
        return combine(fringe, prev_end, 1, BucketKind::End, prev_end.h + 1, p, limits);
    if (fringe.kind == BucketKind::Inl3)
        return combine(fringe, prev_end, 2, BucketKind::End2, prev_end.h + 1, p, limits);
    throw std::invalid_argument("extend_end: fringe family must be inl or inl+3");
}

BucketFamily build_main(const BucketFamily& end2, const BucketFamily& end, const SearchProblem& p,
                        const SearchLimits& limits) {
    if (end2.kind != BucketKind::End2 || end.kind != BucketKind::End)
        throw std::invalid_argument("build_main: expects an end+2 family and an end family");
    return combine(end2, end, 1, BucketKind::Main, end2.h, p, limits);
}

std::optional<FrequencyVector> complement(const FrequencyVector& w, int gamma, int bc, const FrequencyVector& x,
                                          const KeyLayout& layout) {
    FrequencyVector c = x - w;
    c.in[layout.gamma(gamma)] -= 1;
    if (bc >= 0) c.in[layout.bc(bc)] -= 1;
    if (!c.nonnegative()) return std::nullopt;
    return c;
}

std::vector<FeasiblePair> feasible_pairs(const BucketFamily& A, const BucketFamily& B, const SearchProblem& p) {
    const auto& alph = p.alphabet;
    KeyLayout L(alph);
    std::vector<FeasiblePair> out;
    for (const auto& [k1, b1] : A.buckets)
        for (const auto& [k2, b2] : B.buckets) {
            if (k1.d + 1 > p.d_max || k2.d + 1 > p.d_max) continue;
            int top = std::min({3, alph.val(k1.a) - k1.m, alph.val(k2.a) - k2.m});
            for (int q = 1; q <= top; ++q) {
                int gi = alph.gamma_index(k1.a, k2.a, q);
                if (gi < 0) continue;
                int bi = alph.bc_index(k1.d + 1, k2.d + 1, q);
                std::vector<std::pair<FrequencyVector, const std::pair<const FrequencyVector, Entry>*>> comps;
                for (const auto& kv : b2.entries)
                    if (auto c = complement(kv.first, gi, bi, p.x, L)) comps.push_back({std::move(*c), &kv});
                std::sort(comps.begin(), comps.end(),
                          [](const auto& l, const auto& r) { return l.first < r.first; });
                auto it = b1.entries.begin();
                for (const auto& [c, kv2] : comps) {
                    while (it != b1.entries.end() && it->first < c) ++it;
                    if (it == b1.entries.end()) break;
                    if (it->first == c)
                        out.push_back(FeasiblePair{k1, k2, q, &it->first, &kv2->first, &it->second, &kv2->second});
                }
            }
        }
    return out;
}

bool fringe_size_ok(const ChemicalGraph& g) {
    auto bd = chem::branch_decomposition(g, 2);
    for (const auto& ft : bd.fringe_trees)
        if (static_cast<int>(ft.vertices.size()) > 2 * ft.root_children + 2) return false;
    return true;
}

std::string SearchResult::summary() const {
    std::ostringstream os;
    os << "#FP=" << pair_count << ", G-LB=" << lower_bound << ", #G=" << graphs.size()
       << ", complete=" << (complete ? "yes" : "no");
    return os.str();
}

namespace {

void check_output(const ChemicalGraph& g, const SearchProblem& p) {
    auto rep = chem::validate(g, p.alphabet);
    if (!rep.ok()) throw std::logic_error("graph search assembled an invalid graph: " + rep.describe());
    Target t = target_of(g, p.alphabet);
    if (!(t.x == p.x) || t.dia != p.dia || t.bl != p.bl || !fringe_size_ok(g))
        throw std::logic_error("graph search assembled a graph outside the target class");
}

void assemble(const std::vector<FeasiblePair>& pairs, const SearchProblem& p, const SearchLimits& limits,
              std::set<std::string>& seen, SearchResult& r) {
    for (const auto& fp : pairs) {
        std::size_t n1 = limits.exhaustive ? fp.e1->samples.size() : 1;
        std::size_t n2 = limits.exhaustive ? fp.e2->samples.size() : 1;
        for (std::size_t i = 0; i < n1; ++i)
            for (std::size_t j = 0; j < n2; ++j) {
                Sample s = join(fp.e1->samples[i], fp.e2->samples[j], fp.m);
                check_output(s.tree, p);
                if (!seen.insert(chem::canonical_form(s.tree)).second) continue;
                if (r.graphs.size() >= limits.max_output) {
                    r.complete = false;
                    return;
                }
                r.graphs.push_back(std::move(s.tree));
            }
    }
}

Count weigh(const std::vector<FeasiblePair>& pairs) {
    Count s = 0;
    for (const auto& fp : pairs) s += fp.e1->count * fp.e2->count;
    return s;
}

Count ceil_div(const Count& a, int c) { return (a + c - 1) / c; }

}  // namespace

SearchResult search_bl2(const SearchProblem& p, const SearchLimits& limits) {
    limits.check();
    if (p.bl != 2) throw SearchError("search_bl2 called with bl = " + std::to_string(p.bl));
    SearchResult r;
    // the backbone path carries every internal vertex
    if (p.n_inl != p.dia - 3) return r;
    auto fr = enumerate_fringe_trees(p, limits);
    std::vector<BucketFamily> end;
    end.push_back(std::move(fr.end0));
    for (int h = 1; h <= std::max(p.delta1, p.delta2); ++h) end.push_back(extend_end(end.back(), fr.inl, p, limits));
    const auto& A = end[static_cast<std::size_t>(p.delta1)];
    const auto& B = end[static_cast<std::size_t>(p.delta2)];
    auto pairs = feasible_pairs(A, B, p);
    r.pair_count = pairs.size();
    r.weighted_pairs = weigh(pairs);
    // every graph arises from its two backbone orientations, which coincide only under an axial symmetry
    r.lower_bound = ceil_div(r.weighted_pairs, 2);
    r.complete = !(fr.truncated || A.truncated || B.truncated);
    std::set<std::string> seen;
    assemble(pairs, p, limits, seen, r);
    return r;
}

SearchResult search_bl3(const SearchProblem& p, const SearchLimits& limits) {
    limits.check();
    if (p.bl != 3) throw SearchError("search_bl3 called with bl = " + std::to_string(p.bl));
    SearchResult r;
    auto [lo, hi] = bl3_delta1_range(p.dia, p.delta3);
    if (lo > hi) return r;
    auto fr = enumerate_fringe_trees(p, limits);
    r.complete = !fr.truncated;
    std::vector<BucketFamily> end;
    end.push_back(std::move(fr.end0));
    for (int h = 1; h <= hi; ++h) end.push_back(extend_end(end.back(), fr.inl, p, limits));
    for (const auto& f : end)
        if (f.truncated) r.complete = false;
    std::set<std::string> seen;
    for (int d1 = lo; d1 <= hi; ++d1) {
        int d2 = p.dia - 6 - d1, d3 = p.delta3;
        auto end2 = extend_end(end[static_cast<std::size_t>(d1)], fr.inl3, p, limits);
        auto main = build_main(end2, end[static_cast<std::size_t>(d2)], p, limits);
        if (main.truncated) r.complete = false;
        auto pairs = feasible_pairs(main, end[static_cast<std::size_t>(d3)], p);
        Count w = weigh(pairs);
        // legs of equal length can trade places: 2 ways for one tie, 6 when all three agree
        int ways = (d1 == d2 && d2 == d3) ? 6 : (d1 == d2 || d2 == d3) ? 2 : 1;
        r.pair_count += pairs.size();
        r.weighted_pairs += w;
        r.lower_bound += ceil_div(w, ways);
        assemble(pairs, p, limits, seen, r);
    }
    return r;
}

SearchResult search(const SearchProblem& p, const SearchLimits& limits) {
    return p.bl == 2 ? search_bl2(p, limits) : search_bl3(p, limits);
}

}  // namespace qinv::search
