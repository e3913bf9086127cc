#include "qinv/dataset.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qinv::data {

namespace {

struct RecordError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return "";
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string field(const std::string& line, size_t pos, size_t len) {
    if (pos >= line.size()) return "";
    return trim(std::string_view(line).substr(pos, len));
}

int int_field(const std::string& line, size_t pos, size_t len, const char* what) {
    auto s = field(line, pos, len);
    try {
        size_t used = 0;
        int v = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw RecordError(std::string("bad ") + what + " field '" + s + "'");
    }
}

// Parses one record (lines up to but excluding "$$$$").
ChemicalGraph parse_record(const std::vector<std::string>& lines, const ChemicalAlphabet& alphabet) {
    if (lines.size() < 4) throw RecordError("truncated header");
    const auto& counts = lines[3];
    if (counts.find("V3000") != std::string::npos) throw RecordError("V3000 connection tables are not supported");
    int n_atoms = int_field(counts, 0, 3, "atom count");
    int n_bonds = int_field(counts, 3, 3, "bond count");
    if (n_atoms < 0 || n_bonds < 0) throw RecordError("negative counts");
    if (lines.size() < 4 + static_cast<size_t>(n_atoms + n_bonds)) throw RecordError("truncated atom or bond block");

    std::vector<int> heavy(static_cast<size_t>(n_atoms), -1);
    ChemicalGraph g;
    bool charged = false;
    for (int i = 0; i < n_atoms; ++i) {
        const auto& line = lines[4 + static_cast<size_t>(i)];
        auto sym = field(line, 31, 3);
        if (sym.empty()) throw RecordError("atom " + std::to_string(i + 1) + " has no element symbol");
        if (line.size() > 36) {
            int chg = int_field(line, 36, 3, "charge");
            if (chg != 0 && chg != 4) charged = true;
        }
        if (sym == "H" || sym == "D" || sym == "T") continue;
        int a = alphabet.index_of(sym);
        if (a < 0) throw RecordError("element " + sym + " outside the alphabet");
        heavy[static_cast<size_t>(i)] = g.add_vertex(a);
    }
    std::set<std::pair<int, int>> seen;
    for (int j = 0; j < n_bonds; ++j) {
        const auto& line = lines[4 + static_cast<size_t>(n_atoms + j)];
        int u = int_field(line, 0, 3, "bond atom"), v = int_field(line, 3, 3, "bond atom");
        int type = int_field(line, 6, 3, "bond type");
        if (u < 1 || v < 1 || u > n_atoms || v > n_atoms || u == v)
            throw RecordError("bond " + std::to_string(j + 1) + " has invalid atoms");
        if (!seen.insert({std::min(u, v), std::max(u, v)}).second)
            throw RecordError("duplicate bond " + std::to_string(u) + "-" + std::to_string(v));
        int hu = heavy[static_cast<size_t>(u - 1)], hv = heavy[static_cast<size_t>(v - 1)];
        if (hu < 0 || hv < 0) continue;
        if (type < 1 || type > 3) throw RecordError("unsupported bond type " + std::to_string(type));
        g.add_edge(hu, hv, type);
    }
    for (size_t i = 4 + static_cast<size_t>(n_atoms + n_bonds); i < lines.size(); ++i) {
        const auto& line = lines[i];
        if (line.rfind("M  END", 0) == 0) break;
        if (line.rfind("M  CHG", 0) == 0) {
            std::istringstream is(line.substr(6));
            int k = 0;
            is >> k;
            for (int c = 0; c < k; ++c) {
                int atom = 0, chg = 0;
                if (!(is >> atom >> chg)) throw RecordError("malformed M  CHG line");
                if (chg != 0) charged = true;
            }
        }
    }
    if (charged) throw RecordError("charged element");
    if (g.n() == 0) throw RecordError("no heavy atoms");
    return g;
}

}  // namespace

IngestResult ingest_sdf(std::string_view text, const ChemicalAlphabet& alphabet) {
    IngestResult out;
    std::vector<std::string> lines;
    int record = 0;
    auto flush = [&] {
        bool blank = std::all_of(lines.begin(), lines.end(), [](const std::string& l) { return trim(l).empty(); });
        if (blank) {
            lines.clear();
            return;
        }
        std::string title = lines.empty() ? "" : trim(lines[0]);
        try {
            out.graphs.push_back(parse_record(lines, alphabet));
            out.titles.push_back(title);
            out.records.push_back(record);
        } catch (const RecordError& e) {
            out.skipped.push_back({record, title, e.what()});
        }
        ++record;
        lines.clear();
    };
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.rfind("$$$$", 0) == 0)
            flush();
        else
            lines.push_back(line);
    }
    flush();
    return out;
}

std::string write_sdf(const ChemicalGraph& g, const ChemicalAlphabet& alphabet, const std::string& title) {
    std::ostringstream os;
    char buf[96];
    os << title << "\n  qinv\n\n";
    std::snprintf(buf, sizeof buf, "%3d%3d  0  0  0  0  0  0  0  0999 V2000\n", g.n(), g.num_edges());
    os << buf;
    for (int v = 0; v < g.n(); ++v) {
        std::snprintf(buf, sizeof buf, "%10.4f%10.4f%10.4f %-3s 0  0  0  0  0  0  0  0  0  0  0  0\n", 0.0, 0.0, 0.0,
                      alphabet.symbol(g.label(v)).c_str());
        os << buf;
    }
    for (const auto& e : g.edges()) {
        std::snprintf(buf, sizeof buf, "%3d%3d%3d  0\n", e.u + 1, e.v + 1, e.m);
        os << buf;
    }
    os << "M  END\n$$$$\n";
    return os.str();
}

FilterResult stage1_filter(const std::vector<ChemicalGraph>& graphs, const ChemicalAlphabet& alphabet) {
    FilterResult r;
    int carbon = alphabet.index_of("C");
    for (size_t i = 0; i < graphs.size(); ++i) {
        const auto& g = graphs[i];
        auto reject = [&](const std::string& why) { r.rejected.push_back({static_cast<int>(i), "", why}); };
        bool in_alphabet = true;
        int c = 0;
        for (int v = 0; v < g.n(); ++v) {
            if (g.label(v) < 0 || g.label(v) >= alphabet.size()) in_alphabet = false;
            if (g.label(v) == carbon) ++c;
        }
        if (!in_alphabet) {
            reject("element outside the alphabet");
            continue;
        }
        if (c <= 3) {
            reject("at most three carbon atoms");
            continue;
        }
        bool overflow = false;
        for (int v = 0; v < g.n(); ++v)
            if (g.bond_sum(v) > alphabet.val(g.label(v))) overflow = true;
        if (overflow) {
            reject("valence mismatch");
            continue;
        }
        if (!g.connected()) {
            reject("disconnected");
            continue;
        }
        if (!g.is_tree()) {
            reject("cyclic");
            continue;
        }
        r.accepted.push_back(g);
        r.accepted_index.push_back(static_cast<int>(i));
    }
    return r;
}

double CorpusStats::fraction(const Histogram& hist, int key) const {
    if (graphs == 0) return 0.0;
    auto it = hist.find(key);
    return it == hist.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(graphs);
}

double CorpusStats::bh_at_most(int k, int h) const {
    auto it = bh.find(k);
    if (it == bh.end() || graphs == 0) return 0.0;
    long long c = 0;
    for (const auto& [v, n] : it->second)
        if (v <= h) c += n;
    return static_cast<double>(c) / static_cast<double>(graphs);
}

double CorpusStats::fringe_ratio(int d) const {
    auto t = fringe_total.find(d);
    if (t == fringe_total.end() || t->second == 0) return 0.0;
    auto o = fringe_ok.find(d);
    return o == fringe_ok.end() ? 0.0 : static_cast<double>(o->second) / static_cast<double>(t->second);
}

CorpusStats corpus_stats(const std::vector<ChemicalGraph>& graphs, const std::vector<int>& ks) {
    CorpusStats s;
    for (const auto& g : graphs) {
        if (!g.is_tree()) throw std::invalid_argument("corpus_stats expects acyclic connected graphs");
        ++s.graphs;
        for (int k : ks) {
            auto bd = chem::branch_decomposition(g, k);
            ++s.bl[k][bd.bl];
            ++s.bh[k][bd.bh];
        }
        int md = 0;
        for (int v = 0; v < g.n(); ++v) md = std::max(md, g.degree(v));
        ++s.max_degree[md];

        auto bd = chem::branch_decomposition(g, 2);
        int root_degree = 0;
        for (size_t i = 0; i < bd.branch_tree_nodes.size(); ++i) {
            int p = bd.branch_tree_parent[i];
            if (p >= 0 && bd.is_root(bd.branch_tree_nodes[static_cast<size_t>(p)])) ++root_degree;
        }
        ++s.bt_root_degree[root_degree];
        bool all_ok = true;
        for (const auto& ft : bd.fringe_trees) {
            int d = ft.root_children;
            bool ok = static_cast<int>(ft.vertices.size()) <= 2 * d + 2;
            ++s.fringe_total[d];
            if (ok) ++s.fringe_ok[d];
            all_ok = all_ok && ok;
        }
        if (all_ok) ++s.graphs_fringe_ok;
    }
    return s;
}

std::string stats_csv(const CorpusStats& s) {
    std::ostringstream os;
    os.precision(10);
    os << "section,k,key,count,ratio\n";
    os << "graphs,,," << s.graphs << ",1\n";
    auto rows = [&](const std::string& name, const std::string& k, const Histogram& h) {
        for (const auto& [key, n] : h) os << name << "," << k << "," << key << "," << n << "," << s.fraction(h, key) << "\n";
    };
    for (const auto& [k, h] : s.bl) rows("bl", std::to_string(k), h);
    for (const auto& [k, h] : s.bh) rows("bh", std::to_string(k), h);
    rows("max_degree", "", s.max_degree);
    rows("bt_root_degree", "2", s.bt_root_degree);
    for (const auto& [d, n] : s.fringe_total) {
        auto ok = s.fringe_ok.count(d) ? s.fringe_ok.at(d) : 0;
        os << "fringe_ok,2," << d << "," << ok << "," << s.fringe_ratio(d) << "\n";
        os << "fringe_total,2," << d << "," << n << ",\n";
    }
    os << "graphs_fringe_ok,2,," << s.graphs_fringe_ok << ","
       << (s.graphs ? static_cast<double>(s.graphs_fringe_ok) / static_cast<double>(s.graphs) : 0.0) << "\n";
    return os.str();
}

std::string stats_table(const CorpusStats& s) {
    std::ostringstream os;
    char buf[128];
    os << "graphs: " << s.graphs << "\n";
    auto block = [&](const std::string& title, const Histogram& h) {
        os << title << "\n";
        for (const auto& [key, n] : h) {
            std::snprintf(buf, sizeof buf, "  %4d %8lld %7.2f%%\n", key, n, 100.0 * s.fraction(h, key));
            os << buf;
        }
    };
    for (const auto& [k, h] : s.bl) block("bl_" + std::to_string(k), h);
    for (const auto& [k, h] : s.bh) block("bh_" + std::to_string(k), h);
    block("max degree", s.max_degree);
    block("2-branch-tree root degree", s.bt_root_degree);
    os << "2-fringe-trees with n <= 2d+2\n";
    for (const auto& [d, n] : s.fringe_total) {
        std::snprintf(buf, sizeof buf, "  d=%d %8lld %7.2f%%\n", d, n, 100.0 * s.fringe_ratio(d));
        os << buf;
    }
    return os.str();
}

}  // namespace qinv::data
