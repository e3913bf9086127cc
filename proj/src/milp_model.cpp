#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "qinv/milp.hpp"

namespace qinv::milp {

namespace {

bool valid_name(const std::string& s) {
    if (s.empty() || s.size() > 255) return false;
    for (char c : s)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    return !std::isdigit(static_cast<unsigned char>(s[0]));
}

std::string fmt_num(double x) {
    char buf[64];
    if (x == std::floor(x) && std::abs(x) < 1e15)
        std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(x));
    else
        std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

const char* sense_text(Sense s) { return s == Sense::LE ? "<=" : s == Sense::GE ? ">=" : "="; }

bool holds(double lhs, Sense s, double rhs) {
    switch (s) {
        case Sense::LE: return lhs <= rhs;
        case Sense::GE: return lhs >= rhs;
        default: return lhs == rhs;
    }
}

}  // namespace

int MilpModel::add_var(const std::string& name, VarType type, double lo, double hi) {
    if (!valid_name(name)) throw ModelError("invalid variable name '" + name + "'");
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
        throw ModelError("variable " + name + " needs finite bounds with lo <= hi");
    if (index_.count(name)) throw ModelError("duplicate variable " + name);
    index_[name] = static_cast<int>(vars_.size());
    vars_.push_back({name, type, lo, hi});
    by_var_ready_ = false;
    return static_cast<int>(vars_.size()) - 1;
}

void MilpModel::add_constraint(const std::string& group, const std::string& name, std::vector<Term> terms,
                               Sense sense, double rhs) {
    if (!valid_name(name)) throw ModelError("invalid constraint name '" + name + "'");
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    for (const auto& t : terms) {
        if (t.var < 0 || t.var >= num_vars()) throw ModelError("constraint " + name + " uses an undeclared variable");
        if (!merged.empty() && merged.back().var == t.var)
            merged.back().coef += t.coef;
        else
            merged.push_back(t);
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(), [](const Term& t) { return t.coef == 0.0; }),
                 merged.end());
    if (merged.empty()) {
        if (!holds(0.0, sense, rhs)) throw ModelError("constraint " + name + " is infeasible: 0 " + sense_text(sense) + " " + fmt_num(rhs));
        return;
    }
    cons_.push_back({name, group, std::move(merged), sense, rhs});
    by_var_ready_ = false;
}

int MilpModel::var(const std::string& name) const {
    int v = find(name);
    if (v < 0) throw ModelError("unknown variable " + name);
    return v;
}

int MilpModel::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

const std::vector<int>& MilpModel::constraints_of(int v) const {
    if (!by_var_ready_) {
        by_var_.assign(vars_.size(), {});
        for (size_t c = 0; c < cons_.size(); ++c)
            for (const auto& t : cons_[c].terms) by_var_[static_cast<size_t>(t.var)].push_back(static_cast<int>(c));
        by_var_ready_ = true;
    }
    return by_var_.at(static_cast<size_t>(v));
}

std::map<std::string, int> MilpModel::group_counts() const {
    std::map<std::string, int> out;
    for (const auto& c : cons_) out[c.group] += 1;
    return out;
}

std::string emit_lp(const MilpModel& model) {
    std::ostringstream os;
    os << "Minimize\n obj: 0\nSubject To\n";
    const auto& vars = model.variables();
    for (const auto& c : model.constraints()) {
        std::string line = " " + c.name + ":";
        size_t width = line.size();
        bool first = true;
        for (const auto& t : c.terms) {
            std::string piece;
            double a = std::abs(t.coef);
            if (t.coef < 0)
                piece = " -";
            else if (!first)
                piece = " +";
            piece += " ";
            if (a != 1.0) piece += fmt_num(a) + " ";
            piece += vars[static_cast<size_t>(t.var)].name;
            if (width + piece.size() > 200) {
                line += "\n  ";
                width = 2;
            }
            line += piece;
            width += piece.size();
            first = false;
        }
        line += std::string(" ") + sense_text(c.sense) + " " + fmt_num(c.rhs);
        os << line << "\n";
    }
    std::vector<std::string> bounds, generals, binaries;
    for (const auto& v : vars) {
        if (v.type == VarType::Binary) {
            binaries.push_back(v.name);
            continue;
        }
        bounds.push_back(" " + fmt_num(v.lo) + " <= " + v.name + " <= " + fmt_num(v.hi));
        if (v.type == VarType::Integer) generals.push_back(v.name);
    }
    auto name_block = [&](const char* head, const std::vector<std::string>& names) {
        if (names.empty()) return;
        os << head << "\n";
        std::string line;
        for (const auto& n : names) {
            if (line.size() + n.size() > 200) {
                os << line << "\n";
                line.clear();
            }
            line += " " + n;
        }
        if (!line.empty()) os << line << "\n";
    };
    if (!bounds.empty()) {
        os << "Bounds\n";
        for (const auto& b : bounds) os << b << "\n";
    }
    name_block("Generals", generals);
    name_block("Binaries", binaries);
    os << "End\n";
    return os.str();
}

namespace {

std::vector<std::string> tokens_of(const std::string& s) {
    std::istringstream is(s);
    std::vector<std::string> out;
    std::string t;
    while (is >> t) out.push_back(t);
    return out;
}

bool is_number(const std::string& s) {
    if (s.empty()) return false;
    char* end = nullptr;
    std::strtod(s.c_str(), &end);
    return end && *end == '\0';
}

}  // namespace

MilpModel parse_lp(const std::string& text) {
    enum class Sec { None, Obj, Rows, Bounds, Generals, Binaries, End };
    Sec sec = Sec::None;
    std::istringstream is(text);
    std::string raw;
    struct RawRow {
        std::string name;
        std::vector<std::string> toks;
    };
    std::vector<RawRow> rows;
    struct RawBound {
        double lo, hi;
    };
    std::map<std::string, RawBound> bound_of;
    std::vector<std::string> order;
    std::map<std::string, VarType> type_of;
    auto note = [&](const std::string& n) {
        if (!type_of.count(n)) {
            type_of[n] = VarType::Continuous;
            order.push_back(n);
        }
    };
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        auto toks = tokens_of(raw);
        if (toks.empty() || toks[0].rfind("\\", 0) == 0) continue;
        std::string head = toks[0];
        std::string lower = head;
        std::transform(lower.begin(), lower.end(), lower.begin(), ::tolower);
        if (toks.size() == 1 || (toks.size() == 2 && lower == "subject")) {
            if (lower == "minimize" || lower == "maximize") { sec = Sec::Obj; continue; }
            if (lower == "subject" || lower == "st") { sec = Sec::Rows; continue; }
            if (lower == "bounds") { sec = Sec::Bounds; continue; }
            if (lower == "generals" || lower == "general") { sec = Sec::Generals; continue; }
            if (lower == "binaries" || lower == "binary") { sec = Sec::Binaries; continue; }
            if (lower == "end") { sec = Sec::End; continue; }
        }
        switch (sec) {
            case Sec::Obj:
            case Sec::None:
            case Sec::End: break;
            case Sec::Rows:
                if (head.back() == ':' && raw.size() > 1 && raw[0] == ' ' && raw[1] != ' ') {
                    rows.push_back({head.substr(0, head.size() - 1), {toks.begin() + 1, toks.end()}});
                } else {
                    if (rows.empty()) throw ModelError("LP line " + std::to_string(line_no) + ": row continuation without a row");
                    rows.back().toks.insert(rows.back().toks.end(), toks.begin(), toks.end());
                }
                break;
            case Sec::Bounds:
                if (toks.size() != 5 || toks[1] != "<=" || toks[3] != "<=")
                    throw ModelError("LP line " + std::to_string(line_no) + ": expected 'lo <= name <= hi'");
                note(toks[2]);
                bound_of[toks[2]] = {std::stod(toks[0]), std::stod(toks[4])};
                break;
            case Sec::Generals:
                for (const auto& t : toks) {
                    note(t);
                    type_of[t] = VarType::Integer;
                }
                break;
            case Sec::Binaries:
                for (const auto& t : toks) {
                    note(t);
                    type_of[t] = VarType::Binary;
                }
                break;
        }
    }
    if (sec != Sec::End) throw ModelError("LP text has no End line");

    struct ParsedRow {
        std::string name;
        std::vector<std::pair<std::string, double>> terms;
        Sense sense;
        double rhs;
    };
    std::vector<ParsedRow> parsed;
    for (const auto& r : rows) {
        ParsedRow p{r.name, {}, Sense::LE, 0.0};
        double sign = 1.0, coef = 1.0;
        bool have_coef = false, done = false;
        for (size_t i = 0; i < r.toks.size(); ++i) {
            const auto& t = r.toks[i];
            if (t == "<=" || t == ">=" || t == "=" || t == "=<" || t == "=>") {
                p.sense = (t == "<=" || t == "=<") ? Sense::LE : (t == "=") ? Sense::EQ : Sense::GE;
                if (i + 2 != r.toks.size() || !is_number(r.toks[i + 1]))
                    throw ModelError("row " + r.name + ": expected a single number after the relation");
                p.rhs = std::stod(r.toks[i + 1]);
                done = true;
                break;
            }
            if (t == "+") { sign = 1.0; continue; }
            if (t == "-") { sign = -1.0; continue; }
            if (is_number(t)) {
                coef = std::stod(t);
                have_coef = true;
                continue;
            }
            note(t);
            p.terms.emplace_back(t, sign * (have_coef ? coef : 1.0));
            sign = 1.0;
            coef = 1.0;
            have_coef = false;
        }
        if (!done) throw ModelError("row " + r.name + ": missing relation");
        parsed.push_back(std::move(p));
    }

    MilpModel m;
    for (const auto& n : order) {
        VarType ty = type_of[n];
        double lo = 0.0, hi = 1.0;
        if (ty != VarType::Binary) {
            auto it = bound_of.find(n);
            if (it == bound_of.end()) throw ModelError("variable " + n + " has no finite bounds");
            lo = it->second.lo;
            hi = it->second.hi;
        }
        m.add_var(n, ty, lo, hi);
    }
    for (const auto& p : parsed) {
        std::vector<Term> terms;
        for (const auto& [n, c] : p.terms) terms.push_back({m.var(n), c});
        auto us = p.name.find('_');
        m.add_constraint(us == std::string::npos ? p.name : p.name.substr(0, us), p.name, std::move(terms), p.sense,
                         p.rhs);
    }
    return m;
}

Value Assignment::get(const std::string& name) const {
    auto it = values.find(name);
    return it == values.end() ? Value(0) : it->second;
}

Value parse_decimal(const std::string& text) {
    using boost::multiprecision::cpp_int;
    size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
    cpp_int mant = 0;
    int frac_digits = 0, digits = 0;
    bool dot = false;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (c >= '0' && c <= '9') {
            mant = mant * 10 + (c - '0');
            ++digits;
            if (dot) ++frac_digits;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
    }
    if (digits == 0) throw std::invalid_argument("not a number: '" + text + "'");
    long long ex = 0;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        size_t used = 0;
        try {
            ex = std::stoll(text.substr(i), &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("not a number: '" + text + "'");
        }
        i += used;
    }
    if (i != text.size()) throw std::invalid_argument("not a number: '" + text + "'");
    ex -= frac_digits;
    if (ex > 400 || ex < -400) throw std::invalid_argument("exponent out of range: '" + text + "'");
    cpp_int p = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(ex < 0 ? -ex : ex));
    Value v = ex >= 0 ? Value(mant * p) : Value(mant, p);
    return neg ? Value(-v) : v;
}

double to_double(const Value& v) { return v.convert_to<double>(); }

namespace {

boost::multiprecision::cpp_int floor_int(const Value& v) {
    boost::multiprecision::cpp_int q = numerator(v) / denominator(v);
    if (q * denominator(v) > numerator(v)) --q;
    return q;
}

}  // namespace

Assignment parse_solution(const std::string& text, const MilpModel& model) {
    Assignment asg;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        auto toks = tokens_of(raw);
        if (toks.empty() || toks[0][0] == '#') continue;
        if (toks.size() != 2) throw std::invalid_argument("solution line " + std::to_string(line_no) + ": expected 'name value'");
        int v = model.find(toks[0]);
        if (v < 0) throw std::invalid_argument("solution line " + std::to_string(line_no) + ": unknown variable " + toks[0]);
        Value val;
        try {
            val = parse_decimal(toks[1]);
        } catch (const std::exception& e) {
            throw std::invalid_argument("solution line " + std::to_string(line_no) + ": " + e.what());
        }
        const auto& var = model.variables()[static_cast<size_t>(v)];
        if (var.type != VarType::Continuous) {
            Value r = Value(floor_int(val + Value(1, 2)));
            if (abs(val - r) > Value(1, 1000000))
                throw std::invalid_argument("solution line " + std::to_string(line_no) + ": " + toks[0] + " is not integral");
            val = r;
        }
        double d = to_double(val);
        if (d < var.lo - kTolerance || d > var.hi + kTolerance)
            throw std::invalid_argument("solution line " + std::to_string(line_no) + ": " + toks[0] + " outside its bounds");
        asg.values[toks[0]] = val;
    }
    for (const auto& var : model.variables())
        if (!asg.values.count(var.name)) {
            asg.values[var.name] = 0;
            asg.warnings.push_back("missing " + var.name + " set to 0");
        }
    return asg;
}

std::string format_solution(const Assignment& asg, const MilpModel& model) {
    std::ostringstream os;
    for (const auto& v : model.variables()) {
        auto it = asg.values.find(v.name);
        if (it == asg.values.end()) continue;
        const Value& x = it->second;
        if (denominator(x) == 1)
            os << v.name << " " << numerator(x) << "\n";
        else {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.17g", to_double(x));
            os << v.name << " " << buf << "\n";
        }
    }
    return os.str();
}

std::string Violation::describe() const {
    std::ostringstream os;
    os << "[" << group << "] " << name << ": lhs " << lhs << " vs rhs " << rhs;
    return os.str();
}

namespace {

struct Dense {
    std::vector<Value> exact;
    std::vector<long long> iv;
    std::vector<char> small;
};

Dense densify(const MilpModel& model, const Assignment& asg) {
    Dense d;
    size_t n = model.variables().size();
    d.exact.assign(n, Value(0));
    d.iv.assign(n, 0);
    d.small.assign(n, 1);
    for (size_t v = 0; v < n; ++v) {
        auto it = asg.values.find(model.variables()[v].name);
        if (it == asg.values.end()) continue;
        d.exact[v] = it->second;
        const auto& x = it->second;
        if (denominator(x) == 1 && abs(numerator(x)) < boost::multiprecision::cpp_int(1LL << 40))
            d.iv[v] = numerator(x).convert_to<long long>();
        else
            d.small[v] = 0;
    }
    return d;
}

bool small_int(double c) { return c == std::floor(c) && std::abs(c) < 1e9; }

std::optional<Violation> eval(const MilpModel& model, const Dense& d, int ci) {
    const auto& c = model.constraints()[static_cast<size_t>(ci)];
    bool fast = small_int(c.rhs);
    for (const auto& t : c.terms)
        if (!small_int(t.coef) || !d.small[static_cast<size_t>(t.var)]) {
            fast = false;
            break;
        }
    double lhs_d = 0.0;
    bool ok = true;
    if (fast) {
        long long s = 0;
        for (const auto& t : c.terms) s += static_cast<long long>(t.coef) * d.iv[static_cast<size_t>(t.var)];
        long long r = static_cast<long long>(c.rhs);
        ok = c.sense == Sense::LE ? s <= r : c.sense == Sense::GE ? s >= r : s == r;
        lhs_d = static_cast<double>(s);
    } else {
        Value s = 0;
        for (const auto& t : c.terms) s += Value(t.coef) * d.exact[static_cast<size_t>(t.var)];
        Value diff = s - Value(c.rhs);
        Value tol = Value(1, 1000000);
        ok = c.sense == Sense::LE ? diff <= tol : c.sense == Sense::GE ? diff >= -tol : abs(diff) <= tol;
        lhs_d = to_double(s);
    }
    if (ok) return std::nullopt;
    return Violation{ci, c.name, c.group, lhs_d, c.rhs};
}

}  // namespace

std::vector<Violation> check_constraints(const MilpModel& model, const Assignment& asg,
                                         const std::vector<int>& constraint_ids) {
    auto d = densify(model, asg);
    std::vector<Violation> out;
    for (int ci : constraint_ids)
        if (auto v = eval(model, d, ci)) out.push_back(*v);
    return out;
}

std::vector<Violation> check_assignment(const MilpModel& model, const Assignment& asg, int threads) {
    auto d = densify(model, asg);
    std::vector<Violation> out;
    const auto& vars = model.variables();
    for (size_t v = 0; v < vars.size(); ++v) {
        const auto& x = d.exact[v];
        Value lo(vars[v].lo), hi(vars[v].hi), tol(1, 1000000);
        bool bad = x < lo - tol || x > hi + tol;
        if (vars[v].type != VarType::Continuous && denominator(x) != 1) bad = true;
        if (bad) out.push_back({-1, vars[v].name, "bounds", to_double(x), x < lo ? vars[v].lo : vars[v].hi});
    }
    int nc = model.num_constraints();
    threads = std::max(1, std::min(threads, nc / 1000 + 1));
    std::vector<std::vector<Violation>> parts(static_cast<size_t>(threads));
    auto work = [&](int part) {
        for (int ci = part; ci < nc; ci += threads)
            if (auto v = eval(model, d, ci)) parts[static_cast<size_t>(part)].push_back(*v);
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (int p = 0; p < threads; ++p) pool.emplace_back(work, p);
        for (auto& t : pool) t.join();
    }
    std::vector<Violation> merged;
    for (auto& p : parts) merged.insert(merged.end(), p.begin(), p.end());
    std::sort(merged.begin(), merged.end(), [](const Violation& a, const Violation& b) { return a.constraint < b.constraint; });
    out.insert(out.end(), merged.begin(), merged.end());
    return out;
}

}  // namespace qinv::milp
