#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "dblsim/model.hpp"
#include "dblsim/text.hpp"

namespace dblsim {

struct ParseIssue {
    int line = 0;  // 1-based, 0 when not tied to a line
    int col = 0;   // 1-based, 0 when unknown
    std::string message;
};

// ---------------------------------------------------------------------------
// Engineering-notation values
// ---------------------------------------------------------------------------

struct ValueResult {
    bool ok = false;
    double value = 0.0;
    int col = 0;  // 1-based offset of the offending character on error
    std::string message;
};

/// Parses "1.5u", "2meg", "4.7k", "1e-6", ... Suffixes
/// f p n u m k meg g (case-insensitive, "meg" before "m"); trailing unit
/// letters after the suffix are ignored ("1.5um" == "1.5u").
inline ValueResult parse_value(std::string_view token) {
    ValueResult r;
    if (token.empty()) {
        r.col = 1;
        r.message = "empty value";
        return r;
    }
    const std::string low = to_lower(token);
    // from_chars takes no leading '+'
    const char* begin = low.data() + (low.front() == '+' ? 1 : 0);
    double mag = 0.0;
    auto [ptr, ec] = std::from_chars(begin, low.data() + low.size(), mag);
    if (ec != std::errc{} || ptr == begin) {
        r.col = 1;
        r.message = "malformed number '" + low + "'";
        return r;
    }
    std::string_view rest(ptr, static_cast<size_t>(low.data() + low.size() - ptr));
    double factor = 1.0;
    if (rest.substr(0, 3) == "meg") {
        factor = 1e6;
        rest.remove_prefix(3);
    } else if (!rest.empty()) {
        switch (rest.front()) {
            case 'f': factor = 1e-15; rest.remove_prefix(1); break;
            case 'p': factor = 1e-12; rest.remove_prefix(1); break;
            case 'n': factor = 1e-9; rest.remove_prefix(1); break;
            case 'u': factor = 1e-6; rest.remove_prefix(1); break;
            case 'm': factor = 1e-3; rest.remove_prefix(1); break;
            case 'k': factor = 1e3; rest.remove_prefix(1); break;
            case 'g': factor = 1e9; rest.remove_prefix(1); break;
            default: break;
        }
    }
    for (size_t i = 0; i < rest.size(); ++i) {
        const char c = rest[i];
        if (!(c >= 'a' && c <= 'z')) {
            r.col = static_cast<int>(rest.data() - low.data() + i) + 1;
            r.message = "unexpected character '" + std::string(1, c) + "' in value";
            return r;
        }
    }
    r.ok = true;
    r.value = mag * factor;
    return r;
}

// ---------------------------------------------------------------------------
// Elements and directives
// ---------------------------------------------------------------------------

struct MosElement {
    std::string name, drain, gate, source, bulk, model;
    double w = 0.0, l = 0.0;
    bool operator==(const MosElement&) const = default;
};

struct ResistorElement {
    std::string name, n1, n2;
    double ohms = 0.0;
    bool operator==(const ResistorElement&) const = default;
};

struct CapacitorElement {
    std::string name, n1, n2;
    double farads = 0.0;
    bool operator==(const CapacitorElement&) const = default;
};

struct SinSpec {
    double offset = 0.0, amplitude = 0.0, freq = 0.0;
    bool operator==(const SinSpec&) const = default;
};

/// DC when sin is empty, SIN(offset amplitude freq) otherwise.
struct VSourceElement {
    std::string name, np, nn;
    double dc = 0.0;
    std::optional<SinSpec> sin;
    bool operator==(const VSourceElement&) const = default;
};

struct ISourceElement {
    std::string name, np, nn;
    double amperes = 0.0;
    bool operator==(const ISourceElement&) const = default;
};

/// Current-controlled current source: gain times the branch current of the
/// named voltage source flows from np through this element into nn.
struct CccsElement {
    std::string name, np, nn, control;
    double gain = 0.0;
    bool operator==(const CccsElement&) const = default;
};

using Element = std::variant<MosElement, ResistorElement, CapacitorElement,
                             VSourceElement, ISourceElement, CccsElement>;

struct OpDirective {
    bool operator==(const OpDirective&) const = default;
};

struct DcSweepDirective {
    std::string source;
    double start = 0.0, stop = 0.0, step = 0.0;
    bool operator==(const DcSweepDirective&) const = default;
};

struct TranDirective {
    double tstep = 0.0, tstop = 0.0;
    bool operator==(const TranDirective&) const = default;
};

using AnalysisDirective =
    std::variant<OpDirective, DcSweepDirective, TranDirective>;

struct Circuit {
    std::vector<Element> elements;
    std::map<std::string, MosModelCard> models;
    std::vector<AnalysisDirective> directives;

    // Filled by validate_circuit. nodes[0] is ground ("0").
    std::vector<std::string> nodes;
    std::unordered_map<std::string, int> node_index;
    bool validated = false;

    /// Structural equality (elements, models, directives); ignores the
    /// node tables so that parse(emit(c)) compares equal to c.
    bool same_content(const Circuit& o) const {
        return elements == o.elements && models == o.models &&
               directives == o.directives;
    }
};

inline const std::string& element_name(const Element& e) {
    return std::visit([](const auto& x) -> const std::string& { return x.name; }, e);
}

struct ParseResult {
    Circuit circuit;
    std::vector<ParseIssue> errors;
    std::vector<ParseIssue> warnings;
    bool ok() const { return errors.empty(); }
};

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

namespace detail {

struct Token {
    std::string text;
    int col = 0;  // 1-based
};

// Whitespace-separated tokens; '(', ')' and '=' are tokens of their own.
inline std::vector<Token> tokenize(const std::string& line) {
    std::vector<Token> out;
    size_t i = 0;
    while (i < line.size()) {
        const char c = line[i];
        if (c == ' ' || c == '\t') {
            ++i;
            continue;
        }
        if (c == '(' || c == ')' || c == '=') {
            out.push_back({std::string(1, c), static_cast<int>(i) + 1});
            ++i;
            continue;
        }
        size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t' &&
               line[j] != '(' && line[j] != ')' && line[j] != '=')
            ++j;
        out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
        i = j;
    }
    return out;
}

inline bool is_identifier(std::string_view s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'))
            return false;
    return true;
}

// A line made of "name = value" runs continues a preceding .model card
// even without a '+' marker, so verbatim multi-line cards parse.
inline bool looks_like_param_run(const std::string& line) {
    const auto toks = tokenize(line);
    if (toks.size() < 3) return false;
    return is_identifier(toks[0].text) && toks[1].text == "=";
}

struct LogicalLine {
    int number = 0;  // physical line of the first fragment
    std::string text;
};

inline std::vector<LogicalLine> logical_lines(std::string_view text,
                                              std::vector<ParseIssue>& errors) {
    std::vector<LogicalLine> out;
    bool model_anchor = false;  // last emitted logical line is a .model
    size_t pos = 0;
    int lineno = 0;
    while (pos <= text.size()) {
        if (pos == text.size() && lineno > 0) break;
        size_t eol = text.find_first_of("\r\n", pos);
        std::string line;
        if (eol == std::string_view::npos) {
            line = std::string(text.substr(pos));
            pos = text.size() + 1;
        } else {
            line = std::string(text.substr(pos, eol - pos));
            pos = eol + 1;
            if (eol + 1 < text.size() && text[eol] == '\r' && text[eol + 1] == '\n')
                ++pos;
        }
        ++lineno;
        if (pos > text.size() && line.empty()) break;

        std::string low = to_lower(line);
        size_t first = low.find_first_not_of(" \t");
        if (first == std::string::npos) {
            model_anchor = false;
            continue;
        }
        if (low[first] == '*') continue;
        if (low[first] == '+') {
            if (out.empty()) {
                errors.push_back({lineno, static_cast<int>(first) + 1,
                                  "continuation line with nothing to continue"});
            } else {
                out.back().text += " " + low.substr(first + 1);
            }
            continue;
        }
        const std::string body = low.substr(first);
        if (model_anchor && looks_like_param_run(body)) {
            out.back().text += " " + body;
            continue;
        }
        out.push_back({lineno, body});
        model_anchor = body.rfind(".model", 0) == 0;
    }
    return out;
}

struct LineParser {
    const LogicalLine& line;
    std::vector<Token> toks;
    ParseResult& result;
    size_t pos = 0;

    LineParser(const LogicalLine& l, ParseResult& r)
        : line(l), toks(tokenize(l.text)), result(r) {}

    bool done() const { return pos >= toks.size(); }
    const Token& peek() const { return toks[pos]; }

    void error(const std::string& msg, int col = 0) {
        result.errors.push_back({line.number, col, msg});
    }
    void warn(const std::string& msg) {
        result.warnings.push_back({line.number, 0, msg});
    }

    bool take_word(std::string& out, const std::string& what) {
        if (done()) {
            error("missing " + what);
            return false;
        }
        const Token& t = toks[pos];
        if (t.text == "(" || t.text == ")" || t.text == "=") {
            error("expected " + what + ", got '" + t.text + "'", t.col);
            return false;
        }
        out = t.text;
        ++pos;
        return true;
    }

    bool take_value(double& out, const std::string& what) {
        std::string w;
        if (!take_word(w, what)) return false;
        const Token& t = toks[pos - 1];
        ValueResult v = parse_value(w);
        if (!v.ok) {
            error(what + ": " + v.message, t.col + v.col - 1);
            return false;
        }
        out = v.value;
        return true;
    }

    bool expect_end(const std::string& who) {
        if (!done()) {
            error(who + ": unexpected trailing token '" + peek().text + "'",
                  peek().col);
            return false;
        }
        return true;
    }
};

}  // namespace detail

/// Line-oriented parse of the SPICE-like subset. Every malformed line is
/// reported; a deck with k bad lines yields at least k errors. Parsing is
/// case-insensitive: all names are folded to lowercase.
inline ParseResult parse_netlist(std::string_view text) {
    using namespace detail;
    ParseResult result;
    Circuit& c = result.circuit;
    std::unordered_set<std::string> element_names;

    std::vector<LogicalLine> lines = logical_lines(text, result.errors);

    for (const LogicalLine& ll : lines) {
        LineParser p(ll, result);
        if (p.done()) continue;
        const std::string head = p.peek().text;
        const char kind = head[0];

        if (kind == '.') {
            if (head == ".end") break;
            if (head == ".op") {
                ++p.pos;
                if (p.expect_end(".op")) c.directives.push_back(OpDirective{});
                continue;
            }
            if (head == ".dc") {
                ++p.pos;
                DcSweepDirective d;
                if (!p.take_word(d.source, ".dc source name")) continue;
                if (!p.take_value(d.start, ".dc start")) continue;
                if (!p.take_value(d.stop, ".dc stop")) continue;
                if (!p.take_value(d.step, ".dc step")) continue;
                if (!p.expect_end(".dc")) continue;
                if (d.step <= 0.0) {
                    p.error(".dc step must be positive");
                    continue;
                }
                c.directives.push_back(d);
                continue;
            }
            if (head == ".tran") {
                ++p.pos;
                TranDirective d;
                if (!p.take_value(d.tstep, ".tran tstep")) continue;
                if (!p.take_value(d.tstop, ".tran tstop")) continue;
                if (!p.expect_end(".tran")) continue;
                if (!(d.tstep > 0.0 && d.tstop > d.tstep)) {
                    p.error(".tran requires 0 < tstep < tstop");
                    continue;
                }
                c.directives.push_back(d);
                continue;
            }
            if (head == ".model") {
                ++p.pos;
                MosModelCard card;
                if (!p.take_word(card.name, "model name")) continue;
                std::string type;
                if (!p.take_word(type, "model type")) continue;
                if (type == "nmos") {
                    card.polarity = MosPolarity::Nmos;
                } else if (type == "pmos") {
                    card.polarity = MosPolarity::Pmos;
                } else {
                    p.error("unknown model type '" + type + "' (need nmos or pmos)");
                    continue;
                }
                bool have_vto = false, have_kp = false, bad = false;
                std::vector<std::string> ignored;
                while (!p.done()) {
                    std::string key;
                    if (!p.take_word(key, "model parameter name")) {
                        bad = true;
                        break;
                    }
                    if (p.done() || p.peek().text != "=") {
                        p.error("model parameter '" + key + "' needs '= value'");
                        bad = true;
                        break;
                    }
                    ++p.pos;  // '='
                    double value = 0.0;
                    if (!p.take_value(value, "model parameter '" + key + "'")) {
                        bad = true;
                        break;
                    }
                    if (key == "vto") {
                        card.vto = value;
                        have_vto = true;
                    } else if (key == "kp") {
                        card.kp = value;
                        have_kp = true;
                    } else if (key == "lambda") {
                        card.lambda = value;
                    } else {
                        ignored.push_back(key);
                    }
                }
                if (bad) continue;
                if (!have_vto || !have_kp) {
                    p.error("model " + card.name + ": vto and kp are required");
                    continue;
                }
                if (card.kp <= 0.0) {
                    p.error("model " + card.name + ": kp must be positive");
                    continue;
                }
                if (card.lambda < 0.0) {
                    p.error("model " + card.name + ": lambda must be >= 0");
                    continue;
                }
                if (c.models.count(card.name)) {
                    p.error("duplicate model '" + card.name + "'");
                    continue;
                }
                if (!ignored.empty()) {
                    std::string list;
                    for (size_t i = 0; i < ignored.size(); ++i)
                        list += (i ? ", " : "") + ignored[i];
                    p.warn("model " + card.name + ": ignored parameters " + list);
                }
                c.models.emplace(card.name, std::move(card));
                continue;
            }
            p.error("unknown directive '" + head + "'");
            continue;
        }

        // Element line. Name is the whole first token.
        std::string name;
        if (!p.take_word(name, "element name")) continue;
        if (element_names.count(name)) {
            p.error("duplicate element name '" + name + "'");
            continue;
        }

        bool added = false;
        switch (kind) {
            case 'm': {
                MosElement m;
                m.name = name;
                if (!p.take_word(m.drain, "drain node")) break;
                if (!p.take_word(m.gate, "gate node")) break;
                if (!p.take_word(m.source, "source node")) break;
                if (!p.take_word(m.bulk, "bulk node")) break;
                if (!p.take_word(m.model, "model name")) break;
                bool have_w = false, have_l = false, bad = false;
                while (!p.done()) {
                    std::string key;
                    if (!p.take_word(key, "device parameter")) {
                        bad = true;
                        break;
                    }
                    if (p.done() || p.peek().text != "=") {
                        p.error(name + ": parameter '" + key + "' needs '= value'");
                        bad = true;
                        break;
                    }
                    ++p.pos;
                    double value = 0.0;
                    if (!p.take_value(value, name + " parameter '" + key + "'")) {
                        bad = true;
                        break;
                    }
                    if (key == "w") {
                        m.w = value;
                        have_w = true;
                    } else if (key == "l") {
                        m.l = value;
                        have_l = true;
                    } else {
                        p.warn(name + ": ignored parameter " + key);
                    }
                }
                if (bad) break;
                if (!have_w || !have_l) {
                    p.error(name + ": W= and L= are required");
                    break;
                }
                if (!(m.w > 0.0 && m.l > 0.0)) {
                    p.error(name + ": W and L must be positive");
                    break;
                }
                c.elements.emplace_back(std::move(m));
                added = true;
                break;
            }
            case 'r': {
                ResistorElement r;
                r.name = name;
                if (!p.take_word(r.n1, "node")) break;
                if (!p.take_word(r.n2, "node")) break;
                if (!p.take_value(r.ohms, name + " resistance")) break;
                if (!p.expect_end(name)) break;
                c.elements.emplace_back(std::move(r));
                added = true;
                break;
            }
            case 'c': {
                CapacitorElement cap;
                cap.name = name;
                if (!p.take_word(cap.n1, "node")) break;
                if (!p.take_word(cap.n2, "node")) break;
                if (!p.take_value(cap.farads, name + " capacitance")) break;
                if (!p.expect_end(name)) break;
                c.elements.emplace_back(std::move(cap));
                added = true;
                break;
            }
            case 'v': {
                VSourceElement v;
                v.name = name;
                if (!p.take_word(v.np, "node")) break;
                if (!p.take_word(v.nn, "node")) break;
                if (p.done()) {
                    p.error(name + ": missing source value");
                    break;
                }
                if (p.peek().text == "sin") {
                    ++p.pos;
                    if (p.done() || p.peek().text != "(") {
                        p.error(name + ": SIN needs '(offset amplitude freq)'");
                        break;
                    }
                    ++p.pos;
                    SinSpec s;
                    if (!p.take_value(s.offset, name + " SIN offset")) break;
                    if (!p.take_value(s.amplitude, name + " SIN amplitude")) break;
                    if (!p.take_value(s.freq, name + " SIN frequency")) break;
                    if (p.done() || p.peek().text != ")") {
                        p.error(name +
                                ": SIN takes exactly (offset amplitude freq); "
                                "delay, damping and phase are not supported");
                        break;
                    }
                    ++p.pos;
                    if (!p.expect_end(name)) break;
                    v.sin = s;
                } else {
                    if (p.peek().text == "dc") ++p.pos;
                    if (!p.take_value(v.dc, name + " DC value")) break;
                    if (!p.expect_end(name)) break;
                }
                c.elements.emplace_back(std::move(v));
                added = true;
                break;
            }
            case 'i': {
                ISourceElement is;
                is.name = name;
                if (!p.take_word(is.np, "node")) break;
                if (!p.take_word(is.nn, "node")) break;
                if (!p.done() && p.peek().text == "dc") ++p.pos;
                if (!p.take_value(is.amperes, name + " current")) break;
                if (!p.expect_end(name)) break;
                c.elements.emplace_back(std::move(is));
                added = true;
                break;
            }
            case 'f': {
                CccsElement f;
                f.name = name;
                if (!p.take_word(f.np, "node")) break;
                if (!p.take_word(f.nn, "node")) break;
                if (!p.take_word(f.control, "controlling voltage source")) break;
                if (!p.take_value(f.gain, name + " gain")) break;
                if (!p.expect_end(name)) break;
                c.elements.emplace_back(std::move(f));
                added = true;
                break;
            }
            default:
                p.error("unknown element letter '" + std::string(1, kind) + "'");
                break;
        }
        if (added) element_names.insert(name);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<std::string> element_nodes(const Element& e) {
    struct Visitor {
        std::vector<std::string> operator()(const MosElement& m) const {
            return {m.drain, m.gate, m.source, m.bulk};
        }
        std::vector<std::string> operator()(const ResistorElement& r) const {
            return {r.n1, r.n2};
        }
        std::vector<std::string> operator()(const CapacitorElement& c) const {
            return {c.n1, c.n2};
        }
        std::vector<std::string> operator()(const VSourceElement& v) const {
            return {v.np, v.nn};
        }
        std::vector<std::string> operator()(const ISourceElement& i) const {
            return {i.np, i.nn};
        }
        std::vector<std::string> operator()(const CccsElement& f) const {
            return {f.np, f.nn};
        }
    };
    return std::visit(Visitor{}, e);
}

}  // namespace detail

/// Checks model references, ground presence and connectivity, then assigns
/// dense node indices with ground at index 0. Returns the error list;
/// empty means the circuit is validated in place.
inline std::vector<std::string> validate_circuit(Circuit& c) {
    std::vector<std::string> errors;

    c.nodes.clear();
    c.node_index.clear();
    c.validated = false;

    auto intern = [&](const std::string& n) {
        auto [it, fresh] = c.node_index.emplace(n, static_cast<int>(c.nodes.size()));
        if (fresh) c.nodes.push_back(n);
        return it->second;
    };
    intern("0");

    std::unordered_set<std::string> vsource_names;
    for (const Element& e : c.elements)
        if (const auto* v = std::get_if<VSourceElement>(&e))
            vsource_names.insert(v->name);

    std::vector<std::vector<int>> edges;  // hyperedge per element
    for (const Element& e : c.elements) {
        std::vector<int> idx;
        for (const std::string& n : detail::element_nodes(e)) idx.push_back(intern(n));
        edges.push_back(std::move(idx));

        if (const auto* m = std::get_if<MosElement>(&e)) {
            if (!c.models.count(m->model))
                errors.push_back("unknown model " + m->model + " (element " +
                                 m->name + ")");
        } else if (const auto* f = std::get_if<CccsElement>(&e)) {
            if (!vsource_names.count(f->control))
                errors.push_back("element " + f->name +
                                 ": unknown control source " + f->control);
        }
    }

    bool ground_used = false;
    for (const auto& idx : edges)
        for (int i : idx)
            if (i == 0) ground_used = true;
    if (!ground_used) {
        errors.push_back("no ground node: every circuit needs node 0");
        return errors;
    }

    // Connectivity through element hyperedges, starting at ground.
    std::vector<char> reached(c.nodes.size(), 0);
    reached[0] = 1;
    bool grew = true;
    while (grew) {
        grew = false;
        for (const auto& idx : edges) {
            bool any = false;
            for (int i : idx)
                if (reached[i]) any = true;
            if (!any) continue;
            for (int i : idx)
                if (!reached[i]) {
                    reached[i] = 1;
                    grew = true;
                }
        }
    }
    for (size_t i = 1; i < c.nodes.size(); ++i)
        if (!reached[i])
            errors.push_back("floating node " + c.nodes[i] +
                             " (no path to ground)");

    if (errors.empty()) c.validated = true;
    return errors;
}

// ---------------------------------------------------------------------------
// Emitter
// ---------------------------------------------------------------------------

/// Canonical text form; parse(emit(c)) is element-wise equal to c.
inline std::string emit_netlist(const Circuit& c) {
    std::string out;
    auto fd = [](double v) { return format_double(v); };

    struct Visitor {
        std::string operator()(const MosElement& m) const {
            return m.name + " " + m.drain + " " + m.gate + " " + m.source + " " +
                   m.bulk + " " + m.model + " w=" + format_double(m.w) +
                   " l=" + format_double(m.l);
        }
        std::string operator()(const ResistorElement& r) const {
            return r.name + " " + r.n1 + " " + r.n2 + " " + format_double(r.ohms);
        }
        std::string operator()(const CapacitorElement& cc) const {
            return cc.name + " " + cc.n1 + " " + cc.n2 + " " +
                   format_double(cc.farads);
        }
        std::string operator()(const VSourceElement& v) const {
            if (v.sin)
                return v.name + " " + v.np + " " + v.nn + " sin(" +
                       format_double(v.sin->offset) + " " +
                       format_double(v.sin->amplitude) + " " +
                       format_double(v.sin->freq) + ")";
            return v.name + " " + v.np + " " + v.nn + " dc " + format_double(v.dc);
        }
        std::string operator()(const ISourceElement& i) const {
            return i.name + " " + i.np + " " + i.nn + " " +
                   format_double(i.amperes);
        }
        std::string operator()(const CccsElement& f) const {
            return f.name + " " + f.np + " " + f.nn + " " + f.control + " " +
                   format_double(f.gain);
        }
    };

    for (const Element& e : c.elements) out += std::visit(Visitor{}, e) + "\n";

    for (const auto& [name, card] : c.models) {
        out += ".model " + name + " " +
               (card.polarity == MosPolarity::Nmos ? "nmos" : "pmos") +
               " vto=" + fd(card.vto) + " kp=" + fd(card.kp) +
               " lambda=" + fd(card.lambda) + "\n";
    }

    for (const AnalysisDirective& d : c.directives) {
        if (std::holds_alternative<OpDirective>(d)) {
            out += ".op\n";
        } else if (const auto* s = std::get_if<DcSweepDirective>(&d)) {
            out += ".dc " + s->source + " " + fd(s->start) + " " + fd(s->stop) +
                   " " + fd(s->step) + "\n";
        } else if (const auto* t = std::get_if<TranDirective>(&d)) {
            out += ".tran " + fd(t->tstep) + " " + fd(t->tstop) + "\n";
        }
    }

    out += ".end\n";
    return out;
}

}  // namespace dblsim
