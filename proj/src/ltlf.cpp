#include "ltlfpomdp/ltlf.hpp"

#include "ltlfpomdp/error.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <unordered_map>

namespace lpomdp::ltlf {

int arity(Op op) noexcept {
    switch (op) {
    case Op::True:
    case Op::False:
    case Op::Atom:
        return 0;
    case Op::Not:
    case Op::Next:
    case Op::WeakNext:
    case Op::Eventually:
    case Op::Always:
        return 1;
    default:
        return 2;
    }
}

bool is_temporal_root(Op op) noexcept {
    switch (op) {
    case Op::Atom:
    case Op::Next:
    case Op::WeakNext:
    case Op::Until:
    case Op::Release:
    case Op::Eventually:
    case Op::Always:
        return true;
    default:
        return false;
    }
}

Formula::Formula() {
    static const auto true_node = std::make_shared<const Node>();
    node_ = true_node;
}

const Formula& Formula::lhs() const {
    if (node_->children.empty()) {
        throw std::logic_error("formula node has no operand");
    }
    return node_->children[0];
}

const Formula& Formula::rhs() const {
    if (node_->children.size() < 2) {
        throw std::logic_error("formula node has no right operand");
    }
    return node_->children[1];
}

bool operator==(const Formula& a, const Formula& b) {
    if (a.node_ == b.node_) {
        return true;
    }
    if (a.op() != b.op() || a.atom_name() != b.atom_name() ||
        a.node_->children.size() != b.node_->children.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.node_->children.size(); ++i) {
        if (!(a.node_->children[i] == b.node_->children[i])) {
            return false;
        }
    }
    return true;
}

Formula Formula::make(Op op, std::string atom, std::optional<Formula> lhs, std::optional<Formula> rhs) {
    Node node;
    node.op = op;
    node.atom = std::move(atom);
    if (lhs) {
        node.children.push_back(std::move(*lhs));
    }
    if (rhs) {
        node.children.push_back(std::move(*rhs));
    }
    if (static_cast<int>(node.children.size()) != arity(op)) {
        throw std::logic_error("formula operand count does not match operator arity");
    }
    return Formula(std::make_shared<const Node>(std::move(node)));
}

Formula make_true() { return Formula(); }
Formula make_false() { return Formula::make(Op::False, {}, std::nullopt, std::nullopt); }
Formula make_atom(std::string name) {
    if (!is_valid_atom_name(name)) {
        throw ValidationError("invalid atom name '" + name + "'");
    }
    return Formula::make(Op::Atom, std::move(name), std::nullopt, std::nullopt);
}
Formula make_not(Formula f) { return Formula::make(Op::Not, {}, std::move(f), std::nullopt); }
Formula make_and(Formula a, Formula b) { return Formula::make(Op::And, {}, std::move(a), std::move(b)); }
Formula make_or(Formula a, Formula b) { return Formula::make(Op::Or, {}, std::move(a), std::move(b)); }
Formula make_implies(Formula a, Formula b) {
    return Formula::make(Op::Implies, {}, std::move(a), std::move(b));
}
Formula make_next(Formula f) { return Formula::make(Op::Next, {}, std::move(f), std::nullopt); }
Formula make_weak_next(Formula f) { return Formula::make(Op::WeakNext, {}, std::move(f), std::nullopt); }
Formula make_until(Formula a, Formula b) { return Formula::make(Op::Until, {}, std::move(a), std::move(b)); }
Formula make_release(Formula a, Formula b) {
    return Formula::make(Op::Release, {}, std::move(a), std::move(b));
}
Formula make_eventually(Formula f) { return Formula::make(Op::Eventually, {}, std::move(f), std::nullopt); }
Formula make_always(Formula f) { return Formula::make(Op::Always, {}, std::move(f), std::nullopt); }

bool is_valid_atom_name(std::string_view name) noexcept {
    if (name.empty() || !(name[0] >= 'a' && name[0] <= 'z')) {
        return false;
    }
    for (char c : name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) {
            return false;
        }
    }
    return name != "true" && name != "false";
}

AtomOrder::AtomOrder(std::vector<std::string> names) : names_(std::move(names)) {
    for (const auto& n : names_) {
        if (!is_valid_atom_name(n)) {
            throw ValidationError("invalid atom name '" + n + "'");
        }
    }
    std::sort(names_.begin(), names_.end());
    names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
    if (names_.size() > 31) {
        throw ValidationError("at most 31 atoms are supported");
    }
}

std::optional<std::size_t> AtomOrder::index_of(std::string_view name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - names_.begin());
}

Letter make_letter(const AtomOrder& atoms, const std::vector<std::string>& present) {
    Letter letter = 0;
    for (const auto& name : present) {
        auto idx = atoms.index_of(name);
        if (!idx) {
            throw ValidationError("atom '" + name + "' is not in the atom set");
        }
        letter |= Letter{1} << *idx;
    }
    return letter;
}

namespace {

void collect_atoms(const Formula& f, std::set<std::string>& out) {
    if (f.op() == Op::Atom) {
        out.insert(f.atom_name());
        return;
    }
    const int n = arity(f.op());
    if (n >= 1) {
        collect_atoms(f.lhs(), out);
    }
    if (n == 2) {
        collect_atoms(f.rhs(), out);
    }
}

// ---------------------------------------------------------------- lexer/parser

enum class Tok { Ident, True, False, Not, Next, WeakNext, Eventually, Always, Until, Release, And, Or, Implies, LParen, RParen, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (c >= 'a' && c <= 'z') {
            while (i < s.size() && ((s[i] >= 'a' && s[i] <= 'z') || (s[i] >= '0' && s[i] <= '9') || s[i] == '_')) {
                ++i;
            }
            std::string word(s.substr(start, i - start));
            Tok kind = Tok::Ident;
            if (word == "true") {
                kind = Tok::True;
            } else if (word == "false") {
                kind = Tok::False;
            }
            out.push_back({kind, std::move(word), start});
            continue;
        }
        Tok kind;
        std::size_t len = 1;
        switch (c) {
        case '!': kind = Tok::Not; break;
        case 'X': kind = Tok::Next; break;
        case 'N': kind = Tok::WeakNext; break;
        case 'F': kind = Tok::Eventually; break;
        case 'G': kind = Tok::Always; break;
        case 'U': kind = Tok::Until; break;
        case 'R': kind = Tok::Release; break;
        case '&': kind = Tok::And; break;
        case '|': kind = Tok::Or; break;
        case '(': kind = Tok::LParen; break;
        case ')': kind = Tok::RParen; break;
        case '-':
            if (i + 1 < s.size() && s[i + 1] == '>') {
                kind = Tok::Implies;
                len = 2;
                break;
            }
            throw ParseError("expected '->'", start);
        default:
            throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
        // Operator letters must stand alone: "Fa" is not "F a".
        if (std::isupper(static_cast<unsigned char>(c)) && i + 1 < s.size() &&
            std::isalnum(static_cast<unsigned char>(s[i + 1]))) {
            throw ParseError("operator letter must be followed by a separator", start);
        }
        out.push_back({kind, std::string(s.substr(start, len)), start});
        i += len;
    }
    out.push_back({Tok::End, "", s.size()});
    return out;
}

class Parser {
public:
    Parser(std::vector<Token> tokens, const std::optional<std::vector<std::string>>& allowed)
        : tokens_(std::move(tokens)) {
        if (allowed) {
            allowed_ = std::set<std::string>(allowed->begin(), allowed->end());
        }
    }

    Formula parse() {
        Formula f = parse_implies();
        if (peek().kind != Tok::End) {
            throw ParseError("unexpected token '" + peek().text + "'", peek().pos);
        }
        return f;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    Token take() { return tokens_[pos_++]; }

    Formula parse_implies() {
        Formula lhs = parse_or();
        if (peek().kind == Tok::Implies) {
            take();
            return make_implies(std::move(lhs), parse_implies());
        }
        return lhs;
    }

    Formula parse_or() {
        Formula lhs = parse_and();
        while (peek().kind == Tok::Or) {
            take();
            lhs = make_or(std::move(lhs), parse_and());
        }
        return lhs;
    }

    Formula parse_and() {
        Formula lhs = parse_until();
        while (peek().kind == Tok::And) {
            take();
            lhs = make_and(std::move(lhs), parse_until());
        }
        return lhs;
    }

    Formula parse_until() {
        Formula lhs = parse_unary();
        if (peek().kind == Tok::Until) {
            take();
            return make_until(std::move(lhs), parse_until());
        }
        if (peek().kind == Tok::Release) {
            take();
            return make_release(std::move(lhs), parse_until());
        }
        return lhs;
    }

    Formula parse_unary() {
        switch (peek().kind) {
        case Tok::Not: take(); return make_not(parse_unary());
        case Tok::Next: take(); return make_next(parse_unary());
        case Tok::WeakNext: take(); return make_weak_next(parse_unary());
        case Tok::Eventually: take(); return make_eventually(parse_unary());
        case Tok::Always: take(); return make_always(parse_unary());
        default: return parse_primary();
        }
    }

    Formula parse_primary() {
        Token t = take();
        switch (t.kind) {
        case Tok::True: return make_true();
        case Tok::False: return make_false();
        case Tok::Ident:
            if (allowed_ && !allowed_->count(t.text)) {
                throw ParseError("unknown atom '" + t.text + "'", t.pos);
            }
            return make_atom(t.text);
        case Tok::LParen: {
            Formula inner = parse_implies();
            if (peek().kind != Tok::RParen) {
                throw ParseError("expected ')'", peek().pos);
            }
            take();
            return inner;
        }
        case Tok::End: throw ParseError("unexpected end of formula", t.pos);
        default: throw ParseError("unexpected token '" + t.text + "'", t.pos);
        }
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    std::optional<std::set<std::string>> allowed_;
};

// ---------------------------------------------------------------- printer

int precedence(Op op) {
    switch (op) {
    case Op::Implies: return 1;
    case Op::Or: return 2;
    case Op::And: return 3;
    case Op::Until:
    case Op::Release: return 4;
    case Op::Not:
    case Op::Next:
    case Op::WeakNext:
    case Op::Eventually:
    case Op::Always: return 5;
    default: return 6;
    }
}

void print(const Formula& f, std::string& out);

void print_operand(const Formula& f, bool wrap, std::string& out) {
    if (wrap) {
        out += '(';
        print(f, out);
        out += ')';
    } else {
        print(f, out);
    }
}

void print(const Formula& f, std::string& out) {
    const Op op = f.op();
    const int prec = precedence(op);
    switch (op) {
    case Op::True: out += "true"; return;
    case Op::False: out += "false"; return;
    case Op::Atom: out += f.atom_name(); return;
    case Op::Not:
        out += '!';
        print_operand(f.child(), precedence(f.child().op()) < prec, out);
        return;
    case Op::Next:
    case Op::WeakNext:
    case Op::Eventually:
    case Op::Always: {
        const char sym = op == Op::Next ? 'X' : op == Op::WeakNext ? 'N' : op == Op::Eventually ? 'F' : 'G';
        out += sym;
        out += ' ';
        print_operand(f.child(), precedence(f.child().op()) < prec, out);
        return;
    }
    default: break;
    }
    const bool right_assoc = op == Op::Until || op == Op::Release || op == Op::Implies;
    const int lp = precedence(f.lhs().op());
    const int rp = precedence(f.rhs().op());
    const bool wrap_left = right_assoc ? lp <= prec : lp < prec;
    const bool wrap_right = right_assoc ? rp < prec : rp <= prec;
    print_operand(f.lhs(), wrap_left, out);
    switch (op) {
    case Op::And: out += " & "; break;
    case Op::Or: out += " | "; break;
    case Op::Implies: out += " -> "; break;
    case Op::Until: out += " U "; break;
    case Op::Release: out += " R "; break;
    default: break;
    }
    print_operand(f.rhs(), wrap_right, out);
}

// ---------------------------------------------------------------- semantics

// Memoized recursion over the satisfaction clauses; memo key is (node, position).
class TraceEvaluator {
public:
    TraceEvaluator(const AtomOrder& atoms, const Word& w) : atoms_(atoms), w_(w) {}

    bool sat(const Formula& f, std::size_t i) {
        auto& row = memo_[f.id()];
        if (row.empty()) {
            row.assign(w_.size(), -1);
        }
        if (row[i] >= 0) {
            return row[i] != 0;
        }
        const bool v = compute(f, i);
        memo_[f.id()][i] = v ? 1 : 0;
        return v;
    }

private:
    bool compute(const Formula& f, std::size_t i) {
        const std::size_t n = w_.size();
        switch (f.op()) {
        case Op::True: return true;
        case Op::False: return false;
        case Op::Atom: {
            auto idx = atoms_.index_of(f.atom_name());
            if (!idx) {
                throw ValidationError("atom '" + f.atom_name() + "' is not in the atom set");
            }
            return (w_[i] >> *idx) & 1U;
        }
        case Op::Not: return !sat(f.child(), i);
        case Op::And: return sat(f.lhs(), i) && sat(f.rhs(), i);
        case Op::Or: return sat(f.lhs(), i) || sat(f.rhs(), i);
        case Op::Implies: return !sat(f.lhs(), i) || sat(f.rhs(), i);
        case Op::Next: return i + 1 < n && sat(f.child(), i + 1);
        case Op::WeakNext: return !(i + 1 < n) || sat(f.child(), i + 1);
        case Op::Until:
            for (std::size_t k = i; k < n; ++k) {
                if (sat(f.rhs(), k)) {
                    return true;
                }
                if (!sat(f.lhs(), k)) {
                    return false;
                }
            }
            return false;
        case Op::Release:
            // !(!a U !b): b holds until and including the first position where a holds.
            for (std::size_t k = i; k < n; ++k) {
                if (!sat(f.rhs(), k)) {
                    return false;
                }
                if (sat(f.lhs(), k)) {
                    return true;
                }
            }
            return true;
        case Op::Eventually:
            for (std::size_t k = i; k < n; ++k) {
                if (sat(f.child(), k)) {
                    return true;
                }
            }
            return false;
        case Op::Always:
            for (std::size_t k = i; k < n; ++k) {
                if (!sat(f.child(), k)) {
                    return false;
                }
            }
            return true;
        }
        return false;
    }

    const AtomOrder& atoms_;
    const Word& w_;
    std::unordered_map<const void*, std::vector<signed char>> memo_;
};

} // namespace

std::vector<std::string> atoms_of(const Formula& f) {
    std::set<std::string> names;
    collect_atoms(f, names);
    return {names.begin(), names.end()};
}

ParsedFormula parse_formula(std::string_view text, const std::optional<std::vector<std::string>>& atoms) {
    Parser parser(tokenize(text), atoms);
    Formula f = parser.parse();
    AtomOrder order = atoms ? AtomOrder(*atoms) : AtomOrder(atoms_of(f));
    return {std::move(f), std::move(order)};
}

std::string format_formula(const Formula& f) {
    std::string out;
    print(f, out);
    return out;
}

bool evaluate_trace(const Formula& f, const AtomOrder& atoms, const Word& w, std::size_t i) {
    if (w.empty()) {
        throw ValidationError("evaluate_trace requires a non-empty word");
    }
    if (i >= w.size()) {
        throw ValidationError("trace position " + std::to_string(i) + " out of range for word of length " +
                              std::to_string(w.size()));
    }
    TraceEvaluator ev(atoms, w);
    return ev.sat(f, i);
}

} // namespace lpomdp::ltlf
