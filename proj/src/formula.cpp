#include "flowgeom/formula.hpp"

#include <cctype>
#include <utility>

#include "flowgeom/errors.hpp"

namespace flowgeom {

namespace {

std::string join_expected(const std::vector<std::string>& expected) {
    std::string out;
    for (std::size_t i = 0; i < expected.size(); ++i) {
        if (i) out += ", ";
        out += expected[i];
    }
    return out;
}

}  // namespace

SyntaxError::SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found)
    : Error("syntax error at offset " + std::to_string(position) + ": expected one of {" +
            join_expected(expected) + "}, found " + found),
      position_(position),
      expected_(std::move(expected)) {}

// ---------------------------------------------------------------------------
// Construction and structural queries

Formula Formula::atom(std::string name) {
    Formula f;
    f.kind_ = FormulaKind::Atom;
    f.name_ = std::move(name);
    return f;
}

Formula Formula::predicate(std::string name, std::vector<std::string> args) {
    Formula f;
    f.kind_ = FormulaKind::Predicate;
    f.name_ = std::move(name);
    f.args_ = std::move(args);
    return f;
}

Formula Formula::negation(Formula inner) {
    Formula f;
    f.kind_ = FormulaKind::Not;
    f.lhs_ = std::make_shared<const Formula>(std::move(inner));
    return f;
}

Formula Formula::binary(FormulaKind kind, Formula lhs, Formula rhs) {
    Formula f;
    f.kind_ = kind;
    f.lhs_ = std::make_shared<const Formula>(std::move(lhs));
    f.rhs_ = std::make_shared<const Formula>(std::move(rhs));
    if (!f.is_binary()) throw InvalidArgument("Formula::binary: not a binary connective");
    return f;
}

Formula Formula::conjunction(Formula lhs, Formula rhs) { return binary(FormulaKind::And, std::move(lhs), std::move(rhs)); }
Formula Formula::disjunction(Formula lhs, Formula rhs) { return binary(FormulaKind::Or, std::move(lhs), std::move(rhs)); }
Formula Formula::implication(Formula lhs, Formula rhs) { return binary(FormulaKind::Implies, std::move(lhs), std::move(rhs)); }
Formula Formula::biconditional(Formula lhs, Formula rhs) { return binary(FormulaKind::Iff, std::move(lhs), std::move(rhs)); }

Formula Formula::forall(std::string var, Formula body) {
    Formula f;
    f.kind_ = FormulaKind::Forall;
    f.name_ = std::move(var);
    f.lhs_ = std::make_shared<const Formula>(std::move(body));
    return f;
}

Formula Formula::exists(std::string var, Formula body) {
    Formula f = forall(std::move(var), std::move(body));
    f.kind_ = FormulaKind::Exists;
    return f;
}

bool Formula::is_binary() const {
    switch (kind_) {
        case FormulaKind::And:
        case FormulaKind::Or:
        case FormulaKind::Implies:
        case FormulaKind::Iff:
            return true;
        default:
            return false;
    }
}

Formula Formula::substitute(const std::string& var, const std::string& term) const {
    switch (kind_) {
        case FormulaKind::Atom:
            return *this;
        case FormulaKind::Predicate: {
            Formula f = *this;
            for (auto& a : f.args_) {
                if (a == var) a = term;
            }
            return f;
        }
        case FormulaKind::Not: {
            Formula f = *this;
            f.lhs_ = std::make_shared<const Formula>(lhs_->substitute(var, term));
            return f;
        }
        case FormulaKind::Forall:
        case FormulaKind::Exists: {
            if (name_ == var) return *this;  // shadowed
            Formula f = *this;
            f.lhs_ = std::make_shared<const Formula>(lhs_->substitute(var, term));
            return f;
        }
        default: {
            Formula f = *this;
            f.lhs_ = std::make_shared<const Formula>(lhs_->substitute(var, term));
            f.rhs_ = std::make_shared<const Formula>(rhs_->substitute(var, term));
            return f;
        }
    }
}

void Formula::collect_terms(std::set<std::string>& out) const {
    if (kind_ == FormulaKind::Predicate) {
        out.insert(args_.begin(), args_.end());
    }
    if (lhs_) lhs_->collect_terms(out);
    if (rhs_) rhs_->collect_terms(out);
}

bool Formula::uses_connective(FormulaKind k) const {
    if (kind_ == k) return true;
    if (lhs_ && lhs_->uses_connective(k)) return true;
    return rhs_ && rhs_->uses_connective(k);
}

bool operator==(const Formula& a, const Formula& b) {
    if (a.kind_ != b.kind_ || a.name_ != b.name_ || a.args_ != b.args_) return false;
    if (static_cast<bool>(a.lhs_) != static_cast<bool>(b.lhs_)) return false;
    if (a.lhs_ && *a.lhs_ != *b.lhs_) return false;
    if (static_cast<bool>(a.rhs_) != static_cast<bool>(b.rhs_)) return false;
    return !a.rhs_ || *a.rhs_ == *b.rhs_;
}

bool operator<(const Formula& a, const Formula& b) {
    if (a.kind_ != b.kind_) return a.kind_ < b.kind_;
    if (a.name_ != b.name_) return a.name_ < b.name_;
    if (a.args_ != b.args_) return a.args_ < b.args_;
    if (a.lhs_ && b.lhs_ && *a.lhs_ != *b.lhs_) return *a.lhs_ < *b.lhs_;
    if (a.rhs_ && b.rhs_) return *a.rhs_ < *b.rhs_;
    return false;
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

enum class Tok { LParen, RParen, Comma, Not, And, Or, Implies, Iff, Forall, Exists, Upper, Lower, End };

struct Token {
    Tok kind;
    std::string text;
    std::size_t pos;
};

const char* tok_name(Tok t) {
    switch (t) {
        case Tok::LParen: return "'('";
        case Tok::RParen: return "')'";
        case Tok::Comma: return "','";
        case Tok::Not: return "'~'";
        case Tok::And: return "'&'";
        case Tok::Or: return "'|'";
        case Tok::Implies: return "'->'";
        case Tok::Iff: return "'<->'";
        case Tok::Forall: return "'forall'";
        case Tok::Exists: return "'exists'";
        case Tok::Upper: return "atom";
        case Tok::Lower: return "term";
        case Tok::End: return "end of input";
    }
    return "?";
}

struct Symbol {
    std::string_view spelling;
    Tok kind;
};

// Longest spellings first so "<->" wins over "<" prefixes and "->".
constexpr Symbol kSymbols[] = {
    {"<->", Tok::Iff}, {"->", Tok::Implies}, {"\xE2\x86\x94", Tok::Iff},      // ↔
    {"\xE2\x86\x92", Tok::Implies},                                          // →
    {"\xC2\xAC", Tok::Not},                                                  // ¬
    {"\xE2\x88\xA7", Tok::And},                                              // ∧
    {"\xE2\x88\xA8", Tok::Or},                                               // ∨
    {"\xE2\x88\x80", Tok::Forall},                                           // ∀
    {"\xE2\x88\x83", Tok::Exists},                                           // ∃
    {"~", Tok::Not},   {"&", Tok::And},    {"|", Tok::Or},
    {"(", Tok::LParen}, {")", Tok::RParen}, {",", Tok::Comma},
};

bool is_ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        bool matched = false;
        for (const auto& sym : kSymbols) {
            if (text.substr(i, sym.spelling.size()) == sym.spelling) {
                out.push_back({sym.kind, std::string(sym.spelling), i});
                i += sym.spelling.size();
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (std::isalpha(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && is_ident_char(text[j])) ++j;
            std::string word(text.substr(i, j - i));
            Tok kind;
            if (word == "forall") {
                kind = Tok::Forall;
            } else if (word == "exists") {
                kind = Tok::Exists;
            } else if (std::isupper(static_cast<unsigned char>(c))) {
                kind = Tok::Upper;
            } else {
                kind = Tok::Lower;
            }
            out.push_back({kind, std::move(word), i});
            i = j;
            continue;
        }
        throw SyntaxError(i, {"formula"}, "unexpected character '" + std::string(1, c) + "'");
    }
    out.push_back({Tok::End, "", text.size()});
    return out;
}

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    Formula parse() {
        Formula f = parse_iff();
        expect(Tok::End, {Tok::End, Tok::And, Tok::Or, Tok::Implies, Tok::Iff});
        return f;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    bool accept(Tok k) {
        if (peek().kind == k) {
            ++pos_;
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(std::initializer_list<Tok> expected) const {
        std::vector<std::string> names;
        for (Tok t : expected) names.emplace_back(tok_name(t));
        const Token& t = peek();
        throw SyntaxError(t.pos, std::move(names), t.kind == Tok::End ? "end of input" : "'" + t.text + "'");
    }

    const Token& expect(Tok k, std::initializer_list<Tok> expected) {
        if (peek().kind != k) fail(expected);
        return tokens_[pos_++];
    }

    Formula parse_iff() {
        Formula lhs = parse_implies();
        if (accept(Tok::Iff)) return Formula::biconditional(std::move(lhs), parse_iff());
        return lhs;
    }

    Formula parse_implies() {
        Formula lhs = parse_or();
        if (accept(Tok::Implies)) return Formula::implication(std::move(lhs), parse_implies());
        return lhs;
    }

    Formula parse_or() {
        Formula lhs = parse_and();
        while (accept(Tok::Or)) lhs = Formula::disjunction(std::move(lhs), parse_and());
        return lhs;
    }

    Formula parse_and() {
        Formula lhs = parse_unary();
        while (accept(Tok::And)) lhs = Formula::conjunction(std::move(lhs), parse_unary());
        return lhs;
    }

    Formula parse_unary() {
        if (accept(Tok::Not)) return Formula::negation(parse_unary());
        const Tok k = peek().kind;
        if (k == Tok::Forall || k == Tok::Exists) {
            ++pos_;
            std::string var = expect(Tok::Lower, {Tok::Lower}).text;
            Formula body = parse_unary();
            return k == Tok::Forall ? Formula::forall(std::move(var), std::move(body))
                                    : Formula::exists(std::move(var), std::move(body));
        }
        return parse_primary();
    }

    Formula parse_primary() {
        if (accept(Tok::LParen)) {
            Formula inner = parse_iff();
            expect(Tok::RParen, {Tok::RParen, Tok::And, Tok::Or, Tok::Implies, Tok::Iff});
            return inner;
        }
        if (peek().kind == Tok::Upper) {
            std::string name = tokens_[pos_++].text;
            if (!accept(Tok::LParen)) return Formula::atom(std::move(name));
            std::vector<std::string> args;
            args.push_back(expect(Tok::Lower, {Tok::Lower}).text);
            while (accept(Tok::Comma)) args.push_back(expect(Tok::Lower, {Tok::Lower}).text);
            expect(Tok::RParen, {Tok::Comma, Tok::RParen});
            return Formula::predicate(std::move(name), std::move(args));
        }
        fail({Tok::Upper, Tok::LParen, Tok::Not, Tok::Forall, Tok::Exists});
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

// Binding strength used by the printer; higher binds tighter.
int precedence(FormulaKind k) {
    switch (k) {
        case FormulaKind::Iff: return 1;
        case FormulaKind::Implies: return 2;
        case FormulaKind::Or: return 3;
        case FormulaKind::And: return 4;
        case FormulaKind::Not:
        case FormulaKind::Forall:
        case FormulaKind::Exists: return 5;
        default: return 6;
    }
}

bool right_assoc(FormulaKind k) { return k == FormulaKind::Implies || k == FormulaKind::Iff; }

struct Spelling {
    const char* op_not;
    const char* op_and;
    const char* op_or;
    const char* op_implies;
    const char* op_iff;
    const char* op_forall;
    const char* op_exists;
};

constexpr Spelling kAscii{"~", " & ", " | ", " -> ", " <-> ", "forall ", "exists "};
constexpr Spelling kUnicode{"\xC2\xAC", " \xE2\x88\xA7 ", " \xE2\x88\xA8 ", " \xE2\x86\x92 ", " \xE2\x86\x94 ",
                            "\xE2\x88\x80", "\xE2\x88\x83"};

void print(const Formula& f, const Spelling& sp, std::string& out);

void print_child(const Formula& child, bool parens, const Spelling& sp, std::string& out) {
    if (parens) out += '(';
    print(child, sp, out);
    if (parens) out += ')';
}

void print(const Formula& f, const Spelling& sp, std::string& out) {
    switch (f.kind()) {
        case FormulaKind::Atom:
            out += f.name();
            return;
        case FormulaKind::Predicate:
            out += f.name();
            out += '(';
            for (std::size_t i = 0; i < f.args().size(); ++i) {
                if (i) out += ',';
                out += f.args()[i];
            }
            out += ')';
            return;
        case FormulaKind::Not:
            out += sp.op_not;
            print_child(f.lhs(), precedence(f.lhs().kind()) < 5, sp, out);
            return;
        case FormulaKind::Forall:
        case FormulaKind::Exists: {
            out += f.kind() == FormulaKind::Forall ? sp.op_forall : sp.op_exists;
            out += f.name();
            const bool parens = precedence(f.lhs().kind()) < 5;
            if (!parens) out += ' ';
            print_child(f.lhs(), parens, sp, out);
            return;
        }
        default:
            break;
    }
    const int p = precedence(f.kind());
    const int pl = precedence(f.lhs().kind());
    const int pr = precedence(f.rhs().kind());
    const bool ra = right_assoc(f.kind());
    print_child(f.lhs(), ra ? pl <= p : pl < p, sp, out);
    switch (f.kind()) {
        case FormulaKind::And: out += sp.op_and; break;
        case FormulaKind::Or: out += sp.op_or; break;
        case FormulaKind::Implies: out += sp.op_implies; break;
        default: out += sp.op_iff; break;
    }
    print_child(f.rhs(), ra ? pr < p : pr <= p, sp, out);
}

}  // namespace

Formula parse_formula(std::string_view text) {
    Parser parser(tokenize(text));
    return parser.parse();
}

std::string to_string(const Formula& f, Notation notation) {
    std::string out;
    print(f, notation == Notation::Ascii ? kAscii : kUnicode, out);
    return out;
}

}  // namespace flowgeom
