#ifndef FLOWGEOM_FORMULA_HPP
#define FLOWGEOM_FORMULA_HPP

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace flowgeom {

enum class FormulaKind { Atom, Predicate, Not, And, Or, Implies, Iff, Forall, Exists };

/// Immutable first-order formula tree. Children are shared, so copies are cheap.
///
/// Terms are lowercase identifiers; whether a term is a variable or a constant
/// depends only on whether an enclosing quantifier binds it.
class Formula {
public:
    using Ptr = std::shared_ptr<const Formula>;

    static Formula atom(std::string name);
    static Formula predicate(std::string name, std::vector<std::string> args);
    static Formula negation(Formula f);
    static Formula conjunction(Formula lhs, Formula rhs);
    static Formula disjunction(Formula lhs, Formula rhs);
    static Formula implication(Formula lhs, Formula rhs);
    static Formula biconditional(Formula lhs, Formula rhs);
    /// `kind` must be one of And, Or, Implies, Iff.
    static Formula binary(FormulaKind kind, Formula lhs, Formula rhs);
    static Formula forall(std::string var, Formula body);
    static Formula exists(std::string var, Formula body);

    FormulaKind kind() const { return kind_; }
    /// Atom/predicate name, or the bound variable of a quantifier.
    const std::string& name() const { return name_; }
    const std::vector<std::string>& args() const { return args_; }
    /// Operand of Not, body of a quantifier, or left side of a binary connective.
    const Formula& lhs() const { return *lhs_; }
    const Formula& rhs() const { return *rhs_; }

    bool is_binary() const;
    bool is_quantifier() const { return kind_ == FormulaKind::Forall || kind_ == FormulaKind::Exists; }

    /// Replaces free occurrences of term `var` by `term`.
    Formula substitute(const std::string& var, const std::string& term) const;

    /// Every term appearing in predicate arguments (bound or free).
    void collect_terms(std::set<std::string>& out) const;

    /// True if any Not/Or/Iff/Exists node occurs.
    bool uses_connective(FormulaKind k) const;

    friend bool operator==(const Formula& a, const Formula& b);
    friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }
    friend bool operator<(const Formula& a, const Formula& b);

private:
    Formula() = default;

    FormulaKind kind_ = FormulaKind::Atom;
    std::string name_;
    std::vector<std::string> args_;
    Ptr lhs_;
    Ptr rhs_;
};

enum class Notation { Ascii, Unicode };

/// Parses propositional / first-order text. Accepts Unicode connectives
/// (¬ ∧ ∨ → ↔ ∀ ∃) and ASCII aliases (~ & | -> <-> forall exists).
///
/// Precedence, tightest first: ¬ and quantifiers, ∧, ∨, → (right-assoc),
/// ↔ (right-assoc). A quantifier binds the following parenthesized or
/// atomic body. Throws SyntaxError.
Formula parse_formula(std::string_view text);

/// Minimal-parenthesis rendering; parse_formula(to_string(f)) == f.
std::string to_string(const Formula& f, Notation notation = Notation::Ascii);

}  // namespace flowgeom

#endif  // FLOWGEOM_FORMULA_HPP
