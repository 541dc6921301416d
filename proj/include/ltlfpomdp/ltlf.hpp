#pragma once

// Finite-trace linear temporal logic: syntax tree, concrete grammar and the
// trace semantics used as the reference oracle for automaton compilation.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lpomdp::ltlf {

enum class Op {
    True,
    False,
    Atom,
    Not,
    And,
    Or,
    Implies,
    Next,
    WeakNext,
    Until,
    Release,
    Eventually,
    Always,
};

/// Number of operands taken by `op` (0, 1 or 2).
int arity(Op op) noexcept;

/// True for the operators whose subformulas are treated as opaque decision
/// variables by the propositional canonicalizer (atoms and X, N, U, R, F, G).
bool is_temporal_root(Op op) noexcept;

/// Immutable, shareable formula tree. Copies share structure.
class Formula {
public:
    Formula();  // `true`

    Op op() const noexcept { return node_->op; }
    const std::string& atom_name() const noexcept { return node_->atom; }
    const Formula& lhs() const;
    const Formula& rhs() const;
    /// Operand of a unary node.
    const Formula& child() const { return lhs(); }

    /// Identity of the underlying node; stable for the lifetime of any copy.
    const void* id() const noexcept { return node_.get(); }

    friend bool operator==(const Formula& a, const Formula& b);
    friend bool operator!=(const Formula& a, const Formula& b) { return !(a == b); }

    static Formula make(Op op, std::string atom, std::optional<Formula> lhs, std::optional<Formula> rhs);

private:
    struct Node {
        Op op = Op::True;
        std::string atom;
        std::vector<Formula> children;
    };
    explicit Formula(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

Formula make_true();
Formula make_false();
Formula make_atom(std::string name);
Formula make_not(Formula f);
Formula make_and(Formula a, Formula b);
Formula make_or(Formula a, Formula b);
Formula make_implies(Formula a, Formula b);
Formula make_next(Formula f);
Formula make_weak_next(Formula f);
Formula make_until(Formula a, Formula b);
Formula make_release(Formula a, Formula b);
Formula make_eventually(Formula f);
Formula make_always(Formula f);

/// True iff `name` matches [a-z][a-z0-9_]* and is not a keyword.
bool is_valid_atom_name(std::string_view name) noexcept;

/// Ordered atom set. Ordering is lexicographic; bit i of a Letter is atoms()[i].
class AtomOrder {
public:
    AtomOrder() = default;
    /// Sorts and deduplicates; throws ValidationError on an invalid name.
    explicit AtomOrder(std::vector<std::string> names);

    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return names_.size(); }
    std::size_t alphabet_size() const noexcept { return std::size_t{1} << names_.size(); }
    std::optional<std::size_t> index_of(std::string_view name) const;

    friend bool operator==(const AtomOrder&, const AtomOrder&) = default;

private:
    std::vector<std::string> names_;
};

/// Set of atoms true at one position, as a bitmask over an AtomOrder.
using Letter = std::uint32_t;
using Word = std::vector<Letter>;

/// Letter with exactly the named atoms set. Throws ValidationError on unknown atoms.
Letter make_letter(const AtomOrder& atoms, const std::vector<std::string>& present);

/// Sorted set of atom names occurring in `f`.
std::vector<std::string> atoms_of(const Formula& f);

struct ParsedFormula {
    Formula formula;
    AtomOrder atoms;
};

/// Parses `text`. With no explicit atom list the atom set is inferred from the
/// identifiers in the text; with one, any other identifier is an error.
ParsedFormula parse_formula(std::string_view text,
                            const std::optional<std::vector<std::string>>& atoms = std::nullopt);

/// Minimal-parenthesis rendering; parse_formula(format_formula(f)) == f.
std::string format_formula(const Formula& f);

/// w,i |= f. Requires |w| >= 1 and i < |w|; throws ValidationError otherwise.
bool evaluate_trace(const Formula& f, const AtomOrder& atoms, const Word& w, std::size_t i = 0);

} // namespace lpomdp::ltlf
