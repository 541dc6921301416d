#pragma once

// Compilation of finite-trace formulas into deterministic finite automata by
// formula progression over a propositional canonical form.

#include "ltlfpomdp/bdd.hpp"
#include "ltlfpomdp/ltlf.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace lpomdp::dfa {

using ltlf::AtomOrder;
using ltlf::Formula;
using ltlf::Letter;
using ltlf::Word;

/// Empty-word acceptance: whether `f` holds on the word of length zero.
bool empty_accept(const Formula& f);

/// Canonical forms relative to one source formula.
///
/// A key is a reduced ordered decision diagram whose variables are the
/// temporal atoms of the formulas it was built from (atomic propositions and
/// subformulas rooted at X, N, U, R, F, G). The closure of the source formula,
/// plus the `F true` marker, is registered up front in pre-order; anything
/// else is appended on first use. Keys from the same instance are equal iff
/// the formulas are propositionally equivalent over identical temporal atoms.
class Canonicalizer {
public:
    using Key = bdd::Ref;

    Canonicalizer(const Formula& source, AtomOrder atoms);

    Key key(const Formula& f);
    Key progress(Key k, Letter letter);
    bool empty_accept(Key k) const;
    Formula to_formula(Key k) const;

    const AtomOrder& atoms() const noexcept { return atoms_; }
    std::size_t variable_count() const noexcept { return vars_.size(); }

private:
    std::uint32_t variable(const Formula& temporal_atom);
    Key progress_variable(std::uint32_t var, Letter letter);

    AtomOrder atoms_;
    bdd::Manager mgr_;
    std::vector<Formula> vars_;
    std::vector<bool> var_empty_value_;
    std::unordered_map<std::string, std::uint32_t> var_index_;
    std::map<std::pair<Key, Letter>, Key> progress_cache_;
    std::map<std::pair<std::uint32_t, Letter>, Key> variable_cache_;
};

/// One progression step of `f` against `letter`, returned in canonical form.
Formula progress(const Formula& f, Letter letter, const AtomOrder& atoms);

struct Dfa {
    std::string name;
    AtomOrder atoms;
    std::size_t n_states = 0;
    std::size_t initial = 0;
    std::vector<bool> accepting;
    /// Row-major [state][letter] successor table.
    std::vector<std::size_t> delta;
    /// Optional per-state canonical formula, for debugging only.
    std::vector<std::string> annotations;

    std::size_t alphabet_size() const noexcept { return atoms.alphabet_size(); }
    std::size_t next(std::size_t q, Letter letter) const;
    bool is_accepting(std::size_t q) const { return accepting.at(q); }
    std::size_t accepting_count() const;

    /// Throws ValidationError unless delta is total and all indices are in range.
    void validate() const;
};

struct CompileOptions {
    std::size_t max_states = 10000;
    std::size_t max_atoms = 8;
};

/// Breadth-first progression fixpoint from the canonical form of `f`.
/// The atom order must contain every atom of `f`.
Dfa compile_dfa(const Formula& f, const AtomOrder& atoms, const CompileOptions& options = {});

/// Removes unreachable states and merges equivalent ones (Hopcroft refinement).
/// States of the result are numbered in breadth-first order from the initial state 0.
Dfa minimize_dfa(const Dfa& d);

/// compile_dfa followed by minimize_dfa.
Dfa compile_minimal_dfa(const Formula& f, const AtomOrder& atoms, const CompileOptions& options = {});

/// State reached after reading `w` from the initial state.
std::size_t dfa_run(const Dfa& d, const Word& w);
bool dfa_accepts(const Dfa& d, const Word& w);

} // namespace lpomdp::dfa
