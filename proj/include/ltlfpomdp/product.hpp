#pragma once

// Constrained product of a labeled POMDP with a DFA. Product state x pairs a
// model state s with an automaton state q; the automaton reads L(s) on the
// transition out of x, so after a run s_0..s_T it has consumed L(s_0)..L(s_T).

#include "ltlfpomdp/dfa.hpp"
#include "ltlfpomdp/pomdp.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace lpomdp::product {

inline constexpr std::size_t kNoState = std::numeric_limits<std::size_t>::max();

class ProductPomdp {
public:
    ProductPomdp() = default;

    /// Dense product with x = s * |Q| + q; with `prune_unreachable`, only
    /// states reachable from the initial support are kept (indices compacted,
    /// relative order preserved).
    ProductPomdp(pomdp::LabeledPomdp base, dfa::Dfa automaton, bool prune_unreachable = false);

    const pomdp::Pomdp& core() const noexcept { return core_; }
    const pomdp::LabeledPomdp& base() const noexcept { return base_; }
    const dfa::Dfa& automaton() const noexcept { return dfa_; }

    std::size_t n_states() const noexcept { return core_.n_states; }
    /// r^f(x): 1 if the automaton component of x is accepting.
    const std::vector<double>& final_reward() const noexcept { return final_reward_; }
    std::size_t base_state(std::size_t x) const { return base_state_[x]; }
    std::size_t automaton_state(std::size_t x) const { return automaton_state_[x]; }
    /// Product index of (s, q), or kNoState if pruned.
    std::size_t index(std::size_t s, std::size_t q) const;
    bool pruned() const noexcept { return pruned_; }

    /// Whether the automaton starts in an accepting state (contributes the
    /// policy-independent r^f(X_0) term of the discounted reformulation).
    bool initial_accepting() const { return dfa_.is_accepting(dfa_.initial); }

private:
    pomdp::LabeledPomdp base_;
    dfa::Dfa dfa_;
    pomdp::Pomdp core_;
    std::vector<double> final_reward_;
    std::vector<std::size_t> base_state_;
    std::vector<std::size_t> automaton_state_;
    std::vector<std::size_t> index_;
    bool pruned_ = false;
};

/// Throws ValidationError when the atom orderings differ.
ProductPomdp build_product(const pomdp::LabeledPomdp& m, const dfa::Dfa& d, bool prune_unreachable = false);

/// Q_{T+1} for a run given by base-model states s_0..s_T.
std::size_t automaton_state_after(const ProductPomdp& prod, const std::vector<std::size_t>& base_states);
/// Same, for a trajectory over base-model states.
std::size_t automaton_state_after(const ProductPomdp& prod, const pomdp::Trajectory& base_run);

struct ProductRun {
    /// Steps over product states.
    pomdp::Trajectory trajectory;
    /// Accepting status of Q_{T+1}.
    bool accepted = false;

    /// The embedded base-model run (s_t, a_t, o_t, r_t).
    pomdp::Trajectory base_run(const ProductPomdp& prod) const;
    /// L(s_0) .. L(s_T).
    ltlf::Word label_word(const ProductPomdp& prod) const;
};

/// Simulates the product POMDP with beliefs over product states, and records
/// Q_{T+1} = delta(Q_T, L(S_T)).
ProductRun simulate(const ProductPomdp& prod, const pomdp::ActionSelector& policy, std::uint64_t seed);

} // namespace lpomdp::product
