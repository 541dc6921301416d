#pragma once

// Point-based value iteration over alpha vectors, for the discounted
// (geometric stopping) and fixed-horizon cases, plus an exhaustive
// history-tree oracle for tiny instances.

#include "ltlfpomdp/pomdp.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace lpomdp::pbvi {

struct AlphaVector {
    std::size_t action = 0;
    std::vector<double> values;
    friend bool operator==(const AlphaVector&, const AlphaVector&) = default;
};

using AlphaSet = std::vector<AlphaVector>;

struct AlphaPolicy {
    enum class Kind { Stationary, TimeIndexed };

    Kind kind = Kind::Stationary;
    /// Discount factor of a stationary policy.
    double discount = 0.0;
    /// Last decision stage T of a time-indexed policy; stages.size() == T + 1.
    std::size_t horizon = 0;
    std::size_t n_states = 0;
    /// One set for a stationary policy, one per stage t = 0..T otherwise.
    std::vector<AlphaSet> stages;

    /// Solver diagnostics.
    bool converged = true;
    std::size_t rounds = 0;
    std::size_t belief_count = 0;

    const AlphaSet& stage(std::size_t t) const;
    friend bool operator==(const AlphaPolicy&, const AlphaPolicy&) = default;
};

struct SolverConfig {
    std::size_t n_beliefs = 400;
    std::size_t max_backup_rounds = 2000;
    double bellman_tolerance = 1e-6;
    std::uint64_t expansion_seed = 1;
    /// A sampled belief joins the set only if its L1 distance to every member exceeds this.
    double expansion_min_distance = 1e-3;
    /// Lower bound used to initialize values; defaults to min reward / (1 - gamma).
    std::optional<double> value_floor;
    std::size_t threads = 1;

    void validate() const;
};

/// Index of the maximizing vector in `set` at belief b; ties go to the lowest index.
std::size_t best_vector(const AlphaSet& set, const pomdp::Belief& b);

std::size_t policy_action(const AlphaPolicy& p, const pomdp::Belief& b, std::size_t t = 0);
double policy_value(const AlphaPolicy& p, const pomdp::Belief& b, std::size_t t = 0);

/// Value before the first observation: sum over o0 of Pr[o0] * V(b0(o0), 0).
double initial_value(const AlphaPolicy& p, const pomdp::Pomdp& m);

/// Selector view of a policy; `p` must outlive the returned function.
pomdp::ActionSelector as_selector(const AlphaPolicy& p);

/// Discounted infinite-horizon solve of reward[x * |A| + a] with discount gamma.
/// `seed_vectors`, when given, replace the uniform floor as the initial lower
/// bound; each must be a valid lower bound on some policy's value.
AlphaPolicy solve_discounted(const pomdp::Pomdp& m, std::span<const double> reward, double gamma,
                             const SolverConfig& cfg, const AlphaSet* seed_vectors = nullptr);

/// Backward induction for decisions at t = 0..T with terminal values on X_{T+1}.
AlphaPolicy solve_finite_horizon(const pomdp::Pomdp& m, std::span<const double> reward,
                                 std::span<const double> terminal, std::size_t horizon, const SolverConfig& cfg);

/// Exact optimal expected total reward (same convention as initial_value) by
/// full recursion over action/observation histories. Throws BudgetError when
/// the history tree would exceed `max_nodes`.
double exact_value_oracle(const pomdp::Pomdp& m, std::span<const double> reward, std::span<const double> terminal,
                          std::size_t horizon, std::size_t max_nodes = 2'000'000);

} // namespace lpomdp::pbvi
