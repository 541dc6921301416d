#pragma once

// Labeled POMDPs with exogenous stopping, Bayes filtering and a seeded
// trajectory simulator.

#include "ltlfpomdp/ltlf.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lpomdp::pomdp {

struct Outcome {
    std::size_t index = 0;
    double prob = 0.0;
    friend bool operator==(const Outcome&, const Outcome&) = default;
};

/// Sparse distribution; canonical form is sorted by index with no zero entries.
using SparseDist = std::vector<Outcome>;

/// Sorts by index, merges duplicates and drops zero entries.
void canonicalize(SparseDist& dist);
double total_mass(const SparseDist& dist);

struct StoppingModel {
    enum class Kind { Fixed, Geometric };

    Kind kind = Kind::Geometric;
    /// Horizon T for Kind::Fixed: actions are taken at t = 0..T.
    std::size_t horizon = 0;
    /// Continue probability for Kind::Geometric; the run stops after step t w.p. 1 - gamma.
    double gamma = 0.99;

    static StoppingModel fixed(std::size_t horizon);
    static StoppingModel geometric(double gamma);

    bool is_fixed() const noexcept { return kind == Kind::Fixed; }
    bool is_geometric() const noexcept { return kind == Kind::Geometric; }
    /// E[T]: T for fixed, gamma / (1 - gamma) for geometric.
    double expected_stopping_time() const;
    void validate() const;

    friend bool operator==(const StoppingModel&, const StoppingModel&) = default;
};

/// Flat POMDP core shared by base and product models.
struct Pomdp {
    std::size_t n_states = 0;
    std::size_t n_actions = 0;
    std::size_t n_observations = 0;
    /// Indexed [s * n_actions + a].
    std::vector<SparseDist> transitions;
    /// Indexed [s].
    std::vector<SparseDist> observations;
    SparseDist initial;
    /// Indexed [s * n_actions + a].
    std::vector<double> rewards;
    StoppingModel stopping;

    const SparseDist& transition(std::size_t s, std::size_t a) const { return transitions[s * n_actions + a]; }
    double reward(std::size_t s, std::size_t a) const { return rewards[s * n_actions + a]; }
    double observation_prob(std::size_t s, std::size_t o) const;

    /// Throws ValidationError if any row is malformed or off by more than `tolerance`.
    void validate(double tolerance = 1e-9) const;

    friend bool operator==(const Pomdp&, const Pomdp&) = default;
};

struct LabeledPomdp {
    std::string name;
    std::vector<std::string> state_names;
    std::vector<std::string> action_names;
    std::vector<std::string> observation_names;
    ltlf::AtomOrder atoms;
    /// Indexed [s].
    std::vector<ltlf::Letter> labels;
    Pomdp dynamics;

    std::size_t n_states() const noexcept { return dynamics.n_states; }
    void validate(double tolerance = 1e-9) const;

    friend bool operator==(const LabeledPomdp&, const LabeledPomdp&) = default;
};

struct Belief {
    std::vector<double> prob;

    std::size_t size() const noexcept { return prob.size(); }
    double operator[](std::size_t i) const { return prob[i]; }
    /// Max |b(x) - 1{x = state}| below `tolerance`.
    bool is_point_mass(std::size_t state, double tolerance = 1e-12) const;
};

/// b0(s) proportional to initial(s) * Z(s; o0).
Belief belief_init(const Pomdp& m, std::size_t o0);

/// b'(s') proportional to Z(s'; o) * sum_s P(s, a; s') b(s).
Belief belief_update(const Pomdp& m, const Belief& b, std::size_t a, std::size_t o);

/// Pr[o | b, a] for the next observation.
double observation_likelihood(const Pomdp& m, const Belief& b, std::size_t a, std::size_t o);

/// Prior probability of each first observation o0.
std::vector<double> initial_observation_probs(const Pomdp& m);

/// Policy interface used by the simulator: action for belief at time t.
using ActionSelector = std::function<std::size_t(const Belief&, std::size_t)>;

struct Step {
    std::size_t state = 0;
    std::size_t action = 0;
    std::size_t observation = 0;
    double reward = 0.0;
    friend bool operator==(const Step&, const Step&) = default;
};

struct Trajectory {
    /// Steps t = 0..T; observation is o_t, seen before acting at t.
    std::vector<Step> steps;
    /// Automaton state Q_{T+1} when the run was simulated on a product.
    std::optional<std::size_t> final_automaton_state;

    std::size_t horizon() const { return steps.empty() ? 0 : steps.size() - 1; }
    double total_reward() const;
    friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

std::size_t sample_index(const SparseDist& dist, double u);

/// Simulates one run. s0 ~ initial, o0 ~ Z(s0); then at each t the action is
/// chosen from the filtered belief, the reward r(s_t, a_t) is collected and
/// the stopping rule is applied before s_{t+1} and o_{t+1} are drawn.
/// Identical (model, policy, seed) give identical trajectories.
Trajectory sample_trajectory(const Pomdp& m, const ActionSelector& policy, std::uint64_t seed);

} // namespace lpomdp::pomdp
