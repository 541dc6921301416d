#include "ltlfpomdp/product.hpp"

#include "ltlfpomdp/error.hpp"

#include <algorithm>

namespace lpomdp::product {

ProductPomdp::ProductPomdp(pomdp::LabeledPomdp base, dfa::Dfa automaton, bool prune_unreachable)
    : base_(std::move(base)), dfa_(std::move(automaton)), pruned_(prune_unreachable) {
    if (!(base_.atoms == dfa_.atoms)) {
        throw ValidationError("model atoms and automaton atoms differ");
    }
    base_.validate(1e-6);
    dfa_.validate();

    const pomdp::Pomdp& m = base_.dynamics;
    const std::size_t nq = dfa_.n_states;
    const std::size_t dense = m.n_states * nq;
    auto dense_index = [nq](std::size_t s, std::size_t q) { return s * nq + q; };

    std::vector<char> keep(dense, 1);
    if (prune_unreachable) {
        std::fill(keep.begin(), keep.end(), 0);
        std::vector<std::size_t> stack;
        for (const auto& e : m.initial) {
            const std::size_t x = dense_index(e.index, dfa_.initial);
            if (!keep[x]) {
                keep[x] = 1;
                stack.push_back(x);
            }
        }
        while (!stack.empty()) {
            const std::size_t x = stack.back();
            stack.pop_back();
            const std::size_t s = x / nq;
            const std::size_t q2 = dfa_.next(x % nq, base_.labels[s]);
            for (std::size_t a = 0; a < m.n_actions; ++a) {
                for (const auto& e : m.transition(s, a)) {
                    const std::size_t y = dense_index(e.index, q2);
                    if (!keep[y]) {
                        keep[y] = 1;
                        stack.push_back(y);
                    }
                }
            }
        }
    }

    index_.assign(dense, kNoState);
    for (std::size_t x = 0; x < dense; ++x) {
        if (keep[x]) {
            index_[x] = base_state_.size();
            base_state_.push_back(x / nq);
            automaton_state_.push_back(x % nq);
        }
    }

    const std::size_t n = base_state_.size();
    core_.n_states = n;
    core_.n_actions = m.n_actions;
    core_.n_observations = m.n_observations;
    core_.stopping = m.stopping;
    core_.transitions.resize(n * m.n_actions);
    core_.rewards.resize(n * m.n_actions);
    core_.observations.resize(n);
    final_reward_.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
        const std::size_t s = base_state_[x];
        const std::size_t q = automaton_state_[x];
        const std::size_t q2 = dfa_.next(q, base_.labels[s]);
        for (std::size_t a = 0; a < m.n_actions; ++a) {
            pomdp::SparseDist row;
            for (const auto& e : m.transition(s, a)) {
                row.push_back({index_[dense_index(e.index, q2)], e.prob});
            }
            pomdp::canonicalize(row);
            core_.transitions[x * m.n_actions + a] = std::move(row);
            core_.rewards[x * m.n_actions + a] = m.reward(s, a);
        }
        core_.observations[x] = m.observations[s];
        final_reward_[x] = dfa_.is_accepting(q) ? 1.0 : 0.0;
    }
    for (const auto& e : m.initial) {
        core_.initial.push_back({index_[dense_index(e.index, dfa_.initial)], e.prob});
    }
    pomdp::canonicalize(core_.initial);
    core_.validate(1e-6);
}

std::size_t ProductPomdp::index(std::size_t s, std::size_t q) const {
    if (s >= base_.n_states() || q >= dfa_.n_states) {
        throw ValidationError("product coordinates out of range");
    }
    return index_[s * dfa_.n_states + q];
}

ProductPomdp build_product(const pomdp::LabeledPomdp& m, const dfa::Dfa& d, bool prune_unreachable) {
    return ProductPomdp(m, d, prune_unreachable);
}

std::size_t automaton_state_after(const ProductPomdp& prod, const std::vector<std::size_t>& base_states) {
    const auto& d = prod.automaton();
    std::size_t q = d.initial;
    for (std::size_t s : base_states) {
        q = d.next(q, prod.base().labels.at(s));
    }
    return q;
}

std::size_t automaton_state_after(const ProductPomdp& prod, const pomdp::Trajectory& base_run) {
    std::vector<std::size_t> states;
    states.reserve(base_run.steps.size());
    for (const auto& st : base_run.steps) {
        states.push_back(st.state);
    }
    return automaton_state_after(prod, states);
}

pomdp::Trajectory ProductRun::base_run(const ProductPomdp& prod) const {
    pomdp::Trajectory run;
    run.steps.reserve(trajectory.steps.size());
    for (const auto& st : trajectory.steps) {
        run.steps.push_back({prod.base_state(st.state), st.action, st.observation, prod.base().dynamics.reward(
                                                                                       prod.base_state(st.state), st.action)});
    }
    return run;
}

ltlf::Word ProductRun::label_word(const ProductPomdp& prod) const {
    ltlf::Word w;
    w.reserve(trajectory.steps.size());
    for (const auto& st : trajectory.steps) {
        w.push_back(prod.base().labels[prod.base_state(st.state)]);
    }
    return w;
}

ProductRun simulate(const ProductPomdp& prod, const pomdp::ActionSelector& policy, std::uint64_t seed) {
    ProductRun run;
    run.trajectory = pomdp::sample_trajectory(prod.core(), policy, seed);
    const auto& last = run.trajectory.steps.back();
    const std::size_t s = prod.base_state(last.state);
    const std::size_t q_final = prod.automaton().next(prod.automaton_state(last.state), prod.base().labels[s]);
    run.trajectory.final_automaton_state = q_final;
    run.accepted = prod.automaton().is_accepting(q_final);
    return run;
}

} // namespace lpomdp::product
