#include "ltlfpomdp/pomdp.hpp"

#include "ltlfpomdp/error.hpp"
#include "ltlfpomdp/rng.hpp"

#include <algorithm>
#include <cmath>

namespace lpomdp::pomdp {

void canonicalize(SparseDist& dist) {
    std::sort(dist.begin(), dist.end(), [](const Outcome& a, const Outcome& b) { return a.index < b.index; });
    SparseDist merged;
    merged.reserve(dist.size());
    for (const auto& o : dist) {
        if (!merged.empty() && merged.back().index == o.index) {
            merged.back().prob += o.prob;
        } else {
            merged.push_back(o);
        }
    }
    merged.erase(std::remove_if(merged.begin(), merged.end(), [](const Outcome& o) { return o.prob == 0.0; }),
                 merged.end());
    dist = std::move(merged);
}

double total_mass(const SparseDist& dist) {
    double s = 0.0;
    for (const auto& o : dist) {
        s += o.prob;
    }
    return s;
}

StoppingModel StoppingModel::fixed(std::size_t horizon) {
    StoppingModel m;
    m.kind = Kind::Fixed;
    m.horizon = horizon;
    m.gamma = 0.0;
    return m;
}

StoppingModel StoppingModel::geometric(double gamma) {
    StoppingModel m;
    m.kind = Kind::Geometric;
    m.gamma = gamma;
    m.validate();
    return m;
}

double StoppingModel::expected_stopping_time() const {
    return is_fixed() ? static_cast<double>(horizon) : gamma / (1.0 - gamma);
}

void StoppingModel::validate() const {
    if (is_geometric() && !(gamma > 0.0 && gamma < 1.0)) {
        throw ValidationError("geometric stopping requires 0 < gamma < 1");
    }
}

double Pomdp::observation_prob(std::size_t s, std::size_t o) const {
    for (const auto& e : observations[s]) {
        if (e.index == o) {
            return e.prob;
        }
    }
    return 0.0;
}

namespace {

void check_row(const SparseDist& row, std::size_t bound, double tolerance, const std::string& what) {
    for (const auto& e : row) {
        if (e.index >= bound) {
            throw ValidationError(what + " refers to index " + std::to_string(e.index) + " out of range");
        }
        if (!(e.prob >= 0.0) || !std::isfinite(e.prob)) {
            throw ValidationError(what + " has a negative or non-finite probability");
        }
    }
    const double mass = total_mass(row);
    if (std::abs(mass - 1.0) > tolerance) {
        throw ValidationError(what + " sums to " + std::to_string(mass) + ", not 1");
    }
}

} // namespace

void Pomdp::validate(double tolerance) const {
    if (n_states == 0 || n_actions == 0 || n_observations == 0) {
        throw ValidationError("model needs at least one state, action and observation");
    }
    if (transitions.size() != n_states * n_actions || rewards.size() != n_states * n_actions) {
        throw ValidationError("transition or reward table does not cover every (state, action)");
    }
    if (observations.size() != n_states) {
        throw ValidationError("observation table does not cover every state");
    }
    for (std::size_t s = 0; s < n_states; ++s) {
        for (std::size_t a = 0; a < n_actions; ++a) {
            check_row(transition(s, a), n_states, tolerance,
                      "transition row (" + std::to_string(s) + ", " + std::to_string(a) + ")");
            if (!std::isfinite(reward(s, a))) {
                throw ValidationError("non-finite reward");
            }
        }
        check_row(observations[s], n_observations, tolerance, "observation row " + std::to_string(s));
    }
    check_row(initial, n_states, tolerance, "initial distribution");
    stopping.validate();
}

void LabeledPomdp::validate(double tolerance) const {
    dynamics.validate(tolerance);
    if (state_names.size() != dynamics.n_states || action_names.size() != dynamics.n_actions ||
        observation_names.size() != dynamics.n_observations) {
        throw ValidationError("name tables do not match model dimensions");
    }
    if (labels.size() != dynamics.n_states) {
        throw ValidationError("labels do not cover every state");
    }
    for (auto l : labels) {
        if (l >= atoms.alphabet_size()) {
            throw ValidationError("label uses atoms outside the declared atom set");
        }
    }
}

bool Belief::is_point_mass(std::size_t state, double tolerance) const {
    for (std::size_t i = 0; i < prob.size(); ++i) {
        const double target = i == state ? 1.0 : 0.0;
        if (std::abs(prob[i] - target) > tolerance) {
            return false;
        }
    }
    return true;
}

namespace {

void normalize_or_throw(std::vector<double>& p, const char* context) {
    double mass = 0.0;
    for (double v : p) {
        mass += v;
    }
    if (!(mass > 0.0)) {
        throw ImpossibleObservation(std::string(context) + ": observation has zero probability under the belief");
    }
    for (double& v : p) {
        v /= mass;
    }
}

} // namespace

Belief belief_init(const Pomdp& m, std::size_t o0) {
    if (o0 >= m.n_observations) {
        throw ValidationError("observation index out of range");
    }
    Belief b{std::vector<double>(m.n_states, 0.0)};
    for (const auto& e : m.initial) {
        b.prob[e.index] = e.prob * m.observation_prob(e.index, o0);
    }
    normalize_or_throw(b.prob, "belief_init");
    return b;
}

Belief belief_update(const Pomdp& m, const Belief& b, std::size_t a, std::size_t o) {
    if (b.size() != m.n_states) {
        throw ValidationError("belief dimension does not match the model");
    }
    if (a >= m.n_actions || o >= m.n_observations) {
        throw ValidationError("action or observation index out of range");
    }
    Belief next{std::vector<double>(m.n_states, 0.0)};
    for (std::size_t s = 0; s < m.n_states; ++s) {
        const double w = b.prob[s];
        if (w == 0.0) {
            continue;
        }
        for (const auto& e : m.transition(s, a)) {
            next.prob[e.index] += w * e.prob;
        }
    }
    for (std::size_t s = 0; s < m.n_states; ++s) {
        if (next.prob[s] != 0.0) {
            next.prob[s] *= m.observation_prob(s, o);
        }
    }
    normalize_or_throw(next.prob, "belief_update");
    return next;
}

double observation_likelihood(const Pomdp& m, const Belief& b, std::size_t a, std::size_t o) {
    double total = 0.0;
    for (std::size_t s = 0; s < m.n_states; ++s) {
        if (b.prob[s] == 0.0) {
            continue;
        }
        for (const auto& e : m.transition(s, a)) {
            total += b.prob[s] * e.prob * m.observation_prob(e.index, o);
        }
    }
    return total;
}

std::vector<double> initial_observation_probs(const Pomdp& m) {
    std::vector<double> p(m.n_observations, 0.0);
    for (const auto& e : m.initial) {
        for (const auto& z : m.observations[e.index]) {
            p[z.index] += e.prob * z.prob;
        }
    }
    return p;
}

double Trajectory::total_reward() const {
    double s = 0.0;
    for (const auto& st : steps) {
        s += st.reward;
    }
    return s;
}

std::size_t sample_index(const SparseDist& dist, double u) {
    double acc = 0.0;
    for (const auto& e : dist) {
        acc += e.prob;
        if (u < acc) {
            return e.index;
        }
    }
    // Rounding: fall back to the last outcome with positive mass.
    return dist.back().index;
}

Trajectory sample_trajectory(const Pomdp& m, const ActionSelector& policy, std::uint64_t seed) {
    CounterRng rng(seed);
    Trajectory traj;
    std::size_t s = sample_index(m.initial, rng.uniform());
    std::size_t o = sample_index(m.observations[s], rng.uniform());
    Belief b = belief_init(m, o);
    for (std::size_t t = 0;; ++t) {
        const std::size_t a = policy(b, t);
        if (a >= m.n_actions) {
            throw ValidationError("policy returned an out-of-range action");
        }
        traj.steps.push_back({s, a, o, m.reward(s, a)});
        const bool stop = m.stopping.is_fixed() ? t >= m.stopping.horizon : rng.bernoulli(1.0 - m.stopping.gamma);
        if (stop) {
            break;
        }
        s = sample_index(m.transition(s, a), rng.uniform());
        o = sample_index(m.observations[s], rng.uniform());
        b = belief_update(m, b, a, o);
    }
    return traj;
}

} // namespace lpomdp::pomdp
