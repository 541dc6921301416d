#include "ltlfpomdp/pbvi.hpp"

#include "ltlfpomdp/error.hpp"
#include "ltlfpomdp/parallel.hpp"
#include "ltlfpomdp/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <unordered_map>

namespace lpomdp::pbvi {

using pomdp::Belief;
using pomdp::Pomdp;

void SolverConfig::validate() const {
    if (n_beliefs < 1) {
        throw ValidationError("solver needs at least one belief point");
    }
    if (!(bellman_tolerance > 0.0)) {
        throw ValidationError("bellman tolerance must be positive");
    }
}

const AlphaSet& AlphaPolicy::stage(std::size_t t) const {
    if (kind == Kind::Stationary) {
        return stages.at(0);
    }
    if (t >= stages.size()) {
        throw ValidationError("time " + std::to_string(t) + " is past the policy horizon");
    }
    return stages[t];
}

namespace {

double dot(const std::vector<double>& alpha, const Belief& b) {
    double v = 0.0;
    for (std::size_t i = 0; i < alpha.size(); ++i) {
        v += alpha[i] * b.prob[i];
    }
    return v;
}

} // namespace

std::size_t best_vector(const AlphaSet& set, const Belief& b) {
    if (set.empty()) {
        throw ValidationError("empty alpha set");
    }
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < set.size(); ++i) {
        if (set[i].values.size() != b.size()) {
            throw ValidationError("belief dimension does not match the policy");
        }
        const double v = dot(set[i].values, b);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    return best;
}

std::size_t policy_action(const AlphaPolicy& p, const Belief& b, std::size_t t) {
    const AlphaSet& set = p.stage(t);
    return set[best_vector(set, b)].action;
}

double policy_value(const AlphaPolicy& p, const Belief& b, std::size_t t) {
    const AlphaSet& set = p.stage(t);
    return dot(set[best_vector(set, b)].values, b);
}

double initial_value(const AlphaPolicy& p, const Pomdp& m) {
    const auto probs = pomdp::initial_observation_probs(m);
    double v = 0.0;
    for (std::size_t o = 0; o < probs.size(); ++o) {
        if (probs[o] > 0.0) {
            v += probs[o] * policy_value(p, pomdp::belief_init(m, o), 0);
        }
    }
    return v;
}

pomdp::ActionSelector as_selector(const AlphaPolicy& p) {
    return [&p](const Belief& b, std::size_t t) { return policy_action(p, b, t); };
}

namespace {

struct SparseBelief {
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
};

SparseBelief sparsify(const Belief& b) {
    SparseBelief s;
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b.prob[i] != 0.0) {
            s.idx.push_back(static_cast<std::uint32_t>(i));
            s.val.push_back(b.prob[i]);
        }
    }
    return s;
}

// Alpha vectors stored row-major for the inner argmax loops.
struct AlphaMatrix {
    std::size_t n = 0;
    std::vector<double> data;
    std::vector<std::size_t> action;

    std::size_t size() const { return action.size(); }
    const double* row(std::size_t i) const { return data.data() + i * n; }
    void push(std::size_t a, const std::vector<double>& values) {
        action.push_back(a);
        data.insert(data.end(), values.begin(), values.end());
    }
    double dot(std::size_t i, const SparseBelief& b) const {
        const double* r = row(i);
        double v = 0.0;
        for (std::size_t k = 0; k < b.idx.size(); ++k) {
            v += r[b.idx[k]] * b.val[k];
        }
        return v;
    }
    // (value, index) of the best vector at b; ties to the lowest index.
    std::pair<double, std::size_t> best(const SparseBelief& b) const {
        double best_value = -std::numeric_limits<double>::infinity();
        std::size_t best_index = 0;
        for (std::size_t i = 0; i < size(); ++i) {
            const double v = dot(i, b);
            if (v > best_value) {
                best_value = v;
                best_index = i;
            }
        }
        return {best_value, best_index};
    }
    AlphaSet to_set() const {
        AlphaSet out;
        out.reserve(size());
        for (std::size_t i = 0; i < size(); ++i) {
            out.push_back({action[i], std::vector<double>(row(i), row(i) + n)});
        }
        return out;
    }
};

struct BackupResult {
    std::size_t action = 0;
    double value = 0.0;
    std::vector<double> alpha;
};

// Point-based Bellman backup at one belief against the vector set `next`.
class BackupEngine {
public:
    BackupEngine(const Pomdp& m, std::span<const double> reward, double discount, const AlphaMatrix& next)
        : m_(m), reward_(reward), discount_(discount), next_(next) {
        // Fallback choice for observations unreachable from the belief being backed up.
        fallback_.assign(m.n_observations, 0);
        std::vector<double> score(m.n_observations * next.size(), 0.0);
        for (std::size_t x = 0; x < m.n_states; ++x) {
            for (const auto& z : m.observations[x]) {
                for (std::size_t i = 0; i < next.size(); ++i) {
                    score[z.index * next.size() + i] += z.prob * next.row(i)[x];
                }
            }
        }
        for (std::size_t o = 0; o < m.n_observations; ++o) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < next.size(); ++i) {
                if (score[o * next.size() + i] > score[o * next.size() + best]) {
                    best = i;
                }
            }
            fallback_[o] = best;
        }
    }

    BackupResult run(const SparseBelief& b) const {
        const std::size_t n = m_.n_states;
        const std::size_t nobs = m_.n_observations;
        std::vector<double> pred(n, 0.0);
        std::vector<std::uint32_t> touched;
        std::vector<std::vector<std::pair<std::uint32_t, double>>> by_obs(nobs);
        std::vector<std::uint32_t> used_obs;
        std::vector<std::size_t> choice(nobs);

        BackupResult best;
        best.value = -std::numeric_limits<double>::infinity();
        std::vector<std::size_t> best_choice;
        for (std::size_t a = 0; a < m_.n_actions; ++a) {
            touched.clear();
            for (std::size_t k = 0; k < b.idx.size(); ++k) {
                for (const auto& e : m_.transition(b.idx[k], a)) {
                    if (pred[e.index] == 0.0) {
                        touched.push_back(static_cast<std::uint32_t>(e.index));
                    }
                    pred[e.index] += b.val[k] * e.prob;
                }
            }
            used_obs.clear();
            for (std::uint32_t x : touched) {
                for (const auto& z : m_.observations[x]) {
                    auto& bucket = by_obs[z.index];
                    if (bucket.empty()) {
                        used_obs.push_back(static_cast<std::uint32_t>(z.index));
                    }
                    bucket.emplace_back(x, z.prob * pred[x]);
                }
            }
            double future = 0.0;
            for (std::size_t o = 0; o < nobs; ++o) {
                choice[o] = fallback_[o];
            }
            for (std::uint32_t o : used_obs) {
                const auto& bucket = by_obs[o];
                double bv = -std::numeric_limits<double>::infinity();
                std::size_t bi = 0;
                for (std::size_t i = 0; i < next_.size(); ++i) {
                    const double* r = next_.row(i);
                    double v = 0.0;
                    for (const auto& [x, w] : bucket) {
                        v += w * r[x];
                    }
                    if (v > bv) {
                        bv = v;
                        bi = i;
                    }
                }
                choice[o] = bi;
                future += bv;
            }
            double immediate = 0.0;
            for (std::size_t k = 0; k < b.idx.size(); ++k) {
                immediate += b.val[k] * reward_[b.idx[k] * m_.n_actions + a];
            }
            const double value = immediate + discount_ * future;
            if (value > best.value) {
                best.value = value;
                best.action = a;
                best_choice = choice;
            }
            for (std::uint32_t x : touched) {
                pred[x] = 0.0;
            }
            for (std::uint32_t o : used_obs) {
                by_obs[o].clear();
            }
        }

        // h(x') = sum_o Z(x'; o) alpha_{choice(o)}(x')
        std::vector<double> h(n, 0.0);
        for (std::size_t x = 0; x < n; ++x) {
            double v = 0.0;
            for (const auto& z : m_.observations[x]) {
                v += z.prob * next_.row(best_choice[z.index])[x];
            }
            h[x] = v;
        }
        best.alpha.assign(n, 0.0);
        for (std::size_t x = 0; x < n; ++x) {
            double v = 0.0;
            for (const auto& e : m_.transition(x, best.action)) {
                v += e.prob * h[e.index];
            }
            best.alpha[x] = reward_[x * m_.n_actions + best.action] + discount_ * v;
        }
        return best;
    }

private:
    const Pomdp& m_;
    std::span<const double> reward_;
    double discount_;
    const AlphaMatrix& next_;
    std::vector<std::size_t> fallback_;
};

double l1_distance(const Belief& a, const Belief& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        d += std::abs(a.prob[i] - b.prob[i]);
    }
    return d;
}

std::vector<Belief> initial_beliefs(const Pomdp& m) {
    std::vector<Belief> out;
    const auto probs = pomdp::initial_observation_probs(m);
    for (std::size_t o = 0; o < probs.size(); ++o) {
        if (probs[o] > 0.0) {
            Belief b = pomdp::belief_init(m, o);
            const bool dup = std::any_of(out.begin(), out.end(), [&](const Belief& c) { return l1_distance(b, c) <= 1e-12; });
            if (!dup) {
                out.push_back(std::move(b));
            }
        }
    }
    return out;
}

// Random-action exploration: from a random member, take a uniformly random
// action and a sampled observation; keep the posterior if it is new enough.
std::vector<Belief> expand_beliefs(const Pomdp& m, const SolverConfig& cfg) {
    std::vector<Belief> set = initial_beliefs(m);
    CounterRng rng(derive_seed(cfg.expansion_seed, 0xBE11EF));
    const std::size_t max_attempts = 20 * cfg.n_beliefs + 200;
    const std::size_t max_consecutive_misses = 4 * cfg.n_beliefs + 100;
    std::size_t misses = 0;
    for (std::size_t attempt = 0; attempt < max_attempts && set.size() < cfg.n_beliefs; ++attempt) {
        const Belief& from = set[rng.below(set.size())];
        const std::size_t a = rng.below(m.n_actions);
        pomdp::SparseDist b_dist;
        for (std::size_t x = 0; x < from.size(); ++x) {
            if (from.prob[x] > 0.0) {
                b_dist.push_back({x, from.prob[x]});
            }
        }
        const std::size_t x = pomdp::sample_index(b_dist, rng.uniform() * pomdp::total_mass(b_dist));
        const std::size_t x2 = pomdp::sample_index(m.transition(x, a), rng.uniform());
        const std::size_t o = pomdp::sample_index(m.observations[x2], rng.uniform());
        Belief next = pomdp::belief_update(m, from, a, o);
        double nearest = std::numeric_limits<double>::infinity();
        for (const auto& c : set) {
            nearest = std::min(nearest, l1_distance(next, c));
            if (nearest <= cfg.expansion_min_distance) {
                break;
            }
        }
        if (nearest > cfg.expansion_min_distance) {
            set.push_back(std::move(next));
            misses = 0;
        } else if (++misses >= max_consecutive_misses) {
            break;
        }
    }
    return set;
}

struct VectorKeyHash {
    std::size_t operator()(const std::vector<double>& v) const noexcept {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (double d : v) {
            std::uint64_t bits;
            std::memcpy(&bits, &d, sizeof bits);
            h = mix64(h ^ bits);
        }
        return static_cast<std::size_t>(h);
    }
};

// Collects distinct (action, vector) pairs in insertion order.
class DistinctVectors {
public:
    explicit DistinctVectors(std::size_t n) { out_.n = n; }
    void add(std::size_t action, const std::vector<double>& values) {
        auto [it, inserted] = seen_.emplace(values, std::vector<std::size_t>{});
        for (std::size_t i : it->second) {
            if (out_.action[i] == action) {
                return;
            }
        }
        it->second.push_back(out_.size());
        out_.push(action, values);
    }
    AlphaMatrix take() { return std::move(out_); }

private:
    AlphaMatrix out_;
    std::unordered_map<std::vector<double>, std::vector<std::size_t>, VectorKeyHash> seen_;
};

} // namespace

AlphaPolicy solve_discounted(const Pomdp& m, std::span<const double> reward, double gamma, const SolverConfig& cfg,
                             const AlphaSet* seed_vectors) {
    cfg.validate();
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ValidationError("discount must lie in (0, 1)");
    }
    if (reward.size() != m.n_states * m.n_actions) {
        throw ValidationError("reward vector does not match the model");
    }
    for (double r : reward) {
        if (!std::isfinite(r)) {
            throw ValidationError("reward must be finite");
        }
    }

    const std::vector<Belief> beliefs = expand_beliefs(m, cfg);
    std::vector<SparseBelief> points;
    points.reserve(beliefs.size());
    for (const auto& b : beliefs) {
        points.push_back(sparsify(b));
    }

    AlphaMatrix gamma_set;
    gamma_set.n = m.n_states;
    if (seed_vectors && !seed_vectors->empty()) {
        for (const auto& v : *seed_vectors) {
            if (v.values.size() != m.n_states) {
                throw ValidationError("seed vector dimension does not match the model");
            }
            gamma_set.push(v.action, v.values);
        }
    } else {
        const double floor =
            cfg.value_floor.value_or(*std::min_element(reward.begin(), reward.end()) / (1.0 - gamma));
        gamma_set.push(0, std::vector<double>(m.n_states, floor));
    }

    std::vector<double> values(points.size());
    std::vector<std::size_t> holder(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        std::tie(values[i], holder[i]) = gamma_set.best(points[i]);
    }

    AlphaPolicy policy;
    policy.kind = AlphaPolicy::Kind::Stationary;
    policy.discount = gamma;
    policy.n_states = m.n_states;
    policy.belief_count = points.size();
    policy.converged = false;

    std::vector<BackupResult> results(points.size());
    for (std::size_t round = 0; round < cfg.max_backup_rounds; ++round) {
        const BackupEngine engine(m, reward, gamma, gamma_set);
        parallel_for(points.size(), cfg.threads, [&](std::size_t i) { results[i] = engine.run(points[i]); });

        DistinctVectors next(m.n_states);
        for (std::size_t i = 0; i < points.size(); ++i) {
            // Never let a point lose value: keep its previous vector if the backup is worse.
            if (results[i].value >= values[i]) {
                next.add(results[i].action, results[i].alpha);
            } else {
                next.add(gamma_set.action[holder[i]],
                         std::vector<double>(gamma_set.row(holder[i]), gamma_set.row(holder[i]) + m.n_states));
            }
        }
        gamma_set = next.take();

        double change = 0.0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto [v, idx] = gamma_set.best(points[i]);
            change = std::max(change, std::abs(v - values[i]));
            values[i] = v;
            holder[i] = idx;
        }
        policy.rounds = round + 1;
        if (change < cfg.bellman_tolerance) {
            policy.converged = true;
            break;
        }
    }
    policy.stages.push_back(gamma_set.to_set());
    return policy;
}

AlphaPolicy solve_finite_horizon(const Pomdp& m, std::span<const double> reward, std::span<const double> terminal,
                                 std::size_t horizon, const SolverConfig& cfg) {
    cfg.validate();
    if (reward.size() != m.n_states * m.n_actions || terminal.size() != m.n_states) {
        throw ValidationError("reward or terminal vector does not match the model");
    }

    // Forward belief sets per stage: every reachable posterior while under the cap.
    std::vector<std::vector<Belief>> stage_beliefs(horizon + 1);
    stage_beliefs[0] = initial_beliefs(m);
    CounterRng rng(derive_seed(cfg.expansion_seed, 0xF1417E));
    for (std::size_t t = 0; t < horizon; ++t) {
        std::vector<Belief> next;
        for (const auto& b : stage_beliefs[t]) {
            for (std::size_t a = 0; a < m.n_actions; ++a) {
                for (std::size_t o = 0; o < m.n_observations; ++o) {
                    if (pomdp::observation_likelihood(m, b, a, o) <= 0.0) {
                        continue;
                    }
                    Belief nb = pomdp::belief_update(m, b, a, o);
                    const bool dup = std::any_of(next.begin(), next.end(),
                                                 [&](const Belief& c) { return l1_distance(nb, c) <= 1e-12; });
                    if (!dup) {
                        next.push_back(std::move(nb));
                    }
                }
            }
        }
        // Over the cap: keep a seeded random subset.
        while (next.size() > cfg.n_beliefs) {
            const std::size_t drop = rng.below(next.size());
            next.erase(next.begin() + static_cast<std::ptrdiff_t>(drop));
        }
        stage_beliefs[t + 1] = std::move(next);
    }

    AlphaPolicy policy;
    policy.kind = AlphaPolicy::Kind::TimeIndexed;
    policy.horizon = horizon;
    policy.n_states = m.n_states;
    policy.stages.resize(horizon + 1);
    policy.rounds = horizon + 1;
    policy.converged = true;

    AlphaMatrix after;
    after.n = m.n_states;
    after.push(0, std::vector<double>(terminal.begin(), terminal.end()));
    for (std::size_t t = horizon + 1; t-- > 0;) {
        const auto& bs = stage_beliefs[t];
        std::vector<SparseBelief> points;
        for (const auto& b : bs) {
            points.push_back(sparsify(b));
        }
        policy.belief_count += points.size();
        std::vector<BackupResult> results(points.size());
        const BackupEngine engine(m, reward, 1.0, after);
        parallel_for(points.size(), cfg.threads, [&](std::size_t i) { results[i] = engine.run(points[i]); });
        DistinctVectors distinct(m.n_states);
        for (const auto& r : results) {
            distinct.add(r.action, r.alpha);
        }
        after = distinct.take();
        policy.stages[t] = after.to_set();
    }
    return policy;
}

namespace {

// Plain dense recursion, kept separate from the solver's backup code.
class HistoryTreeOracle {
public:
    HistoryTreeOracle(const Pomdp& m, std::span<const double> reward, std::span<const double> terminal,
                      std::size_t horizon, std::size_t max_nodes)
        : m_(m), reward_(reward), terminal_(terminal), horizon_(horizon), budget_(max_nodes) {}

    double value_before_first_observation() {
        const std::size_t n = m_.n_states;
        std::vector<double> prior(n, 0.0);
        for (const auto& e : m_.initial) {
            prior[e.index] += e.prob;
        }
        double total = 0.0;
        for (std::size_t o = 0; o < m_.n_observations; ++o) {
            std::vector<double> joint(n);
            double mass = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                joint[x] = prior[x] * m_.observation_prob(x, o);
                mass += joint[x];
            }
            if (mass <= 0.0) {
                continue;
            }
            for (double& v : joint) {
                v /= mass;
            }
            total += mass * value(joint, 0);
        }
        return total;
    }

private:
    double value(const std::vector<double>& b, std::size_t t) {
        if (++nodes_ > budget_) {
            throw BudgetError("history tree exceeds the oracle budget");
        }
        const std::size_t n = m_.n_states;
        if (t > horizon_) {
            double v = 0.0;
            for (std::size_t x = 0; x < n; ++x) {
                v += b[x] * terminal_[x];
            }
            return v;
        }
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < m_.n_actions; ++a) {
            double q = 0.0;
            std::vector<double> pred(n, 0.0);
            for (std::size_t x = 0; x < n; ++x) {
                q += b[x] * reward_[x * m_.n_actions + a];
                for (const auto& e : m_.transition(x, a)) {
                    pred[e.index] += b[x] * e.prob;
                }
            }
            for (std::size_t o = 0; o < m_.n_observations; ++o) {
                std::vector<double> post(n);
                double mass = 0.0;
                for (std::size_t x = 0; x < n; ++x) {
                    post[x] = pred[x] * m_.observation_prob(x, o);
                    mass += post[x];
                }
                if (mass <= 0.0) {
                    continue;
                }
                for (double& v : post) {
                    v /= mass;
                }
                q += mass * value(post, t + 1);
            }
            best = std::max(best, q);
        }
        return best;
    }

    const Pomdp& m_;
    std::span<const double> reward_;
    std::span<const double> terminal_;
    std::size_t horizon_;
    std::size_t budget_;
    std::size_t nodes_ = 0;
};

} // namespace

double exact_value_oracle(const Pomdp& m, std::span<const double> reward, std::span<const double> terminal,
                          std::size_t horizon, std::size_t max_nodes) {
    if (reward.size() != m.n_states * m.n_actions || terminal.size() != m.n_states) {
        throw ValidationError("reward or terminal vector does not match the model");
    }
    // Size guard: (|A| |O|)^(T+1) leaves at most.
    double leaves = 1.0;
    for (std::size_t t = 0; t <= horizon; ++t) {
        leaves *= static_cast<double>(m.n_actions * m.n_observations);
    }
    if (leaves * static_cast<double>(m.n_observations) > static_cast<double>(max_nodes)) {
        throw BudgetError("instance too large for the exhaustive oracle");
    }
    HistoryTreeOracle oracle(m, reward, terminal, horizon, max_nodes);
    return oracle.value_before_first_observation();
}

} // namespace lpomdp::pbvi
