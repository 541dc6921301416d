#include "ltlfpomdp/planner.hpp"

#include "ltlfpomdp/error.hpp"
#include "ltlfpomdp/parallel.hpp"
#include "ltlfpomdp/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

namespace lpomdp::planner {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

constexpr std::uint64_t kMixtureStream = 0x4D49585552455321ULL;

} // namespace

void MixedPolicy::validate() const {
    if (support.empty() || support.size() != weights.size()) {
        throw ValidationError("mixed policy needs one weight per support policy");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) {
            throw ValidationError("mixture weights must be nonnegative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("mixture weights must sum to 1");
    }
    for (const auto& p : support) {
        if (!p) {
            throw ValidationError("mixed policy has an empty support entry");
        }
    }
}

std::size_t MixedPolicy::pick(double u) const {
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) {
            continue;
        }
        last = i;
        acc += weights[i];
        if (u < acc) {
            return i;
        }
    }
    return last;
}

double auto_eta(std::size_t K, double B) {
    return std::sqrt(std::log(2.0) / (2.0 * static_cast<double>(K) * B * B));
}

double regret_bound(double B, std::size_t K) {
    return 2.0 * B * std::sqrt(2.0 * std::log(2.0) / static_cast<double>(K));
}

double default_bfs_slack(std::size_t K) { return 2.0 * std::sqrt(2.0 * std::log(2.0) / static_cast<double>(K)); }

double ConstrainedProblem::effective_eta() const { return eta.value_or(auto_eta(K, B)); }

double ConstrainedProblem::effective_slack() const { return bfs_slack.value_or(default_bfs_slack(K)); }

void ConstrainedProblem::validate() const {
    if (!(threshold >= 0.0 && threshold <= 1.0)) {
        throw ValidationError("threshold must lie in [0, 1]");
    }
    if (!(B > 0.0) || !std::isfinite(B)) {
        throw ValidationError("B must be positive");
    }
    if (K < 1) {
        throw ValidationError("K must be at least 1");
    }
    if (eta && !(*eta > 0.0 && std::isfinite(*eta))) {
        throw ValidationError("eta must be positive");
    }
    if (simu < 1 || final_rollouts < 1) {
        throw ValidationError("rollout counts must be at least 1");
    }
    if (!(reward_scale > 0.0) || !std::isfinite(reward_scale)) {
        throw ValidationError("reward scale must be positive");
    }
    if (bfs_slack && !(*bfs_slack >= 0.0)) {
        throw ValidationError("BFS slack must be nonnegative");
    }
}

Scalarized scalarize(const product::ProductPomdp& prod, double lambda, double threshold, double reward_scale) {
    const pomdp::Pomdp& m = prod.core();
    const auto& rf = prod.final_reward();
    Scalarized out;
    out.reward.resize(m.n_states * m.n_actions);
    if (m.stopping.is_geometric()) {
        const double gamma = m.stopping.gamma;
        out.bonus = lambda * (1.0 - gamma) / gamma;
        for (std::size_t x = 0; x < m.n_states; ++x) {
            for (std::size_t a = 0; a < m.n_actions; ++a) {
                out.reward[x * m.n_actions + a] = reward_scale * m.reward(x, a) + out.bonus * rf[x];
            }
        }
        out.offset = -out.bonus * (prod.initial_accepting() ? 1.0 : 0.0) - lambda * threshold;
    } else {
        out.bonus = lambda;
        for (std::size_t i = 0; i < out.reward.size(); ++i) {
            out.reward[i] = reward_scale * m.rewards[i];
        }
        out.terminal.resize(m.n_states);
        for (std::size_t x = 0; x < m.n_states; ++x) {
            out.terminal[x] = lambda * rf[x];
        }
        out.offset = -lambda * threshold;
    }
    return out;
}

double eg_update_lambda(double lambda, double p_hat, double eta, double B, double threshold) {
    if (!(lambda > 0.0 && lambda < B)) {
        throw ValidationError("multiplier must lie strictly between 0 and B");
    }
    const double x = eta * (p_hat - threshold);
    double next;
    const double ratio = lambda / B;
    if (x >= 0.0) {
        next = lambda * std::exp(-x) / (1.0 + ratio * std::expm1(-x));
    } else {
        next = lambda / (std::exp(x) - ratio * std::expm1(x));
    }
    // Rounding can land exactly on an endpoint for extreme exponents.
    const double lo = std::nextafter(0.0, 1.0);
    const double hi = std::nextafter(B, 0.0);
    return std::clamp(next, lo, hi);
}

namespace {

McEstimate summarize(const std::vector<double>& r, const std::vector<double>& f) {
    McEstimate e;
    e.n = r.size();
    const double n = static_cast<double>(e.n);
    e.r_hat = std::accumulate(r.begin(), r.end(), 0.0) / n;
    e.p_hat = std::accumulate(f.begin(), f.end(), 0.0) / n;
    if (e.n > 1) {
        double vr = 0.0;
        double vp = 0.0;
        for (std::size_t i = 0; i < e.n; ++i) {
            vr += (r[i] - e.r_hat) * (r[i] - e.r_hat);
            vp += (f[i] - e.p_hat) * (f[i] - e.p_hat);
        }
        e.r_se = std::sqrt(vr / (n - 1.0) / n);
        e.p_se = std::sqrt(vp / (n - 1.0) / n);
    }
    return e;
}

template <class Choose>
McEstimate run_rollouts(const product::ProductPomdp& prod, std::size_t n, std::uint64_t seed, double reward_scale,
                        std::size_t threads, Choose&& choose) {
    if (n < 1) {
        throw ValidationError("need at least one rollout");
    }
    std::vector<double> r(n);
    std::vector<double> f(n);
    parallel_for(n, threads, [&](std::size_t i) {
        const pbvi::AlphaPolicy& p = choose(i);
        const auto run = product::simulate(prod, pbvi::as_selector(p), derive_seed(seed, i));
        r[i] = reward_scale * run.trajectory.total_reward();
        f[i] = run.accepted ? 1.0 : 0.0;
    });
    return summarize(r, f);
}

void check_policy(const product::ProductPomdp& prod, const pbvi::AlphaPolicy& p) {
    if (p.n_states != prod.n_states()) {
        throw ValidationError("policy was computed for a different product state space");
    }
}

} // namespace

McEstimate mc_evaluate(const product::ProductPomdp& prod, const pbvi::AlphaPolicy& policy, std::size_t n,
                       std::uint64_t seed, double reward_scale, std::size_t threads) {
    check_policy(prod, policy);
    return run_rollouts(prod, n, seed, reward_scale, threads,
                        [&](std::size_t) -> const pbvi::AlphaPolicy& { return policy; });
}

McEstimate mc_evaluate(const product::ProductPomdp& prod, const MixedPolicy& policy, std::size_t n,
                       std::uint64_t seed, double reward_scale, std::size_t threads) {
    policy.validate();
    for (const auto& p : policy.support) {
        check_policy(prod, *p);
    }
    const std::uint64_t pick_seed = derive_seed(seed, kMixtureStream);
    return run_rollouts(prod, n, seed, reward_scale, threads, [&](std::size_t i) -> const pbvi::AlphaPolicy& {
        CounterRng rng(derive_seed(pick_seed, i));
        return *policy.support[policy.pick(rng.uniform())];
    });
}

std::vector<std::size_t> BfsResult::support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] > 0.0) {
            s.push_back(i);
        }
    }
    return s;
}

BfsResult reduce_support_bfs(std::span<const double> r, std::span<const double> p, double threshold, double slack) {
    if (r.size() != p.size() || r.empty()) {
        throw ValidationError("BFS reduction needs matching, nonempty candidate lists");
    }
    if (!(slack >= 0.0)) {
        throw ValidationError("BFS slack must be nonnegative");
    }
    const std::size_t K = r.size();
    const double c = threshold - slack;
    constexpr double kTol = 1e-12;

    BfsResult best;
    double best_mass = -1.0;
    std::size_t best_support = 3;
    auto consider = [&](std::vector<std::pair<std::size_t, double>> entries) {
        double obj = 0.0;
        double con = 0.0;
        double mass = 0.0;
        std::size_t support = 0;
        for (const auto& [k, w] : entries) {
            if (w < -kTol || w > 1.0 + kTol) {
                return;
            }
            obj += w * r[k];
            con += w * p[k];
            mass += w;
            support += w > 0.0 ? 1 : 0;
        }
        if (mass > 1.0 + kTol || con < c - kTol) {
            return;
        }
        // Prefer higher objective, then more mass, then smaller support; earlier candidates win ties.
        const bool better = !best.feasible || obj > best.objective + kTol ||
                            (obj >= best.objective - kTol &&
                             (mass > best_mass + kTol || (mass >= best_mass - kTol && support < best_support)));
        if (!better) {
            return;
        }
        best.feasible = true;
        best.objective = obj;
        best.constraint = con;
        best_mass = mass;
        best_support = support;
        best.weights.assign(K, 0.0);
        for (const auto& [k, w] : entries) {
            best.weights[k] += std::clamp(w, 0.0, 1.0);
        }
    };

    consider({});
    for (std::size_t k = 0; k < K; ++k) {
        consider({{k, 1.0}});
        if (p[k] > 0.0 && c > 0.0 && c / p[k] <= 1.0) {
            consider({{k, c / p[k]}});
        }
    }
    for (std::size_t j = 0; j < K; ++j) {
        for (std::size_t k = j + 1; k < K; ++k) {
            if (p[j] == p[k]) {
                continue;
            }
            const double wj = (c - p[k]) / (p[j] - p[k]);
            if (wj > 0.0 && wj < 1.0) {
                consider({{j, wj}, {k, 1.0 - wj}});
            }
        }
    }
    if (!best.feasible) {
        best.weights.assign(K, 0.0);
    }
    return best;
}

MixedPolicy EGResult::reduced_mixture() const {
    const BfsResult& bfs = diagnostics.bfs;
    double mass = 0.0;
    for (double w : bfs.weights) {
        mass += w;
    }
    if (!bfs.feasible || mass <= 0.0) {
        return mixture;
    }
    MixedPolicy out;
    for (std::size_t k : bfs.support()) {
        out.support.push_back(policies[k]);
        out.weights.push_back(bfs.weights[k] / mass);
    }
    // Make the weights sum to 1 exactly.
    double rest = 1.0;
    for (std::size_t i = 0; i + 1 < out.weights.size(); ++i) {
        rest -= out.weights[i];
    }
    out.weights.back() = rest;
    return out;
}

namespace {

// Each vector of a solve is a lower bound on some policy's value under its
// reward; raising the bonus by d changes that value by at least min(0, d)/(1-gamma).
pbvi::AlphaSet shifted_seed(const pbvi::AlphaSet& previous, double bonus_change, double gamma) {
    const double shift = std::min(0.0, bonus_change) / (1.0 - gamma);
    pbvi::AlphaSet out = previous;
    for (auto& a : out) {
        for (double& v : a.values) {
            v += shift;
        }
    }
    return out;
}

} // namespace

EGResult eg_solve(const product::ProductPomdp& prod, const ConstrainedProblem& problem, const pbvi::SolverConfig& cfg,
                  const IterationCallback& on_iteration) {
    problem.validate();
    cfg.validate();
    const auto t_start = Clock::now();
    const pomdp::Pomdp& m = prod.core();
    const bool geometric = m.stopping.is_geometric();
    const double eta = problem.effective_eta();

    pbvi::SolverConfig inner = cfg;
    inner.threads = std::max(cfg.threads, problem.threads);

    auto solve = [&](const Scalarized& sc, const pbvi::AlphaSet* seed) {
        if (geometric) {
            return pbvi::solve_discounted(m, sc.reward, m.stopping.gamma, inner, seed);
        }
        return pbvi::solve_finite_horizon(m, sc.reward, sc.terminal, m.stopping.horizon, inner);
    };

    EGResult result;
    double lambda = problem.B / 2.0;
    double previous_bonus = 0.0;
    const pbvi::AlphaSet* previous_set = nullptr;
    pbvi::AlphaSet seed_storage;
    double lambda_sum = 0.0;

    for (std::size_t k = 1; k <= problem.K; ++k) {
        IterationRecord rec;
        rec.k = k;
        rec.lambda = lambda;
        const Scalarized sc = scalarize(prod, lambda, problem.threshold, problem.reward_scale);

        auto t0 = Clock::now();
        if (geometric && previous_set) {
            seed_storage = shifted_seed(*previous_set, sc.bonus - previous_bonus, m.stopping.gamma);
        }
        auto policy = std::make_shared<const pbvi::AlphaPolicy>(
            solve(sc, geometric && previous_set ? &seed_storage : nullptr));
        rec.t_solve_s = seconds_since(t0);
        rec.converged = policy->converged;
        rec.rounds = policy->rounds;
        rec.alpha_count = policy->stages.front().size();

        t0 = Clock::now();
        rec.estimate =
            mc_evaluate(prod, *policy, problem.simu, derive_seed(problem.seed, k), problem.reward_scale, problem.threads);
        rec.t_simu_s = seconds_since(t0);

        result.t_solve_s += rec.t_solve_s;
        result.t_simu_s += rec.t_simu_s;
        lambda_sum += lambda;
        result.policies.push_back(policy);
        result.iterations.push_back(rec);
        previous_set = &policy->stages.front();
        previous_bonus = sc.bonus;
        if (on_iteration) {
            on_iteration(rec);
        }

        lambda = eg_update_lambda(lambda, rec.estimate.p_hat, eta, problem.B, problem.threshold);
        if (!(lambda > 0.0 && lambda < problem.B)) {
            throw Error("multiplier left (0, B)");
        }
    }

    const double K = static_cast<double>(problem.K);
    result.lambda_bar = lambda_sum / K;
    result.mixture.support = result.policies;
    result.mixture.weights.assign(problem.K, 1.0 / K);

    Diagnostics& d = result.diagnostics;
    d.regret_bound = regret_bound(problem.B, problem.K);
    d.eta = eta;
    d.slack = problem.effective_slack();

    auto t0 = Clock::now();
    {
        const Scalarized sc0 = scalarize(prod, 0.0, problem.threshold, problem.reward_scale);
        const pbvi::AlphaPolicy p0 = solve(sc0, nullptr);
        d.r_m_estimate = pbvi::initial_value(p0, m);
    }
    result.t_solve_s += seconds_since(t0);

    t0 = Clock::now();
    d.mixture = mc_evaluate(prod, result.mixture, problem.final_rollouts, derive_seed(problem.seed, problem.K + 1),
                            problem.reward_scale, problem.threads);
    d.eps_f_surrogate = (d.r_m_estimate - d.mixture.r_hat + d.regret_bound) / problem.B;

    std::vector<double> rs;
    std::vector<double> ps;
    for (const auto& rec : result.iterations) {
        rs.push_back(rec.estimate.r_hat);
        ps.push_back(rec.estimate.p_hat);
    }
    d.bfs = reduce_support_bfs(rs, ps, problem.threshold, d.slack);
    if (d.bfs.feasible) {
        d.reduced = mc_evaluate(prod, result.reduced_mixture(), problem.final_rollouts,
                                derive_seed(problem.seed, problem.K + 2), problem.reward_scale, problem.threads);
    }
    result.t_simu_s += seconds_since(t0);
    result.t_total_s = seconds_since(t_start);
    return result;
}

Theorem2Report theorem2_report(const EGResult& result, double B, std::size_t K) {
    Theorem2Report r;
    r.bound = regret_bound(B, K);
    r.r_hat = result.diagnostics.mixture.r_hat;
    r.p_hat = result.diagnostics.mixture.p_hat;
    r.r_se = result.diagnostics.mixture.r_se;
    r.p_se = result.diagnostics.mixture.p_se;
    r.r_m_estimate = result.diagnostics.r_m_estimate;
    r.eps_f_surrogate = (r.r_m_estimate - r.r_hat + r.bound) / B;
    r.lambda_bar = result.lambda_bar;
    r.trace = result.iterations;
    return r;
}

void write_trace_csv(std::ostream& out, const EGResult& result) {
    out << "k,lambda,r_hat,p_hat,r_se,p_se,converged\n";
    const auto old_precision = out.precision(17);
    for (const auto& rec : result.iterations) {
        out << rec.k << ',' << rec.lambda << ',' << rec.estimate.r_hat << ',' << rec.estimate.p_hat << ','
            << rec.estimate.r_se << ',' << rec.estimate.p_se << ',' << (rec.converged ? 1 : 0) << '\n';
    }
    out.precision(old_precision);
}

} // namespace lpomdp::planner
