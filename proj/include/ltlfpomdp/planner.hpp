#pragma once

// Lagrangian relaxation of the constrained product problem, solved by an
// exponentiated-gradient multiplier loop around the point-based solver.

#include "ltlfpomdp/pbvi.hpp"
#include "ltlfpomdp/product.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace lpomdp::planner {

using PolicyRef = std::shared_ptr<const pbvi::AlphaPolicy>;

struct MixedPolicy {
    std::vector<PolicyRef> support;
    std::vector<double> weights;

    /// Throws ValidationError unless weights are nonnegative and sum to 1 within 1e-12.
    void validate() const;
    /// Component selected by a uniform draw u in [0, 1).
    std::size_t pick(double u) const;
};

struct ConstrainedProblem {
    /// 1 - delta.
    double threshold = 0.0;
    double B = 1.0;
    std::size_t K = 1;
    /// Learning rate; unset means sqrt(log 2 / (2 K B^2)).
    std::optional<double> eta;
    std::size_t simu = 200;
    std::uint64_t seed = 0;
    /// Multiplies every step reward, in the solver and in reported estimates.
    double reward_scale = 1.0;
    /// BFS slack; unset means 2 sqrt(2 log 2 / K).
    std::optional<double> bfs_slack;
    /// Rollouts for the final evaluation of the mixtures.
    std::size_t final_rollouts = 200;
    std::size_t threads = 1;

    double effective_eta() const;
    double effective_slack() const;
    void validate() const;
};

double auto_eta(std::size_t K, double B);
/// 2 B sqrt(2 log 2 / K).
double regret_bound(double B, std::size_t K);
double default_bfs_slack(std::size_t K);

struct Scalarized {
    /// rho[x * |A| + a].
    std::vector<double> reward;
    /// Terminal channel lambda * r^f for fixed horizons; empty for geometric stopping.
    std::vector<double> terminal;
    /// Policy-independent constant: L(mu, lambda) = value(mu) + offset.
    double offset = 0.0;
    /// Coefficient of r^f in rho (geometric) or in the terminal channel (fixed).
    double bonus = 0.0;
};

/// Geometric(gamma): rho = scale * r + lambda (1 - gamma) / gamma * r^f with
/// offset -lambda (1 - gamma) / gamma * 1[q0 in F] - lambda * threshold.
/// Fixed(T): stage reward scale * r, terminal lambda * r^f, offset -lambda * threshold.
Scalarized scalarize(const product::ProductPomdp& prod, double lambda, double threshold, double reward_scale = 1.0);

/// lambda' = B lambda e^{-x} / (B + lambda (e^{-x} - 1)) with x = eta (p_hat - threshold),
/// evaluated without overflow and kept inside (0, B).
double eg_update_lambda(double lambda, double p_hat, double eta, double B, double threshold);

struct McEstimate {
    std::size_t n = 0;
    double r_hat = 0.0;
    double r_se = 0.0;
    double p_hat = 0.0;
    double p_se = 0.0;
};

/// Rollout i uses seed derive_seed(seed, i).
McEstimate mc_evaluate(const product::ProductPomdp& prod, const pbvi::AlphaPolicy& policy, std::size_t n,
                       std::uint64_t seed, double reward_scale = 1.0, std::size_t threads = 1);
/// Each rollout first draws its component from a stream separate from the
/// rollout seeds, so a degenerate mixture reproduces its pure component.
McEstimate mc_evaluate(const product::ProductPomdp& prod, const MixedPolicy& policy, std::size_t n,
                       std::uint64_t seed, double reward_scale = 1.0, std::size_t threads = 1);

struct BfsResult {
    bool feasible = false;
    std::vector<double> weights;
    double objective = 0.0;
    double constraint = 0.0;

    std::vector<std::size_t> support() const;
};

/// Exact optimum of max sum w_k r_k s.t. sum w_k p_k >= threshold - slack,
/// sum w_k <= 1, w >= 0, by enumerating the basic solutions (support <= 2).
BfsResult reduce_support_bfs(std::span<const double> r, std::span<const double> p, double threshold, double slack);

struct IterationRecord {
    std::size_t k = 0;
    double lambda = 0.0;
    McEstimate estimate;
    bool converged = true;
    std::size_t alpha_count = 0;
    std::size_t rounds = 0;
    double t_solve_s = 0.0;
    double t_simu_s = 0.0;
};

struct Diagnostics {
    double regret_bound = 0.0;
    double eta = 0.0;
    double slack = 0.0;
    /// Solver value at lambda = 0 from the initial belief; a lower bound on R_m.
    double r_m_estimate = 0.0;
    /// (R_m - R(mu_bar) + bound) / B with the achieved reward standing in for R*.
    double eps_f_surrogate = 0.0;
    McEstimate mixture;
    BfsResult bfs;
    std::optional<McEstimate> reduced;
};

struct EGResult {
    std::vector<IterationRecord> iterations;
    std::vector<PolicyRef> policies;
    /// Uniform 1/K mixture of the K inner policies.
    MixedPolicy mixture;
    double lambda_bar = 0.0;
    Diagnostics diagnostics;
    double t_solve_s = 0.0;
    double t_simu_s = 0.0;
    double t_total_s = 0.0;

    /// Mixture over the BFS support, or the uniform mixture when infeasible.
    MixedPolicy reduced_mixture() const;
};

using IterationCallback = std::function<void(const IterationRecord&)>;

EGResult eg_solve(const product::ProductPomdp& prod, const ConstrainedProblem& problem, const pbvi::SolverConfig& cfg,
                  const IterationCallback& on_iteration = {});

struct Theorem2Report {
    double bound = 0.0;
    double r_hat = 0.0;
    double p_hat = 0.0;
    double r_se = 0.0;
    double p_se = 0.0;
    double eps_f_surrogate = 0.0;
    double r_m_estimate = 0.0;
    double lambda_bar = 0.0;
    std::vector<IterationRecord> trace;
};

Theorem2Report theorem2_report(const EGResult& result, double B, std::size_t K);

/// Columns k, lambda, r_hat, p_hat, r_se, p_se, converged.
void write_trace_csv(std::ostream& out, const EGResult& result);

} // namespace lpomdp::planner
