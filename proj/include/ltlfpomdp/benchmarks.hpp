#pragma once

// Gridworld models M1-M9, specifications phi1-phi6 and the experiment presets.
// Cells are (col, row) with (0, 0) at the bottom-left corner.

#include "ltlfpomdp/planner.hpp"
#include "ltlfpomdp/pomdp.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lpomdp::benchmarks {

using Cell = std::pair<int, int>;

enum class Motion { Stochastic, Deterministic };
enum class Sensor { NoisyLocation, Proximity };

struct HiddenObject {
    std::string atom;
    /// Candidate cells with uniform prior, and Pr['C'] when within Manhattan distance 1.
    std::vector<Cell> candidates;
    std::vector<double> close_prob;
};

struct GridSpec {
    std::string name;
    int width = 4;
    int height = 4;
    std::map<Cell, std::vector<std::string>> labels;
    std::map<Cell, double> rewards;
    Motion motion = Motion::Stochastic;
    double p_intended = 0.95;
    Sensor sensor = Sensor::NoisyLocation;
    /// Whether the noisy location sensor may report the current cell.
    bool observe_own_cell = false;
    std::optional<HiddenObject> hidden;
    Cell start{0, 0};
    double gamma = 0.99;

    void validate() const;
};

inline const std::vector<std::string> kModelNames = {"M1", "M2", "M3", "M4", "M5", "M6", "M7", "M8", "M9"};
inline const std::vector<std::string> kSpecNames = {"phi1", "phi2", "phi3", "phi4", "phi5", "phi6"};
inline const std::vector<std::string> kActionNames = {"N", "S", "E", "W", "Stay"};

GridSpec grid_spec(const std::string& model);
pomdp::LabeledPomdp build_grid_model(const GridSpec& g);
pomdp::LabeledPomdp make_model(const std::string& name);
std::string make_spec(const std::string& name);

struct Preset {
    std::string model;
    std::string spec;
    double threshold = 0.0;
    double B = 1.0;
    double eta = 2.0;
    std::size_t K = 100;
    std::size_t simu = 200;
};

/// Hyperparameters for the row of `model`.
Preset preset(const std::string& model);
std::vector<Preset> all_presets();

struct Overrides {
    std::optional<std::size_t> K;
    std::optional<std::size_t> simu;
    std::optional<double> eta;
    std::optional<double> B;
    std::optional<double> threshold;
    std::uint64_t seed = 1;
    std::size_t final_rollouts = 200;
    std::size_t threads = 1;
    pbvi::SolverConfig solver = default_solver_config();

    static pbvi::SolverConfig default_solver_config();
};

struct ExperimentRow {
    std::string model;
    std::string spec;
    std::size_t n_states = 0;
    std::size_t n_automaton_states = 0;
    double r_hat = 0.0;
    double p_hat = 0.0;
    double threshold = 0.0;
    double B = 0.0;
    double eta = 0.0;
    std::size_t K = 0;
    std::size_t simu = 0;
    std::uint64_t seed = 0;
    double t_solve_s = 0.0;
    double t_simu_s = 0.0;
    double t_total_s = 0.0;
    std::string error;
};

struct Experiment {
    ExperimentRow row;
    planner::ConstrainedProblem problem;
    std::optional<planner::EGResult> result;
};

/// Builds the problem for a preset with overrides applied (no solving).
planner::ConstrainedProblem make_problem(const Preset& p, const Overrides& o, double gamma);

/// compile -> product -> eg_solve; failures are reported in row.error.
Experiment run_experiment(const std::string& model, const std::string& spec, const Overrides& o,
                          const planner::IterationCallback& on_iteration = {});

std::string csv_header();
std::string csv_row(const ExperimentRow& row, bool with_timing = true);

/// One text frame per step; '@' marks the agent, letters the labeled cells.
std::string render_ascii(const GridSpec& g, const pomdp::LabeledPomdp& m, const std::vector<std::size_t>& states);

/// Cell of a model state.
Cell cell_of(const GridSpec& g, std::size_t state);

} // namespace lpomdp::benchmarks
