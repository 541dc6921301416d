#include "ltlfpomdp/benchmarks.hpp"

#include "ltlfpomdp/dfa.hpp"
#include "ltlfpomdp/error.hpp"
#include "ltlfpomdp/product.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace lpomdp::benchmarks {

namespace {

std::string cell_name(Cell c) { return "x" + std::to_string(c.first) + "y" + std::to_string(c.second); }

bool inside(const GridSpec& g, Cell c) {
    return c.first >= 0 && c.first < g.width && c.second >= 0 && c.second < g.height;
}

int manhattan(Cell a, Cell b) { return std::abs(a.first - b.first) + std::abs(a.second - b.second); }

constexpr int kDx[] = {0, 0, 1, -1, 0};
constexpr int kDy[] = {1, -1, 0, 0, 0};
constexpr std::size_t kStay = 4;

// Directions other than the opposite one: the intended move and its two perpendiculars.
std::vector<std::size_t> not_opposite(std::size_t a) {
    if (a == 0 || a == 1) {
        return {a, 2, 3};
    }
    return {a, 0, 1};
}

} // namespace

void GridSpec::validate() const {
    if (width < 1 || height < 1) {
        throw ValidationError("grid must have positive dimensions");
    }
    auto check = [&](Cell c) {
        if (!inside(*this, c)) {
            throw ValidationError(name + ": cell " + cell_name(c) + " lies outside the grid");
        }
    };
    for (const auto& [c, _] : labels) {
        check(c);
    }
    for (const auto& [c, _] : rewards) {
        check(c);
    }
    check(start);
    if (!(p_intended >= 0.0 && p_intended <= 1.0)) {
        throw ValidationError("p_intended must be a probability");
    }
    if (hidden) {
        if (sensor != Sensor::Proximity || hidden->candidates.size() != hidden->close_prob.size() ||
            hidden->candidates.empty()) {
            throw ValidationError(name + ": malformed hidden object");
        }
        for (std::size_t i = 0; i < hidden->candidates.size(); ++i) {
            check(hidden->candidates[i]);
            if (!(hidden->close_prob[i] >= 0.0 && hidden->close_prob[i] <= 1.0)) {
                throw ValidationError(name + ": detection probability out of range");
            }
        }
    } else if (sensor == Sensor::Proximity) {
        throw ValidationError(name + ": proximity sensor needs a hidden object");
    }
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ValidationError("gamma must lie in (0, 1)");
    }
}

GridSpec grid_spec(const std::string& model) {
    GridSpec g;
    g.name = model;
    if (model == "M1") {
        g.labels = {{{1, 2}, {"b"}}, {{3, 3}, {"a"}}};
        g.rewards = {{{0, 3}, 2.0}, {{3, 3}, 1.0}};
    } else if (model == "M2") {
        g.width = g.height = 8;
        // Obstacle cells read off the layout figure; (5, 3) sits next to the (4, 3) reward.
        g.labels = {{{7, 7}, {"a"}}, {{5, 3}, {"b"}}, {{2, 5}, {"b"}}};
        g.rewards = {{{1, 6}, 3.0}, {{4, 3}, 3.0}, {{7, 7}, 1.0}};
    } else if (model == "M3") {
        g.labels = {{{3, 0}, {"a"}}, {{0, 3}, {"b"}}};
        g.rewards = {{{3, 3}, 1.0}};
    } else if (model == "M4") {
        g.labels = {{{0, 3}, {"a"}}, {{3, 0}, {"b"}}, {{3, 3}, {"c"}}};
        g.rewards = {{{3, 3}, 1.0}};
    } else if (model == "M5") {
        g.labels = {{{0, 3}, {"a"}}, {{2, 2}, {"b"}}};
        g.rewards = {{{3, 3}, 1.0}};
    } else if (model == "M6") {
        g.labels = {{{3, 0}, {"a"}}, {{3, 3}, {"b"}}, {{0, 3}, {"c"}}, {{1, 3}, {"d"}}};
        g.rewards = {{{3, 0}, 1.0}, {{3, 3}, 2.0}};
    } else if (model == "M7") {
        g.labels = {{{0, 2}, {"a"}}, {{1, 2}, {"b"}}, {{3, 0}, {"c"}}, {{0, 3}, {"d"}}};
        g.rewards = {{{3, 0}, 5.0}, {{0, 3}, 2.0}};
    } else if (model == "M8" || model == "M9") {
        g.motion = Motion::Deterministic;
        g.sensor = Sensor::Proximity;
        g.labels = {{{3, 3}, {"a"}}};
        g.hidden = HiddenObject{"b", {{3, 0}, {0, 3}}, {0.9, 0.1}};
        if (model == "M8") {
            g.rewards = {{{3, 0}, 2.0}, {{0, 3}, 4.0}};
        } else {
            g.rewards = {{{0, 0}, 2.0}};
        }
    } else {
        throw ValidationError("unknown model '" + model + "'");
    }
    return g;
}

Cell cell_of(const GridSpec& g, std::size_t state) {
    const std::size_t cells = static_cast<std::size_t>(g.width * g.height);
    const std::size_t c = state % cells;
    return {static_cast<int>(c % g.width), static_cast<int>(c / g.width)};
}

pomdp::LabeledPomdp build_grid_model(const GridSpec& g) {
    g.validate();
    const std::size_t cells = static_cast<std::size_t>(g.width * g.height);
    const std::size_t hyps = g.hidden ? g.hidden->candidates.size() : 1;
    auto cell_index = [&](Cell c) { return static_cast<std::size_t>(c.second * g.width + c.first); };
    auto move = [&](Cell c, std::size_t dir) {
        const Cell n{c.first + kDx[dir], c.second + kDy[dir]};
        return inside(g, n) ? n : c;
    };

    std::set<std::string> atom_set;
    for (const auto& [_, names] : g.labels) {
        atom_set.insert(names.begin(), names.end());
    }
    if (g.hidden) {
        atom_set.insert(g.hidden->atom);
    }

    pomdp::LabeledPomdp m;
    m.name = g.name;
    m.atoms = ltlf::AtomOrder(std::vector<std::string>(atom_set.begin(), atom_set.end()));
    m.action_names = kActionNames;
    pomdp::Pomdp& p = m.dynamics;
    p.n_states = cells * hyps;
    p.n_actions = kActionNames.size();
    p.stopping = pomdp::StoppingModel::geometric(g.gamma);

    if (g.sensor == Sensor::NoisyLocation) {
        for (std::size_t c = 0; c < cells; ++c) {
            m.observation_names.push_back(cell_name(cell_of(g, c)));
        }
    } else {
        m.observation_names = {"F", "C"};
    }
    p.n_observations = m.observation_names.size();
    p.transitions.resize(p.n_states * p.n_actions);
    p.rewards.assign(p.n_states * p.n_actions, 0.0);
    p.observations.resize(p.n_states);
    m.labels.assign(p.n_states, 0);

    for (std::size_t h = 0; h < hyps; ++h) {
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t s = h * cells + c;
            const Cell cell = cell_of(g, c);
            std::string name = cell_name(cell);
            if (g.hidden) {
                name += "_" + g.hidden->atom + "@" + cell_name(g.hidden->candidates[h]);
            }
            m.state_names.push_back(name);

            std::vector<std::string> present;
            if (auto it = g.labels.find(cell); it != g.labels.end()) {
                present = it->second;
            }
            if (g.hidden && g.hidden->candidates[h] == cell) {
                present.push_back(g.hidden->atom);
            }
            m.labels[s] = ltlf::make_letter(m.atoms, present);

            for (std::size_t a = 0; a < p.n_actions; ++a) {
                pomdp::SparseDist row;
                if (a == kStay || g.motion == Motion::Deterministic) {
                    row.push_back({h * cells + cell_index(move(cell, a)), 1.0});
                } else {
                    const double slip = (1.0 - g.p_intended) / 3.0;
                    row.push_back({h * cells + cell_index(move(cell, a)), g.p_intended});
                    for (std::size_t d : not_opposite(a)) {
                        row.push_back({h * cells + cell_index(move(cell, d)), slip});
                    }
                }
                pomdp::canonicalize(row);
                p.transitions[s * p.n_actions + a] = std::move(row);
                if (auto it = g.rewards.find(cell); it != g.rewards.end()) {
                    p.rewards[s * p.n_actions + a] = it->second;
                }
            }

            pomdp::SparseDist obs;
            if (g.sensor == Sensor::NoisyLocation) {
                std::vector<std::size_t> seen;
                for (std::size_t d = 0; d < 4; ++d) {
                    const Cell n{cell.first + kDx[d], cell.second + kDy[d]};
                    if (inside(g, n)) {
                        seen.push_back(cell_index(n));
                    }
                }
                if (g.observe_own_cell || seen.empty()) {
                    seen.push_back(c);
                }
                for (std::size_t o : seen) {
                    obs.push_back({o, 1.0 / static_cast<double>(seen.size())});
                }
            } else {
                const double close =
                    manhattan(cell, g.hidden->candidates[h]) <= 1 ? g.hidden->close_prob[h] : 0.0;
                obs = {{0, 1.0 - close}, {1, close}};
            }
            pomdp::canonicalize(obs);
            p.observations[s] = std::move(obs);
        }
    }
    for (std::size_t h = 0; h < hyps; ++h) {
        p.initial.push_back({h * cells + cell_index(g.start), 1.0 / static_cast<double>(hyps)});
    }
    pomdp::canonicalize(p.initial);
    m.validate();
    return m;
}

pomdp::LabeledPomdp make_model(const std::string& name) { return build_grid_model(grid_spec(name)); }

std::string make_spec(const std::string& name) {
    static const std::map<std::string, std::string> specs = {
        {"phi1", "F a & G !b"},
        {"phi2", "F (a & F b)"},
        {"phi3", "F (a & F (b & F c))"},
        {"phi4", "!b U (a & F b)"},
        {"phi5", "F (a | b) & G (b -> !d U c)"},
        // "a X b" is read as a & X b.
        {"phi6", "F a & G ((a & X b -> F c) & (a & X !b -> F d))"},
    };
    auto it = specs.find(name);
    if (it == specs.end()) {
        throw ValidationError("unknown specification '" + name + "'");
    }
    return it->second;
}

std::vector<Preset> all_presets() {
    return {
        {"M1", "phi1", 0.75, 5, 2, 100, 200},   {"M2", "phi1", 0.70, 8, 2, 50, 100},
        {"M3", "phi2", 0.75, 5, 2, 100, 200},   {"M4", "phi3", 0.70, 6, 2, 100, 200},
        {"M5", "phi4", 0.70, 6, 2, 100, 200},   {"M6", "phi5", 0.80, 10, 2, 100, 200},
        {"M7", "phi6", 0.80, 25, 2, 50, 100},   {"M8", "phi1", 0.85, 20, 0.02, 100, 200},
        {"M9", "phi4", 0.75, 10, 0.2, 100, 200},
    };
}

Preset preset(const std::string& model) {
    for (const auto& p : all_presets()) {
        if (p.model == model) {
            return p;
        }
    }
    throw ValidationError("no preset for model '" + model + "'");
}

pbvi::SolverConfig Overrides::default_solver_config() {
    pbvi::SolverConfig c;
    c.n_beliefs = 200;
    c.max_backup_rounds = 400;
    c.bellman_tolerance = 1e-4;
    c.expansion_min_distance = 0.05;
    return c;
}

planner::ConstrainedProblem make_problem(const Preset& p, const Overrides& o, double gamma) {
    planner::ConstrainedProblem c;
    c.threshold = o.threshold.value_or(p.threshold);
    c.B = o.B.value_or(p.B);
    c.K = o.K.value_or(p.K);
    c.eta = o.eta.value_or(p.eta);
    c.simu = o.simu.value_or(p.simu);
    c.seed = o.seed;
    // Rewards are reported per step: (1 - gamma) times the expected total.
    c.reward_scale = 1.0 - gamma;
    c.final_rollouts = o.final_rollouts;
    c.threads = o.threads;
    c.validate();
    return c;
}

Experiment run_experiment(const std::string& model, const std::string& spec, const Overrides& o,
                          const planner::IterationCallback& on_iteration) {
    using Clock = std::chrono::steady_clock;
    const auto start = Clock::now();
    Experiment ex;
    ExperimentRow& row = ex.row;
    row.model = model;
    row.spec = spec;
    row.seed = o.seed;
    try {
        Preset p = preset(model);
        p.spec = spec;
        const GridSpec g = grid_spec(model);
        ex.problem = make_problem(p, o, g.gamma);
        row.threshold = ex.problem.threshold;
        row.B = ex.problem.B;
        row.eta = ex.problem.effective_eta();
        row.K = ex.problem.K;
        row.simu = ex.problem.simu;

        const pomdp::LabeledPomdp m = build_grid_model(g);
        row.n_states = m.n_states();
        const auto parsed = ltlf::parse_formula(make_spec(spec), m.atoms.names());
        dfa::Dfa d = dfa::compile_minimal_dfa(parsed.formula, m.atoms);
        d.name = spec;
        row.n_automaton_states = d.n_states;
        const product::ProductPomdp prod(m, d);

        ex.result = planner::eg_solve(prod, ex.problem, o.solver, on_iteration);
        row.r_hat = ex.result->diagnostics.mixture.r_hat;
        row.p_hat = ex.result->diagnostics.mixture.p_hat;
        row.t_solve_s = ex.result->t_solve_s;
        row.t_simu_s = ex.result->t_simu_s;
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    row.t_total_s = std::chrono::duration<double>(Clock::now() - start).count();
    return ex;
}

std::string csv_header() {
    return "model,spec,|S|,|Q|,r_hat,p_hat,threshold,B,eta,K,simu,seed,t_solve_s,t_simu_s,t_total_s,error";
}

std::string csv_row(const ExperimentRow& r, bool with_timing) {
    std::string error = r.error;
    for (char& c : error) {
        if (c == '"') {
            c = '\'';
        }
    }
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%s,%zu,%zu,%.4f,%.4f,%.2f,%g,%g,%zu,%zu,%llu,", r.model.c_str(), r.spec.c_str(),
                  r.n_states, r.n_automaton_states, r.r_hat, r.p_hat, r.threshold, r.B, r.eta, r.K, r.simu,
                  static_cast<unsigned long long>(r.seed));
    std::string out = buf;
    if (with_timing) {
        std::snprintf(buf, sizeof buf, "%.3f,%.3f,%.3f,", r.t_solve_s, r.t_simu_s, r.t_total_s);
    } else {
        std::snprintf(buf, sizeof buf, ",,,");
    }
    out += buf;
    if (!error.empty()) {
        out += "\"" + error + "\"";
    }
    return out;
}

std::string render_ascii(const GridSpec& g, const pomdp::LabeledPomdp& m, const std::vector<std::size_t>& states) {
    std::ostringstream out;
    for (std::size_t t = 0; t < states.size(); ++t) {
        const Cell agent = cell_of(g, states[t]);
        out << "t=" << t << "\n";
        for (int row = g.height - 1; row >= 0; --row) {
            for (int col = 0; col < g.width; ++col) {
                const Cell c{col, row};
                char ch = '.';
                const std::size_t s = states[t] - states[t] % static_cast<std::size_t>(g.width * g.height) +
                                      static_cast<std::size_t>(row * g.width + col);
                const ltlf::Letter l = m.labels.at(s);
                for (std::size_t i = 0; i < m.atoms.size(); ++i) {
                    if (l & (1u << i)) {
                        ch = m.atoms.names()[i][0];
                        break;
                    }
                }
                if (c == agent) {
                    ch = '@';
                }
                out << ch;
            }
            out << "\n";
        }
    }
    return out.str();
}

} // namespace lpomdp::benchmarks
