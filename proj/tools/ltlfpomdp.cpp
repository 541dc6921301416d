// ltlfpomdp: compile specifications, build products, solve and evaluate
// constrained plans, and run the gridworld experiment matrix.

#include "ltlfpomdp/benchmarks.hpp"
#include "ltlfpomdp/dfa.hpp"
#include "ltlfpomdp/error.hpp"
#include "ltlfpomdp/io.hpp"
#include "ltlfpomdp/planner.hpp"
#include "ltlfpomdp/product.hpp"
#include "ltlfpomdp/rng.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>

namespace fs = std::filesystem;
using namespace lpomdp;
using io::Json;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kUsage = 2, kInput = 3, kRuntime = 4 };

struct Globals {
    std::uint64_t seed = 1;
    std::string out = "out";
    std::size_t threads = 1;
    bool quiet = false;
    std::vector<std::string> argv;
};

// Name of the pipeline stage currently running, for error attribution.
std::string g_stage = "arguments";

void say(const Globals& g, const std::string& line) {
    if (!g.quiet) {
        std::cout << line << std::endl;
    }
}

void write_manifest(const Globals& g, const std::string& command, Json inputs, Json config,
                    const std::vector<std::string>& outputs) {
    Json m;
    m["tool"] = "ltlfpomdp";
    m["version"] = kVersion;
    m["command"] = command;
    m["argv"] = g.argv;
    m["inputs"] = std::move(inputs);
    m["config"] = std::move(config);
    m["seed"] = g.seed;
    m["threads"] = g.threads;
    m["outputs"] = outputs;
    io::write_json(fs::path(g.out) / "manifest.json", m);
}

struct ModelSource {
    pomdp::LabeledPomdp model;
    std::string id;
    std::optional<benchmarks::GridSpec> grid;
};

// A path to a model document, or the name of a bundled gridworld (M1..M9).
ModelSource load_model_arg(const std::string& arg) {
    g_stage = "load model";
    ModelSource src;
    src.id = arg;
    if (!fs::exists(arg) && std::regex_match(arg, std::regex("M[1-9]"))) {
        src.grid = benchmarks::grid_spec(arg);
        src.model = benchmarks::build_grid_model(*src.grid);
    } else {
        src.model = io::load_model(arg);
    }
    return src;
}

std::string spec_text(const std::string& spec, const std::string& spec_file) {
    if (!spec_file.empty()) {
        std::ifstream in(spec_file);
        if (!in) {
            throw ValidationError("cannot open " + spec_file);
        }
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    if (spec.empty()) {
        throw ValidationError("a specification is required (--spec or --spec-file)");
    }
    if (std::regex_match(spec, std::regex("phi[1-6]"))) {
        return benchmarks::make_spec(spec);
    }
    return spec;
}

dfa::Dfa compile_for(const std::string& text, const ltlf::AtomOrder& atoms) {
    g_stage = "compile";
    const auto parsed = ltlf::parse_formula(text, atoms.names());
    dfa::Dfa d = dfa::compile_minimal_dfa(parsed.formula, atoms);
    d.name = ltlf::format_formula(parsed.formula);
    return d;
}

struct SpecArgs {
    std::string spec;
    std::string spec_file;
    void add(CLI::App* cmd) {
        cmd->add_option("--spec", spec, "formula text, or phi1..phi6");
        cmd->add_option("--spec-file", spec_file, "file holding the formula");
    }
};

pbvi::SolverConfig solver_config(std::size_t n_beliefs, std::size_t max_rounds, double tolerance,
                                 double min_distance, std::uint64_t seed, std::size_t threads) {
    pbvi::SolverConfig c;
    c.n_beliefs = n_beliefs;
    c.max_backup_rounds = max_rounds;
    c.bellman_tolerance = tolerance;
    c.expansion_min_distance = min_distance;
    c.expansion_seed = seed;
    c.threads = threads;
    c.validate();
    return c;
}

Json solver_json(const pbvi::SolverConfig& c) {
    return {{"n_beliefs", c.n_beliefs},
            {"max_backup_rounds", c.max_backup_rounds},
            {"bellman_tolerance", c.bellman_tolerance},
            {"expansion_min_distance", c.expansion_min_distance},
            {"expansion_seed", c.expansion_seed}};
}

Json estimate_json(const planner::McEstimate& e) {
    return {{"n", e.n}, {"r_hat", e.r_hat}, {"r_se", e.r_se}, {"p_hat", e.p_hat}, {"p_se", e.p_se}};
}

double resolve_reward_scale(const std::string& arg, const pomdp::Pomdp& m) {
    if (arg == "auto") {
        return m.stopping.is_geometric() ? 1.0 - m.stopping.gamma : 1.0;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(arg, &used);
        if (used == arg.size()) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw ValidationError("--reward-scale must be 'auto' or a number");
}

// Policy document or mixed-policy document (paths relative to the file).
planner::MixedPolicy load_policy_arg(const std::string& path) {
    g_stage = "load policy";
    const Json doc = io::read_json(path);
    planner::MixedPolicy mixed;
    if (doc.value("kind", std::string()) == "mixed") {
        const fs::path base = fs::path(path).parent_path();
        for (const auto& entry : doc.at("policies")) {
            const Json pdoc = entry.is_string() ? io::read_json(base / entry.get<std::string>()) : entry;
            mixed.support.push_back(std::make_shared<const pbvi::AlphaPolicy>(io::policy_from_json(pdoc)));
        }
        mixed.weights = doc.at("weights").get<std::vector<double>>();
    } else {
        mixed.support.push_back(std::make_shared<const pbvi::AlphaPolicy>(io::policy_from_json(doc)));
        mixed.weights = {1.0};
    }
    mixed.validate();
    return mixed;
}

Json mixed_json(const std::vector<std::string>& paths, const std::vector<double>& weights) {
    return {{"kind", "mixed"}, {"policies", paths}, {"weights", weights}};
}

std::string policy_file(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "policies/policy_%03zu.json", k);
    return buf;
}

int cmd_compile(const Globals& g, const SpecArgs& s, const std::vector<std::string>& atoms, bool dot) {
    g_stage = "compile";
    const std::string text = spec_text(s.spec, s.spec_file);
    const auto parsed =
        atoms.empty() ? ltlf::parse_formula(text) : ltlf::parse_formula(text, std::optional(atoms));
    dfa::Dfa d = dfa::compile_minimal_dfa(parsed.formula, parsed.atoms);
    d.name = ltlf::format_formula(parsed.formula);
    g_stage = "write";
    std::vector<std::string> outputs = {"dfa.json"};
    io::write_json(fs::path(g.out) / "dfa.json", io::dfa_to_json(d));
    if (dot) {
        io::write_text(fs::path(g.out) / "dfa.dot", io::dfa_to_dot(d));
        outputs.push_back("dfa.dot");
    }
    write_manifest(g, "compile", {{"spec", d.name}}, {{"atoms", d.atoms.names()}, {"dot", dot}}, outputs);
    std::cout << "states " << d.n_states << "\naccepting " << d.accepting_count() << std::endl;
    return kOk;
}

int cmd_product(const Globals& g, const std::string& model_arg, const SpecArgs& s, bool prune) {
    const ModelSource src = load_model_arg(model_arg);
    const dfa::Dfa d = compile_for(spec_text(s.spec, s.spec_file), src.model.atoms);
    g_stage = "product";
    const product::ProductPomdp prod(src.model, d, prune);
    g_stage = "write";
    io::write_json(fs::path(g.out) / "product.json", io::product_to_json(prod, src.id, d.name));
    io::write_json(fs::path(g.out) / "dfa.json", io::dfa_to_json(d));
    write_manifest(g, "product", {{"model", src.id}, {"spec", d.name}}, {{"prune", prune}},
                   {"product.json", "dfa.json"});
    say(g, "product states " + std::to_string(prod.n_states()) + " (|S|=" + std::to_string(src.model.n_states()) +
               ", |Q|=" + std::to_string(d.n_states) + ")");
    return kOk;
}

struct SolveArgs {
    std::string model;
    SpecArgs spec;
    double threshold = 0.0;
    double B = 1.0;
    std::size_t K = 1;
    std::string eta = "auto";
    std::size_t simu = 200;
    std::string reward_scale = "auto";
    std::optional<double> slack;
    std::size_t final_rollouts = 200;
    std::size_t n_beliefs = 200;
    std::size_t max_rounds = 400;
    double tolerance = 1e-4;
    double min_distance = 0.05;
    bool prune = false;
    bool dry_run = false;
};

int cmd_solve(const Globals& g, const SolveArgs& a) {
    const ModelSource src = load_model_arg(a.model);
    g_stage = "configure";
    planner::ConstrainedProblem problem;
    problem.threshold = a.threshold;
    problem.B = a.B;
    problem.K = a.K;
    if (a.eta != "auto") {
        try {
            problem.eta = std::stod(a.eta);
        } catch (const std::exception&) {
            throw ValidationError("--eta must be 'auto' or a number");
        }
    }
    problem.simu = a.simu;
    problem.seed = g.seed;
    problem.reward_scale = resolve_reward_scale(a.reward_scale, src.model.dynamics);
    problem.bfs_slack = a.slack;
    problem.final_rollouts = a.final_rollouts;
    problem.threads = g.threads;
    problem.validate();
    const pbvi::SolverConfig cfg = solver_config(a.n_beliefs, a.max_rounds, a.tolerance, a.min_distance,
                                                 derive_seed(g.seed, 0x50B5), g.threads);

    const dfa::Dfa d = compile_for(spec_text(a.spec.spec, a.spec.spec_file), src.model.atoms);
    Json config = {{"threshold", problem.threshold},
                   {"B", problem.B},
                   {"K", problem.K},
                   {"eta", problem.effective_eta()},
                   {"simu", problem.simu},
                   {"reward_scale", problem.reward_scale},
                   {"bfs_slack", problem.effective_slack()},
                   {"final_rollouts", problem.final_rollouts},
                   {"prune", a.prune},
                   {"solver", solver_json(cfg)}};
    const Json inputs = {{"model", src.id}, {"spec", d.name}};
    write_manifest(g, "solve", inputs, config, {});
    if (a.dry_run) {
        say(g, "eta " + std::to_string(problem.effective_eta()));
        return kOk;
    }
    g_stage = "product";
    const product::ProductPomdp prod(src.model, d, a.prune);
    say(g, "product states " + std::to_string(prod.n_states()) + ", automaton states " + std::to_string(d.n_states));

    g_stage = "solve";
    const planner::EGResult res = planner::eg_solve(prod, problem, cfg, [&](const planner::IterationRecord& r) {
        std::ostringstream line;
        line << "k=" << r.k << " lambda=" << r.lambda << " p_hat=" << r.estimate.p_hat
             << " r_hat=" << r.estimate.r_hat << (r.converged ? "" : " (not converged)");
        say(g, line.str());
    });

    g_stage = "write";
    const fs::path out(g.out);
    std::vector<std::string> outputs = {"product.json", "dfa.json"};
    io::write_json(out / "product.json", io::product_to_json(prod, src.id, d.name));
    io::write_json(out / "dfa.json", io::dfa_to_json(d));
    std::vector<std::string> paths;
    for (std::size_t k = 0; k < res.policies.size(); ++k) {
        paths.push_back(policy_file(k + 1));
        io::write_json(out / paths.back(), io::policy_to_json(*res.policies[k]));
        outputs.push_back(paths.back());
    }
    io::write_json(out / "mixture.json", mixed_json(paths, res.mixture.weights));
    const planner::MixedPolicy reduced = res.reduced_mixture();
    std::vector<std::string> reduced_paths;
    for (const auto& p : reduced.support) {
        for (std::size_t k = 0; k < res.policies.size(); ++k) {
            if (res.policies[k] == p) {
                reduced_paths.push_back(paths[k]);
                break;
            }
        }
    }
    io::write_json(out / "reduced_mixture.json", mixed_json(reduced_paths, reduced.weights));
    {
        std::ofstream csv(out / "trace.csv");
        planner::write_trace_csv(csv, res);
    }
    outputs.insert(outputs.end(), {"mixture.json", "reduced_mixture.json", "trace.csv", "result.json"});

    const auto& diag = res.diagnostics;
    Json iterations = Json::array();
    for (const auto& r : res.iterations) {
        iterations.push_back({{"k", r.k},
                              {"lambda", r.lambda},
                              {"p_hat", r.estimate.p_hat},
                              {"r_hat", r.estimate.r_hat},
                              {"p_se", r.estimate.p_se},
                              {"r_se", r.estimate.r_se},
                              {"converged", r.converged},
                              {"alpha_vectors", r.alpha_count},
                              {"policy", paths[r.k - 1]}});
    }
    Json bfs = {{"feasible", diag.bfs.feasible},
                {"objective", diag.bfs.objective},
                {"constraint", diag.bfs.constraint},
                {"support", diag.bfs.support()},
                {"weights", diag.bfs.weights}};
    Json result = {{"iterations", iterations},
                   {"lambda_bar", res.lambda_bar},
                   {"mixture", estimate_json(diag.mixture)},
                   {"reduced_mixture", diag.reduced ? estimate_json(*diag.reduced) : Json(nullptr)},
                   {"bfs", bfs},
                   {"diagnostics",
                    {{"regret_bound", diag.regret_bound},
                     {"eta", diag.eta},
                     {"bfs_slack", diag.slack},
                     {"r_m_lower_estimate", diag.r_m_estimate},
                     {"eps_f_surrogate", diag.eps_f_surrogate}}},
                   {"timing", {{"t_solve_s", res.t_solve_s}, {"t_simu_s", res.t_simu_s}, {"t_total_s", res.t_total_s}}}};
    io::write_json(out / "result.json", result);

    write_manifest(g, "solve", inputs, config, outputs);

    std::ostringstream summary;
    summary << "mixture r_hat=" << diag.mixture.r_hat << " p_hat=" << diag.mixture.p_hat
            << " (threshold " << problem.threshold << ", bound " << diag.regret_bound << ")";
    std::cout << summary.str() << std::endl;
    return kOk;
}

int cmd_evaluate(const Globals& g, const std::string& model_arg, const SpecArgs& s, const std::string& policy_path,
                 std::size_t rollouts, const std::string& scale_arg) {
    const ModelSource src = load_model_arg(model_arg);
    const dfa::Dfa d = compile_for(spec_text(s.spec, s.spec_file), src.model.atoms);
    g_stage = "product";
    const product::ProductPomdp prod(src.model, d);
    const planner::MixedPolicy mixed = load_policy_arg(policy_path);
    const double scale = resolve_reward_scale(scale_arg, src.model.dynamics);
    g_stage = "evaluate";
    const auto est = planner::mc_evaluate(prod, mixed, rollouts, g.seed, scale, g.threads);
    g_stage = "write";
    io::write_json(fs::path(g.out) / "evaluation.json", estimate_json(est));
    write_manifest(g, "evaluate", {{"model", src.id}, {"spec", d.name}, {"policy", policy_path}},
                   {{"rollouts", rollouts}, {"reward_scale", scale}}, {"evaluation.json"});
    std::ostringstream line;
    line << "r_hat=" << est.r_hat << " (se " << est.r_se << ") p_hat=" << est.p_hat << " (se " << est.p_se << ")";
    std::cout << line.str() << std::endl;
    return kOk;
}

std::vector<std::string> split_rows(const std::string& rows) {
    if (rows == "all") {
        return benchmarks::kModelNames;
    }
    std::vector<std::string> out;
    std::stringstream ss(rows);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) {
            benchmarks::preset(item);
            out.push_back(item);
        }
    }
    if (out.empty()) {
        throw ValidationError("--rows selects no experiments");
    }
    return out;
}

struct BenchArgs {
    std::string rows = "all";
    bool dry_run = false;
    std::optional<std::size_t> K;
    std::optional<std::size_t> simu;
    std::size_t final_rollouts = 200;
    std::size_t n_beliefs = 200;
    std::size_t max_rounds = 400;
    double tolerance = 1e-4;
};

int cmd_bench(const Globals& g, const BenchArgs& a) {
    g_stage = "configure";
    const auto rows = split_rows(a.rows);
    benchmarks::Overrides o;
    o.K = a.K;
    o.simu = a.simu;
    o.seed = g.seed;
    o.final_rollouts = a.final_rollouts;
    o.threads = g.threads;
    o.solver = solver_config(a.n_beliefs, a.max_rounds, a.tolerance, benchmarks::Overrides::default_solver_config().expansion_min_distance,
                             derive_seed(g.seed, 0x50B5), g.threads);

    Json planned = Json::array();
    for (const auto& model : rows) {
        const auto p = benchmarks::preset(model);
        const auto problem = benchmarks::make_problem(p, o, benchmarks::grid_spec(model).gamma);
        planned.push_back({{"model", p.model},
                           {"spec", p.spec},
                           {"threshold", problem.threshold},
                           {"B", problem.B},
                           {"eta", problem.effective_eta()},
                           {"K", problem.K},
                           {"simu", problem.simu}});
    }
    const Json config = {{"rows", planned}, {"final_rollouts", a.final_rollouts}, {"solver", solver_json(o.solver)},
                         {"dry_run", a.dry_run}};
    if (a.dry_run) {
        for (const auto& r : planned) {
            std::cout << r["model"].get<std::string>() << " " << r["spec"].get<std::string>() << " threshold="
                      << r["threshold"] << " B=" << r["B"] << " eta=" << r["eta"] << " K=" << r["K"]
                      << " simu=" << r["simu"] << std::endl;
        }
        write_manifest(g, "bench", {{"rows", a.rows}}, config, {});
        return kOk;
    }

    g_stage = "bench";
    std::ostringstream csv;
    csv << benchmarks::csv_header() << "\n";
    bool failed = false;
    for (const auto& model : rows) {
        const auto p = benchmarks::preset(model);
        say(g, "running " + model + " / " + p.spec);
        const auto ex = benchmarks::run_experiment(model, p.spec, o);
        failed = failed || !ex.row.error.empty();
        csv << benchmarks::csv_row(ex.row) << "\n";
        say(g, benchmarks::csv_row(ex.row));
    }
    g_stage = "write";
    io::write_text(fs::path(g.out) / "bench.csv", csv.str());
    write_manifest(g, "bench", {{"rows", a.rows}}, config, {"bench.csv"});
    return failed ? kRuntime : kOk;
}

int cmd_trace(const Globals& g, const std::string& model_arg, const SpecArgs& s, const std::string& policy_path,
              const std::string& format) {
    if (format != "csv" && format != "ascii" && format != "both") {
        throw ValidationError("--format must be csv, ascii or both");
    }
    const ModelSource src = load_model_arg(model_arg);
    if (format != "csv" && !src.grid) {
        throw ValidationError("ASCII frames need a bundled gridworld model");
    }
    const dfa::Dfa d = compile_for(spec_text(s.spec, s.spec_file), src.model.atoms);
    g_stage = "product";
    const product::ProductPomdp prod(src.model, d);
    const planner::MixedPolicy mixed = load_policy_arg(policy_path);
    g_stage = "simulate";
    CounterRng pick(derive_seed(g.seed, 0x7124CE));
    const pbvi::AlphaPolicy& policy = *mixed.support[mixed.pick(pick.uniform())];
    if (policy.n_states != prod.n_states()) {
        throw ValidationError("policy was computed for a different product state space");
    }
    const auto run = product::simulate(prod, pbvi::as_selector(policy), g.seed);

    g_stage = "write";
    std::vector<std::string> outputs;
    if (format != "ascii") {
        std::ostringstream csv;
        csv << "t,s,q,a,o,r\n";
        for (std::size_t t = 0; t < run.trajectory.steps.size(); ++t) {
            const auto& st = run.trajectory.steps[t];
            csv << t << ',' << src.model.state_names[prod.base_state(st.state)] << ',' << prod.automaton_state(st.state)
                << ',' << src.model.action_names[st.action] << ',' << src.model.observation_names[st.observation] << ','
                << st.reward << '\n';
        }
        io::write_text(fs::path(g.out) / "trace.csv", csv.str());
        outputs.push_back("trace.csv");
    }
    if (format != "csv") {
        std::vector<std::size_t> states;
        for (const auto& st : run.trajectory.steps) {
            states.push_back(prod.base_state(st.state));
        }
        io::write_text(fs::path(g.out) / "trace.txt", benchmarks::render_ascii(*src.grid, src.model, states));
        outputs.push_back("trace.txt");
    }
    write_manifest(g, "trace", {{"model", src.id}, {"spec", d.name}, {"policy", policy_path}}, {{"format", format}},
                   outputs);
    say(g, "steps " + std::to_string(run.trajectory.steps.size()) + ", accepted " + (run.accepted ? "yes" : "no"));
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    Globals g;
    g.argv.assign(argv, argv + argc);

    CLI::App app{"Constrained POMDP planning with finite-trace temporal logic specifications"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    app.add_option("--seed", g.seed, "base seed")->capture_default_str();
    app.add_option("--out", g.out, "output directory")->capture_default_str();
    app.add_option("--threads", g.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_flag("--quiet", g.quiet, "suppress progress output");

    std::function<int()> run;

    SpecArgs compile_spec;
    std::vector<std::string> compile_atoms;
    bool dot = false;
    auto* compile = app.add_subcommand("compile", "compile a formula to a minimal DFA");
    compile_spec.add(compile);
    compile->add_option("--atoms", compile_atoms, "explicit atom list")->delimiter(',');
    compile->add_flag("--dot", dot, "also write a DOT rendering");
    compile->callback([&] { run = [&] { return cmd_compile(g, compile_spec, compile_atoms, dot); }; });

    std::string product_model;
    SpecArgs product_spec;
    bool prune = false;
    auto* product_cmd = app.add_subcommand("product", "build the product of a model and a specification");
    product_cmd->add_option("--model", product_model, "model file or M1..M9")->required();
    product_spec.add(product_cmd);
    product_cmd->add_flag("--prune", prune, "drop unreachable product states");
    product_cmd->callback([&] { run = [&] { return cmd_product(g, product_model, product_spec, prune); }; });

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "run the multiplier loop and write the mixed policy");
    solve->add_option("--model", sa.model, "model file or M1..M9")->required();
    sa.spec.add(solve);
    solve->add_option("--threshold", sa.threshold, "required satisfaction probability 1 - delta")->required();
    solve->add_option("--B", sa.B, "multiplier cap")->required();
    solve->add_option("--K", sa.K, "iterations")->required();
    solve->add_option("--eta", sa.eta, "learning rate or 'auto'")->capture_default_str();
    solve->add_option("--simu", sa.simu, "rollouts per iteration")->capture_default_str();
    solve->add_option("--reward-scale", sa.reward_scale, "'auto' (1 - gamma when discounted) or a number")
        ->capture_default_str();
    solve->add_option("--slack", sa.slack, "BFS slack (default 2 sqrt(2 log 2 / K))");
    solve->add_option("--final-rollouts", sa.final_rollouts, "rollouts for the final mixture")->capture_default_str();
    solve->add_option("--n-beliefs", sa.n_beliefs, "belief points")->capture_default_str();
    solve->add_option("--max-rounds", sa.max_rounds, "backup rounds per solve")->capture_default_str();
    solve->add_option("--tolerance", sa.tolerance, "backup convergence tolerance")->capture_default_str();
    solve->add_option("--min-distance", sa.min_distance, "belief expansion L1 threshold")->capture_default_str();
    solve->add_flag("--prune", sa.prune, "drop unreachable product states");
    solve->add_flag("--dry-run", sa.dry_run, "validate and write the manifest without solving");
    solve->callback([&] { run = [&] { return cmd_solve(g, sa); }; });

    std::string eval_model;
    SpecArgs eval_spec;
    std::string eval_policy;
    std::size_t rollouts = 1000;
    std::string eval_scale = "auto";
    auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo estimate of reward and satisfaction");
    evaluate->add_option("--model", eval_model, "model file or M1..M9")->required();
    eval_spec.add(evaluate);
    evaluate->add_option("--policy", eval_policy, "policy or mixed-policy file")->required();
    evaluate->add_option("--rollouts", rollouts, "rollouts")->capture_default_str()->check(CLI::PositiveNumber);
    evaluate->add_option("--reward-scale", eval_scale, "'auto' or a number")->capture_default_str();
    evaluate->callback(
        [&] { run = [&] { return cmd_evaluate(g, eval_model, eval_spec, eval_policy, rollouts, eval_scale); }; });

    BenchArgs ba;
    auto* bench = app.add_subcommand("bench", "run the gridworld experiment matrix");
    bench->add_option("--rows", ba.rows, "comma list of M1..M9, or all")->capture_default_str();
    bench->add_flag("--dry-run", ba.dry_run, "list the planned rows without solving");
    bench->add_option("--K", ba.K, "override iterations");
    bench->add_option("--simu", ba.simu, "override rollouts per iteration");
    bench->add_option("--final-rollouts", ba.final_rollouts, "rollouts for the final mixture")->capture_default_str();
    bench->add_option("--n-beliefs", ba.n_beliefs, "belief points")->capture_default_str();
    bench->add_option("--max-rounds", ba.max_rounds, "backup rounds per solve")->capture_default_str();
    bench->add_option("--tolerance", ba.tolerance, "backup convergence tolerance")->capture_default_str();
    bench->callback([&] { run = [&] { return cmd_bench(g, ba); }; });

    std::string trace_model;
    SpecArgs trace_spec;
    std::string trace_policy;
    std::string format = "both";
    auto* trace = app.add_subcommand("trace", "simulate one run and dump it");
    trace->add_option("--model", trace_model, "model file or M1..M9")->required();
    trace_spec.add(trace);
    trace->add_option("--policy", trace_policy, "policy or mixed-policy file")->required();
    trace->add_option("--format", format, "csv, ascii or both")->capture_default_str();
    trace->callback([&] { run = [&] { return cmd_trace(g, trace_model, trace_spec, trace_policy, format); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        return run();
    } catch (const ParseError& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << std::endl;
        return kInput;
    } catch (const ValidationError& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << std::endl;
        return kInput;
    } catch (const std::exception& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << std::endl;
        return kRuntime;
    }
}
