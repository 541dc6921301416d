#include "oracles.hpp"

#include "ltlfpomdp/benchmarks.hpp"
#include "ltlfpomdp/error.hpp"
#include "ltlfpomdp/io.hpp"
#include "ltlfpomdp/pbvi.hpp"

#include <doctest.h>

#include <filesystem>
#include <string>

using namespace lpomdp;

namespace {

const std::filesystem::path kData = TEST_DATA_DIR;

std::filesystem::path temp_dir() {
    auto p = std::filesystem::temp_directory_path() / "ltlfpomdp_test_io";
    std::filesystem::create_directories(p);
    return p;
}

io::Json chain_doc() { return io::read_json(kData / "chain.json"); }

} // namespace

TEST_CASE("chain document loads with string probabilities") {
    const auto m = io::load_model(kData / "chain.json");
    CHECK(m.n_states() == 3);
    CHECK(m.dynamics.n_actions == 2);
    CHECK(m.dynamics.n_observations == 2);
    CHECK(m.atoms.names() == std::vector<std::string>{"a"});
    CHECK(m.labels == std::vector<ltlf::Letter>{0, 0, 1});
    CHECK(m.dynamics.transition(0, 0) == pomdp::SparseDist{{0, 0.2}, {1, 0.8}});
    CHECK(m.dynamics.transition(0, 1) == pomdp::SparseDist{{0, 1.0}});
    CHECK(m.dynamics.reward(0, 1) == 1.0);
    CHECK(m.dynamics.reward(0, 0) == 0.0);
    CHECK(m.dynamics.stopping == pomdp::StoppingModel::geometric(0.9));
}

TEST_CASE("a row summing to 0.9 is rejected and named") {
    try {
        io::load_model(kData / "bad_row.json");
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        const std::string what = e.what();
        CHECK(what.find("(s0, a)") != std::string::npos);
    }
}

TEST_CASE("schema violations") {
    auto doc = chain_doc();
    doc.erase("stopping");
    CHECK_THROWS_AS(io::model_from_json(doc), ValidationError);

    doc = chain_doc();
    doc["transitions"][0]["next"]["s9"] = 0.0;
    CHECK_THROWS_AS(io::model_from_json(doc), ValidationError);

    doc = chain_doc();
    doc["transitions"].erase(5);
    CHECK_THROWS_AS(io::model_from_json(doc), ValidationError);

    doc = chain_doc();
    doc["transitions"].push_back(doc["transitions"][0]);
    CHECK_THROWS_AS(io::model_from_json(doc), ValidationError);

    doc = chain_doc();
    doc["observe"]["s0"]["far"] = "0.5x";
    CHECK_THROWS_AS(io::model_from_json(doc), ValidationError);

    doc = chain_doc();
    doc["labels"]["s0"] = {"zz"};
    CHECK_THROWS_AS(io::model_from_json(doc), ValidationError);

    doc = chain_doc();
    doc["stopping"] = {{"kind", "geometric"}, {"gamma", 1.0}};
    CHECK_THROWS_AS(io::model_from_json(doc), ValidationError);

    doc = chain_doc();
    doc["initial"] = {{"s0", "0.9999999"}};
    CHECK_NOTHROW(io::model_from_json(doc));

    CHECK_THROWS_AS(io::read_json(kData / "does_not_exist.json"), ValidationError);
}

TEST_CASE("every benchmark model survives a file round trip") {
    for (const auto& name : benchmarks::kModelNames) {
        CAPTURE(name);
        const auto m = benchmarks::make_model(name);
        const auto path = temp_dir() / (name + ".json");
        io::save_model(path, m);
        CHECK(io::load_model(path) == m);
    }
    const auto chain = io::load_model(kData / "chain.json");
    CHECK(io::model_from_json(io::model_to_json(chain)) == chain);
}

TEST_CASE("automaton documents round trip") {
    for (const auto& spec : benchmarks::kSpecNames) {
        const auto p = ltlf::parse_formula(benchmarks::make_spec(spec));
        const auto d = dfa::compile_minimal_dfa(p.formula, p.atoms);
        const auto back = io::dfa_from_json(io::dfa_to_json(d));
        CHECK(back.n_states == d.n_states);
        CHECK(back.initial == d.initial);
        CHECK(back.accepting == d.accepting);
        CHECK(back.delta == d.delta);
        CHECK(back.atoms == d.atoms);
        const std::string dot = io::dfa_to_dot(d);
        CHECK(dot.find("digraph") != std::string::npos);
    }
    auto doc = io::dfa_to_json(dfa::compile_minimal_dfa(ltlf::make_eventually(ltlf::make_atom("a")),
                                                        ltlf::AtomOrder({"a"})));
    doc["delta"][0].erase(0);
    CHECK_THROWS_AS(io::dfa_from_json(doc), ValidationError);
}

TEST_CASE("policy documents round trip bit-exactly") {
    pbvi::AlphaPolicy p;
    p.kind = pbvi::AlphaPolicy::Kind::Stationary;
    p.discount = 0.99;
    p.n_states = 3;
    p.stages = {{{1, {0.1, 1.0 / 3.0, -2.5e-17}}, {0, {1e300, -0.0, 7.0}}}};
    p.converged = false;
    p.rounds = 17;
    p.belief_count = 5;
    CHECK(io::policy_from_json(io::policy_to_json(p)) == p);

    pbvi::AlphaPolicy f;
    f.kind = pbvi::AlphaPolicy::Kind::TimeIndexed;
    f.horizon = 1;
    f.n_states = 2;
    f.stages = {{{0, {1.0, 2.0}}}, {{1, {3.0, 4.0}}, {0, {0.5, 0.25}}}};
    const auto path = temp_dir() / "policy.json";
    io::write_json(path, io::policy_to_json(f));
    CHECK(io::policy_from_json(io::read_json(path)) == f);

    auto doc = io::policy_to_json(f);
    doc["stages"].erase(1);
    CHECK_THROWS_AS(io::policy_from_json(doc), ValidationError);
}

TEST_CASE("product documents carry the final reward channel") {
    const auto m = io::load_model(kData / "chain.json");
    const auto p = ltlf::parse_formula("F a", m.atoms.names());
    const auto prod = product::build_product(m, dfa::compile_minimal_dfa(p.formula, p.atoms));
    const auto doc = io::product_to_json(prod, "chain", "F a");
    CHECK(doc["states"].size() == 6);
    CHECK(doc["final_reward"]["s2|q1"] == 1);
    CHECK(doc["final_reward"]["s2|q0"] == 0);
    CHECK(doc["provenance"]["model"] == "chain");
    const auto reloaded = io::model_from_json(doc);
    CHECK(reloaded.dynamics == prod.core());
}
