#include "oracles.hpp"

#include "ltlfpomdp/benchmarks.hpp"
#include "ltlfpomdp/dfa.hpp"
#include "ltlfpomdp/error.hpp"

#include <doctest.h>

using namespace lpomdp;
using namespace lpomdp::ltlf;
using dfa::Dfa;

namespace {

ParsedFormula parse(const std::string& s) { return parse_formula(s); }

void check_language(const Formula& f, const AtomOrder& atoms, const Dfa& d, std::size_t max_len) {
    for (const auto& w : oracle::all_words(atoms.size(), 1, max_len)) {
        REQUIRE(dfa::dfa_accepts(d, w) == evaluate_trace(f, atoms, w, 0));
    }
}

} // namespace

TEST_CASE("empty-word acceptance") {
    CHECK(dfa::empty_accept(make_true()));
    CHECK_FALSE(dfa::empty_accept(make_false()));
    CHECK_FALSE(dfa::empty_accept(parse("F a").formula));
    CHECK(dfa::empty_accept(parse("G !b").formula));
    CHECK_FALSE(dfa::empty_accept(parse("X a").formula));
    CHECK(dfa::empty_accept(parse("N a").formula));
    CHECK(dfa::empty_accept(parse("a R b").formula));
    CHECK_FALSE(dfa::empty_accept(parse("a U b").formula));
    CHECK(dfa::empty_accept(parse("!a").formula));
    CHECK(dfa::empty_accept(parse("F a -> b").formula));
}

TEST_CASE("progression examples") {
    const auto fa = parse("F a");
    const Letter with_a = make_letter(fa.atoms, {"a"});
    CHECK(dfa::progress(fa.formula, with_a, fa.atoms) == make_true());
    CHECK(dfa::progress(fa.formula, 0, fa.atoms) == fa.formula);

    const auto xa = parse_formula("X a", std::vector<std::string>{"a", "b"});
    const Formula px = dfa::progress(xa.formula, make_letter(xa.atoms, {"b"}), xa.atoms);
    dfa::Canonicalizer canon(xa.formula, xa.atoms);
    CHECK(canon.key(px) == canon.key(make_and(make_atom("a"), make_eventually(make_true()))));
}

TEST_CASE("canonical keys identify propositional equivalents") {
    const auto phi1 = parse("F a & G !b");
    dfa::Canonicalizer canon(phi1.formula, phi1.atoms);
    const Formula a = make_atom("a");
    CHECK(canon.key(make_and(a, a)) == canon.key(a));
    CHECK(canon.key(make_or(make_eventually(a), make_true())) == canon.key(make_true()));
    const Letter la = make_letter(phi1.atoms, {"a"});
    CHECK(canon.progress(canon.key(phi1.formula), la) == canon.key(parse("G !b").formula));
    CHECK(canon.key(make_implies(a, make_atom("b"))) == canon.key(make_or(make_not(a), make_atom("b"))));
}

TEST_CASE("reference automata") {
    const auto fa = parse("F a");
    const Dfa d = dfa::compile_minimal_dfa(fa.formula, fa.atoms);
    CHECK(d.n_states == 2);
    CHECK(d.initial == 0);
    CHECK_FALSE(d.is_accepting(0));
    CHECK(d.next(0, 0) == 0);
    const std::size_t q1 = d.next(0, 1);
    CHECK(q1 == 1);
    CHECK(d.is_accepting(1));
    CHECK(d.next(1, 0) == 1);
    CHECK(d.next(1, 1) == 1);
    CHECK(dfa::dfa_accepts(d, {1}));
    CHECK_FALSE(dfa::dfa_accepts(d, {0, 0}));
    CHECK_THROWS_AS(dfa::dfa_accepts(d, {2}), ValidationError);

    const auto t = parse("true");
    const Dfa dt = dfa::compile_minimal_dfa(t.formula, t.atoms);
    CHECK(dt.n_states == 1);
    CHECK(dt.is_accepting(0));

    const auto phi1 = parse("F a & G !b");
    const Dfa d1 = dfa::compile_minimal_dfa(phi1.formula, phi1.atoms);
    CHECK(d1.n_states == 3);
    const Word w = {0, make_letter(phi1.atoms, {"b"}), make_letter(phi1.atoms, {"a"})};
    CHECK_FALSE(dfa::dfa_accepts(d1, w));
}

TEST_CASE("benchmark specification sizes") {
    const std::map<std::string, std::size_t> expected = {{"phi1", 3}, {"phi2", 3}, {"phi3", 4},
                                                          {"phi4", 4}, {"phi5", 4}, {"phi6", 10}};
    for (const auto& [name, size] : expected) {
        const auto p = parse(benchmarks::make_spec(name));
        const Dfa d = dfa::compile_minimal_dfa(p.formula, p.atoms);
        CAPTURE(name);
        CHECK(d.n_states == size);
        d.validate();
        check_language(p.formula, p.atoms, d, p.atoms.size() <= 2 ? 5 : 3);
    }
}

TEST_CASE("minimization merges a duplicated accepting sink") {
    Dfa d;
    d.name = "redundant";
    d.atoms = AtomOrder({"a"});
    d.n_states = 4;
    d.initial = 0;
    d.accepting = {false, true, true, false};
    // 0 -a-> 1, 1 -> 2 -> 1 (both accepting sinks in effect), state 3 unreachable.
    d.delta = {0, 1, 2, 2, 1, 1, 3, 3};
    const Dfa m = dfa::minimize_dfa(d);
    CHECK(m.n_states == 2);
    for (const auto& w : oracle::all_words(1, 0, 5)) {
        REQUIRE(dfa::dfa_accepts(m, w) == dfa::dfa_accepts(d, w));
    }
    const Dfa again = dfa::minimize_dfa(m);
    CHECK(again.delta == m.delta);
    CHECK(again.accepting == m.accepting);
}

TEST_CASE("phi4 has four states and phi6 ten") {
    const auto p4 = parse("!b U (a & F b)");
    CHECK(dfa::compile_minimal_dfa(p4.formula, p4.atoms).n_states == 4);
}

TEST_CASE("random formulas: compiler and minimizer preserve the language") {
    CounterRng rng(21);
    const AtomOrder atoms({"a", "b"});
    const auto short_words = oracle::all_words(2, 0, 6);
    for (int i = 0; i < 120; ++i) {
        const Formula f = oracle::random_formula(rng, 4, atoms.names());
        CAPTURE(format_formula(f));
        const Dfa raw = dfa::compile_dfa(f, atoms);
        raw.validate();
        const Dfa min = dfa::minimize_dfa(raw);
        min.validate();
        CHECK(min.n_states <= raw.n_states);
        CHECK(min.initial == 0);
        check_language(f, atoms, raw, 5);
        for (const auto& w : short_words) {
            REQUIRE(dfa::dfa_accepts(min, w) == dfa::dfa_accepts(raw, w));
        }
        for (int k = 0; k < 100; ++k) {
            Word w(7 + rng.below(20));
            for (auto& l : w) {
                l = static_cast<Letter>(rng.below(4));
            }
            REQUIRE(dfa::dfa_accepts(min, w) == dfa::dfa_accepts(raw, w));
        }
    }
}

TEST_CASE("compile budgets") {
    const auto p = parse("F (a & F (b & F c))");
    dfa::CompileOptions tight;
    tight.max_states = 2;
    CHECK_THROWS_AS(dfa::compile_dfa(p.formula, p.atoms, tight), BudgetError);
    dfa::CompileOptions few_atoms;
    few_atoms.max_atoms = 2;
    CHECK_THROWS_AS(dfa::compile_dfa(p.formula, p.atoms, few_atoms), Error);
}

TEST_CASE("progression soundness against the trace semantics") {
    CounterRng rng(22);
    const AtomOrder atoms({"a", "b"});
    const auto words = oracle::all_words(2, 1, 5);
    for (int i = 0; i < 60; ++i) {
        const Formula f = oracle::random_formula(rng, 4, atoms.names());
        CAPTURE(format_formula(f));
        std::map<Letter, Formula> next;
        for (Letter l = 0; l < 4; ++l) {
            next.emplace(l, dfa::progress(f, l, atoms));
        }
        for (const auto& w : words) {
            const Formula& p = next.at(w[0]);
            const bool expected = w.size() == 1 ? dfa::empty_accept(p)
                                                : evaluate_trace(p, atoms, Word(w.begin() + 1, w.end()), 0);
            REQUIRE(evaluate_trace(f, atoms, w, 0) == expected);
        }
    }
}
