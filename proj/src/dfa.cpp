#include "ltlfpomdp/dfa.hpp"

#include "ltlfpomdp/error.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <numeric>
#include <set>

namespace lpomdp::dfa {

namespace {
constexpr std::size_t kUnassigned = std::numeric_limits<std::size_t>::max();
}

std::size_t Dfa::next(std::size_t q, Letter letter) const {
    if (q >= n_states) {
        throw ValidationError("automaton state " + std::to_string(q) + " out of range");
    }
    if (letter >= alphabet_size()) {
        throw ValidationError("letter " + std::to_string(letter) + " outside alphabet of size " +
                              std::to_string(alphabet_size()));
    }
    return delta[q * alphabet_size() + letter];
}

std::size_t Dfa::accepting_count() const {
    return static_cast<std::size_t>(std::count(accepting.begin(), accepting.end(), true));
}

void Dfa::validate() const {
    if (n_states == 0) {
        throw ValidationError("automaton has no states");
    }
    if (initial >= n_states) {
        throw ValidationError("initial state out of range");
    }
    if (accepting.size() != n_states) {
        throw ValidationError("accepting flags do not cover every state");
    }
    if (delta.size() != n_states * alphabet_size()) {
        throw ValidationError("transition table is not total");
    }
    for (std::size_t target : delta) {
        if (target >= n_states) {
            throw ValidationError("transition target out of range");
        }
    }
    if (!annotations.empty() && annotations.size() != n_states) {
        throw ValidationError("annotation count does not match state count");
    }
}

Dfa compile_dfa(const Formula& f, const AtomOrder& atoms, const CompileOptions& options) {
    if (atoms.size() > options.max_atoms) {
        throw BudgetError("atom set of size " + std::to_string(atoms.size()) + " exceeds the limit of " +
                          std::to_string(options.max_atoms));
    }
    for (const auto& name : ltlf::atoms_of(f)) {
        if (!atoms.index_of(name)) {
            throw ValidationError("formula atom '" + name + "' is missing from the atom order");
        }
    }

    Canonicalizer canon(f, atoms);
    const std::size_t sigma = atoms.alphabet_size();

    Dfa d;
    d.name = ltlf::format_formula(f);
    d.atoms = atoms;

    std::unordered_map<Canonicalizer::Key, std::size_t> index;
    std::vector<Canonicalizer::Key> states;
    std::deque<std::size_t> frontier;

    auto intern = [&](Canonicalizer::Key k) {
        auto [it, inserted] = index.emplace(k, states.size());
        if (inserted) {
            if (states.size() >= options.max_states) {
                throw BudgetError("automaton exceeds the state budget of " + std::to_string(options.max_states));
            }
            states.push_back(k);
            frontier.push_back(it->second);
        }
        return it->second;
    };

    d.initial = intern(canon.key(f));
    while (!frontier.empty()) {
        const std::size_t q = frontier.front();
        frontier.pop_front();
        d.delta.resize(std::max(d.delta.size(), (q + 1) * sigma), kUnassigned);
        for (Letter l = 0; l < sigma; ++l) {
            const std::size_t target = intern(canon.progress(states[q], l));
            d.delta[q * sigma + l] = target;
        }
    }

    d.n_states = states.size();
    d.delta.resize(d.n_states * sigma);
    d.accepting.resize(d.n_states);
    d.annotations.resize(d.n_states);
    for (std::size_t q = 0; q < d.n_states; ++q) {
        d.accepting[q] = canon.empty_accept(states[q]);
        d.annotations[q] = ltlf::format_formula(canon.to_formula(states[q]));
    }
    d.validate();
    return d;
}

Dfa minimize_dfa(const Dfa& d) {
    d.validate();
    const std::size_t sigma = d.alphabet_size();

    // Reachable part, renumbered breadth-first.
    std::vector<std::size_t> reach_id(d.n_states, kUnassigned);
    std::vector<std::size_t> reach;
    reach_id[d.initial] = 0;
    reach.push_back(d.initial);
    for (std::size_t i = 0; i < reach.size(); ++i) {
        for (Letter l = 0; l < sigma; ++l) {
            const std::size_t t = d.delta[reach[i] * sigma + l];
            if (reach_id[t] == kUnassigned) {
                reach_id[t] = reach.size();
                reach.push_back(t);
            }
        }
    }
    const std::size_t n = reach.size();
    std::vector<std::size_t> next(n * sigma);
    for (std::size_t i = 0; i < n; ++i) {
        for (Letter l = 0; l < sigma; ++l) {
            next[i * sigma + l] = reach_id[d.delta[reach[i] * sigma + l]];
        }
    }

    // Inverse transitions: pre[l][t] lists sources s with next(s,l) = t.
    std::vector<std::vector<std::vector<std::size_t>>> pre(sigma, std::vector<std::vector<std::size_t>>(n));
    for (std::size_t s = 0; s < n; ++s) {
        for (Letter l = 0; l < sigma; ++l) {
            pre[l][next[s * sigma + l]].push_back(s);
        }
    }

    std::vector<std::vector<std::size_t>> blocks;
    std::vector<std::size_t> block_of(n);
    {
        std::vector<std::size_t> acc, rej;
        for (std::size_t s = 0; s < n; ++s) {
            (d.accepting[reach[s]] ? acc : rej).push_back(s);
        }
        for (auto* part : {&acc, &rej}) {
            if (!part->empty()) {
                for (std::size_t s : *part) {
                    block_of[s] = blocks.size();
                }
                blocks.push_back(std::move(*part));
            }
        }
    }

    std::set<std::size_t> worklist;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        worklist.insert(b);
    }

    std::vector<char> marked(n, 0);
    while (!worklist.empty()) {
        const std::size_t splitter = *worklist.begin();
        worklist.erase(worklist.begin());
        const std::vector<std::size_t> members = blocks[splitter];
        for (Letter l = 0; l < sigma; ++l) {
            std::vector<std::size_t> preimage;
            for (std::size_t t : members) {
                for (std::size_t s : pre[l][t]) {
                    if (!marked[s]) {
                        marked[s] = 1;
                        preimage.push_back(s);
                    }
                }
            }
            std::set<std::size_t> touched;
            for (std::size_t s : preimage) {
                touched.insert(block_of[s]);
            }
            for (std::size_t b : touched) {
                std::vector<std::size_t> in, out;
                for (std::size_t s : blocks[b]) {
                    (marked[s] ? in : out).push_back(s);
                }
                if (out.empty()) {
                    continue;
                }
                const std::size_t fresh = blocks.size();
                blocks[b] = std::move(in);
                blocks.push_back(std::move(out));
                for (std::size_t s : blocks[fresh]) {
                    block_of[s] = fresh;
                }
                if (worklist.count(b)) {
                    worklist.insert(fresh);
                } else {
                    worklist.insert(blocks[b].size() <= blocks[fresh].size() ? b : fresh);
                }
            }
            for (std::size_t s : preimage) {
                marked[s] = 0;
            }
        }
    }

    // Quotient, renumbered breadth-first from the initial block.
    std::vector<std::size_t> new_id(blocks.size(), kUnassigned);
    std::vector<std::size_t> order;
    new_id[block_of[0]] = 0;
    order.push_back(block_of[0]);
    for (std::size_t i = 0; i < order.size(); ++i) {
        const std::size_t rep = *std::min_element(blocks[order[i]].begin(), blocks[order[i]].end());
        for (Letter l = 0; l < sigma; ++l) {
            const std::size_t b = block_of[next[rep * sigma + l]];
            if (new_id[b] == kUnassigned) {
                new_id[b] = order.size();
                order.push_back(b);
            }
        }
    }

    Dfa m;
    m.name = d.name;
    m.atoms = d.atoms;
    m.n_states = order.size();
    m.initial = 0;
    m.accepting.resize(m.n_states);
    m.delta.resize(m.n_states * sigma);
    if (!d.annotations.empty()) {
        m.annotations.resize(m.n_states);
    }
    for (std::size_t q = 0; q < m.n_states; ++q) {
        const auto& members = blocks[order[q]];
        const std::size_t rep = *std::min_element(members.begin(), members.end());
        m.accepting[q] = d.accepting[reach[rep]];
        for (Letter l = 0; l < sigma; ++l) {
            m.delta[q * sigma + l] = new_id[block_of[next[rep * sigma + l]]];
        }
        if (!d.annotations.empty()) {
            m.annotations[q] = d.annotations[reach[rep]];
        }
    }
    m.validate();
    return m;
}

Dfa compile_minimal_dfa(const Formula& f, const AtomOrder& atoms, const CompileOptions& options) {
    return minimize_dfa(compile_dfa(f, atoms, options));
}

std::size_t dfa_run(const Dfa& d, const Word& w) {
    std::size_t q = d.initial;
    for (Letter l : w) {
        q = d.next(q, l);
    }
    return q;
}

bool dfa_accepts(const Dfa& d, const Word& w) { return d.is_accepting(dfa_run(d, w)); }

} // namespace lpomdp::dfa
