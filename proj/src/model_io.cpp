#include "ltlfpomdp/io.hpp"

#include "ltlfpomdp/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace lpomdp::io {

namespace {

using NameIndex = std::map<std::string, std::size_t>;

const Json& field(const Json& doc, const char* key) {
    if (!doc.is_object() || !doc.contains(key)) {
        throw ValidationError(std::string("missing field '") + key + "'");
    }
    return doc.at(key);
}

std::vector<std::string> name_list(const Json& doc, const char* key) {
    const Json& arr = field(doc, key);
    if (!arr.is_array()) {
        throw ValidationError(std::string("field '") + key + "' must be a list");
    }
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string()) {
            throw ValidationError(std::string("field '") + key + "' must hold strings");
        }
        out.push_back(v.get<std::string>());
    }
    return out;
}

NameIndex index_names(const std::vector<std::string>& names, const char* what) {
    NameIndex idx;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (!idx.emplace(names[i], i).second) {
            throw ValidationError(std::string("duplicate ") + what + " '" + names[i] + "'");
        }
    }
    return idx;
}

std::size_t lookup(const NameIndex& idx, const Json& name, const char* what) {
    if (!name.is_string()) {
        throw ValidationError(std::string(what) + " reference must be a string");
    }
    auto it = idx.find(name.get<std::string>());
    if (it == idx.end()) {
        throw ValidationError(std::string("unknown ") + what + " '" + name.get<std::string>() + "'");
    }
    return it->second;
}

double number(const Json& v, const std::string& context) {
    if (v.is_number()) {
        return v.get<double>();
    }
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        double out = 0.0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec == std::errc() && ptr == s.data() + s.size() && !s.empty()) {
            return out;
        }
    }
    throw ValidationError(context + ": expected a number or decimal string");
}

pomdp::SparseDist distribution(const Json& obj, const NameIndex& idx, const char* what, const std::string& context) {
    if (!obj.is_object()) {
        throw ValidationError(context + ": expected a map from " + what + " to probability");
    }
    pomdp::SparseDist d;
    for (const auto& [name, p] : obj.items()) {
        d.push_back({lookup(idx, Json(name), what), number(p, context)});
    }
    pomdp::canonicalize(d);
    return d;
}

Json distribution_json(const pomdp::SparseDist& d, const std::vector<std::string>& names) {
    Json out = Json::object();
    for (const auto& e : d) {
        out[names.at(e.index)] = e.prob;
    }
    return out;
}

pomdp::StoppingModel stopping_from_json(const Json& doc) {
    const std::string kind = field(doc, "kind").get<std::string>();
    if (kind == "fixed") {
        const Json& t = field(doc, "T");
        if (!t.is_number_integer() || t.get<long long>() < 0) {
            throw ValidationError("stopping T must be a nonnegative integer");
        }
        return pomdp::StoppingModel::fixed(t.get<std::size_t>());
    }
    if (kind == "geometric") {
        return pomdp::StoppingModel::geometric(number(field(doc, "gamma"), "stopping gamma"));
    }
    throw ValidationError("unknown stopping kind '" + kind + "'");
}

Json stopping_to_json(const pomdp::StoppingModel& s) {
    if (s.is_fixed()) {
        return {{"kind", "fixed"}, {"T", s.horizon}};
    }
    return {{"kind", "geometric"}, {"gamma", s.gamma}};
}

Json letter_json(const ltlf::AtomOrder& atoms, ltlf::Letter l) {
    Json out = Json::array();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (l & (1u << i)) {
            out.push_back(atoms.names()[i]);
        }
    }
    return out;
}

} // namespace

pomdp::LabeledPomdp model_from_json(const Json& doc) {
    try {
        pomdp::LabeledPomdp m;
        m.name = doc.value("name", std::string("model"));
        m.atoms = ltlf::AtomOrder(name_list(doc, "atoms"));
        m.state_names = name_list(doc, "states");
        m.action_names = name_list(doc, "actions");
        m.observation_names = name_list(doc, "observations");
        const NameIndex states = index_names(m.state_names, "state");
        const NameIndex actions = index_names(m.action_names, "action");
        const NameIndex observations = index_names(m.observation_names, "observation");

        pomdp::Pomdp& p = m.dynamics;
        p.n_states = m.state_names.size();
        p.n_actions = m.action_names.size();
        p.n_observations = m.observation_names.size();
        p.transitions.assign(p.n_states * p.n_actions, {});
        p.observations.assign(p.n_states, {});
        p.rewards.assign(p.n_states * p.n_actions, 0.0);
        p.initial = distribution(field(doc, "initial"), states, "state", "initial distribution");

        m.labels.assign(p.n_states, 0);
        if (doc.contains("labels")) {
            for (const auto& [s, atoms] : doc.at("labels").items()) {
                std::vector<std::string> present;
                for (const auto& a : atoms) {
                    present.push_back(a.get<std::string>());
                }
                m.labels[lookup(states, Json(s), "state")] = ltlf::make_letter(m.atoms, present);
            }
        }

        std::vector<char> seen(p.n_states * p.n_actions, 0);
        for (const auto& row : field(doc, "transitions")) {
            const std::size_t s = lookup(states, field(row, "state"), "state");
            const std::size_t a = lookup(actions, field(row, "action"), "action");
            const std::string ctx = "transition row (" + m.state_names[s] + ", " + m.action_names[a] + ")";
            if (seen[s * p.n_actions + a]++) {
                throw ValidationError(ctx + " is listed twice");
            }
            p.transitions[s * p.n_actions + a] = distribution(field(row, "next"), states, "state", ctx);
        }
        for (const auto& [s, dist] : field(doc, "observe").items()) {
            const std::size_t si = lookup(states, Json(s), "state");
            p.observations[si] = distribution(dist, observations, "observation", "observation row " + s);
        }
        if (doc.contains("rewards")) {
            for (const auto& row : doc.at("rewards")) {
                const std::size_t s = lookup(states, field(row, "state"), "state");
                const std::size_t a = lookup(actions, field(row, "action"), "action");
                p.rewards[s * p.n_actions + a] = number(field(row, "value"), "reward");
            }
        }
        p.stopping = stopping_from_json(field(doc, "stopping"));

        for (std::size_t s = 0; s < p.n_states; ++s) {
            for (std::size_t a = 0; a < p.n_actions; ++a) {
                if (p.transition(s, a).empty()) {
                    throw ValidationError("transition row (" + m.state_names[s] + ", " + m.action_names[a] +
                                          ") is missing");
                }
                const double mass = pomdp::total_mass(p.transition(s, a));
                if (std::abs(mass - 1.0) > 1e-6) {
                    throw ValidationError("transition row (" + m.state_names[s] + ", " + m.action_names[a] +
                                          ") sums to " + std::to_string(mass) + ", not 1");
                }
            }
        }
        m.validate(1e-6);
        return m;
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed model document: ") + e.what());
    }
}

Json model_to_json(const pomdp::LabeledPomdp& m) {
    const pomdp::Pomdp& p = m.dynamics;
    Json doc;
    doc["name"] = m.name;
    doc["atoms"] = m.atoms.names();
    doc["states"] = m.state_names;
    doc["actions"] = m.action_names;
    doc["observations"] = m.observation_names;
    doc["initial"] = distribution_json(p.initial, m.state_names);
    Json labels = Json::object();
    for (std::size_t s = 0; s < p.n_states; ++s) {
        if (m.labels[s] != 0) {
            labels[m.state_names[s]] = letter_json(m.atoms, m.labels[s]);
        }
    }
    doc["labels"] = labels;
    Json transitions = Json::array();
    Json rewards = Json::array();
    for (std::size_t s = 0; s < p.n_states; ++s) {
        for (std::size_t a = 0; a < p.n_actions; ++a) {
            transitions.push_back({{"state", m.state_names[s]},
                                   {"action", m.action_names[a]},
                                   {"next", distribution_json(p.transition(s, a), m.state_names)}});
            if (p.reward(s, a) != 0.0) {
                rewards.push_back({{"state", m.state_names[s]}, {"action", m.action_names[a]}, {"value", p.reward(s, a)}});
            }
        }
    }
    doc["transitions"] = transitions;
    Json observe = Json::object();
    for (std::size_t s = 0; s < p.n_states; ++s) {
        observe[m.state_names[s]] = distribution_json(p.observations[s], m.observation_names);
    }
    doc["observe"] = observe;
    doc["rewards"] = rewards;
    doc["stopping"] = stopping_to_json(p.stopping);
    return doc;
}

dfa::Dfa dfa_from_json(const Json& doc) {
    try {
        dfa::Dfa d;
        d.name = doc.value("name", std::string("dfa"));
        d.atoms = ltlf::AtomOrder(name_list(doc, "atoms"));
        d.n_states = field(doc, "n_states").get<std::size_t>();
        d.initial = field(doc, "initial").get<std::size_t>();
        d.accepting.assign(d.n_states, false);
        for (const auto& q : field(doc, "accepting")) {
            const std::size_t qi = q.get<std::size_t>();
            if (qi >= d.n_states) {
                throw ValidationError("accepting state out of range");
            }
            d.accepting[qi] = true;
        }
        const Json& delta = field(doc, "delta");
        if (delta.size() != d.n_states) {
            throw ValidationError("delta must have one row per state");
        }
        for (const auto& row : delta) {
            if (row.size() != d.alphabet_size()) {
                throw ValidationError("delta row must have one entry per letter");
            }
            for (const auto& q : row) {
                d.delta.push_back(q.get<std::size_t>());
            }
        }
        if (doc.contains("annotations")) {
            d.annotations = doc.at("annotations").get<std::vector<std::string>>();
        }
        d.validate();
        return d;
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed automaton document: ") + e.what());
    }
}

Json dfa_to_json(const dfa::Dfa& d) {
    Json doc;
    doc["name"] = d.name;
    doc["atoms"] = d.atoms.names();
    doc["n_states"] = d.n_states;
    doc["initial"] = d.initial;
    Json acc = Json::array();
    for (std::size_t q = 0; q < d.n_states; ++q) {
        if (d.accepting[q]) {
            acc.push_back(q);
        }
    }
    doc["accepting"] = acc;
    Json delta = Json::array();
    for (std::size_t q = 0; q < d.n_states; ++q) {
        Json row = Json::array();
        for (std::size_t l = 0; l < d.alphabet_size(); ++l) {
            row.push_back(d.delta[q * d.alphabet_size() + l]);
        }
        delta.push_back(row);
    }
    doc["delta"] = delta;
    if (!d.annotations.empty()) {
        doc["annotations"] = d.annotations;
    }
    return doc;
}

std::string dfa_to_dot(const dfa::Dfa& d) {
    auto letter_text = [&](std::size_t l) {
        std::string s = "{";
        for (std::size_t i = 0; i < d.atoms.size(); ++i) {
            if (l & (std::size_t{1} << i)) {
                s += (s.size() > 1 ? "," : "") + d.atoms.names()[i];
            }
        }
        return s + "}";
    };
    std::ostringstream out;
    out << "digraph \"" << d.name << "\" {\n  rankdir=LR;\n  init [shape=point];\n";
    for (std::size_t q = 0; q < d.n_states; ++q) {
        out << "  q" << q << " [shape=" << (d.accepting[q] ? "doublecircle" : "circle");
        if (q < d.annotations.size()) {
            std::string label = d.annotations[q];
            std::string escaped;
            for (char c : label) {
                if (c == '"' || c == '\\') {
                    escaped += '\\';
                }
                escaped += c;
            }
            out << ", tooltip=\"" << escaped << "\"";
        }
        out << "];\n";
    }
    out << "  init -> q" << d.initial << ";\n";
    // One edge per (source, target) with all letters that take it.
    for (std::size_t q = 0; q < d.n_states; ++q) {
        std::map<std::size_t, std::vector<std::string>> edges;
        for (std::size_t l = 0; l < d.alphabet_size(); ++l) {
            edges[d.delta[q * d.alphabet_size() + l]].push_back(letter_text(l));
        }
        for (const auto& [target, letters] : edges) {
            out << "  q" << q << " -> q" << target << " [label=\"";
            for (std::size_t i = 0; i < letters.size(); ++i) {
                out << (i ? " " : "") << letters[i];
            }
            out << "\"];\n";
        }
    }
    out << "}\n";
    return out.str();
}

Json product_to_json(const product::ProductPomdp& prod, const std::string& model_id, const std::string& dfa_id) {
    const auto& base = prod.base();
    pomdp::LabeledPomdp view;
    view.name = base.name + "_x_" + prod.automaton().name;
    view.atoms = base.atoms;
    view.action_names = base.action_names;
    view.observation_names = base.observation_names;
    view.dynamics = prod.core();
    for (std::size_t x = 0; x < prod.n_states(); ++x) {
        view.state_names.push_back(base.state_names[prod.base_state(x)] + "|q" + std::to_string(prod.automaton_state(x)));
        view.labels.push_back(base.labels[prod.base_state(x)]);
    }
    Json doc = model_to_json(view);
    Json fr = Json::object();
    for (std::size_t x = 0; x < prod.n_states(); ++x) {
        fr[view.state_names[x]] = static_cast<int>(prod.final_reward()[x]);
    }
    doc["final_reward"] = fr;
    doc["provenance"] = {{"model", model_id}, {"dfa", dfa_id}, {"automaton_states", prod.automaton().n_states},
                         {"pruned", prod.pruned()}};
    return doc;
}

Json policy_to_json(const pbvi::AlphaPolicy& p) {
    auto set_json = [](const pbvi::AlphaSet& set) {
        Json arr = Json::array();
        for (const auto& a : set) {
            arr.push_back({{"action", a.action}, {"values", a.values}});
        }
        return arr;
    };
    Json doc;
    doc["n_states"] = p.n_states;
    doc["converged"] = p.converged;
    doc["rounds"] = p.rounds;
    doc["belief_count"] = p.belief_count;
    if (p.kind == pbvi::AlphaPolicy::Kind::Stationary) {
        doc["kind"] = "stationary";
        doc["gamma"] = p.discount;
        doc["alphas"] = set_json(p.stages.at(0));
    } else {
        doc["kind"] = "time_indexed";
        doc["T"] = p.horizon;
        Json stages = Json::array();
        for (const auto& s : p.stages) {
            stages.push_back(set_json(s));
        }
        doc["stages"] = stages;
    }
    return doc;
}

pbvi::AlphaPolicy policy_from_json(const Json& doc) {
    try {
        pbvi::AlphaPolicy p;
        p.n_states = field(doc, "n_states").get<std::size_t>();
        p.converged = doc.value("converged", true);
        p.rounds = doc.value("rounds", std::size_t{0});
        p.belief_count = doc.value("belief_count", std::size_t{0});
        auto read_set = [&](const Json& arr) {
            pbvi::AlphaSet set;
            for (const auto& a : arr) {
                pbvi::AlphaVector v{field(a, "action").get<std::size_t>(), field(a, "values").get<std::vector<double>>()};
                if (v.values.size() != p.n_states) {
                    throw ValidationError("alpha vector length does not match n_states");
                }
                set.push_back(std::move(v));
            }
            if (set.empty()) {
                throw ValidationError("alpha set is empty");
            }
            return set;
        };
        const std::string kind = field(doc, "kind").get<std::string>();
        if (kind == "stationary") {
            p.kind = pbvi::AlphaPolicy::Kind::Stationary;
            p.discount = field(doc, "gamma").get<double>();
            p.stages.push_back(read_set(field(doc, "alphas")));
        } else if (kind == "time_indexed") {
            p.kind = pbvi::AlphaPolicy::Kind::TimeIndexed;
            p.horizon = field(doc, "T").get<std::size_t>();
            for (const auto& s : field(doc, "stages")) {
                p.stages.push_back(read_set(s));
            }
            if (p.stages.size() != p.horizon + 1) {
                throw ValidationError("time-indexed policy needs T + 1 stages");
            }
        } else {
            throw ValidationError("unknown policy kind '" + kind + "'");
        }
        return p;
    } catch (const Json::exception& e) {
        throw ValidationError(std::string("malformed policy document: ") + e.what());
    }
}

Json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("cannot open " + path.string());
    }
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error("cannot write " + path.string());
    }
    out << text;
}

void write_json(const std::filesystem::path& path, const Json& doc) { write_text(path, doc.dump(2) + "\n"); }

pomdp::LabeledPomdp load_model(const std::filesystem::path& path) { return model_from_json(read_json(path)); }

void save_model(const std::filesystem::path& path, const pomdp::LabeledPomdp& m) { write_json(path, model_to_json(m)); }

} // namespace lpomdp::io
