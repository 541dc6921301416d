#pragma once

// JSON file formats for models, automata, products and policies.

#include "ltlfpomdp/dfa.hpp"
#include "ltlfpomdp/pbvi.hpp"
#include "ltlfpomdp/pomdp.hpp"
#include "ltlfpomdp/product.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace lpomdp::io {

using Json = nlohmann::json;

/// Model document: name, atoms, states, actions, observations, initial,
/// labels, transitions, observe, rewards, stopping. Probabilities may be
/// numbers or decimal strings; rows off by more than 1e-6 are rejected.
pomdp::LabeledPomdp model_from_json(const Json& doc);
Json model_to_json(const pomdp::LabeledPomdp& m);

dfa::Dfa dfa_from_json(const Json& doc);
Json dfa_to_json(const dfa::Dfa& d);
std::string dfa_to_dot(const dfa::Dfa& d);

/// Model document over product states plus `final_reward` and `provenance`.
Json product_to_json(const product::ProductPomdp& prod, const std::string& model_id, const std::string& dfa_id);

Json policy_to_json(const pbvi::AlphaPolicy& p);
pbvi::AlphaPolicy policy_from_json(const Json& doc);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);

pomdp::LabeledPomdp load_model(const std::filesystem::path& path);
void save_model(const std::filesystem::path& path, const pomdp::LabeledPomdp& m);

} // namespace lpomdp::io
