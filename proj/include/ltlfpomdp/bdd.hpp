#pragma once

// Minimal reduced ordered binary decision diagrams. Variables are ordered by
// index (smaller index nearer the root). Node handles are stable for the
// lifetime of the manager; two handles are equal iff they denote the same
// boolean function.

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <vector>

namespace lpomdp::bdd {

using Ref = std::uint32_t;

inline constexpr Ref kFalse = 0;
inline constexpr Ref kTrue = 1;

class Manager {
public:
    Manager();

    Ref var(std::uint32_t index);
    Ref negate(Ref f);
    Ref conj(Ref f, Ref g);
    Ref disj(Ref f, Ref g);
    Ref ite(Ref cond, Ref then_branch, Ref else_branch);

    bool is_constant(Ref f) const noexcept { return f <= kTrue; }
    std::uint32_t top_var(Ref f) const { return nodes_[f].var; }
    Ref low(Ref f) const { return nodes_[f].low; }
    Ref high(Ref f) const { return nodes_[f].high; }

    std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    struct Node {
        std::uint32_t var;
        Ref low;
        Ref high;
    };
    struct Key {
        std::uint32_t var;
        Ref low;
        Ref high;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        std::size_t operator()(const Key& k) const noexcept;
    };

    Ref make(std::uint32_t var, Ref low, Ref high);
    std::uint32_t level(Ref f) const noexcept;
    Ref cofactor(Ref f, std::uint32_t var, bool value) const;

    std::vector<Node> nodes_;
    std::unordered_map<Key, Ref, KeyHash> unique_;
    std::unordered_map<Key, Ref, KeyHash> ite_cache_;
};

} // namespace lpomdp::bdd
