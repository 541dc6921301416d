#include "ltlfpomdp/bdd.hpp"

#include <algorithm>
#include <limits>

namespace lpomdp::bdd {

namespace {
constexpr std::uint32_t kTerminalVar = std::numeric_limits<std::uint32_t>::max();
}

std::size_t Manager::KeyHash::operator()(const Key& k) const noexcept {
    std::uint64_t h = k.var;
    h = h * 0x9E3779B97F4A7C15ULL ^ k.low;
    h = h * 0x9E3779B97F4A7C15ULL ^ k.high;
    h ^= h >> 31;
    return static_cast<std::size_t>(h);
}

Manager::Manager() {
    nodes_.push_back({kTerminalVar, kFalse, kFalse});
    nodes_.push_back({kTerminalVar, kTrue, kTrue});
}

std::uint32_t Manager::level(Ref f) const noexcept { return nodes_[f].var; }

Ref Manager::make(std::uint32_t var, Ref low, Ref high) {
    if (low == high) {
        return low;
    }
    Key key{var, low, high};
    auto it = unique_.find(key);
    if (it != unique_.end()) {
        return it->second;
    }
    const Ref ref = static_cast<Ref>(nodes_.size());
    nodes_.push_back({var, low, high});
    unique_.emplace(key, ref);
    return ref;
}

Ref Manager::var(std::uint32_t index) { return make(index, kFalse, kTrue); }

Ref Manager::cofactor(Ref f, std::uint32_t var, bool value) const {
    if (level(f) != var) {
        return f;
    }
    return value ? nodes_[f].high : nodes_[f].low;
}

Ref Manager::ite(Ref c, Ref t, Ref e) {
    if (c == kTrue) return t;
    if (c == kFalse) return e;
    if (t == e) return t;
    if (t == kTrue && e == kFalse) return c;

    Key key{c, t, e};
    auto it = ite_cache_.find(key);
    if (it != ite_cache_.end()) {
        return it->second;
    }
    const std::uint32_t v = std::min({level(c), level(t), level(e)});
    const Ref lo = ite(cofactor(c, v, false), cofactor(t, v, false), cofactor(e, v, false));
    const Ref hi = ite(cofactor(c, v, true), cofactor(t, v, true), cofactor(e, v, true));
    const Ref r = make(v, lo, hi);
    ite_cache_.emplace(key, r);
    return r;
}

Ref Manager::negate(Ref f) { return ite(f, kFalse, kTrue); }
Ref Manager::conj(Ref f, Ref g) { return ite(f, g, kFalse); }
Ref Manager::disj(Ref f, Ref g) { return ite(f, kTrue, g); }

} // namespace lpomdp::bdd
