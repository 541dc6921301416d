#include "ltlfpomdp/dfa.hpp"

#include "ltlfpomdp/error.hpp"

namespace lpomdp::dfa {

using ltlf::Op;

bool empty_accept(const Formula& f) {
    switch (f.op()) {
    case Op::True: return true;
    case Op::False: return false;
    case Op::Atom: return false;
    case Op::Not: return !empty_accept(f.child());
    case Op::And: return empty_accept(f.lhs()) && empty_accept(f.rhs());
    case Op::Or: return empty_accept(f.lhs()) || empty_accept(f.rhs());
    case Op::Implies: return !empty_accept(f.lhs()) || empty_accept(f.rhs());
    case Op::Next: return false;
    case Op::WeakNext: return true;
    case Op::Eventually: return false;
    case Op::Always: return true;
    case Op::Until: return false;
    case Op::Release: return true;
    }
    return false;
}

namespace {

const Formula& alive_marker() {
    static const Formula marker = ltlf::make_eventually(ltlf::make_true());
    return marker;
}

void register_closure(const Formula& f, std::vector<Formula>& order) {
    if (ltlf::is_temporal_root(f.op())) {
        order.push_back(f);
    }
    const int n = ltlf::arity(f.op());
    if (n >= 1) {
        register_closure(f.lhs(), order);
    }
    if (n == 2) {
        register_closure(f.rhs(), order);
    }
}

} // namespace

Canonicalizer::Canonicalizer(const Formula& source, AtomOrder atoms) : atoms_(std::move(atoms)) {
    std::vector<Formula> closure;
    register_closure(source, closure);
    for (const auto& f : closure) {
        variable(f);
    }
    variable(alive_marker());
}

std::uint32_t Canonicalizer::variable(const Formula& temporal_atom) {
    std::string text = ltlf::format_formula(temporal_atom);
    auto it = var_index_.find(text);
    if (it != var_index_.end()) {
        return it->second;
    }
    if (temporal_atom.op() == Op::Atom && !atoms_.index_of(temporal_atom.atom_name())) {
        throw ValidationError("atom '" + temporal_atom.atom_name() + "' is not in the atom set");
    }
    const auto index = static_cast<std::uint32_t>(vars_.size());
    vars_.push_back(temporal_atom);
    var_empty_value_.push_back(dfa::empty_accept(temporal_atom));
    var_index_.emplace(std::move(text), index);
    return index;
}

Canonicalizer::Key Canonicalizer::key(const Formula& f) {
    switch (f.op()) {
    case Op::True: return bdd::kTrue;
    case Op::False: return bdd::kFalse;
    case Op::Not: return mgr_.negate(key(f.child()));
    case Op::And: return mgr_.conj(key(f.lhs()), key(f.rhs()));
    case Op::Or: return mgr_.disj(key(f.lhs()), key(f.rhs()));
    case Op::Implies: return mgr_.disj(mgr_.negate(key(f.lhs())), key(f.rhs()));
    default: return mgr_.var(variable(f));
    }
}

Canonicalizer::Key Canonicalizer::progress_variable(std::uint32_t var, Letter letter) {
    auto cached = variable_cache_.find({var, letter});
    if (cached != variable_cache_.end()) {
        return cached->second;
    }
    const Formula f = vars_[var];
    Key result = bdd::kFalse;
    switch (f.op()) {
    case Op::Atom: {
        const auto idx = *atoms_.index_of(f.atom_name());
        result = ((letter >> idx) & 1U) ? bdd::kTrue : bdd::kFalse;
        break;
    }
    case Op::Next:
        // The obligation moves to the next position, which must exist.
        result = mgr_.conj(key(f.child()), key(alive_marker()));
        break;
    case Op::WeakNext:
        result = mgr_.disj(key(f.child()), mgr_.negate(key(alive_marker())));
        break;
    case Op::Eventually:
        result = mgr_.disj(progress(key(f.child()), letter), mgr_.var(var));
        break;
    case Op::Always:
        result = mgr_.conj(progress(key(f.child()), letter), mgr_.var(var));
        break;
    case Op::Until: {
        const Key now = progress(key(f.rhs()), letter);
        const Key hold = progress(key(f.lhs()), letter);
        result = mgr_.disj(now, mgr_.conj(hold, mgr_.var(var)));
        break;
    }
    case Op::Release: {
        const Key now = progress(key(f.rhs()), letter);
        const Key stop = progress(key(f.lhs()), letter);
        result = mgr_.conj(now, mgr_.disj(stop, mgr_.var(var)));
        break;
    }
    default:
        throw std::logic_error("non-temporal formula registered as a decision variable");
    }
    variable_cache_.emplace(std::make_pair(var, letter), result);
    return result;
}

Canonicalizer::Key Canonicalizer::progress(Key k, Letter letter) {
    if (mgr_.is_constant(k)) {
        return k;
    }
    auto cached = progress_cache_.find({k, letter});
    if (cached != progress_cache_.end()) {
        return cached->second;
    }
    const std::uint32_t v = mgr_.top_var(k);
    const Key hi = mgr_.high(k);
    const Key lo = mgr_.low(k);
    const Key pv = progress_variable(v, letter);
    const Key phi = progress(hi, letter);
    const Key plo = progress(lo, letter);
    const Key result = mgr_.ite(pv, phi, plo);
    progress_cache_.emplace(std::make_pair(k, letter), result);
    return result;
}

bool Canonicalizer::empty_accept(Key k) const {
    while (!mgr_.is_constant(k)) {
        k = var_empty_value_[mgr_.top_var(k)] ? mgr_.high(k) : mgr_.low(k);
    }
    return k == bdd::kTrue;
}

Formula Canonicalizer::to_formula(Key k) const {
    if (k == bdd::kTrue) {
        return ltlf::make_true();
    }
    if (k == bdd::kFalse) {
        return ltlf::make_false();
    }
    const Formula v = vars_[mgr_.top_var(k)];
    const Key hi = mgr_.high(k);
    const Key lo = mgr_.low(k);
    if (hi == bdd::kTrue && lo == bdd::kFalse) return v;
    if (hi == bdd::kFalse && lo == bdd::kTrue) return ltlf::make_not(v);
    if (lo == bdd::kFalse) return ltlf::make_and(v, to_formula(hi));
    if (hi == bdd::kFalse) return ltlf::make_and(ltlf::make_not(v), to_formula(lo));
    if (hi == bdd::kTrue) return ltlf::make_or(v, to_formula(lo));
    if (lo == bdd::kTrue) return ltlf::make_or(ltlf::make_not(v), to_formula(hi));
    return ltlf::make_or(ltlf::make_and(v, to_formula(hi)), ltlf::make_and(ltlf::make_not(v), to_formula(lo)));
}

Formula progress(const Formula& f, Letter letter, const AtomOrder& atoms) {
    Canonicalizer canon(f, atoms);
    return canon.to_formula(canon.progress(canon.key(f), letter));
}

} // namespace lpomdp::dfa
