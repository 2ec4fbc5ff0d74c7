#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ntt/theory.hpp"

namespace ntt {

namespace detail {

/// True when no bound variable with index < `below` (relative to t) occurs in t.
inline bool avoids_bound_below(const TermPtr& t, std::uint32_t below, std::uint32_t depth = 0) {
  if (t->loose <= depth) return true;
  switch (t->kind) {
    case TermKind::bound: return t->index < depth || t->index - depth >= below;
    case TermKind::lambda:
      return avoids_bound_below(t->body(), below, depth + static_cast<std::uint32_t>(t->binder_count()));
    default:
      for (const auto& a : t->args)
        if (!avoids_bound_below(a, below, depth)) return false;
      return true;
  }
}

/// Builds the body of an abstraction `\y1..yk. body` such that applying it
/// to the bound variables `vars` (indices at pattern depth `depth`) gives `s`.
/// Fails when `s` mentions another variable bound inside the pattern.
inline std::optional<TermPtr> miller_abstract(const TermPtr& s, const std::vector<std::uint32_t>& vars,
                                              std::uint32_t depth, std::uint32_t local = 0) {
  if (s->loose <= local) return shift(s, static_cast<int>(vars.size()), local);
  const auto k = static_cast<std::uint32_t>(vars.size());
  switch (s->kind) {
    case TermKind::bound: {
      if (s->index < local) return s;
      std::uint32_t idx = s->index - local;
      for (std::uint32_t i = 0; i < k; ++i)
        if (vars[i] == idx) return mk_bound(k - 1 - i + local);
      if (idx < depth) return std::nullopt;
      return mk_bound(idx - depth + k + local);
    }
    case TermKind::lambda: {
      auto b = miller_abstract(s->body(), vars, depth, local + static_cast<std::uint32_t>(s->binder_count()));
      if (!b) return std::nullopt;
      return with_args(s, {*b});
    }
    default: {
      std::vector<TermPtr> args;
      for (const auto& a : s->args) {
        auto r = miller_abstract(a, vars, depth, local);
        if (!r) return std::nullopt;
        args.push_back(*r);
      }
      return with_args(s, std::move(args));
    }
  }
}

/// Bound variables that are pattern-internal (index < depth) and distinct.
inline std::optional<std::vector<std::uint32_t>> miller_vars(const TermPtr& p, std::uint32_t depth) {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 1; i < p->args.size(); ++i) {
    const auto& a = p->args[i];
    if (a->kind != TermKind::bound || a->index >= depth) return std::nullopt;
    if (std::find(out.begin(), out.end(), a->index) != out.end()) return std::nullopt;
    out.push_back(a->index);
  }
  return out;
}

inline bool is_flexible(const TermPtr& p) {
  return p->kind == TermKind::meta || (p->kind == TermKind::apply && p->args.front()->kind == TermKind::meta);
}

}  // namespace detail

/// Normalization and matching modulo the structural equations of a theory.
class Rewriter {
 public:
  explicit Rewriter(Theory th) : th_(std::move(th)) {}

  const Theory& theory() const { return th_; }

  // -- canonical forms -------------------------------------------------------

  /// Canonical representative of the congruence class of `t`: associative
  /// operators flattened, units dropped, commutative arguments sorted, then
  /// active oriented and permutative equations applied to a fixpoint.
  TermPtr canonicalize(const TermPtr& t) const {
    if (t->args.empty() && t->kind != TermKind::op) return t;
    if (auto it = cache_.find(t); it != cache_.end()) return it->second;
    // An equation whose right side rebuilds the term being normalized would
    // recurse forever; that equation instance is abandoned instead.
    if (!in_progress_.insert(t).second) throw Cycle{};
    TermPtr r;
    try {
      r = canon_node(t);
    } catch (...) {
      in_progress_.erase(t);
      throw;
    }
    in_progress_.erase(t);
    if (cache_.size() > 400000) cache_.clear();
    cache_.emplace(t, r);
    if (!equal(r, t)) cache_.emplace(r, r);
    return r;
  }

  bool congruent(const TermPtr& a, const TermPtr& b) const { return equal(canonicalize(a), canonicalize(b)); }

  /// Components of `t` viewed as an element of the free monoid of `op`.
  std::vector<TermPtr> components(const std::string& op, const TermPtr& t) const {
    const AcInfo* ac = th_.ac(op);
    if (t->kind == TermKind::op && t->name == op) return t->args;
    if (ac && !ac->unit.empty() && t->kind == TermKind::op && t->name == ac->unit && t->args.empty()) return {};
    return {t};
  }

  /// Canonical term built from already-canonical components of an associative operator.
  TermPtr build(const std::string& op, const std::vector<TermPtr>& comps) const {
    return apply_equations(assemble(op, comps));
  }

  // -- matching ----------------------------------------------------------------

  /// All assignments σ with canonicalize(σ(pattern)) = subject, deduplicated and sorted.
  std::vector<Assignment> match(const TermPtr& pattern, const TermPtr& subject) const {
    std::vector<Assignment> out;
    Assignment a;
    match_rec(pattern, subject, 0, a, [&](const Assignment& r) { out.push_back(r); });
    std::sort(out.begin(), out.end(), [](const Assignment& x, const Assignment& y) { return compare(x, y) < 0; });
    out.erase(std::unique(out.begin(), out.end(), [](const Assignment& x, const Assignment& y) { return equal(x, y); }),
              out.end());
    return out;
  }

  bool matches(const TermPtr& pattern, const TermPtr& subject) const {
    bool found = false;
    Assignment a;
    try {
      match_rec(pattern, subject, 0, a, [&](const Assignment&) {
        found = true;
        throw Found{};
      });
    } catch (const Found&) {
    }
    return found;
  }

 private:
  struct Found {};
  struct Cycle {};
  using Cont = std::function<void(Assignment&)>;

  TermPtr assemble(const std::string& op, std::vector<TermPtr> comps) const {
    const AcInfo* ac = th_.ac(op);
    std::vector<TermPtr> flat;
    for (const auto& c : comps) {
      if (c->kind == TermKind::op && c->name == op && ac && ac->associative) {
        flat.insert(flat.end(), c->args.begin(), c->args.end());
      } else if (ac && !ac->unit.empty() && c->kind == TermKind::op && c->name == ac->unit && c->args.empty()) {
        continue;
      } else {
        flat.push_back(c);
      }
    }
    if (ac && ac->commutative) std::sort(flat.begin(), flat.end(), TermLess{});
    if (flat.empty()) {
      if (ac && !ac->unit.empty()) return mk_op(ac->unit);
      return mk_op(op);
    }
    if (flat.size() == 1 && ac && (ac->associative || !ac->unit.empty())) return flat[0];
    return mk_op(op, std::move(flat));
  }

  TermPtr canon_node(const TermPtr& t) const {
    switch (t->kind) {
      case TermKind::lambda: return with_args(t, {canonicalize(t->body())});
      case TermKind::apply:
      case TermKind::tuple: {
        std::vector<TermPtr> args;
        for (const auto& a : t->args) args.push_back(canonicalize(a));
        return with_args(t, std::move(args));
      }
      case TermKind::op: {
        std::vector<TermPtr> args;
        for (const auto& a : t->args) args.push_back(canonicalize(a));
        if (th_.ac(t->name)) return apply_equations(assemble(t->name, std::move(args)));
        return apply_equations(with_args(t, std::move(args)));
      }
      default: return t;
    }
  }

  TermPtr apply_equations(TermPtr t) const {
    // matching a flexible segment can rebuild the very term being normalized
    if (!eq_in_progress_.insert(t).second) return t;
    struct Release {
      TermSet& set;
      TermPtr key;
      ~Release() { set.erase(key); }
    } release{eq_in_progress_, t};
    for (int guard = 0; guard < 10000; ++guard) {
      bool changed = false;
      for (const auto& eq : th_.equations) {
        if (eq.kind != EquationKind::oriented && eq.kind != EquationKind::permutative) continue;
        if (!th_.equation_active(eq)) continue;
        if (eq.lhs->kind == TermKind::op && (t->kind != TermKind::op || t->name != eq.lhs->name)) continue;
        for (const auto& a : match(eq.lhs, t)) {
          TermPtr r;
          try {
            r = canonicalize(instantiate(eq.rhs, a));
          } catch (const Cycle&) {
            continue;
          }
          bool take = eq.kind == EquationKind::oriented ? !equal(r, t) : compare(*r, *t) < 0;
          if (take) {
            t = r;
            changed = true;
            break;
          }
        }
        if (changed) break;
      }
      if (!changed) return t;
    }
    fail(ErrorKind::resource_cap, "structural equations do not terminate");
  }

  void bind(const std::string& name, const TermPtr& value, Assignment& a, const Cont& k) const {
    auto it = a.find(name);
    if (it != a.end()) {
      if (equal(it->second, value)) k(a);
      return;
    }
    a.emplace(name, value);
    k(a);
    a.erase(name);
  }

  void match_rec(const TermPtr& p, const TermPtr& s, std::uint32_t depth, Assignment& a, const Cont& k) const {
    switch (p->kind) {
      case TermKind::meta: {
        if (!detail::avoids_bound_below(s, depth)) return;
        bind(p->name, shift(s, -static_cast<int>(depth), 0), a, k);
        return;
      }
      case TermKind::apply: {
        const auto& head = p->args.front();
        if (head->kind == TermKind::meta) {
          if (auto vars = detail::miller_vars(p, depth)) {
            auto it = a.find(head->name);
            if (it != a.end()) {
              std::vector<TermPtr> args(p->args.begin() + 1, p->args.end());
              TermPtr inst = canonicalize(apply_term(shift(it->second, static_cast<int>(depth)), args));
              if (equal(inst, s)) k(a);
              return;
            }
            auto body = detail::miller_abstract(s, *vars, depth);
            if (!body) return;
            std::vector<std::string> names(vars->size(), "x");
            std::vector<Sort> sorts;
            if (head->sort.is_function() && head->sort.arity() == vars->size()) sorts = head->sort.domain();
            sorts.resize(vars->size());
            bind(head->name, mk_lambda(names, sorts, *body), a, k);
            return;
          }
        }
        if (s->kind != TermKind::apply || s->args.size() != p->args.size()) return;
        match_list(p->args, s->args, 0, depth, a, k);
        return;
      }
      case TermKind::bound:
        if (s->kind == TermKind::bound && s->index == p->index) k(a);
        return;
      case TermKind::free:
        if (s->kind == TermKind::free && s->name == p->name) k(a);
        return;
      case TermKind::lambda:
        if (s->kind != TermKind::lambda || s->binder_count() != p->binder_count()) return;
        match_rec(p->body(), s->body(), depth + static_cast<std::uint32_t>(p->binder_count()), a, k);
        return;
      case TermKind::tuple:
        if (s->kind != TermKind::tuple || s->args.size() != p->args.size()) return;
        match_list(p->args, s->args, 0, depth, a, k);
        return;
      case TermKind::op: {
        const AcInfo* ac = th_.ac(p->name);
        if (ac && ac->associative) {
          std::vector<TermPtr> pats;
          for (const auto& c : p->args) {
            if (c->kind == TermKind::op && c->name == p->name) {
              pats.insert(pats.end(), c->args.begin(), c->args.end());
            } else {
              pats.push_back(c);
            }
          }
          auto subj = components(p->name, s);
          if (ac->commutative) {
            match_multiset(p->name, pats, subj, depth, a, k);
          } else {
            match_sequence(p->name, pats, 0, subj, 0, depth, a, k);
          }
          return;
        }
        if (s->kind != TermKind::op || s->name != p->name || s->args.size() != p->args.size()) return;
        match_list(p->args, s->args, 0, depth, a, k);
        if (ac && ac->commutative && p->args.size() == 2 && !equal(s->args[0], s->args[1])) {
          std::vector<TermPtr> swapped{s->args[1], s->args[0]};
          match_list(p->args, swapped, 0, depth, a, k);
        }
        return;
      }
    }
  }

  void match_list(const std::vector<TermPtr>& ps, const std::vector<TermPtr>& ss, std::size_t i, std::uint32_t depth,
                  Assignment& a, const Cont& k) const {
    if (i == ps.size()) {
      k(a);
      return;
    }
    match_rec(ps[i], ss[i], depth, a, [&](Assignment& a2) { match_list(ps, ss, i + 1, depth, a2, k); });
  }

  /// AC matching: rigid pattern components each take one subject component,
  /// then flexible ones (pattern variables) share out what remains.
  void match_multiset(const std::string& op, const std::vector<TermPtr>& pats, const std::vector<TermPtr>& subj,
                      std::uint32_t depth, Assignment& a, const Cont& k) const {
    std::vector<TermPtr> rigid;
    std::vector<TermPtr> flex;
    for (const auto& p : pats) (detail::is_flexible(p) ? flex : rigid).push_back(p);
    // Flexible components whose head is already bound behave rigidly enough
    // but are still matched through distribution; order keeps output stable.
    std::vector<bool> used(subj.size(), false);
    match_rigid(op, rigid, 0, flex, subj, used, depth, a, k);
  }

  void match_rigid(const std::string& op, const std::vector<TermPtr>& rigid, std::size_t i,
                   const std::vector<TermPtr>& flex, const std::vector<TermPtr>& subj, std::vector<bool>& used,
                   std::uint32_t depth, Assignment& a, const Cont& k) const {
    if (i == rigid.size()) {
      std::vector<TermPtr> rest;
      for (std::size_t j = 0; j < subj.size(); ++j)
        if (!used[j]) rest.push_back(subj[j]);
      distribute(op, flex, rest, depth, a, k);
      return;
    }
    const TermPtr* last_tried = nullptr;
    for (std::size_t j = 0; j < subj.size(); ++j) {
      if (used[j]) continue;
      if (last_tried && equal(*last_tried, subj[j])) continue;
      last_tried = &subj[j];
      used[j] = true;
      match_rec(rigid[i], subj[j], depth, a,
                [&](Assignment& a2) { match_rigid(op, rigid, i + 1, flex, subj, used, depth, a2, k); });
      used[j] = false;
    }
  }

  void distribute(const std::string& op, const std::vector<TermPtr>& flex, const std::vector<TermPtr>& rest,
                  std::uint32_t depth, Assignment& a, const Cont& k) const {
    const AcInfo* ac = th_.ac(op);
    const bool has_unit = ac && !ac->unit.empty();
    if (flex.empty()) {
      if (rest.empty()) k(a);
      return;
    }
    const std::size_t f = flex.size();
    std::vector<std::size_t> owner(rest.size(), 0);
    // enumerate all maps rest -> flex (f^n)
    while (true) {
      std::vector<std::vector<TermPtr>> parts(f);
      for (std::size_t j = 0; j < rest.size(); ++j) parts[owner[j]].push_back(rest[j]);
      bool ok = true;
      for (const auto& part : parts)
        if (part.empty() && !has_unit) ok = false;
      if (ok) {
        std::vector<TermPtr> values;
        for (auto& part : parts) values.push_back(build(op, part));
        match_values(flex, values, 0, depth, a, k);
      }
      std::size_t j = 0;
      while (j < owner.size() && ++owner[j] == f) owner[j++] = 0;
      if (j == owner.size()) break;
    }
  }

  void match_values(const std::vector<TermPtr>& flex, const std::vector<TermPtr>& values, std::size_t i,
                    std::uint32_t depth, Assignment& a, const Cont& k) const {
    if (i == flex.size()) {
      k(a);
      return;
    }
    match_rec(flex[i], values[i], depth, a, [&](Assignment& a2) { match_values(flex, values, i + 1, depth, a2, k); });
  }

  /// Matching for associative, non-commutative operators: contiguous segments.
  void match_sequence(const std::string& op, const std::vector<TermPtr>& pats, std::size_t pi,
                      const std::vector<TermPtr>& subj, std::size_t si, std::uint32_t depth, Assignment& a,
                      const Cont& k) const {
    if (pi == pats.size()) {
      if (si == subj.size()) k(a);
      return;
    }
    const AcInfo* ac = th_.ac(op);
    const bool has_unit = ac && !ac->unit.empty();
    if (!detail::is_flexible(pats[pi])) {
      if (si == subj.size()) return;
      match_rec(pats[pi], subj[si], depth, a,
                [&](Assignment& a2) { match_sequence(op, pats, pi + 1, subj, si + 1, depth, a2, k); });
      return;
    }
    for (std::size_t len = has_unit ? 0 : 1; si + len <= subj.size(); ++len) {
      std::vector<TermPtr> seg(subj.begin() + static_cast<long>(si), subj.begin() + static_cast<long>(si + len));
      match_rec(pats[pi], build(op, seg), depth, a,
                [&](Assignment& a2) { match_sequence(op, pats, pi + 1, subj, si + len, depth, a2, k); });
    }
  }

  Theory th_;
  mutable TermMap<TermPtr> cache_;
  mutable TermSet in_progress_;
  mutable TermSet eq_in_progress_;
};

}  // namespace ntt
