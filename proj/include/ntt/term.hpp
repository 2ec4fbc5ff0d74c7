#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ntt/error.hpp"
#include "ntt/sort.hpp"

namespace ntt {

enum class TermKind : std::uint8_t {
  op,      // constructor application f(args)
  bound,   // de Bruijn index
  free,    // free name (treated as a constant)
  meta,    // pattern variable
  lambda,  // abstraction binding `binder_sorts.size()` variables at once
  apply,   // application of a non-constructor head to arguments
  tuple,   // argument tuple
};

class Term;
using TermPtr = std::shared_ptr<const Term>;

/// Immutable abstract syntax node. Bound variables are nameless: inside a
/// lambda binding k variables, index 0 is the last binder. Binder names are
/// kept only as printing hints and do not take part in equality or hashing,
/// so α-equivalent terms are equal.
class Term {
 public:
  TermKind kind;
  std::string name;
  std::uint32_t index = 0;
  Sort sort;
  std::vector<std::string> binder_names;
  std::vector<Sort> binder_sorts;
  std::vector<TermPtr> args;
  std::size_t hash = 0;
  /// Number of enclosing binders this term reaches past (max loose index + 1).
  std::uint32_t loose = 0;
  std::uint32_t size = 1;
  std::uint32_t depth = 0;
  bool has_meta = false;

  Term(TermKind k, std::string n, std::uint32_t i, Sort s, std::vector<std::string> bn,
       std::vector<Sort> bs, std::vector<TermPtr> a)
      : kind(k), name(std::move(n)), index(i), sort(std::move(s)),
        binder_names(std::move(bn)), binder_sorts(std::move(bs)), args(std::move(a)) {
    std::size_t h = static_cast<std::size_t>(kind) * 0x9e3779b97f4a7c15ULL;
    h ^= std::hash<std::string>{}(name) + 0x7f4a7c15 + (h << 6) + (h >> 2);
    h ^= index * 0x100000001b3ULL;
    if (kind == TermKind::lambda) h ^= binder_sorts.size() * 0x51ed27ULL;
    if (kind == TermKind::meta) has_meta = true;
    std::uint32_t max_depth = 0;
    for (const auto& c : args) {
      h = h * 1099511628211ULL ^ c->hash;
      size += c->size;
      max_depth = std::max(max_depth, c->depth);
      has_meta = has_meta || c->has_meta;
      loose = std::max(loose, c->loose);
    }
    hash = h;
    depth = args.empty() ? 0 : max_depth + 1;
    if (kind == TermKind::bound) loose = index + 1;
    if (kind == TermKind::lambda) {
      auto k2 = static_cast<std::uint32_t>(binder_sorts.size());
      loose = loose > k2 ? loose - k2 : 0;
    }
  }

  std::size_t binder_count() const { return binder_sorts.size(); }
  const TermPtr& body() const { return args.front(); }
  bool closed() const { return loose == 0; }
};

// -- construction -----------------------------------------------------------

inline TermPtr mk_op(std::string name, std::vector<TermPtr> args = {}) {
  return std::make_shared<const Term>(TermKind::op, std::move(name), 0, Sort{},
                                      std::vector<std::string>{}, std::vector<Sort>{}, std::move(args));
}

inline TermPtr mk_bound(std::uint32_t index) {
  return std::make_shared<const Term>(TermKind::bound, std::string{}, index, Sort{},
                                      std::vector<std::string>{}, std::vector<Sort>{}, std::vector<TermPtr>{});
}

inline TermPtr mk_free(std::string name, Sort sort) {
  return std::make_shared<const Term>(TermKind::free, std::move(name), 0, std::move(sort),
                                      std::vector<std::string>{}, std::vector<Sort>{}, std::vector<TermPtr>{});
}

inline TermPtr mk_meta(std::string name, Sort sort = {}) {
  return std::make_shared<const Term>(TermKind::meta, std::move(name), 0, std::move(sort),
                                      std::vector<std::string>{}, std::vector<Sort>{}, std::vector<TermPtr>{});
}

inline TermPtr mk_lambda(std::vector<std::string> names, std::vector<Sort> sorts, TermPtr body) {
  if (names.size() < sorts.size()) names.resize(sorts.size(), "x");
  if (sorts.size() < names.size()) sorts.resize(names.size());
  return std::make_shared<const Term>(TermKind::lambda, std::string{}, 0, Sort{}, std::move(names),
                                      std::move(sorts), std::vector<TermPtr>{std::move(body)});
}

inline TermPtr mk_apply(TermPtr head, std::vector<TermPtr> args) {
  args.insert(args.begin(), std::move(head));
  return std::make_shared<const Term>(TermKind::apply, std::string{}, 0, Sort{},
                                      std::vector<std::string>{}, std::vector<Sort>{}, std::move(args));
}

inline TermPtr mk_tuple(std::vector<TermPtr> args) {
  return std::make_shared<const Term>(TermKind::tuple, std::string{}, 0, Sort{},
                                      std::vector<std::string>{}, std::vector<Sort>{}, std::move(args));
}

/// Same node with different children.
inline TermPtr with_args(const TermPtr& t, std::vector<TermPtr> args) {
  return std::make_shared<const Term>(t->kind, t->name, t->index, t->sort, t->binder_names,
                                      t->binder_sorts, std::move(args));
}

// -- equality and order -----------------------------------------------------

/// Total structural order used for canonical multisets and output.
inline int compare(const Term& a, const Term& b) {
  if (&a == &b) return 0;
  if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
  if (a.size != b.size) return a.size < b.size ? -1 : 1;
  if (int c = a.name.compare(b.name); c != 0) return c < 0 ? -1 : 1;
  if (a.index != b.index) return a.index < b.index ? -1 : 1;
  if (a.binder_sorts.size() != b.binder_sorts.size())
    return a.binder_sorts.size() < b.binder_sorts.size() ? -1 : 1;
  if (a.args.size() != b.args.size()) return a.args.size() < b.args.size() ? -1 : 1;
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (int c = compare(*a.args[i], *b.args[i]); c != 0) return c;
  }
  return 0;
}

inline bool equal(const TermPtr& a, const TermPtr& b) {
  if (a == b) return true;
  if (!a || !b) return false;
  if (a->hash != b->hash) return false;
  return compare(*a, *b) == 0;
}

struct TermHash {
  std::size_t operator()(const TermPtr& t) const { return t->hash; }
};
struct TermEq {
  bool operator()(const TermPtr& a, const TermPtr& b) const { return equal(a, b); }
};
struct TermLess {
  bool operator()(const TermPtr& a, const TermPtr& b) const { return compare(*a, *b) < 0; }
};

using TermSet = std::unordered_set<TermPtr, TermHash, TermEq>;
template <class V>
using TermMap = std::unordered_map<TermPtr, V, TermHash, TermEq>;

/// Assignment of pattern variables, ordered by name for reproducible output.
using Assignment = std::map<std::string, TermPtr>;

inline bool equal(const Assignment& a, const Assignment& b) {
  if (a.size() != b.size()) return false;
  for (auto i = a.begin(), j = b.begin(); i != a.end(); ++i, ++j) {
    if (i->first != j->first || !equal(i->second, j->second)) return false;
  }
  return true;
}

inline int compare(const Assignment& a, const Assignment& b) {
  auto i = a.begin();
  auto j = b.begin();
  for (; i != a.end() && j != b.end(); ++i, ++j) {
    if (int c = i->first.compare(j->first); c != 0) return c < 0 ? -1 : 1;
    if (int c = compare(*i->second, *j->second); c != 0) return c;
  }
  if (i == a.end() && j == b.end()) return 0;
  return i == a.end() ? -1 : 1;
}

// -- de Bruijn machinery ----------------------------------------------------

/// Adds `delta` to every bound index >= `cutoff`.
inline TermPtr shift(const TermPtr& t, int delta, std::uint32_t cutoff = 0) {
  if (delta == 0 || t->loose <= cutoff) return t;
  switch (t->kind) {
    case TermKind::bound: {
      if (t->index < cutoff) return t;
      long v = static_cast<long>(t->index) + delta;
      if (v < 0) fail(ErrorKind::invalid_argument, "negative de Bruijn index after shift");
      return mk_bound(static_cast<std::uint32_t>(v));
    }
    case TermKind::lambda: {
      auto k = static_cast<std::uint32_t>(t->binder_count());
      return with_args(t, {shift(t->body(), delta, cutoff + k)});
    }
    default: {
      std::vector<TermPtr> args;
      args.reserve(t->args.size());
      for (const auto& a : t->args) args.push_back(shift(a, delta, cutoff));
      return with_args(t, std::move(args));
    }
  }
}

/// Replaces the `values.size()` innermost binders around `body` (at depth
/// `depth` inside it) by `values`, which live in the context outside those
/// binders. `values.back()` replaces index 0.
inline TermPtr open_body(const TermPtr& body, const std::vector<TermPtr>& values,
                         std::uint32_t depth = 0);

/// β-reduces `head(args)` when head is a lambda; otherwise builds an apply node.
inline TermPtr apply_term(const TermPtr& head, std::vector<TermPtr> args) {
  if (head->kind == TermKind::lambda) {
    const std::size_t k = head->binder_count();
    if (args.size() == k) return open_body(head->body(), args);
    if (args.size() > k) {
      std::vector<TermPtr> first(args.begin(), args.begin() + static_cast<long>(k));
      std::vector<TermPtr> rest(args.begin() + static_cast<long>(k), args.end());
      return apply_term(open_body(head->body(), first), std::move(rest));
    }
    fail(ErrorKind::sort, "partial application of an abstraction");
  }
  return mk_apply(head, std::move(args));
}

inline TermPtr open_body(const TermPtr& body, const std::vector<TermPtr>& values, std::uint32_t depth) {
  if (body->loose <= depth) return body;
  const auto k = static_cast<std::uint32_t>(values.size());
  switch (body->kind) {
    case TermKind::bound: {
      if (body->index < depth) return body;
      std::uint32_t rel = body->index - depth;
      if (rel < k) return shift(values[k - 1 - rel], static_cast<int>(depth));
      return mk_bound(body->index - k);
    }
    case TermKind::lambda:
      return with_args(body, {open_body(body->body(), values,
                                        depth + static_cast<std::uint32_t>(body->binder_count()))});
    case TermKind::apply: {
      auto head = open_body(body->args.front(), values, depth);
      std::vector<TermPtr> args;
      for (std::size_t i = 1; i < body->args.size(); ++i) args.push_back(open_body(body->args[i], values, depth));
      return apply_term(head, std::move(args));
    }
    default: {
      std::vector<TermPtr> args;
      args.reserve(body->args.size());
      for (const auto& a : body->args) args.push_back(open_body(a, values, depth));
      return with_args(body, std::move(args));
    }
  }
}

/// Capture-avoiding simultaneous substitution of free names.
inline TermPtr substitute(const TermPtr& t, const std::map<std::string, TermPtr>& assignment,
                          std::uint32_t depth = 0) {
  switch (t->kind) {
    case TermKind::free: {
      auto it = assignment.find(t->name);
      if (it == assignment.end()) return t;
      if (!it->second->sort.unknown() && !t->sort.unknown() && it->second->kind == TermKind::free &&
          it->second->sort != t->sort)
        fail(ErrorKind::sort, "substitution of " + t->name + " changes its sort");
      return shift(it->second, static_cast<int>(depth));
    }
    case TermKind::bound:
    case TermKind::meta:
      return t;
    case TermKind::lambda:
      return with_args(t, {substitute(t->body(), assignment,
                                      depth + static_cast<std::uint32_t>(t->binder_count()))});
    case TermKind::apply: {
      auto head = substitute(t->args.front(), assignment, depth);
      std::vector<TermPtr> args;
      for (std::size_t i = 1; i < t->args.size(); ++i) args.push_back(substitute(t->args[i], assignment, depth));
      return apply_term(head, std::move(args));
    }
    default: {
      std::vector<TermPtr> args;
      for (const auto& a : t->args) args.push_back(substitute(a, assignment, depth));
      return with_args(t, std::move(args));
    }
  }
}

/// Replaces pattern variables by their assigned values, β-reducing
/// applications of instantiated heads.
inline TermPtr instantiate(const TermPtr& t, const Assignment& assignment, std::uint32_t depth = 0) {
  if (!t->has_meta) return t;
  switch (t->kind) {
    case TermKind::meta: {
      auto it = assignment.find(t->name);
      if (it == assignment.end()) fail(ErrorKind::unbound_variable, "unbound pattern variable ?" + t->name);
      return shift(it->second, static_cast<int>(depth));
    }
    case TermKind::lambda:
      return with_args(t, {instantiate(t->body(), assignment,
                                       depth + static_cast<std::uint32_t>(t->binder_count()))});
    case TermKind::apply: {
      auto head = instantiate(t->args.front(), assignment, depth);
      std::vector<TermPtr> args;
      for (std::size_t i = 1; i < t->args.size(); ++i) args.push_back(instantiate(t->args[i], assignment, depth));
      return apply_term(head, std::move(args));
    }
    default: {
      std::vector<TermPtr> args;
      for (const auto& a : t->args) args.push_back(instantiate(a, assignment, depth));
      return with_args(t, std::move(args));
    }
  }
}

// -- queries ---------------------------------------------------------------

inline void collect_metas(const TermPtr& t, std::set<std::string>& out) {
  if (!t->has_meta) return;
  if (t->kind == TermKind::meta) out.insert(t->name);
  for (const auto& a : t->args) collect_metas(a, out);
}

inline std::set<std::string> metas_of(const TermPtr& t) {
  std::set<std::string> out;
  collect_metas(t, out);
  return out;
}

inline void collect_free(const TermPtr& t, std::map<std::string, Sort>& out) {
  if (t->kind == TermKind::free) out.emplace(t->name, t->sort);
  for (const auto& a : t->args) collect_free(a, out);
}

inline std::map<std::string, Sort> free_names(const TermPtr& t) {
  std::map<std::string, Sort> out;
  collect_free(t, out);
  return out;
}

/// True when bound index `index` (relative to t's position) occurs in t.
inline bool mentions_bound(const TermPtr& t, std::uint32_t index) {
  if (t->loose <= index) return false;
  if (t->kind == TermKind::bound) return t->index == index;
  if (t->kind == TermKind::lambda)
    return mentions_bound(t->body(), index + static_cast<std::uint32_t>(t->binder_count()));
  for (const auto& a : t->args)
    if (mentions_bound(a, index)) return true;
  return false;
}

}  // namespace ntt
