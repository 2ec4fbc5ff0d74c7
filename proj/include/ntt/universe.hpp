#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "ntt/rewrite.hpp"

namespace ntt {

struct UniverseOptions {
  /// Constructor nesting bound. Abstractions do not count; nullary
  /// constructors, names and bound variables are atoms at depth 0.
  int depth = 2;
  /// How many of the theory's pool names to use for each pool sort.
  std::size_t names = 2;
  /// Names added on top of the pool, e.g. those mentioned by a query.
  std::map<std::string, Sort> extra_names;
  std::size_t max_terms = 200000;
};

/// Finite, canonical enumeration of the closed terms of each sort up to a
/// nesting depth. Every predicate quantifier ranges over these sets.
class Universe {
 public:
  Universe(const Rewriter& rw, UniverseOptions opts = {}) : rw_(rw), opts_(std::move(opts)) {}

  const UniverseOptions& options() const { return opts_; }

  /// Closed canonical terms of sort `s` of depth at most `depth` (default: the configured depth).
  const std::vector<TermPtr>& terms(const Sort& s, int depth = -1) {
    return gen(s, depth < 0 ? opts_.depth : depth, {});
  }

  /// The names of sort `s` the universe uses as atoms.
  std::vector<TermPtr> names(const Sort& s) const {
    std::vector<TermPtr> out;
    const Theory& th = rw_.theory();
    if (s.is_base() && th.is_pool_sort(s)) {
      for (std::size_t i = 0; i < opts_.names && i < th.pool_names.size(); ++i)
        out.push_back(mk_free(th.pool_names[i], s));
    }
    for (const auto& [n, ns] : opts_.extra_names) {
      if (ns != s) continue;
      TermPtr t = mk_free(n, s);
      if (std::none_of(out.begin(), out.end(), [&](const TermPtr& o) { return equal(o, t); })) out.push_back(t);
    }
    return out;
  }

 private:
  using Key = std::tuple<Sort, int, std::vector<Sort>>;

  const std::vector<TermPtr>& gen(const Sort& s, int depth, const std::vector<Sort>& ctx) {
    Key key{s, depth, ctx};
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    TermSet seen;
    std::vector<TermPtr> out;
    auto add = [&](TermPtr t) {
      t = rw_.canonicalize(t);
      if (seen.insert(t).second) {
        out.push_back(t);
        if (++produced_ > opts_.max_terms)
          fail(ErrorKind::resource_cap, "resource-cap: universe exceeds " + std::to_string(opts_.max_terms) + " terms");
      }
    };

    if (s.is_function()) {
      std::vector<Sort> inner = ctx;
      for (const auto& d : s.domain()) inner.push_back(d);
      std::vector<std::string> binder_names(s.arity(), "x");
      for (const auto& body : gen(s.codomain(), depth, inner)) add(mk_lambda(binder_names, s.domain(), body));
    } else if (s.is_product()) {
      std::vector<const std::vector<TermPtr>*> parts;
      for (const auto& c : s.components()) parts.push_back(&gen(c, depth, ctx));
      product(parts, [&](std::vector<TermPtr> a) { add(mk_tuple(std::move(a))); });
    } else {
      const Theory& th = rw_.theory();
      for (std::size_t i = 0; i < ctx.size(); ++i)
        if (ctx[i] == s) add(mk_bound(static_cast<std::uint32_t>(ctx.size() - 1 - i)));
      for (const auto& n : names(s)) add(n);
      for (const auto& d : th.ops) {
        if (d.result == s && d.args.empty() && d.generate) add(mk_op(d.name));
      }
      if (depth > 0) {
        for (const auto& t : gen(s, depth - 1, ctx)) add(t);
        for (const auto& d : th.ops) {
          if (d.result != s || d.args.empty() || !d.generate) continue;
          std::vector<const std::vector<TermPtr>*> parts;
          for (const auto& a : d.args) parts.push_back(&gen(a, depth - 1, ctx));
          product(parts, [&](std::vector<TermPtr> a) { add(mk_op(d.name, std::move(a))); });
        }
      }
    }
    std::sort(out.begin(), out.end(), TermLess{});
    return cache_.emplace(std::move(key), std::move(out)).first->second;
  }

  template <class F>
  static void product(const std::vector<const std::vector<TermPtr>*>& parts, F&& emit) {
    for (const auto* p : parts)
      if (p->empty()) return;
    std::vector<std::size_t> idx(parts.size(), 0);
    while (true) {
      std::vector<TermPtr> a;
      a.reserve(parts.size());
      for (std::size_t i = 0; i < parts.size(); ++i) a.push_back((*parts[i])[idx[i]]);
      emit(std::move(a));
      std::size_t i = parts.size();
      while (i > 0) {
        --i;
        if (++idx[i] < parts[i]->size()) break;
        idx[i] = 0;
        if (i == 0) return;
      }
      if (parts.empty()) return;
    }
  }

  const Rewriter& rw_;
  UniverseOptions opts_;
  std::map<Key, std::vector<TermPtr>> cache_;
  std::size_t produced_ = 0;
};

}  // namespace ntt
