#pragma once

// Reference implementations the library is checked against. They work on raw
// terms and only share the term data structure with the library.

#include <deque>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "ntt/theory.hpp"

namespace oracle {

using ntt::Sort;
using ntt::Term;
using ntt::TermKind;
using ntt::TermPtr;
using ntt::TermSet;
using ntt::Theory;

// -- congruence closure -------------------------------------------------------

inline void equation_moves(const Theory& th, const TermPtr& t, const Sort& s, std::size_t max_size,
                           const std::function<void(TermPtr)>& out) {
  for (const auto& d : th.ops) {
    const ntt::AcInfo* info = th.ac(d.name);
    if (!info || d.result != s) continue;
    if (t->kind == TermKind::op && t->name == d.name && t->args.size() == 2) {
      const TermPtr& a = t->args[0];
      const TermPtr& b = t->args[1];
      if (info->commutative) out(ntt::mk_op(d.name, {b, a}));
      if (info->associative) {
        if (a->kind == TermKind::op && a->name == d.name)
          out(ntt::mk_op(d.name, {a->args[0], ntt::mk_op(d.name, {a->args[1], b})}));
        if (b->kind == TermKind::op && b->name == d.name)
          out(ntt::mk_op(d.name, {ntt::mk_op(d.name, {a, b->args[0]}), b->args[1]}));
      }
      if (!info->unit.empty()) {
        if (b->kind == TermKind::op && b->name == info->unit && b->args.empty()) out(a);
        if (a->kind == TermKind::op && a->name == info->unit && a->args.empty()) out(b);
      }
    }
    if (!info->unit.empty() && t->size + 2 <= max_size) out(ntt::mk_op(d.name, {t, ntt::mk_op(info->unit)}));
  }
  if (t->kind == TermKind::op) {
    const ntt::OpDecl* d = th.op(t->name);
    if (!d) return;
    for (std::size_t i = 0; i < t->args.size(); ++i) {
      equation_moves(th, t->args[i], d->args[i], max_size, [&](TermPtr r) {
        auto args = t->args;
        args[i] = std::move(r);
        out(ntt::with_args(t, std::move(args)));
      });
    }
  } else if (t->kind == TermKind::lambda && s.is_function()) {
    equation_moves(th, t->body(), s.codomain(), max_size,
                   [&](TermPtr r) { out(ntt::with_args(t, {std::move(r)})); });
  }
}

/// All terms reachable from t by the theory's associativity, commutativity and
/// unit equations in either direction, never exceeding max_size nodes.
inline TermSet equation_class(const Theory& th, const TermPtr& t, const Sort& s, std::size_t max_size,
                              std::size_t limit = 200000) {
  TermSet seen{t};
  std::deque<TermPtr> queue{t};
  while (!queue.empty() && seen.size() < limit) {
    TermPtr x = queue.front();
    queue.pop_front();
    equation_moves(th, x, s, max_size, [&](TermPtr r) {
      if (r->size <= max_size && seen.insert(r).second) queue.push_back(r);
    });
  }
  return seen;
}

inline bool congruent(const Theory& th, const TermPtr& a, const TermPtr& b, const Sort& s) {
  if (ntt::equal(a, b)) return true;
  std::size_t bound = std::max(a->size, b->size);
  return equation_class(th, a, s, bound).contains(b);
}

// -- brute-force ρπ reduction ------------------------------------------------

/// Replaces the binders of `lam` by closed values; values.back() is index 0.
inline TermPtr beta(const TermPtr& lam, const std::vector<TermPtr>& values) {
  const auto k = static_cast<std::uint32_t>(values.size());
  std::function<TermPtr(const TermPtr&, std::uint32_t)> go = [&](const TermPtr& t, std::uint32_t depth) -> TermPtr {
    if (t->kind == TermKind::bound) {
      if (t->index < depth) return t;
      if (t->index - depth < k) return values[k - 1 - (t->index - depth)];
      return ntt::mk_bound(t->index - k);
    }
    if (t->args.empty()) return t;
    std::uint32_t inner = depth + (t->kind == TermKind::lambda ? static_cast<std::uint32_t>(t->binder_count()) : 0);
    std::vector<TermPtr> args;
    for (const auto& a : t->args) args.push_back(go(a, inner));
    return ntt::with_args(t, std::move(args));
  };
  return go(lam->body(), 0);
}

inline void flatten_par(const TermPtr& t, std::vector<TermPtr>& out) {
  if (t->kind == TermKind::op && t->name == "par") {
    for (const auto& a : t->args) flatten_par(a, out);
  } else if (!(t->kind == TermKind::op && t->name == "0")) {
    out.push_back(t);
  }
}

inline TermPtr par_of(const std::vector<TermPtr>& parts) {
  if (parts.empty()) return ntt::mk_op("0");
  TermPtr r = parts.back();
  for (std::size_t i = parts.size() - 1; i-- > 0;) r = ntt::mk_op("par", {parts[i], r});
  return r;
}

/// Every (rule, result) for one ρπ reduction at any split of the top-level
/// parallel composition. Results are raw, not canonical.
inline std::vector<std::pair<std::string, TermPtr>> rho_steps(const Theory& th, const TermPtr& t) {
  std::vector<TermPtr> comps;
  flatten_par(t, comps);
  std::vector<std::pair<std::string, TermPtr>> out;
  const Sort N = Sort::base("N");
  auto is = [](const TermPtr& x, const char* op) { return x->kind == TermKind::op && x->name == op; };
  auto without = [&](std::size_t i, std::size_t j) {
    std::vector<TermPtr> rest;
    for (std::size_t k = 0; k < comps.size(); ++k)
      if (k != i && k != j) rest.push_back(comps[k]);
    return rest;
  };
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (is(comps[i], "drop") && is(comps[i]->args[0], "quote")) {
      auto rest = without(i, i);
      rest.push_back(comps[i]->args[0]->args[0]);
      out.emplace_back("run", par_of(rest));
    }
    for (std::size_t j = 0; j < comps.size(); ++j) {
      if (i == j) continue;
      const TermPtr& o = comps[i];
      const TermPtr& r = comps[j];
      if (is(o, "out") && is(r, "in") && congruent(th, o->args[0], r->args[0], N)) {
        auto rest = without(i, j);
        rest.push_back(beta(r->args[1], {ntt::mk_op("quote", {o->args[1]})}));
        out.emplace_back("comm", par_of(rest));
      }
      if (is(o, "out2") && is(r, "in2") && congruent(th, o->args[0], r->args[0], N)) {
        auto rest = without(i, j);
        rest.push_back(beta(r->args[1], {ntt::mk_op("quote", {o->args[1]}), ntt::mk_op("quote", {o->args[2]})}));
        out.emplace_back("comm2", par_of(rest));
      }
    }
  }
  return out;
}

// -- random ρπ terms -----------------------------------------------------------

class RhoGen {
 public:
  explicit RhoGen(std::uint32_t seed) : rng_(seed) {}

  std::mt19937& rng() { return rng_; }

  /// A closed process with at most `budget` nodes.
  TermPtr process(int budget) { return proc(budget, 0); }

  /// A process built so that its top-level components are likely to interact.
  TermPtr interacting(int budget) {
    int parts = 2 + pick(2);
    std::vector<TermPtr> comps;
    int each = std::max(2, budget / parts);
    for (int i = 0; i < parts; ++i) comps.push_back(proc(each, 0));
    return par_of(comps);
  }

  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

 private:
  TermPtr name(int& budget, std::uint32_t binders) {
    int c = pick(binders > 0 ? 5 : 4);
    if (c == 4) return ntt::mk_bound(static_cast<std::uint32_t>(pick(static_cast<int>(binders))));
    if (c == 3 && budget >= 3) {
      budget -= 1;
      int inner = std::min(budget, 2);
      budget -= inner;
      return ntt::mk_op("quote", {proc(inner, binders)});
    }
    budget -= 1;
    return ntt::mk_free(c % 2 ? "b" : "a", Sort::base("N"));
  }

  TermPtr proc(int budget, std::uint32_t binders) {
    if (budget <= 1) return ntt::mk_op("0");
    switch (pick(6)) {
      case 0: return ntt::mk_op("0");
      case 1: {
        int left = 1 + pick(budget - 1);
        return ntt::mk_op("par", {proc(left, binders), proc(budget - 1 - left, binders)});
      }
      case 2: {
        int b = budget - 1;
        TermPtr n = name(b, binders);
        return ntt::mk_op("out", {n, proc(b, binders)});
      }
      case 3: {
        int b = budget - 1;
        TermPtr n = name(b, binders);
        return ntt::mk_op("in", {n, ntt::mk_lambda({"x"}, {Sort::base("N")}, proc(b, binders + 1))});
      }
      case 4: {
        int b = budget - 1;
        return ntt::mk_op("drop", {name(b, binders)});
      }
      default: {
        if (budget < 3) return ntt::mk_op("0");
        int b = budget - 2;
        return ntt::mk_op("drop", {ntt::mk_op("quote", {proc(b, binders)})});
      }
    }
  }

  std::mt19937 rng_;
};

// -- modalities by path enumeration ------------------------------------------------

using Adj = std::vector<std::vector<std::size_t>>;

inline Adj reverse(const Adj& g) {
  Adj r(g.size());
  for (std::size_t v = 0; v < g.size(); ++v)
    for (auto w : g[v]) r[w].push_back(v);
  return r;
}

inline std::vector<bool> reach_from(const Adj& g, std::size_t v) {
  std::vector<bool> seen(g.size(), false);
  std::deque<std::size_t> q{v};
  seen[v] = true;
  while (!q.empty()) {
    auto x = q.front();
    q.pop_front();
    for (auto w : g[x])
      if (!seen[w]) seen[w] = true, q.push_back(w);
  }
  return seen;
}

/// Some maximal path from v avoids phi forever: it reaches a dead end or a
/// cycle while staying outside phi.
inline bool escapes(const Adj& g, const std::vector<bool>& phi, std::size_t v) {
  if (phi[v]) return false;
  std::vector<int> state(g.size(), 0);  // 0 new, 1 on stack, 2 done
  std::function<bool(std::size_t)> dfs = [&](std::size_t x) {
    if (g[x].empty()) return true;
    state[x] = 1;
    for (auto w : g[x]) {
      if (phi[w]) continue;
      if (state[w] == 1) return true;
      if (state[w] == 0 && dfs(w)) return true;
    }
    state[x] = 2;
    return false;
  };
  return dfs(v);
}

/// name is one of "!", "*", "!o", "*o", "!.", "*." (future on g).
inline std::vector<bool> modality(const Adj& g, const std::string& name, const std::vector<bool>& phi) {
  const std::size_t n = g.size();
  std::vector<bool> out(n, false);
  for (std::size_t v = 0; v < n; ++v) {
    if (name == "!") {
      for (auto w : g[v]) out[v] = out[v] || phi[w];
    } else if (name == "*") {
      bool all = true;
      for (auto w : g[v]) all = all && phi[w];
      out[v] = all;
    } else if (name == "!o" || name == "*.") {
      auto r = reach_from(g, v);
      bool any = false, all = true;
      for (std::size_t w = 0; w < n; ++w)
        if (r[w]) any = any || phi[w], all = all && phi[w];
      out[v] = name == "!o" ? any : all;
    } else if (name == "*o") {
      out[v] = !escapes(g, phi, v);
    } else if (name == "!.") {
      auto r = reach_from(g, v);
      bool all = true;
      for (std::size_t w = 0; w < n && all; ++w) {
        if (!r[w]) continue;
        auto r2 = reach_from(g, w);
        bool any = false;
        for (std::size_t x = 0; x < n; ++x) any = any || (r2[x] && phi[x]);
        all = any;
      }
      out[v] = all;
    }
  }
  return out;
}

// -- bisimulation by relation iteration ------------------------------------

using Labelled = std::vector<std::vector<std::pair<std::size_t, std::size_t>>>;

/// Greatest fixpoint of the bisimulation functional, starting from all pairs.
inline std::vector<std::vector<bool>> naive_bisim(const Labelled& l) {
  const std::size_t n = l.size();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, true));
  auto sim = [&](std::size_t p, std::size_t q) {
    for (const auto& [a, p2] : l[p]) {
      bool ok = false;
      for (const auto& [b, q2] : l[q]) ok = ok || (a == b && r[p2][q2]);
      if (!ok) return false;
    }
    return true;
  };
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q)
        if (r[p][q] && !(sim(p, q) && sim(q, p))) r[p][q] = false, changed = true;
  }
  return r;
}

}  // namespace oracle
