#pragma once

#include <bit>
#include <deque>
#include <optional>
#include <set>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "ntt/rewrite.hpp"

namespace ntt {

/// A component selected at an associative node: an original component, or a
/// component of the one-shot unfolding of a replicated component.
struct ComponentRef {
  std::size_t index = 0;
  bool unfolded = false;
  std::size_t sub = 0;

  friend bool operator==(const ComponentRef&, const ComponentRef&) = default;
  friend auto operator<=>(const ComponentRef&, const ComponentRef&) = default;
};

/// One step of a redex path. Either an argument position of a constructor
/// (`op.arg`) or a selection of components at an associative node.
struct PathElem {
  std::string op;
  std::size_t arg = 0;
  bool multiset = false;
  std::vector<ComponentRef> comps;

  friend bool operator==(const PathElem&, const PathElem&) = default;

  std::string str() const {
    if (!multiset) return op + "." + std::to_string(arg);
    std::string out = op + "{";
    for (std::size_t i = 0; i < comps.size(); ++i) {
      if (i) out += ",";
      if (comps[i].unfolded) out += "!" + std::to_string(comps[i].index) + "." + std::to_string(comps[i].sub);
      else out += std::to_string(comps[i].index);
    }
    return out + "}";
  }
};

inline std::string path_string(const std::vector<PathElem>& path) {
  if (path.empty()) return "root";
  std::string out;
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (i) out += "/";
    out += path[i].str();
  }
  return out;
}

struct RewriteStep {
  std::string rule;
  Assignment assignment;
  std::vector<PathElem> path;
  TermPtr source;
  TermPtr target;

  std::string position() const { return path_string(path); }
};

struct RewriteEdge {
  std::size_t from = 0;
  std::size_t to = 0;
  std::string rule;
  std::string position;
};

/// Bounded exploration record: nodes are canonical forms, edges basic steps.
struct RewriteGraph {
  std::vector<TermPtr> nodes;
  std::vector<std::size_t> node_depth;
  /// True when all successors of the node are present in the graph.
  std::vector<bool> expanded;
  /// Nodes the expansion filter chose not to expand.
  std::vector<bool> pruned;
  std::vector<RewriteEdge> edges;
  std::vector<std::vector<std::size_t>> out_edges;
  std::size_t root = 0;
  std::size_t depth_bound = 0;
  bool cap_hit = false;

  bool exhausted() const {
    return std::all_of(expanded.begin(), expanded.end(), [](bool b) { return b; });
  }

  std::optional<std::size_t> find(const TermPtr& canonical) const {
    for (std::size_t i = 0; i < nodes.size(); ++i)
      if (equal(nodes[i], canonical)) return i;
    return std::nullopt;
  }

  std::vector<std::size_t> successors(std::size_t v) const {
    std::vector<std::size_t> out;
    for (auto e : out_edges[v]) out.push_back(edges[e].to);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  }
};

/// A composite rewrite: a path of basic steps between two canonical forms.
struct Trace {
  TermPtr source;
  TermPtr target;
  std::vector<RewriteStep> steps;
};

inline Trace identity_trace(const TermPtr& node) { return {node, node, {}}; }

/// Composes traces end to end; endpoints must agree.
inline Trace compose(const Trace& a, const Trace& b) {
  if (!equal(a.target, b.source)) fail(ErrorKind::non_composable, "non-composable-steps: target and source differ");
  Trace out{a.source, b.target, a.steps};
  out.steps.insert(out.steps.end(), b.steps.begin(), b.steps.end());
  return out;
}

inline Trace compose_trace(const std::vector<RewriteStep>& steps) {
  if (steps.empty()) fail(ErrorKind::invalid_argument, "an empty trace needs an explicit node");
  Trace t{steps.front().source, steps.front().source, {}};
  for (const auto& s : steps) t = compose(t, Trace{s.source, s.target, {s}});
  return t;
}

/// One-step rewriting and bounded exploration over a theory.
class Engine : public Rewriter {
 public:
  explicit Engine(Theory th) : Rewriter(std::move(th)) {}

  /// All one-step rewrites of `t` (canonicalized first), deduplicated and sorted.
  std::vector<RewriteStep> step(const TermPtr& t) const {
    TermPtr c = canonicalize(t);
    std::vector<const RewriteRule*> rules;
    for (const auto& r : theory().rules) rules.push_back(&r);
    std::vector<RewriteStep> raw;
    std::vector<PathElem> path;
    collect(c, rules, path, [&](const RewriteRule& r, const Assignment& a, const std::vector<PathElem>& p,
                                const TermPtr& target) { raw.push_back({r.name, a, p, c, target}); });
    std::sort(raw.begin(), raw.end(), [](const RewriteStep& x, const RewriteStep& y) {
      if (int cmp = compare(*x.target, *y.target); cmp != 0) return cmp < 0;
      if (x.rule != y.rule) return x.rule < y.rule;
      if (int cmp = compare(x.assignment, y.assignment); cmp != 0) return cmp < 0;
      return x.position() < y.position();
    });
    std::vector<RewriteStep> out;
    for (auto& s : raw) {
      if (!out.empty() && out.back().rule == s.rule && equal(out.back().target, s.target) &&
          equal(out.back().assignment, s.assignment))
        continue;
      out.push_back(std::move(s));
    }
    return out;
  }

  bool has_step(const TermPtr& t) const {
    bool any = false;
    TermPtr c = canonicalize(t);
    std::vector<const RewriteRule*> rules;
    for (const auto& r : theory().rules) rules.push_back(&r);
    std::vector<PathElem> path;
    try {
      collect(c, rules, path, [&](const RewriteRule&, const Assignment&, const std::vector<PathElem>&, const TermPtr&) {
        any = true;
        throw Stop{};
      });
    } catch (const Stop&) {
    }
    return any;
  }

  /// Recomputes the target of a step from its rule, assignment and path;
  /// throws if the rule's source does not match at that position.
  TermPtr replay(const RewriteStep& s) const {
    const RewriteRule* r = theory().rule(s.rule);
    if (!r) fail(ErrorKind::invalid_argument, "unknown rule " + s.rule);
    return replay_at(canonicalize(s.source), *r, s.assignment, s.path, 0);
  }

  using ExpandFilter = std::function<bool(const TermPtr&)>;

  /// Breadth-first exploration to `depth` steps, at most `cap` nodes. Nodes for
  /// which `should_expand` returns false are kept but not expanded.
  RewriteGraph explore(const TermPtr& root, std::size_t depth, std::size_t cap,
                       const ExpandFilter& should_expand = {}) const {
    RewriteGraph g;
    g.depth_bound = depth;
    TermMap<std::size_t> index;
    std::deque<std::size_t> queue;
    auto add = [&](const TermPtr& t, std::size_t d) -> std::optional<std::size_t> {
      if (auto it = index.find(t); it != index.end()) return it->second;
      if (g.nodes.size() >= std::max<std::size_t>(cap, 1)) {
        g.cap_hit = true;
        return std::nullopt;
      }
      std::size_t id = g.nodes.size();
      g.nodes.push_back(t);
      g.node_depth.push_back(d);
      g.expanded.push_back(false);
      g.pruned.push_back(false);
      g.out_edges.emplace_back();
      index.emplace(t, id);
      queue.push_back(id);
      return id;
    };
    g.root = *add(canonicalize(root), 0);
    while (!queue.empty()) {
      std::size_t v = queue.front();
      queue.pop_front();
      TermPtr t = g.nodes[v];
      if (should_expand && !should_expand(t)) {
        g.pruned[v] = true;
        continue;
      }
      if (g.node_depth[v] >= depth) {
        g.expanded[v] = !has_step(t);
        continue;
      }
      bool complete = true;
      for (const auto& s : step(t)) {
        auto w = add(s.target, g.node_depth[v] + 1);
        if (!w) {
          complete = false;
          continue;
        }
        g.out_edges[v].push_back(g.edges.size());
        g.edges.push_back({v, *w, s.rule, s.position()});
      }
      g.expanded[v] = complete;
    }
    return g;
  }

 private:
  struct Stop {};
  using Emit = std::function<void(const RewriteRule&, const Assignment&, const std::vector<PathElem>&, const TermPtr&)>;

  bool guard_ok(const RewriteRule& r, const Assignment& a) const { return !r.guard || r.guard(a); }

  const StructuralEquation* unfolding_for(const TermPtr& t, Assignment& a) const {
    for (const auto& eq : theory().equations) {
      if (eq.kind != EquationKind::unfold || !theory().equation_active(eq)) continue;
      auto ms = match(eq.lhs, t);
      if (!ms.empty()) {
        a = ms.front();
        return &eq;
      }
    }
    return nullptr;
  }

  struct Slot {
    TermPtr term;
    ComponentRef ref;
  };

  /// Original components plus, for each replicated component, the components
  /// of its unfolding.
  std::vector<Slot> slots_of(const std::string& op, const std::vector<TermPtr>& comps) const {
    std::vector<Slot> out;
    for (std::size_t i = 0; i < comps.size(); ++i) out.push_back({comps[i], {i, false, 0}});
    for (std::size_t i = 0; i < comps.size(); ++i) {
      Assignment a;
      if (const auto* eq = unfolding_for(comps[i], a)) {
        TermPtr unfolded = canonicalize(instantiate(eq->rhs, a));
        auto parts = components(op, unfolded);
        // the unfolding contains the replicated component itself; skip that copy
        bool skipped = false;
        std::size_t sub = 0;
        for (const auto& p : parts) {
          if (!skipped && equal(p, comps[i])) {
            skipped = true;
            continue;
          }
          out.push_back({p, {i, true, sub++}});
        }
      }
    }
    return out;
  }

  /// Components left over after taking `chosen` slots: unchosen originals plus
  /// the unchosen parts of every unfolding that was used.
  std::vector<TermPtr> remainder(const std::vector<Slot>& slots, const std::vector<std::size_t>& chosen) const {
    std::vector<bool> taken(slots.size(), false);
    std::set<std::size_t> unfolded_used;
    for (auto c : chosen) {
      taken[c] = true;
      if (slots[c].ref.unfolded) unfolded_used.insert(slots[c].ref.index);
    }
    std::vector<TermPtr> out;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (taken[i]) continue;
      if (!slots[i].ref.unfolded || unfolded_used.contains(slots[i].ref.index)) out.push_back(slots[i].term);
    }
    return out;
  }

  static std::size_t rigid_count(const RewriteRule& r, const std::string& op, bool& flexible) {
    flexible = false;
    std::size_t n = 0;
    for (const auto& c : r.source->args) {
      if (detail::is_flexible(c)) flexible = true;
      else if (c->kind == TermKind::op && c->name == op) flexible = true;  // nested pattern: no size bound
      else ++n;
    }
    return n;
  }

  void root_matches(const TermPtr& t, const std::vector<const RewriteRule*>& rules, const std::vector<PathElem>& path,
                    const Emit& emit) const {
    for (const auto* r : rules) {
      if (r->source->kind == TermKind::op && (t->kind != TermKind::op || t->name != r->source->name)) {
        const AcInfo* ac = theory().ac(r->source->name);
        if (!ac || !ac->associative) continue;
      }
      for (const auto& a : match(r->source, t)) {
        if (!guard_ok(*r, a)) continue;
        emit(*r, a, path, canonicalize(instantiate(r->target, a)));
      }
    }
  }

  void collect(const TermPtr& t, const std::vector<const RewriteRule*>& rules, std::vector<PathElem>& path,
               const Emit& emit) const {
    if (rules.empty()) return;
    // A replicated term at this position behaves as the associative node of its unfolding.
    const std::string* ac_op = nullptr;
    if (t->kind == TermKind::op) {
      const AcInfo* ac = theory().ac(t->name);
      if (ac && ac->associative && ac->commutative) ac_op = &t->name;
    }
    Assignment ua;
    const StructuralEquation* unfold = ac_op ? nullptr : unfolding_for(t, ua);
    if (ac_op || unfold) {
      std::string op = ac_op ? *ac_op : instantiate(unfold->rhs, ua)->name;
      const AcInfo* ac = theory().ac(op);
      if (ac && ac->associative && ac->commutative) {
        collect_ac(t, op, ac_op ? t->args : std::vector<TermPtr>{t}, rules, path, emit, !ac_op);
        return;
      }
    }
    root_matches(t, rules, path, emit);
    if (t->kind != TermKind::op) return;
    for (std::size_t i = 0; i < t->args.size(); ++i) {
      std::vector<const RewriteRule*> sub;
      for (const auto* r : rules)
        if (r->propagates_through(t->name, i)) sub.push_back(r);
      if (sub.empty()) continue;
      const TermPtr& arg = t->args[i];
      path.push_back({t->name, i, false, {}});
      const bool binder = arg->kind == TermKind::lambda;
      collect(binder ? arg->body() : arg, sub, path, [&](const RewriteRule& r, const Assignment& a,
                                                           const std::vector<PathElem>& p, const TermPtr& target) {
        TermPtr new_arg = binder ? with_args(arg, {target}) : target;
        auto args = t->args;
        args[i] = new_arg;
        emit(r, a, p, canonicalize(with_args(t, std::move(args))));
      });
      path.pop_back();
    }
  }

  void collect_ac(const TermPtr& t, const std::string& op, const std::vector<TermPtr>& comps,
                  const std::vector<const RewriteRule*>& rules, std::vector<PathElem>& path, const Emit& emit,
                  bool whole_is_replicated) const {
    std::vector<const RewriteRule*> through;
    for (const auto* r : rules)
      if (r->propagates_through(op)) through.push_back(r);
    root_matches(t, rules, path, emit);
    if (through.empty()) return;
    auto slots = slots_of(op, comps);
    const std::size_t n = slots.size();
    if (n > 20) fail(ErrorKind::resource_cap, "resource-cap: too many parallel components to enumerate");

    // singletons: recurse into each component
    for (std::size_t i = 0; i < n; ++i) {
      if (whole_is_replicated && !slots[i].ref.unfolded) continue;
      path.push_back({op, 0, true, {slots[i].ref}});
      auto rest = remainder(slots, {i});
      collect(slots[i].term, through, path, [&](const RewriteRule& r, const Assignment& a,
                                                const std::vector<PathElem>& p, const TermPtr& target) {
        auto parts = rest;
        parts.push_back(target);
        emit(r, a, p, build(op, parts));
      });
      path.pop_back();
    }

    // proper sub-multisets of size >= 2 as redexes of rules rooted at `op`
    std::vector<const RewriteRule*> rooted;
    for (const auto* r : through)
      if (r->source->kind == TermKind::op && r->source->name == op) rooted.push_back(r);
    if (rooted.empty() || n < 2) return;
    for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
      const auto size = static_cast<std::size_t>(std::popcount(mask));
      if (size < 2) continue;
      std::vector<std::size_t> chosen;
      bool unfolded_copy_of_same_original = false;
      for (std::size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) chosen.push_back(i);
      for (auto c : chosen) {
        if (!slots[c].ref.unfolded) {
          for (auto d : chosen)
            if (slots[d].ref.unfolded && slots[d].ref.index == slots[c].ref.index) unfolded_copy_of_same_original = true;
        }
      }
      if (unfolded_copy_of_same_original) continue;
      if (!whole_is_replicated && size == comps.size() &&
          std::none_of(chosen.begin(), chosen.end(), [&](std::size_t c) { return slots[c].ref.unfolded; }))
        continue;  // the whole node, handled by root_matches
      std::vector<TermPtr> sel;
      for (auto c : chosen) sel.push_back(slots[c].term);
      TermPtr redex = build(op, sel);
      auto rest = remainder(slots, chosen);
      std::vector<ComponentRef> refs;
      for (auto c : chosen) refs.push_back(slots[c].ref);
      path.push_back({op, 0, true, refs});
      for (const auto* r : rooted) {
        bool flexible = false;
        std::size_t rc = rigid_count(*r, op, flexible);
        if (!flexible && rc != size) continue;
        if (size < rc) continue;
        for (const auto& a : match(r->source, redex)) {
          if (!guard_ok(*r, a)) continue;
          auto parts = rest;
          parts.push_back(canonicalize(instantiate(r->target, a)));
          emit(*r, a, path, build(op, parts));
        }
      }
      path.pop_back();
    }
  }

  TermPtr replay_at(const TermPtr& t, const RewriteRule& r, const Assignment& a, const std::vector<PathElem>& path,
                    std::size_t i) const {
    if (i == path.size()) {
      TermPtr src = canonicalize(instantiate(r.source, a));
      if (!equal(src, t)) fail(ErrorKind::invalid_argument, "replay: rule source does not match at position");
      if (!guard_ok(r, a)) fail(ErrorKind::invalid_argument, "replay: guard rejects assignment");
      return canonicalize(instantiate(r.target, a));
    }
    const PathElem& e = path[i];
    if (!e.multiset) {
      if (!r.propagates_through(e.op, e.arg)) fail(ErrorKind::invalid_argument, "replay: position not a congruence");
      if (t->kind != TermKind::op || t->name != e.op || e.arg >= t->args.size())
        fail(ErrorKind::invalid_argument, "replay: path does not fit term");
      const TermPtr& arg = t->args[e.arg];
      const bool binder = arg->kind == TermKind::lambda;
      TermPtr sub = replay_at(binder ? arg->body() : arg, r, a, path, i + 1);
      auto args = t->args;
      args[e.arg] = binder ? with_args(arg, {sub}) : sub;
      return canonicalize(with_args(t, std::move(args)));
    }
    auto comps = components(e.op, t);
    const bool replicated = !(t->kind == TermKind::op && t->name == e.op);
    if (replicated) comps = {t};
    auto slots = slots_of(e.op, comps);
    std::vector<std::size_t> chosen;
    for (const auto& ref : e.comps) {
      auto it = std::find_if(slots.begin(), slots.end(), [&](const Slot& s) { return s.ref == ref; });
      if (it == slots.end()) fail(ErrorKind::invalid_argument, "replay: component reference out of range");
      chosen.push_back(static_cast<std::size_t>(it - slots.begin()));
    }
    std::vector<TermPtr> sel;
    for (auto c : chosen) sel.push_back(slots[c].term);
    TermPtr redex = sel.size() == 1 ? sel[0] : build(e.op, sel);
    TermPtr result = replay_at(redex, r, a, path, i + 1);
    auto parts = remainder(slots, chosen);
    parts.push_back(result);
    return build(e.op, parts);
  }
};

}  // namespace ntt
