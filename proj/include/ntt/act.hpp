#pragma once

#include <deque>
#include <string>
#include <vector>

#include "ntt/modal.hpp"
#include "ntt/universe.hpp"

namespace ntt {

/// An observing context, stored as an abstraction \x:P. C[x].
struct Observation {
  std::string label;
  TermPtr context;
  bool identity = false;
};

struct ActOptions {
  int payload_depth = 2;
  std::size_t fresh_names = 2;
};

/// Labelled transitions p --c--> q where c[p] rewrites to q. Context moves
/// that only replay an internal step of p under c are left out; those are
/// already the identity-labelled moves.
class ObservationSystem {
 public:
  struct ActStep {
    std::size_t context;
    TermPtr target;
  };

  explicit ObservationSystem(const Engine& eng, ActOptions opts = {}) : eng_(eng), opts_(opts) {
    const Theory& th = eng.theory();
    for (const auto& d : th.ops) {
      if (d.name == "in" && d.args.size() == 2 && d.args[1].is_function() && d.args[1].arity() == 1) in_ = &d;
      if (d.name == "out" && d.args.size() == 2) out_ = &d;
    }
    if (in_) process_ = in_->result;
    for (const auto& d : th.ops) {
      const AcInfo* info = th.ac(d.name);
      if (d.args.size() == 2 && info && info->commutative && d.result == process_) par_ = &d;
      if (in_ && d.args.size() == 1 && d.args[0] == in_->args[0] && d.result == process_) drop_ = &d;
    }
  }

  const Engine& engine() const { return eng_; }

  /// Free names of the given terms at the channel sort, followed by fresh pool names.
  std::vector<TermPtr> name_pool(const std::vector<TermPtr>& procs) const {
    std::vector<TermPtr> out;
    if (!in_) return out;
    const Sort& chan = in_->args[0];
    TermSet seen;
    for (const auto& p : procs)
      for (const auto& [n, s] : free_names(p)) {
        TermPtr t = mk_free(n, chan);
        if (s == chan && seen.insert(t).second) out.push_back(t);
      }
    std::sort(out.begin(), out.end(), TermLess{});
    std::size_t added = 0;
    for (const auto& n : eng_.theory().pool_names) {
      if (added == opts_.fresh_names) break;
      TermPtr t = mk_free(n, chan);
      bool clash = seen.contains(t);
      for (const auto& p : procs) clash = clash || free_names(p).contains(n);
      if (clash) continue;
      seen.insert(t);
      out.push_back(t);
      ++added;
    }
    return out;
  }

  /// Identity, inputs `in(n, \y. c) | x` and outputs `out(n, q) | x` over the given names.
  std::vector<Observation> contexts(const std::vector<TermPtr>& names) {
    const Theory& th = eng_.theory();
    std::vector<Observation> out;
    const Sort p = process_.unknown() ? Sort::base("P") : process_;
    auto hole_ctx = [&](TermPtr piece) {
      // \x. piece | x ; piece is closed so it needs no shifting
      return mk_lambda({"x"}, {p}, mk_op(par_->name, {piece, mk_bound(0)}));
    };
    TermPtr hole_name = mk_free("[]", p);
    auto label_of = [&](const TermPtr& ctx) { return print(th, apply_term(ctx, {hole_name})); };
    out.push_back({"id", mk_lambda({"x"}, {p}, mk_bound(0)), true});
    if (!in_ || !out_ || !par_) return out;
    const Sort chan = in_->args[0];
    std::vector<TermPtr> bodies{mk_op(zero_name())};
    if (drop_) bodies.push_back(mk_op(drop_->name, {mk_bound(0)}));
    for (const auto& n : names)
      for (const auto& b : bodies) {
        TermPtr c = hole_ctx(mk_op(in_->name, {n, mk_lambda({"y"}, {chan}, b)}));
        out.push_back({label_of(c), c, false});
      }
    std::vector<TermPtr> payloads;
    if (out_->args[1] == chan) {
      payloads = names;
    } else {
      UniverseOptions uo;
      uo.depth = opts_.payload_depth;
      uo.names = 0;
      for (const auto& n : names) uo.extra_names[n->name] = chan;
      Universe u(eng_, uo);
      payloads = u.terms(out_->args[1]);
    }
    for (const auto& n : names)
      for (const auto& q : payloads) {
        TermPtr c = hole_ctx(mk_op(out_->name, {n, q}));
        out.push_back({label_of(c), c, false});
      }
    return out;
  }

  std::vector<ActStep> act_steps(const TermPtr& p0, const std::vector<Observation>& ctxs) const {
    TermPtr p = eng_.canonicalize(p0);
    std::vector<ActStep> out;
    std::vector<TermPtr> internal;
    {
      TermSet seen;
      for (const auto& s : eng_.step(p))
        if (seen.insert(s.target).second) internal.push_back(s.target);
    }
    for (std::size_t i = 0; i < ctxs.size(); ++i) {
      if (ctxs[i].identity) {
        for (const auto& t : internal) out.push_back({i, t});
        continue;
      }
      TermSet replayed;
      for (const auto& t : internal) replayed.insert(eng_.canonicalize(apply_term(ctxs[i].context, {t})));
      TermSet seen;
      TermPtr cp = eng_.canonicalize(apply_term(ctxs[i].context, {p}));
      for (const auto& s : eng_.step(cp)) {
        if (replayed.contains(s.target) || !seen.insert(s.target).second) continue;
        out.push_back({i, s.target});
      }
    }
    return out;
  }

  /// Breadth-first act graph from `root`, bounded like Engine::explore.
  Graph explore(const TermPtr& root, std::size_t depth, std::size_t cap, const std::vector<Observation>& ctxs,
                const std::function<bool(const TermPtr&)>& should_expand = {}) const {
    Graph g;
    TermMap<std::size_t> index;
    std::vector<std::size_t> node_depth;
    std::deque<std::size_t> queue;
    auto add = [&](const TermPtr& t, std::size_t d) -> std::optional<std::size_t> {
      if (auto it = index.find(t); it != index.end()) return it->second;
      if (g.nodes.size() >= std::max<std::size_t>(cap, 1)) {
        g.cap_hit = true;
        return std::nullopt;
      }
      std::size_t id = g.nodes.size();
      g.nodes.push_back(t);
      g.succ.emplace_back();
      g.labels.emplace_back();
      g.expanded.push_back(false);
      g.pruned.push_back(false);
      node_depth.push_back(d);
      index.emplace(t, id);
      queue.push_back(id);
      return id;
    };
    g.root = *add(eng_.canonicalize(root), 0);
    while (!queue.empty()) {
      std::size_t v = queue.front();
      queue.pop_front();
      TermPtr t = g.nodes[v];
      if (should_expand && !should_expand(t)) {
        g.pruned[v] = true;
        continue;
      }
      auto steps = act_steps(t, ctxs);
      if (node_depth[v] >= depth) {
        g.expanded[v] = steps.empty();
        continue;
      }
      bool complete = true;
      for (const auto& s : steps) {
        auto w = add(s.target, node_depth[v] + 1);
        if (!w) {
          complete = false;
          continue;
        }
        g.succ[v].push_back(*w);
        g.labels[v].push_back(ctxs[s.context].label);
      }
      g.expanded[v] = complete;
    }
    return g;
  }

 private:
  std::string zero_name() const {
    const AcInfo* info = eng_.theory().ac(par_->name);
    if (info && !info->unit.empty()) return info->unit;
    for (const auto& d : eng_.theory().ops)
      if (d.args.empty() && d.result == process_) return d.name;
    return "0";
  }

  const Engine& eng_;
  ActOptions opts_;
  const OpDecl* in_ = nullptr;
  const OpDecl* out_ = nullptr;
  const OpDecl* drop_ = nullptr;
  const OpDecl* par_ = nullptr;
  Sort process_;
};

}  // namespace ntt
