#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ntt/act.hpp"
#include "ntt/modal.hpp"
#include "ntt/predicate.hpp"
#include "ntt/universe.hpp"

namespace ntt {

struct EvalOptions {
  UniverseOptions universe;
  std::size_t explore_depth = 8;
  std::size_t explore_cap = 2000;
  std::size_t act_depth = 4;
  std::size_t act_cap = 400;
  ActOptions act;
  /// Largest local carrier a fixpoint may grow before it is cut off.
  std::size_t fix_cap = 20000;
};

struct Verdict {
  bool value = false;
  /// Some exploration or fixpoint carrier was cut off by a bound.
  bool bounded = false;
  /// For top-level modalities: a path of canonical terms explaining the answer.
  std::vector<TermPtr> witness;
  std::vector<std::string> witness_labels;
  /// For a failing top-level hom or arrow: an input the context mishandles.
  TermPtr counterexample;
};

/// Decides predicates on canonical terms. Quantifiers range over the finite
/// universe; modalities run over the bounded rewrite (or act) graph.
class Evaluator {
 public:
  using Env = std::map<std::string, std::function<bool(const TermPtr&)>>;

  explicit Evaluator(const Engine& eng, EvalOptions opts = {})
      : eng_(eng), opts_(std::move(opts)), universe_(eng, opts_.universe), obs_(eng, opts_.act) {}

  const Engine& engine() const { return eng_; }
  const Theory& theory() const { return eng_.theory(); }
  Universe& universe() { return universe_; }
  const EvalOptions& options() const { return opts_; }

  bool bounded() const { return bounded_; }
  void reset_bounded() { bounded_ = false; }

  bool holds(const PredPtr& p, const TermPtr& t) { return eval(p, eng_.canonicalize(t), {}); }

  Verdict check(const PredPtr& p, const TermPtr& t) {
    reset_bounded();
    TermPtr c = eng_.canonicalize(t);
    Verdict v;
    v.value = eval(p, c, {});
    PredPtr top = p;
    while (top->kind == PredKind::named) top = top->args[0];
    if (top->kind == PredKind::modal) fill_witness(*top, c, v);
    if (!v.value && (top->kind == PredKind::hom || top->kind == PredKind::arrow)) {
      const PredPtr& phi = top->args[0];
      PredPtr psi = top->args[1];
      if (top->kind == PredKind::arrow) psi = derived_.at(top);
      const std::size_t arity = phi->sort.is_product() ? phi->sort.components().size() : 1;
      for (const auto& a : universe_.terms(phi->sort)) {
        if (!eval(phi, a, {})) continue;
        TermPtr r = eng_.canonicalize(apply_term(c, arg_list(a, arity)));
        if (eval(psi, r, {})) continue;
        v.counterexample = a;
        if (psi->kind == PredKind::modal) fill_witness(*psi, r, v);
        break;
      }
    }
    v.bounded = bounded_;
    return v;
  }

  /// Universe members of the predicate's sort that satisfy it, sorted.
  std::vector<TermPtr> comprehend(const PredPtr& p, int depth = -1) {
    std::vector<TermPtr> out;
    for (const auto& t : universe_.terms(p->sort, depth))
      if (eval(p, t, {})) out.push_back(t);
    return out;
  }

  /// A universe member satisfying φ but not ψ, if any.
  std::optional<TermPtr> subtype_counterexample(const PredPtr& phi, const PredPtr& psi, int depth = -1) {
    for (const auto& t : universe_.terms(phi->sort, depth))
      if (eval(phi, t, {}) && !eval(psi, t, {})) return t;
    return std::nullopt;
  }

  /// Evaluates `p` at canonical `t` under bindings for its free predicate variables.
  bool eval(const PredPtr& p, const TermPtr& t, const Env& env) {
    const bool closed = p->free_vars.empty();
    if (closed) {
      auto& m = memo_[p];
      if (auto it = m.find(t); it != m.end()) {
        bounded_ = bounded_ || it->second.second;
        return it->second.first;
      }
      const bool outer = bounded_;
      bounded_ = false;
      bool v = compute(p, t, env);
      memo_[p].emplace(t, std::make_pair(v, bounded_));
      bounded_ = bounded_ || outer;
      return v;
    }
    return compute(p, t, env);
  }

 private:
  void fill_witness(const Pred& m, const TermPtr& c, Verdict& v) {
    auto [g, phi] = modal_graph(m, c, {});
    auto ext = modal_extension(g, m.modality, phi);
    auto path = modal_witness(g, m.modality, phi, ext);
    for (std::size_t i = 0; i < path.size(); ++i) {
      v.witness.push_back(g.nodes[path[i]]);
      if (i == 0) continue;
      const auto& succ = g.succ[path[i - 1]];
      for (std::size_t k = 0; k < succ.size(); ++k)
        if (succ[k] == path[i]) {
          v.witness_labels.push_back(g.labels[path[i - 1]][k]);
          break;
        }
    }
  }

  std::vector<TermPtr> arg_list(const TermPtr& t, std::size_t arity) const {
    if (arity > 1 && t->kind == TermKind::tuple) return t->args;
    return {t};
  }

  bool compute(const PredPtr& p, const TermPtr& t, const Env& env) {
    switch (p->kind) {
      case PredKind::top: return true;
      case PredKind::bottom: return false;
      case PredKind::principal:
        for (const auto& a : eng_.match(p->pattern, t)) {
          bool ok = true;
          for (const auto& [n, w] : p->where) ok = ok && eval(w, a.at(n), env);
          if (ok) return true;
        }
        return false;
      case PredKind::image:
      case PredKind::secure_image: {
        const bool secure = p->kind == PredKind::secure_image;
        for (const auto& a : eng_.match(p->pattern, t)) {
          bool ok = true;
          if (p->on_tuple) {
            std::vector<TermPtr> parts;
            for (std::size_t i = 0; i < p->pattern->args.size(); ++i) parts.push_back(a.at("_" + std::to_string(i)));
            ok = eval(p->args[0], parts.size() == 1 ? parts[0] : mk_tuple(parts), env);
          } else {
            for (std::size_t i = 0; ok && i < p->args.size(); ++i) ok = eval(p->args[i], a.at("_" + std::to_string(i)), env);
          }
          if (ok && !secure) return true;
          if (!ok && secure) return false;
        }
        return secure;
      }
      case PredKind::subst: {
        const OpDecl* d = theory().op(p->name);
        return eval(p->args[0], eng_.canonicalize(mk_op(p->name, arg_list(t, d->args.size()))), env);
      }
      case PredKind::precompose: {
        TermPtr r = apply_term(p->map, arg_list(t, p->map->binder_count()));
        return eval(p->args[0], eng_.canonicalize(r), env);
      }
      case PredKind::conj: return eval(p->args[0], t, env) && eval(p->args[1], t, env);
      case PredKind::disj: return eval(p->args[0], t, env) || eval(p->args[1], t, env);
      case PredKind::implies: return !eval(p->args[0], t, env) || eval(p->args[1], t, env);
      case PredKind::neg: return !eval(p->args[0], t, env);
      case PredKind::hom: return eval_hom(p->args[0], p->args[1], t, env);
      case PredKind::arrow: {
        auto& b = derived_[p];
        if (!b) b = pred::with_sort(pred::modal(Modality::b_star_circ, p->args[1], p->act), p->args[1]->sort);
        return eval_hom(p->args[0], b, t, env);
      }
      case PredKind::reify: {
        const Sort dom = p->sort.domain().size() == 1 ? p->sort.domain()[0] : Sort::product(p->sort.domain());
        for (std::size_t i = 1; i < p->args.size(); ++i) {
          const PredPtr chi = p->args[i];
          Env inner = env;
          inner[p->name] = [this, chi, env](const TermPtr& s) { return eval(chi, s, env); };
          for (const auto& a : universe_.terms(dom)) {
            if (!eval(chi, a, env)) continue;
            TermPtr r = eng_.canonicalize(apply_term(t, arg_list(a, p->sort.arity())));
            if (!eval(p->args[0], r, inner)) return false;
          }
        }
        return true;
      }
      case PredKind::fix: return eval_fix(p, t, env);
      case PredKind::var: {
        auto it = env.find(p->name);
        if (it == env.end()) fail(ErrorKind::unbound_variable, "unbound-variable: predicate variable " + p->name);
        return it->second(t);
      }
      case PredKind::modal: {
        auto [g, phi] = modal_graph(*p, t, env);
        if (ntt::bounded(g)) bounded_ = true;
        return modal_extension(g, p->modality, phi)[g.root];
      }
      case PredKind::named: return eval(p->args[0], t, env);
      case PredKind::extension: return p->ext->contains(t);
      case PredKind::external: return (*p->fn)(t);
    }
    return false;
  }

  bool eval_hom(const PredPtr& phi, const PredPtr& psi, const TermPtr& t, const Env& env) {
    const Sort& fs = phi->sort;
    const std::size_t arity = fs.is_product() ? fs.components().size() : 1;
    for (const auto& a : universe_.terms(fs)) {
      if (!eval(phi, a, env)) continue;
      TermPtr r = eng_.canonicalize(apply_term(t, arg_list(a, arity)));
      if (!eval(psi, r, env)) return false;
    }
    return true;
  }

  // Local Knaster-Tarski iteration: the carrier starts at {t} and grows with
  // every term the body asks the variable about.
  bool eval_fix(const PredPtr& p, const TermPtr& t, const Env& env) {
    const bool start = p->greatest;
    TermMap<bool> val;
    std::vector<TermPtr> carrier;
    std::vector<TermPtr> pending;
    auto add = [&](const TermPtr& s) {
      if (val.emplace(s, start).second) carrier.push_back(s);
    };
    add(t);
    Env inner = env;
    inner[p->name] = [&](const TermPtr& s) {
      auto it = val.find(s);
      if (it != val.end()) return it->second;
      pending.push_back(s);
      return start;
    };
    while (true) {
      bool changed = false;
      for (std::size_t i = 0; i < carrier.size(); ++i) {
        bool v = eval(p->args[0], carrier[i], inner);
        if (v != val[carrier[i]]) {
          val[carrier[i]] = v;
          changed = true;
        }
      }
      for (const auto& s : pending) {
        if (!val.contains(s)) {
          add(s);
          changed = true;
        }
      }
      pending.clear();
      if (!changed) break;
      if (carrier.size() > opts_.fix_cap) {
        bounded_ = true;
        break;
      }
    }
    return val[t];
  }

  std::pair<Graph, std::vector<bool>> modal_graph(const Pred& p, const TermPtr& t, const Env& env) {
    const PredPtr& phi = p.args[0];
    std::function<bool(const TermPtr&)> filter;
    if (auto when = expand_when(p.modality)) {
      bool want = *when;
      filter = [this, phi, env, want](const TermPtr& s) { return eval(phi, s, env) == want; };
    }
    Graph g;
    if (p.act) {
      auto names = obs_.name_pool({t});
      auto& ctxs = contexts_for(names);
      g = obs_.explore(t, opts_.act_depth, opts_.act_cap, ctxs, filter);
    } else {
      std::size_t depth = p.modality == Modality::b_bang || p.modality == Modality::b_star ? 1 : opts_.explore_depth;
      g = to_graph(eng_.explore(t, depth, opts_.explore_cap, filter));
    }
    std::vector<bool> vals(g.size());
    for (std::size_t v = 0; v < g.size(); ++v) vals[v] = eval(phi, g.nodes[v], env);
    return {std::move(g), std::move(vals)};
  }

  const std::vector<Observation>& contexts_for(const std::vector<TermPtr>& names) {
    std::vector<std::string> key;
    for (const auto& n : names) key.push_back(n->name);
    auto it = contexts_.find(key);
    if (it != contexts_.end()) return it->second;
    return contexts_.emplace(key, obs_.contexts(names)).first->second;
  }

  const Engine& eng_;
  EvalOptions opts_;
  Universe universe_;
  ObservationSystem obs_;
  std::map<PredPtr, TermMap<std::pair<bool, bool>>> memo_;
  std::map<PredPtr, PredPtr> derived_;
  std::map<std::vector<std::string>, std::vector<Observation>> contexts_;
  bool bounded_ = false;
};

/// Free names mentioned by a term or predicate, with their sorts, for extending the universe.
inline void collect_names(const PredPtr& p, std::map<std::string, Sort>& out) {
  if (p->pattern)
    for (const auto& [n, s] : free_names(p->pattern))
      if (!s.unknown()) out.emplace(n, s);
  if (p->map)
    for (const auto& [n, s] : free_names(p->map))
      if (!s.unknown()) out.emplace(n, s);
  for (const auto& a : p->args) collect_names(a, out);
  for (const auto& [n, w] : p->where) collect_names(w, out);
}

}  // namespace ntt
