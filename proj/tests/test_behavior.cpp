#include <gtest/gtest.h>

#include <deque>
#include <random>

#include "ntt/eval.hpp"
#include "ntt/refine.hpp"
#include "ntt/stdlib.hpp"
#include "oracles.hpp"

using namespace ntt;

namespace {

const Sort P = Sort::base("P");
const Sort N = Sort::base("N");

Verdict decide(const Engine& eng, const TermPtr& t, const std::string& pred, EvalOptions o = {}) {
  const Theory& th = eng.theory();
  DefTable defs = standard_defs(th);
  PredPtr p = elaborate_pred(th, defs, parse_pred(th, defs, pred), check_sort(th, t));
  for (const auto& [n, ns] : free_names(t)) o.universe.extra_names.emplace(n, ns);
  collect_names(p, o.universe.extra_names);
  Evaluator ev(eng, o);
  return ev.check(p, t);
}

Verdict decide(const Engine& eng, const std::string& term, const std::string& pred, EvalOptions o = {}) {
  return decide(eng, parse_term(eng.theory(), term), pred, std::move(o));
}

/// Every state reachable by brute-force reduction, or nothing if there are more than `limit`.
std::optional<std::vector<TermPtr>> reachable(const Engine& eng, const TermPtr& t, std::size_t limit) {
  const Theory& th = eng.theory();
  std::vector<TermPtr> states{eng.canonicalize(t)};
  TermSet seen{states[0]};
  for (std::size_t i = 0; i < states.size(); ++i) {
    for (const auto& [rule, next] : oracle::rho_steps(th, states[i])) {
      TermPtr c = eng.canonicalize(next);
      if (seen.insert(c).second) states.push_back(c);
      if (states.size() > limit) return std::nullopt;
    }
  }
  return states;
}

bool listens_on(const TermPtr& state, const std::function<bool(const TermPtr&)>& chan) {
  std::vector<TermPtr> parts;
  oracle::flatten_par(state, parts);
  for (const auto& c : parts)
    if (c->kind == TermKind::op && c->name == "in" && chan(c->args[0])) return true;
  return false;
}

}  // namespace

TEST(Modal, ExtensionsMatchPathSemantics) {
  std::mt19937 rng(2718);
  const std::pair<Modality, const char*> forward[] = {
      {Modality::b_bang, "!"},         {Modality::b_star, "*"},          {Modality::b_bang_circ, "!o"},
      {Modality::b_star_circ, "*o"},   {Modality::b_bang_bullet, "!."},  {Modality::b_star_bullet, "*."}};
  const std::pair<Modality, const char*> past[] = {
      {Modality::f_bang, "!"},         {Modality::f_star, "*"},          {Modality::f_bang_circ, "!o"},
      {Modality::f_star_circ, "*o"},   {Modality::f_bang_bullet, "!."},  {Modality::f_star_bullet, "*."}};
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 12;
    oracle::Adj adj(n);
    Graph g;
    g.nodes.assign(n, nullptr);
    g.succ.assign(n, {});
    g.labels.assign(n, {});
    g.expanded.assign(n, true);
    g.pruned.assign(n, false);
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t k = rng() % 3; k > 0; --k) {
        std::size_t w = rng() % n;
        adj[v].push_back(w);
        g.succ[v].push_back(w);
        g.labels[v].push_back("step");
      }
    std::vector<bool> phi(n);
    for (std::size_t v = 0; v < n; ++v) phi[v] = rng() % 2;
    for (const auto& [m, name] : forward) EXPECT_EQ(modal_extension(g, m, phi), oracle::modality(adj, name, phi)) << name;
    for (const auto& [m, name] : past)
      EXPECT_EQ(modal_extension(g, m, phi), oracle::modality(oracle::reverse(adj), name, phi)) << "past " << name;
  }
}

TEST(Modal, UniversalModalitiesUnderApproximateOnUnexpandedNodes) {
  Graph g;
  g.nodes.assign(2, nullptr);
  g.succ = {{1}, {}};
  g.labels = {{"step"}, {}};
  g.expanded = {true, false};
  g.pruned = {false, false};
  std::vector<bool> phi{true, true};
  EXPECT_FALSE(modal_extension(g, Modality::b_star_bullet, phi)[0]);
  EXPECT_TRUE(modal_extension(g, Modality::b_bang_circ, phi)[0]);
  EXPECT_FALSE(g.complete());
}

TEST(Behaviour, SafetyAndLivenessMatchReachableStates) {
  const Theory& th = builtin("rho-pi");
  Engine eng(th);
  oracle::RhoGen gen(5150);
  const TermPtr a = mk_free("a", N);
  auto is_a = [&](const TermPtr& n) { return oracle::congruent(th, n, a, N); };
  int compared = 0;
  for (int i = 0; i < 400 && compared < 60; ++i) {
    TermPtr t = gen.interacting(7);
    auto states = reachable(eng, t, 60);
    if (!states) continue;
    bool safe = true, live = true;
    for (const auto& s : *states) {
      safe = safe && !listens_on(s, [&](const TermPtr& n) { return !is_a(n); });
      live = live && listens_on(s, is_a);
    }
    Verdict vs = decide(eng, t, "safe(a)");
    Verdict vl = decide(eng, t, "live(a)");
    if (vs.bounded || vl.bounded) continue;
    ++compared;
    EXPECT_EQ(vs.value, safe) << print(th, t);
    EXPECT_EQ(vl.value, live) << print(th, t);
  }
  EXPECT_GE(compared, 30);
}

TEST(Behaviour, RaceOnOutputs) {
  Engine eng(builtin("rho-pi"));
  EXPECT_TRUE(decide(eng, "out(a, 0) | out(a, *b) | in(a, \\x. 0)", "race.out").value);
  EXPECT_FALSE(decide(eng, "out(a, 0) | out(b, 0) | in(a, \\x. 0)", "race.out").value);
  EXPECT_FALSE(decide(eng, "out(a, 0) | out(a, 0)", "race.out").value);
}

TEST(Behaviour, WitnessIsAReductionPath) {
  const Theory& th = builtin("rho-pi");
  Engine eng(th);
  Verdict v = decide(eng, "out(a, 0) | in(a, \\x. *x)", "B!o(<0>)");
  ASSERT_TRUE(v.value);
  ASSERT_GE(v.witness.size(), 2u);
  EXPECT_EQ(print(th, v.witness.back()), "0");
  for (std::size_t i = 0; i + 1 < v.witness.size(); ++i) {
    bool linked = false;
    for (const auto& [rule, next] : oracle::rho_steps(th, v.witness[i]))
      linked = linked || equal(eng.canonicalize(next), v.witness[i + 1]);
    EXPECT_TRUE(linked) << i;
  }
}

TEST(Behaviour, HomCounterexampleIsGenuine) {
  const Theory& th = builtin("rho-pi");
  Engine eng(th);
  TermPtr ctx = parse_term(th, "\\x: N. out(x, 0) | *x");
  Verdict v = decide(eng, ctx, "hom(<a>, <out(-, 0)>)");
  ASSERT_FALSE(v.value);
  ASSERT_TRUE(v.counterexample);
  EXPECT_TRUE(oracle::congruent(th, v.counterexample, mk_free("a", N), N));
  EXPECT_TRUE(decide(eng, "\\x: N. out(x, 0)", "hom(<a>, <out(-, 0)>)").value);
}

TEST(Behaviour, ArrowOnContexts) {
  Engine eng(builtin("rho-pi"));
  // with p = 0 the context yields the output itself
  EXPECT_TRUE(decide(eng, "\\p: P. p", "<0> |> <0>").value);
  EXPECT_TRUE(decide(eng, "\\p: P. p | out(a, 0)", "<0> |> <out(-, -)>").value);
  EXPECT_FALSE(decide(eng, "\\p: P. p | out(a, 0)", "<0> |> <0>").value);
}

TEST(Behaviour, ActStepsReplayInContext) {
  const Theory& th = builtin("rho-pi");
  Engine eng(th);
  ObservationSystem obs(eng);
  for (const char* text : {"in(a, \\x. *x)", "out(a, 0)", "in(a, \\x. out(b, *x)) | out(b, 0)"}) {
    TermPtr p = eng.canonicalize(parse_term(th, text));
    auto ctxs = obs.contexts(obs.name_pool({p}));
    auto steps = obs.act_steps(p, ctxs);
    EXPECT_FALSE(steps.empty()) << text;
    for (const auto& s : steps) {
      TermPtr plugged = oracle::beta(ctxs[s.context].context, {p});
      bool found = false;
      for (const auto& [rule, next] : oracle::rho_steps(th, plugged))
        found = found || equal(eng.canonicalize(next), s.target);
      EXPECT_TRUE(found) << text << " under " << ctxs[s.context].label;
    }
  }
  // 0 has no partner in any context
  TermPtr zero = parse_term(th, "0");
  EXPECT_TRUE(obs.act_steps(zero, obs.contexts(obs.name_pool({zero}))).empty());
}

TEST(Refine, GuardedCommunication) {
  const Theory& base = builtin("rho-pi");
  DefTable defs = standard_defs(base);
  NamespaceTable ns{{"z", elaborate_pred(base, defs, parse_pred(base, defs, "<@(0)>"), N)}};
  Theory th = refine_rho_pi(ns);
  EXPECT_TRUE(validate_theory(th).empty());
  Engine eng(th);
  auto rules = [&](const std::string& text) {
    std::vector<std::string> out;
    for (const auto& s : eng.step(parse_term(th, text))) out.push_back(s.rule);
    return out;
  };
  EXPECT_EQ(rules("out(a, 0) | in_z(a, \\x. *x)"), std::vector<std::string>{"comm_z"});
  EXPECT_TRUE(rules("out(a, *b) | in_z(a, \\x. *x)").empty());
  EXPECT_TRUE(rules("out(a, 0) | in(a, \\x. *x)").empty());

  NamespaceTable bad{{"w", elaborate_pred(base, defs, parse_pred(base, defs, "<0>"), P)}};
  EXPECT_THROW(refine_rho_pi(bad), Error);
}
