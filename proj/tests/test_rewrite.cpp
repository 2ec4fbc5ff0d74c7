#include <gtest/gtest.h>

#include <set>

#include "ntt/step.hpp"
#include "ntt/theories.hpp"
#include "oracles.hpp"

using namespace ntt;

namespace {

std::set<std::pair<std::string, std::string>> step_set(const Engine& eng, const std::string& term) {
  const Theory& th = eng.theory();
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& s : eng.step(parse_term(th, term))) out.emplace(s.rule, print(th, eng.canonicalize(s.target)));
  return out;
}

std::string canon(const Engine& eng, const std::string& term) {
  return print(eng.theory(), eng.canonicalize(parse_term(eng.theory(), term)));
}

}  // namespace

TEST(Canonical, ParallelIsACWithUnit) {
  Engine eng(builtin("rho-pi"));
  EXPECT_EQ(canon(eng, "0 | out(a, 0) | 0"), canon(eng, "out(a, 0)"));
  EXPECT_EQ(canon(eng, "(*a | *b) | out(a, 0)"), canon(eng, "out(a, 0) | (*b | *a)"));
  const Theory& th = eng.theory();
  EXPECT_TRUE(equal(eng.canonicalize(parse_term(th, "in(a, \\x. 0 | *x)")), parse_term(th, "in(a, \\y. *y)")));
  EXPECT_NE(canon(eng, "out(a, *b)"), canon(eng, "out(b, *a)"));
}

TEST(Canonical, AgreesWithCongruenceClosure) {
  const Theory& th = builtin("rho-pi");
  Engine eng(th);
  const Sort P = Sort::base("P");
  oracle::RhoGen gen(17);
  int checked = 0;
  for (int i = 0; checked < 150 && i < 3000; ++i) {
    TermPtr s = gen.process(6);
    TermPtr t = gen.pick(2) ? gen.process(6) : s;
    if (equal(t, s)) {
      for (int k = 0; k < 3; ++k) {
        std::vector<TermPtr> moves;
        oracle::equation_moves(th, t, P, s->size + 2, [&](TermPtr r) { moves.push_back(r); });
        if (moves.empty()) break;
        t = moves[static_cast<std::size_t>(gen.pick(static_cast<int>(moves.size())))];
      }
    }
    ++checked;
    EXPECT_EQ(equal(eng.canonicalize(s), eng.canonicalize(t)), oracle::congruent(th, s, t, P))
        << print(th, s) << " vs " << print(th, t);
  }
}

TEST(Canonical, HeapMonoid) {
  Engine eng(builtin("heap"));
  EXPECT_EQ(canon(eng, "cell(l1, v1) + e"), canon(eng, "cell(l1, v1)"));
  EXPECT_EQ(canon(eng, "cell(l1, v1) + cell(l2, v2)"), canon(eng, "cell(l2, v2) + cell(l1, v1)"));
}

TEST(Canonical, OrientedCategoryEquations) {
  Engine eng(builtin("cat"));
  EXPECT_EQ(canon(eng, "id(dom(f)) ; f"), "f");
  EXPECT_EQ(canon(eng, "dom(id(x))"), "x");
  EXPECT_EQ(canon(eng, "(f ; g) ; h"), canon(eng, "f ; (g ; h)"));
}

TEST(Canonical, PiScopeExtrusionAndGarbage) {
  Engine eng(builtin("pi"));
  EXPECT_EQ(canon(eng, "nu(\\x. 0) | out(a, b)"), "out(a, b)");
  EXPECT_EQ(canon(eng, "nu(\\x. out(x, a)) | out(a, b)"), canon(eng, "nu(\\x. out(x, a) | out(a, b))"));
}

TEST(Step, CommAndRun) {
  Engine eng(builtin("rho-pi"));
  // comm substitutes the quoted payload, run drops a quoted process
  EXPECT_EQ(step_set(eng, "out(a, 0) | in(a, \\x. *x)"),
            (std::set<std::pair<std::string, std::string>>{{"comm", canon(eng, "*(@0)")}}));
  EXPECT_EQ(step_set(eng, "*(@(out(b, 0)))"),
            (std::set<std::pair<std::string, std::string>>{{"run", "out(b, 0)"}}));
  EXPECT_TRUE(step_set(eng, "out(a, 0) | in(b, \\x. *x)").empty());
}

TEST(Step, NoReductionUnderPrefixes) {
  Engine eng(builtin("rho-pi"));
  EXPECT_TRUE(step_set(eng, "out(c, out(a, 0) | in(a, \\x. 0))").empty());
  EXPECT_TRUE(step_set(eng, "in(c, \\y. out(a, 0) | in(a, \\x. 0))").empty());
}

TEST(Step, EverySplitIsFound) {
  Engine eng(builtin("rho-pi"));
  // two senders and one receiver on a: two distinct results
  auto s = step_set(eng, "out(a, 0) | out(a, *b) | in(a, \\x. *x)");
  EXPECT_EQ(s.size(), 2u);
  EXPECT_TRUE(s.contains({"comm", canon(eng, "out(a, *b) | *(@0)")}));
  EXPECT_TRUE(s.contains({"comm", canon(eng, "out(a, 0) | *(@(*b))")}));
}

TEST(Step, MatchesBruteForceOnRandomTerms) {
  const Theory& th = builtin("rho-pi");
  Engine eng(th);
  oracle::RhoGen gen(99);
  for (int i = 0; i < 150; ++i) {
    TermPtr t = gen.interacting(9);
    std::set<std::pair<std::string, std::string>> lib, ref;
    for (const auto& s : eng.step(t)) lib.emplace(s.rule, print(th, eng.canonicalize(s.target)));
    for (const auto& [r, x] : oracle::rho_steps(th, t)) ref.emplace(r, print(th, eng.canonicalize(x)));
    EXPECT_EQ(lib, ref) << print(th, t);
  }
}

TEST(Step, NameEqualityIsUpToCongruence) {
  Engine eng(builtin("rho-pi"));
  auto s = step_set(eng, "out(@(0 | *a), 0) | in(@(*a), \\x. *x)");
  EXPECT_EQ(s.size(), 1u);
}

TEST(Step, PolyadicAndPi) {
  Engine rp(builtin("rho-pi"));
  EXPECT_EQ(step_set(rp, "out2(a, 0, *b) | in2(a, \\x, y. *y)").size(), 1u);
  Engine pi(builtin("pi"));
  EXPECT_EQ(step_set(pi, "nu(\\x. out(x, a) | in(x, \\y. out(y, y)))"),
            (std::set<std::pair<std::string, std::string>>{{"comm", "out(a, a)"}}));
  EXPECT_EQ(step_set(pi, "!in(a, \\x. out(x, x)) | out(a, b)"),
            (std::set<std::pair<std::string, std::string>>{{"comm", canon(pi, "out(b, b) | !in(a, \\x. out(x, x))")}}));
}

TEST(Step, LambdaRulesAndCongruence) {
  Engine eng(builtin("nlambda"));
  EXPECT_EQ(step_set(eng, "app(lam(\\x. var(x)), y)"),
            (std::set<std::pair<std::string, std::string>>{{"beta", "var(y)"}}));
  EXPECT_EQ(step_set(eng, "C(x, var(y), var(x))"),
            (std::set<std::pair<std::string, std::string>>{{"fetch", "var(y)"}}));
  // a redex in function position of an application reduces; under lam it does not
  EXPECT_EQ(step_set(eng, "app(app(lam(\\x. lam(\\z. var(x))), y), w)").size(), 1u);
  EXPECT_TRUE(step_set(eng, "lam(\\z. app(lam(\\x. var(x)), z))").empty());
}

TEST(Explore, DepthCapAndExhaustion) {
  Engine eng(builtin("rho-pi"));
  const Theory& th = eng.theory();
  RewriteGraph g = eng.explore(parse_term(th, "out(a, 0) | in(a, \\x. *x)"), 8, 100);
  EXPECT_EQ(g.nodes.size(), 3u);
  EXPECT_TRUE(g.exhausted());
  EXPECT_FALSE(g.cap_hit);

  // a replicated forwarder never terminates
  TermPtr loop = parse_term(th, "!(0)(n)");
  RewriteGraph d1 = eng.explore(loop, 1, 100);
  EXPECT_EQ(d1.nodes.size(), 2u);
  EXPECT_FALSE(d1.exhausted());
  RewriteGraph capped = eng.explore(parse_term(th, "!(out(m, 0))(n)"), 50, 4);
  EXPECT_TRUE(capped.cap_hit);
  EXPECT_LE(capped.nodes.size(), 4u);
}

TEST(Explore, EdgesRecordRulesAndPositions) {
  Engine eng(builtin("rho-pi"));
  RewriteGraph g = eng.explore(parse_term(eng.theory(), "*(@0) | out(a, 0) | in(a, \\x. 0)"), 1, 100);
  std::set<std::string> rules;
  for (const auto& e : g.edges) {
    rules.insert(e.rule);
    EXPECT_EQ(e.from, g.root);
    EXPECT_FALSE(e.position.empty());
  }
  EXPECT_EQ(rules, (std::set<std::string>{"comm", "run"}));
}
