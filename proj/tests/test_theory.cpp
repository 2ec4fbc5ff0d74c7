#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ntt/theories.hpp"
#include "ntt/universe.hpp"

using namespace ntt;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::invalid_argument;
}

bool has_diag(const std::vector<Diagnostic>& ds, const std::string& loc, const std::string& reason_part) {
  for (const auto& d : ds)
    if (d.location == loc && d.reason.find(reason_part) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST(Theory, BuiltinsValidateClean) {
  for (const auto& name : builtin_names()) {
    auto ds = validate_theory(builtin(name));
    EXPECT_TRUE(ds.empty()) << name << ": " << (ds.empty() ? "" : ds.front().location + " " + ds.front().reason);
  }
}

TEST(Theory, RhoPiSignature) {
  const Theory& th = builtin("rho-pi");
  for (const char* op : {"0", "par", "quote", "drop", "out", "in", "out2", "in2"}) EXPECT_NE(th.op(op), nullptr) << op;
  const AcInfo* par = th.ac("par");
  ASSERT_NE(par, nullptr);
  EXPECT_TRUE(par->associative);
  EXPECT_TRUE(par->commutative);
  EXPECT_EQ(par->unit, "0");
  EXPECT_EQ(th.ac("out"), nullptr);
  EXPECT_FALSE(th.op("out2")->generate);
  EXPECT_TRUE(th.op("out")->generate);
}

TEST(Theory, ValidationReportsEachProblem) {
  Theory th = parse_theory(R"(theory broken
sort A
op a : -> A
op f : A, Q -> A
op a : -> A
rule r(x: A) : f(x, y) ~> x  [congruence: f.2]
)");
  auto ds = validate_theory(th);
  EXPECT_TRUE(has_diag(ds, "op a", "duplicate"));
  EXPECT_TRUE(has_diag(ds, "op f", "undeclared sort Q"));
  EXPECT_TRUE(has_diag(ds, "rule r", "unbound pattern variable"));
  EXPECT_TRUE(has_diag(ds, "rule r", "out of range"));
}

TEST(Theory, RuleSidesMustAgree) {
  Theory th = parse_theory(R"(theory t
sort A, B
op a : -> A
op b : -> B
rule bad() : a ~> b
)");
  EXPECT_TRUE(has_diag(validate_theory(th), "rule bad", "different sorts"));
}

TEST(Theory, SortChecking) {
  const Theory& th = builtin("rho-pi");
  EXPECT_EQ(check_sort(th, parse_term(th, "out(a, 0)")), Sort::base("P"));
  EXPECT_EQ(check_sort(th, parse_term(th, "@(out(a, 0))")), Sort::base("N"));
  EXPECT_EQ(check_sort(th, parse_term(th, "in(a, \\x. *x | out(x, 0))")), Sort::base("P"));
  EXPECT_EQ(check_sort(th, parse_term(th, "\\p: P. p | 0")), Sort::function({Sort::base("P")}, Sort::base("P")));
  EXPECT_EQ(kind_of([&] { check_sort(th, parse_term(th, "out(0, a)")); }), ErrorKind::sort);
  EXPECT_EQ(kind_of([&] { check_sort(th, parse_term(th, "*0")); }), ErrorKind::sort);
}

TEST(Theory, ParseErrorsCarryPosition) {
  const Theory& th = builtin("rho-pi");
  try {
    parse_term(th, "out(a, 0");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("column"), std::string::npos);
  }
  EXPECT_EQ(kind_of([&] { parse_term(th, "out(a, 0) 0"); }), ErrorKind::parse);
  EXPECT_EQ(kind_of([] { parse_theory("theory t\nsort A\nop a -> A\n"); }), ErrorKind::parse);
}

TEST(Theory, PrintParseRoundTripOverUniverse) {
  for (const char* name : {"rho-pi", "pi", "nlambda", "heap"}) {
    const Theory& th = builtin(name);
    Rewriter rw(th);
    UniverseOptions o;
    o.depth = 2;
    Universe u(rw, o);
    for (const auto& s : th.sorts) {
      for (const auto& t : u.terms(Sort::base(s))) {
        std::string text = print(th, t);
        TermPtr back = rw.canonicalize(parse_term(th, text));
        EXPECT_TRUE(equal(back, t)) << name << ": " << text << " reparsed as " << print(th, back);
      }
    }
  }
}

TEST(Theory, FlagsToggleEquations) {
  Theory th = builtin("rho-pi");
  Rewriter off(th);
  TermPtr t = parse_term(th, "*(@(out(a, 0)))");
  EXPECT_EQ(print(th, off.canonicalize(t)), "*(@out(a, 0))");
  th.set_flag("run_eq", true);
  Rewriter on(th);
  EXPECT_EQ(print(th, on.canonicalize(t)), "out(a, 0)");
  EXPECT_EQ(kind_of([&] { th.set_flag("no_such_flag", true); }), ErrorKind::invalid_argument);
}

TEST(Theory, ReplicationMacroExpands) {
  const Theory& th = builtin("rho-pi");
  Rewriter rw(th);
  TermPtr m = rw.canonicalize(parse_term(th, "!(0)(n)"));
  TermPtr expanded = rw.canonicalize(
      parse_term(th, "out(n, in(n, \\x. out(n, *x) | *x) | 0) | in(n, \\x. out(n, *x) | *x)"));
  EXPECT_TRUE(equal(m, expanded));
}

TEST(Theory, LoadFromFileAndSearchPath) {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "ntt_theory_test";
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "tiny.ntt");
    out << "theory tiny\nsort A\nop a : -> A\nop g : A -> A\nrule shrink(x: A) : g(x) ~> x\n";
  }
  EXPECT_EQ(load_theory((dir / "tiny.ntt").string()).name, "tiny");
  setenv("NTT_THEORY_PATH", ("/nonexistent:" + dir.string()).c_str(), 1);
  EXPECT_EQ(load_theory("tiny").name, "tiny");
  unsetenv("NTT_THEORY_PATH");
  EXPECT_EQ(kind_of([] { load_theory("tiny-missing"); }), ErrorKind::unknown_theory);
  fs::remove_all(dir);
}

TEST(Theory, SamplesLoad) {
  const std::string dir = std::string(NTT_SOURCE_DIR) + "/samples/";
  EXPECT_TRUE(validate_theory(load_theory(dir + "mutex.ntt")).empty());
  EXPECT_FALSE(validate_theory(load_theory(dir + "broken.ntt")).empty());
}
