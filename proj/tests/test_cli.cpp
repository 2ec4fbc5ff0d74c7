#include <gtest/gtest.h>

#include <cstdio>
#include <json.hpp>
#include <sys/wait.h>

#include "ntt/step.hpp"
#include "ntt/theories.hpp"
#include "ntt/universe.hpp"
#include "oracles.hpp"

using json = nlohmann::json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome run(const std::string& args, bool with_stderr = false) {
  std::string cmd = std::string(NTT_CLI) + " " + args + (with_stderr ? " 2>&1" : " 2>/dev/null");
  Outcome r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

json run_json(const std::string& args, int want_code = 0) {
  Outcome r = run(args + " --json");
  EXPECT_EQ(r.code, want_code) << args << "\n" << r.out;
  try {
    return json::parse(r.out);
  } catch (const std::exception& e) {
    ADD_FAILURE() << args << ": " << e.what() << "\n" << r.out;
    return json::object();
  }
}

std::string sample(const char* name) { return std::string(NTT_SOURCE_DIR) + "/samples/" + name; }

}  // namespace

TEST(Cli, ValidateReportsDiagnostics) {
  json ok = run_json("validate --theory rho-pi");
  EXPECT_TRUE(ok["diagnostics"].empty());
  EXPECT_FALSE(ok["equations"].empty());
  json bad = run_json("validate --theory " + sample("broken.ntt"), 1);
  std::vector<std::string> locations;
  for (const auto& d : bad["diagnostics"]) locations.push_back(d["location"]);
  EXPECT_NE(std::find(locations.begin(), locations.end(), "op a"), locations.end());
  EXPECT_GE(locations.size(), 4u);

  Outcome other = run("trace --theory " + sample("broken.ntt") + " --term 'a'", true);
  EXPECT_EQ(other.code, 1);
  EXPECT_NE(other.out.find("invalid theory"), std::string::npos);
}

TEST(Cli, ExitCodesByErrorKind) {
  EXPECT_EQ(run("trace --theory rho-pi --term 'out(a, 0'").code, 2);
  EXPECT_EQ(run("trace --theory rho-pi --term 'out(0, a)'").code, 3);
  EXPECT_EQ(run("query --theory rho-pi --pred 'mu X. !X' --sort P").code, 3);
  EXPECT_EQ(run("bisim --theory rho-pi --left '0' --right 'a'").code, 3);
  EXPECT_EQ(run("trace --theory no-such-theory --term '0'").code, 1);
  EXPECT_EQ(run("query --theory rho-pi --pred top --sort P --universe-depth 5").code, 4);
  EXPECT_EQ(run("check --theory rho-pi --term '0' --pred '<0>' --flag bogus").code, 1);
  EXPECT_EQ(run("trace --theory rho-pi").code, 2);
  EXPECT_EQ(run("--help").code, 0);

  Outcome err = run("trace --theory rho-pi --term 'out(a, 0' --json");
  json e = json::parse(err.out);
  EXPECT_EQ(e["error"]["kind"], "parse-error");
  EXPECT_EQ(e["schema_version"], 1);
}

TEST(Cli, TraceMatchesBruteForce) {
  const ntt::Theory& th = ntt::builtin("rho-pi");
  ntt::Engine eng(th);
  for (const char* term : {"out(a, 0) | in(a, \\x. *x)", "out(a, 0) | out(a, *b) | in(a, \\x. *x)",
                           "*(@(out(b, 0))) | in(b, \\y. 0)"}) {
    json j = run_json(std::string("trace --theory rho-pi --term '") + term + "'");
    std::vector<ntt::TermPtr> states{eng.canonicalize(ntt::parse_term(th, term))};
    ntt::TermSet seen{states[0]};
    std::size_t edges = 0;
    for (std::size_t i = 0; i < states.size(); ++i)
      for (const auto& [rule, next] : oracle::rho_steps(th, states[i])) {
        ++edges;
        ntt::TermPtr c = eng.canonicalize(next);
        if (seen.insert(c).second) states.push_back(c);
      }
    EXPECT_EQ(j["nodes"].size(), states.size()) << term;
    EXPECT_EQ(j["edges"].size(), edges) << term;
    EXPECT_TRUE(j["exhausted"].get<bool>());
    EXPECT_EQ(j["command"], "trace");
  }
}

TEST(Cli, CheckAndDefinitions) {
  json safe = run_json("check --theory rho-pi --term 'in(b, \\x. 0)' --pred 'safe(a)'");
  EXPECT_FALSE(safe["result"].get<bool>());
  EXPECT_FALSE(safe["witness"].empty());
  json reach = run_json("check --theory rho-pi --term 'out(a, 0) | in(a, \\x. 0)' --pred 'B!o(<0>)'");
  EXPECT_TRUE(reach["result"].get<bool>());
  EXPECT_EQ(reach["witness"].back()["term"], "0");

  // one communication on b exposes the output on a
  json sends = run_json("check --theory rho-pi --defs " + sample("rho.defs") +
                        " --term 'in(b, \\x. out(a, 0)) | out(b, 0)' --pred 'sends(a)'");
  EXPECT_TRUE(sends["result"].get<bool>());
  json hom = run_json("check --theory rho-pi --term '\\x: N. *x' --pred 'N -> <out(-, 0)>'");
  EXPECT_FALSE(hom["result"].get<bool>());
  EXPECT_TRUE(hom["counterexample"].is_string());
}

TEST(Cli, QueryMatchesUniverse) {
  const ntt::Theory& th = ntt::builtin("rho-pi");
  ntt::Rewriter rw(th);
  ntt::Universe u(rw, {});
  std::size_t outs = 0;
  for (const auto& t : u.terms(ntt::Sort::base("P"))) outs += t->kind == ntt::TermKind::op && t->name == "out";
  json j = run_json("query --theory rho-pi --pred '<out(-, -)>'");
  EXPECT_EQ(j["count"], outs);
  EXPECT_EQ(j["universe_size"], u.terms(ntt::Sort::base("P")).size());
  json lim = run_json("query --theory rho-pi --pred '<out(-, -)>' --limit 2");
  EXPECT_EQ(lim["matches"].size(), 2u);
  EXPECT_TRUE(lim["truncated"].get<bool>());
}

TEST(Cli, BisimAndTranslate) {
  json same = run_json("bisim --theory rho-pi --left 'out(a, 0) | 0' --right 'out(a, 0)'");
  EXPECT_TRUE(same["bisimilar"].get<bool>());
  json diff = run_json("bisim --theory rho-pi --left 'out(a, 0)' --right 'out(b, 0)'");
  EXPECT_FALSE(diff["bisimilar"].get<bool>());
  EXPECT_FALSE(diff["distinguishing"].empty());

  json tr = run_json("translate --term 'var(x)'");
  EXPECT_EQ(tr["target"], "\\u. out(x, u)");
  EXPECT_EQ(tr["source_sort"], "T");
  EXPECT_EQ(tr["target_sort"], "[N -> P]");
  json steps = run_json("translate --term 'app(lam(\\x: V. var(x)), y)' --check-steps");
  ASSERT_EQ(steps["steps"].size(), 1u);
  EXPECT_EQ(steps["steps"][0]["rule"], "beta");
  EXPECT_TRUE(steps["steps"][0]["preserved"].get<bool>());
  json g = run_json("translate --morphism " + sample("graph-to-cat.ntm") + " --term 's(f)'");
  EXPECT_EQ(g["target"], "dom(f)");
}

TEST(Cli, FlagsAndTheoryFiles) {
  json off = run_json("trace --theory rho-pi --term '*(@(out(a, 0)))'");
  json on = run_json("trace --theory rho-pi --flag run_eq --term '*(@(out(a, 0)))'");
  EXPECT_EQ(off["nodes"].size(), 2u);
  EXPECT_EQ(on["nodes"].size(), 1u);
  json mutex = run_json("trace --theory " + sample("mutex.ntt") + " --term 'tok + wait + wait'");
  EXPECT_GT(mutex["nodes"].size(), 1u);
}

TEST(Cli, OutputIsDeterministic) {
  for (const char* args : {"trace --theory rho-pi --term 'out(a, 0) | out(a, *b) | in(a, \\x. *x)' --json",
                           "query --theory rho-pi --pred '<in(-, -) | ->' --json",
                           "check --theory rho-pi --term 'in(b, \\x. 0)' --pred 'safe(a)'"}) {
    Outcome a = run(args), b = run(args);
    EXPECT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out) << args;
  }
}
