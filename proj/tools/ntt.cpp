#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "ntt/bisim.hpp"
#include "ntt/eval.hpp"
#include "ntt/morphism.hpp"
#include "ntt/stdlib.hpp"
#include "ntt/theories.hpp"

namespace {

using json = nlohmann::json;
using namespace ntt;

constexpr int kSchemaVersion = 1;
constexpr const char* kVersion = "0.1.0";

struct Common {
  std::string theory = "rho-pi";
  std::vector<std::string> flags;
  std::vector<std::string> defs;
  std::size_t depth = 8;
  std::size_t cap = 2000;
  int universe_depth = 2;
  std::size_t name_pool = 2;
  bool json = false;
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::parse: return 2;
    case ErrorKind::sort:
    case ErrorKind::unbound_variable:
    case ErrorKind::non_abstraction:
    case ErrorKind::non_monotone_fix:
    case ErrorKind::non_composable: return 3;
    case ErrorKind::resource_cap: return 4;
    default: return 1;
  }
}

json envelope(const std::string& command) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["version"] = kVersion;
  j["command"] = command;
  return j;
}

Theory load(const Common& c, bool require_valid = true) {
  Theory th = load_theory(c.theory);
  for (const auto& f : c.flags) {
    auto eq = f.find('=');
    std::string name = f.substr(0, eq);
    bool on = true;
    if (eq != std::string::npos) {
      std::string v = f.substr(eq + 1);
      if (v == "on" || v == "true" || v == "1") on = true;
      else if (v == "off" || v == "false" || v == "0") on = false;
      else fail(ErrorKind::invalid_argument, "flag value must be on or off: " + f);
    }
    th.set_flag(name, on);
  }
  if (require_valid) {
    auto diags = validate_theory(th);
    if (!diags.empty())
      fail(ErrorKind::invalid_argument, "invalid theory " + th.name + ": " + diags.front().location + ": " +
                                            diags.front().reason + " (run validate for the full list)");
  }
  return th;
}

DefTable load_defs(const Theory& th, const Common& c) {
  DefTable defs = standard_defs(th);
  for (const auto& f : c.defs) parse_defs(th, defs, read_file(f));
  return defs;
}

void emit(const Common& c, const json& j, const std::string& text) {
  if (c.json) std::cout << j.dump(2) << "\n";
  else std::cout << text;
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
  return out;
}

int run_validate(const Common& c) {
  Theory th = load(c, false);
  auto diags = validate_theory(th);
  json j = envelope("validate");
  j["theory"] = th.name;
  j["diagnostics"] = json::array();
  std::string text;
  for (const auto& d : diags) {
    j["diagnostics"].push_back({{"location", d.location}, {"reason", d.reason}});
    text += d.location + ": " + d.reason + "\n";
  }
  json eqs = json::array();
  for (const auto& e : th.equations) eqs.push_back({{"name", e.name}, {"kind", to_string(e.kind)}});
  j["equations"] = eqs;
  j["bounded"] = false;
  if (diags.empty()) text = th.name + ": ok\n";
  emit(c, j, text);
  return diags.empty() ? 0 : 1;
}

int run_trace(const Common& c, const std::string& term_text) {
  Theory th = load(c);
  Engine eng(th);
  TermPtr t = parse_term(th, term_text);
  Sort s = check_sort(th, t);
  RewriteGraph g = eng.explore(t, c.depth, c.cap);
  json j = envelope("trace");
  j["theory"] = th.name;
  j["term"] = print(th, eng.canonicalize(t));
  j["sort"] = s.str();
  json nodes = json::array();
  std::string text;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    nodes.push_back({{"id", i}, {"term", print(th, g.nodes[i])}, {"depth", g.node_depth[i]}, {"expanded", bool(g.expanded[i])}});
    text += "[" + std::to_string(i) + "] " + print(th, g.nodes[i]) + "\n";
  }
  json edges = json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"from", e.from}, {"to", e.to}, {"rule", e.rule}, {"position", e.position}});
    text += "  " + std::to_string(e.from) + " --" + e.rule + "@" + e.position + "--> " + std::to_string(e.to) + "\n";
  }
  j["nodes"] = nodes;
  j["edges"] = edges;
  j["exhausted"] = g.exhausted();
  j["bounded"] = !g.exhausted() || g.cap_hit;
  emit(c, j, text);
  return 0;
}

EvalOptions eval_options(const Common& c) {
  EvalOptions o;
  o.universe.depth = c.universe_depth;
  o.universe.names = c.name_pool;
  o.explore_depth = c.depth;
  o.explore_cap = c.cap;
  return o;
}

int run_check(const Common& c, const std::string& term_text, const std::string& pred_text) {
  Theory th = load(c);
  DefTable defs = load_defs(th, c);
  Engine eng(th);
  TermPtr t = parse_term(th, term_text);
  Sort s = check_sort(th, t);
  PredPtr p = elaborate_pred(th, defs, parse_pred(th, defs, pred_text), s);
  EvalOptions o = eval_options(c);
  for (const auto& [n, ns] : free_names(t)) o.universe.extra_names.emplace(n, ns);
  collect_names(p, o.universe.extra_names);
  Evaluator ev(eng, o);
  Verdict v = ev.check(p, t);
  json j = envelope("check");
  j["theory"] = th.name;
  j["term"] = print(th, eng.canonicalize(t));
  j["sort"] = s.str();
  j["predicate"] = print(th, p);
  j["result"] = v.value;
  j["bounded"] = v.bounded;
  json w = json::array();
  std::string text = std::string(v.value ? "true" : "false") + (v.bounded ? " (bounded)" : "") + "\n";
  if (v.counterexample) text += "  counterexample input: " + print(th, v.counterexample) + "\n";
  for (std::size_t i = 0; i < v.witness.size(); ++i) {
    json step = {{"term", print(th, v.witness[i])}};
    if (i > 0 && i - 1 < v.witness_labels.size()) step["rule"] = v.witness_labels[i - 1];
    w.push_back(step);
    text += (i ? "  --" + (i - 1 < v.witness_labels.size() ? v.witness_labels[i - 1] : std::string("?")) + "--> " : "  ") +
            print(th, v.witness[i]) + "\n";
  }
  j["witness"] = w;
  j["counterexample"] = nullptr;
  if (v.counterexample) j["counterexample"] = print(th, v.counterexample);
  emit(c, j, text);
  return 0;
}

int run_bisim(const Common& c, const std::string& left, const std::string& right, std::size_t lts_cap) {
  Theory th = load(c);
  Engine eng(th);
  TermPtr p = parse_term(th, left);
  TermPtr q = parse_term(th, right);
  Sort sp = check_sort(th, p), sq = check_sort(th, q);
  if (sp != sq) fail(ErrorKind::sort, "sort-error: " + sp.str() + " vs " + sq.str());
  BisimOptions bo;
  bo.depth = c.depth;
  bo.cap = lts_cap;
  bo.act.payload_depth = c.universe_depth;
  BisimResult r = bisimilar(eng, p, q, bo);
  json j = envelope("bisim");
  j["theory"] = th.name;
  j["left"] = print(th, eng.canonicalize(p));
  j["right"] = print(th, eng.canonicalize(q));
  j["bisimilar"] = r.bisimilar;
  j["distinguishing"] = r.distinguishing;
  j["bounded"] = r.bounded;
  j["states"] = r.states;
  j["contexts"] = r.contexts;
  std::string text = std::string(r.bisimilar ? "bisimilar" : "not bisimilar") + (r.bounded ? " (bounded)" : "") + "\n";
  if (!r.bisimilar) text += "  distinguished by: " + join(r.distinguishing, " ; ") + "\n";
  emit(c, j, text);
  return 0;
}

int run_translate(const Common& c, const std::string& morphism, const std::string& term_text, bool check_steps) {
  TheoryMorphism m = load_morphism(morphism);
  Engine src(m.source());
  Engine tgt(m.target());
  TermPtr t = parse_term(m.source(), term_text);
  Sort s = check_sort(m.source(), t);
  TermPtr out = m.translate(t);
  json j = envelope("translate");
  j["morphism"] = m.name;
  j["source"] = print(m.source(), t);
  j["source_sort"] = s.str();
  j["target"] = print(m.target(), out);
  j["target_canonical"] = print(m.target(), tgt.canonicalize(out));
  j["target_sort"] = check_sort(m.target(), out).str();
  bool bounded = false;
  std::string text = print(m.target(), out) + "\n";
  if (check_steps) {
    json steps = json::array();
    for (const auto& st : src.step(t)) {
      auto r = weakly_preserved(m, tgt, t, st.target, c.depth, c.cap);
      bounded = bounded || (!r.preserved && r.bounded);
      steps.push_back({{"rule", st.rule},
                       {"position", st.position()},
                       {"source_target", print(m.source(), st.target)},
                       {"preserved", r.preserved},
                       {"target_steps", r.steps}});
      text += "  " + st.rule + " -> " + print(m.source(), st.target) + ": " +
              (r.preserved ? "preserved in " + std::to_string(r.steps) + " steps" : "not preserved") + "\n";
    }
    j["steps"] = steps;
  }
  j["bounded"] = bounded;
  emit(c, j, text);
  return 0;
}

int run_query(const Common& c, const std::string& pred_text, const std::string& sort_text, std::size_t limit) {
  Theory th = load(c);
  DefTable defs = load_defs(th, c);
  Engine eng(th);
  Sort want = sort_text.empty() ? Sort{} : parse_sort(sort_text);
  PredPtr p = elaborate_pred(th, defs, parse_pred(th, defs, pred_text), want);
  EvalOptions o = eval_options(c);
  collect_names(p, o.universe.extra_names);
  Evaluator ev(eng, o);
  const auto& universe = ev.universe().terms(p->sort);
  auto matches = ev.comprehend(p);
  json j = envelope("query");
  j["theory"] = th.name;
  j["predicate"] = print(th, p);
  j["sort"] = p->sort.str();
  j["universe_depth"] = c.universe_depth;
  j["universe_size"] = universe.size();
  j["count"] = matches.size();
  json list = json::array();
  std::string text;
  for (std::size_t i = 0; i < matches.size() && (limit == 0 || i < limit); ++i) {
    list.push_back(print(th, matches[i]));
    text += print(th, matches[i]) + "\n";
  }
  j["matches"] = list;
  j["truncated"] = limit != 0 && matches.size() > limit;
  j["bounded"] = ev.bounded();
  text += std::to_string(matches.size()) + " of " + std::to_string(universe.size()) + " terms\n";
  emit(c, j, text);
  return 0;
}

void add_common(CLI::App* app, Common& c, bool with_theory = true) {
  if (with_theory) {
    app->add_option("--theory", c.theory, "built-in theory name, theory file, or NAME on NTT_THEORY_PATH");
    app->add_option("--flag", c.flags, "turn an equation flag on or off: NAME[=on|off]");
  }
  app->add_option("--depth", c.depth, "exploration depth")->check(CLI::PositiveNumber);
  app->add_option("--cap", c.cap, "node cap for explored graphs")->check(CLI::PositiveNumber);
  app->add_option("--universe-depth", c.universe_depth, "term universe depth")->check(CLI::NonNegativeNumber);
  app->add_option("--name-pool", c.name_pool, "pool names per name sort in the universe");
  app->add_flag("--json", c.json, "emit JSON");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ntt: native type systems for rewriting theories"};
  app.require_subcommand(1);
  Common c;
  std::string term, pred, left, right, morphism = "nlambda-to-pi", sort;
  bool check_steps = false;
  std::size_t limit = 0, lts_cap = 400;

  auto* validate = app.add_subcommand("validate", "check a theory presentation");
  add_common(validate, c);

  auto* trace = app.add_subcommand("trace", "explore the rewrite graph of a term");
  add_common(trace, c);
  trace->add_option("--term", term, "term")->required();

  auto* check = app.add_subcommand("check", "decide a predicate on a term");
  add_common(check, c);
  check->add_option("--term", term, "term")->required();
  check->add_option("--pred", pred, "predicate")->required();
  check->add_option("--defs", c.defs, "definition files");

  auto* bisim = app.add_subcommand("bisim", "bisimilarity on the act transition system");
  add_common(bisim, c);
  bisim->add_option("--left", left, "left process")->required();
  bisim->add_option("--right", right, "right process")->required();
  bisim->add_option("--states", lts_cap, "state cap for the labelled system")->check(CLI::PositiveNumber);

  auto* translate = app.add_subcommand("translate", "translate a term along a theory morphism");
  add_common(translate, c, false);
  translate->add_option("--morphism", morphism, "built-in morphism name or morphism file");
  translate->add_option("--term", term, "source term")->required();
  translate->add_flag("--check-steps", check_steps, "check weak preservation of each source step");

  auto* query = app.add_subcommand("query", "list universe terms satisfying a predicate");
  add_common(query, c);
  query->add_option("--pred", pred, "predicate")->required();
  query->add_option("--sort", sort, "sort of the predicate when it cannot be inferred");
  query->add_option("--limit", limit, "print at most this many matches (0: all)");
  query->add_option("--defs", c.defs, "definition files");

  // bisim and translate use smaller defaults than exploration
  bisim->preparse_callback([&](std::size_t) { c.depth = 4; });
  translate->preparse_callback([&](std::size_t) { c.depth = 6; c.cap = 5000; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // usage errors count as parse errors; --help exits 0
    int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::parse);
  }

  try {
    if (*validate) return run_validate(c);
    if (*trace) return run_trace(c, term);
    if (*check) return run_check(c, term, pred);
    if (*bisim) return run_bisim(c, left, right, lts_cap);
    if (*translate) return run_translate(c, morphism, term, check_steps);
    if (*query) return run_query(c, pred, sort, limit);
  } catch (const Error& e) {
    if (c.json) {
      json j = envelope("error");
      j["error"] = {{"kind", to_string(e.kind())}, {"message", e.what()}};
      std::cout << j.dump(2) << "\n";
    }
    std::cerr << "ntt: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  return 0;
}
