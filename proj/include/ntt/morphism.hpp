#pragma once

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "ntt/eval.hpp"
#include "ntt/theories.hpp"

namespace ntt {

/// A constructor clause `map f(x1, ..., xk) = body` of a theory morphism.
struct MorphismClause {
  std::string op;
  std::vector<std::string> params;
  TermPtr body;  // target term over pattern variables ?x1..?xk
};

/// Structure-preserving map between presentations: sorts go to sorts
/// (structurally on products and functions), constructors to target terms.
class TheoryMorphism {
 public:
  std::string name;
  std::string source_name;
  std::string target_name;
  std::map<std::string, Sort> sort_map;
  std::map<std::string, MorphismClause> clauses;

  TheoryMorphism(std::shared_ptr<const Theory> src, std::shared_ptr<const Theory> tgt)
      : src_(std::move(src)), tgt_(std::move(tgt)) {}

  const Theory& source() const { return *src_; }
  const Theory& target() const { return *tgt_; }

  Sort map_sort(const Sort& s) const {
    switch (s.kind()) {
      case Sort::Kind::base: {
        if (s.unknown()) return s;
        auto it = sort_map.find(s.name());
        if (it == sort_map.end()) fail(ErrorKind::sort, "sort-error: morphism " + name + " does not map sort " + s.name());
        return it->second;
      }
      case Sort::Kind::product: {
        std::vector<Sort> parts;
        for (const auto& c : s.components()) parts.push_back(map_sort(c));
        return Sort::product(parts);
      }
      case Sort::Kind::function: {
        std::vector<Sort> dom;
        for (const auto& d : s.domain()) dom.push_back(map_sort(d));
        return Sort::function(dom, map_sort(s.codomain()));
      }
    }
    return s;
  }

  /// Structural recursion on the source term; clause bodies are instantiated
  /// and β-reduced. Pattern variables pass through with mapped sorts.
  TermPtr translate(const TermPtr& t) const {
    switch (t->kind) {
      case TermKind::op: {
        auto it = clauses.find(t->name);
        if (it == clauses.end()) fail(ErrorKind::invalid_argument, "morphism " + name + " has no clause for " + t->name);
        const MorphismClause& c = it->second;
        if (c.params.size() != t->args.size())
          fail(ErrorKind::sort, "sort-error: " + t->name + " expects " + std::to_string(c.params.size()) + " arguments");
        Assignment a;
        for (std::size_t i = 0; i < c.params.size(); ++i) a[c.params[i]] = translate(t->args[i]);
        return instantiate(c.body, a);
      }
      case TermKind::lambda: {
        std::vector<Sort> dom;
        for (const auto& s : t->binder_sorts) dom.push_back(map_sort(s));
        return mk_lambda(t->binder_names, dom, translate(t->body()));
      }
      case TermKind::bound: return t;
      case TermKind::free: return mk_free(t->name, map_sort(t->sort));
      case TermKind::meta: return mk_meta(t->name, map_sort(t->sort));
      case TermKind::apply: {
        std::vector<TermPtr> args;
        for (std::size_t i = 1; i < t->args.size(); ++i) args.push_back(translate(t->args[i]));
        return apply_term(translate(t->args.front()), std::move(args));
      }
      case TermKind::tuple: {
        std::vector<TermPtr> args;
        for (const auto& x : t->args) args.push_back(translate(x));
        return mk_tuple(std::move(args));
      }
    }
    return t;
  }

  /// Source sorts whose image is `s`.
  std::vector<Sort> preimage(const Sort& s) const {
    std::vector<Sort> out;
    for (const auto& [n, m] : sort_map)
      if (m == s) out.push_back(Sort::base(n));
    return out;
  }

 private:
  std::shared_ptr<const Theory> src_;
  std::shared_ptr<const Theory> tgt_;
};

namespace builtin_text {

inline constexpr std::string_view nlambda_to_pi = R"(morphism nlambda-to-pi : nlambda -> pi
map sort V = N
map sort T = [N -> P]
map var(x) = \u. out(x, u)
map lam(Q) = \u. in2(u, \x, w. Q(x)(w))
map app(Q, x) = \u. nu(\v. Q(v) | out2(v, x, u))
map def(Q, R) = \u. nu(\x. R(x)(u) | !in(x, Q))
map C(x, Q, R) = \u. R(u) | in(x, Q)
)";

}  // namespace builtin_text

/// Parses a morphism file. Source and target theories are resolved with `load_theory`.
inline TheoryMorphism parse_morphism(std::string_view src) {
  std::vector<std::pair<std::size_t, std::string>> lines;
  {
    std::size_t pos = 0, line_no = 0;
    while (pos <= src.size()) {
      std::size_t nl = src.find('\n', pos);
      if (nl == std::string_view::npos) nl = src.size();
      std::string l(src.substr(pos, nl - pos));
      ++line_no;
      pos = nl + 1;
      std::size_t k = l.find_first_not_of(" \t\r");
      if (k == std::string::npos || l[k] == '#') continue;
      if (k > 0 && !lines.empty()) {
        lines.back().second += " " + l;
        continue;
      }
      lines.emplace_back(line_no, l);
    }
  }
  if (lines.empty()) fail(ErrorKind::parse, "parse-error at line 1, column 1: empty morphism file");
  TokenStream head(lines[0].second, lines[0].first);
  head.expect("morphism");
  std::string name = head.expect_ident("morphism name");
  while (head.accept("-")) name += "-" + head.expect_ident("morphism name");
  head.expect(":");
  auto theory_ref = [&](TokenStream& ts) {
    std::string n = ts.expect_ident("theory name");
    while (ts.peek().is("-") && ts.peek(1).type == Token::Type::ident) {
      ts.next();
      n += "-" + ts.next().text;
    }
    return n;
  };
  std::string src_name = theory_ref(head);
  head.expect("->");
  std::string tgt_name = theory_ref(head);
  if (!head.at_end()) head.error("unexpected trailing input");
  auto s = std::make_shared<const Theory>(load_theory(src_name));
  auto t = std::make_shared<const Theory>(load_theory(tgt_name));
  TheoryMorphism m(s, t);
  m.name = name;
  m.source_name = src_name;
  m.target_name = tgt_name;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    TokenStream ts(lines[i].second, lines[i].first);
    ts.expect("map");
    if (ts.peek().is("sort") && ts.peek(1).type == Token::Type::ident && ts.peek(2).is("=")) {
      ts.next();
      std::string sn = ts.expect_ident("sort");
      if (!s->has_sort(sn)) ts.error("unknown source sort " + sn);
      ts.expect("=");
      Sort ts_sort = parse_sort(ts);
      if (!ts.at_end()) ts.error("unexpected trailing input");
      m.sort_map[sn] = ts_sort;
      continue;
    }
    std::string op = ts.expect_ident("constructor");
    const OpDecl* d = s->op(op);
    if (!d) ts.error("unknown source constructor " + op);
    std::vector<std::string> params;
    if (ts.accept("(")) {
      if (!ts.accept(")")) {
        do params.push_back(ts.expect_ident("parameter"));
        while (ts.accept(","));
        ts.expect(")");
      }
    }
    if (params.size() != d->args.size()) ts.error(op + " expects " + std::to_string(d->args.size()) + " parameters");
    ts.expect("=");
    TermScope scope;
    for (std::size_t k = 0; k < params.size(); ++k) scope.metas[params[k]] = m.map_sort(d->args[k]);
    Sort want = m.map_sort(d->result);
    TermPtr body = parse_term(*t, ts, scope, want);
    if (!ts.at_end()) ts.error("unexpected trailing input");
    SortContext ctx;
    for (const auto& [n, srt] : scope.metas) ctx.names[n] = srt;
    Sort got = check_sort(*t, ctx, body, want);
    if (got != want)
      fail(ErrorKind::sort, "sort-error: clause for " + op + " has sort " + got.str() + ", expected " + want.str());
    m.clauses[op] = MorphismClause{op, params, body};
  }
  for (const auto& srt : s->sorts)
    if (!m.sort_map.contains(srt)) fail(ErrorKind::sort, "sort-error: morphism " + name + " does not map sort " + srt);
  return m;
}

inline const std::vector<std::string>& builtin_morphism_names() {
  static const std::vector<std::string> names = {"nlambda-to-pi"};
  return names;
}

/// A built-in morphism, a morphism file, or NAME.ntm on NTT_THEORY_PATH.
inline TheoryMorphism load_morphism(const std::string& ref) {
  if (ref == "nlambda-to-pi") return parse_morphism(builtin_text::nlambda_to_pi);
  namespace fs = std::filesystem;
  if (fs::is_regular_file(ref)) return parse_morphism(read_file(ref));
  if (const char* path = std::getenv("NTT_THEORY_PATH")) {
    std::string_view rest(path);
    while (!rest.empty()) {
      auto colon = rest.find(':');
      std::string dir(rest.substr(0, colon));
      rest = colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 1);
      if (dir.empty()) continue;
      fs::path candidate = fs::path(dir) / (ref + ".ntm");
      if (fs::is_regular_file(candidate)) return parse_morphism(read_file(candidate));
    }
  }
  fail(ErrorKind::unknown_theory, "unknown-theory: no morphism named " + ref);
}

// -- rewrite preservation ----------------------------------------------------------

/// Removes receivers that can never fire: in `nu(\x. B)`, components of B
/// listening on x are dropped when no other component mentions x.
inline TermPtr erase_inert(const Rewriter& rw, const TermPtr& t0) {
  const Theory& th = rw.theory();
  const OpDecl* nu = th.op("nu");
  const OpDecl* par = th.op("par");
  if (!nu || !par) return rw.canonicalize(t0);
  const std::string unit = th.ac("par") ? th.ac("par")->unit : "0";
  std::function<bool(const TermPtr&, std::uint32_t)> mentions = [&](const TermPtr& t, std::uint32_t k) {
    if (t->loose <= k) return false;
    if (t->kind == TermKind::bound) return t->index == k;
    std::uint32_t inner = k + (t->kind == TermKind::lambda ? static_cast<std::uint32_t>(t->binder_count()) : 0);
    for (const auto& a : t->args)
      if (mentions(a, inner)) return true;
    return false;
  };
  std::function<TermPtr(const TermPtr&)> go = [&](const TermPtr& t) -> TermPtr {
    if (t->kind == TermKind::lambda) return with_args(t, {go(t->body())});
    if (t->kind != TermKind::op) return t;
    std::vector<TermPtr> args;
    for (const auto& a : t->args) args.push_back(go(a));
    TermPtr r = with_args(t, std::move(args));
    if (r->name != "nu" || r->args[0]->kind != TermKind::lambda) return r;
    const TermPtr& body = r->args[0]->body();
    std::vector<TermPtr> keep;
    bool dropped = false;
    for (const auto& c : rw.components("par", body)) {
      TermPtr recv = c;
      if (recv->kind == TermKind::op && recv->name == "bang") recv = recv->args[0];
      bool listens = recv->kind == TermKind::op && (recv->name == "in" || recv->name == "in2") &&
                     recv->args[0]->kind == TermKind::bound && recv->args[0]->index == 0;
      if (listens) dropped = true;
      else keep.push_back(c);
    }
    if (!dropped) return r;
    for (const auto& c : keep)
      if (mentions(c, 0)) return r;
    TermPtr rest = keep.empty() ? mk_op(unit) : keep.back();
    for (std::size_t i = keep.size() - 1; !keep.empty() && i-- > 0;) rest = mk_op("par", {keep[i], rest});
    return mk_op("nu", {with_args(r->args[0], {rest})});
  };
  TermPtr cur = rw.canonicalize(t0);
  for (int i = 0; i < 8; ++i) {
    TermPtr next = rw.canonicalize(go(cur));
    if (equal(next, cur)) break;
    cur = next;
  }
  return cur;
}

struct PreservationResult {
  bool preserved = false;
  std::size_t steps = 0;  // target path length to the matching state
  bool bounded = false;
};

/// Weak preservation of a source step s ⇝ s': from ⟦s⟧(u) some state within
/// `depth` target steps equals ⟦s'⟧(u) up to congruence and inert-ν erasure.
/// For sorts that translate to [N -> P], `u` is a fresh name.
inline PreservationResult weakly_preserved(const TheoryMorphism& m, const Engine& target, const TermPtr& s,
                                           const TermPtr& s2, std::size_t depth = 6, std::size_t cap = 5000) {
  auto close = [&](const TermPtr& x) {
    TermPtr tx = m.translate(x);
    if (tx->kind == TermKind::lambda && tx->binder_count() == 1) {
      return apply_term(tx, {mk_free("u'", tx->binder_sorts[0])});
    }
    return tx;
  };
  TermPtr goal = erase_inert(target, close(s2));
  RewriteGraph g = target.explore(close(s), depth, cap);
  PreservationResult r;
  r.bounded = !g.exhausted();
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    if (equal(erase_inert(target, g.nodes[v]), goal)) {
      r.preserved = true;
      r.steps = g.node_depth[v];
      return r;
    }
  }
  return r;
}

// -- predicate pullback ----------------------------------------------------------------

/// Pulls a target predicate back along the morphism: the result holds of a
/// source term t iff φ holds of translate(t). Connectives are pushed through;
/// everything else is evaluated on the translation by `target`.
inline PredPtr pullback_predicate(const TheoryMorphism& m, const PredPtr& phi, Evaluator& target,
                                  const Sort& source_sort = {}) {
  Sort ss = source_sort;
  if (ss.unknown()) {
    auto pre = m.preimage(phi->sort);
    if (pre.empty())
      fail(ErrorKind::sort, "sort-not-in-image: " + phi->sort.str() + " is not the image of a source sort");
    ss = pre.front();
  } else if (m.map_sort(ss) != phi->sort) {
    fail(ErrorKind::sort, "sort-not-in-image: " + ss.str() + " maps to " + m.map_sort(ss).str() + ", not " +
                              phi->sort.str());
  }
  switch (phi->kind) {
    case PredKind::top: return pred::top(ss);
    case PredKind::bottom: return pred::bottom(ss);
    case PredKind::neg: return pred::with_sort(pred::neg(pullback_predicate(m, phi->args[0], target, ss)), ss);
    case PredKind::conj:
    case PredKind::disj:
    case PredKind::implies: {
      auto a = pullback_predicate(m, phi->args[0], target, ss);
      auto b = pullback_predicate(m, phi->args[1], target, ss);
      PredPtr r = phi->kind == PredKind::conj   ? pred::conj(a, b)
                  : phi->kind == PredKind::disj ? pred::disj(a, b)
                                                : pred::implies(a, b);
      return pred::with_sort(r, ss);
    }
    default: break;
  }
  const TheoryMorphism* mp = &m;
  Evaluator* ev = &target;
  PredPtr keep = phi;
  return pred::external(
      ss, [mp, ev, keep](const TermPtr& t) { return ev->holds(keep, mp->translate(t)); },
      m.name + "^*(" + print(m.target(), phi) + ")");
}

}  // namespace ntt
