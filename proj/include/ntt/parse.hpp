#pragma once

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ntt/lexer.hpp"
#include "ntt/theory.hpp"

namespace ntt {

/// Names visible while parsing a term.
struct TermScope {
  std::vector<std::pair<std::string, Sort>> bound;  // innermost last
  std::map<std::string, Sort> metas;
  /// Unknown identifiers become pattern variables instead of free names.
  bool auto_meta = false;
  /// `-` stands for an anonymous pattern variable.
  bool holes = false;
  int hole_counter = 0;
};

Sort parse_sort(TokenStream& ts);

namespace detail {

inline std::vector<Sort> parse_sort_list(TokenStream& ts, std::string_view stop) {
  std::vector<Sort> out;
  if (ts.peek().is(stop)) return out;
  out.push_back(parse_sort(ts));
  while (ts.accept(",")) out.push_back(parse_sort(ts));
  return out;
}

}  // namespace detail

/// sort := IDENT | '[' sorts '->' sort ']' | '(' sorts ')'
inline Sort parse_sort(TokenStream& ts) {
  if (ts.accept("[")) {
    auto dom = detail::parse_sort_list(ts, "->");
    ts.expect("->");
    Sort cod = parse_sort(ts);
    ts.expect("]");
    return Sort::function(std::move(dom), std::move(cod));
  }
  if (ts.accept("(")) {
    auto parts = detail::parse_sort_list(ts, ")");
    ts.expect(")");
    return Sort::product(std::move(parts));
  }
  return Sort::base(ts.expect_ident("sort"));
}

inline Sort parse_sort(std::string_view text) {
  TokenStream ts(text);
  Sort s = parse_sort(ts);
  if (!ts.at_end()) ts.error("unexpected trailing input after sort");
  return s;
}

/// Recursive-descent parser for terms over a theory's signature.
class TermParser {
 public:
  TermParser(const Theory& th, TokenStream& ts, TermScope& scope) : th_(th), ts_(ts), scope_(scope) {}

  /// term := lambda | prefix (INFIX prefix)*
  TermPtr term() {
    if (ts_.peek().is("\\")) return lambda();
    std::vector<TermPtr> operands{prefix()};
    std::vector<const OpDecl*> ops;
    while (true) {
      const Token& t = ts_.peek();
      if (t.type != Token::Type::symbol) break;
      const OpDecl* d = th_.op_by_symbol(t.text, Fixity::infix);
      if (!d) break;
      ts_.next();
      ops.push_back(d);
      operands.push_back(ts_.peek().is("\\") ? lambda() : prefix());
    }
    if (ops.empty()) return operands[0];
    bool uniform = std::all_of(ops.begin(), ops.end(), [&](auto* d) { return d == ops[0]; });
    if (uniform) return mk_op(ops[0]->name, std::move(operands));
    TermPtr acc = operands[0];
    for (std::size_t i = 0; i < ops.size(); ++i) acc = mk_op(ops[i]->name, {acc, operands[i + 1]});
    return acc;
  }

 private:
  TermPtr lambda() {
    ts_.expect("\\");
    std::vector<std::string> names;
    std::vector<Sort> sorts;
    do {
      names.push_back(ts_.expect_ident("binder name"));
      sorts.push_back(ts_.accept(":") ? parse_sort(ts_) : Sort{});
    } while (ts_.accept(","));
    ts_.expect(".");
    for (std::size_t i = 0; i < names.size(); ++i) scope_.bound.emplace_back(names[i], sorts[i]);
    TermPtr body = term();
    scope_.bound.resize(scope_.bound.size() - names.size());
    return mk_lambda(std::move(names), std::move(sorts), std::move(body));
  }

  TermPtr prefix() {
    const Token& t = ts_.peek();
    if (t.type == Token::Type::symbol) {
      if (const OpDecl* d = th_.op_by_symbol(t.text, Fixity::prefix)) {
        ts_.next();
        return mk_op(d->name, {prefix()});
      }
      if (const Macro* m = th_.macro_by_symbol(t.text); m && ts_.peek(1).is("(")) {
        ts_.next();
        std::vector<TermPtr> a;
        while (a.size() < m->params.size() && ts_.accept("(")) {
          auto group = args();
          a.insert(a.end(), group.begin(), group.end());
        }
        return expand(*m, std::move(a));
      }
    }
    return postfix(atom());
  }

  TermPtr postfix(TermPtr head) {
    while (ts_.peek().is("(") && head->kind != TermKind::op) {
      ts_.next();
      head = mk_apply(head, args());
    }
    return head;
  }

  std::vector<TermPtr> args() {
    std::vector<TermPtr> out;
    if (ts_.accept(")")) return out;
    out.push_back(term());
    while (ts_.accept(",")) out.push_back(term());
    ts_.expect(")");
    return out;
  }

  TermPtr expand(const Macro& m, std::vector<TermPtr> a) {
    if (a.size() != m.params.size())
      ts_.error("macro " + m.name + " expects " + std::to_string(m.params.size()) + " arguments");
    Assignment as;
    for (std::size_t i = 0; i < a.size(); ++i) as[m.params[i].name] = a[i];
    return instantiate(m.body, as);
  }

  TermPtr hole() {
    return mk_meta("_" + std::to_string(++scope_.hole_counter));
  }

  TermPtr atom() {
    const Token& t = ts_.peek();
    if (t.is("\\")) return lambda();
    if (t.is("(")) {
      ts_.next();
      TermPtr first = term();
      if (ts_.accept(")")) return first;
      std::vector<TermPtr> parts{first};
      while (ts_.accept(",")) {
        if (ts_.peek().is(")")) break;
        parts.push_back(term());
      }
      ts_.expect(")");
      return mk_tuple(std::move(parts));
    }
    if (t.is("?")) {
      ts_.next();
      std::string n = ts_.expect_ident("pattern variable name");
      auto it = scope_.metas.find(n);
      return mk_meta(n, it == scope_.metas.end() ? Sort{} : it->second);
    }
    if (scope_.holes && (t.is("-") || t.is("->"))) {
      if (t.is("->")) ts_.split_current();
      ts_.next();
      return hole();
    }
    if (t.type != Token::Type::ident) ts_.error("expected a term");
    std::string n = ts_.next().text;
    for (std::size_t i = scope_.bound.size(); i-- > 0;) {
      if (scope_.bound[i].first == n) return mk_bound(static_cast<std::uint32_t>(scope_.bound.size() - 1 - i));
    }
    if (auto it = scope_.metas.find(n); it != scope_.metas.end()) return mk_meta(n, it->second);
    const bool call = ts_.peek().is("(");
    if (const OpDecl* d = th_.op(n)) {
      if (call) {
        ts_.next();
        auto a = args();
        return mk_op(n, std::move(a));
      }
      if (!d->args.empty()) ts_.error("constructor " + n + " expects arguments");
      return mk_op(n);
    }
    if (const Macro* m = th_.macro(n); m && call) {
      ts_.next();
      return expand(*m, args());
    }
    if (scope_.auto_meta) return mk_meta(n);
    return mk_free(n, Sort{});
  }

  const Theory& th_;
  TokenStream& ts_;
  TermScope& scope_;
};

// -- sort elaboration ------------------------------------------------------------

namespace detail {

struct Elaborator {
  const Theory& th;
  std::map<std::string, Sort>& metas;
  std::map<std::string, Sort> frees;
  std::vector<Sort> bound;

  std::pair<TermPtr, Sort> run(const TermPtr& t, const Sort& expected) {
    switch (t->kind) {
      case TermKind::op: {
        const OpDecl* d = th.op(t->name);
        if (!d) return {t, {}};
        const bool variadic = variadic_ok(*d) && t->args.size() > 2;
        std::vector<TermPtr> args;
        for (std::size_t i = 0; i < t->args.size(); ++i) {
          Sort want = variadic ? d->args[0] : (i < d->args.size() ? d->args[i] : Sort{});
          args.push_back(run(t->args[i], want).first);
        }
        return {with_args(t, std::move(args)), d->result};
      }
      case TermKind::bound:
        return {t, t->index < bound.size() ? bound[bound.size() - 1 - t->index] : Sort{}};
      case TermKind::free: {
        Sort s = t->sort;
        if (s.unknown()) {
          if (auto it = frees.find(t->name); it != frees.end()) s = it->second;
        }
        if (s.unknown()) s = expected;
        if (!s.unknown()) frees.emplace(t->name, s);
        return {s == t->sort ? t : mk_free(t->name, s), s};
      }
      case TermKind::meta: {
        Sort s = t->sort;
        if (s.unknown()) {
          if (auto it = metas.find(t->name); it != metas.end()) s = it->second;
        }
        if (s.unknown()) s = expected;
        if (!s.unknown()) metas.emplace(t->name, s);
        return {s == t->sort ? t : mk_meta(t->name, s), s};
      }
      case TermKind::lambda: {
        std::vector<Sort> dom = t->binder_sorts;
        for (std::size_t i = 0; i < dom.size(); ++i) {
          if (dom[i].unknown() && expected.is_function() && expected.arity() == dom.size())
            dom[i] = expected.domain()[i];
        }
        for (const auto& s : dom) bound.push_back(s);
        auto [body, bs] = run(t->body(), expected.is_function() ? expected.codomain() : Sort{});
        bound.resize(bound.size() - dom.size());
        bool known = !bs.unknown() && std::none_of(dom.begin(), dom.end(), [](const Sort& s) { return s.unknown(); });
        Sort ls = known ? Sort::function(dom, bs) : Sort{};
        return {mk_lambda(t->binder_names, dom, body), ls};
      }
      case TermKind::apply: {
        const auto& head = t->args.front();
        Sort hs;
        if (head->kind == TermKind::meta) {
          hs = head->sort;
          if (auto it = metas.find(head->name); hs.unknown() && it != metas.end()) hs = it->second;
        } else if (head->kind == TermKind::bound && head->index < bound.size()) {
          hs = bound[bound.size() - 1 - head->index];
        } else if (head->kind == TermKind::free) {
          hs = head->sort;
          if (auto it = frees.find(head->name); hs.unknown() && it != frees.end()) hs = it->second;
        }
        std::vector<TermPtr> args;
        std::vector<Sort> arg_sorts;
        for (std::size_t i = 1; i < t->args.size(); ++i) {
          Sort want = hs.is_function() && hs.arity() == t->args.size() - 1 ? hs.domain()[i - 1] : Sort{};
          auto [a, s] = run(t->args[i], want);
          args.push_back(a);
          arg_sorts.push_back(s);
        }
        if (hs.unknown() && !expected.unknown() &&
            std::none_of(arg_sorts.begin(), arg_sorts.end(), [](const Sort& s) { return s.unknown(); }))
          hs = Sort::function(arg_sorts, expected);
        auto [h, hs2] = run(head, hs);
        Sort result = hs2.is_function() ? hs2.codomain() : Sort{};
        return {apply_term(h, std::move(args)), result};
      }
      case TermKind::tuple: {
        std::vector<TermPtr> args;
        std::vector<Sort> parts;
        for (std::size_t i = 0; i < t->args.size(); ++i) {
          Sort want = expected.is_product() && expected.components().size() == t->args.size()
                          ? expected.components()[i]
                          : Sort{};
          auto [a, s] = run(t->args[i], want);
          args.push_back(a);
          parts.push_back(s);
        }
        return {with_args(t, std::move(args)), Sort::product(parts)};
      }
    }
    return {t, {}};
  }
};

}  // namespace detail

/// Assigns sorts to free names, pattern variables and binders from their
/// positions. Pattern variable sorts discovered are recorded in `metas`.
inline TermPtr elaborate(const Theory& th, const TermPtr& t, const Sort& expected,
                         std::map<std::string, Sort>& metas) {
  detail::Elaborator e{th, metas, {}, {}};
  // Two passes so that a sort learned late (e.g. from a later argument) is
  // propagated to earlier occurrences.
  auto first = e.run(t, expected).first;
  return e.run(first, expected).first;
}

inline TermPtr elaborate(const Theory& th, const TermPtr& t, const Sort& expected = {}) {
  std::map<std::string, Sort> metas;
  return elaborate(th, t, expected, metas);
}

inline TermPtr parse_term(const Theory& th, TokenStream& ts, TermScope& scope, const Sort& expected = {}) {
  TermParser p(th, ts, scope);
  TermPtr raw = p.term();
  return elaborate(th, raw, expected, scope.metas);
}

/// Parses a closed term (free names allowed) and assigns sorts.
inline TermPtr parse_term(const Theory& th, std::string_view text, const Sort& expected = {}) {
  TokenStream ts(text);
  TermScope scope;
  TermPtr t = parse_term(th, ts, scope, expected);
  if (!ts.at_end()) ts.error("unexpected trailing input");
  return t;
}

/// Parses a pattern: `?x` and unknown identifiers are pattern variables, `-` is a hole.
inline TermPtr parse_pattern(const Theory& th, std::string_view text, const Sort& expected = {}) {
  TokenStream ts(text);
  TermScope scope;
  scope.holes = true;
  TermPtr t = parse_term(th, ts, scope, expected);
  if (!ts.at_end()) ts.error("unexpected trailing input");
  return t;
}

// -- theory files ------------------------------------------------------------------

namespace detail {

inline bool is_decl_keyword(std::string_view w) {
  static constexpr std::string_view kws[] = {"theory", "sort", "sorts", "pool", "names", "op",
                                            "eq", "rule", "flag", "macro"};
  for (auto k : kws)
    if (k == w) return true;
  return false;
}

struct RawDecl {
  std::string keyword;
  std::string text;
  std::size_t line = 1;
};

/// Groups lines into declarations: a declaration starts at a line whose first
/// word is a keyword and continues over following lines that do not.
inline std::vector<RawDecl> split_decls(std::string_view src) {
  std::vector<RawDecl> out;
  std::size_t line = 0;
  std::size_t pos = 0;
  while (pos <= src.size()) {
    std::size_t nl = src.find('\n', pos);
    if (nl == std::string_view::npos) nl = src.size();
    std::string_view l = src.substr(pos, nl - pos);
    ++line;
    std::size_t k = l.find_first_not_of(" \t\r");
    if (k != std::string_view::npos && l[k] != '#') {
      std::size_t e = k;
      while (e < l.size() && ident_char(l[e])) ++e;
      std::string_view word = l.substr(k, e - k);
      if (is_decl_keyword(word)) {
        out.push_back({std::string(word), std::string(l.substr(e)), line});
      } else if (!out.empty()) {
        out.back().text += "\n";
        out.back().text += l;
      } else {
        fail(ErrorKind::parse, "parse-error at line " + std::to_string(line) + ": expected a declaration keyword");
      }
    }
    pos = nl + 1;
  }
  return out;
}

inline std::vector<PatternVar> parse_params(TokenStream& ts) {
  std::vector<PatternVar> out;
  if (!ts.accept("(")) return out;
  if (ts.accept(")")) return out;
  do {
    std::string n = ts.expect_ident("parameter name");
    ts.expect(":");
    out.push_back({n, parse_sort(ts)});
  } while (ts.accept(","));
  ts.expect(")");
  return out;
}

inline void expect_end(TokenStream& ts) {
  if (!ts.at_end()) ts.error("unexpected trailing input");
}

}  // namespace detail

/// Parses the textual theory format. Signature declarations are read first so
/// equations and rules may mention constructors declared later in the file.
inline Theory parse_theory(std::string_view src) {
  using detail::expect_end;
  Theory th;
  auto decls = detail::split_decls(src);
  for (const auto& d : decls) {
    TokenStream ts(d.text, d.line);
    if (d.keyword == "theory") {
      th.name = ts.expect_ident("theory name");
      while (ts.peek().is("-")) {
        ts.next();
        th.name += "-" + ts.expect_ident("theory name");
      }
      expect_end(ts);
    } else if (d.keyword == "sort" || d.keyword == "sorts") {
      do th.sorts.push_back(ts.expect_ident("sort name"));
      while (ts.accept(","));
      expect_end(ts);
    } else if (d.keyword == "pool") {
      do th.pool_sorts.push_back(ts.expect_ident("sort name"));
      while (ts.accept(","));
      expect_end(ts);
    } else if (d.keyword == "names") {
      th.pool_names.clear();
      while (!ts.at_end()) th.pool_names.push_back(ts.expect_ident("name"));
    } else if (d.keyword == "op") {
      OpDecl op;
      op.name = ts.expect_ident("constructor name");
      ts.expect(":");
      if (!ts.accept("->")) {
        auto first = detail::parse_sort_list(ts, "->");
        if (ts.accept("->")) {
          op.args = std::move(first);
          op.result = parse_sort(ts);
        } else if (first.size() == 1) {
          op.result = first[0];
        } else {
          ts.error("expected '->'");
        }
      } else {
        op.result = parse_sort(ts);
      }
      while (!ts.at_end()) {
        std::string attr = ts.expect_ident("attribute");
        if (attr == "infix" || attr == "prefix") {
          if (ts.at_end()) ts.error("expected a symbol");
          op.fixity = attr == "infix" ? Fixity::infix : Fixity::prefix;
          op.symbol = ts.next().text;
        } else if (attr == "nogen") {
          op.generate = false;
        } else {
          ts.error("unknown attribute " + attr);
        }
      }
      if (op.fixity == Fixity::infix && op.args.size() != 2)
        fail(ErrorKind::parse, "parse-error at line " + std::to_string(d.line) + ": infix constructor must be binary");
      if (op.fixity == Fixity::prefix && op.args.size() != 1)
        fail(ErrorKind::parse, "parse-error at line " + std::to_string(d.line) + ": prefix constructor must be unary");
      th.ops.push_back(std::move(op));
    } else if (d.keyword == "flag") {
      std::string n = ts.expect_ident("flag name");
      std::string v = ts.expect_ident("on or off");
      if (v != "on" && v != "off") ts.error("expected on or off");
      th.flags[n] = v == "on";
      expect_end(ts);
    }
  }
  for (const auto& d : decls) {
    TokenStream ts(d.text, d.line);
    if (d.keyword == "eq") {
      StructuralEquation eq;
      eq.name = ts.expect_ident("equation name");
      eq.params = detail::parse_params(ts);
      ts.expect(":");
      TermScope scope;
      scope.auto_meta = true;
      for (const auto& p : eq.params) scope.metas[p.name] = p.sort;
      TermPtr l = TermParser(th, ts, scope).term();
      if (ts.accept("=>")) {
        eq.directed = true;
      } else {
        ts.expect("=");
      }
      TermPtr r = TermParser(th, ts, scope).term();
      expect_end(ts);
      // elaborate each side twice so both learn pattern-variable sorts from the other
      l = elaborate(th, l, {}, scope.metas);
      r = elaborate(th, r, {}, scope.metas);
      eq.lhs = elaborate(th, l, {}, scope.metas);
      eq.rhs = elaborate(th, r, {}, scope.metas);
      if (eq.params.empty())
        for (const auto& [n, s] : scope.metas) eq.params.push_back({n, s});
      th.equations.push_back(std::move(eq));
    } else if (d.keyword == "rule") {
      RewriteRule r;
      r.name = ts.expect_ident("rule name");
      const bool explicit_params = ts.peek().is("(");
      r.params = detail::parse_params(ts);
      ts.expect(":");
      TermScope scope;
      scope.auto_meta = true;
      for (const auto& p : r.params) scope.metas[p.name] = p.sort;
      TermPtr src_t = TermParser(th, ts, scope).term();
      ts.expect("~>");
      TermPtr tgt = TermParser(th, ts, scope).term();
      if (ts.accept("[")) {
        std::string kw = ts.expect_ident("congruence");
        if (kw != "congruence") ts.error("expected 'congruence'");
        ts.expect(":");
        do {
          CongruencePosition c;
          c.op = ts.expect_ident("constructor name");
          ts.expect(".");
          std::string idx = ts.expect_ident("argument index");
          try {
            c.arg = std::stoul(idx);
          } catch (...) {
            ts.error("expected argument index");
          }
          r.congruence.push_back(c);
        } while (ts.accept(","));
        ts.expect("]");
      }
      expect_end(ts);
      std::map<std::string, Sort> learned = scope.metas;
      src_t = elaborate(th, src_t, {}, learned);
      Sort want;
      if (src_t->kind == TermKind::op)
        if (const OpDecl* od = th.op(src_t->name)) want = od->result;
      r.source = src_t;
      r.target = elaborate(th, tgt, want, learned);
      r.source = elaborate(th, r.source, {}, learned);
      if (!explicit_params) {
        for (const auto& m : metas_of(r.source)) r.params.push_back({m, learned[m]});
      }
      th.rules.push_back(std::move(r));
    } else if (d.keyword == "macro") {
      Macro m;
      m.name = ts.expect_ident("macro name");
      m.params = detail::parse_params(ts);
      if (ts.peek().is("prefix")) {
        ts.next();
        if (ts.at_end()) ts.error("expected a symbol");
        m.symbol = ts.next().text;
      }
      ts.expect("=");
      TermScope scope;
      for (const auto& p : m.params) scope.metas[p.name] = p.sort;
      m.body = parse_term(th, ts, scope);
      expect_end(ts);
      th.macros.push_back(std::move(m));
    }
  }
  th.finalize();
  return th;
}

}  // namespace ntt
