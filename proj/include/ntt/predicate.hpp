#pragma once

#include <functional>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "ntt/parse.hpp"

namespace ntt {

enum class PredKind {
  top,
  bottom,
  principal,     // <pattern where ?x: φ, ...>
  image,         // f(φ1, ..., φk): direct image
  secure_image,  // f*(φ1, ..., φk): secure image
  subst,         // φ[f]: pullback along a constructor
  precompose,    // φ[\x. t]: pullback along an abstraction
  conj,
  disj,
  implies,
  neg,
  hom,    // hom(φ, ψ) at a function sort
  reify,  // reify(X. F; χ1, ...)
  fix,    // mu X. φ / nu X. φ
  var,
  modal,
  named,
  arrow,      // φ |> ψ = hom(φ, B*o ψ)
  extension,  // explicit finite set of canonical terms
  external,   // opaque test supplied from outside, e.g. a pulled back predicate
};

enum class Modality { b_bang, b_star, b_bang_circ, b_bang_bullet, b_star_circ, b_star_bullet,
                      f_bang, f_star, f_bang_circ, f_bang_bullet, f_star_circ, f_star_bullet };

inline const char* to_string(Modality m) {
  switch (m) {
    case Modality::b_bang: return "B!";
    case Modality::b_star: return "B*";
    case Modality::b_bang_circ: return "B!o";
    case Modality::b_bang_bullet: return "B!.";
    case Modality::b_star_circ: return "B*o";
    case Modality::b_star_bullet: return "B*.";
    case Modality::f_bang: return "F!";
    case Modality::f_star: return "F*";
    case Modality::f_bang_circ: return "F!o";
    case Modality::f_bang_bullet: return "F!.";
    case Modality::f_star_circ: return "F*o";
    case Modality::f_star_bullet: return "F*.";
  }
  return "?";
}

inline bool is_past(Modality m) {
  return m == Modality::f_bang || m == Modality::f_star || m == Modality::f_bang_circ ||
         m == Modality::f_bang_bullet || m == Modality::f_star_circ || m == Modality::f_star_bullet;
}

struct Pred;
using PredPtr = std::shared_ptr<const Pred>;
using TermTest = std::function<bool(const TermPtr&)>;

struct Pred {
  PredKind kind = PredKind::top;
  /// Subject sort; unknown until elaborated.
  Sort sort;
  /// principal: the pattern; image/secure_image/subst: f applied to fresh pattern variables.
  TermPtr pattern;
  std::vector<std::pair<std::string, PredPtr>> where;
  /// constructor, variable, definition or modality-free label depending on kind
  std::string name;
  bool greatest = false;
  bool on_tuple = false;
  bool act = false;
  /// named: args[0] holds the elaborated body, the written arguments follow.
  bool expanded = false;
  Modality modality = Modality::b_bang;
  std::vector<PredPtr> args;
  TermPtr map;
  std::shared_ptr<const TermSet> ext;
  std::shared_ptr<const TermTest> fn;
  /// Free fix/definition variables.
  std::set<std::string> free_vars;
};

namespace pred {

inline PredPtr finish(Pred p) {
  std::set<std::string> fv;
  if (p.kind == PredKind::var) fv.insert(p.name);
  for (const auto& a : p.args)
    if (a) fv.insert(a->free_vars.begin(), a->free_vars.end());
  for (const auto& [n, w] : p.where) fv.insert(w->free_vars.begin(), w->free_vars.end());
  if (p.kind == PredKind::fix || p.kind == PredKind::reify) fv.erase(p.name);
  p.free_vars = std::move(fv);
  return std::make_shared<const Pred>(std::move(p));
}

inline PredPtr make(PredKind k, std::vector<PredPtr> args = {}, Sort s = {}) {
  Pred p;
  p.kind = k;
  p.args = std::move(args);
  p.sort = std::move(s);
  return finish(std::move(p));
}

inline PredPtr top(Sort s = {}) { return make(PredKind::top, {}, std::move(s)); }
inline PredPtr bottom(Sort s = {}) { return make(PredKind::bottom, {}, std::move(s)); }
inline PredPtr conj(PredPtr a, PredPtr b) { return make(PredKind::conj, {std::move(a), std::move(b)}); }
inline PredPtr disj(PredPtr a, PredPtr b) { return make(PredKind::disj, {std::move(a), std::move(b)}); }
inline PredPtr implies(PredPtr a, PredPtr b) { return make(PredKind::implies, {std::move(a), std::move(b)}); }
inline PredPtr neg(PredPtr a) { return make(PredKind::neg, {std::move(a)}); }
inline PredPtr hom(PredPtr a, PredPtr b) { return make(PredKind::hom, {std::move(a), std::move(b)}); }

inline PredPtr principal(TermPtr pattern, std::vector<std::pair<std::string, PredPtr>> where = {}) {
  Pred p;
  p.kind = PredKind::principal;
  p.pattern = std::move(pattern);
  p.where = std::move(where);
  return finish(std::move(p));
}

inline PredPtr image(std::string f, std::vector<PredPtr> args, bool secure = false, bool on_tuple = false) {
  Pred p;
  p.kind = secure ? PredKind::secure_image : PredKind::image;
  p.name = std::move(f);
  p.args = std::move(args);
  p.on_tuple = on_tuple;
  return finish(std::move(p));
}

inline PredPtr subst(PredPtr phi, std::string f) {
  Pred p;
  p.kind = PredKind::subst;
  p.name = std::move(f);
  p.args = {std::move(phi)};
  return finish(std::move(p));
}

inline PredPtr precompose(PredPtr phi, TermPtr map) {
  Pred p;
  p.kind = PredKind::precompose;
  p.map = std::move(map);
  p.args = {std::move(phi)};
  return finish(std::move(p));
}

inline PredPtr fix(bool greatest, std::string var, PredPtr body) {
  Pred p;
  p.kind = PredKind::fix;
  p.greatest = greatest;
  p.name = std::move(var);
  p.args = {std::move(body)};
  return finish(std::move(p));
}

inline PredPtr var(std::string name) {
  Pred p;
  p.kind = PredKind::var;
  p.name = std::move(name);
  return finish(std::move(p));
}

inline PredPtr modal(Modality m, PredPtr phi, bool act = false) {
  Pred p;
  p.kind = PredKind::modal;
  p.modality = m;
  p.act = act;
  p.args = {std::move(phi)};
  return finish(std::move(p));
}

inline PredPtr arrow(PredPtr a, PredPtr b, bool act = false) {
  Pred p;
  p.kind = PredKind::arrow;
  p.act = act;
  p.args = {std::move(a), std::move(b)};
  return finish(std::move(p));
}

/// reify(X. F; family...): args[0] = F, args[1..] = family.
inline PredPtr reify(std::string var, PredPtr body, std::vector<PredPtr> family) {
  Pred p;
  p.kind = PredKind::reify;
  p.name = std::move(var);
  p.args.push_back(std::move(body));
  for (auto& f : family) p.args.push_back(std::move(f));
  return finish(std::move(p));
}

inline PredPtr named(std::string def, std::vector<PredPtr> args) {
  Pred p;
  p.kind = PredKind::named;
  p.name = std::move(def);
  p.args = std::move(args);
  return finish(std::move(p));
}

inline PredPtr extension(Sort s, TermSet members, std::string label = "ext") {
  Pred p;
  p.kind = PredKind::extension;
  p.sort = std::move(s);
  p.name = std::move(label);
  p.ext = std::make_shared<const TermSet>(std::move(members));
  return finish(std::move(p));
}

inline PredPtr external(Sort s, TermTest test, std::string label) {
  Pred p;
  p.kind = PredKind::external;
  p.sort = std::move(s);
  p.name = std::move(label);
  p.fn = std::make_shared<const TermTest>(std::move(test));
  return finish(std::move(p));
}

inline PredPtr with_sort(const PredPtr& p, Sort s) {
  Pred q = *p;
  q.sort = std::move(s);
  return finish(std::move(q));
}

}  // namespace pred

// -- definitions -----------------------------------------------------------------

struct Definition {
  std::string name;
  std::vector<std::string> params;
  PredPtr body;
};

using DefTable = std::map<std::string, Definition>;

// -- printing ---------------------------------------------------------------------

std::string print(const Theory& th, const PredPtr& p);

namespace detail {

inline std::string print_pred(const Theory& th, const PredPtr& p, int prec) {
  auto wrap = [&](int level, std::string s) { return prec > level ? "(" + s + ")" : s; };
  auto list = [&](std::size_t from) {
    std::string out;
    for (std::size_t i = from; i < p->args.size(); ++i) {
      if (i > from) out += ", ";
      out += print_pred(th, p->args[i], 0);
    }
    return out;
  };
  switch (p->kind) {
    case PredKind::top:
      if (p->sort.is_base() || p->sort.is_function()) return p->sort.str();
      return "top";
    case PredKind::bottom: return "bot";
    case PredKind::principal: {
      std::string out = "<" + print(th, p->pattern);
      for (std::size_t i = 0; i < p->where.size(); ++i) {
        out += i ? ", " : " where ";
        out += "?" + p->where[i].first + ": " + print_pred(th, p->where[i].second, 0);
      }
      return out + ">";
    }
    case PredKind::image:
    case PredKind::secure_image: {
      const OpDecl* d = th.op(p->name);
      const bool secure = p->kind == PredKind::secure_image;
      if (p->on_tuple) return p->name + (secure ? "*" : "") + "{" + list(0) + "}";
      if (!secure && d && d->fixity == Fixity::infix && p->args.size() == 2)
        return wrap(3, print_pred(th, p->args[0], 4) + " " + d->symbol + " " + print_pred(th, p->args[1], 4));
      return p->name + (secure ? "*" : "") + "(" + list(0) + ")";
    }
    case PredKind::subst: return print_pred(th, p->args[0], 6) + "[" + p->name + "]";
    case PredKind::precompose: return print_pred(th, p->args[0], 6) + "[" + print(th, p->map) + "]";
    case PredKind::conj: return wrap(2, print_pred(th, p->args[0], 2) + " & " + print_pred(th, p->args[1], 3));
    case PredKind::disj: return wrap(1, print_pred(th, p->args[0], 1) + " || " + print_pred(th, p->args[1], 2));
    case PredKind::implies: return wrap(0, print_pred(th, p->args[0], 1) + " => " + print_pred(th, p->args[1], 0));
    case PredKind::neg: return "!" + print_pred(th, p->args[0], 5);
    case PredKind::hom: return "hom(" + list(0) + ")";
    case PredKind::reify: {
      std::string out = "reify(" + p->name + ". " + print_pred(th, p->args[0], 0);
      if (p->args.size() > 1) out += "; " + list(1);
      return out + ")";
    }
    case PredKind::fix:
      return wrap(0, std::string(p->greatest ? "nu " : "mu ") + p->name + ". " + print_pred(th, p->args[0], 0));
    case PredKind::var: return p->name;
    case PredKind::modal:
      return std::string(to_string(p->modality)) + (p->act ? "_act" : "") + "(" + print_pred(th, p->args[0], 0) + ")";
    case PredKind::named: {
      std::size_t from = p->expanded ? 1 : 0;
      if (p->args.size() == from) return p->name;
      std::string out = p->name + "(";
      for (std::size_t i = from; i < p->args.size(); ++i) {
        if (i > from) out += ", ";
        out += print_pred(th, p->args[i], 0);
      }
      return out + ")";
    }
    case PredKind::arrow:
      return wrap(0, print_pred(th, p->args[0], 1) + (p->act ? " |>act " : " |> ") + print_pred(th, p->args[1], 1));
    case PredKind::extension:
    case PredKind::external: return p->name;
  }
  return "?";
}

}  // namespace detail

inline std::string print(const Theory& th, const PredPtr& p) { return detail::print_pred(th, p, 0); }

// -- parsing ------------------------------------------------------------------------

namespace detail {

class PredParser {
 public:
  PredParser(const Theory& th, const DefTable& defs, TokenStream& ts) : th_(th), defs_(defs), ts_(ts) {}

  PredPtr parse() { return implication(); }

  std::vector<std::string> scope;  // fix variables and definition parameters

 private:
  bool in_scope(const std::string& n) const { return std::find(scope.begin(), scope.end(), n) != scope.end(); }

  // φ => ψ (right associative), φ |> ψ
  PredPtr implication() {
    PredPtr left = disjunction();
    if (ts_.accept("=>")) return pred::implies(left, implication());
    if (ts_.accept("|>")) {
      bool act = false;
      if (ts_.peek().is("act")) {
        ts_.next();
        act = true;
      }
      return pred::arrow(left, implication(), act);
    }
    return left;
  }

  PredPtr disjunction() {
    PredPtr left = conjunction();
    while (ts_.accept("||")) left = pred::disj(left, conjunction());
    return left;
  }

  PredPtr conjunction() {
    PredPtr left = infix_image();
    while (ts_.accept("&") || ts_.accept("&&")) left = pred::conj(left, infix_image());
    return left;
  }

  // images of infix constructors, e.g. φ | ψ
  PredPtr infix_image() {
    PredPtr left = unary();
    while (true) {
      const Token& t = ts_.peek();
      if (t.type != Token::Type::symbol) break;
      const OpDecl* d = th_.op_by_symbol(t.text, Fixity::infix);
      if (!d) break;
      ts_.next();
      left = pred::image(d->name, {left, unary()});
    }
    return left;
  }

  PredPtr unary() {
    if (ts_.accept("!") || ts_.accept("~")) return pred::neg(unary());
    const Token& t = ts_.peek();
    if (t.type == Token::Type::symbol) {
      if (const OpDecl* d = th_.op_by_symbol(t.text, Fixity::prefix)) {
        ts_.next();
        return pred::image(d->name, {unary()});
      }
    }
    return postfix(atom());
  }

  PredPtr postfix(PredPtr p) {
    while (ts_.peek().is("[")) {
      ts_.next();
      if (ts_.peek().is("\\")) {
        TermScope sc;
        TermPtr m = TermParser(th_, ts_, sc).term();
        ts_.expect("]");
        p = pred::precompose(p, m);
      } else {
        std::string f = ts_.expect_ident("constructor name");
        if (!th_.op(f)) ts_.error("unknown constructor " + f);
        ts_.expect("]");
        p = pred::subst(p, f);
      }
    }
    return p;
  }

  std::vector<PredPtr> arg_list(std::string_view close = ")") {
    std::vector<PredPtr> out;
    if (ts_.accept(close)) return out;
    out.push_back(parse());
    while (ts_.accept(",")) out.push_back(parse());
    ts_.expect(close);
    return out;
  }

  std::optional<Modality> modality_suffix(bool past, bool& act) {
    // after B or F: '!' or '*', then optional 'o' / '.' and optional '_act'
    bool bang;
    if (ts_.peek().is("!")) bang = true;
    else if (ts_.peek().is("*")) bang = false;
    else return std::nullopt;
    ts_.next();
    int iter = 0;  // 0 single, 1 circ, 2 bullet
    if (ts_.peek().type == Token::Type::ident) {
      const std::string& w = ts_.peek().text;
      if (w == "o" || w == "o_act") {
        iter = 1;
        act = w == "o_act";
        ts_.next();
      } else if (w == "_act" || w == "act") {
        act = true;
        ts_.next();
      }
    } else if (ts_.peek().is(".")) {
      ts_.next();
      iter = 2;
      if (ts_.peek().is("_act")) {
        act = true;
        ts_.next();
      }
    }
    static constexpr Modality table[2][2][3] = {
        {{Modality::b_star, Modality::b_star_circ, Modality::b_star_bullet},
         {Modality::b_bang, Modality::b_bang_circ, Modality::b_bang_bullet}},
        {{Modality::f_star, Modality::f_star_circ, Modality::f_star_bullet},
         {Modality::f_bang, Modality::f_bang_circ, Modality::f_bang_bullet}}};
    return table[past ? 1 : 0][bang ? 1 : 0][iter];
  }

  PredPtr principal_body() {
    TermScope sc;
    sc.holes = true;
    TermPtr pat = TermParser(th_, ts_, sc).term();
    std::vector<std::pair<std::string, PredPtr>> where;
    if (ts_.peek().is("where")) {
      ts_.next();
      do {
        ts_.accept("?");
        std::string n = ts_.expect_ident("pattern variable");
        ts_.expect(":");
        where.emplace_back(n, infix_image());
      } while (ts_.accept(","));
    }
    if (ts_.peek().is("->")) ts_.split_current();
    if (ts_.peek().is(">=")) ts_.split_current();
    ts_.expect(">");
    return pred::principal(pat, std::move(where));
  }

  PredPtr atom() {
    const Token& t = ts_.peek();
    if (t.is("(")) {
      ts_.next();
      PredPtr p = parse();
      ts_.expect(")");
      return p;
    }
    if (t.is("<")) {
      ts_.next();
      return principal_body();
    }
    if (t.is("[")) {
      Sort s = parse_sort(ts_);
      return pred::top(s);
    }
    if (t.is("?")) ts_.error("pattern variables are only allowed inside <...>");
    if (t.type != Token::Type::ident) ts_.error("expected a predicate");
    std::string w = ts_.next().text;

    if (w == "top") return pred::top();
    if (w == "bot" || w == "bottom") return pred::bottom();
    if ((w == "mu" || w == "nu") && ts_.peek().type == Token::Type::ident && ts_.peek(1).is(".")) {
      std::string x = ts_.next().text;
      ts_.expect(".");
      scope.push_back(x);
      PredPtr body = parse();
      scope.pop_back();
      return pred::fix(w == "nu", x, body);
    }
    if ((w == "B" || w == "F") && (ts_.peek().is("!") || ts_.peek().is("*"))) {
      bool act = false;
      auto m = modality_suffix(w == "F", act);
      ts_.expect("(");
      PredPtr body = parse();
      ts_.expect(")");
      return pred::modal(*m, body, act);
    }
    if (w == "not" && ts_.peek().is("(")) {
      ts_.next();
      PredPtr body = parse();
      ts_.expect(")");
      return pred::neg(body);
    }
    if (w == "hom" && ts_.peek().is("(")) {
      ts_.next();
      auto a = arg_list();
      if (a.size() != 2) ts_.error("hom takes two predicates");
      return pred::hom(a[0], a[1]);
    }
    if ((w == "arrow" || w == "arrow_act") && ts_.peek().is("(")) {
      ts_.next();
      auto a = arg_list();
      if (a.size() != 2) ts_.error("arrow takes two predicates");
      return pred::arrow(a[0], a[1], w == "arrow_act");
    }
    if (w == "reify" && ts_.peek().is("(")) {
      ts_.next();
      std::string x = ts_.expect_ident("predicate variable");
      ts_.expect(".");
      scope.push_back(x);
      PredPtr body = parse();
      scope.pop_back();
      std::vector<PredPtr> family;
      if (ts_.accept(";")) {
        family.push_back(parse());
        while (ts_.accept(",")) family.push_back(parse());
      }
      ts_.expect(")");
      return pred::reify(x, body, std::move(family));
    }
    // dotted definition names such as sole.in or race.out
    while (ts_.peek().is(".") && ts_.peek(1).type == Token::Type::ident) {
      std::string joined = w + "." + ts_.peek(1).text;
      bool known = defs_.contains(joined);
      if (!known) {
        for (const auto& [k, d] : defs_)
          if (k.rfind(joined + ".", 0) == 0) known = true;
      }
      if (!known) break;
      ts_.next();
      ts_.next();
      w = joined;
    }
    if (in_scope(w)) return pred::var(w);
    if (defs_.contains(w)) {
      std::vector<PredPtr> a;
      if (ts_.accept("(")) a = arg_list();
      return pred::named(w, std::move(a));
    }
    if (const OpDecl* d = th_.op(w)) {
      if (ts_.peek().is("*") && ts_.peek(1).is("(")) {
        ts_.next();
        ts_.next();
        return pred::image(w, arg_list(), true);
      }
      if (ts_.peek().is("*") && ts_.peek(1).is("{")) {
        ts_.next();
        ts_.next();
        return pred::image(w, arg_list("}"), true, true);
      }
      if (ts_.accept("{")) return pred::image(w, arg_list("}"), false, true);
      if (ts_.accept("(")) return pred::image(w, arg_list());
      if (d->args.empty()) return pred::principal(mk_op(w));
      ts_.error("constructor " + w + " needs predicate arguments");
    }
    if (th_.has_sort(w)) {
      if (ts_.accept("->")) {
        PredPtr cod = unary();
        return pred::hom(pred::top(Sort::base(w)), cod);
      }
      return pred::top(Sort::base(w));
    }
    // any other identifier denotes the free name (a singleton sieve)
    return pred::principal(mk_free(w, Sort{}));
  }

  const Theory& th_;
  const DefTable& defs_;
  TokenStream& ts_;
};

}  // namespace detail

/// Parses predicate surface syntax. The result is untyped; see `elaborate_pred`.
inline PredPtr parse_pred(const Theory& th, const DefTable& defs, std::string_view text,
                          const std::vector<std::string>& params = {}) {
  TokenStream ts(text);
  detail::PredParser p(th, defs, ts);
  p.scope = params;
  PredPtr out = p.parse();
  if (!ts.at_end()) ts.error("unexpected trailing input in predicate");
  return out;
}

/// Parses `def NAME(params) = body` lines into a definition table.
inline void parse_defs(const Theory& th, DefTable& defs, std::string_view src) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  std::string current;
  std::size_t current_line = 0;
  auto flush = [&] {
    if (current.empty()) return;
    TokenStream ts(current, current_line);
    ts.expect("def");
    std::string name = ts.expect_ident("definition name");
    while (ts.peek().is(".")) {
      ts.next();
      name += "." + ts.expect_ident("definition name");
    }
    std::vector<std::string> params;
    if (ts.accept("(")) {
      if (!ts.accept(")")) {
        do params.push_back(ts.expect_ident("parameter"));
        while (ts.accept(","));
        ts.expect(")");
      }
    }
    ts.expect("=");
    detail::PredParser p(th, defs, ts);
    p.scope = params;
    PredPtr body = p.parse();
    if (!ts.at_end()) ts.error("unexpected trailing input in definition");
    defs[name] = Definition{name, params, body};
    current.clear();
  };
  while (pos <= src.size()) {
    std::size_t nl = src.find('\n', pos);
    if (nl == std::string_view::npos) nl = src.size();
    std::string_view l = src.substr(pos, nl - pos);
    ++line_no;
    std::size_t k = l.find_first_not_of(" \t\r");
    if (k != std::string_view::npos && l[k] != '#') {
      if (l.substr(k, 4) == "def ") {
        flush();
        current_line = line_no;
      }
      current += std::string(l) + "\n";
    }
    pos = nl + 1;
  }
  flush();
}

// -- elaboration ---------------------------------------------------------------------

namespace detail {

inline PredPtr subst_vars(const PredPtr& p, const std::map<std::string, PredPtr>& env) {
  if (p->kind == PredKind::var) {
    auto it = env.find(p->name);
    return it == env.end() ? p : it->second;
  }
  bool touches = false;
  for (const auto& [k, v] : env) touches = touches || p->free_vars.contains(k);
  if (!touches) return p;
  std::map<std::string, PredPtr> inner = env;
  if (p->kind == PredKind::fix || p->kind == PredKind::reify) inner.erase(p->name);
  Pred q = *p;
  for (auto& a : q.args) a = subst_vars(a, p->kind == PredKind::reify ? inner : inner);
  if (p->kind == PredKind::reify) {
    // the family is outside the binder
    for (std::size_t i = 1; i < q.args.size(); ++i) q.args[i] = subst_vars(p->args[i], env);
  }
  for (auto& [n, w] : q.where) w = subst_vars(w, env);
  return pred::finish(std::move(q));
}

inline Sort tuple_sort(const std::vector<Sort>& parts) {
  return parts.size() == 1 ? parts[0] : Sort::product(parts);
}

class PredElaborator {
 public:
  PredElaborator(const Theory& th, const DefTable& defs) : th_(th), defs_(defs) {}

  PredPtr run(const PredPtr& p, Sort expected) {
    if (expected.unknown()) expected = guess(p);
    switch (p->kind) {
      case PredKind::top:
      case PredKind::bottom:
      case PredKind::extension:
      case PredKind::external: {
        Sort s = agree(p->sort, expected, p);
        if (s.unknown()) fail(ErrorKind::sort, "sort-error: cannot determine the sort of " + print(th_, p));
        return pred::with_sort(p, s);
      }
      case PredKind::principal: return principal(p, expected);
      case PredKind::image:
      case PredKind::secure_image: {
        const OpDecl& d = constructor(p->name);
        Sort s = agree(d.result, expected, p);
        Pred q = *p;
        q.sort = s;
        if (p->on_tuple) {
          if (p->args.size() != 1) fail(ErrorKind::sort, "sort-error: " + p->name + "{...} takes one tuple predicate");
          q.args = {run(p->args[0], tuple_sort(d.args))};
        } else {
          if (p->args.size() != d.args.size())
            fail(ErrorKind::sort, "sort-error: " + p->name + " expects " + std::to_string(d.args.size()) +
                                      " predicate arguments, got " + std::to_string(p->args.size()));
          for (std::size_t i = 0; i < d.args.size(); ++i) q.args[i] = run(p->args[i], d.args[i]);
        }
        q.pattern = op_pattern(d);
        return pred::finish(std::move(q));
      }
      case PredKind::subst: {
        const OpDecl& d = constructor(p->name);
        Sort s = agree(tuple_sort(d.args), expected, p);
        Pred q = *p;
        q.sort = s;
        q.args = {run(p->args[0], d.result)};
        q.pattern = op_pattern(d);
        return pred::finish(std::move(q));
      }
      case PredKind::precompose: {
        if (p->map->kind != TermKind::lambda) fail(ErrorKind::non_abstraction, "precomposition needs an abstraction");
        Sort want = expected.unknown() ? Sort{} : Sort::function(expected.is_product() && p->map->binder_count() > 1
                                                                     ? expected.components()
                                                                     : std::vector<Sort>{expected},
                                                                 Sort{});
        TermPtr m = elaborate(th_, p->map, want);
        Sort ms = check_sort(th_, m, want);
        Sort s = agree(tuple_sort(ms.domain()), expected, p);
        Pred q = *p;
        q.sort = s;
        q.map = m;
        q.args = {run(p->args[0], ms.codomain())};
        return pred::finish(std::move(q));
      }
      case PredKind::conj:
      case PredKind::disj:
      case PredKind::implies:
      case PredKind::neg:
      case PredKind::modal: {
        Pred q = *p;
        for (auto& a : q.args) a = run(a, expected);
        q.sort = q.args[0]->sort;
        for (const auto& a : q.args) agree(a->sort, q.sort, p);
        return pred::finish(std::move(q));
      }
      case PredKind::hom:
      case PredKind::arrow: {
        if (!expected.is_function())
          fail(ErrorKind::sort, "sort-error: " + print(th_, p) + " needs a function sort, got " + expected.str());
        Pred q = *p;
        q.sort = expected;
        q.args[0] = run(p->args[0], tuple_sort(expected.domain()));
        q.args[1] = run(p->args[1], expected.codomain());
        return pred::finish(std::move(q));
      }
      case PredKind::reify: {
        if (!expected.is_function())
          fail(ErrorKind::sort, "sort-error: reification needs a function sort, got " + expected.str());
        Sort dom = tuple_sort(expected.domain());
        Pred q = *p;
        q.sort = expected;
        for (std::size_t i = 1; i < q.args.size(); ++i) q.args[i] = run(p->args[i], dom);
        vars_[p->name].push_back(dom);
        q.args[0] = run(p->args[0], expected.codomain());
        vars_[p->name].pop_back();
        return pred::finish(std::move(q));
      }
      case PredKind::fix: {
        if (expected.unknown()) fail(ErrorKind::sort, "sort-error: cannot determine the sort of " + print(th_, p));
        vars_[p->name].push_back(expected);
        PredPtr body = run(p->args[0], expected);
        vars_[p->name].pop_back();
        check_positive(p->name, body, true);
        Pred q = *p;
        q.sort = expected;
        q.args = {body};
        return pred::finish(std::move(q));
      }
      case PredKind::var: {
        auto it = vars_.find(p->name);
        if (it == vars_.end() || it->second.empty())
          fail(ErrorKind::unbound_variable, "unbound-variable: predicate variable " + p->name);
        return pred::with_sort(p, agree(it->second.back(), expected, p));
      }
      case PredKind::named: {
        if (p->expanded) return p;
        auto it = defs_.find(p->name);
        if (it == defs_.end()) fail(ErrorKind::unbound_variable, "unbound-variable: unknown predicate " + p->name);
        const Definition& def = it->second;
        if (def.params.size() != p->args.size())
          fail(ErrorKind::sort, "sort-error: " + p->name + " expects " + std::to_string(def.params.size()) +
                                    " arguments, got " + std::to_string(p->args.size()));
        if (++expansion_depth_ > 64) fail(ErrorKind::invalid_argument, "definition expansion too deep at " + p->name);
        std::map<std::string, PredPtr> env;
        for (std::size_t i = 0; i < def.params.size(); ++i) env[def.params[i]] = p->args[i];
        PredPtr body = run(subst_vars(def.body, env), expected);
        --expansion_depth_;
        Pred q = *p;
        q.expanded = true;
        q.sort = body->sort;
        q.args.insert(q.args.begin(), body);
        return pred::finish(std::move(q));
      }
    }
    return p;
  }

  /// Best-effort sort of a predicate from its syntax alone.
  Sort guess(const PredPtr& p) const {
    switch (p->kind) {
      case PredKind::top:
      case PredKind::bottom:
      case PredKind::extension:
      case PredKind::external: return p->sort;
      case PredKind::principal: {
        if (p->pattern->kind == TermKind::op)
          if (const OpDecl* d = th_.op(p->pattern->name)) return d->result;
        return p->pattern->sort;
      }
      case PredKind::image:
      case PredKind::secure_image:
        if (const OpDecl* d = th_.op(p->name)) return d->result;
        return {};
      case PredKind::subst:
        if (const OpDecl* d = th_.op(p->name)) return tuple_sort(d->args);
        return {};
      case PredKind::conj:
      case PredKind::disj:
      case PredKind::implies:
      case PredKind::neg:
      case PredKind::modal:
      case PredKind::fix:
        for (const auto& a : p->args)
          if (Sort s = guess(a); !s.unknown()) return s;
        return {};
      case PredKind::hom:
      case PredKind::arrow: {
        Sort a = guess(p->args[0]);
        Sort b = guess(p->args[1]);
        if (a.unknown() || b.unknown()) return {};
        return Sort::function(a.is_product() ? a.components() : std::vector<Sort>{a}, b);
      }
      case PredKind::var: {
        auto it = vars_.find(p->name);
        return it == vars_.end() || it->second.empty() ? Sort{} : it->second.back();
      }
      case PredKind::named: {
        if (p->expanded) return p->sort;
        auto it = defs_.find(p->name);
        return it == defs_.end() ? Sort{} : guess(it->second.body);
      }
      case PredKind::precompose:
      case PredKind::reify: return {};
    }
    return {};
  }

 private:
  Sort agree(const Sort& have, const Sort& expected, const PredPtr& p) const {
    if (have.unknown()) return expected;
    if (!expected.unknown() && have != expected)
      fail(ErrorKind::sort, "sort-error: " + print(th_, p) + " has sort " + have.str() + ", expected " + expected.str());
    return have;
  }

  const OpDecl& constructor(const std::string& f) const {
    const OpDecl* d = th_.op(f);
    if (!d) fail(ErrorKind::sort, "sort-error: unknown constructor " + f);
    return *d;
  }

  static TermPtr op_pattern(const OpDecl& d) {
    std::vector<TermPtr> a;
    for (std::size_t i = 0; i < d.args.size(); ++i) a.push_back(mk_meta("_" + std::to_string(i), d.args[i]));
    return mk_op(d.name, std::move(a));
  }

  PredPtr principal(const PredPtr& p, const Sort& expected) {
    std::map<std::string, Sort> metas;
    TermPtr pat = elaborate(th_, p->pattern, expected, metas);
    SortContext ctx;
    for (const auto& [n, s] : metas) ctx.names[n] = s;
    for (const auto& [n, s] : free_names(pat)) {
      if (s.unknown()) fail(ErrorKind::sort, "sort-error: cannot determine the sort of name " + n);
      ctx.names[n] = s;
    }
    Sort s = check_sort(th_, ctx, pat, expected);
    agree(s, expected, p);
    Pred q = *p;
    q.sort = s;
    q.pattern = pat;
    for (auto& [n, w] : q.where) {
      auto it = metas.find(n);
      if (it == metas.end()) fail(ErrorKind::unbound_variable, "unbound-variable: ?" + n + " is not in the pattern");
      w = run(w, it->second);
    }
    return pred::finish(std::move(q));
  }

  void check_positive(const std::string& x, const PredPtr& p, bool positive) const {
    if (!p->free_vars.contains(x)) return;
    switch (p->kind) {
      case PredKind::var:
        if (!positive)
          fail(ErrorKind::non_monotone_fix, "non-monotone-fixpoint: " + x + " occurs negatively");
        return;
      case PredKind::neg: check_positive(x, p->args[0], !positive); return;
      case PredKind::implies:
      case PredKind::hom:
      case PredKind::arrow:
        check_positive(x, p->args[0], !positive);
        check_positive(x, p->args[1], positive);
        return;
      case PredKind::reify:
        check_positive(x, p->args[0], positive);
        for (std::size_t i = 1; i < p->args.size(); ++i) check_positive(x, p->args[i], !positive);
        return;
      case PredKind::named: check_positive(x, p->args[0], positive); return;
      default:
        for (const auto& a : p->args) check_positive(x, a, positive);
        for (const auto& [n, w] : p->where) check_positive(x, w, positive);
    }
  }

  const Theory& th_;
  const DefTable& defs_;
  std::map<std::string, std::vector<Sort>> vars_;
  int expansion_depth_ = 0;
};

}  // namespace detail

/// Assigns sorts throughout a parsed predicate, expands definitions and checks
/// that fixpoint bodies are monotone. `expected` may be unknown when the
/// predicate determines its own sort.
inline PredPtr elaborate_pred(const Theory& th, const DefTable& defs, const PredPtr& p, const Sort& expected = {}) {
  detail::PredElaborator e(th, defs);
  PredPtr out = e.run(p, expected);
  if (out->sort.unknown()) fail(ErrorKind::sort, "sort-error: cannot determine the sort of " + print(th, p));
  return out;
}

}  // namespace ntt
