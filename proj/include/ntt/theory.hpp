#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "ntt/error.hpp"
#include "ntt/sort.hpp"
#include "ntt/term.hpp"

namespace ntt {

enum class Fixity { call, infix, prefix };

struct OpDecl {
  std::string name;
  std::vector<Sort> args;
  Sort result;
  Fixity fixity = Fixity::call;
  std::string symbol;
  /// Whether universe generation enumerates this constructor.
  bool generate = true;

  const std::string& display() const { return symbol.empty() ? name : symbol; }
};

struct PatternVar {
  std::string name;
  Sort sort;
};

struct CongruencePosition {
  std::string op;
  std::size_t arg = 0;

  friend bool operator==(const CongruencePosition&, const CongruencePosition&) = default;
  friend auto operator<=>(const CongruencePosition&, const CongruencePosition&) = default;
};

enum class EquationKind { associativity, commutativity, unit, oriented, permutative, unfold, invalid };

inline const char* to_string(EquationKind k) {
  switch (k) {
    case EquationKind::associativity: return "associativity";
    case EquationKind::commutativity: return "commutativity";
    case EquationKind::unit: return "unit";
    case EquationKind::oriented: return "oriented";
    case EquationKind::permutative: return "permutative";
    case EquationKind::unfold: return "unfold";
    case EquationKind::invalid: return "invalid";
  }
  return "?";
}

struct StructuralEquation {
  std::string name;
  std::vector<PatternVar> params;
  TermPtr lhs;
  TermPtr rhs;
  EquationKind kind = EquationKind::invalid;
  /// For associativity/commutativity/unit: the operator concerned.
  std::string op;
  /// For unit equations: the unit constant.
  std::string unit;
  /// Written with `=>`: always used left to right.
  bool directed = false;
};

struct RewriteRule {
  std::string name;
  std::vector<PatternVar> params;
  TermPtr source;
  TermPtr target;
  std::vector<CongruencePosition> congruence;
  /// Optional side condition on the match (used by refined theories).
  std::function<bool(const Assignment&)> guard;
  std::string guard_text;

  bool propagates_through(const std::string& op, std::size_t arg) const {
    for (const auto& c : congruence)
      if (c.op == op && c.arg == arg) return true;
    return false;
  }
  bool propagates_through(const std::string& op) const {
    for (const auto& c : congruence)
      if (c.op == op) return true;
    return false;
  }
};

struct Macro {
  std::string name;
  std::vector<PatternVar> params;
  TermPtr body;
  /// Optional prefix symbol: `!(p)(n)` expands like `name(p, n)`.
  std::string symbol;
};

struct Diagnostic {
  std::string location;
  std::string reason;

  friend bool operator==(const Diagnostic&, const Diagnostic&) = default;
};

struct AcInfo {
  bool associative = false;
  bool commutative = false;
  std::string unit;
};

/// A λ-theory presentation with structural equations and rewrite rules.
class Theory {
 public:
  std::string name;
  std::vector<std::string> sorts;
  /// Sorts whose universe carriers include free names from the name pool.
  std::vector<std::string> pool_sorts;
  /// Preferred spelling of pool names, in order.
  std::vector<std::string> pool_names = {"n", "a", "b", "m", "c", "d", "k", "l"};
  std::vector<OpDecl> ops;
  std::vector<StructuralEquation> equations;
  std::vector<RewriteRule> rules;
  std::map<std::string, bool> flags;
  std::vector<Macro> macros;

  bool has_sort(std::string_view s) const {
    return std::find(sorts.begin(), sorts.end(), s) != sorts.end();
  }

  bool is_pool_sort(const Sort& s) const {
    return s.is_base() && std::find(pool_sorts.begin(), pool_sorts.end(), s.name()) != pool_sorts.end();
  }

  const OpDecl* op(std::string_view n) const {
    for (const auto& o : ops)
      if (o.name == n) return &o;
    return nullptr;
  }

  const OpDecl* op_by_symbol(std::string_view sym, Fixity fixity) const {
    for (const auto& o : ops)
      if (o.fixity == fixity && o.symbol == sym) return &o;
    return nullptr;
  }

  /// Looks an operator up by name or by its infix/prefix symbol.
  const OpDecl* find_op(std::string_view n) const {
    if (auto* o = op(n)) return o;
    for (const auto& o2 : ops)
      if (!o2.symbol.empty() && o2.symbol == n) return &o2;
    return nullptr;
  }

  const Macro* macro(std::string_view n) const {
    for (const auto& m : macros)
      if (m.name == n) return &m;
    return nullptr;
  }

  const Macro* macro_by_symbol(std::string_view sym) const {
    for (const auto& m : macros)
      if (!m.symbol.empty() && m.symbol == sym) return &m;
    return nullptr;
  }

  const RewriteRule* rule(std::string_view n) const {
    for (const auto& r : rules)
      if (r.name == n) return &r;
    return nullptr;
  }

  bool equation_active(const StructuralEquation& eq) const {
    auto it = flags.find(eq.name);
    return it == flags.end() || it->second;
  }

  bool flag(const std::string& n) const {
    auto it = flags.find(n);
    return it != flags.end() && it->second;
  }

  void set_flag(const std::string& n, bool on) {
    if (!flags.contains(n)) fail(ErrorKind::invalid_argument, "unknown flag " + n + " in theory " + name);
    flags[n] = on;
  }

  const AcInfo* ac(const std::string& op_name) const {
    auto it = ac_.find(op_name);
    return it == ac_.end() ? nullptr : &it->second;
  }

  /// Classifies equations into the supported shapes and records AC(U) data.
  void finalize();

 private:
  std::map<std::string, AcInfo> ac_;
};

// -- equation classification -------------------------------------------------

namespace detail {

inline bool is_meta(const TermPtr& t) { return t->kind == TermKind::meta; }

inline bool binary_op(const TermPtr& t) { return t->kind == TermKind::op && t->args.size() == 2; }

inline bool contains_instance(const TermPtr& hay, const TermPtr& needle) {
  if (equal(hay, needle)) return true;
  for (const auto& a : hay->args)
    if (contains_instance(a, needle)) return true;
  return false;
}

inline void classify(StructuralEquation& eq, const Theory& th) {
  const auto& l = eq.lhs;
  const auto& r = eq.rhs;
  eq.kind = EquationKind::invalid;
  if (!l || !r) return;
  if (eq.directed) {
    if (is_meta(l)) return;
    auto lm = metas_of(l);
    for (const auto& m : metas_of(r))
      if (!lm.contains(m)) return;
    eq.kind = EquationKind::oriented;
    return;
  }
  // commutativity: f(x, y) = f(y, x)
  if (binary_op(l) && binary_op(r) && l->name == r->name && is_meta(l->args[0]) && is_meta(l->args[1]) &&
      l->args[0]->name != l->args[1]->name && equal(l->args[0], r->args[1]) && equal(l->args[1], r->args[0])) {
    eq.kind = EquationKind::commutativity;
    eq.op = l->name;
    return;
  }
  // associativity: f(f(x, y), z) = f(x, f(y, z)) in either orientation
  auto assoc_shape = [](const TermPtr& a, const TermPtr& b) {
    if (!binary_op(a) || !binary_op(b) || a->name != b->name) return false;
    const auto& f = a->name;
    if (!binary_op(a->args[0]) || a->args[0]->name != f || !binary_op(b->args[1]) || b->args[1]->name != f)
      return false;
    const auto& x = a->args[0]->args[0];
    const auto& y = a->args[0]->args[1];
    const auto& z = a->args[1];
    return is_meta(x) && is_meta(y) && is_meta(z) && equal(b->args[0], x) && equal(b->args[1]->args[0], y) &&
           equal(b->args[1]->args[1], z);
  };
  if (assoc_shape(l, r) || assoc_shape(r, l)) {
    eq.kind = EquationKind::associativity;
    eq.op = l->name;
    return;
  }
  // unit: f(x, e) = x or f(e, x) = x
  auto unit_shape = [&](const TermPtr& a, const TermPtr& b) -> bool {
    if (!binary_op(a) || !is_meta(b)) return false;
    for (int side = 0; side < 2; ++side) {
      const auto& x = a->args[side];
      const auto& e = a->args[1 - side];
      if (equal(x, b) && e->kind == TermKind::op && e->args.empty()) {
        eq.op = a->name;
        eq.unit = e->name;
        return true;
      }
    }
    return false;
  };
  if (unit_shape(l, r) || unit_shape(r, l)) {
    eq.kind = EquationKind::unit;
    return;
  }
  auto lm = metas_of(l);
  auto rm = metas_of(r);
  // unfolding: the right side contains the left side, e.g. !p = p | !p
  if (!is_meta(l) && contains_instance(r, l) && !equal(l, r)) {
    eq.kind = EquationKind::unfold;
    eq.op = l->name;
    return;
  }
  if (!is_meta(r) && contains_instance(l, r) && !equal(l, r)) {
    std::swap(eq.lhs, eq.rhs);
    eq.kind = EquationKind::unfold;
    eq.op = eq.lhs->name;
    return;
  }
  if (l->size == r->size && lm == rm && !equal(l, r)) {
    eq.kind = EquationKind::permutative;
    return;
  }
  // oriented normalizer: bigger side rewrites to smaller side
  if (l->size < r->size || is_meta(l)) {
    std::swap(eq.lhs, eq.rhs);
    std::swap(lm, rm);
  }
  if (is_meta(eq.lhs)) return;
  for (const auto& m : rm)
    if (!lm.contains(m)) return;
  eq.kind = EquationKind::oriented;
  (void)th;
}

}  // namespace detail

inline void Theory::finalize() {
  ac_.clear();
  for (auto& eq : equations) {
    detail::classify(eq, *this);
    switch (eq.kind) {
      case EquationKind::associativity: ac_[eq.op].associative = true; break;
      case EquationKind::commutativity: ac_[eq.op].commutative = true; break;
      case EquationKind::unit: ac_[eq.op].unit = eq.unit; break;
      default: break;
    }
  }
}

// -- sort checking -------------------------------------------------------------

/// Typing context: sorts of free names / pattern variables and of bound variables.
struct SortContext {
  std::map<std::string, Sort> names;
  std::vector<Sort> bound;  // innermost last
};

namespace detail {

inline bool variadic_ok(const OpDecl& d) {
  return d.args.size() == 2 && d.args[0] == d.result && d.args[1] == d.result;
}

inline Sort check_sort_rec(const Theory& th, SortContext& ctx, const TermPtr& t, const Sort& expected) {
  switch (t->kind) {
    case TermKind::op: {
      const OpDecl* d = th.op(t->name);
      if (!d) fail(ErrorKind::sort, "ill-sorted-application: unknown constructor " + t->name);
      const bool variadic = variadic_ok(*d) && t->args.size() >= 2;
      if (t->args.size() != d->args.size() && !variadic)
        fail(ErrorKind::sort, "ill-sorted-application: " + t->name + " expects " + std::to_string(d->args.size()) +
                                  " arguments, got " + std::to_string(t->args.size()));
      for (std::size_t i = 0; i < t->args.size(); ++i) {
        const Sort& want = variadic ? d->args[0] : d->args[i];
        Sort got = check_sort_rec(th, ctx, t->args[i], want);
        if (got != want)
          fail(ErrorKind::sort, "ill-sorted-application: argument " + std::to_string(i) + " of " + t->name +
                                    " has sort " + got.str() + ", expected " + want.str());
      }
      return d->result;
    }
    case TermKind::bound: {
      if (t->index >= ctx.bound.size()) fail(ErrorKind::unbound_variable, "unbound-variable: de Bruijn index out of range");
      return ctx.bound[ctx.bound.size() - 1 - t->index];
    }
    case TermKind::free:
    case TermKind::meta: {
      if (!t->sort.unknown()) return t->sort;
      auto it = ctx.names.find(t->name);
      if (it != ctx.names.end()) return it->second;
      if (!expected.unknown() && t->kind == TermKind::meta) return expected;
      fail(ErrorKind::unbound_variable, "unbound-variable: " + t->name);
    }
    case TermKind::lambda: {
      std::vector<Sort> dom = t->binder_sorts;
      for (std::size_t i = 0; i < dom.size(); ++i) {
        if (dom[i].unknown()) {
          if (expected.is_function() && expected.arity() == dom.size()) {
            dom[i] = expected.domain()[i];
          } else {
            fail(ErrorKind::sort, "ill-sorted-application: abstraction binder sort unknown");
          }
        }
      }
      for (const auto& s : dom) ctx.bound.push_back(s);
      Sort want_body = expected.is_function() ? expected.codomain() : Sort{};
      Sort body = check_sort_rec(th, ctx, t->body(), want_body);
      ctx.bound.resize(ctx.bound.size() - dom.size());
      return Sort::function(dom, body);
    }
    case TermKind::apply: {
      Sort head = check_sort_rec(th, ctx, t->args.front(), Sort{});
      if (!head.is_function() || head.arity() != t->args.size() - 1)
        fail(ErrorKind::sort, "ill-sorted-application: applying a term of sort " + head.str());
      auto dom = head.domain();
      for (std::size_t i = 1; i < t->args.size(); ++i) {
        Sort got = check_sort_rec(th, ctx, t->args[i], dom[i - 1]);
        if (got != dom[i - 1])
          fail(ErrorKind::sort, "ill-sorted-application: argument has sort " + got.str() + ", expected " +
                                    dom[i - 1].str());
      }
      return head.codomain();
    }
    case TermKind::tuple: {
      std::vector<Sort> parts;
      for (std::size_t i = 0; i < t->args.size(); ++i) {
        Sort want = expected.is_product() && expected.components().size() == t->args.size()
                        ? expected.components()[i]
                        : Sort{};
        parts.push_back(check_sort_rec(th, ctx, t->args[i], want));
      }
      return Sort::product(std::move(parts));
    }
  }
  fail(ErrorKind::sort, "unreachable");
}

}  // namespace detail

/// Returns the unique sort of `t` in `ctx`, or throws a sort / unbound-variable error.
inline Sort check_sort(const Theory& th, const SortContext& ctx, const TermPtr& t, const Sort& expected = {}) {
  SortContext local = ctx;
  return detail::check_sort_rec(th, local, t, expected);
}

inline Sort check_sort(const Theory& th, const TermPtr& t, const Sort& expected = {}) {
  return check_sort(th, SortContext{}, t, expected);
}

// -- validation ----------------------------------------------------------------

inline bool sort_declared(const Theory& th, const Sort& s) {
  switch (s.kind()) {
    case Sort::Kind::base: return th.has_sort(s.name());
    default:
      for (const auto& p : s.components())
        if (!sort_declared(th, p)) return false;
      return true;
  }
}

inline std::vector<Diagnostic> validate_theory(const Theory& th) {
  std::vector<Diagnostic> out;
  auto dup = [&](const std::string& kind, std::vector<std::string> names) {
    std::set<std::string> seen;
    for (const auto& n : names)
      if (!seen.insert(n).second) out.push_back({kind + " " + n, "duplicate name"});
  };
  dup("sort", th.sorts);
  {
    std::vector<std::string> n;
    for (const auto& o : th.ops) n.push_back(o.name);
    dup("op", n);
  }
  {
    std::vector<std::string> n;
    for (const auto& e : th.equations) n.push_back(e.name);
    dup("eq", n);
  }
  {
    std::vector<std::string> n;
    for (const auto& r : th.rules) n.push_back(r.name);
    dup("rule", n);
  }
  for (const auto& o : th.ops) {
    for (const auto& a : o.args)
      if (!sort_declared(th, a)) out.push_back({"op " + o.name, "undeclared sort " + a.str()});
    if (!sort_declared(th, o.result)) out.push_back({"op " + o.name, "undeclared sort " + o.result.str()});
  }
  for (const auto& p : th.pool_sorts)
    if (!th.has_sort(p)) out.push_back({"pool " + p, "undeclared sort " + p});

  auto params_ctx = [](const std::vector<PatternVar>& ps) {
    SortContext ctx;
    for (const auto& p : ps) ctx.names[p.name] = p.sort;
    return ctx;
  };

  for (const auto& eq : th.equations) {
    const std::string loc = "eq " + eq.name;
    try {
      auto ctx = params_ctx(eq.params);
      Sort l = check_sort(th, ctx, eq.lhs);
      Sort r = check_sort(th, ctx, eq.rhs);
      if (l != r) out.push_back({loc, "sides have different sorts " + l.str() + " and " + r.str()});
    } catch (const Error& e) {
      out.push_back({loc, e.what()});
    }
    if (eq.kind == EquationKind::invalid) out.push_back({loc, "unsupported equation shape"});
  }
  for (const auto& r : th.rules) {
    const std::string loc = "rule " + r.name;
    std::set<std::string> declared;
    for (const auto& p : r.params) {
      declared.insert(p.name);
      if (!sort_declared(th, p.sort)) out.push_back({loc, "undeclared sort " + p.sort.str()});
    }
    bool unbound = false;
    for (const auto& m : metas_of(r.target)) {
      if (!declared.contains(m)) {
        out.push_back({loc, "unbound pattern variable " + m});
        unbound = true;
      }
    }
    for (const auto& m : metas_of(r.source)) {
      if (!declared.contains(m)) {
        out.push_back({loc, "unbound pattern variable " + m});
        unbound = true;
      }
    }
    if (!unbound) {
      try {
        auto ctx = params_ctx(r.params);
        Sort s = check_sort(th, ctx, r.source);
        Sort t = check_sort(th, ctx, r.target);
        if (s != t) out.push_back({loc, "source and target have different sorts " + s.str() + " and " + t.str()});
      } catch (const Error& e) {
        out.push_back({loc, e.what()});
      }
    }
    for (const auto& c : r.congruence) {
      const OpDecl* d = th.op(c.op);
      if (!d) {
        out.push_back({loc, "congruence position references unknown constructor " + c.op});
      } else if (c.arg >= d->args.size()) {
        out.push_back({loc, "congruence position " + c.op + "." + std::to_string(c.arg) + " out of range"});
      }
    }
  }
  for (const auto& m : th.macros) {
    try {
      auto ctx = params_ctx(m.params);
      check_sort(th, ctx, m.body);
    } catch (const Error& e) {
      out.push_back({"macro " + m.name, e.what()});
    }
  }
  return out;
}

// -- printing ------------------------------------------------------------------

namespace detail {

struct Printer {
  const Theory& th;
  std::set<std::string> taken;
  std::vector<std::string> scope;  // innermost last

  std::string fresh(std::string hint) {
    if (hint.empty()) hint = "x";
    std::string n = hint;
    while (taken.contains(n) || std::find(scope.begin(), scope.end(), n) != scope.end()) n += "'";
    return n;
  }

  // precedence: 0 lambda/top, 1 infix operand, 2 prefix operand
  std::string print(const TermPtr& t, int prec) {
    switch (t->kind) {
      case TermKind::bound: {
        if (t->index < scope.size()) return scope[scope.size() - 1 - t->index];
        return "#" + std::to_string(t->index);
      }
      case TermKind::free: return t->name;
      case TermKind::meta: return "?" + t->name;
      case TermKind::lambda: {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < t->binder_count(); ++i) {
          names.push_back(fresh(t->binder_names[i]));
          scope.push_back(names.back());
        }
        std::string out = "\\";
        for (std::size_t i = 0; i < names.size(); ++i) {
          if (i) out += ", ";
          out += names[i];
        }
        out += ". " + print(t->body(), 0);
        scope.resize(scope.size() - names.size());
        return prec > 0 ? "(" + out + ")" : out;
      }
      case TermKind::apply: {
        const auto& head = t->args.front();
        std::string h = print(head, 3);
        if (head->kind == TermKind::lambda || head->kind == TermKind::op) h = "(" + print(head, 0) + ")";
        std::string out = h + "(";
        for (std::size_t i = 1; i < t->args.size(); ++i) {
          if (i > 1) out += ", ";
          out += print(t->args[i], 0);
        }
        return out + ")";
      }
      case TermKind::tuple: {
        std::string out = "(";
        for (std::size_t i = 0; i < t->args.size(); ++i) {
          if (i) out += ", ";
          out += print(t->args[i], 0);
        }
        if (t->args.size() == 1) out += ",";
        return out + ")";
      }
      case TermKind::op: {
        const OpDecl* d = th.op(t->name);
        if (d && d->fixity == Fixity::infix && t->args.size() >= 2) {
          std::string out;
          for (std::size_t i = 0; i < t->args.size(); ++i) {
            if (i) out += " " + d->symbol + " ";
            out += print(t->args[i], 2);
          }
          return prec > 1 ? "(" + out + ")" : out;
        }
        if (d && d->fixity == Fixity::prefix && t->args.size() == 1) {
          const auto& a = t->args[0];
          bool atomic = a->kind == TermKind::free || a->kind == TermKind::bound || a->kind == TermKind::meta ||
                        (a->kind == TermKind::op && a->args.empty());
          if (a->kind == TermKind::op && !a->args.empty()) {
            const OpDecl* ad = th.op(a->name);
            atomic = ad && ad->fixity == Fixity::call;
          }
          if (a->kind == TermKind::apply) atomic = true;
          return d->symbol + (atomic ? print(a, 3) : "(" + print(a, 0) + ")");
        }
        if (t->args.empty()) return t->name;
        std::string out = t->name + "(";
        for (std::size_t i = 0; i < t->args.size(); ++i) {
          if (i) out += ", ";
          out += print(t->args[i], 0);
        }
        return out + ")";
      }
    }
    return "?";
  }
};

}  // namespace detail

/// Renders a term in the surface syntax accepted by the parser.
inline std::string print(const Theory& th, const TermPtr& t) {
  detail::Printer p{th, {}, {}};
  for (const auto& [n, s] : free_names(t)) p.taken.insert(n);
  return p.print(t, 0);
}

inline std::string print(const Theory& th, const Assignment& a) {
  std::string out = "{";
  bool first = true;
  for (const auto& [k, v] : a) {
    if (!first) out += ", ";
    first = false;
    out += "?" + k + " -> " + print(th, v);
  }
  return out + "}";
}

}  // namespace ntt
