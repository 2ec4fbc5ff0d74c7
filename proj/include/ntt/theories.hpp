#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ntt/parse.hpp"

namespace ntt {

namespace builtin_text {

inline constexpr std::string_view rho_pi = R"(theory rho-pi
sort N, P
pool N
op 0 : -> P
op par : P, P -> P infix |
op quote : P -> N prefix @
op drop : N -> P prefix *
op out : N, P -> P
op in : N, [N -> P] -> P
op out2 : N, P, P -> P nogen
op in2 : N, [N, N -> P] -> P nogen

eq par_assoc : (p | q) | r = p | (q | r)
eq par_comm : p | q = q | p
eq par_unit : p | 0 = p
# reflection collapses: off by default, `--flag run_eq` turns it on
eq run_eq : *(@p) = p
flag run_eq off

rule comm(n: N, q: P, k: [N -> P]) : out(n, q) | in(n, k) ~> k(@q)  [congruence: par.0, par.1]
rule comm2(n: N, q: P, r: P, k: [N, N -> P]) : out2(n, q, r) | in2(n, k) ~> k(@q, @r)  [congruence: par.0, par.1]
rule run(p: P) : *(@p) ~> p  [congruence: par.0, par.1]

macro repl(p: P, n: N) prefix ! =
  out(n, in(n, \x. out(n, *x) | *x) | p) | in(n, \x. out(n, *x) | *x)
)";

inline constexpr std::string_view pi = R"(theory pi
sort N, P
pool N
op 0 : -> P
op par : P, P -> P infix |
op bang : P -> P prefix !
op nu : [N -> P] -> P
op out : N, N -> P
op in : N, [N -> P] -> P
op out2 : N, N, N -> P nogen
op in2 : N, [N, N -> P] -> P nogen

eq par_assoc : (p | q) | r = p | (q | r)
eq par_comm : p | q = q | p
eq par_unit : p | 0 = p
eq nu_gc : nu(\x. p) = p
eq nu_extrude : nu(\x. p(x)) | q => nu(\x. p(x) | q)
eq nu_swap : nu(\x. nu(\y. p(x, y))) = nu(\y. nu(\x. p(x, y)))
eq repl_unfold : !p = p | !p

rule comm(n: N, a: N, k: [N -> P]) : out(n, a) | in(n, k) ~> k(a)  [congruence: par.0, par.1, nu.0]
rule comm2(n: N, a: N, b: N, k: [N, N -> P]) : out2(n, a, b) | in2(n, k) ~> k(a, b)  [congruence: par.0, par.1, nu.0]
)";

inline constexpr std::string_view nlambda = R"(theory nlambda
sort V, T
pool V
names x y z w v
op var : V -> T
op lam : [V -> T] -> T
op app : T, V -> T
op def : T, [V -> T] -> T
op C : V, T, T -> T

rule beta(Q: [V -> T], y: V) : app(lam(Q), y) ~> Q(y)  [congruence: app.0, def.1, C.2]
rule fetch(x: V, Q: T) : C(x, Q, var(x)) ~> Q  [congruence: app.0, def.1, C.2]
)";

inline constexpr std::string_view heap = R"(theory heap
sort H, L, V
op e : -> H
op union : H, H -> H infix +
op cell : L, V -> H
op l1 : -> L
op l2 : -> L
op v1 : -> V
op v2 : -> V

eq union_assoc : (h + g) + f = h + (g + f)
eq union_comm : h + g = g + h
eq union_unit : h + e = h
)";

inline constexpr std::string_view graph = R"(theory graph
sort V, E
op s : E -> V
op t : E -> V
)";

inline constexpr std::string_view cat = R"(theory cat
sort O, M
op id : O -> M
op dom : M -> O
op cod : M -> O
op comp : M, M -> M infix ;
eq comp_assoc : (f ; g) ; h = f ; (g ; h)
eq dom_id : dom(id(x)) => x
eq cod_id : cod(id(x)) => x
eq id_left : id(dom(f)) ; f => f
eq id_right : f ; id(cod(f)) => f
)";

}  // namespace builtin_text

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {"cat", "graph", "heap", "nlambda", "pi", "rho-pi"};
  return names;
}

inline std::string_view builtin_source(std::string_view name) {
  if (name == "rho-pi") return builtin_text::rho_pi;
  if (name == "pi") return builtin_text::pi;
  if (name == "nlambda") return builtin_text::nlambda;
  if (name == "heap") return builtin_text::heap;
  if (name == "graph") return builtin_text::graph;
  if (name == "cat") return builtin_text::cat;
  fail(ErrorKind::unknown_theory, "unknown-theory: " + std::string(name));
}

/// Built-in presentation by name; parsed once and cached.
inline const Theory& builtin(std::string_view name) {
  static std::map<std::string, Theory, std::less<>> cache;
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  Theory th = parse_theory(builtin_source(name));
  return cache.emplace(std::string(name), std::move(th)).first->second;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::invalid_argument, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Resolves a theory reference: a built-in name, a file path, or NAME.ntt
/// found on the NTT_THEORY_PATH search path.
inline Theory load_theory(const std::string& ref) {
  for (const auto& n : builtin_names())
    if (n == ref) return builtin(ref);
  namespace fs = std::filesystem;
  if (fs::is_regular_file(ref)) return parse_theory(read_file(ref));
  if (const char* path = std::getenv("NTT_THEORY_PATH")) {
    std::string_view rest(path);
    while (!rest.empty()) {
      auto colon = rest.find(':');
      std::string dir(rest.substr(0, colon));
      rest = colon == std::string_view::npos ? std::string_view{} : rest.substr(colon + 1);
      if (dir.empty()) continue;
      fs::path candidate = fs::path(dir) / (ref + ".ntt");
      if (fs::is_regular_file(candidate)) return parse_theory(read_file(candidate));
    }
  }
  fail(ErrorKind::unknown_theory, "unknown-theory: " + ref);
}

}  // namespace ntt
