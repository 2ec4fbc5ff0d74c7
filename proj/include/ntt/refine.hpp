#pragma once

#include <map>
#include <memory>
#include <sstream>
#include <string>

#include "ntt/eval.hpp"
#include "ntt/stdlib.hpp"

namespace ntt {

/// Namespace predicates at sort N, by the name used in `in_NAME` / `comm_NAME`.
using NamespaceTable = std::map<std::string, PredPtr>;

/// ρπ restricted to guarded communication: for each namespace α a receiver
/// `in_α : N, [N -> P] -> P` and the only communication rule
/// `comm_α : out(n, q) | in_α(n, k) ~> k(@q)`, which fires only when α(@q).
inline Theory refine_rho_pi(const NamespaceTable& namespaces) {
  const Theory& base = builtin("rho-pi");
  for (const auto& [name, alpha] : namespaces) {
    if (alpha->sort != Sort::base("N"))
      fail(ErrorKind::sort, "sort-error: namespace " + name + " is at " + alpha->sort.str() + ", expected N");
  }
  std::istringstream in{std::string(builtin_text::rho_pi)};
  std::string text, line;
  while (std::getline(in, line)) {
    if (line.rfind("rule comm", 0) == 0) continue;
    if (line == "theory rho-pi") line = "theory rho-pi-refined";
    text += line + "\n";
  }
  for (const auto& [name, alpha] : namespaces) {
    text += "op in_" + name + " : N, [N -> P] -> P nogen\n";
    text += "rule comm_" + name + "(n: N, q: P, k: [N -> P]) : out(n, q) | in_" + name +
            "(n, k) ~> k(@q)  [congruence: par.0, par.1]\n";
  }
  Theory th = parse_theory(text);

  struct Checker {
    Engine eng;
    Evaluator ev;
    explicit Checker(const Theory& t) : eng(t), ev(eng) {}
  };
  auto checker = std::make_shared<Checker>(base);
  for (auto& r : th.rules) {
    if (r.name.rfind("comm_", 0) != 0) continue;
    PredPtr alpha = namespaces.at(r.name.substr(5));
    r.guard = [checker, alpha](const Assignment& a) {
      return checker->ev.holds(alpha, mk_op("quote", {a.at("q")}));
    };
    r.guard_text = print(base, alpha) + "(@q)";
  }
  return th;
}

}  // namespace ntt
