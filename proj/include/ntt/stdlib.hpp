#pragma once

#include <map>
#include <string>
#include <string_view>

#include "ntt/predicate.hpp"
#include "ntt/theories.hpp"

namespace ntt {

namespace stdlib_text {

inline constexpr std::string_view rho_pi = R"(
def live(a) = B*.(in(a, [N -> P]) | P)
def safe(a) = B*.(!(in(!a, [N -> P]) | P))
def sole.in(a) = (nu X. in(a, N -> X) | P) & !(in(!a, N -> P) | P)
def race.out = <out(?n, -) | out(?n, -) | in(?n, -) | ->
def comm(a, q, k) = <out(?n, ?q) | in(?n, ?k) | - where ?n: a, ?q: q, ?k: k>
def s.thr = !<0> & !(!<0> | !<0>)
)";

inline constexpr std::string_view pi = R"(
def live(a) = B*.(in(a, [N -> P]) | P)
def safe(a) = B*.(!(in(!a, [N -> P]) | P))
def race.out = <out(?n, -) | out(?n, -) | in(?n, -) | ->
)";

inline constexpr std::string_view heap = R"(
def wand(p, q) = hom(p, q)[\h: H. \x: H. x + h]
def emp = <e>
)";

}  // namespace stdlib_text

/// Named predicates for a theory: the built-in library for its name (if any)
/// plus any definitions supplied by the caller.
inline DefTable standard_defs(const Theory& th) {
  DefTable defs;
  if (th.name == "rho-pi" || th.name == "rho-pi-refined") parse_defs(th, defs, stdlib_text::rho_pi);
  else if (th.name == "pi") parse_defs(th, defs, stdlib_text::pi);
  else if (th.name == "heap") parse_defs(th, defs, stdlib_text::heap);
  return defs;
}

}  // namespace ntt
