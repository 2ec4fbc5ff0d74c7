#pragma once

#include <stdexcept>
#include <string>

namespace ntt {

enum class ErrorKind {
  parse,
  sort,
  unbound_variable,
  non_composable,
  non_abstraction,
  non_monotone_fix,
  unknown_theory,
  resource_cap,
  invalid_argument,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse-error";
    case ErrorKind::sort: return "sort-error";
    case ErrorKind::unbound_variable: return "unbound-variable";
    case ErrorKind::non_composable: return "non-composable-steps";
    case ErrorKind::non_abstraction: return "non-abstraction";
    case ErrorKind::non_monotone_fix: return "non-monotone-fix";
    case ErrorKind::unknown_theory: return "unknown-theory";
    case ErrorKind::resource_cap: return "resource-cap";
    case ErrorKind::invalid_argument: return "invalid-argument";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace ntt
