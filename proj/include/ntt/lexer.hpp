#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "ntt/error.hpp"

namespace ntt {

struct Token {
  enum class Type { ident, symbol, end };
  Type type = Type::end;
  std::string text;
  std::size_t line = 1;
  std::size_t col = 1;

  bool is(std::string_view s) const { return type != Type::end && text == s; }
};

inline bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

/// Splits text into identifiers and punctuation. `#` starts a comment that
/// runs to the end of the line.
inline std::vector<Token> tokenize(std::string_view src, std::size_t first_line = 1) {
  static constexpr std::string_view two_char[] = {"->", "~>", "=>", "||", "|>", "&&", ":="};
  std::vector<Token> out;
  std::size_t line = first_line;
  std::size_t line_start = 0;
  std::size_t i = 0;
  while (i < src.size()) {
    char c = src[i];
    if (c == '\n') {
      ++line;
      line_start = ++i;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    Token t;
    t.line = line;
    t.col = i - line_start + 1;
    if (ident_char(c) && c != '\'') {
      std::size_t j = i;
      while (j < src.size() && ident_char(src[j])) ++j;
      t.type = Token::Type::ident;
      t.text = std::string(src.substr(i, j - i));
      i = j;
    } else if (src.substr(i, 2) == "\xce\xbb") {  // λ
      t.type = Token::Type::symbol;
      t.text = "\\";
      i += 2;
    } else {
      t.type = Token::Type::symbol;
      t.text = std::string(1, c);
      for (auto tc : two_char) {
        if (src.substr(i, 2) == tc) {
          t.text = std::string(tc);
          break;
        }
      }
      i += t.text.size();
    }
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.col = i - line_start + 1;
  out.push_back(end);
  return out;
}

class TokenStream {
 public:
  explicit TokenStream(std::vector<Token> toks) : toks_(std::move(toks)) {}
  explicit TokenStream(std::string_view src, std::size_t first_line = 1) : toks_(tokenize(src, first_line)) {}

  const Token& peek(std::size_t k = 0) const {
    std::size_t j = std::min(pos_ + k, toks_.size() - 1);
    return toks_[j];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  bool at_end() const { return peek().type == Token::Type::end; }
  bool accept(std::string_view s) {
    if (peek().is(s)) {
      next();
      return true;
    }
    return false;
  }
  void expect(std::string_view s) {
    if (!accept(s)) error("expected '" + std::string(s) + "'");
  }
  std::string expect_ident(const std::string& what = "identifier") {
    if (peek().type != Token::Type::ident) error("expected " + what);
    return next().text;
  }

  /// Splits a two-character token in place, e.g. "->" into "-" and ">".
  void split_current() {
    Token& t = toks_[pos_];
    if (t.text.size() != 2) return;
    Token second = t;
    second.text = t.text.substr(1);
    second.col += 1;
    t.text = t.text.substr(0, 1);
    toks_.insert(toks_.begin() + static_cast<long>(pos_) + 1, second);
  }

  std::size_t position() const { return pos_; }
  void reset(std::size_t p) { pos_ = p; }

  [[noreturn]] void error(const std::string& msg) const {
    const Token& t = peek();
    std::string found = t.type == Token::Type::end ? "end of input" : "'" + t.text + "'";
    fail(ErrorKind::parse, "parse-error at line " + std::to_string(t.line) + ", column " + std::to_string(t.col) +
                               ": " + msg + " (found " + found + ")");
  }

 private:
  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

}  // namespace ntt
