#pragma once

#include <compare>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace ntt {

/// A sort of a λ-theory: a base sort, a product of sorts, or a function sort
/// `[S1, ..., Sk -> T]`. Sorts are structural values; two sorts are equal iff
/// their trees are equal. A default-constructed Sort is "unknown".
class Sort {
 public:
  enum class Kind { base, product, function };

  Sort() = default;

  static Sort base(std::string name) {
    Sort s;
    s.kind_ = Kind::base;
    s.name_ = std::move(name);
    return s;
  }

  static Sort product(std::vector<Sort> parts) {
    Sort s;
    s.kind_ = Kind::product;
    s.parts_ = std::move(parts);
    return s;
  }

  static Sort function(std::vector<Sort> domain, Sort codomain) {
    Sort s;
    s.kind_ = Kind::function;
    s.parts_ = std::move(domain);
    s.parts_.push_back(std::move(codomain));
    return s;
  }

  Kind kind() const { return kind_; }
  bool unknown() const { return kind_ == Kind::base && name_.empty(); }
  bool is_base() const { return kind_ == Kind::base && !name_.empty(); }
  bool is_function() const { return kind_ == Kind::function; }
  bool is_product() const { return kind_ == Kind::product; }

  const std::string& name() const { return name_; }

  /// Product components.
  const std::vector<Sort>& components() const { return parts_; }

  /// Function domain (all parts but the last).
  std::vector<Sort> domain() const {
    return {parts_.begin(), parts_.end() - 1};
  }
  std::size_t arity() const { return is_function() ? parts_.size() - 1 : 0; }
  const Sort& codomain() const { return parts_.back(); }

  std::string str() const {
    switch (kind_) {
      case Kind::base:
        return name_.empty() ? "?" : name_;
      case Kind::product: {
        std::string out = "(";
        for (std::size_t i = 0; i < parts_.size(); ++i) {
          if (i) out += ", ";
          out += parts_[i].str();
        }
        return out + ")";
      }
      case Kind::function: {
        std::string out = "[";
        for (std::size_t i = 0; i + 1 < parts_.size(); ++i) {
          if (i) out += ", ";
          out += parts_[i].str();
        }
        return out + " -> " + parts_.back().str() + "]";
      }
    }
    return "?";
  }

  std::size_t hash() const {
    std::size_t h = std::hash<std::string>{}(name_) ^ (static_cast<std::size_t>(kind_) * 0x9e3779b97f4a7c15ULL);
    for (const auto& p : parts_) h = h * 31 + p.hash();
    return h;
  }

  friend bool operator==(const Sort&, const Sort&) = default;
  friend std::strong_ordering operator<=>(const Sort& a, const Sort& b) {
    if (auto c = a.kind_ <=> b.kind_; c != 0) return c;
    if (auto c = a.name_.compare(b.name_); c != 0) return c <=> 0;
    return std::lexicographical_compare_three_way(a.parts_.begin(), a.parts_.end(),
                                                  b.parts_.begin(), b.parts_.end());
  }

 private:
  Kind kind_ = Kind::base;
  std::string name_;
  std::vector<Sort> parts_;
};

}  // namespace ntt
