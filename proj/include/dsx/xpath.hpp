#pragma once

#include <compare>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace dsx {

struct XPathStep {
  std::string tag;  // lowercase
  int index = 1;    // 1-based among same-tag siblings

  auto operator<=>(const XPathStep&) const = default;
};

class XPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Absolute positional path `/tag[i]/tag[j]/...`.
class XPath {
 public:
  XPath() = default;
  explicit XPath(std::vector<XPathStep> steps) : steps_(std::move(steps)) {}

  static XPath parse(std::string_view text);
  std::string str() const;

  const std::vector<XPathStep>& steps() const { return steps_; }
  std::size_t size() const { return steps_.size(); }
  bool empty() const { return steps_.empty(); }
  const XPathStep& back() const { return steps_.back(); }

  XPath parent() const;
  XPath child(std::string tag, int index) const;
  /// True when this path equals `other` or is one of its ancestors.
  bool is_prefix_of(const XPath& other) const;
  /// Same steps with every index dropped, e.g. `/html/body/div`.
  std::string shape() const;

  auto operator<=>(const XPath&) const = default;

 private:
  std::vector<XPathStep> steps_;
};

/// Levenshtein distance over (tag, index) step tokens.
std::size_t xpath_distance(const XPath& a, const XPath& b);

}  // namespace dsx
