#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dsx {

/// Canonical form used for every string comparison in the pipeline:
/// ASCII-lowercased, whitespace runs collapsed to one space, and leading or
/// trailing whitespace and punctuation removed. Idempotent.
std::string normalize_surface(std::string_view text);

/// Collapses whitespace runs to single spaces and trims both ends.
std::string collapse_whitespace(std::string_view text);

/// Unit-cost Levenshtein distance over arbitrary token sequences.
template <typename T>
std::size_t levenshtein(std::span<const T> a, std::span<const T> b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t sub = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({up + 1, row[j - 1] + 1, sub});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  return levenshtein(std::span<const char>(a.data(), a.size()),
                     std::span<const char>(b.data(), b.size()));
}

}  // namespace dsx
