#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "dsx/dom.hpp"
#include "dsx/parallel.hpp"

namespace dsx {

inline constexpr int kSiblingWidth = 5;
inline constexpr int kTextRadius = 4;
inline constexpr std::size_t kFrequentStringMaxLength = 30;

/// (attribute, value, levels above the target, offset among the ancestor's siblings)
struct StructuralFeature {
  std::string attr;
  std::string value;
  int level = 0;
  int offset = 0;

  auto operator<=>(const StructuralFeature&) const = default;
};

/// A site-frequent string found near the target, with the tree path to it
/// (`..` per step up, then tag names down; `.` for the target itself).
struct TextFeature {
  std::string text;
  std::string rel_path;

  auto operator<=>(const TextFeature&) const = default;
};

using Feature = std::variant<StructuralFeature, TextFeature>;
using FeatureSet = std::set<Feature>;
using FrequentStrings = std::set<std::string, std::less<>>;

/// Injective text form of a feature, used as the vocabulary key.
std::string feature_key(const Feature& feature);
Feature parse_feature_key(std::string_view key);

/// Normalized node texts of at most `max_length` bytes that occur on at least
/// `min_page_fraction` of the pages.
FrequentStrings frequent_strings(std::span<const Page> pages, double min_page_fraction,
                                 std::size_t max_length = kFrequentStringMaxLength,
                                 Exec exec = Exec::Parallel);

FeatureSet node_features(const Page& page, std::size_t node, const FrequentStrings& freq);

class FeatureVocabulary {
 public:
  FeatureVocabulary() = default;
  /// Keys in column order; duplicates are an error.
  explicit FeatureVocabulary(std::vector<std::string> keys);

  std::optional<std::uint32_t> find(const std::string& key) const;
  std::uint32_t add(const std::string& key);
  std::size_t size() const { return keys_.size(); }
  const std::vector<std::string>& keys() const { return keys_; }

 private:
  std::vector<std::string> keys_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Sorted column indices of the present (binary) features.
struct FeatureVector {
  std::vector<std::uint32_t> indices;

  bool operator==(const FeatureVector&) const = default;
};

/// With `training`, unseen features are appended to the vocabulary; without
/// it they are dropped.
FeatureVector vectorize(const FeatureSet& features, FeatureVocabulary& vocab, bool training);
FeatureVector vectorize(const FeatureSet& features, const FeatureVocabulary& vocab);

}  // namespace dsx
