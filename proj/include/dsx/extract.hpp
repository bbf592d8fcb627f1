#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dsx/dom.hpp"
#include "dsx/features.hpp"
#include "dsx/model.hpp"
#include "dsx/parallel.hpp"

namespace dsx {

struct ExtractedTriple {
  std::string page_id;
  std::string subject;
  std::string predicate;
  std::string object;
  double confidence = 0.0;
  XPath object_xpath;

  bool operator==(const ExtractedTriple&) const = default;
};

enum class ExtractMode : std::uint8_t {
  All,      // every node whose top class is a predicate
  PageHit,  // the most confident node per predicate
};

/// Model output for every nonempty-text node of a page.
struct NodePrediction {
  std::size_t node = 0;
  std::size_t top_class = 0;  // index into model classes; == classes.size() for OTHER
  double top_prob = 0.0;
  double name_prob = 0.0;
};

std::vector<NodePrediction> classify_page(const Model& model, const Page& page, const FrequentStrings& freq);

/// Applies the subject anchoring, threshold, dedup, and mode rules to
/// precomputed predictions. Reusable across thresholds.
std::vector<ExtractedTriple> select_extractions(const Model& model, const Page& page,
                                                std::span<const NodePrediction> predictions, double threshold,
                                                ExtractMode mode);

std::vector<ExtractedTriple> extract_page(const Model& model, const Page& page, const FrequentStrings& freq,
                                          double threshold, ExtractMode mode = ExtractMode::All);

/// All pages with the model's own frequent strings, concatenated in page order.
std::vector<ExtractedTriple> extract_site(const Model& model, std::span<const Page> pages, double threshold,
                                          ExtractMode mode = ExtractMode::All, Exec exec = Exec::Parallel);

}  // namespace dsx
