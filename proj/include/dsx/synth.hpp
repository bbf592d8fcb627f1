#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dsx/annotate.hpp"
#include "dsx/dom.hpp"
#include "dsx/extract.hpp"
#include "dsx/kb.hpp"
#include "dsx/topic.hpp"

namespace dsx {

class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ValueKind : std::uint8_t { Person, Genre, Year, Runtime };

struct PredicateSpec {
  std::string name;
  std::string label;  // text shown next to the values, e.g. "Director:"
  ValueKind kind = ValueKind::Person;
  bool multi = false;
  int min_values = 1;
  int max_values = 1;
};

/// Default movie vertical: director, writer, release_year, runtime (single)
/// and genre, cast (multi-valued).
std::vector<PredicateSpec> default_movie_predicates();

struct SynthSpec {
  int n_pages = 200;
  std::vector<PredicateSpec> predicates = default_movie_predicates();
  double kb_coverage = 0.5;
  bool recommendation_blocks = false;
  bool duplicated_values = false;
  double missing_field_rate = 0.0;
  double index_shift_rate = 0.0;
  std::uint64_t seed = 1;

  void validate() const;
};

/// A generated site with its seed KB and ground truth.
struct SynthCorpus {
  SynthSpec spec;
  std::vector<Entity> entities;
  std::vector<Triple> kb_triples;
  std::vector<std::pair<std::string, std::string>> pages;  // page_id, html
  std::vector<ExtractedTriple> gold_triples;               // every fact rendered on a page
  std::vector<Annotation> gold_annotations;                // KB facts at their true nodes, plus names
  std::vector<TopicAssignment> gold_topics;
  std::size_t rendered_facts = 0;

  KnowledgeBase kb(MatchMode mode = MatchMode::Exact) const;
  std::vector<Page> parse_pages(Exec exec = Exec::Parallel) const;

  /// kb/{entities,triples}.jsonl, pages/*.html, gold/{triples,annotations,topics}.jsonl, manifest.json
  void write(const std::filesystem::path& dir) const;
};

SynthCorpus generate_corpus(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
/// Keys absent from `j` keep their defaults. Throws SpecError on bad input.
SynthSpec synth_spec_from_json(const nlohmann::json& j);

}  // namespace dsx
