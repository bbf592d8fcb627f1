#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dsx {

using EntityId = std::string;

class KbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Entity {
  EntityId id;
  std::string canonical_name;
  std::vector<std::string> aliases;

  bool operator==(const Entity&) const = default;
};

/// Object slot of a triple: either a reference to another entity or a literal.
struct ObjectRef {
  enum class Kind : std::uint8_t { Entity, Literal };
  Kind kind = Kind::Literal;
  std::string value;

  static ObjectRef entity(EntityId id) { return {Kind::Entity, std::move(id)}; }
  static ObjectRef literal(std::string text) { return {Kind::Literal, std::move(text)}; }
  bool is_entity() const { return kind == Kind::Entity; }

  auto operator<=>(const ObjectRef&) const = default;
};

struct Triple {
  EntityId subject;
  std::string predicate;
  ObjectRef object;

  bool operator==(const Triple&) const = default;
};

enum class MatchMode : std::uint8_t {
  Exact,  // normalized equality
  Fuzzy,  // normalized equality, or edit distance 1 when both sides have >= 10 bytes
};

inline constexpr std::size_t kFuzzyMinLength = 10;

/// True when two already-normalized strings match under `mode`.
bool surfaces_match(std::string_view a, std::string_view b, MatchMode mode);

/// Seed knowledge base. Immutable once constructed; all queries are const and
/// safe to call from parallel workers.
class KnowledgeBase {
 public:
  using Index = std::uint32_t;

  KnowledgeBase() = default;
  KnowledgeBase(std::vector<Entity> entities, std::vector<Triple> triples,
                MatchMode mode = MatchMode::Exact);

  /// Reads the line-delimited entity and triple records.
  static KnowledgeBase load(std::istream& entities, std::istream& triples,
                            MatchMode mode = MatchMode::Exact);
  void save(std::ostream& entities, std::ostream& triples) const;

  std::size_t entity_count() const { return entities_.size(); }
  std::span<const Entity> entities() const { return entities_; }
  std::span<const Triple> triples() const { return triples_; }
  MatchMode match_mode() const { return mode_; }

  bool contains(std::string_view id) const;
  std::optional<Index> index_of(std::string_view id) const;
  const Entity& entity(Index i) const { return entities_[i]; }
  const Entity& entity(std::string_view id) const;

  /// Triple positions whose subject is entity `i`, in file order.
  std::span<const Index> triples_of(Index i) const { return subject_index_[i]; }

  /// Normalized surfaces an object can appear as on a page.
  std::vector<std::string> object_surfaces(const ObjectRef& object) const;

  /// Entity indices whose name or alias matches `text` (sorted, unique).
  std::vector<Index> match_indices(std::string_view text) const;
  /// Same lookup for a string that is already normalized.
  std::vector<Index> match_normalized(std::string_view normalized) const;
  std::set<EntityId> match_text(std::string_view text) const;

  /// Normalized surfaces of every object of every triple with subject `id`.
  std::set<std::string> entity_object_set(std::string_view id) const;
  std::set<std::string> entity_object_set(Index i) const;

  std::set<std::string> predicates() const;

 private:
  void build_indexes();

  MatchMode mode_ = MatchMode::Exact;
  std::vector<Entity> entities_;
  std::vector<Triple> triples_;
  std::unordered_map<std::string, Index> id_index_;
  std::unordered_map<std::string, std::vector<Index>> surface_index_;
  std::vector<std::vector<Index>> subject_index_;
  // Fuzzy support: every single-byte deletion of each long surface.
  std::vector<std::string> long_surfaces_;
  std::unordered_map<std::string, std::vector<Index>> deletion_index_;
};

/// Low-information strings that may not seed topic candidates.
struct StopValues {
  std::unordered_set<std::string> values;
  double triple_fraction = 0.0001;
  int year_min = 1000;
  int year_max = 2100;
  std::unordered_set<std::string> countries;

  /// `normalized` must already be in normalize_surface form.
  bool contains(std::string_view normalized) const;
};

struct StopOptions {
  // Absolute floor on the occurrence count, so small KBs do not turn every
  // object into a stop value.
  std::size_t min_count = 10;
  int year_min = 1000;
  int year_max = 2100;
  std::vector<std::string> countries;
};

StopValues build_stop_values(const KnowledgeBase& kb, double triple_fraction,
                             const StopOptions& options = {});

/// One name per line; blank lines ignored.
std::vector<std::string> read_country_list(std::istream& in);

}  // namespace dsx
