#include "dsx/kb.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "dsx/text.hpp"

namespace dsx {

using json = nlohmann::json;

bool surfaces_match(std::string_view a, std::string_view b, MatchMode mode) {
  if (a == b) return true;
  if (mode != MatchMode::Fuzzy) return false;
  if (a.size() < kFuzzyMinLength || b.size() < kFuzzyMinLength) return false;
  const auto diff = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
  return diff <= 1 && levenshtein(a, b) <= 1;
}

KnowledgeBase::KnowledgeBase(std::vector<Entity> entities, std::vector<Triple> triples,
                             MatchMode mode)
    : mode_(mode), entities_(std::move(entities)), triples_(std::move(triples)) {
  build_indexes();
}

void KnowledgeBase::build_indexes() {
  id_index_.reserve(entities_.size());
  for (Index i = 0; i < entities_.size(); ++i) {
    const Entity& e = entities_[i];
    if (e.id.empty()) throw KbError("entity with empty id");
    if (e.canonical_name.empty()) throw KbError("entity '" + e.id + "' has an empty name");
    if (!id_index_.emplace(e.id, i).second) throw KbError("duplicate entity id '" + e.id + "'");
  }

  std::unordered_map<std::string, std::size_t> long_ids;
  for (Index i = 0; i < entities_.size(); ++i) {
    const Entity& e = entities_[i];
    std::vector<std::string> surfaces;
    surfaces.push_back(normalize_surface(e.canonical_name));
    for (const auto& alias : e.aliases) surfaces.push_back(normalize_surface(alias));
    std::sort(surfaces.begin(), surfaces.end());
    surfaces.erase(std::unique(surfaces.begin(), surfaces.end()), surfaces.end());
    for (auto& s : surfaces) {
      if (s.empty()) continue;
      surface_index_[s].push_back(i);
      if (s.size() >= kFuzzyMinLength && !long_ids.contains(s)) {
        long_ids.emplace(s, long_surfaces_.size());
        long_surfaces_.push_back(s);
      }
    }
  }
  if (mode_ == MatchMode::Fuzzy) {
    for (Index sid = 0; sid < long_surfaces_.size(); ++sid) {
      const std::string& s = long_surfaces_[sid];
      deletion_index_[s].push_back(sid);
      for (std::size_t k = 0; k < s.size(); ++k) {
        std::string del = s;
        del.erase(k, 1);
        auto& bucket = deletion_index_[del];
        if (bucket.empty() || bucket.back() != sid) bucket.push_back(sid);
      }
    }
  }

  subject_index_.assign(entities_.size(), {});
  for (Index t = 0; t < triples_.size(); ++t) {
    const Triple& tr = triples_[t];
    if (tr.predicate.empty()) throw KbError("triple " + std::to_string(t) + " has an empty predicate");
    auto it = id_index_.find(tr.subject);
    if (it == id_index_.end()) throw KbError("triple references unknown subject id '" + tr.subject + "'");
    if (tr.object.is_entity() && !id_index_.contains(tr.object.value))
      throw KbError("triple references unknown object id '" + tr.object.value + "'");
    subject_index_[it->second].push_back(t);
  }
}

namespace {

std::string_view require_string(const json& record, const char* field, std::size_t line) {
  auto it = record.find(field);
  if (it == record.end() || !it->is_string())
    throw KbError("line " + std::to_string(line) + ": missing string field '" + field + "'");
  return it->get_ref<const std::string&>();
}

template <typename Fn>
void for_each_record(std::istream& in, const char* what, Fn&& fn) {
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw KbError(std::string(what) + " line " + std::to_string(number) + ": malformed record");
    }
    if (!record.is_object())
      throw KbError(std::string(what) + " line " + std::to_string(number) + ": record is not an object");
    fn(record, number);
  }
}

}  // namespace

KnowledgeBase KnowledgeBase::load(std::istream& entities_in, std::istream& triples_in,
                                  MatchMode mode) {
  std::vector<Entity> entities;
  for_each_record(entities_in, "entities", [&](const json& r, std::size_t line) {
    Entity e;
    e.id = require_string(r, "id", line);
    e.canonical_name = require_string(r, "name", line);
    if (auto it = r.find("aliases"); it != r.end()) {
      if (!it->is_array()) throw KbError("line " + std::to_string(line) + ": 'aliases' must be an array");
      for (const auto& a : *it) {
        if (!a.is_string()) throw KbError("line " + std::to_string(line) + ": alias is not a string");
        e.aliases.push_back(a.get<std::string>());
      }
    }
    entities.push_back(std::move(e));
  });

  std::vector<Triple> triples;
  for_each_record(triples_in, "triples", [&](const json& r, std::size_t line) {
    Triple t;
    t.subject = require_string(r, "subject", line);
    t.predicate = require_string(r, "predicate", line);
    auto obj = r.find("object");
    if (obj == r.end() || !obj->is_object())
      throw KbError("line " + std::to_string(line) + ": missing 'object'");
    if (auto e = obj->find("entity"); e != obj->end() && e->is_string()) {
      t.object = ObjectRef::entity(e->get<std::string>());
    } else if (auto l = obj->find("literal"); l != obj->end() && l->is_string()) {
      t.object = ObjectRef::literal(l->get<std::string>());
    } else {
      throw KbError("line " + std::to_string(line) + ": object needs 'entity' or 'literal'");
    }
    triples.push_back(std::move(t));
  });

  return KnowledgeBase(std::move(entities), std::move(triples), mode);
}

void KnowledgeBase::save(std::ostream& entities_out, std::ostream& triples_out) const {
  for (const Entity& e : entities_) {
    json r = {{"id", e.id}, {"name", e.canonical_name}, {"aliases", e.aliases}};
    entities_out << r.dump() << '\n';
  }
  for (const Triple& t : triples_) {
    json obj = t.object.is_entity() ? json{{"entity", t.object.value}}
                                    : json{{"literal", t.object.value}};
    json r = {{"subject", t.subject}, {"predicate", t.predicate}, {"object", obj}};
    triples_out << r.dump() << '\n';
  }
}

bool KnowledgeBase::contains(std::string_view id) const {
  return id_index_.contains(std::string(id));
}

std::optional<KnowledgeBase::Index> KnowledgeBase::index_of(std::string_view id) const {
  auto it = id_index_.find(std::string(id));
  if (it == id_index_.end()) return std::nullopt;
  return it->second;
}

const Entity& KnowledgeBase::entity(std::string_view id) const {
  auto i = index_of(id);
  if (!i) throw KbError("unknown entity id '" + std::string(id) + "'");
  return entities_[*i];
}

std::vector<std::string> KnowledgeBase::object_surfaces(const ObjectRef& object) const {
  std::vector<std::string> out;
  if (object.is_entity()) {
    const Entity& e = entity(object.value);
    out.push_back(normalize_surface(e.canonical_name));
    for (const auto& a : e.aliases) out.push_back(normalize_surface(a));
  } else {
    out.push_back(normalize_surface(object.value));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  std::erase(out, std::string());
  return out;
}

std::vector<KnowledgeBase::Index> KnowledgeBase::match_normalized(std::string_view q) const {
  std::vector<Index> out;
  if (q.empty()) return out;
  const std::string key(q);
  if (auto it = surface_index_.find(key); it != surface_index_.end()) out = it->second;
  if (mode_ == MatchMode::Fuzzy && q.size() + 1 >= kFuzzyMinLength) {
    std::vector<Index> candidates;
    const auto collect = [&](const std::string& k) {
      if (auto it = deletion_index_.find(k); it != deletion_index_.end())
        candidates.insert(candidates.end(), it->second.begin(), it->second.end());
    };
    collect(key);
    for (std::size_t k = 0; k < key.size(); ++k) {
      std::string del = key;
      del.erase(k, 1);
      collect(del);
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (Index sid : candidates) {
      const std::string& s = long_surfaces_[sid];
      if (s == key || !surfaces_match(key, s, mode_)) continue;
      const auto& ids = surface_index_.at(s);
      out.insert(out.end(), ids.begin(), ids.end());
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<KnowledgeBase::Index> KnowledgeBase::match_indices(std::string_view text) const {
  return match_normalized(normalize_surface(text));
}

std::set<EntityId> KnowledgeBase::match_text(std::string_view text) const {
  std::set<EntityId> out;
  for (Index i : match_indices(text)) out.insert(entities_[i].id);
  return out;
}

std::set<std::string> KnowledgeBase::entity_object_set(Index i) const {
  std::set<std::string> out;
  for (Index t : subject_index_[i])
    for (auto& s : object_surfaces(triples_[t].object)) out.insert(std::move(s));
  return out;
}

std::set<std::string> KnowledgeBase::entity_object_set(std::string_view id) const {
  auto i = index_of(id);
  if (!i) throw KbError("unknown entity id '" + std::string(id) + "'");
  return entity_object_set(*i);
}

std::set<std::string> KnowledgeBase::predicates() const {
  std::set<std::string> out;
  for (const Triple& t : triples_) out.insert(t.predicate);
  return out;
}

bool StopValues::contains(std::string_view s) const {
  if (s.empty()) return false;
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '9') return true;
  if (s.size() == 4 && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
    int year = 0;
    std::from_chars(s.data(), s.data() + s.size(), year);
    if (year >= year_min && year <= year_max) return true;
  }
  const std::string key(s);
  return values.contains(key) || countries.contains(key);
}

StopValues build_stop_values(const KnowledgeBase& kb, double triple_fraction,
                             const StopOptions& options) {
  if (!(triple_fraction > 0.0 && triple_fraction <= 1.0))
    throw std::invalid_argument("triple_fraction must be in (0, 1]");
  StopValues stop;
  stop.triple_fraction = triple_fraction;
  stop.year_min = options.year_min;
  stop.year_max = options.year_max;
  for (const auto& c : options.countries) {
    auto n = normalize_surface(c);
    if (!n.empty()) stop.countries.insert(std::move(n));
  }

  std::unordered_map<std::string, std::size_t> counts;
  for (const Triple& t : kb.triples())
    for (auto& s : kb.object_surfaces(t.object)) ++counts[std::move(s)];

  const double needed = triple_fraction * static_cast<double>(kb.triples().size());
  for (const auto& [surface, n] : counts) {
    if (n >= options.min_count && static_cast<double>(n) >= needed) stop.values.insert(surface);
  }
  return stop;
}

std::vector<std::string> read_country_list(std::istream& in) {
  std::vector<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto s = collapse_whitespace(line);
    if (!s.empty()) out.push_back(std::move(s));
  }
  return out;
}

}  // namespace dsx
