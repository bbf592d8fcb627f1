#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dsx/annotate.hpp"
#include "dsx/dom.hpp"
#include "dsx/extract.hpp"
#include "dsx/parallel.hpp"
#include "dsx/topic.hpp"

namespace dsx {

/// Missing or unreadable input, malformed record files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const TopicAssignment& t);
nlohmann::json to_json(const Annotation& a, bool gold = false);
nlohmann::json to_json(const ExtractedTriple& t, bool gold = false);

void write_topics(std::ostream& out, const TopicMap& topics);
void write_topics(std::ostream& out, std::span<const TopicAssignment> topics);
std::vector<TopicAssignment> read_topics(std::istream& in);
TopicMap to_topic_map(std::span<const TopicAssignment> topics);

void write_annotations(std::ostream& out, std::span<const Annotation> annotations, bool gold = false);
std::vector<Annotation> read_annotations(std::istream& in);

void write_extractions(std::ostream& out, std::span<const ExtractedTriple> triples, bool gold = false);
std::vector<ExtractedTriple> read_extractions(std::istream& in);

/// One record per cluster: {"cluster": k, "pages": [page ids]}.
void write_clusters(std::ostream& out, const std::vector<std::vector<std::size_t>>& clusters,
                    std::span<const Page> pages);
std::vector<std::vector<std::string>> read_clusters(std::istream& in);

/// Every *.html file directly under `dir`, sorted by file name; the file
/// name is the page id.
std::vector<Page> load_pages(const std::filesystem::path& dir, Exec exec = Exec::Parallel);

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames into place.
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace dsx
