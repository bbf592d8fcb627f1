#include "dsx/records.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>

namespace dsx {
namespace {

using json = nlohmann::json;

void for_each_line(std::istream& in, const char* what, const std::function<void(const json&)>& fn) {
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json record;
    try {
      record = json::parse(line);
      fn(record);
    } catch (const json::exception& e) {
      throw DataError(std::string(what) + " line " + std::to_string(n) + ": " + e.what());
    } catch (const XPathError& e) {
      throw DataError(std::string(what) + " line " + std::to_string(n) + ": " + e.what());
    }
  }
}

}  // namespace

json to_json(const TopicAssignment& t) {
  return {{"page_id", t.page_id}, {"entity", t.entity}, {"anchor_xpath", t.anchor_xpath.str()}, {"score", t.score}};
}

json to_json(const Annotation& a, bool gold) {
  json r = {{"page_id", a.page_id},
            {"xpath", a.xpath.str()},
            {"predicate", a.predicate},
            {"object_text", a.object_text},
            {"object_entity", a.object_entity ? json(*a.object_entity) : json(nullptr)}};
  if (gold) r["gold"] = true;
  return r;
}

json to_json(const ExtractedTriple& t, bool gold) {
  json r = {{"page_id", t.page_id},
            {"subject", t.subject},
            {"predicate", t.predicate},
            {"object", t.object},
            {"confidence", t.confidence},
            {"object_xpath", t.object_xpath.str()}};
  if (gold) r["gold"] = true;
  return r;
}

void write_topics(std::ostream& out, const TopicMap& topics) {
  for (const auto& [_, t] : topics) out << to_json(t).dump() << '\n';
}

void write_topics(std::ostream& out, std::span<const TopicAssignment> topics) {
  for (const auto& t : topics) out << to_json(t).dump() << '\n';
}

std::vector<TopicAssignment> read_topics(std::istream& in) {
  std::vector<TopicAssignment> out;
  for_each_line(in, "topics", [&](const json& r) {
    out.push_back(TopicAssignment{r.at("page_id").get<std::string>(), r.at("entity").get<std::string>(),
                                  XPath::parse(r.at("anchor_xpath").get<std::string>()), r.value("score", 0.0)});
  });
  return out;
}

TopicMap to_topic_map(std::span<const TopicAssignment> topics) {
  TopicMap out;
  for (const auto& t : topics) out.insert_or_assign(t.page_id, t);
  return out;
}

void write_annotations(std::ostream& out, std::span<const Annotation> annotations, bool gold) {
  for (const auto& a : annotations) out << to_json(a, gold).dump() << '\n';
}

std::vector<Annotation> read_annotations(std::istream& in) {
  std::vector<Annotation> out;
  for_each_line(in, "annotations", [&](const json& r) {
    Annotation a{r.at("page_id").get<std::string>(), XPath::parse(r.at("xpath").get<std::string>()),
                 r.at("predicate").get<std::string>(), r.value("object_text", std::string()), std::nullopt};
    if (auto it = r.find("object_entity"); it != r.end() && it->is_string()) a.object_entity = it->get<std::string>();
    out.push_back(std::move(a));
  });
  return out;
}

void write_extractions(std::ostream& out, std::span<const ExtractedTriple> triples, bool gold) {
  for (const auto& t : triples) out << to_json(t, gold).dump() << '\n';
}

std::vector<ExtractedTriple> read_extractions(std::istream& in) {
  std::vector<ExtractedTriple> out;
  for_each_line(in, "extractions", [&](const json& r) {
    XPath xp;
    if (auto it = r.find("object_xpath"); it != r.end() && it->is_string() && !it->get<std::string>().empty())
      xp = XPath::parse(it->get<std::string>());
    out.push_back(ExtractedTriple{r.at("page_id").get<std::string>(), r.at("subject").get<std::string>(),
                                  r.at("predicate").get<std::string>(), r.at("object").get<std::string>(),
                                  r.value("confidence", 1.0), std::move(xp)});
  });
  return out;
}

void write_clusters(std::ostream& out, const std::vector<std::vector<std::size_t>>& clusters,
                    std::span<const Page> pages) {
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    json ids = json::array();
    for (std::size_t p : clusters[k]) ids.push_back(pages[p].page_id());
    out << json{{"cluster", k}, {"pages", ids}}.dump() << '\n';
  }
}

std::vector<std::vector<std::string>> read_clusters(std::istream& in) {
  std::vector<std::vector<std::string>> out;
  for_each_line(in, "clusters", [&](const json& r) { out.push_back(r.at("pages").get<std::vector<std::string>>()); });
  return out;
}

std::vector<Page> load_pages(const std::filesystem::path& dir, Exec exec) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DataError("pages directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".html") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<std::string> html(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) html[i] = read_file(files[i]);
  std::vector<Page> pages(files.size());
  std::vector<std::string> errors(files.size());
  parallel_for(exec, files.size(), [&](std::size_t i) {
    try {
      pages[i] = parse_page(html[i], files[i].filename().string());
    } catch (const std::exception& e) {
      errors[i] = files[i].string() + ": " + e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw DataError(e);
  return pages;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << content;
    if (!out) throw DataError("cannot write " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dsx
