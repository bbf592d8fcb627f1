#pragma once

#include <cstdint>
#include <unistd.h>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "dsx/dom.hpp"
#include "dsx/kb.hpp"

namespace testing {

inline dsx::Entity ent(std::string id, std::string name, std::vector<std::string> aliases = {}) {
  return dsx::Entity{std::move(id), std::move(name), std::move(aliases)};
}

inline dsx::Triple to_entity(std::string s, std::string p, std::string o) {
  return dsx::Triple{std::move(s), std::move(p), dsx::ObjectRef::entity(std::move(o))};
}

inline dsx::Triple to_literal(std::string s, std::string p, std::string o) {
  return dsx::Triple{std::move(s), std::move(p), dsx::ObjectRef::literal(std::move(o))};
}

/// Wraps body markup into a full document.
inline dsx::Page page_of(const std::string& body, std::string id = "p.html") {
  return dsx::parse_page("<html><head></head><body>" + body + "</body></html>", std::move(id));
}

inline std::size_t below(std::mt19937_64& rng, std::size_t n) {
  return static_cast<std::size_t>(rng() % n);
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("dsx-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
