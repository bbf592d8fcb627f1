#include "dsx/text.hpp"

#include <cctype>

namespace dsx {

namespace {

bool is_space(unsigned char c) { return std::isspace(c) != 0; }
bool is_punct(unsigned char c) { return c < 0x80 && std::ispunct(c) != 0; }

}  // namespace

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(ch);
  }
  return out;
}

std::string normalize_surface(std::string_view text) {
  std::string s = collapse_whitespace(text);
  for (char& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  std::size_t begin = 0;
  std::size_t end = s.size();
  const auto strip = [&](unsigned char c) { return is_space(c) || is_punct(c); };
  while (begin < end && strip(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && strip(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

}  // namespace dsx
