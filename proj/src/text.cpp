#include "costorm/text.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace costorm::text {

namespace {
bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }
}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      break;
    }
    auto line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = nl + 1;
  }
  return out;
}

std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) !=
        std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  }
  return true;
}

std::string last_words(std::string_view s, std::size_t n) {
  auto words = split_words(s);
  std::size_t first = words.size() > n ? words.size() - n : 0;
  std::string out;
  for (std::size_t i = first; i < words.size(); ++i) {
    if (!out.empty()) out += ' ';
    out += words[i];
  }
  return out;
}

std::size_t word_count(std::string_view s) { return split_words(s).size(); }

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

std::string slugify(std::string_view s) {
  std::string out;
  bool dash = false;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      if (dash && !out.empty()) out += '-';
      out += static_cast<char>(std::tolower(c));
      dash = false;
    } else {
      dash = true;
    }
  }
  return out;
}

namespace {

// Scans s for [digits] markers, invoking on_marker(begin, end, value) for each.
template <class F>
void scan_markers(std::string_view s, F&& on_marker) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '[') {
      std::size_t j = i + 1;
      while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
      if (j > i + 1 && j < s.size() && s[j] == ']' && j - i - 1 <= 6) {
        int v = std::stoi(std::string(s.substr(i + 1, j - i - 1)));
        if (v >= 1) {
          on_marker(i, j + 1, v);
          i = j + 1;
          continue;
        }
      }
    }
    ++i;
  }
}

}  // namespace

std::vector<int> citation_indices(std::string_view s) {
  std::vector<int> out;
  scan_markers(s, [&](std::size_t, std::size_t, int v) { out.push_back(v); });
  return out;
}

std::string rewrite_citations(std::string_view s,
                              const std::function<std::optional<int>(int)>& fn) {
  std::string out;
  std::size_t last = 0;
  scan_markers(s, [&](std::size_t b, std::size_t e, int v) {
    out.append(s.substr(last, b - last));
    if (auto repl = fn(v)) {
      out += "[" + std::to_string(*repl) + "]";
    } else if (e >= s.size() || std::string_view(" .,;:!?)").find(s[e]) != std::string_view::npos) {
      // Drop the space that separated the removed marker from its sentence.
      while (!out.empty() && out.back() == ' ') out.pop_back();
      if (e < s.size() && s[e] == ' ' && !out.empty()) out += ' ', ++e;
      while (e < s.size() && s[e] == ' ') ++e;
    }
    last = e;
  });
  out.append(s.substr(last));
  return out;
}

std::string strip_citations(std::string_view s) {
  return rewrite_citations(s, [](int) { return std::optional<int>{}; });
}

}  // namespace costorm::text
