#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace costorm::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);
std::vector<std::string> split_words(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Keeps the last `n` whitespace-separated words, joined by single spaces.
std::string last_words(std::string_view s, std::size_t n);
std::size_t word_count(std::string_view s);

std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);

// Lowercase alnum runs joined by '-'.
std::string slugify(std::string_view s);

// Citation markers of the form [n] with n >= 1, in order of appearance.
std::vector<int> citation_indices(std::string_view s);

// Rewrites every [n] marker through `fn`; a nullopt result deletes the marker.
std::string rewrite_citations(std::string_view s,
                              const std::function<std::optional<int>(int)>& fn);

// Removes every [n] marker.
std::string strip_citations(std::string_view s);

}  // namespace costorm::text
