#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace vulngraph {

// Fixed English stopword list (50 entries, sorted). Changing it changes every topic model.
inline constexpr std::array<std::string_view, 50> kStopwords = {
    "about", "after", "all",   "also",  "an",    "and",   "any",   "are",  "as",    "at",
    "be",    "been",  "but",   "by",    "can",   "could", "do",    "for",  "from",  "has",
    "have",  "if",    "in",    "into",  "is",    "it",    "its",   "may",  "more",  "not",
    "of",    "on",    "or",    "other", "such",  "than",  "that",  "the",  "their", "there",
    "these", "this",  "to",    "via",   "was",   "when",  "which", "with", "would", "you"};

inline bool is_stopword(std::string_view token) {
  return std::binary_search(kStopwords.begin(), kStopwords.end(), token);
}

// Lowercases, splits on non-alphanumerics, drops tokens shorter than 2 and stopwords.
inline std::vector<std::string> tokenize(std::string_view description) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= 2 && !is_stopword(cur)) tokens.push_back(cur);
    cur.clear();
  };
  for (char ch : description) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c))
      cur.push_back(static_cast<char>(std::tolower(c)));
    else
      flush();
  }
  flush();
  return tokens;
}

}  // namespace vulngraph
