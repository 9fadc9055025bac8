#pragma once

// Dictionary classification of folklore motifs and the group score
// ln(1 + environmental motifs / all motifs).

#include <algorithm>
#include <cmath>
#include <map>
#include <ranges>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "climattn/error.hpp"

namespace climattn {

namespace detail {

// Length of the UTF-8 sequence starting at `lead`, 1 for invalid bytes.
inline std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

inline char32_t utf8_decode(std::string_view s, std::size_t pos, std::size_t len) {
  const auto b = [&](std::size_t i) { return static_cast<unsigned char>(s[pos + i]); };
  switch (len) {
    case 2: return ((b(0) & 0x1Fu) << 6) | (b(1) & 0x3Fu);
    case 3: return ((b(0) & 0x0Fu) << 12) | ((b(1) & 0x3Fu) << 6) | (b(2) & 0x3Fu);
    case 4:
      return ((b(0) & 0x07u) << 18) | ((b(1) & 0x3Fu) << 12) | ((b(2) & 0x3Fu) << 6) |
             (b(3) & 0x3Fu);
    default: return b(0);
  }
}

// Non-ASCII code points count as word characters except the Latin-1
// punctuation block, general punctuation (dashes, curly quotes), CJK
// punctuation and the replacement character.
inline bool is_separator(char32_t cp) {
  if (cp < 0x80) {
    return !((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') || (cp >= '0' && cp <= '9'));
  }
  return (cp >= 0x80 && cp <= 0xBF) || cp == 0xD7 || cp == 0xF7 ||
         (cp >= 0x2000 && cp <= 0x206F) || (cp >= 0x3000 && cp <= 0x303F) || cp == 0xFFFD;
}

}  // namespace detail

/// Lowercases ASCII letters and splits on every run of non-alphanumeric
/// characters.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = std::min(detail::utf8_length(lead), text.size() - i);
    const char32_t cp = detail::utf8_decode(text, i, len);
    if (detail::is_separator(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (len == 1) {
      current.push_back(static_cast<char>(lead >= 'A' && lead <= 'Z' ? lead - 'A' + 'a' : lead));
    } else {
      current.append(text.substr(i, len));
    }
    i += len;
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

/// Single words and multi-word phrases, normalised with the motif tokenizer.
class TermDictionary {
 public:
  explicit TermDictionary(std::span<const std::string> terms) {
    std::set<std::string> seen;
    for (const auto& raw : terms) {
      auto tokens = tokenize(raw);
      if (tokens.empty()) continue;
      std::string normalized;
      for (const auto& t : tokens) normalized += (normalized.empty() ? "" : " ") + t;
      if (!seen.insert(normalized).second) {
        throw InputError("dictionary: duplicate term '" + normalized + "'");
      }
      if (tokens.size() == 1) {
        words_.insert(tokens.front());
      } else {
        phrases_.push_back(std::move(tokens));
      }
    }
    if (seen.empty()) throw InputError("dictionary: no terms");
    terms_.assign(seen.begin(), seen.end());
  }

  /// One term per line; blank lines and lines starting with '#' are skipped.
  static TermDictionary parse(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
      auto end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(start, end - start));
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto first = line.find_first_not_of(" \t");
      if (first != std::string::npos && line[first] != '#') lines.push_back(line);
      start = end + 1;
    }
    return TermDictionary(lines);
  }

  bool matches(std::span<const std::string> tokens) const {
    for (const auto& t : tokens)
      if (words_.count(t)) return true;
    for (const auto& phrase : phrases_) {
      if (phrase.size() > tokens.size()) continue;
      for (std::size_t i = 0; i + phrase.size() <= tokens.size(); ++i) {
        if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
          return true;
        }
      }
    }
    return false;
  }

  const std::vector<std::string>& terms() const { return terms_; }

 private:
  std::unordered_set<std::string> words_;
  std::vector<std::vector<std::string>> phrases_;
  std::vector<std::string> terms_;
};

inline bool classify_motif(std::string_view description, const TermDictionary& dict) {
  return dict.matches(tokenize(description));
}

struct MotifEntry {
  std::string group_id;
  std::string motif_id;
  std::string description;
};

class MotifCatalog {
 public:
  MotifCatalog() = default;

  explicit MotifCatalog(std::vector<MotifEntry> entries) : entries_(std::move(entries)) {
    std::set<std::pair<std::string, std::string>> keys;
    for (const auto& e : entries_) {
      if (!keys.emplace(e.group_id, e.motif_id).second) {
        throw InputError("motif catalog: duplicate motif '" + e.motif_id + "' in group '" +
                         e.group_id + "'");
      }
    }
  }

  const std::vector<MotifEntry>& entries() const { return entries_; }

 private:
  std::vector<MotifEntry> entries_;
};

struct FolkloreScore {
  std::string group_id;
  long long env_motifs = 0;
  long long total_motifs = 0;
  double score = 0.0;
};

inline FolkloreScore score_counts(long long env, long long total) {
  if (total < 1) throw InputError("folklore score: group has no motifs");
  if (env < 0 || env > total) throw InputError("folklore score: env count outside [0, total]");
  return {"", env, total,
          std::log1p(static_cast<double>(env) / static_cast<double>(total))};
}

/// `environmental` is any range of per-motif flags.
template <std::ranges::input_range Flags>
FolkloreScore score_group(const Flags& environmental) {
  long long env = 0, total = 0;
  for (bool flag : environmental) {
    env += flag ? 1 : 0;
    ++total;
  }
  return score_counts(env, total);
}

/// One score per group, sorted by group_id. When `expected_groups` is given,
/// every listed group must own at least one motif.
inline std::vector<FolkloreScore> score_catalog(const MotifCatalog& catalog,
                                                const TermDictionary& dict,
                                                std::span<const std::string> expected_groups = {}) {
  std::map<std::string, std::pair<long long, long long>> counts;
  for (const auto& e : catalog.entries()) {
    auto& c = counts[e.group_id];
    c.first += classify_motif(e.description, dict) ? 1 : 0;
    c.second += 1;
  }
  std::string missing;
  for (const auto& g : expected_groups) {
    if (!counts.count(g)) missing += (missing.empty() ? "" : ", ") + g;
  }
  if (!missing.empty()) throw InputError("folklore: groups without motifs: " + missing);

  std::vector<FolkloreScore> out;
  for (const auto& [group, c] : counts) {
    auto s = score_counts(c.first, c.second);
    s.group_id = group;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace climattn
