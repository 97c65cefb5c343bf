#pragma once
// A small deterministic suffix-stripping lemmatizer for concept matching.
// It is a stemmer, not a dictionary lemmatizer: inflected forms of a word
// collapse to a shared stem ("prayed", "prayers", "praying" -> "pray";
// "pregnancy" -> "pregnant"), at the cost of occasionally conflating
// unrelated words. That trade is fine here, where the output only feeds
// graph concept matching and never surfaces to users.
//
// Matching is case-insensitive and the function is idempotent: rules are
// applied repeatedly until none fires, and every rule shortens the word,
// so the iteration terminates and a returned lemma maps to itself.

#include <array>
#include <cctype>
#include <string>
#include <string_view>

namespace spear {

namespace detail {

inline bool ends_with(std::string_view word, std::string_view suffix) {
  return word.size() >= suffix.size() &&
         word.compare(word.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

struct SuffixRule {
  std::string_view suffix;
  std::string_view replacement;
  bool collapse_double;  // un-double a final consonant afterwards (stopped -> stop)
};

// Ordered longest-match-first within overlapping families. The minimum
// stem length keeps short words intact ("test" does not lose "est").
inline constexpr std::array<SuffixRule, 13> kRules = {{
    {"ancies", "ant", false},
    {"encies", "ent", false},
    {"ancy", "ant", false},
    {"ency", "ent", false},
    {"sses", "ss", false},
    {"ies", "y", false},
    {"ied", "y", false},
    {"ing", "", true},
    {"ed", "", true},
    {"est", "", false},
    {"er", "", false},
    {"ly", "", false},
    {"s", "", false},
}};

inline constexpr std::size_t kMinStem = 3;

// One rewrite pass; true if a rule fired.
inline bool apply_one(std::string& word) {
  for (const auto& rule : kRules) {
    if (!ends_with(word, rule.suffix)) continue;
    std::size_t stem_len = word.size() - rule.suffix.size() + rule.replacement.size();
    if (stem_len < kMinStem) continue;
    // A bare trailing s is inflection; ss ("press") and us ("virus") are not.
    if (rule.suffix == "s" && (ends_with(word, "ss") || ends_with(word, "us"))) continue;
    word.resize(word.size() - rule.suffix.size());
    word.append(rule.replacement);
    if (rule.collapse_double && word.size() >= kMinStem + 1) {
      char last = word.back();
      if (!is_vowel(last) && last != 'l' && last != 's' && last != 'z' &&
          word[word.size() - 2] == last)
        word.pop_back();
    }
    return true;
  }
  // Final silent e, so "smoke" and "smoking" meet at "smok".
  if (word.size() > kMinStem && word.back() == 'e') {
    word.pop_back();
    return true;
  }
  return false;
}

}  // namespace detail

inline std::string lowercase(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string lemma_of(std::string_view word) {
  std::string out = lowercase(word);
  while (detail::apply_one(out)) {
  }
  return out;
}

inline bool same_lemma(std::string_view a, std::string_view b) {
  return lemma_of(a) == lemma_of(b);
}

}  // namespace spear
