#ifndef SYMDEF_CORPUS_STATS_HPP
#define SYMDEF_CORPUS_STATS_HPP

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "symdef/corpus.hpp"

namespace symdef {

// Dataset-level counts in the shape of the corpus comparison table.
struct CorpusStats {
  long positive_sentences = 0;   // sentences with >= 1 annotated symbol
  long total_terms = 0;          // annotated symbol occurrences
  double terms_per_sentence = 0.0;
  long total_defs = 0;           // definition spans (links)
  double defs_per_sentence = 0.0;
  long equal_count_sentences = 0;  // |symbols| == |links|, positive only
  long collated_sentences = 0;     // onsets strictly alternate T,D,T,D,...
  long overlap_instances = 0;      // def-def and def-symbol token sharing
  long overlap_sentences = 0;

  bool operator==(const CorpusStats&) const = default;
};

namespace detail {

inline bool token_sets_intersect(const std::vector<int>& a,
                                 const std::vector<int>& b) {
  // Both inputs sorted.
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return true;
    if (a[i] < b[j])
      ++i;
    else
      ++j;
  }
  return false;
}

}  // namespace detail

// "Collated" means the onsets of terms and definitions strictly alternate
// T,D,T,D,... in token order. Ties (a definition onset on the same token as
// a term onset) are ordered term-first and therefore still alternate only
// if the surrounding pattern does.
inline bool is_collated(const AnnotatedSentence& s) {
  if (s.symbols.empty()) return false;
  std::vector<std::pair<int, int>> onsets;  // (token, 0=term 1=def)
  for (const auto& sym : s.symbols) onsets.push_back({sym.first_token(), 0});
  for (const auto& link : s.links)
    onsets.push_back({link.definition.onset(), 1});
  std::sort(onsets.begin(), onsets.end());
  for (std::size_t i = 0; i < onsets.size(); ++i) {
    int expected = static_cast<int>(i % 2);  // T,D,T,D,...
    if (onsets[i].second != expected) return false;
  }
  return true;
}

inline long count_overlap_instances(const AnnotatedSentence& s) {
  std::vector<std::vector<int>> def_sets;
  for (const auto& link : s.links) def_sets.push_back(link.definition.token_set());
  long count = 0;
  for (std::size_t i = 0; i < def_sets.size(); ++i)
    for (std::size_t j = i + 1; j < def_sets.size(); ++j)
      if (detail::token_sets_intersect(def_sets[i], def_sets[j])) ++count;
  for (const auto& ds : def_sets)
    for (const auto& sym : s.symbols)
      if (detail::token_sets_intersect(ds, sym.token_indices)) ++count;
  return count;
}

inline CorpusStats compute_stats(const std::vector<AnnotatedSentence>& corpus) {
  CorpusStats st;
  for (const auto& s : corpus) {
    if (s.symbols.empty()) continue;
    st.positive_sentences += 1;
    st.total_terms += static_cast<long>(s.symbols.size());
    st.total_defs += static_cast<long>(s.links.size());
    if (s.symbols.size() == s.links.size()) st.equal_count_sentences += 1;
    if (is_collated(s)) st.collated_sentences += 1;
    long overlaps = count_overlap_instances(s);
    st.overlap_instances += overlaps;
    if (overlaps > 0) st.overlap_sentences += 1;
  }
  if (st.positive_sentences > 0) {
    st.terms_per_sentence = static_cast<double>(st.total_terms) /
                            static_cast<double>(st.positive_sentences);
    st.defs_per_sentence = static_cast<double>(st.total_defs) /
                           static_cast<double>(st.positive_sentences);
  }
  return st;
}

// ---------------------------------------------------------------------------
// Coordination-pattern mining: rank documents by literal counts of the
// strings "respectively" and ", and".
// ---------------------------------------------------------------------------

struct MiningResult {
  int document_index = 0;
  long respectively_count = 0;
  long comma_and_count = 0;

  bool operator==(const MiningResult&) const = default;
};

inline long count_substring(std::string_view text, std::string_view pattern) {
  if (pattern.empty()) return 0;
  long count = 0;
  std::size_t pos = 0;
  while ((pos = text.find(pattern, pos)) != std::string_view::npos) {
    ++count;
    pos += pattern.size();
  }
  return count;
}

inline std::vector<MiningResult> mine_coordination(
    const std::vector<std::string>& texts) {
  std::vector<MiningResult> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    MiningResult r;
    r.document_index = static_cast<int>(i);
    r.respectively_count = count_substring(texts[i], "respectively");
    r.comma_and_count = count_substring(texts[i], ", and");
    out.push_back(r);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const MiningResult& a, const MiningResult& b) {
                     return a.respectively_count + a.comma_and_count >
                            b.respectively_count + b.comma_and_count;
                   });
  return out;
}

// ---------------------------------------------------------------------------
// Annotation lint. Heuristic warnings only, never errors. The word lists
// come from the annotation guidelines and are configuration data.
// ---------------------------------------------------------------------------

struct LintWarning {
  std::string code;       // OMIT_DETERMINER, OMIT_DEFINITION_VERB, ...
  std::string symbol_id;  // owner of the offending definition, if any
  int fragment_index = -1;
  std::string message;
};

struct LintConfig {
  std::set<std::string> determiners = {"the", "a", "an", "some"};
  std::set<std::string> definition_verbs = {"is",    "are",     "was",
                                            "were",  "be",      "means",
                                            "denotes", "denote", "represents"};
  // Symbols externally marked as appearing inside a standard operator
  // context (e.g. log, sqrt). The lint itself cannot detect this.
  std::set<std::string> operator_context_symbol_ids;
};

inline std::vector<LintWarning> lint_annotations(
    const AnnotatedSentence& s, const LintConfig& config = LintConfig()) {
  std::vector<LintWarning> warnings;
  for (const auto& link : s.links) {
    const auto& frags = link.definition.fragments;
    for (std::size_t f = 0; f < frags.size(); ++f) {
      int first = frags[f].first;
      if (first < 0 || first >= static_cast<int>(s.tokens.size())) continue;
      std::string word =
          lowercase_ascii(s.tokens[static_cast<std::size_t>(first)].text);
      if (config.determiners.count(word)) {
        warnings.push_back({"OMIT_DETERMINER", link.symbol_id,
                            static_cast<int>(f),
                            "definition fragment begins with determiner '" +
                                word + "'"});
      } else if (config.definition_verbs.count(word)) {
        warnings.push_back({"OMIT_DEFINITION_VERB", link.symbol_id,
                            static_cast<int>(f),
                            "definition fragment begins with definition "
                            "verb '" + word + "'"});
      }
    }
  }
  for (const auto& sym : s.symbols) {
    if (config.operator_context_symbol_ids.count(sym.id)) {
      warnings.push_back({"SYMBOL_IN_OPERATOR", sym.id, -1,
                          "symbol '" + sym.id +
                              "' is marked as part of a standard operator "
                              "and should not be annotated"});
    }
  }
  return warnings;
}

}  // namespace symdef

#endif  // SYMDEF_CORPUS_STATS_HPP
