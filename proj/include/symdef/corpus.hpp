#ifndef SYMDEF_CORPUS_HPP
#define SYMDEF_CORPUS_HPP

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "symdef/error.hpp"

namespace symdef {

// A token of the sentence text. Offsets are byte positions into the
// UTF-8 sentence string; a token never splits a multi-byte character.
struct Token {
  std::string text;
  int char_start = 0;  // inclusive
  int char_end = 0;    // exclusive

  bool operator==(const Token&) const = default;
};

// One occurrence of a mathematical symbol, covering a contiguous run of
// tokens. Occurrences within a sentence never share a token.
struct SymbolOccurrence {
  std::string id;                  // unique within the sentence
  std::vector<int> token_indices;  // sorted, contiguous, non-empty

  int first_token() const { return token_indices.front(); }
  int last_token() const { return token_indices.back(); }

  bool operator==(const SymbolOccurrence&) const = default;
};

// A possibly discontinuous definition span: sorted, pairwise disjoint
// inclusive token ranges. Spans of different links may overlap each other
// and may overlap symbol tokens (nested annotations).
struct DefinitionSpan {
  std::vector<std::pair<int, int>> fragments;  // [start_token, end_token]

  int onset() const { return fragments.front().first; }

  bool covers(int token_index) const {
    for (const auto& [a, b] : fragments) {
      if (token_index >= a && token_index <= b) return true;
    }
    return false;
  }

  std::vector<int> token_set() const {
    std::vector<int> out;
    for (const auto& [a, b] : fragments) {
      for (int t = a; t <= b; ++t) out.push_back(t);
    }
    return out;
  }

  bool operator==(const DefinitionSpan&) const = default;
};

// Links a symbol occurrence to its (single, possibly discontinuous)
// definition span.
struct SymbolDefLink {
  std::string symbol_id;
  DefinitionSpan definition;

  bool operator==(const SymbolDefLink&) const = default;
};

// Optional pre-computed per-token syntactic annotations. Channels are
// either empty (absent) or exactly |tokens| long.
struct SyntaxChannels {
  std::vector<std::string> pos;
  std::vector<std::string> dep;
  std::vector<bool> abbr;
  std::vector<bool> ent;

  bool empty() const {
    return pos.empty() && dep.empty() && abbr.empty() && ent.empty();
  }

  bool operator==(const SyntaxChannels&) const = default;
};

struct AnnotatedSentence {
  std::string id;
  std::string paper_id;
  std::string text;
  std::vector<Token> tokens;
  std::vector<SymbolOccurrence> symbols;
  std::vector<SymbolDefLink> links;
  std::optional<SyntaxChannels> syntax;

  const SymbolOccurrence* find_symbol(const std::string& symbol_id) const {
    for (const auto& s : symbols) {
      if (s.id == symbol_id) return &s;
    }
    return nullptr;
  }

  const SymbolDefLink* find_link(const std::string& symbol_id) const {
    for (const auto& l : links) {
      if (l.symbol_id == symbol_id) return &l;
    }
    return nullptr;
  }

  // Symbol occurrences ordered by first token index.
  std::vector<const SymbolOccurrence*> symbols_in_token_order() const {
    std::vector<const SymbolOccurrence*> out;
    out.reserve(symbols.size());
    for (const auto& s : symbols) out.push_back(&s);
    std::sort(out.begin(), out.end(),
              [](const SymbolOccurrence* a, const SymbolOccurrence* b) {
                return a->first_token() < b->first_token();
              });
    return out;
  }

  bool operator==(const AnnotatedSentence&) const = default;
};

inline std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

namespace detail {

inline void fail_invariant(const std::string& sentence_id,
                           const std::string& what) {
  throw Error(errc::kInvariant, "sentence '" + sentence_id + "': " + what);
}

}  // namespace detail

// Validates every type invariant of the data model. Throws Error
// (E_INVARIANT) naming the sentence and the violated invariant.
inline void validate(const AnnotatedSentence& s) {
  const int n = static_cast<int>(s.tokens.size());
  int prev_end = -1;
  for (std::size_t i = 0; i < s.tokens.size(); ++i) {
    const Token& t = s.tokens[i];
    if (t.char_start < 0 || t.char_start >= t.char_end)
      detail::fail_invariant(s.id, "token " + std::to_string(i) +
                                       " has empty or negative char range");
    if (t.char_start < prev_end)
      detail::fail_invariant(s.id, "token " + std::to_string(i) +
                                       " overlaps or precedes previous token");
    prev_end = t.char_end;
  }

  std::set<std::string> ids;
  std::vector<bool> used(s.tokens.size(), false);
  for (const auto& sym : s.symbols) {
    if (sym.id.empty()) detail::fail_invariant(s.id, "symbol with empty id");
    if (!ids.insert(sym.id).second)
      detail::fail_invariant(s.id, "duplicate symbol id '" + sym.id + "'");
    if (sym.token_indices.empty())
      detail::fail_invariant(s.id, "symbol '" + sym.id + "' covers no tokens");
    for (std::size_t i = 0; i < sym.token_indices.size(); ++i) {
      int t = sym.token_indices[i];
      if (t < 0 || t >= n)
        detail::fail_invariant(s.id, "symbol '" + sym.id +
                                         "' token index out of range");
      if (i > 0 && t != sym.token_indices[i - 1] + 1)
        detail::fail_invariant(
            s.id, "symbol '" + sym.id + "' token indices not contiguous");
      if (used[static_cast<std::size_t>(t)])
        detail::fail_invariant(s.id, "symbols share token index " +
                                         std::to_string(t));
      used[static_cast<std::size_t>(t)] = true;
    }
  }

  std::set<std::string> linked;
  for (const auto& link : s.links) {
    if (ids.find(link.symbol_id) == ids.end())
      detail::fail_invariant(
          s.id, "link references unknown symbol id '" + link.symbol_id + "'");
    if (!linked.insert(link.symbol_id).second)
      detail::fail_invariant(
          s.id, "more than one link for symbol '" + link.symbol_id + "'");
    const auto& frags = link.definition.fragments;
    if (frags.empty())
      detail::fail_invariant(
          s.id, "link for '" + link.symbol_id + "' has no fragments");
    int prev = -1;
    for (const auto& [a, b] : frags) {
      if (a < 0 || b >= n || a > b)
        detail::fail_invariant(s.id, "link for '" + link.symbol_id +
                                         "' has fragment out of token range");
      if (a <= prev)
        detail::fail_invariant(s.id,
                               "link for '" + link.symbol_id +
                                   "' has unsorted or overlapping fragments");
      prev = b;
    }
  }

  if (s.syntax.has_value() && !s.syntax->empty()) {
    const auto& sx = *s.syntax;
    auto check_len = [&](std::size_t len, const char* name) {
      if (len != 0 && len != s.tokens.size())
        detail::fail_invariant(s.id, std::string("syntax channel '") + name +
                                         "' length mismatch");
    };
    check_len(sx.pos.size(), "pos");
    check_len(sx.dep.size(), "dep");
    check_len(sx.abbr.size(), "abbr");
    check_len(sx.ent.size(), "ent");
  }
}

// --------------------------------------------------------------------------
// Default tokenizer: whitespace separates tokens, ASCII punctuation forms
// single-character tokens, everything else (including multi-byte UTF-8
// sequences) aggregates into word tokens. Offsets are byte offsets.
// --------------------------------------------------------------------------

using Tokenizer = std::function<std::vector<Token>(std::string_view)>;

inline std::vector<Token> default_tokenize(std::string_view text) {
  std::vector<Token> tokens;
  const auto flush = [&](int start, int end) {
    if (start < end)
      tokens.push_back(
          {std::string(text.substr(static_cast<std::size_t>(start),
                                   static_cast<std::size_t>(end - start))),
           start, end});
  };
  int word_start = -1;
  const int n = static_cast<int>(text.size());
  for (int i = 0; i < n; ++i) {
    unsigned char c = static_cast<unsigned char>(text[static_cast<std::size_t>(i)]);
    bool is_space = c < 0x80 && std::isspace(c);
    bool is_punct = c < 0x80 && std::ispunct(c);
    if (is_space) {
      if (word_start >= 0) flush(word_start, i), word_start = -1;
    } else if (is_punct) {
      if (word_start >= 0) flush(word_start, i), word_start = -1;
      flush(i, i + 1);
    } else {
      if (word_start < 0) word_start = i;
    }
  }
  if (word_start >= 0) flush(word_start, n);
  return tokens;
}

}  // namespace symdef

#endif  // SYMDEF_CORPUS_HPP
