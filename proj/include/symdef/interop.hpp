#ifndef SYMDEF_INTEROP_HPP
#define SYMDEF_INTEROP_HPP

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "symdef/corpus.hpp"
#include "symdef/error.hpp"
#include "symdef/targeting.hpp"

namespace symdef {

// ---------------------------------------------------------------------------
// SciERC-style export for span-based IE baselines. One document per corpus
// paper; token indices are document-global (cumulative over sentences).
// Symbols are masked, exactly as the baseline experiments consume them.
// Discontinuous definitions necessarily flatten to one DEF entity per
// fragment, each related to its TERM; the fragment grouping is recoverable
// only through relations sharing a TERM.
// ---------------------------------------------------------------------------

struct SciercEntity {
  int start = 0;  // inclusive, document-global token index
  int end = 0;    // inclusive
  std::string type;  // TERM or DEF

  auto operator<=>(const SciercEntity&) const = default;
};

struct SciercRelation {
  int arg1_start = 0, arg1_end = 0;
  int arg2_start = 0, arg2_end = 0;
  std::string label;  // DEFINITION-OF

  auto operator<=>(const SciercRelation&) const = default;
};

struct SciercDocument {
  std::string doc_key;
  std::vector<std::vector<std::string>> sentences;
  std::vector<std::vector<SciercEntity>> ner;
  std::vector<std::vector<SciercRelation>> relations;

  bool operator==(const SciercDocument&) const = default;
};

inline std::vector<SciercDocument> to_scierc(
    const std::vector<AnnotatedSentence>& corpus) {
  std::vector<SciercDocument> docs;
  std::map<std::string, std::size_t> doc_index;
  for (const auto& sentence : corpus) {
    auto [it, inserted] =
        doc_index.try_emplace(sentence.paper_id, docs.size());
    if (inserted) {
      docs.emplace_back();
      docs.back().doc_key = sentence.paper_id;
    }
    SciercDocument& doc = docs[it->second];

    int base = 0;
    for (const auto& toks : doc.sentences) base += static_cast<int>(toks.size());

    MaskResult masked = mask_symbols(sentence);
    doc.sentences.push_back(masked.tokens);
    doc.ner.emplace_back();
    doc.relations.emplace_back();
    auto& ner = doc.ner.back();
    auto& relations = doc.relations.back();

    auto to_masked = [&](int a, int b) {
      return detail::masked_range(masked.origin_map, a, b);
    };

    for (const SymbolOccurrence* sym : sentence.symbols_in_token_order()) {
      auto [ma, mb] = to_masked(sym->first_token(), sym->last_token());
      ner.push_back({ma + base, mb + base, "TERM"});
      const SymbolDefLink* link = sentence.find_link(sym->id);
      if (link == nullptr) continue;
      for (const auto& [fa, fb] : link->definition.fragments) {
        auto [da, db] = to_masked(fa, fb);
        ner.push_back({da + base, db + base, "DEF"});
        relations.push_back({ma + base, mb + base, da + base, db + base,
                             "DEFINITION-OF"});
      }
    }
    std::sort(ner.begin(), ner.end());
    ner.erase(std::unique(ner.begin(), ner.end()), ner.end());
    std::sort(relations.begin(), relations.end());
  }
  return docs;
}

// Rebuilds masked sentences from the export. Fragments of relations sharing
// a TERM regroup into one definition span. Character offsets are synthesized
// by single-space joining.
inline std::vector<AnnotatedSentence> from_scierc(
    const std::vector<SciercDocument>& docs) {
  std::vector<AnnotatedSentence> out;
  for (const auto& doc : docs) {
    int base = 0;
    for (std::size_t si = 0; si < doc.sentences.size(); ++si) {
      const auto& toks = doc.sentences[si];
      AnnotatedSentence s;
      s.paper_id = doc.doc_key;
      s.id = doc.doc_key + ":" + std::to_string(si);
      int offset = 0;
      for (const auto& t : toks) {
        Token token;
        token.text = t;
        token.char_start = offset;
        token.char_end = offset + static_cast<int>(t.size());
        offset = token.char_end + 1;
        s.tokens.push_back(std::move(token));
        if (!s.text.empty()) s.text += " ";
        s.text += t;
      }

      std::map<std::pair<int, int>, std::string> term_ids;
      int next_id = 0;
      if (si < doc.ner.size()) {
        for (const auto& e : doc.ner[si]) {
          if (e.type != "TERM") continue;
          SymbolOccurrence sym;
          sym.id = "S" + std::to_string(next_id++);
          for (int t = e.start - base; t <= e.end - base; ++t)
            sym.token_indices.push_back(t);
          term_ids[{e.start, e.end}] = sym.id;
          s.symbols.push_back(std::move(sym));
        }
      }
      if (si < doc.relations.size()) {
        std::map<std::string, std::vector<std::pair<int, int>>> frags;
        for (const auto& r : doc.relations[si]) {
          if (r.label != "DEFINITION-OF") continue;
          auto it = term_ids.find({r.arg1_start, r.arg1_end});
          if (it == term_ids.end())
            throw Error(errc::kParse,
                        "relation argument is not a TERM entity in '" +
                            doc.doc_key + "'");
          frags[it->second].emplace_back(r.arg2_start - base,
                                         r.arg2_end - base);
        }
        for (auto& [id, fs] : frags) {
          std::sort(fs.begin(), fs.end());
          SymbolDefLink link;
          link.symbol_id = id;
          link.definition.fragments = fs;
          s.links.push_back(std::move(link));
        }
      }
      validate(s);
      out.push_back(std::move(s));
      base += static_cast<int>(toks.size());
    }
  }
  return out;
}

// SciERC JSON, one document per line:
//   {"doc_key": str, "sentences": [[str]], "ner": [[[s,e,type]]],
//    "relations": [[[s1,e1,s2,e2,label]]]}

inline nlohmann::json scierc_to_json(const SciercDocument& doc) {
  nlohmann::json j;
  j["doc_key"] = doc.doc_key;
  j["sentences"] = doc.sentences;
  j["ner"] = nlohmann::json::array();
  for (const auto& sent : doc.ner) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : sent) arr.push_back({e.start, e.end, e.type});
    j["ner"].push_back(arr);
  }
  j["relations"] = nlohmann::json::array();
  for (const auto& sent : doc.relations) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : sent)
      arr.push_back({r.arg1_start, r.arg1_end, r.arg2_start, r.arg2_end,
                     r.label});
    j["relations"].push_back(arr);
  }
  return j;
}

inline SciercDocument scierc_from_json(const nlohmann::json& j) {
  SciercDocument doc;
  doc.doc_key = j.at("doc_key").get<std::string>();
  doc.sentences =
      j.at("sentences").get<std::vector<std::vector<std::string>>>();
  for (const auto& sent : j.at("ner")) {
    doc.ner.emplace_back();
    for (const auto& e : sent)
      doc.ner.back().push_back({e.at(0).get<int>(), e.at(1).get<int>(),
                                e.at(2).get<std::string>()});
  }
  for (const auto& sent : j.at("relations")) {
    doc.relations.emplace_back();
    for (const auto& r : sent)
      doc.relations.back().push_back(
          {r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(),
           r.at(3).get<int>(), r.at(4).get<std::string>()});
  }
  return doc;
}

inline void save_scierc(const std::string& path,
                        const std::vector<SciercDocument>& docs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::kIo, "cannot open '" + path + "' for writing");
  for (const auto& d : docs) out << scierc_to_json(d).dump() << "\n";
  if (!out) throw Error(errc::kIo, "write failed for '" + path + "'");
}

inline std::vector<SciercDocument> load_scierc(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open '" + path + "' for reading");
  std::vector<SciercDocument> docs;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      docs.push_back(scierc_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::kParse, path + ":" + std::to_string(line_no) +
                                    ": malformed SciERC line: " + e.what());
    }
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Free-text answer alignment into slot labels. The sentence is in its
// numbered masked form (SYMBOL1 ... SYMBOLN); the answer text is chunked per
// symbol, screened for negative phrasing, trimmed to in-sentence words, and
// projected onto token positions.
// ---------------------------------------------------------------------------

enum class AlignmentStatus { Aligned, Negative, Ambiguous, Unalignable };

inline const char* to_string(AlignmentStatus s) {
  switch (s) {
    case AlignmentStatus::Aligned: return "aligned";
    case AlignmentStatus::Negative: return "negative";
    case AlignmentStatus::Ambiguous: return "ambiguous";
    case AlignmentStatus::Unalignable: return "unalignable";
  }
  return "unalignable";
}

enum class AlignPolicy { Interactive, FirstOccurrence };

struct AlignConfig {
  // Conservative by design: a negative match zeroes the whole snippet.
  std::vector<std::string> negative_patterns = {
      "has no definition", "have no definition", "there is no definition",
      "there are no definitions", "is not defined", "are not defined"};
  // Leading answer-template connectors stripped from a snippet before
  // matching; the steps alone would otherwise label copulas that happen to
  // occur in the sentence.
  std::vector<std::vector<std::string>> connector_phrases = {
      {"is", "defined", "as"}, {"are", "defined", "as"},
      {"is", "the"},           {"are", "the"},
      {"refers", "to"},        {"stands", "for"},
      {"is"},                  {"are"},
      {"denotes"},             {"means"},
      {"represents"}};
};

struct AnswerAlignment {
  int symbol_ordinal = 0;  // 1-based, as in the SYMBOLk rendering
  std::string raw_answer;
  AlignmentStatus status = AlignmentStatus::Unalignable;
  // Present unless the answer is unalignable: all-O for negatives,
  // DEF-labeled for aligned/ambiguous answers.
  std::optional<std::vector<TagLabel>> labels;
  std::vector<std::string> ambiguity_notes;
};

// Renders masked tokens with numbered symbol masks (SYMBOL1, SYMBOL2, ...).
inline std::vector<std::string> render_numbered(
    const std::vector<std::string>& masked_tokens,
    const std::vector<int>& symbol_positions) {
  std::vector<std::string> out = masked_tokens;
  for (std::size_t k = 0; k < symbol_positions.size(); ++k)
    out[static_cast<std::size_t>(symbol_positions[k])] =
        std::string(kMaskToken) + std::to_string(k + 1);
  return out;
}

namespace detail {

inline bool is_punct_token(const std::string& t) {
  for (unsigned char c : t)
    if (c >= 0x80 || !std::ispunct(c)) return false;
  return !t.empty();
}

// Word tokens of a snippet, lowercased, punctuation dropped.
inline std::vector<std::string> answer_words(std::string_view text) {
  std::vector<std::string> words;
  for (const Token& t : default_tokenize(text)) {
    if (is_punct_token(t.text)) continue;
    words.push_back(lowercase_ascii(t.text));
  }
  return words;
}

// Position of "SYMBOL<k>" (not followed by another digit) in text.
inline std::size_t find_symbol_mention(std::string_view text, int ordinal,
                                       std::size_t from = 0) {
  const std::string needle = std::string(kMaskToken) + std::to_string(ordinal);
  std::size_t pos = from;
  while ((pos = text.find(needle, pos)) != std::string_view::npos) {
    std::size_t after = pos + needle.size();
    if (after >= text.size() ||
        !std::isdigit(static_cast<unsigned char>(text[after])))
      return pos;
    pos = after;
  }
  return std::string_view::npos;
}

// Start of the next SYMBOL<j> mention at or after `from`, any ordinal.
inline std::size_t find_any_symbol_mention(std::string_view text,
                                           std::size_t from) {
  std::size_t pos = from;
  while ((pos = text.find(kMaskToken, pos)) != std::string_view::npos) {
    std::size_t after = pos + std::string_view(kMaskToken).size();
    if (after < text.size() &&
        std::isdigit(static_cast<unsigned char>(text[after])))
      return pos;
    pos = after;
  }
  return std::string_view::npos;
}

}  // namespace detail

// Interactive resolution callback: given (word, candidate token positions),
// returns the chosen position. The CLI wires this to a stdin prompt.
using OccurrencePicker =
    std::function<int(const std::string& word, const std::vector<int>& options)>;

inline AnswerAlignment align_answer(
    const std::vector<std::string>& sentence_tokens, int target_symbol_ordinal,
    const std::string& answer_text,
    AlignPolicy policy = AlignPolicy::FirstOccurrence,
    const AlignConfig& config = AlignConfig(),
    const OccurrencePicker& picker = nullptr) {
  AnswerAlignment result;
  result.symbol_ordinal = target_symbol_ordinal;
  result.raw_answer = answer_text;

  // Step 1: chunk the answer; the snippet for SYMBOLk runs from its mention
  // to the next symbol mention (or the whole answer when k is not named).
  std::string snippet = answer_text;
  std::size_t at =
      detail::find_symbol_mention(answer_text, target_symbol_ordinal);
  if (at != std::string::npos) {
    std::size_t begin = at + std::string(kMaskToken).size() +
                        std::to_string(target_symbol_ordinal).size();
    std::size_t next = detail::find_any_symbol_mention(answer_text, begin);
    snippet = answer_text.substr(
        begin, next == std::string::npos ? std::string::npos : next - begin);
  }

  // Step 2: negative phrasing zeroes the labels.
  const std::string snippet_low = lowercase_ascii(snippet);
  const std::string answer_low = lowercase_ascii(answer_text);
  for (const auto& pattern : config.negative_patterns) {
    if (snippet_low.find(pattern) != std::string::npos ||
        answer_low.find(pattern) != std::string::npos) {
      result.status = AlignmentStatus::Negative;
      result.labels = std::vector<TagLabel>(sentence_tokens.size(), TagLabel::O);
      return result;
    }
  }

  std::vector<std::string> words = detail::answer_words(snippet);

  // Strip one leading answer-template connector (longest match).
  std::size_t strip = 0;
  for (const auto& phrase : config.connector_phrases) {
    if (phrase.size() <= words.size() && phrase.size() > strip &&
        std::equal(phrase.begin(), phrase.end(), words.begin()))
      strip = phrase.size();
  }
  words.erase(words.begin(), words.begin() + static_cast<long>(strip));

  // Step 3: drop words that do not occur in the sentence.
  std::map<std::string, std::vector<int>> occurrences;
  for (std::size_t t = 0; t < sentence_tokens.size(); ++t)
    occurrences[lowercase_ascii(sentence_tokens[t])].push_back(
        static_cast<int>(t));
  std::vector<std::string> kept;
  for (const auto& w : words)
    if (occurrences.count(w)) kept.push_back(w);
  if (kept.empty()) {
    result.status = AlignmentStatus::Unalignable;
    return result;
  }

  // Steps 4-5: unique words label directly; repeated words follow policy.
  std::set<int> labeled;
  bool ambiguous = false;
  for (const auto& w : kept) {
    const auto& options = occurrences[w];
    int chosen;
    if (options.size() == 1) {
      chosen = options[0];
    } else if (policy == AlignPolicy::Interactive && picker) {
      chosen = picker(w, options);
    } else {
      chosen = -1;
      for (int o : options)
        if (!labeled.count(o)) {
          chosen = o;
          break;
        }
      if (chosen < 0) chosen = options[0];
      ambiguous = true;
      std::string note = "word '" + w + "' occurs at tokens {";
      for (std::size_t i = 0; i < options.size(); ++i)
        note += (i ? "," : "") + std::to_string(options[i]);
      note += "}; picked " + std::to_string(chosen);
      result.ambiguity_notes.push_back(note);
    }
    labeled.insert(chosen);
  }

  // Contiguous labeled runs become B-DEF I-DEF* so the output stays
  // BIO-valid; evaluation merges the B/I distinction anyway.
  std::vector<TagLabel> labels(sentence_tokens.size(), TagLabel::O);
  int prev = -2;
  for (int t : labeled) {
    labels[static_cast<std::size_t>(t)] =
        t == prev + 1 ? TagLabel::IDef : TagLabel::BDef;
    prev = t;
  }
  result.labels = std::move(labels);
  result.status =
      ambiguous ? AlignmentStatus::Ambiguous : AlignmentStatus::Aligned;
  return result;
}

}  // namespace symdef

#endif  // SYMDEF_INTEROP_HPP
