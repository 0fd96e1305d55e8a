#ifndef SYMDEF_TARGETING_HPP
#define SYMDEF_TARGETING_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "symdef/corpus.hpp"
#include "symdef/error.hpp"

namespace symdef {

// The five slot tags. Enum order is the deterministic tie-break order used
// by Viterbi decoding.
enum class TagLabel : int { O = 0, BTerm = 1, ITerm = 2, BDef = 3, IDef = 4 };

inline constexpr int kNumLabels = 5;
inline constexpr const char* kMaskToken = "SYMBOL";
inline constexpr const char* kTargetMarkedToken = "</s>SYMBOL</s>";

inline const char* to_string(TagLabel label) {
  switch (label) {
    case TagLabel::O: return "O";
    case TagLabel::BTerm: return "B-TERM";
    case TagLabel::ITerm: return "I-TERM";
    case TagLabel::BDef: return "B-DEF";
    case TagLabel::IDef: return "I-DEF";
  }
  return "O";
}

inline TagLabel tag_from_string(const std::string& s) {
  if (s == "O") return TagLabel::O;
  if (s == "B-TERM") return TagLabel::BTerm;
  if (s == "I-TERM") return TagLabel::ITerm;
  if (s == "B-DEF") return TagLabel::BDef;
  if (s == "I-DEF") return TagLabel::IDef;
  throw Error(errc::kParse, "unknown tag label '" + s + "'");
}

inline bool is_def(TagLabel l) {
  return l == TagLabel::BDef || l == TagLabel::IDef;
}
inline bool is_term(TagLabel l) {
  return l == TagLabel::BTerm || l == TagLabel::ITerm;
}

// An I-X tag may only continue a span of the same type.
inline bool bio_valid(const std::vector<TagLabel>& labels) {
  TagLabel prev = TagLabel::O;
  for (TagLabel l : labels) {
    if (l == TagLabel::ITerm && !is_term(prev)) return false;
    if (l == TagLabel::IDef && !is_def(prev)) return false;
    prev = l;
  }
  return true;
}

// One query of the tagger: a masked copy of the sentence with one symbol
// marked as the target. The target is carried as a position (plus an
// is-target feature downstream), not as literal marker tokens, so that
// token/label alignment is undisturbed; render_with_markers produces the
// literal "</s>SYMBOL</s>" form for export.
struct TargetSample {
  std::string sentence_id;
  int sample_index = 0;
  std::vector<std::string> tokens;       // masked token texts
  std::optional<int> target_position;    // absent iff sentence has no symbols
  std::vector<int> symbol_positions;     // positions of all SYMBOL tokens
  std::optional<std::vector<TagLabel>> gold_labels;
  // masked token index -> [first, last] original token index range
  std::vector<std::pair<int, int>> origin_map;
  bool has_definition = false;
};

struct MaskResult {
  std::vector<std::string> tokens;
  std::vector<std::pair<int, int>> origin_map;
  std::vector<int> symbol_positions;
};

// Collapses every symbol occurrence to the single token "SYMBOL"; all other
// tokens are copied verbatim. The origin map is total and order-preserving.
inline MaskResult mask_symbols(const AnnotatedSentence& sentence) {
  MaskResult out;
  const int n = static_cast<int>(sentence.tokens.size());
  // Occurrence start -> last covered token.
  std::vector<int> collapse_to(static_cast<std::size_t>(n), -1);
  for (const auto& sym : sentence.symbols)
    collapse_to[static_cast<std::size_t>(sym.first_token())] = sym.last_token();
  for (int t = 0; t < n;) {
    int last = collapse_to[static_cast<std::size_t>(t)];
    if (last >= 0) {
      out.symbol_positions.push_back(static_cast<int>(out.tokens.size()));
      out.tokens.emplace_back(kMaskToken);
      out.origin_map.emplace_back(t, last);
      t = last + 1;
    } else {
      out.tokens.push_back(sentence.tokens[static_cast<std::size_t>(t)].text);
      out.origin_map.emplace_back(t, t);
      t += 1;
    }
  }
  return out;
}

namespace detail {

// Masked token indices whose origin range intersects [a, b]. Because
// masking only merges runs, the result is a contiguous range.
inline std::pair<int, int> masked_range(
    const std::vector<std::pair<int, int>>& origin_map, int a, int b) {
  int first = -1, last = -1;
  for (std::size_t m = 0; m < origin_map.size(); ++m) {
    const auto& [oa, ob] = origin_map[m];
    if (ob >= a && oa <= b) {
      if (first < 0) first = static_cast<int>(m);
      last = static_cast<int>(m);
    }
  }
  return {first, last};
}

}  // namespace detail

// Gold BIO labels for one sample. The target token is B-TERM; tokens inside
// the target's definition fragments are DEF, with B-DEF restarting at every
// fragment onset so fragment boundaries stay recoverable; everything else
// (including other symbols and their definitions) is O. A fragment that
// covers the target's own token leaves B-TERM in place: the term wins at
// the target position, and the definition run restarts after it.
inline std::vector<TagLabel> project_gold(const TargetSample& sample,
                                          const AnnotatedSentence& sentence) {
  std::vector<TagLabel> labels(sample.tokens.size(), TagLabel::O);
  if (!sample.target_position.has_value()) return labels;
  const int target = *sample.target_position;
  labels[static_cast<std::size_t>(target)] = TagLabel::BTerm;

  auto ordered = sentence.symbols_in_token_order();
  const SymbolOccurrence* target_symbol = nullptr;
  for (const SymbolOccurrence* sym : ordered) {
    auto [mfirst, mlast] =
        detail::masked_range(sample.origin_map, sym->first_token(),
                             sym->last_token());
    if (mfirst == target) {
      target_symbol = sym;
      break;
    }
  }
  if (target_symbol == nullptr)
    throw Error(errc::kInvariant,
                "sample for '" + sample.sentence_id +
                    "': target position resolves to no symbol occurrence");

  const SymbolDefLink* link = sentence.find_link(target_symbol->id);
  if (link == nullptr) return labels;

  for (const auto& [a, b] : link->definition.fragments) {
    auto [mfirst, mlast] = detail::masked_range(sample.origin_map, a, b);
    if (mfirst < 0) continue;
    bool in_run = false;
    for (int m = mfirst; m <= mlast; ++m) {
      if (m == target) {
        in_run = false;  // term wins; definition run restarts after it
        continue;
      }
      auto& slot = labels[static_cast<std::size_t>(m)];
      if (slot == TagLabel::O)
        slot = in_run ? TagLabel::IDef : TagLabel::BDef;
      in_run = true;
    }
  }
  return labels;
}

// Expands a sentence into one sample per symbol, in token order. A sentence
// with no symbols yields a single sample with no target and all-O gold.
inline std::vector<TargetSample> expand_targets(
    const AnnotatedSentence& sentence) {
  MaskResult masked = mask_symbols(sentence);
  std::vector<TargetSample> samples;
  const int count =
      std::max<int>(1, static_cast<int>(masked.symbol_positions.size()));
  for (int k = 0; k < count; ++k) {
    TargetSample sample;
    sample.sentence_id = sentence.id;
    sample.sample_index = k;
    sample.tokens = masked.tokens;
    sample.origin_map = masked.origin_map;
    sample.symbol_positions = masked.symbol_positions;
    if (!masked.symbol_positions.empty())
      sample.target_position = masked.symbol_positions[static_cast<std::size_t>(k)];
    sample.gold_labels = project_gold(sample, sentence);
    sample.has_definition = false;
    for (TagLabel l : *sample.gold_labels)
      if (l == TagLabel::BDef) sample.has_definition = true;
    samples.push_back(std::move(sample));
  }
  return samples;
}

// The literal marker form of the sample tokens for export and inspection.
inline std::vector<std::string> render_with_markers(const TargetSample& sample) {
  std::vector<std::string> out = sample.tokens;
  if (sample.target_position.has_value())
    out[static_cast<std::size_t>(*sample.target_position)] = kTargetMarkedToken;
  return out;
}

// Reassembles per-sample label sequences into symbol -> definition pairs.
// Every maximal B-DEF I-DEF* run becomes one fragment, translated back to
// original token indices through the origin map. Targets with no DEF tokens
// are omitted. Output follows target token order.
inline std::vector<std::pair<std::string, DefinitionSpan>> merge_predictions(
    const std::vector<TargetSample>& samples,
    const std::vector<std::vector<TagLabel>>& predictions,
    const AnnotatedSentence& sentence) {
  if (samples.size() != predictions.size())
    throw Error(errc::kDimension,
                "merge_predictions: " + std::to_string(samples.size()) +
                    " samples vs " + std::to_string(predictions.size()) +
                    " predictions");
  auto ordered = sentence.symbols_in_token_order();
  std::vector<std::pair<std::string, DefinitionSpan>> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const TargetSample& sample = samples[i];
    const auto& labels = predictions[i];
    if (labels.size() != sample.tokens.size())
      throw Error(errc::kDimension,
                  "merge_predictions: prediction " + std::to_string(i) +
                      " length " + std::to_string(labels.size()) +
                      " != token count " +
                      std::to_string(sample.tokens.size()));
    if (!bio_valid(labels))
      throw Error(errc::kInvariant,
                  "merge_predictions: prediction " + std::to_string(i) +
                      " is not BIO-valid; decoding bug upstream");
    if (!sample.target_position.has_value()) continue;
    if (sample.sample_index < 0 ||
        sample.sample_index >= static_cast<int>(ordered.size()))
      throw Error(errc::kInvariant,
                  "merge_predictions: sample index out of range for '" +
                      sample.sentence_id + "'");

    DefinitionSpan span;
    int run_start = -1;
    auto close_run = [&](int end_masked) {
      if (run_start < 0) return;
      int orig_a = sample.origin_map[static_cast<std::size_t>(run_start)].first;
      int orig_b = sample.origin_map[static_cast<std::size_t>(end_masked)].second;
      span.fragments.emplace_back(orig_a, orig_b);
      run_start = -1;
    };
    for (std::size_t t = 0; t < labels.size(); ++t) {
      if (labels[t] == TagLabel::BDef) {
        close_run(static_cast<int>(t) - 1);
        run_start = static_cast<int>(t);
      } else if (labels[t] == TagLabel::IDef) {
        // continues the open run
      } else {
        close_run(static_cast<int>(t) - 1);
      }
    }
    close_run(static_cast<int>(labels.size()) - 1);
    if (span.fragments.empty()) continue;
    out.emplace_back(ordered[static_cast<std::size_t>(sample.sample_index)]->id,
                     std::move(span));
  }
  return out;
}

}  // namespace symdef

#endif  // SYMDEF_TARGETING_HPP
