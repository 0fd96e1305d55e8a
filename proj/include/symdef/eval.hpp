#ifndef SYMDEF_EVAL_HPP
#define SYMDEF_EVAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "symdef/corpus.hpp"
#include "symdef/error.hpp"
#include "symdef/targeting.hpp"

namespace symdef {

// The three evaluation classes after merging B-/I- tags.
enum class MergedClass : int { O = 0, Term = 1, Def = 2 };
inline constexpr int kNumMergedClasses = 3;

inline MergedClass merge_tag(TagLabel l) {
  if (is_term(l)) return MergedClass::Term;
  if (is_def(l)) return MergedClass::Def;
  return MergedClass::O;
}

inline const char* to_string(MergedClass c) {
  switch (c) {
    case MergedClass::O: return "O";
    case MergedClass::Term: return "TERM";
    case MergedClass::Def: return "DEF";
  }
  return "O";
}

// Precision/recall/F1 for one class. A zero denominator maps to 0 and is
// flagged, never silently averaged away.
struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long gold_support = 0;
  long predicted_support = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;
};

struct ErrorCounts {
  long false_negative = 0;  // gold has DEF, prediction has none
  long false_positive = 0;  // prediction has DEF, gold has none
  long mislabeled = 0;      // both have DEF but the token sets differ
  long total_errors() const {
    return false_negative + false_positive + mislabeled;
  }
};

// Per-bucket scores are means of per-sample macro F1, where a sample's
// macro averages only the classes present in its own gold or prediction
// (a perfect sample scores 1.0 even when it has no TERM/DEF tokens).
struct BucketStats {
  long n = 0;
  double macro_f1 = 0.0;  // mean of per-sample scores
  double stddev = 0.0;    // population sd of per-sample scores
  double score_sum = 0.0;
  double score_sum_sq = 0.0;
};

struct EvalReport {
  std::array<ClassScores, kNumMergedClasses> per_class;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::map<int, BucketStats> buckets;  // symbol count -> macro F1 within bucket
  ErrorCounts errors;
  long samples = 0;
  bool per_sample_average = false;
};

struct EvalOptions {
  // Pooled confusion counts by default; per-sample averaging of macro scores
  // is available for comparison.
  bool per_sample_average = false;
};

namespace detail {

using Confusion =
    std::array<std::array<long, kNumMergedClasses>, kNumMergedClasses>;

inline std::array<ClassScores, kNumMergedClasses> scores_from_confusion(
    const Confusion& cm) {
  std::array<ClassScores, kNumMergedClasses> out;
  for (int c = 0; c < kNumMergedClasses; ++c) {
    long tp = cm[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
    long gold = 0, pred = 0;
    for (int k = 0; k < kNumMergedClasses; ++k) {
      gold += cm[static_cast<std::size_t>(c)][static_cast<std::size_t>(k)];
      pred += cm[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)];
    }
    ClassScores& s = out[static_cast<std::size_t>(c)];
    s.gold_support = gold;
    s.predicted_support = pred;
    s.precision_undefined = pred == 0;
    s.recall_undefined = gold == 0;
    s.precision = pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(pred);
    s.recall = gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(gold);
    s.f1 = (s.precision + s.recall) == 0.0
               ? 0.0
               : 2.0 * s.precision * s.recall / (s.precision + s.recall);
  }
  return out;
}

inline double macro_f1_of(const std::array<ClassScores, kNumMergedClasses>& s) {
  return (s[0].f1 + s[1].f1 + s[2].f1) / 3.0;
}

// Per-sample macro over the classes present in this sample's gold or
// prediction; the zero-denominator convention would otherwise floor every
// DEF-free sample at 1/3.
inline double sample_macro_f1(const Confusion& cm) {
  auto scores = scores_from_confusion(cm);
  double sum = 0.0;
  int present = 0;
  for (const auto& s : scores) {
    if (s.gold_support == 0 && s.predicted_support == 0) continue;
    sum += s.f1;
    ++present;
  }
  return present == 0 ? 1.0 : sum / static_cast<double>(present);
}

}  // namespace detail

// Token-level evaluation with merged DEF/TERM tags over pooled confusion
// counts. `symbol_counts[i]` is the number of symbols in sample i's sentence
// and drives the per-bucket breakdown.
inline EvalReport evaluate(const std::vector<std::vector<TagLabel>>& gold,
                           const std::vector<std::vector<TagLabel>>& pred,
                           const std::vector<int>& symbol_counts = {},
                           const EvalOptions& options = EvalOptions()) {
  if (gold.size() != pred.size())
    throw Error(errc::kDimension,
                "evaluate: " + std::to_string(gold.size()) + " gold vs " +
                    std::to_string(pred.size()) + " predicted sequences");
  if (!symbol_counts.empty() && symbol_counts.size() != gold.size())
    throw Error(errc::kDimension,
                "evaluate: symbol_counts must be empty or parallel to samples");

  detail::Confusion pooled{};
  std::map<int, std::vector<double>> bucket_scores;
  double macro_p_sum = 0.0, macro_r_sum = 0.0, macro_f_sum = 0.0;
  EvalReport report;
  report.samples = static_cast<long>(gold.size());
  report.per_sample_average = options.per_sample_average;

  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].size() != pred[i].size())
      throw Error(errc::kDimension,
                  "evaluate: length mismatch at sample " + std::to_string(i));
    detail::Confusion local{};
    std::set<std::size_t> gold_def, pred_def;
    for (std::size_t t = 0; t < gold[i].size(); ++t) {
      MergedClass g = merge_tag(gold[i][t]);
      MergedClass p = merge_tag(pred[i][t]);
      local[static_cast<std::size_t>(g)][static_cast<std::size_t>(p)] += 1;
      if (g == MergedClass::Def) gold_def.insert(t);
      if (p == MergedClass::Def) pred_def.insert(t);
    }
    for (int a = 0; a < kNumMergedClasses; ++a)
      for (int b = 0; b < kNumMergedClasses; ++b)
        pooled[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] +=
            local[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)];

    if (!gold_def.empty() && pred_def.empty()) report.errors.false_negative += 1;
    else if (gold_def.empty() && !pred_def.empty()) report.errors.false_positive += 1;
    else if (!gold_def.empty() && gold_def != pred_def) report.errors.mislabeled += 1;

    if (!symbol_counts.empty())
      bucket_scores[symbol_counts[i]].push_back(detail::sample_macro_f1(local));
    if (options.per_sample_average) {
      auto s = detail::scores_from_confusion(local);
      double p_sum = 0.0, r_sum = 0.0;
      int present = 0;
      for (const auto& c : s) {
        if (c.gold_support == 0 && c.predicted_support == 0) continue;
        p_sum += c.precision;
        r_sum += c.recall;
        ++present;
      }
      macro_p_sum += present == 0 ? 1.0 : p_sum / present;
      macro_r_sum += present == 0 ? 1.0 : r_sum / present;
      macro_f_sum += detail::sample_macro_f1(local);
    }
  }

  report.per_class = detail::scores_from_confusion(pooled);
  if (options.per_sample_average && !gold.empty()) {
    report.macro_precision = macro_p_sum / static_cast<double>(gold.size());
    report.macro_recall = macro_r_sum / static_cast<double>(gold.size());
    report.macro_f1 = macro_f_sum / static_cast<double>(gold.size());
  } else {
    report.macro_precision = (report.per_class[0].precision +
                              report.per_class[1].precision +
                              report.per_class[2].precision) / 3.0;
    report.macro_recall = (report.per_class[0].recall +
                           report.per_class[1].recall +
                           report.per_class[2].recall) / 3.0;
    report.macro_f1 = detail::macro_f1_of(report.per_class);
  }

  // Sum per-bucket scores in sorted order so the report is invariant under
  // sample permutation bit for bit.
  for (auto& [bucket, scores] : bucket_scores) {
    std::sort(scores.begin(), scores.end());
    BucketStats bs;
    bs.n = static_cast<long>(scores.size());
    for (double s : scores) {
      bs.score_sum += s;
      bs.score_sum_sq += s * s;
    }
    bs.macro_f1 = bs.score_sum / static_cast<double>(bs.n);
    double variance =
        bs.score_sum_sq / static_cast<double>(bs.n) - bs.macro_f1 * bs.macro_f1;
    bs.stddev = std::sqrt(std::max(0.0, variance));
    report.buckets[bucket] = bs;
  }
  return report;
}

// Per-symbol-count table with aggregate means over the 1-5 and 6-10 ranges.
// Aggregates pool the per-sample scores of every sample whose symbol count
// falls in the range, with the population standard deviation.
struct BucketRow {
  int symbol_count = 0;
  long n = 0;
  double macro_f1 = 0.0;
  double stddev = 0.0;
};

struct RangeAggregate {
  int lo = 0, hi = 0;
  long n = 0;  // samples in range
  double mean = 0.0;
  double stddev = 0.0;
};

struct BucketTable {
  std::vector<BucketRow> rows;
  RangeAggregate range_1_5;
  RangeAggregate range_6_10;
};

inline BucketTable bucket_report(const EvalReport& report, int max_symbols) {
  BucketTable table;
  for (int c = 0; c <= max_symbols; ++c) {
    BucketRow row;
    row.symbol_count = c;
    auto it = report.buckets.find(c);
    if (it != report.buckets.end()) {
      row.n = it->second.n;
      row.macro_f1 = it->second.macro_f1;
      row.stddev = it->second.stddev;
    }
    table.rows.push_back(row);
  }
  auto aggregate = [&](int lo, int hi) {
    RangeAggregate agg;
    agg.lo = lo;
    agg.hi = hi;
    double sum = 0.0, sum_sq = 0.0;
    for (int c = lo; c <= hi; ++c) {
      auto it = report.buckets.find(c);
      if (it == report.buckets.end()) continue;
      agg.n += it->second.n;
      sum += it->second.score_sum;
      sum_sq += it->second.score_sum_sq;
    }
    if (agg.n > 0) {
      agg.mean = sum / static_cast<double>(agg.n);
      agg.stddev = std::sqrt(
          std::max(0.0, sum_sq / static_cast<double>(agg.n) -
                            agg.mean * agg.mean));
    }
    return agg;
  };
  table.range_1_5 = aggregate(1, 5);
  table.range_6_10 = aggregate(6, 10);
  return table;
}

// ---------------------------------------------------------------------------
// Inter-annotator agreement.
// ---------------------------------------------------------------------------

// Exact-match scores reported in both directions (each annotator as the
// reference in turn) plus their mean. F1 is direction-independent.
struct IaaScores {
  double precision_a_ref = 0.0;  // annotator A as reference, scoring B
  double recall_a_ref = 0.0;
  double precision_b_ref = 0.0;
  double recall_b_ref = 0.0;
  double precision_mean = 0.0;
  double recall_mean = 0.0;
  double f1 = 0.0;
  long count_a = 0;
  long count_b = 0;
  long matches = 0;
};

struct IaaReport {
  IaaScores term;
  IaaScores definition;
  // Mean token-overlap percentage of matched-by-symbol definition pairs,
  // with each annotator's span as the reference in turn.
  double overlap_a_ref = 0.0;
  double overlap_b_ref = 0.0;
  double overlap_mean = 0.0;
  long matched_definition_pairs = 0;
  long exact_definition_pairs = 0;
  long contained = 0;
  long overlapping_no_containment = 0;
  long disjoint = 0;
  double mean_overlapping_words = 0.0;
};

namespace detail {

inline IaaScores exact_match_scores(long count_a, long count_b, long matches) {
  IaaScores s;
  s.count_a = count_a;
  s.count_b = count_b;
  s.matches = matches;
  s.precision_a_ref = count_b == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(count_b);
  s.recall_a_ref = count_a == 0 ? 0.0 : static_cast<double>(matches) / static_cast<double>(count_a);
  s.precision_b_ref = s.recall_a_ref;
  s.recall_b_ref = s.precision_a_ref;
  s.precision_mean = (s.precision_a_ref + s.precision_b_ref) / 2.0;
  s.recall_mean = (s.recall_a_ref + s.recall_b_ref) / 2.0;
  long denom = count_a + count_b;
  s.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(matches) / static_cast<double>(denom);
  return s;
}

template <typename Key>
inline long multiset_intersection(const std::map<Key, long>& a,
                                  const std::map<Key, long>& b) {
  long count = 0;
  for (const auto& [key, na] : a) {
    auto it = b.find(key);
    if (it != b.end()) count += std::min(na, it->second);
  }
  return count;
}

}  // namespace detail

// Agreement between two annotation passes over the same sentences. The two
// corpora must cover the same sentence ids with identical tokenization.
inline IaaReport compute_iaa(const std::vector<AnnotatedSentence>& annotations_a,
                             const std::vector<AnnotatedSentence>& annotations_b) {
  std::map<std::string, const AnnotatedSentence*> by_id_b;
  for (const auto& s : annotations_b) by_id_b[s.id] = &s;
  if (annotations_a.size() != annotations_b.size() ||
      by_id_b.size() != annotations_b.size())
    throw Error(errc::kMismatch,
                "annotator corpora must cover the same sentence ids");

  long term_a = 0, term_b = 0, term_match = 0;
  long def_a = 0, def_b = 0, def_match = 0;
  double overlap_a_sum = 0.0, overlap_b_sum = 0.0;
  long pairs = 0, exact_pairs = 0;
  long contained = 0, overlapping = 0, disjoint = 0;
  long overlap_word_sum = 0;

  for (const auto& sa : annotations_a) {
    auto it = by_id_b.find(sa.id);
    if (it == by_id_b.end())
      throw Error(errc::kMismatch,
                  "sentence '" + sa.id + "' missing from annotator B");
    const AnnotatedSentence& sb = *it->second;
    if (sa.tokens.size() != sb.tokens.size())
      throw Error(errc::kMismatch,
                  "sentence '" + sa.id + "': tokenization mismatch");
    for (std::size_t t = 0; t < sa.tokens.size(); ++t)
      if (sa.tokens[t].text != sb.tokens[t].text)
        throw Error(errc::kMismatch,
                    "sentence '" + sa.id + "': tokenization mismatch at " +
                        std::to_string(t));

    // Exact term matches on covered token indices.
    std::map<std::vector<int>, long> occ_a, occ_b;
    for (const auto& sym : sa.symbols) occ_a[sym.token_indices] += 1;
    for (const auto& sym : sb.symbols) occ_b[sym.token_indices] += 1;
    term_a += static_cast<long>(sa.symbols.size());
    term_b += static_cast<long>(sb.symbols.size());
    term_match += detail::multiset_intersection(occ_a, occ_b);

    // Exact definition matches on fragment sets.
    std::map<std::vector<std::pair<int, int>>, long> defs_a, defs_b;
    for (const auto& l : sa.links) defs_a[l.definition.fragments] += 1;
    for (const auto& l : sb.links) defs_b[l.definition.fragments] += 1;
    def_a += static_cast<long>(sa.links.size());
    def_b += static_cast<long>(sb.links.size());
    def_match += detail::multiset_intersection(defs_a, defs_b);

    // Definition pairs matched by symbol: the same occurrence (identical
    // token indices) linked by both annotators.
    std::map<std::vector<int>, const SymbolDefLink*> links_b_by_occ;
    for (const auto& sym : sb.symbols) {
      const SymbolDefLink* l = sb.find_link(sym.id);
      if (l != nullptr) links_b_by_occ[sym.token_indices] = l;
    }
    for (const auto& sym : sa.symbols) {
      const SymbolDefLink* la = sa.find_link(sym.id);
      if (la == nullptr) continue;
      auto itb = links_b_by_occ.find(sym.token_indices);
      if (itb == links_b_by_occ.end()) continue;
      const SymbolDefLink* lb = itb->second;
      pairs += 1;
      std::vector<int> ta = la->definition.token_set();
      std::vector<int> tb = lb->definition.token_set();
      std::vector<int> inter;
      std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                            std::back_inserter(inter));
      overlap_a_sum += static_cast<double>(inter.size()) / static_cast<double>(ta.size());
      overlap_b_sum += static_cast<double>(inter.size()) / static_cast<double>(tb.size());
      if (ta == tb) {
        exact_pairs += 1;
      } else if (inter.size() == ta.size() || inter.size() == tb.size()) {
        contained += 1;
      } else if (!inter.empty()) {
        overlapping += 1;
        overlap_word_sum += static_cast<long>(inter.size());
      } else {
        disjoint += 1;
      }
    }
  }

  IaaReport report;
  report.term = detail::exact_match_scores(term_a, term_b, term_match);
  report.definition = detail::exact_match_scores(def_a, def_b, def_match);
  report.matched_definition_pairs = pairs;
  report.exact_definition_pairs = exact_pairs;
  report.contained = contained;
  report.overlapping_no_containment = overlapping;
  report.disjoint = disjoint;
  if (pairs > 0) {
    report.overlap_a_ref = overlap_a_sum / static_cast<double>(pairs);
    report.overlap_b_ref = overlap_b_sum / static_cast<double>(pairs);
    report.overlap_mean = (report.overlap_a_ref + report.overlap_b_ref) / 2.0;
  }
  if (overlapping > 0)
    report.mean_overlapping_words =
        static_cast<double>(overlap_word_sum) / static_cast<double>(overlapping);
  return report;
}

}  // namespace symdef

#endif  // SYMDEF_EVAL_HPP
