#ifndef SYMDEF_SPLITS_HPP
#define SYMDEF_SPLITS_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "symdef/corpus.hpp"
#include "symdef/error.hpp"

namespace symdef {

struct SplitResult {
  std::vector<AnnotatedSentence> train;
  std::vector<AnnotatedSentence> dev;
  std::vector<AnnotatedSentence> test;
};

// Paper-disjoint split: whole papers travel together, so test sentences are
// never members of train papers. Papers are shuffled with the seed and
// assigned greedily until each split reaches its sentence-count target;
// within each split, corpus order is preserved.
inline SplitResult split_by_paper(const std::vector<AnnotatedSentence>& corpus,
                                  double train_frac, double dev_frac,
                                  std::uint64_t seed) {
  if (train_frac < 0 || dev_frac < 0 || train_frac + dev_frac > 1.0)
    throw Error(errc::kConfig, "split fractions must be >= 0 and sum to <= 1");
  std::vector<std::string> papers;
  std::map<std::string, long> paper_sentences;
  for (const auto& s : corpus) {
    if (!paper_sentences.count(s.paper_id)) papers.push_back(s.paper_id);
    paper_sentences[s.paper_id] += 1;
  }
  std::mt19937_64 rng(seed);
  std::shuffle(papers.begin(), papers.end(), rng);

  const double total = static_cast<double>(corpus.size());
  const long train_target = static_cast<long>(train_frac * total + 0.5);
  const long dev_target = static_cast<long>(dev_frac * total + 0.5);
  std::map<std::string, int> assignment;  // 0 train, 1 dev, 2 test
  long train_count = 0, dev_count = 0;
  for (const auto& p : papers) {
    if (train_count < train_target) {
      assignment[p] = 0;
      train_count += paper_sentences[p];
    } else if (dev_count < dev_target) {
      assignment[p] = 1;
      dev_count += paper_sentences[p];
    } else {
      assignment[p] = 2;
    }
  }
  SplitResult out;
  for (const auto& s : corpus) {
    switch (assignment[s.paper_id]) {
      case 0: out.train.push_back(s); break;
      case 1: out.dev.push_back(s); break;
      default: out.test.push_back(s); break;
    }
  }
  return out;
}

// Sentence-level split for ablations: seeded shuffle, then slicing.
inline SplitResult split_by_sentence(
    const std::vector<AnnotatedSentence>& corpus, double train_frac,
    double dev_frac, std::uint64_t seed) {
  if (train_frac < 0 || dev_frac < 0 || train_frac + dev_frac > 1.0)
    throw Error(errc::kConfig, "split fractions must be >= 0 and sum to <= 1");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::size_t n = corpus.size();
  const std::size_t n_train = static_cast<std::size_t>(
      train_frac * static_cast<double>(n) + 0.5);
  const std::size_t n_dev = static_cast<std::size_t>(
      dev_frac * static_cast<double>(n) + 0.5);
  SplitResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const AnnotatedSentence& s = corpus[order[i]];
    if (i < n_train) out.train.push_back(s);
    else if (i < n_train + n_dev) out.dev.push_back(s);
    else out.test.push_back(s);
  }
  return out;
}

}  // namespace symdef

#endif  // SYMDEF_SPLITS_HPP
