#ifndef SYMDEF_SYNTHETIC_HPP
#define SYMDEF_SYNTHETIC_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "symdef/corpus.hpp"

namespace symdef {

// Deterministic synthetic corpus for desk-scale end-to-end checks. Sentences
// follow coordination templates (appositive conjunct chains, trailing
// "denotes" definitions, split definitions, adjacent-definition
// "respectively" lists, plus negatives and symbol-free sentences). Every
// family keeps each definition word inside a distance bucket that the sparse
// encoder emits and that no other family reuses for a different label, so
// the gold labeling is learnable from the features by construction. Family
// vocabularies are disjoint for the same reason.
class SyntheticCorpus {
 public:
  explicit SyntheticCorpus(std::uint64_t seed) : rng_(seed) {}

  std::vector<AnnotatedSentence> generate(int sentences) {
    std::vector<AnnotatedSentence> out;
    out.reserve(static_cast<std::size_t>(sentences));
    for (int i = 0; i < sentences; ++i) out.push_back(next_sentence());
    return out;
  }

  AnnotatedSentence next_sentence() {
    Builder b(*this);
    const double u = real();
    if (u < 0.30) appositive_chain(b);
    else if (u < 0.50) trailing_definition(b);
    else if (u < 0.65) split_definition(b);
    else if (u < 0.85) respectively_list(b);
    else if (u < 0.95) negative_sentence(b);
    else symbol_free(b);
    return b.finish(next_id());
  }

 private:
  // Family vocabularies. Disjoint by construction; the shared structural
  // words ("the", joiners, verbs, fillers) are never definition content.
  static const std::vector<std::string>& appositive_vocab() {
    static const std::vector<std::string> v = {
        "stochastic", "gradient",  "estimator", "activation", "kernel",
        "embedding",  "projection", "latent",    "attention",  "encoder"};
    return v;
  }
  static const std::vector<std::string>& trailing_vocab() {
    static const std::vector<std::string> v = {
        "vocabulary", "dimension", "threshold", "penalty",    "budget",
        "horizon",    "capacity",  "bandwidth", "margin",     "temperature"};
    return v;
  }
  static const std::vector<std::string>& respectively_vocab() {
    static const std::vector<std::string> v = {
        "precision", "recall",  "accuracy", "coverage",
        "density",   "entropy", "variance", "sparsity"};
    return v;
  }
  static const std::vector<std::string>& split_vocab() {
    static const std::vector<std::string> v = {
        "function", "operator", "mapping", "routine", "transform"};
    return v;
  }
  static const std::vector<std::string>& filler_vocab() {
    static const std::vector<std::string> v = {
        "we",     "use",   "consider", "here",  "system", "values",
        "during", "stage", "process",  "setup", "records"};
    return v;
  }
  static const std::vector<std::vector<std::string>>& symbol_forms() {
    static const std::vector<std::vector<std::string>> v = {
        {"x"},           {"y"},           {"A"},       {"B"},
        {"alpha"},       {"beta"},        {"W"},       {"theta"},
        {"x", "_", "i"}, {"W", "^", "t"}, {"h", "^", "0"}};
    return v;
  }

  struct Builder {
    explicit Builder(SyntheticCorpus& owner) : gen(owner) {}
    SyntheticCorpus& gen;
    std::vector<std::string> words;
    std::vector<SymbolOccurrence> symbols;
    std::vector<SymbolDefLink> links;

    int push(const std::string& w) {
      words.push_back(w);
      return static_cast<int>(words.size()) - 1;
    }

    // Appends one symbol occurrence (possibly multi-token surface form).
    std::string push_symbol() {
      const auto& form =
          symbol_forms()[gen.index(symbol_forms().size())];
      SymbolOccurrence occ;
      occ.id = "S" + std::to_string(symbols.size());
      for (const auto& piece : form) occ.token_indices.push_back(push(piece));
      symbols.push_back(occ);
      return occ.id;
    }

    void link(const std::string& symbol_id,
              std::vector<std::pair<int, int>> fragments) {
      SymbolDefLink l;
      l.symbol_id = symbol_id;
      l.definition.fragments = std::move(fragments);
      links.push_back(std::move(l));
    }

    AnnotatedSentence finish(std::string id) {
      AnnotatedSentence s;
      s.id = std::move(id);
      s.paper_id = "paper" + std::to_string(gen.counter_ % 12);
      int offset = 0;
      for (const auto& w : words) {
        Token t;
        t.text = w;
        t.char_start = offset;
        t.char_end = offset + static_cast<int>(w.size());
        offset = t.char_end + 1;
        if (!s.text.empty()) s.text += " ";
        s.text += w;
        s.tokens.push_back(std::move(t));
      }
      s.symbols = std::move(symbols);
      s.links = std::move(links);
      validate(s);
      return s;
    }
  };

  // "the <def> SYMBOL , and moreover the <def> SYMBOL ... hold ."
  // Definitions sit at masked distance -1/-2 of their own symbol; the
  // three-token joiner pushes every other conjunct's words to distance 6+.
  void appositive_chain(Builder& b) {
    const int conjuncts = 1 + static_cast<int>(index(3));
    for (int c = 0; c < conjuncts; ++c) {
      if (c > 0) {
        b.push(",");
        b.push("and");
        b.push("moreover");
      }
      b.push("the");
      const int deflen = 1 + static_cast<int>(index(2));
      int first = -1, last = -1;
      for (int d = 0; d < deflen; ++d) {
        int at = b.push(pick(appositive_vocab()));
        if (first < 0) first = at;
        last = at;
      }
      std::string id = b.push_symbol();
      b.link(id, {{first, last}});
    }
    b.push("hold");
    b.push(".");
  }

  // "SYMBOL denotes the <def> ." with the definition at distance +3..+5.
  void trailing_definition(Builder& b) {
    if (chance(0.3)) {
      b.push(pick(filler_vocab()));
      b.push(",");
    }
    std::string id = b.push_symbol();
    b.push("denotes");
    b.push("the");
    const int deflen = 1 + static_cast<int>(index(3));
    int first = -1, last = -1;
    for (int d = 0; d < deflen; ++d) {
      int at = b.push(pick(trailing_vocab()));
      if (first < 0) first = at;
      last = at;
    }
    b.link(id, {{first, last}});
    b.push(".");
  }

  // "the <pre> SYMBOL computes the <post> ." : a discontinuous definition
  // with fragments on both sides of the symbol.
  void split_definition(Builder& b) {
    b.push("the");
    int pre = b.push(pick(split_vocab()));
    std::string id = b.push_symbol();
    b.push("computes");
    b.push("the");
    const int deflen = 1 + static_cast<int>(index(2));
    int first = -1, last = -1;
    for (int d = 0; d < deflen; ++d) {
      int at = b.push(pick(trailing_vocab()));
      if (first < 0) first = at;
      last = at;
    }
    b.link(id, {{pre, pre}, {first, last}});
    b.push(".");
  }

  // "SYMBOL <def> , SYMBOL <def> and SYMBOL <def> , respectively ." with
  // each single-word definition immediately after its own symbol.
  void respectively_list(Builder& b) {
    const int conjuncts = 2 + static_cast<int>(index(3));
    for (int c = 0; c < conjuncts; ++c) {
      if (c > 0) b.push(c + 1 == conjuncts ? "and" : ",");
      std::string id = b.push_symbol();
      int at = b.push(pick(respectively_vocab()));
      b.link(id, {{at, at}});
    }
    b.push(",");
    b.push("respectively");
    b.push(".");
  }

  // A symbol with no definition anywhere near it.
  void negative_sentence(Builder& b) {
    b.push("we");
    b.push("use");
    b.push_symbol();
    b.push("during");
    b.push("the");
    b.push(pick(filler_vocab()));
    b.push(".");
  }

  void symbol_free(Builder& b) {
    b.push("the");
    b.push(pick(filler_vocab()));
    b.push(pick(filler_vocab()));
    b.push("here");
    b.push(".");
  }

  std::string next_id() { return "synth:" + std::to_string(counter_++); }

  double real() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool chance(double p) { return real() < p; }
  std::size_t index(std::size_t n) {
    return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
  }
  const std::string& pick(const std::vector<std::string>& v) {
    return v[index(v.size())];
  }

  std::mt19937_64 rng_;
  long counter_ = 0;
};

inline std::vector<AnnotatedSentence> generate_synthetic_corpus(
    int sentences, std::uint64_t seed) {
  return SyntheticCorpus(seed).generate(sentences);
}

}  // namespace symdef

#endif  // SYMDEF_SYNTHETIC_HPP
