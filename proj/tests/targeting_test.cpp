#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "symdef/targeting.hpp"
#include "test_support.hpp"

using namespace symdef;

namespace {

AnnotatedSentence tokens_only(const std::vector<std::string>& words,
                              const std::string& id = "t") {
  AnnotatedSentence s;
  s.id = id;
  s.paper_id = "p";
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
  return s;
}

// The three-symbol coordination sentence with split, overlapping
// definitions: A -> "within-layer adjacency" + "matrix",
// C -> "between-layer adjacency" + "matrix", v -> "community label matrix".
AnnotatedSentence coordination_sentence() {
  AnnotatedSentence s = tokens_only(
      {"A", ",", "C", "and", "v", "denote", "the", "within-layer",
       "adjacency", ",", "between-layer", "adjacency", "and", "the",
       "community", "label", "matrix", ",", "respectively", "."},
      "coord");
  s.symbols = {{"S0", {0}}, {"S1", {2}}, {"S2", {4}}};
  s.links = {{"S0", DefinitionSpan{{{7, 8}, {16, 16}}}},
             {"S1", DefinitionSpan{{{10, 11}, {16, 16}}}},
             {"S2", DefinitionSpan{{{14, 16}}}}};
  validate(s);
  return s;
}

std::vector<TagLabel> tags(const std::vector<std::string>& names) {
  std::vector<TagLabel> out;
  for (const auto& n : names) out.push_back(tag_from_string(n));
  return out;
}

}  // namespace

TEST_CASE("mask_symbols") {
  SECTION("single-token symbol") {
    AnnotatedSentence s = tokens_only({"w", "is", "a", "word"});
    s.symbols = {{"S0", {0}}};
    validate(s);
    MaskResult m = mask_symbols(s);
    REQUIRE(m.tokens == std::vector<std::string>{"SYMBOL", "is", "a", "word"});
    REQUIRE(m.symbol_positions == std::vector<int>{0});
  }
  SECTION("no symbols copies tokens verbatim") {
    AnnotatedSentence s = tokens_only({"just", "words"});
    validate(s);
    MaskResult m = mask_symbols(s);
    REQUIRE(m.tokens == std::vector<std::string>{"just", "words"});
    REQUIRE(m.symbol_positions.empty());
    REQUIRE(m.origin_map ==
            std::vector<std::pair<int, int>>{{0, 0}, {1, 1}});
  }
  SECTION("multi-token symbol collapses and the origin map stays total") {
    AnnotatedSentence s = tokens_only({"the", "x", "^", "t", "value"});
    s.symbols = {{"S0", {1, 2, 3}}};
    validate(s);
    MaskResult m = mask_symbols(s);
    REQUIRE(m.tokens == std::vector<std::string>{"the", "SYMBOL", "value"});
    REQUIRE(m.origin_map ==
            std::vector<std::pair<int, int>>{{0, 0}, {1, 3}, {4, 4}});
  }
  SECTION("masking preserves non-symbol token count on random sentences") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 200; ++i) {
      AnnotatedSentence s = test::random_sentence(rng);
      MaskResult m = mask_symbols(s);
      long collapsed = 0;
      for (const auto& sym : s.symbols)
        collapsed += static_cast<long>(sym.token_indices.size()) - 1;
      REQUIRE(static_cast<long>(m.tokens.size()) ==
              static_cast<long>(s.tokens.size()) - collapsed);
      // The inverse of the origin map covers every original index.
      long covered = 0;
      for (const auto& [a, b] : m.origin_map) covered += b - a + 1;
      REQUIRE(covered == static_cast<long>(s.tokens.size()));
    }
  }
}

TEST_CASE("expand_targets") {
  SECTION("two-symbol sentence yields two samples in token order") {
    AnnotatedSentence s = tokens_only(
        {"corners", "are", "p1", "and", "p2", "respectively", "."});
    s.symbols = {{"S1", {4}}, {"S0", {2}}};  // shuffled on purpose
    validate(s);
    auto samples = expand_targets(s);
    REQUIRE(samples.size() == 2);
    REQUIRE(samples[0].target_position == 2);
    REQUIRE(samples[1].target_position == 4);
    REQUIRE(samples[0].symbol_positions == std::vector<int>{2, 4});
  }
  SECTION("three-symbol coordination sentence yields three samples") {
    auto samples = expand_targets(coordination_sentence());
    REQUIRE(samples.size() == 3);
    for (int k = 0; k < 3; ++k) REQUIRE(samples[k].sample_index == k);
  }
  SECTION("zero-symbol sentence yields one target-free all-O sample") {
    AnnotatedSentence s = tokens_only({"no", "symbols", "here"});
    validate(s);
    auto samples = expand_targets(s);
    REQUIRE(samples.size() == 1);
    REQUIRE_FALSE(samples[0].target_position.has_value());
    REQUIRE(samples[0].has_definition == false);
    REQUIRE(*samples[0].gold_labels ==
            std::vector<TagLabel>(3, TagLabel::O));
  }
  SECTION("sample count is max(1, symbols) on random sentences") {
    std::mt19937_64 rng(13);
    for (int i = 0; i < 200; ++i) {
      AnnotatedSentence s = test::random_sentence(rng);
      REQUIRE(expand_targets(s).size() ==
              std::max<std::size_t>(1, s.symbols.size()));
    }
  }
}

TEST_CASE("project_gold") {
  SECTION("discontinuous definition restarts B-DEF per fragment") {
    auto samples = expand_targets(coordination_sentence());
    // Target A: fragments "within-layer adjacency" and "matrix".
    REQUIRE(*samples[0].gold_labels ==
            tags({"B-TERM", "O", "O", "O", "O", "O", "O", "B-DEF", "I-DEF",
                  "O", "O", "O", "O", "O", "O", "O", "B-DEF", "O", "O", "O"}));
    // Target v: one contiguous fragment "community label matrix".
    REQUIRE(*samples[2].gold_labels ==
            tags({"O", "O", "O", "O", "B-TERM", "O", "O", "O", "O", "O", "O",
                  "O", "O", "O", "B-DEF", "I-DEF", "I-DEF", "O", "O", "O"}));
    REQUIRE(samples[0].has_definition);
  }
  SECTION("target with no link keeps only B-TERM") {
    AnnotatedSentence s = tokens_only({"x", "appears", "here"});
    s.symbols = {{"S0", {0}}};
    validate(s);
    auto samples = expand_targets(s);
    REQUIRE(*samples[0].gold_labels == tags({"B-TERM", "O", "O"}));
    REQUIRE_FALSE(samples[0].has_definition);
  }
  SECTION("nested case: non-target symbol inside the target's definition") {
    // "h0 is the input x": def(h0) = "input x" (covers symbol x),
    // def(x) = "input". Hand projection oracle:
    //   target h0 -> [B-TERM, O, O, B-DEF, I-DEF]
    //   target x  -> [O, O, O, B-DEF, B-TERM]
    AnnotatedSentence s = tokens_only({"h0", "is", "the", "input", "x"}, "fig2");
    s.symbols = {{"S0", {0}}, {"S1", {4}}};
    s.links = {{"S0", DefinitionSpan{{{3, 4}}}},
               {"S1", DefinitionSpan{{{3, 3}}}}};
    validate(s);
    auto samples = expand_targets(s);
    REQUIRE(*samples[0].gold_labels ==
            tags({"B-TERM", "O", "O", "B-DEF", "I-DEF"}));
    REQUIRE(*samples[1].gold_labels ==
            tags({"O", "O", "O", "B-DEF", "B-TERM"}));
  }
  SECTION("fragment over the target itself: term wins, run restarts") {
    AnnotatedSentence s = tokens_only({"a", "x", "b"});
    s.symbols = {{"S0", {1}}};
    s.links = {{"S0", DefinitionSpan{{{0, 2}}}}};
    validate(s);
    auto samples = expand_targets(s);
    REQUIRE(*samples[0].gold_labels == tags({"B-DEF", "B-TERM", "B-DEF"}));
  }
  SECTION("gold properties on random sentences") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 300; ++i) {
      AnnotatedSentence s = test::random_sentence(rng);
      for (const auto& sample : expand_targets(s)) {
        const auto& labels = *sample.gold_labels;
        REQUIRE(bio_valid(labels));
        long bterm = 0;
        for (TagLabel l : labels) {
          REQUIRE(l != TagLabel::ITerm);  // symbols are single masked tokens
          if (l == TagLabel::BTerm) ++bterm;
        }
        REQUIRE(bterm == (sample.target_position.has_value() ? 1 : 0));
      }
    }
  }
}

TEST_CASE("merge_predictions") {
  SECTION("gold predictions reproduce the three coordination pairs") {
    AnnotatedSentence s = coordination_sentence();
    auto samples = expand_targets(s);
    std::vector<std::vector<TagLabel>> predictions;
    for (const auto& sample : samples) predictions.push_back(*sample.gold_labels);
    auto pairs = merge_predictions(samples, predictions, s);
    REQUIRE(pairs.size() == 3);
    REQUIRE(pairs[0].first == "S0");
    REQUIRE(pairs[0].second.fragments ==
            std::vector<std::pair<int, int>>{{7, 8}, {16, 16}});
    REQUIRE(pairs[1].first == "S1");
    REQUIRE(pairs[2].first == "S2");
    REQUIRE(pairs[2].second.fragments ==
            std::vector<std::pair<int, int>>{{14, 16}});
  }
  SECTION("all-O predictions merge to nothing") {
    AnnotatedSentence s = coordination_sentence();
    auto samples = expand_targets(s);
    std::vector<std::vector<TagLabel>> predictions(
        samples.size(), std::vector<TagLabel>(samples[0].tokens.size(),
                                              TagLabel::O));
    REQUIRE(merge_predictions(samples, predictions, s).empty());
  }
  SECTION("length mismatch and BIO-invalid predictions are errors") {
    AnnotatedSentence s = coordination_sentence();
    auto samples = expand_targets(s);
    std::vector<std::vector<TagLabel>> predictions;
    for (const auto& sample : samples) predictions.push_back(*sample.gold_labels);
    SECTION("count mismatch") {
      predictions.pop_back();
      REQUIRE_THROWS_AS(merge_predictions(samples, predictions, s), Error);
    }
    SECTION("invalid BIO") {
      predictions[0][0] = TagLabel::IDef;
      REQUIRE_THROWS_AS(merge_predictions(samples, predictions, s), Error);
    }
  }
}

TEST_CASE("merge after project reconstructs the link set exactly") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 500; ++i) {
    AnnotatedSentence s = test::random_sentence(rng);
    auto samples = expand_targets(s);
    std::vector<std::vector<TagLabel>> predictions;
    for (const auto& sample : samples) predictions.push_back(*sample.gold_labels);
    auto pairs = merge_predictions(samples, predictions, s);

    std::map<std::string, std::vector<std::pair<int, int>>> expected;
    for (const auto& link : s.links)
      expected[link.symbol_id] = link.definition.fragments;
    std::map<std::string, std::vector<std::pair<int, int>>> got;
    for (const auto& [id, span] : pairs) got[id] = span.fragments;
    REQUIRE(got == expected);
  }
}

TEST_CASE("render_with_markers emits the literal target form") {
  AnnotatedSentence s = tokens_only({"x", "and", "y", "here"});
  s.symbols = {{"S0", {0}}, {"S1", {2}}};
  validate(s);
  auto samples = expand_targets(s);
  REQUIRE(render_with_markers(samples[0]) ==
          std::vector<std::string>{"</s>SYMBOL</s>", "and", "SYMBOL", "here"});
  REQUIRE(render_with_markers(samples[1]) ==
          std::vector<std::string>{"SYMBOL", "and", "</s>SYMBOL</s>", "here"});
}
