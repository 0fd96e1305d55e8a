#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>

#include "symdef/corpus.hpp"
#include "symdef/corpus_io.hpp"
#include "symdef/corpus_stats.hpp"
#include "test_support.hpp"

using namespace symdef;

namespace {

std::string scratch_path(const std::string& name) {
  return std::string(SYMDEF_TEST_SCRATCH) + "/" + name;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << content;
}

AnnotatedSentence simple_sentence() {
  // "SYMBOL is a vector" with the symbol defined as "vector".
  AnnotatedSentence s;
  s.id = "t0";
  s.paper_id = "p0";
  s.text = "x is a vector";
  s.tokens = {{"x", 0, 1}, {"is", 2, 4}, {"a", 5, 6}, {"vector", 7, 13}};
  s.symbols = {{"S0", {0}}};
  s.links = {{"S0", DefinitionSpan{{{3, 3}}}}};
  validate(s);
  return s;
}

}  // namespace

TEST_CASE("default tokenizer splits whitespace and punctuation") {
  auto tokens = default_tokenize("f(x) is a function.");
  std::vector<std::string> texts;
  for (const auto& t : tokens) texts.push_back(t.text);
  REQUIRE(texts == std::vector<std::string>{"f", "(", "x", ")", "is", "a",
                                            "function", "."});
  REQUIRE(tokens[0].char_start == 0);
  REQUIRE(tokens[0].char_end == 1);
  REQUIRE(tokens.back().char_start == 18);
}

TEST_CASE("default tokenizer keeps multi-byte characters whole") {
  auto tokens = default_tokenize("\xCE\xB1 vector");
  REQUIRE(tokens.size() == 2);
  REQUIRE(tokens[0].text == "\xCE\xB1");
  REQUIRE(tokens[0].char_end == 2);
}

TEST_CASE("validate rejects broken sentences") {
  AnnotatedSentence s = simple_sentence();
  SECTION("unknown link target names the symbol") {
    s.links[0].symbol_id = "S9";
    REQUIRE_THROWS_WITH(validate(s), Catch::Matchers::ContainsSubstring("S9"));
  }
  SECTION("shared token between symbols") {
    s.symbols.push_back({"S1", {0}});
    REQUIRE_THROWS_AS(validate(s), Error);
  }
  SECTION("non-contiguous symbol") {
    s.symbols[0].token_indices = {0, 2};
    REQUIRE_THROWS_AS(validate(s), Error);
  }
  SECTION("overlapping fragments in one span") {
    s.links[0].definition.fragments = {{1, 3}, {2, 3}};
    REQUIRE_THROWS_AS(validate(s), Error);
  }
}

TEST_CASE("load_jsonl handles degenerate and bad input") {
  SECTION("sentence with no symbols") {
    write_file(scratch_path("empty_syms.jsonl"),
               R"({"id":"a","paper_id":"p","text":"w0 w1",)"
               R"("tokens":[{"text":"w0","start":0,"end":2},{"text":"w1","start":3,"end":5}],)"
               R"("symbols":[],"links":[]})"
               "\n");
    auto corpus = load_jsonl(scratch_path("empty_syms.jsonl"));
    REQUIRE(corpus.size() == 1);
    REQUIRE(corpus[0].symbols.empty());
    REQUIRE(corpus[0].links.empty());
  }
  SECTION("malformed JSON reports the line number") {
    write_file(scratch_path("bad.jsonl"), "{\"id\": \"a\"\nnot json\n");
    REQUIRE_THROWS_WITH(load_jsonl(scratch_path("bad.jsonl")),
                        Catch::Matchers::ContainsSubstring(":1"));
  }
  SECTION("unknown symbol id in link names the id") {
    write_file(scratch_path("badlink.jsonl"),
               R"({"id":"a","paper_id":"p","text":"w0",)"
               R"("tokens":[{"text":"w0","start":0,"end":2}],)"
               R"("symbols":[],"links":[{"symbol_id":"S9","fragments":[[0,0]]}]})"
               "\n");
    REQUIRE_THROWS_WITH(load_jsonl(scratch_path("badlink.jsonl")),
                        Catch::Matchers::ContainsSubstring("S9"));
  }
}

TEST_CASE("jsonl round-trip is the identity on randomized corpora") {
  std::mt19937_64 rng(7);
  test::SentenceGenOptions options;
  options.with_syntax = true;
  options.unicode_words = true;
  std::vector<AnnotatedSentence> corpus;
  for (int i = 0; i < 120; ++i)
    corpus.push_back(
        test::random_sentence(rng, options, "r" + std::to_string(i)));
  const std::string path = scratch_path("roundtrip.jsonl");
  save_jsonl(path, corpus);
  auto loaded = load_jsonl(path);
  REQUIRE(loaded == corpus);

  // Serialization is idempotent byte for byte.
  const std::string path2 = scratch_path("roundtrip2.jsonl");
  save_jsonl(path2, loaded);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)),
                 std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)),
                 std::istreambuf_iterator<char>());
  REQUIRE(sa == sb);
}

TEST_CASE("brat ingestion") {
  SECTION("entities, discontinuous spans, and relations") {
    write_file(scratch_path("doc.txt"), "f is the map of g\nnext line here\n");
    // "map" = tokens[3] chars 9..12; discontinuous definition "is ... of".
    write_file(scratch_path("doc.ann"),
               "T1\tTerm 0 1\tf\n"
               "T2\tDefinition 9 12;13 15\tmap of\n"
               "R1\tDEFINITION-OF Arg1:T1 Arg2:T2\n");
    auto corpus = load_brat(scratch_path("doc.txt"), scratch_path("doc.ann"));
    REQUIRE(corpus.size() == 2);
    REQUIRE(corpus[0].symbols.size() == 1);
    REQUIRE(corpus[0].symbols[0].token_indices == std::vector<int>{0});
    REQUIRE(corpus[0].links.size() == 1);
    REQUIRE(corpus[0].links[0].definition.fragments ==
            std::vector<std::pair<int, int>>{{3, 3}, {4, 4}});
    REQUIRE(corpus[1].symbols.empty());
  }
  SECTION("offset off a token boundary is a hard error") {
    write_file(scratch_path("bad.txt"), "f is a function\n");
    write_file(scratch_path("bad.ann"), "T1\tTerm 0 3\tf i\n");
    REQUIRE_THROWS_WITH(
        load_brat(scratch_path("bad.txt"), scratch_path("bad.ann")),
        Catch::Matchers::ContainsSubstring("3"));
  }
  SECTION("multiple relations for one symbol merge into one span") {
    write_file(scratch_path("multi.txt"), "f the output function here\n");
    write_file(scratch_path("multi.ann"),
               "T1\tTerm 0 1\tf\n"
               "T2\tDefinition 6 12\toutput\n"
               "T3\tDefinition 13 21\tfunction\n"
               "R1\tDEFINITION-OF Arg1:T1 Arg2:T2\n"
               "R2\tDEFINITION-OF Arg1:T1 Arg2:T3\n");
    auto corpus = load_brat(scratch_path("multi.txt"), scratch_path("multi.ann"));
    REQUIRE(corpus[0].links.size() == 1);
    REQUIRE(corpus[0].links[0].definition.fragments.size() == 2);
  }
}

TEST_CASE("compute_stats on hand-built sentences") {
  SECTION("one collated sentence") {
    CorpusStats st = compute_stats({simple_sentence()});
    REQUIRE(st.positive_sentences == 1);
    REQUIRE(st.total_terms == 1);
    REQUIRE(st.total_defs == 1);
    REQUIRE(st.equal_count_sentences == 1);
    REQUIRE(st.collated_sentences == 1);
    REQUIRE(st.overlap_instances == 0);
  }
  SECTION("nested definitions produce overlap instances") {
    // "h0 is the input x": def(h0) = "input x" covers symbol x,
    // def(x) = "input" overlaps def(h0).
    AnnotatedSentence s;
    s.id = "nest";
    s.paper_id = "p";
    s.text = "h0 is the input x";
    s.tokens = {{"h0", 0, 2}, {"is", 3, 5}, {"the", 6, 9},
                {"input", 10, 15}, {"x", 16, 17}};
    s.symbols = {{"S0", {0}}, {"S1", {4}}};
    s.links = {{"S0", DefinitionSpan{{{3, 4}}}},
               {"S1", DefinitionSpan{{{3, 3}}}}};
    validate(s);
    CorpusStats st = compute_stats({s});
    // Brute-force pairwise token-set intersections:
    //   def(S0) {3,4} x def(S1) {3}  -> overlap
    //   def(S0) {3,4} x symbol S1 {4} -> overlap
    REQUIRE(st.overlap_instances == 2);
    REQUIRE(st.overlap_sentences == 1);
    // Not collated: onsets are T(0), D(3), D(3), T(4).
    REQUIRE(st.collated_sentences == 0);
  }
  SECTION("ratios are the integer quotients") {
    std::vector<AnnotatedSentence> corpus = {simple_sentence(),
                                             simple_sentence()};
    corpus[1].id = "t1";
    corpus[1].symbols.push_back({"S1", {1}});
    CorpusStats st = compute_stats(corpus);
    REQUIRE(st.positive_sentences == 2);
    REQUIRE(st.total_terms == 3);
    REQUIRE(st.terms_per_sentence == Catch::Approx(1.5));
    REQUIRE(st.defs_per_sentence == Catch::Approx(1.0));
  }
}

TEST_CASE("compute_stats is permutation-invariant") {
  std::mt19937_64 rng(11);
  std::vector<AnnotatedSentence> corpus;
  for (int i = 0; i < 60; ++i)
    corpus.push_back(test::random_sentence(rng, {}, "s" + std::to_string(i)));
  CorpusStats before = compute_stats(corpus);
  std::shuffle(corpus.begin(), corpus.end(), rng);
  REQUIRE(compute_stats(corpus) == before);
}

TEST_CASE("mine_coordination") {
  SECTION("literal counting") {
    auto ranked = mine_coordination({"a, and b, and c respectively"});
    REQUIRE(ranked.size() == 1);
    REQUIRE(ranked[0].respectively_count == 1);
    REQUIRE(ranked[0].comma_and_count == 2);
  }
  SECTION("empty document") {
    auto ranked = mine_coordination({""});
    REQUIRE(ranked[0].respectively_count == 0);
    REQUIRE(ranked[0].comma_and_count == 0);
  }
  SECTION("ranking matches an independent count-and-sort oracle") {
    std::vector<std::string> docs = {
        "x, and y",                                  // 1
        "a respectively b respectively, and c",      // 3
        "plain text with nothing"};                  // 0
    auto ranked = mine_coordination(docs);
    // Oracle: per-document scan then sort by total desc, ties by order.
    struct Row { int doc; long total; };
    std::vector<Row> oracle;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      long total = 0;
      for (const char* pat : {"respectively", ", and"}) {
        std::string p(pat);
        for (std::size_t at = docs[i].find(p); at != std::string::npos;
             at = docs[i].find(p, at + p.size()))
          ++total;
      }
      oracle.push_back({static_cast<int>(i), total});
    }
    std::stable_sort(oracle.begin(), oracle.end(),
                     [](const Row& a, const Row& b) { return a.total > b.total; });
    REQUIRE(ranked.size() == oracle.size());
    for (std::size_t i = 0; i < oracle.size(); ++i) {
      REQUIRE(ranked[i].document_index == oracle[i].doc);
      REQUIRE(ranked[i].respectively_count + ranked[i].comma_and_count ==
              oracle[i].total);
    }
  }
  SECTION("counts are additive over concatenation") {
    std::mt19937_64 rng(3);
    auto random_doc = [&] {
      static const char* pieces[] = {"a, and ", "respectively ", "b c ",
                                     ", and d ", "plain "};
      std::string doc;
      int n = std::uniform_int_distribution<int>(0, 8)(rng);
      for (int i = 0; i < n; ++i)
        doc += pieces[std::uniform_int_distribution<int>(0, 4)(rng)];
      return doc;
    };
    for (int trial = 0; trial < 50; ++trial) {
      std::string a = random_doc(), b = random_doc();
      auto ra = mine_coordination({a})[0];
      auto rb = mine_coordination({b})[0];
      auto rc = mine_coordination({a + " || " + b})[0];
      REQUIRE(rc.respectively_count ==
              ra.respectively_count + rb.respectively_count);
      REQUIRE(rc.comma_and_count == ra.comma_and_count + rb.comma_and_count);
    }
  }
}

TEST_CASE("lint_annotations") {
  AnnotatedSentence s;
  s.id = "lint";
  s.paper_id = "p";
  s.text = "x denotes the vocabulary size";
  s.tokens = {{"x", 0, 1}, {"denotes", 2, 9}, {"the", 10, 13},
              {"vocabulary", 14, 24}, {"size", 25, 29}};
  s.symbols = {{"S0", {0}}};

  SECTION("fragment beginning with a determiner") {
    s.links = {{"S0", DefinitionSpan{{{2, 4}}}}};
    auto warnings = lint_annotations(s);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].code == "OMIT_DETERMINER");
  }
  SECTION("fragment beginning with a definition verb") {
    s.links = {{"S0", DefinitionSpan{{{1, 4}}}}};
    auto warnings = lint_annotations(s);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].code == "OMIT_DEFINITION_VERB");
  }
  SECTION("clean fragment produces no warnings") {
    s.links = {{"S0", DefinitionSpan{{{3, 4}}}}};
    REQUIRE(lint_annotations(s).empty());
  }
  SECTION("operator-context symbols flag only when externally marked") {
    s.links = {{"S0", DefinitionSpan{{{3, 4}}}}};
    REQUIRE(lint_annotations(s).empty());
    LintConfig config;
    config.operator_context_symbol_ids.insert("S0");
    auto warnings = lint_annotations(s, config);
    REQUIRE(warnings.size() == 1);
    REQUIRE(warnings[0].code == "SYMBOL_IN_OPERATOR");
  }
}
