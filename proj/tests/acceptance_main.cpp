// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one [PASS]/[FAIL]/[SKIP] line per criterion. Exits nonzero if
// any criterion fails. Data-dependent criteria look for the released dataset
// under $SYMDEF_DATA_DIR and are skipped with a logged reason when absent.
//
// usage: symdef_acceptance <path-to-symdef-cli> <scratch-dir>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symdef/corpus.hpp"
#include "symdef/corpus_io.hpp"
#include "symdef/corpus_stats.hpp"
#include "symdef/encode.hpp"
#include "symdef/eval.hpp"
#include "symdef/interop.hpp"
#include "symdef/sample_io.hpp"
#include "symdef/synthetic.hpp"
#include "symdef/tagger.hpp"
#include "symdef/targeting.hpp"
#include "symdef/train.hpp"
#include "test_support.hpp"

using namespace symdef;
using nlohmann::json;

namespace {

std::string g_cli;
std::string g_scratch;
int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion
            << ": " << detail << "\n";
  if (!pass) ++g_failures;
}

void skip(int criterion, const std::string& reason) {
  std::cout << "[SKIP] criterion " << criterion << ": " << reason << "\n";
}

int run_cli(const std::string& args) {
  std::string cmd = g_cli + " " + args + " >> " + g_scratch +
                    "/cli_log.txt 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return "<unreadable:" + path + ">";
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

bool file_exists(const std::string& path) {
  return std::ifstream(path).good();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

// --------------------------------------------------------------------------
// 1. CRF exactness against exhaustive path enumeration.
// --------------------------------------------------------------------------
void criterion_1() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240101);
  int bad_logz = 0, bad_viterbi = 0, bad_marginals = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int T = 1 + trial % 4;
    const int F = 8;
    CrfModel model = test::random_model(rng, F);
    TokenFeatures x = test::random_features(rng, T, F);

    double log_z = log_partition(model, x);
    double brute = test::brute_force_log_partition(model, x);
    if (std::abs(log_z - brute) > 1e-8) ++bad_logz;

    auto [labels, score] = viterbi_decode(model, x, false);
    auto [brute_labels, brute_score] = test::brute_force_argmax(model, x);
    if (labels != brute_labels) ++bad_viterbi;

    ForwardBackward fb = forward_backward(model, x);
    for (int t = 0; t < T; ++t) {
      double s = 0.0;
      for (int y = 0; y < kNumLabels; ++y)
        s += fb.unary[static_cast<std::size_t>(t)][static_cast<std::size_t>(y)];
      if (std::abs(s - 1.0) > 1e-10) ++bad_marginals;
    }
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream detail;
  detail << "CRF exactness over 200 pairs (logZ/viterbi/marginal failures: "
         << bad_logz << "/" << bad_viterbi << "/" << bad_marginals << ", "
         << elapsed << " s)";
  report(1, bad_logz == 0 && bad_viterbi == 0 && bad_marginals == 0 &&
                elapsed < 10.0,
         detail.str());
}

// --------------------------------------------------------------------------
// 2. Analytic gradient vs central finite differences.
// --------------------------------------------------------------------------
void criterion_2() {
  auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240202);
  long failures = 0, checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 1 + trial % 4;
    const int F = 8;
    CrfModel model = test::random_model(rng, F, 0.5);
    TokenFeatures x = test::random_features(rng, T, F);
    auto gold = test::random_bio_valid_labels(rng, T);
    test::FdCheck check = test::finite_difference_check(
        model, x, gold, trial % 2 == 0, 1.0, 0.0, 1e-5, 1e-5);
    failures += check.failures;
    checked += check.checked;
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream detail;
  detail << "gradient vs finite differences on 50 instances (" << checked
         << " coordinates, " << failures << " failures, " << elapsed << " s)";
  report(2, failures == 0 && elapsed < 60.0, detail.str());
}

// --------------------------------------------------------------------------
// 3. Targeting round-trip over randomized sentences.
// --------------------------------------------------------------------------
void criterion_3() {
  std::mt19937_64 rng(20240303);
  long bad_counts = 0, bad_roundtrip = 0;
  for (int i = 0; i < 1000; ++i) {
    AnnotatedSentence s = test::random_sentence(rng, {}, "a" + std::to_string(i));
    auto samples = expand_targets(s);
    if (samples.size() != std::max<std::size_t>(1, s.symbols.size()))
      ++bad_counts;
    std::vector<std::vector<TagLabel>> predictions;
    for (const auto& sample : samples)
      predictions.push_back(*sample.gold_labels);
    auto pairs = merge_predictions(samples, predictions, s);
    std::map<std::string, std::vector<std::pair<int, int>>> expected, got;
    for (const auto& link : s.links)
      expected[link.symbol_id] = link.definition.fragments;
    for (const auto& [id, span] : pairs) got[id] = span.fragments;
    if (got != expected) ++bad_roundtrip;
  }
  std::ostringstream detail;
  detail << "targeting round-trip over 1000 sentences (count/link failures: "
         << bad_counts << "/" << bad_roundtrip << ")";
  report(3, bad_counts == 0 && bad_roundtrip == 0, detail.str());
}

// --------------------------------------------------------------------------
// 4. Metric oracle agreement plus the hand confusion example.
// --------------------------------------------------------------------------
void criterion_4() {
  std::mt19937_64 rng(20240404);
  long mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int samples = 1 + trial % 6;
    std::vector<std::vector<TagLabel>> gold, pred;
    for (int i = 0; i < samples; ++i) {
      const int T = 1 + std::uniform_int_distribution<int>(0, 11)(rng);
      std::vector<TagLabel> g, p;
      for (int t = 0; t < T; ++t) {
        g.push_back(static_cast<TagLabel>(
            std::uniform_int_distribution<int>(0, 4)(rng)));
        p.push_back(static_cast<TagLabel>(
            std::uniform_int_distribution<int>(0, 4)(rng)));
      }
      gold.push_back(std::move(g));
      pred.push_back(std::move(p));
    }
    EvalReport report_ = evaluate(gold, pred);

    // Independent confusion-matrix computation.
    long tp[3] = {0, 0, 0}, in_gold[3] = {0, 0, 0}, in_pred[3] = {0, 0, 0};
    for (std::size_t i = 0; i < gold.size(); ++i)
      for (std::size_t t = 0; t < gold[i].size(); ++t) {
        int g = static_cast<int>(merge_tag(gold[i][t]));
        int p = static_cast<int>(merge_tag(pred[i][t]));
        in_gold[g] += 1;
        in_pred[p] += 1;
        if (g == p) tp[g] += 1;
      }
    double macro_f = 0.0;
    for (int c = 0; c < 3; ++c) {
      double prec = in_pred[c] ? static_cast<double>(tp[c]) / in_pred[c] : 0.0;
      double rec = in_gold[c] ? static_cast<double>(tp[c]) / in_gold[c] : 0.0;
      double f = prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0.0;
      macro_f += f / 3.0;
      if (std::abs(report_.per_class[static_cast<std::size_t>(c)].precision -
                   prec) > 1e-12 ||
          std::abs(report_.per_class[static_cast<std::size_t>(c)].recall -
                   rec) > 1e-12 ||
          std::abs(report_.per_class[static_cast<std::size_t>(c)].f1 - f) >
              1e-12)
        ++mismatches;
    }
    if (std::abs(report_.macro_f1 - macro_f) > 1e-12) ++mismatches;
  }

  std::vector<std::vector<TagLabel>> gold = {
      {TagLabel::O, TagLabel::BTerm, TagLabel::BDef, TagLabel::IDef}};
  std::vector<std::vector<TagLabel>> pred = {
      {TagLabel::O, TagLabel::O, TagLabel::O, TagLabel::O}};
  EvalReport hand = evaluate(gold, pred);
  bool hand_ok = std::abs(hand.macro_f1 - 0.4 / 3.0) < 1e-12;

  std::ostringstream detail;
  detail << "metric oracle on 500 random pairs (" << mismatches
         << " mismatches); hand example macro F1 = " << hand.macro_f1;
  report(4, mismatches == 0 && hand_ok, detail.str());
}

// --------------------------------------------------------------------------
// 5. Desk-scale learning on the bundled synthetic corpus via the CLI.
//    The released-data Table 3 score (macro F1 84.82) needs the transformer
//    encoder and is NOT reproducible at desk scale; this check substitutes
//    the spec's learnable-by-construction corpus.
// --------------------------------------------------------------------------
void criterion_5() {
  auto t0 = std::chrono::steady_clock::now();
  const std::string dir = g_scratch + "/learn";
  std::system(("mkdir -p " + dir).c_str());
  bool ok = true;
  ok &= run_cli("synth --output " + dir + "/corpus.jsonl --sentences 2000 "
                "--seed 2024") == 0;
  ok &= run_cli("split --input " + dir + "/corpus.jsonl --output-dir " + dir +
                " --seed 2024") == 0;
  for (const char* part : {"train", "dev", "test"})
    ok &= run_cli(std::string("expand --input ") + dir + "/" + part +
                  ".jsonl --output " + dir + "/" + part + "_samples.jsonl") == 0;
  // Defaults: 50 epochs, batch 12, max seq len 100, lr 0.1, l2 1e-4,
  // lambda 1, single-threaded.
  ok &= run_cli("train --train " + dir + "/train_samples.jsonl --dev " + dir +
                "/dev_samples.jsonl --dict " + dir + "/dict.tsv --model " +
                dir + "/model.bin --seed 2024 --threads 1") == 0;
  ok &= run_cli("predict --model " + dir + "/model.bin --dict " + dir +
                "/dict.tsv --input " + dir + "/test_samples.jsonl --output " +
                dir + "/pred.jsonl --threads 1") == 0;
  ok &= run_cli("eval --gold " + dir + "/test_samples.jsonl --pred " + dir +
                "/pred.jsonl --output " + dir + "/report.json") == 0;
  double macro_f1 = -1.0;
  if (ok && file_exists(dir + "/report.json")) {
    json report_json = json::parse(file_bytes(dir + "/report.json"));
    macro_f1 = report_json["macro"]["f1"].get<double>();
  }
  const double elapsed = seconds_since(t0);
  std::ostringstream detail;
  detail << "synthetic-corpus pipeline: held-out macro F1 = " << macro_f1
         << " (>= 0.95 required), " << elapsed
         << " s single-threaded (< 300 s required); Table 3's 84.82 on "
            "SymDef requires the transformer encoder and is out of scope";
  report(5, ok && macro_f1 >= 0.95 && elapsed < 300.0, detail.str());
}

// --------------------------------------------------------------------------
// 6. IAA self-agreement, the directed overlap example, and (data-dependent)
//    the released double-annotated subset.
// --------------------------------------------------------------------------
void criterion_6() {
  std::mt19937_64 rng(20240606);
  std::vector<AnnotatedSentence> corpus;
  for (int i = 0; i < 50; ++i)
    corpus.push_back(test::random_sentence(rng, {}, "s" + std::to_string(i)));
  IaaReport self = compute_iaa(corpus, corpus);
  bool self_ok = self.term.f1 == 1.0 && self.definition.f1 == 1.0 &&
                 self.overlap_mean == 1.0 && self.disjoint == 0 &&
                 self.contained == 0 && self.overlapping_no_containment == 0;

  // Directed hand example: spans [2,5] vs [2,7] -> 4/6 with B as reference.
  AnnotatedSentence a, b;
  a.id = b.id = "h";
  a.paper_id = b.paper_id = "p";
  int offset = 0;
  for (int t = 0; t < 10; ++t) {
    Token tok{"w" + std::to_string(t), offset, offset + 2};
    offset += 3;
    a.tokens.push_back(tok);
    b.tokens.push_back(tok);
  }
  a.text = b.text = "tokens";
  a.symbols = {{"S0", {0}}};
  b.symbols = {{"S0", {0}}};
  a.links = {{"S0", DefinitionSpan{{{2, 5}}}}};
  b.links = {{"S0", DefinitionSpan{{{2, 7}}}}};
  IaaReport directed = compute_iaa({a}, {b});
  bool directed_ok =
      std::abs(directed.overlap_b_ref - 4.0 / 6.0) < 1e-12 &&
      directed.contained == 1;

  report(6, self_ok && directed_ok,
         "IAA self-agreement all 1.0 and directed [2,5]/[2,7] overlap = " +
             std::to_string(directed.overlap_b_ref));

  const char* data_dir = std::getenv("SYMDEF_DATA_DIR");
  std::string pa = data_dir ? std::string(data_dir) + "/iaa_a.jsonl" : "";
  std::string pb = data_dir ? std::string(data_dir) + "/iaa_b.jsonl" : "";
  if (data_dir == nullptr || !file_exists(pa) || !file_exists(pb)) {
    skip(6, "released double-annotated subset not present "
            "(set SYMDEF_DATA_DIR with iaa_a.jsonl/iaa_b.jsonl to reproduce "
            "term F1 0.90 / def F1 0.67 / overlap 85% within ±0.01)");
    return;
  }
  IaaReport released = compute_iaa(load_jsonl(pa), load_jsonl(pb));
  bool released_ok = std::abs(released.term.f1 - 0.90) <= 0.01 &&
                     std::abs(released.definition.f1 - 0.67) <= 0.01 &&
                     std::abs(released.overlap_mean - 0.85) <= 0.01;
  std::ostringstream detail;
  detail << "released subset IAA: term F1 " << released.term.f1 << ", def F1 "
         << released.definition.f1 << ", overlap " << released.overlap_mean;
  report(6, released_ok, detail.str());
}

// --------------------------------------------------------------------------
// 7. Data-dependent dataset statistics.
// --------------------------------------------------------------------------
void criterion_7() {
  const char* data_dir = std::getenv("SYMDEF_DATA_DIR");
  std::string corpus_path =
      data_dir ? std::string(data_dir) + "/symdef.jsonl" : "";
  std::string train_path = data_dir ? std::string(data_dir) + "/train.jsonl" : "";
  if (data_dir == nullptr || !file_exists(corpus_path) ||
      !file_exists(train_path)) {
    skip(7, "public SymDef release not present (set SYMDEF_DATA_DIR with "
            "symdef.jsonl and train.jsonl to check 1,403/3,290/1,713/681/576 "
            "and the 4,930 train samples)");
    return;
  }
  CorpusStats st = compute_stats(load_jsonl(corpus_path));
  bool stats_ok = st.positive_sentences == 1403 && st.total_terms == 3290 &&
                  st.total_defs == 1713 && st.equal_count_sentences == 681 &&
                  st.collated_sentences == 576;
  long samples = 0;
  for (const auto& s : load_jsonl(train_path))
    samples += static_cast<long>(expand_targets(s).size());
  std::ostringstream detail;
  detail << "released stats " << st.positive_sentences << "/" << st.total_terms
         << "/" << st.total_defs << "/" << st.equal_count_sentences << "/"
         << st.collated_sentences << ", train samples " << samples;
  report(7, stats_ok && samples == 4930, detail.str());
}

// --------------------------------------------------------------------------
// 8. Answer alignment worked examples and negative-pattern precision.
// --------------------------------------------------------------------------
void criterion_8() {
  const std::vector<std::string> tokens = {
      "Each",   "word",   "SYMBOL1", "is",      "embedded", "into",
      "a",      "SYMBOL2", "-dimensional", "word", "vector", "SYMBOL3",
      ",",      "where",  "SYMBOL4", "is",      "a",        "(",
      "learned", ")",     "word",    "embedding", "matrix",  ",",
      "SYMBOL5", "is",    "the",     "vocabulary", "size",   ",",
      "and",    "notation", "SYMBOL6", "denotes", "the",     "SYMBOL7",
      "-th",    "column", "of",      "matrix",   "SYMBOL8",  "."};

  AnswerAlignment ex1 =
      align_answer(tokens, 5, "SYMBOL5 is defined as vocabulary size.");
  bool ex1_ok = ex1.status == AlignmentStatus::Aligned &&
                ex1.labels.has_value();
  if (ex1_ok) {
    for (std::size_t t = 0; t < tokens.size(); ++t) {
      TagLabel expected = tokens[t] == "vocabulary" ? TagLabel::BDef
                          : tokens[t] == "size"     ? TagLabel::IDef
                                                    : TagLabel::O;
      if ((*ex1.labels)[t] != expected) ex1_ok = false;
    }
  }

  AnswerAlignment ex2 = align_answer(tokens, 1, "SYMBOL1 has no definition.");
  bool ex2_ok =
      ex2.status == AlignmentStatus::Negative && ex2.labels.has_value();
  if (ex2_ok)
    for (TagLabel l : *ex2.labels)
      if (l != TagLabel::O) ex2_ok = false;

  AnswerAlignment ex3 = align_answer(
      tokens, 2, "SYMBOL2 is defined as quantum chromodynamics.");
  bool ex3_ok =
      ex3.status == AlignmentStatus::Unalignable && !ex3.labels.has_value();

  // Negative-pattern precision: none of these definitional answers may be
  // classified negative.
  const std::vector<std::pair<int, std::string>> positive_fixtures = {
      {5, "SYMBOL5 is defined as vocabulary size."},
      {4, "SYMBOL4 is defined as word embedding matrix."},
      {3, "SYMBOL3 denotes word vector."},
      {8, "SYMBOL8 is defined as matrix."},
      {1, "SYMBOL1 is defined as word."},
      {6, "SYMBOL6 means notation."},
      {7, "SYMBOL7 is defined as column of matrix."}};
  long false_negatives_detected = 0;
  for (const auto& [ordinal, answer] : positive_fixtures)
    if (align_answer(tokens, ordinal, answer).status ==
        AlignmentStatus::Negative)
      ++false_negatives_detected;

  std::ostringstream detail;
  detail << "worked examples aligned/negative/unalignable = " << ex1_ok << "/"
         << ex2_ok << "/" << ex3_ok << "; negative-pattern false positives = "
         << false_negatives_detected;
  report(8, ex1_ok && ex2_ok && ex3_ok && false_negatives_detected == 0,
         detail.str());
}

// --------------------------------------------------------------------------
// 9. Full-pipeline determinism: identical seed twice, and threads 1 vs 8.
// --------------------------------------------------------------------------
void criterion_9() {
  auto pipeline = [&](const std::string& dir, int threads) -> bool {
    std::system(("mkdir -p " + dir).c_str());
    bool ok = true;
    const std::string t = " --threads " + std::to_string(threads);
    ok &= run_cli("synth --output " + dir + "/corpus.jsonl --sentences 300 "
                  "--seed 99") == 0;
    ok &= run_cli("split --input " + dir + "/corpus.jsonl --output-dir " + dir +
                  " --seed 99") == 0;
    for (const char* part : {"train", "dev", "test"})
      ok &= run_cli(std::string("expand --input ") + dir + "/" + part +
                    ".jsonl --output " + dir + "/" + part + "_samples.jsonl") ==
            0;
    ok &= run_cli("train --train " + dir + "/train_samples.jsonl --dev " + dir +
                  "/dev_samples.jsonl --dict " + dir + "/dict.tsv --model " +
                  dir + "/model.bin --epochs 8 --seed 99" + t) == 0;
    ok &= run_cli("predict --model " + dir + "/model.bin --dict " + dir +
                  "/dict.tsv --input " + dir + "/test_samples.jsonl --output " +
                  dir + "/pred.jsonl" + t) == 0;
    ok &= run_cli("eval --gold " + dir + "/test_samples.jsonl --pred " + dir +
                  "/pred.jsonl --output " + dir + "/report.json "
                  "--emit-plot-data " + dir + "/buckets.csv") == 0;
    return ok;
  };

  bool ok = pipeline(g_scratch + "/det_a", 1);
  ok = pipeline(g_scratch + "/det_b", 1) && ok;
  ok = pipeline(g_scratch + "/det_c", 8) && ok;

  const std::vector<std::string> artifacts = {
      "/corpus.jsonl", "/train_samples.jsonl", "/dict.tsv",
      "/model.bin",    "/pred.jsonl",          "/report.json",
      "/buckets.csv"};
  long differing = 0;
  for (const auto& name : artifacts) {
    std::string a = file_bytes(g_scratch + "/det_a" + name);
    if (a != file_bytes(g_scratch + "/det_b" + name)) ++differing;
    if (a != file_bytes(g_scratch + "/det_c" + name)) ++differing;
  }
  std::ostringstream detail;
  detail << "byte-identical artifacts across reruns and threads 1 vs 8 ("
         << differing << " differing files)";
  report(9, ok && differing == 0, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: symdef_acceptance <symdef-cli> <scratch-dir>\n";
    return 2;
  }
  g_cli = argv[1];
  g_scratch = argv[2];
  std::system(("mkdir -p " + g_scratch).c_str());

  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();

  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
    return 1;
  }
  std::cout << "all criteria passed (data-dependent checks skip when the "
               "released dataset is absent)\n";
  return 0;
}
