// symdef: command-line pipeline for symbol-definition extraction corpora.
// Subcommands cover ingestion, statistics, mining, splitting, target
// expansion, CRF training/prediction, evaluation, agreement, and format
// bridges. Every subcommand prints a one-line machine-readable JSON result
// on stdout and logs human-readable progress on stderr.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "symdef/corpus.hpp"
#include "symdef/corpus_io.hpp"
#include "symdef/corpus_stats.hpp"
#include "symdef/encode.hpp"
#include "symdef/error.hpp"
#include "symdef/eval.hpp"
#include "symdef/interop.hpp"
#include "symdef/sample_io.hpp"
#include "symdef/splits.hpp"
#include "symdef/synthetic.hpp"
#include "symdef/tagger.hpp"
#include "symdef/targeting.hpp"
#include "symdef/train.hpp"

namespace {

using nlohmann::json;
using namespace symdef;

struct CliConfig {
  std::uint64_t seed = 42;
  int threads = 1;
  int epochs = 50;
  int batch_size = 12;
  int max_seq_len = 100;
  double learning_rate = 0.1;
  double l2_lambda = 1e-4;
  double lambda_cls = 1.0;
  int min_count = 1;
  int window = 2;
  int distance_cap = 5;
  bool gate = false;
  std::string policy = "first-occurrence";
  double train_frac = 0.7;
  double dev_frac = 0.15;

  std::map<std::string, std::string> as_map() const {
    std::map<std::string, std::string> m;
    char buf[64];
    auto fmt = [&](double v) {
      std::snprintf(buf, sizeof(buf), "%.10g", v);
      return std::string(buf);
    };
    m["seed"] = std::to_string(seed);
    m["threads"] = std::to_string(threads);
    m["epochs"] = std::to_string(epochs);
    m["batch_size"] = std::to_string(batch_size);
    m["max_seq_len"] = std::to_string(max_seq_len);
    m["learning_rate"] = fmt(learning_rate);
    m["l2_lambda"] = fmt(l2_lambda);
    m["lambda_cls"] = fmt(lambda_cls);
    m["min_count"] = std::to_string(min_count);
    m["window"] = std::to_string(window);
    m["distance_cap"] = std::to_string(distance_cap);
    m["gate"] = gate ? "true" : "false";
    m["policy"] = policy;
    m["train_frac"] = fmt(train_frac);
    m["dev_frac"] = fmt(dev_frac);
    return m;
  }

  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& [k, v] : as_map()) {
      for (unsigned char c : k + "=" + v + "\n") {
        h ^= c;
        h *= 1099511628211ull;
      }
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
  }
};

// Plain key=value configuration file; '#' starts a comment. CLI flags
// override file values, so the file is applied before flag parsing.
void apply_config_file(CliConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open config file '" + path + "'");
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw Error(errc::kConfig, path + ":" + std::to_string(line_no) +
                                       ": expected key=value");
      continue;
    }
    auto trim = [](std::string s) {
      std::size_t a = s.find_first_not_of(" \t\r");
      std::size_t b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "threads") cfg.threads = std::stoi(value);
      else if (key == "epochs") cfg.epochs = std::stoi(value);
      else if (key == "batch_size") cfg.batch_size = std::stoi(value);
      else if (key == "max_seq_len") cfg.max_seq_len = std::stoi(value);
      else if (key == "learning_rate" || key == "lr") cfg.learning_rate = std::stod(value);
      else if (key == "l2_lambda" || key == "l2") cfg.l2_lambda = std::stod(value);
      else if (key == "lambda_cls") cfg.lambda_cls = std::stod(value);
      else if (key == "min_count") cfg.min_count = std::stoi(value);
      else if (key == "window") cfg.window = std::stoi(value);
      else if (key == "distance_cap") cfg.distance_cap = std::stoi(value);
      else if (key == "gate") cfg.gate = value == "true" || value == "1";
      else if (key == "policy") cfg.policy = value;
      else if (key == "train_frac") cfg.train_frac = std::stod(value);
      else if (key == "dev_frac") cfg.dev_frac = std::stod(value);
      else throw Error(errc::kConfig, "unknown config key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw Error(errc::kConfig, path + ":" + std::to_string(line_no) +
                                     ": bad value for '" + key + "'");
    }
  }
}

void log_line(const std::string& line) { std::cerr << line << "\n"; }

void emit_result(const std::string& command, const CliConfig& cfg,
                 json extra = json::object()) {
  json result;
  result["command"] = command;
  result["ok"] = true;
  result["seed"] = cfg.seed;
  result["config_hash"] = cfg.hash();
  for (auto& [k, v] : extra.items()) result[k] = v;
  std::cout << result.dump() << "\n";
}

TrainConfig to_train_config(const CliConfig& cfg) {
  TrainConfig tc;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.max_seq_len = cfg.max_seq_len;
  tc.learning_rate = cfg.learning_rate;
  tc.l2_lambda = cfg.l2_lambda;
  tc.classifier_loss_weight = cfg.lambda_cls;
  tc.seed = cfg.seed;
  tc.threads = cfg.threads;
  return tc;
}

// Syntax lookup shared by train/predict when a sentence corpus is given.
struct SyntaxIndex {
  std::map<std::string, SyntaxChannels> by_id;

  static SyntaxIndex from_corpus(const std::vector<AnnotatedSentence>& corpus) {
    SyntaxIndex idx;
    for (const auto& s : corpus)
      if (s.syntax.has_value() && !s.syntax->empty())
        idx.by_id[s.id] = *s.syntax;
    return idx;
  }

  const SyntaxChannels* lookup(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &it->second;
  }
};

std::unique_ptr<SparseFeatureEncoder> make_encoder(
    FeatureDictionary dict, const SyntaxIndex* syntax) {
  auto encoder = std::make_unique<SparseFeatureEncoder>(std::move(dict));
  if (syntax != nullptr)
    encoder->set_syntax_lookup(
        [syntax](const std::string& id) { return syntax->lookup(id); });
  return encoder;
}

json class_scores_json(const ClassScores& s) {
  return {{"precision", s.precision},
          {"recall", s.recall},
          {"f1", s.f1},
          {"gold_support", s.gold_support},
          {"predicted_support", s.predicted_support},
          {"precision_undefined", s.precision_undefined},
          {"recall_undefined", s.recall_undefined}};
}

json eval_report_json(const EvalReport& report, const BucketTable& table) {
  json j;
  j["samples"] = report.samples;
  j["average"] = report.per_sample_average ? "per_sample" : "pooled";
  j["per_class"] = {{"O", class_scores_json(report.per_class[0])},
                    {"TERM", class_scores_json(report.per_class[1])},
                    {"DEF", class_scores_json(report.per_class[2])}};
  j["macro"] = {{"precision", report.macro_precision},
                {"recall", report.macro_recall},
                {"f1", report.macro_f1}};
  j["errors"] = {{"false_negative", report.errors.false_negative},
                 {"false_positive", report.errors.false_positive},
                 {"mislabeled", report.errors.mislabeled}};
  j["buckets"] = json::array();
  for (const auto& row : table.rows)
    j["buckets"].push_back({{"symbol_count", row.symbol_count},
                            {"n", row.n},
                            {"macro_f1", row.macro_f1},
                            {"stddev", row.stddev}});
  auto agg = [](const RangeAggregate& a) {
    return json{{"lo", a.lo},
                {"hi", a.hi},
                {"n", a.n},
                {"mean", a.mean},
                {"stddev", a.stddev}};
  };
  j["range_1_5"] = agg(table.range_1_5);
  j["range_6_10"] = agg(table.range_6_10);
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::kIo, "cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
  if (!out) throw Error(errc::kIo, "write failed for '" + path + "'");
}

std::string sibling_ann(const std::string& txt_path) {
  std::size_t dot = txt_path.find_last_of('.');
  std::size_t slash = txt_path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return txt_path + ".ann";
  return txt_path.substr(0, dot) + ".ann";
}

json lint_to_json(const std::string& sentence_id,
                  const std::vector<LintWarning>& warnings) {
  json arr = json::array();
  for (const auto& w : warnings)
    arr.push_back({{"sentence_id", sentence_id},
                   {"code", w.code},
                   {"symbol_id", w.symbol_id},
                   {"fragment", w.fragment_index},
                   {"message", w.message}});
  return arr;
}

int pick_occurrence_interactively(const std::string& word,
                                  const std::vector<int>& options) {
  std::cerr << "word '" << word << "' occurs at token positions:";
  for (int o : options) std::cerr << " " << o;
  std::cerr << "\nchoose position: " << std::flush;
  int chosen = options[0];
  std::string line;
  if (std::getline(std::cin, line)) {
    try {
      chosen = std::stoi(line);
    } catch (...) {
      chosen = options[0];
    }
  }
  return chosen;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"symdef: targeted symbol-definition extraction toolkit"};
  app.require_subcommand(1);

  CliConfig cfg;
  std::string config_path;
  app.add_option("--config", config_path,
                 "key=value config file; flags override file values")
      ->envname("SYMDEF_CONFIG");

  // Shared option values.
  std::vector<std::string> inputs;
  std::string input, output, output_dir, format = "jsonl";
  std::string train_path, dev_path, dict_path, model_path, corpus_path;
  std::string gold_path, pred_path, input_a, input_b, answers_path;
  std::string lint_output, pairs_output, plot_data;
  bool render_markers = false, by_sentence = false, reverse = false;
  bool per_sample = false;
  int sentences = 2000;
  int max_symbols = 10;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", cfg.seed, "deterministic seed");
    cmd->add_option("--threads", cfg.threads, "worker threads (1 = serial)");
  };

  auto* c_ingest = app.add_subcommand(
      "ingest", "read BRAT or JSONL annotations into canonical JSONL");
  c_ingest->add_option("--input", inputs, "input file(s); for brat: .txt with sibling .ann")
      ->required();
  c_ingest->add_option("--output", output, "canonical corpus JSONL")->required();
  c_ingest->add_option("--format", format, "jsonl|brat")
      ->check(CLI::IsMember({"jsonl", "brat"}));
  c_ingest->add_option("--lint-output", lint_output, "lint warnings JSON");
  add_common(c_ingest);

  auto* c_stats = app.add_subcommand("stats", "corpus statistics table");
  c_stats->add_option("--input", input, "corpus JSONL")->required();
  c_stats->add_option("--output", output, "machine-readable report JSON");
  add_common(c_stats);

  auto* c_mine = app.add_subcommand(
      "mine", "rank documents by coordination-pattern counts");
  c_mine->add_option("--input", inputs, "plain-text document file(s)")->required();
  c_mine->add_option("--output", output, "ranking JSON");
  add_common(c_mine);

  auto* c_split = app.add_subcommand("split", "train/dev/test split");
  c_split->add_option("--input", input, "corpus JSONL")->required();
  c_split->add_option("--output-dir", output_dir, "directory for train/dev/test JSONL")
      ->required();
  c_split->add_option("--train-frac", cfg.train_frac, "train fraction");
  c_split->add_option("--dev-frac", cfg.dev_frac, "dev fraction");
  c_split->add_flag("--by-sentence", by_sentence,
                    "split sentences independently (default: --by-paper)");
  c_split->add_flag("--by-paper", "keep whole papers together (default)");
  add_common(c_split);

  auto* c_expand = app.add_subcommand(
      "expand", "expand sentences into per-symbol target samples");
  c_expand->add_option("--input", input, "corpus JSONL")->required();
  c_expand->add_option("--output", output, "samples JSONL")->required();
  c_expand->add_flag("--render-markers", render_markers,
                     "emit the literal </s>SYMBOL</s> target form");
  add_common(c_expand);

  auto* c_synth = app.add_subcommand(
      "synth", "generate the bundled deterministic synthetic corpus");
  c_synth->add_option("--output", output, "corpus JSONL")->required();
  c_synth->add_option("--sentences", sentences, "sentence count");
  add_common(c_synth);

  auto* c_train = app.add_subcommand("train", "fit dictionary and train the tagger");
  c_train->add_option("--train", train_path, "training samples JSONL")->required();
  c_train->add_option("--dev", dev_path, "dev samples JSONL");
  c_train->add_option("--dict", dict_path, "output feature dictionary")->required();
  c_train->add_option("--model", model_path, "output model file")->required();
  c_train->add_option("--corpus", corpus_path,
                      "sentence corpus for optional syntax channels");
  c_train->add_option("--epochs", cfg.epochs, "training epochs");
  c_train->add_option("--batch-size", cfg.batch_size, "mini-batch size");
  c_train->add_option("--max-seq-len", cfg.max_seq_len, "truncation length");
  c_train->add_option("--lr", cfg.learning_rate, "learning rate");
  c_train->add_option("--l2", cfg.l2_lambda, "L2 regularization strength");
  c_train->add_option("--lambda-cls", cfg.lambda_cls,
                      "classifier loss weight of the multi-task objective");
  c_train->add_option("--min-count", cfg.min_count, "feature count cutoff");
  c_train->add_option("--window", cfg.window, "word-identity window radius");
  c_train->add_option("--distance-cap", cfg.distance_cap,
                      "largest bucketed |distance| to the target");
  add_common(c_train);

  auto* c_predict = app.add_subcommand("predict", "tag samples with a trained model");
  c_predict->add_option("--model", model_path, "model file")->required();
  c_predict->add_option("--dict", dict_path, "feature dictionary")->required();
  c_predict->add_option("--input", input, "samples JSONL")->required();
  c_predict->add_option("--output", output, "predictions JSONL")->required();
  c_predict->add_option("--corpus", corpus_path,
                        "sentence corpus for syntax channels and --pairs-output");
  c_predict->add_option("--pairs-output", pairs_output,
                        "merged symbol->definition pairs JSONL (needs --corpus)");
  c_predict->add_flag("--gate", cfg.gate,
                      "suppress DEF labels when the classifier says no definition");
  c_predict->add_option("--max-seq-len", cfg.max_seq_len, "truncation length");
  add_common(c_predict);

  auto* c_eval = app.add_subcommand("eval", "score predictions against gold samples");
  c_eval->add_option("--gold", gold_path, "gold samples JSONL")->required();
  c_eval->add_option("--pred", pred_path, "predictions JSONL")->required();
  c_eval->add_option("--output", output, "report JSON");
  c_eval->add_option("--emit-plot-data", plot_data,
                     "CSV of (symbol_count, macro_f1) bucket rows");
  c_eval->add_option("--max-symbols", max_symbols, "largest bucket to report");
  c_eval->add_flag("--per-sample", per_sample,
                   "average per-sample macro scores instead of pooling");
  add_common(c_eval);

  auto* c_iaa = app.add_subcommand("iaa", "inter-annotator agreement");
  c_iaa->add_option("--input-a", input_a, "annotator A corpus JSONL")->required();
  c_iaa->add_option("--input-b", input_b, "annotator B corpus JSONL")->required();
  c_iaa->add_option("--output", output, "report JSON");
  add_common(c_iaa);

  auto* c_scierc = app.add_subcommand("convert-scierc",
                                      "export corpus to SciERC JSON (or back)");
  c_scierc->add_option("--input", input, "input file")->required();
  c_scierc->add_option("--output", output, "output file")->required();
  c_scierc->add_flag("--reverse", reverse, "convert SciERC JSON back to corpus JSONL");
  add_common(c_scierc);

  auto* c_align = app.add_subcommand(
      "align-answers", "align free-text answers into slot labels");
  c_align->add_option("--corpus", corpus_path, "corpus JSONL")->required();
  c_align->add_option("--answers", answers_path,
                      "answers JSONL: {sentence_id, symbol_ordinal, answer}")
      ->required();
  c_align->add_option("--output", output, "alignments JSONL")->required();
  c_align->add_option("--policy", cfg.policy, "interactive|first-occurrence")
      ->check(CLI::IsMember({"interactive", "first-occurrence"}));
  add_common(c_align);

  auto* c_config = app.add_subcommand("config", "configuration utilities");
  auto* c_config_show =
      c_config->add_subcommand("show", "print effective defaults as key=value");
  add_common(c_config_show);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      // Re-parse after the file so explicit flags win.
      apply_config_file(cfg, config_path);
      app.clear();
      CLI11_PARSE(app, argc, argv);
    }

    if (c_ingest->parsed()) {
      std::vector<AnnotatedSentence> corpus;
      for (const auto& path : inputs) {
        std::vector<AnnotatedSentence> part =
            format == "brat" ? load_brat(path, sibling_ann(path))
                             : load_jsonl(path);
        corpus.insert(corpus.end(), part.begin(), part.end());
      }
      json lint = json::array();
      long warning_count = 0;
      for (const auto& s : corpus) {
        auto warnings = lint_annotations(s);
        warning_count += static_cast<long>(warnings.size());
        for (auto& w : lint_to_json(s.id, warnings)) lint.push_back(w);
      }
      save_jsonl(output, corpus);
      if (!lint_output.empty()) write_json_file(lint_output, lint);
      log_line("ingested " + std::to_string(corpus.size()) + " sentences, " +
          std::to_string(warning_count) + " lint warnings");
      emit_result("ingest", cfg,
                  {{"sentences", corpus.size()},
                   {"lint_warnings", warning_count},
                   {"output", output}});
    } else if (c_stats->parsed()) {
      auto corpus = load_jsonl(input);
      CorpusStats st = compute_stats(corpus);
      char line[256];
      std::printf("%-22s %10s\n", "statistic", "value");
      std::printf("%-22s %10ld\n", "positive sentences", st.positive_sentences);
      std::snprintf(line, sizeof(line), "%ld (%.2f)", st.total_terms,
                    st.terms_per_sentence);
      std::printf("%-22s %10s\n", "terms (per sent.)", line);
      std::snprintf(line, sizeof(line), "%ld (%.2f)", st.total_defs,
                    st.defs_per_sentence);
      std::printf("%-22s %10s\n", "defs (per sent.)", line);
      std::printf("%-22s %10ld\n", "equal counts", st.equal_count_sentences);
      std::printf("%-22s %10ld\n", "collated", st.collated_sentences);
      std::printf("%-22s %10ld\n", "overlap instances", st.overlap_instances);
      std::printf("%-22s %10ld\n", "overlap sentences", st.overlap_sentences);
      json j = {{"positive_sentences", st.positive_sentences},
                {"total_terms", st.total_terms},
                {"terms_per_sentence", st.terms_per_sentence},
                {"total_defs", st.total_defs},
                {"defs_per_sentence", st.defs_per_sentence},
                {"equal_count_sentences", st.equal_count_sentences},
                {"collated_sentences", st.collated_sentences},
                {"overlap_instances", st.overlap_instances},
                {"overlap_sentences", st.overlap_sentences}};
      if (!output.empty()) write_json_file(output, j);
      emit_result("stats", cfg, {{"stats", j}});
    } else if (c_mine->parsed()) {
      std::vector<std::string> texts;
      for (const auto& path : inputs) {
        std::ifstream in(path);
        if (!in) throw Error(errc::kIo, "cannot open '" + path + "'");
        texts.emplace_back(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
      }
      auto ranking = mine_coordination(texts);
      json rows = json::array();
      for (const auto& r : ranking) {
        rows.push_back(
            {{"document", inputs[static_cast<std::size_t>(r.document_index)]},
             {"respectively", r.respectively_count},
             {"comma_and", r.comma_and_count}});
        log_line(inputs[static_cast<std::size_t>(r.document_index)] +
            ": respectively=" + std::to_string(r.respectively_count) +
            " comma_and=" + std::to_string(r.comma_and_count));
      }
      if (!output.empty()) write_json_file(output, rows);
      emit_result("mine", cfg, {{"ranking", rows}});
    } else if (c_split->parsed()) {
      auto corpus = load_jsonl(input);
      SplitResult split =
          by_sentence
              ? split_by_sentence(corpus, cfg.train_frac, cfg.dev_frac, cfg.seed)
              : split_by_paper(corpus, cfg.train_frac, cfg.dev_frac, cfg.seed);
      save_jsonl(output_dir + "/train.jsonl", split.train);
      save_jsonl(output_dir + "/dev.jsonl", split.dev);
      save_jsonl(output_dir + "/test.jsonl", split.test);
      log_line("split: train=" + std::to_string(split.train.size()) +
          " dev=" + std::to_string(split.dev.size()) +
          " test=" + std::to_string(split.test.size()));
      emit_result("split", cfg,
                  {{"train", split.train.size()},
                   {"dev", split.dev.size()},
                   {"test", split.test.size()},
                   {"by", by_sentence ? "sentence" : "paper"}});
    } else if (c_expand->parsed()) {
      auto corpus = load_jsonl(input);
      std::vector<TargetSample> samples;
      for (const auto& s : corpus) {
        auto expanded = expand_targets(s);
        samples.insert(samples.end(), expanded.begin(), expanded.end());
      }
      save_samples(output, samples, render_markers);
      log_line("expanded " + std::to_string(corpus.size()) + " sentences into " +
          std::to_string(samples.size()) + " samples");
      emit_result("expand", cfg,
                  {{"sentences", corpus.size()}, {"samples", samples.size()}});
    } else if (c_synth->parsed()) {
      auto corpus = generate_synthetic_corpus(sentences, cfg.seed);
      save_jsonl(output, corpus);
      emit_result("synth", cfg, {{"sentences", corpus.size()}});
    } else if (c_train->parsed()) {
      auto train_samples = load_samples(train_path);
      std::vector<TargetSample> dev_samples;
      if (!dev_path.empty()) dev_samples = load_samples(dev_path);
      SyntaxIndex syntax;
      if (!corpus_path.empty())
        syntax = SyntaxIndex::from_corpus(load_jsonl(corpus_path));
      std::vector<const SyntaxChannels*> syntax_ptrs;
      if (!syntax.by_id.empty()) {
        syntax_ptrs.reserve(train_samples.size());
        for (const auto& s : train_samples)
          syntax_ptrs.push_back(syntax.lookup(s.sentence_id));
      }
      EncoderOptions encoder_options;
      encoder_options.window = cfg.window;
      encoder_options.distance_cap = cfg.distance_cap;
      FeatureDictionary dict = fit_dictionary(train_samples, cfg.min_count,
                                              syntax_ptrs, encoder_options);
      dict.save(dict_path);
      log_line("dictionary: " + std::to_string(dict.size()) + " features");
      auto encoder = make_encoder(dict, &syntax);
      TrainResult result =
          train(train_samples, dev_samples, *encoder, to_train_config(cfg), log_line);
      result.model.dictionary_hash = dict.hash();
      save_model(result.model, model_path);
      emit_result("train", cfg,
                  {{"features", dict.size()},
                   {"train_samples", train_samples.size()},
                   {"dev_samples", dev_samples.size()},
                   {"best_epoch", result.best_epoch},
                   {"best_dev_macro_f1", result.best_dev_macro_f1},
                   {"model", model_path},
                   {"dict", dict_path}});
    } else if (c_predict->parsed()) {
      CrfModel model = load_model(model_path);
      FeatureDictionary dict = FeatureDictionary::load(dict_path);
      if (!model.dictionary_hash.empty() && model.dictionary_hash != dict.hash())
        throw Error(errc::kMismatch,
                    "model was trained with a different dictionary (hash " +
                        model.dictionary_hash + " != " + dict.hash() + ")");
      auto samples = load_samples(input);
      SyntaxIndex syntax;
      std::vector<AnnotatedSentence> corpus;
      if (!corpus_path.empty()) {
        corpus = load_jsonl(corpus_path);
        syntax = SyntaxIndex::from_corpus(corpus);
      }
      auto encoder = make_encoder(dict, &syntax);
      std::vector<Prediction> preds = predict(model, samples, *encoder,
                                              cfg.gate, cfg.max_seq_len,
                                              cfg.threads);
      {
        std::ofstream out(output, std::ios::binary);
        if (!out) throw Error(errc::kIo, "cannot open '" + output + "'");
        for (std::size_t i = 0; i < samples.size(); ++i) {
          json j;
          j["sentence_id"] = samples[i].sentence_id;
          j["sample_index"] = samples[i].sample_index;
          json labels = json::array();
          for (TagLabel l : preds[i].labels) labels.push_back(to_string(l));
          j["labels"] = labels;
          j["has_definition_prob"] = preds[i].has_definition_prob;
          out << j.dump() << "\n";
        }
      }
      if (!pairs_output.empty()) {
        if (corpus.empty())
          throw Error(errc::kConfig, "--pairs-output requires --corpus");
        std::map<std::string, const AnnotatedSentence*> by_id;
        for (const auto& s : corpus) by_id[s.id] = &s;
        std::ofstream out(pairs_output, std::ios::binary);
        if (!out) throw Error(errc::kIo, "cannot open '" + pairs_output + "'");
        std::size_t i = 0;
        while (i < samples.size()) {
          std::size_t j = i;
          while (j < samples.size() &&
                 samples[j].sentence_id == samples[i].sentence_id)
            ++j;
          auto it = by_id.find(samples[i].sentence_id);
          if (it == by_id.end())
            throw Error(errc::kMismatch, "sentence '" + samples[i].sentence_id +
                                             "' not in --corpus");
          std::vector<TargetSample> group(samples.begin() + static_cast<long>(i),
                                          samples.begin() + static_cast<long>(j));
          std::vector<std::vector<TagLabel>> labels;
          for (std::size_t k = i; k < j; ++k) labels.push_back(preds[k].labels);
          auto pairs = merge_predictions(group, labels, *it->second);
          json record;
          record["sentence_id"] = samples[i].sentence_id;
          record["pairs"] = json::array();
          for (const auto& [symbol_id, span] : pairs) {
            json frags = json::array();
            for (const auto& [a, b] : span.fragments) frags.push_back({a, b});
            record["pairs"].push_back(
                {{"symbol_id", symbol_id}, {"fragments", frags}});
          }
          out << record.dump() << "\n";
          i = j;
        }
      }
      emit_result("predict", cfg,
                  {{"samples", samples.size()}, {"gated", cfg.gate}});
    } else if (c_eval->parsed()) {
      auto gold_samples = load_samples(gold_path);
      std::vector<std::vector<TagLabel>> gold, pred;
      std::vector<int> symbol_counts;
      for (const auto& s : gold_samples) {
        if (!s.gold_labels.has_value())
          throw Error(errc::kInvariant,
                      "gold sample '" + s.sentence_id + "' has no labels");
        gold.push_back(*s.gold_labels);
        symbol_counts.push_back(static_cast<int>(s.symbol_positions.size()));
      }
      {
        std::ifstream in(pred_path);
        if (!in) throw Error(errc::kIo, "cannot open '" + pred_path + "'");
        std::string line;
        std::size_t i = 0;
        int line_no = 0;
        while (std::getline(in, line)) {
          ++line_no;
          if (line.empty()) continue;
          json j;
          try {
            j = json::parse(line);
          } catch (const json::exception& e) {
            throw Error(errc::kParse, pred_path + ":" + std::to_string(line_no) +
                                          ": " + e.what());
          }
          if (i >= gold_samples.size())
            throw Error(errc::kMismatch, "more predictions than gold samples");
          if (j.at("sentence_id").get<std::string>() !=
                  gold_samples[i].sentence_id ||
              j.at("sample_index").get<int>() != gold_samples[i].sample_index)
            throw Error(errc::kMismatch,
                        pred_path + ":" + std::to_string(line_no) +
                            ": prediction order does not match gold");
          std::vector<TagLabel> labels;
          for (const auto& lj : j.at("labels"))
            labels.push_back(tag_from_string(lj.get<std::string>()));
          pred.push_back(std::move(labels));
          ++i;
        }
        if (i != gold_samples.size())
          throw Error(errc::kMismatch, "fewer predictions than gold samples");
      }
      EvalOptions options;
      options.per_sample_average = per_sample;
      EvalReport report = evaluate(gold, pred, symbol_counts, options);
      BucketTable table = bucket_report(report, max_symbols);
      std::printf("%-6s %12s %12s %12s\n", "class", "precision", "recall", "f1");
      for (int c = 0; c < kNumMergedClasses; ++c) {
        const auto& s = report.per_class[static_cast<std::size_t>(c)];
        std::printf("%-6s %12.4f %12.4f %12.4f\n",
                    to_string(static_cast<MergedClass>(c)), s.precision,
                    s.recall, s.f1);
      }
      std::printf("%-6s %12.4f %12.4f %12.4f\n", "macro",
                  report.macro_precision, report.macro_recall, report.macro_f1);
      std::printf("errors: fn=%ld fp=%ld mislabeled=%ld\n",
                  report.errors.false_negative, report.errors.false_positive,
                  report.errors.mislabeled);
      json j = eval_report_json(report, table);
      if (!output.empty()) write_json_file(output, j);
      if (!plot_data.empty()) {
        std::ofstream out(plot_data, std::ios::binary);
        if (!out) throw Error(errc::kIo, "cannot open '" + plot_data + "'");
        out << "symbol_count,macro_f1,n\n";
        for (const auto& row : table.rows) {
          char buf[96];
          std::snprintf(buf, sizeof(buf), "%d,%.6f,%ld\n", row.symbol_count,
                        row.macro_f1, row.n);
          out << buf;
        }
      }
      emit_result("eval", cfg, {{"macro_f1", report.macro_f1},
                                {"samples", report.samples}});
    } else if (c_iaa->parsed()) {
      auto a = load_jsonl(input_a);
      auto b = load_jsonl(input_b);
      IaaReport report = compute_iaa(a, b);
      auto scores = [](const IaaScores& s) {
        return json{{"precision_a_ref", s.precision_a_ref},
                    {"recall_a_ref", s.recall_a_ref},
                    {"precision_b_ref", s.precision_b_ref},
                    {"recall_b_ref", s.recall_b_ref},
                    {"precision_mean", s.precision_mean},
                    {"recall_mean", s.recall_mean},
                    {"f1", s.f1},
                    {"count_a", s.count_a},
                    {"count_b", s.count_b},
                    {"matches", s.matches}};
      };
      json j = {{"term", scores(report.term)},
                {"definition", scores(report.definition)},
                {"overlap_a_ref", report.overlap_a_ref},
                {"overlap_b_ref", report.overlap_b_ref},
                {"overlap_mean", report.overlap_mean},
                {"matched_definition_pairs", report.matched_definition_pairs},
                {"exact_definition_pairs", report.exact_definition_pairs},
                {"contained", report.contained},
                {"overlapping_no_containment", report.overlapping_no_containment},
                {"disjoint", report.disjoint},
                {"mean_overlapping_words", report.mean_overlapping_words}};
      std::printf("%-12s %10s %10s %10s\n", "", "precision", "recall", "f1");
      std::printf("%-12s %10.4f %10.4f %10.4f\n", "term",
                  report.term.precision_mean, report.term.recall_mean,
                  report.term.f1);
      std::printf("%-12s %10.4f %10.4f %10.4f\n", "definition",
                  report.definition.precision_mean,
                  report.definition.recall_mean, report.definition.f1);
      std::printf("overlap: %.2f%% (A ref %.2f%%, B ref %.2f%%)\n",
                  100.0 * report.overlap_mean, 100.0 * report.overlap_a_ref,
                  100.0 * report.overlap_b_ref);
      std::printf("contained=%ld overlapping=%ld disjoint=%ld mean-overlap-words=%.2f\n",
                  report.contained, report.overlapping_no_containment,
                  report.disjoint, report.mean_overlapping_words);
      if (!output.empty()) write_json_file(output, j);
      emit_result("iaa", cfg,
                  {{"term_f1", report.term.f1},
                   {"definition_f1", report.definition.f1},
                   {"overlap_mean", report.overlap_mean}});
    } else if (c_scierc->parsed()) {
      if (reverse) {
        auto docs = load_scierc(input);
        auto corpus = from_scierc(docs);
        save_jsonl(output, corpus);
        emit_result("convert-scierc", cfg,
                    {{"documents", docs.size()}, {"sentences", corpus.size()}});
      } else {
        auto corpus = load_jsonl(input);
        auto docs = to_scierc(corpus);
        save_scierc(output, docs);
        long entities = 0, rels = 0;
        for (const auto& d : docs) {
          for (const auto& sent : d.ner) entities += static_cast<long>(sent.size());
          for (const auto& sent : d.relations) rels += static_cast<long>(sent.size());
        }
        emit_result("convert-scierc", cfg,
                    {{"documents", docs.size()},
                     {"entities", entities},
                     {"relations", rels}});
      }
    } else if (c_align->parsed()) {
      auto corpus = load_jsonl(corpus_path);
      std::map<std::string, const AnnotatedSentence*> by_id;
      for (const auto& s : corpus) by_id[s.id] = &s;
      AlignPolicy policy = cfg.policy == "interactive"
                               ? AlignPolicy::Interactive
                               : AlignPolicy::FirstOccurrence;
      std::ifstream in(answers_path);
      if (!in) throw Error(errc::kIo, "cannot open '" + answers_path + "'");
      std::ofstream out(output, std::ios::binary);
      if (!out) throw Error(errc::kIo, "cannot open '" + output + "'");
      std::string line;
      int line_no = 0;
      long aligned = 0, negative = 0, ambiguous = 0, unalignable = 0;
      while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
          j = json::parse(line);
        } catch (const json::exception& e) {
          throw Error(errc::kParse, answers_path + ":" +
                                        std::to_string(line_no) + ": " +
                                        e.what());
        }
        const std::string sentence_id = j.at("sentence_id").get<std::string>();
        const int ordinal = j.at("symbol_ordinal").get<int>();
        const std::string answer = j.at("answer").get<std::string>();
        auto it = by_id.find(sentence_id);
        if (it == by_id.end())
          throw Error(errc::kMismatch,
                      "sentence '" + sentence_id + "' not in corpus");
        MaskResult masked = mask_symbols(*it->second);
        if (ordinal < 1 ||
            ordinal > static_cast<int>(masked.symbol_positions.size()))
          throw Error(errc::kMismatch,
                      "sentence '" + sentence_id + "' has no symbol ordinal " +
                          std::to_string(ordinal));
        auto numbered = render_numbered(masked.tokens, masked.symbol_positions);
        AnswerAlignment alignment = align_answer(
            numbered, ordinal, answer, policy, AlignConfig(),
            policy == AlignPolicy::Interactive ? pick_occurrence_interactively
                                               : OccurrencePicker());
        switch (alignment.status) {
          case AlignmentStatus::Aligned: ++aligned; break;
          case AlignmentStatus::Negative: ++negative; break;
          case AlignmentStatus::Ambiguous: ++ambiguous; break;
          case AlignmentStatus::Unalignable: ++unalignable; break;
        }
        auto ordered = it->second->symbols_in_token_order();
        json record;
        record["sentence_id"] = sentence_id;
        record["symbol_ordinal"] = ordinal;
        record["symbol_id"] = ordered[static_cast<std::size_t>(ordinal - 1)]->id;
        record["status"] = to_string(alignment.status);
        if (alignment.labels.has_value()) {
          json labels = json::array();
          for (TagLabel l : *alignment.labels) labels.push_back(to_string(l));
          record["labels"] = labels;
        } else {
          record["labels"] = nullptr;
        }
        record["notes"] = alignment.ambiguity_notes;
        out << record.dump() << "\n";
      }
      emit_result("align-answers", cfg,
                  {{"aligned", aligned},
                   {"negative", negative},
                   {"ambiguous", ambiguous},
                   {"unalignable", unalignable}});
    } else if (c_config->parsed()) {
      if (!c_config_show->parsed())
        throw Error(errc::kConfig, "usage: symdef config show");
      for (const auto& [k, v] : cfg.as_map()) std::cout << k << "=" << v << "\n";
      emit_result("config-show", cfg);
    }
  } catch (const Error& e) {
    json err = {{"error", {{"code", e.code()}, {"message", e.what()}}}};
    std::cout << err.dump() << "\n";
    std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    json err = {{"error", {{"code", "E_INTERNAL"}, {"message", e.what()}}}};
    std::cout << err.dump() << "\n";
    std::cerr << "error[E_INTERNAL]: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
