#ifndef SYMDEF_ENCODE_HPP
#define SYMDEF_ENCODE_HPP

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "symdef/corpus.hpp"
#include "symdef/error.hpp"
#include "symdef/targeting.hpp"

namespace symdef {

struct EncoderOptions {
  int window = 2;          // word-identity window radius
  int distance_cap = 5;    // |distance| beyond this bucket is "far"
  int affix_max = 3;       // prefix/suffix lengths 1..affix_max

  bool operator==(const EncoderOptions&) const = default;
};

// Frozen string -> index mapping with a reserved UNK slot at index 0.
// Indices are dense and assigned lexicographically so fitting is invariant
// to sample order. The dictionary carries the extraction options it was fit
// with; running a model against differently extracted features is caught by
// the hash.
class FeatureDictionary {
 public:
  static constexpr int kUnkIndex = 0;
  static constexpr const char* kUnkName = "<unk>";

  FeatureDictionary() = default;

  static FeatureDictionary from_counts(const std::map<std::string, long>& counts,
                                       int min_count,
                                       const EncoderOptions& options =
                                           EncoderOptions()) {
    if (min_count < 1)
      throw Error(errc::kConfig, "min_count must be >= 1");
    FeatureDictionary d;
    d.min_count_ = min_count;
    d.options_ = options;
    int next = 1;
    for (const auto& [feature, count] : counts) {  // std::map: lexicographic
      if (count >= min_count) d.index_[feature] = next++;
    }
    return d;
  }

  int size() const { return static_cast<int>(index_.size()) + 1; }
  int min_count() const { return min_count_; }
  const EncoderOptions& options() const { return options_; }

  int lookup(const std::string& feature) const {
    auto it = index_.find(feature);
    return it == index_.end() ? kUnkIndex : it->second;
  }

  bool contains(const std::string& feature) const {
    return index_.count(feature) > 0;
  }

  // Stable content hash (FNV-1a 64) over the index in order; model files
  // store it so a model is never run against the wrong dictionary.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](std::string_view sv) {
      for (unsigned char c : sv) {
        h ^= c;
        h *= 1099511628211ull;
      }
    };
    mix(kUnkName);
    mix("|w" + std::to_string(options_.window) + "d" +
        std::to_string(options_.distance_cap) + "a" +
        std::to_string(options_.affix_max));
    for (const auto& [feature, index] : index_) {
      mix("\n");
      mix(feature);
      mix("\t");
      mix(std::to_string(index));
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(h));
    return std::string(buf);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(errc::kIo, "cannot open '" + path + "' for writing");
    out << "symdef-features v1 window=" << options_.window
        << " distance_cap=" << options_.distance_cap
        << " affix_max=" << options_.affix_max << "\n";
    std::vector<const std::string*> by_index(
        static_cast<std::size_t>(size()), nullptr);
    for (const auto& [feature, index] : index_)
      by_index[static_cast<std::size_t>(index)] = &feature;
    out << escape(kUnkName) << "\t0\n";
    for (int i = 1; i < size(); ++i)
      out << escape(*by_index[static_cast<std::size_t>(i)]) << "\t" << i << "\n";
    if (!out) throw Error(errc::kIo, "write failed for '" + path + "'");
  }

  static FeatureDictionary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(errc::kIo, "cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in, line) || line.rfind("symdef-features v1", 0) != 0)
      throw Error(errc::kParse,
                  path + ": not a symdef feature dictionary (bad header)");
    FeatureDictionary d;
    {
      std::istringstream header(line.substr(std::string("symdef-features v1").size()));
      std::string kv;
      while (header >> kv) {
        std::size_t eq = kv.find('=');
        if (eq == std::string::npos)
          throw Error(errc::kParse, path + ": bad header option '" + kv + "'");
        const std::string key = kv.substr(0, eq);
        const int value = std::stoi(kv.substr(eq + 1));
        if (key == "window") d.options_.window = value;
        else if (key == "distance_cap") d.options_.distance_cap = value;
        else if (key == "affix_max") d.options_.affix_max = value;
        else throw Error(errc::kParse, path + ": unknown header option '" + key + "'");
      }
    }
    int expected = 0;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::size_t tab = line.find_last_of('\t');
      if (tab == std::string::npos)
        throw Error(errc::kParse, path + ": line without tab separator");
      std::string feature = unescape(line.substr(0, tab));
      int index = std::stoi(line.substr(tab + 1));
      if (index != expected)
        throw Error(errc::kParse, path + ": indices not dense from 0");
      if (index != 0) d.index_[feature] = index;
      ++expected;
    }
    return d;
  }

 private:
  static std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c == '\\') out += "\\\\";
      else if (c == '\t') out += "\\t";
      else if (c == '\n') out += "\\n";
      else out += c;
    }
    return out;
  }

  static std::string unescape(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '\\' && i + 1 < s.size()) {
        char n = s[++i];
        out += n == 't' ? '\t' : n == 'n' ? '\n' : n;
      } else {
        out += s[i];
      }
    }
    return out;
  }

  std::map<std::string, int> index_;
  int min_count_ = 1;
  EncoderOptions options_;
};

// Sparse binary feature vectors for one sample: one sorted index list per
// token plus a pooled sentence-level list for the classifier head.
struct TokenFeatures {
  std::vector<std::vector<int>> tokens;
  std::vector<int> pooled;
};

namespace detail {

inline std::string word_shape(std::string_view w) {
  std::string shape;
  char prev = 0;
  for (unsigned char c : w) {
    char k;
    if (c >= 'A' && c <= 'Z') k = 'X';
    else if (c >= 'a' && c <= 'z') k = 'x';
    else if (c >= '0' && c <= '9') k = 'd';
    else k = 'p';
    if (k != prev) shape += k;
    prev = k;
  }
  return shape;
}

inline std::string distance_bucket(int d, int cap) {
  if (d == 0) return "0";
  if (d == 1) return "+1";
  if (d == -1) return "-1";
  if (d > 1 && d <= cap) return "+2..+" + std::to_string(cap);
  if (d < -1 && d >= -cap) return "-" + std::to_string(cap) + "..-2";
  return "far";
}

inline std::string count_bucket(long c) {
  if (c <= 2) return std::to_string(c);
  return "3+";
}

inline std::string length_bucket(std::size_t n) {
  if (n <= 5) return "1-5";
  if (n <= 10) return "6-10";
  if (n <= 20) return "11-20";
  if (n <= 50) return "21-50";
  return "50+";
}

}  // namespace detail

// Emits the deterministic feature-string templates for every token, plus the
// sentence-level strings that only enter the pooled vector. This is the
// single source of truth shared by dictionary fitting and extraction.
//
// Syntax channels, when given, are indexed by ORIGINAL token position; a
// masked SYMBOL token takes the channel value of the first original token
// it covers.
inline std::pair<std::vector<std::vector<std::string>>, std::vector<std::string>>
emit_feature_strings(const TargetSample& sample,
                     const SyntaxChannels* syntax = nullptr,
                     const EncoderOptions& options = EncoderOptions()) {
  const std::size_t n = sample.tokens.size();
  std::vector<std::vector<std::string>> per_token(n);

  std::vector<std::string> lowered(n);
  for (std::size_t t = 0; t < n; ++t)
    lowered[t] = lowercase_ascii(sample.tokens[t]);

  int respectively_at = -1;
  for (std::size_t t = 0; t < n; ++t)
    if (lowered[t] == "respectively") {
      respectively_at = static_cast<int>(t);
      break;
    }
  long comma_and = 0;
  for (std::size_t t = 0; t + 1 < n; ++t)
    if (sample.tokens[t] == "," && lowered[t + 1] == "and") ++comma_and;
  const std::string comma_and_bucket = detail::count_bucket(comma_and);

  std::set<int> symbol_set(sample.symbol_positions.begin(),
                           sample.symbol_positions.end());

  for (std::size_t t = 0; t < n; ++t) {
    auto& fs = per_token[t];
    const std::string& low = lowered[t];
    fs.push_back("w=" + low);
    fs.push_back("shape=" + detail::word_shape(sample.tokens[t]));
    for (int k = 1; k <= options.affix_max; ++k) {
      if (static_cast<int>(low.size()) >= k) {
        fs.push_back("p" + std::to_string(k) + "=" +
                     low.substr(0, static_cast<std::size_t>(k)));
        fs.push_back("s" + std::to_string(k) + "=" +
                     low.substr(low.size() - static_cast<std::size_t>(k)));
      }
    }
    if (symbol_set.count(static_cast<int>(t))) fs.push_back("is_symbol");
    if (sample.target_position.has_value()) {
      int d = static_cast<int>(t) - *sample.target_position;
      if (d == 0) fs.push_back("is_target");
      fs.push_back("dist=" + detail::distance_bucket(d, options.distance_cap));
    }
    if (respectively_at >= 0) {
      int d = static_cast<int>(t) - respectively_at;
      fs.push_back(std::string("respectively:") +
                   (d < 0 ? "left" : d > 0 ? "right" : "at"));
    }
    fs.push_back("candcount=" + comma_and_bucket);
    for (int off = -options.window; off <= options.window; ++off) {
      if (off == 0) continue;
      long pos = static_cast<long>(t) + off;
      std::string w = pos < 0 ? "<bos>"
                    : pos >= static_cast<long>(n) ? "<eos>"
                    : lowered[static_cast<std::size_t>(pos)];
      fs.push_back("w[" + std::string(off > 0 ? "+" : "") +
                   std::to_string(off) + "]=" + w);
    }
    if (syntax != nullptr && t < sample.origin_map.size()) {
      std::size_t orig =
          static_cast<std::size_t>(sample.origin_map[t].first);
      if (orig < syntax->pos.size()) fs.push_back("pos=" + syntax->pos[orig]);
      if (orig < syntax->dep.size()) fs.push_back("dep=" + syntax->dep[orig]);
      if (orig < syntax->abbr.size() && syntax->abbr[orig])
        fs.push_back("abbr");
      if (orig < syntax->ent.size() && syntax->ent[orig]) fs.push_back("ent");
    }
    std::sort(fs.begin(), fs.end());
    fs.erase(std::unique(fs.begin(), fs.end()), fs.end());
  }

  std::vector<std::string> sentence_level;
  sentence_level.push_back("sent:len=" + detail::length_bucket(n));
  sentence_level.push_back(
      "sent:nsym=" +
      (sample.symbol_positions.size() <= 4
           ? std::to_string(sample.symbol_positions.size())
           : std::string("5+")));
  sentence_level.push_back("sent:candcount=" + comma_and_bucket);
  if (respectively_at >= 0) sentence_level.push_back("sent:respectively");
  if (sample.target_position.has_value())
    sentence_level.push_back("sent:has_target");

  return {std::move(per_token), std::move(sentence_level)};
}

// Maps emitted strings through a frozen dictionary. Unseen features collapse
// onto the shared UNK index.
inline TokenFeatures extract_features(const TargetSample& sample,
                                      const FeatureDictionary& dict,
                                      const SyntaxChannels* syntax = nullptr,
                                      const EncoderOptions& options = EncoderOptions()) {
  auto [per_token, sentence_level] = emit_feature_strings(sample, syntax, options);
  TokenFeatures out;
  out.tokens.resize(per_token.size());
  std::set<int> pooled;
  for (std::size_t t = 0; t < per_token.size(); ++t) {
    std::set<int> ids;
    for (const auto& f : per_token[t]) ids.insert(dict.lookup(f));
    out.tokens[t].assign(ids.begin(), ids.end());
    pooled.insert(ids.begin(), ids.end());
  }
  for (const auto& f : sentence_level) pooled.insert(dict.lookup(f));
  out.pooled.assign(pooled.begin(), pooled.end());
  return out;
}

// Counts feature strings over a fitting corpus and keeps those occurring at
// least min_count times. The per-sample syntax pointer list may be empty
// (no syntax anywhere) or parallel to samples.
inline FeatureDictionary fit_dictionary(
    const std::vector<TargetSample>& samples, int min_count = 1,
    const std::vector<const SyntaxChannels*>& syntax = {},
    const EncoderOptions& options = EncoderOptions()) {
  if (samples.empty())
    throw Error(errc::kEmpty, "cannot fit a feature dictionary on an empty corpus");
  if (!syntax.empty() && syntax.size() != samples.size())
    throw Error(errc::kDimension,
                "syntax list must be empty or parallel to samples");
  std::map<std::string, long> counts;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const SyntaxChannels* sx = syntax.empty() ? nullptr : syntax[i];
    auto [per_token, sentence_level] =
        emit_feature_strings(samples[i], sx, options);
    for (const auto& fs : per_token)
      for (const auto& f : fs) counts[f] += 1;
    for (const auto& f : sentence_level) counts[f] += 1;
  }
  return FeatureDictionary::from_counts(counts, min_count, options);
}

// Encoder interface: anything that turns a sample into sparse indicator
// vectors can drive the tagger.
class TokenEncoder {
 public:
  virtual ~TokenEncoder() = default;
  virtual TokenFeatures encode(const TargetSample& sample) const = 0;
  virtual int dim() const = 0;
};

// Default encoder: the sparse template extractor above plus an optional
// per-sentence syntax lookup.
class SparseFeatureEncoder : public TokenEncoder {
 public:
  // Extraction options come from the dictionary, which recorded the options
  // it was fit with.
  explicit SparseFeatureEncoder(FeatureDictionary dict)
      : dict_(std::move(dict)), options_(dict_.options()) {}

  void set_syntax_lookup(
      std::function<const SyntaxChannels*(const std::string&)> lookup) {
    syntax_lookup_ = std::move(lookup);
  }

  TokenFeatures encode(const TargetSample& sample) const override {
    const SyntaxChannels* sx =
        syntax_lookup_ ? syntax_lookup_(sample.sentence_id) : nullptr;
    return extract_features(sample, dict_, sx, options_);
  }

  int dim() const override { return dict_.size(); }

  const FeatureDictionary& dictionary() const { return dict_; }
  const EncoderOptions& options() const { return options_; }

 private:
  FeatureDictionary dict_;
  EncoderOptions options_;
  std::function<const SyntaxChannels*(const std::string&)> syntax_lookup_;
};

}  // namespace symdef

#endif  // SYMDEF_ENCODE_HPP
