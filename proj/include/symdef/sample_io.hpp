#ifndef SYMDEF_SAMPLE_IO_HPP
#define SYMDEF_SAMPLE_IO_HPP

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symdef/error.hpp"
#include "symdef/targeting.hpp"

namespace symdef {

// Expanded-sample JSONL, one object per line:
//   {"sentence_id": str, "sample_index": int, "tokens": [str],
//    "target": int|null, "symbol_positions": [int],
//    "labels": [str]|null, "has_definition": bool,
//    "origin_map": [[int,int],...]}
// With render_markers the target token carries the literal "</s>SYMBOL</s>"
// marker; the positional fields are unchanged.

inline nlohmann::json sample_to_json(const TargetSample& s,
                                     bool render_markers = false) {
  nlohmann::json j;
  j["sentence_id"] = s.sentence_id;
  j["sample_index"] = s.sample_index;
  j["tokens"] = render_markers ? render_with_markers(s) : s.tokens;
  if (s.target_position.has_value())
    j["target"] = *s.target_position;
  else
    j["target"] = nullptr;
  j["symbol_positions"] = s.symbol_positions;
  if (s.gold_labels.has_value()) {
    nlohmann::json labels = nlohmann::json::array();
    for (TagLabel l : *s.gold_labels) labels.push_back(to_string(l));
    j["labels"] = labels;
  } else {
    j["labels"] = nullptr;
  }
  j["has_definition"] = s.has_definition;
  nlohmann::json om = nlohmann::json::array();
  for (const auto& [a, b] : s.origin_map) om.push_back({a, b});
  j["origin_map"] = om;
  return j;
}

inline TargetSample sample_from_json(const nlohmann::json& j) {
  TargetSample s;
  s.sentence_id = j.at("sentence_id").get<std::string>();
  s.sample_index = j.at("sample_index").get<int>();
  s.tokens = j.at("tokens").get<std::vector<std::string>>();
  for (auto& t : s.tokens)
    if (t == kTargetMarkedToken) t = kMaskToken;
  if (j.contains("target") && !j["target"].is_null())
    s.target_position = j["target"].get<int>();
  s.symbol_positions = j.at("symbol_positions").get<std::vector<int>>();
  if (j.contains("labels") && !j["labels"].is_null()) {
    std::vector<TagLabel> labels;
    for (const auto& lj : j["labels"])
      labels.push_back(tag_from_string(lj.get<std::string>()));
    s.gold_labels = std::move(labels);
  }
  s.has_definition = j.value("has_definition", false);
  if (j.contains("origin_map")) {
    for (const auto& oj : j["origin_map"])
      s.origin_map.emplace_back(oj.at(0).get<int>(), oj.at(1).get<int>());
  } else {
    for (std::size_t t = 0; t < s.tokens.size(); ++t)
      s.origin_map.emplace_back(static_cast<int>(t), static_cast<int>(t));
  }
  if (s.target_position.has_value()) {
    bool found = false;
    for (int p : s.symbol_positions)
      if (p == *s.target_position) found = true;
    if (!found)
      throw Error(errc::kInvariant,
                  "sample for '" + s.sentence_id +
                      "': target is not a symbol position");
  }
  if (s.gold_labels.has_value() && s.gold_labels->size() != s.tokens.size())
    throw Error(errc::kInvariant,
                "sample for '" + s.sentence_id +
                    "': label count does not match token count");
  return s;
}

inline std::vector<TargetSample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open '" + path + "' for reading");
  std::vector<TargetSample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(sample_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::kParse, path + ":" + std::to_string(line_no) +
                                    ": malformed sample line: " + e.what());
    }
  }
  return out;
}

inline void save_samples(const std::string& path,
                         const std::vector<TargetSample>& samples,
                         bool render_markers = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::kIo, "cannot open '" + path + "' for writing");
  for (const auto& s : samples)
    out << sample_to_json(s, render_markers).dump() << "\n";
  if (!out) throw Error(errc::kIo, "write failed for '" + path + "'");
}

}  // namespace symdef

#endif  // SYMDEF_SAMPLE_IO_HPP
