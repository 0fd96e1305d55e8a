#ifndef SYMDEF_CORPUS_IO_HPP
#define SYMDEF_CORPUS_IO_HPP

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "symdef/corpus.hpp"
#include "symdef/error.hpp"

namespace symdef {

// ---------------------------------------------------------------------------
// JSONL corpus format, one sentence object per line:
//   {"id": str, "paper_id": str, "text": str,
//    "tokens": [{"text": str, "start": int, "end": int}],
//    "symbols": [{"id": str, "tokens": [int,...]}],
//    "links": [{"symbol_id": str, "fragments": [[int,int],...]}],
//    "syntax": {"pos": [...], "dep": [...], "abbr": [...], "ent": [...]}}
// The syntax object is optional, as is each of its channels.
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json sentence_to_json(const AnnotatedSentence& s) {
  nlohmann::json j;
  j["id"] = s.id;
  j["paper_id"] = s.paper_id;
  j["text"] = s.text;
  j["tokens"] = nlohmann::json::array();
  for (const auto& t : s.tokens)
    j["tokens"].push_back(
        {{"text", t.text}, {"start", t.char_start}, {"end", t.char_end}});
  j["symbols"] = nlohmann::json::array();
  for (const auto& sym : s.symbols)
    j["symbols"].push_back({{"id", sym.id}, {"tokens", sym.token_indices}});
  j["links"] = nlohmann::json::array();
  for (const auto& link : s.links) {
    nlohmann::json frags = nlohmann::json::array();
    for (const auto& [a, b] : link.definition.fragments)
      frags.push_back({a, b});
    j["links"].push_back(
        {{"symbol_id", link.symbol_id}, {"fragments", frags}});
  }
  if (s.syntax.has_value() && !s.syntax->empty()) {
    nlohmann::json sx = nlohmann::json::object();
    if (!s.syntax->pos.empty()) sx["pos"] = s.syntax->pos;
    if (!s.syntax->dep.empty()) sx["dep"] = s.syntax->dep;
    if (!s.syntax->abbr.empty()) sx["abbr"] = s.syntax->abbr;
    if (!s.syntax->ent.empty()) sx["ent"] = s.syntax->ent;
    j["syntax"] = sx;
  }
  return j;
}

inline AnnotatedSentence sentence_from_json(const nlohmann::json& j) {
  AnnotatedSentence s;
  s.id = j.at("id").get<std::string>();
  s.paper_id = j.value("paper_id", std::string());
  s.text = j.value("text", std::string());
  for (const auto& tj : j.at("tokens")) {
    Token t;
    t.text = tj.at("text").get<std::string>();
    t.char_start = tj.at("start").get<int>();
    t.char_end = tj.at("end").get<int>();
    s.tokens.push_back(std::move(t));
  }
  if (j.contains("symbols")) {
    for (const auto& sj : j["symbols"]) {
      SymbolOccurrence sym;
      sym.id = sj.at("id").get<std::string>();
      sym.token_indices = sj.at("tokens").get<std::vector<int>>();
      s.symbols.push_back(std::move(sym));
    }
  }
  if (j.contains("links")) {
    for (const auto& lj : j["links"]) {
      SymbolDefLink link;
      link.symbol_id = lj.at("symbol_id").get<std::string>();
      for (const auto& fj : lj.at("fragments"))
        link.definition.fragments.emplace_back(fj.at(0).get<int>(),
                                               fj.at(1).get<int>());
      s.links.push_back(std::move(link));
    }
  }
  if (j.contains("syntax") && j["syntax"].is_object()) {
    SyntaxChannels sx;
    const auto& sj = j["syntax"];
    if (sj.contains("pos")) sx.pos = sj["pos"].get<std::vector<std::string>>();
    if (sj.contains("dep")) sx.dep = sj["dep"].get<std::vector<std::string>>();
    if (sj.contains("abbr")) sx.abbr = sj["abbr"].get<std::vector<bool>>();
    if (sj.contains("ent")) sx.ent = sj["ent"].get<std::vector<bool>>();
    if (!sx.empty()) s.syntax = std::move(sx);
  }
  return s;
}

}  // namespace detail

// Loads a JSONL corpus. Malformed lines report their 1-based line number;
// invariant violations report the sentence id and the invariant.
inline std::vector<AnnotatedSentence> load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(errc::kIo, "cannot open '" + path + "' for reading");
  std::vector<AnnotatedSentence> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::kParse, path + ":" + std::to_string(line_no) +
                                    ": malformed JSON line: " + e.what());
    }
    AnnotatedSentence s;
    try {
      s = detail::sentence_from_json(j);
    } catch (const nlohmann::json::exception& e) {
      throw Error(errc::kParse, path + ":" + std::to_string(line_no) +
                                    ": bad sentence object: " + e.what());
    }
    validate(s);
    out.push_back(std::move(s));
  }
  return out;
}

inline void save_jsonl(const std::string& path,
                       const std::vector<AnnotatedSentence>& sentences) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(errc::kIo, "cannot open '" + path + "' for writing");
  for (const auto& s : sentences)
    out << detail::sentence_to_json(s).dump() << "\n";
  if (!out) throw Error(errc::kIo, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// BRAT standoff ingestion. The .txt holds one sentence per line; the .ann
// holds entities and relations with document-global character offsets:
//   T<k>\t<Type> <start> <end>[;<start> <end>]*\t<surface text>
//   R<k>\tDEFINITION-OF Arg1:T<i> Arg2:T<j>
// Entity type "Term" (or "Symbol") maps to a symbol occurrence, type
// "Definition" to a definition span. Offsets that do not line up with token
// boundaries under the given tokenizer are hard errors; snapping would
// corrupt the overlap statistics downstream.
// ---------------------------------------------------------------------------

namespace detail {

struct BratEntity {
  std::string id;
  std::string type;
  std::vector<std::pair<int, int>> char_spans;  // document-global, [start,end)
};

struct BratRelation {
  std::string arg1;  // Term entity id
  std::string arg2;  // Definition entity id
};

inline std::string file_stem(const std::string& path) {
  std::size_t slash = path.find_last_of("/\\");
  std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
  std::size_t dot = base.find_last_of('.');
  return dot == std::string::npos ? base : base.substr(0, dot);
}

}  // namespace detail

inline std::vector<AnnotatedSentence> load_brat(
    const std::string& text_path, const std::string& ann_path,
    const Tokenizer& tokenizer = default_tokenize) {
  std::ifstream tin(text_path);
  if (!tin) throw Error(errc::kIo, "cannot open '" + text_path + "'");
  std::ifstream ain(ann_path);
  if (!ain) throw Error(errc::kIo, "cannot open '" + ann_path + "'");

  const std::string paper_id = detail::file_stem(text_path);

  // Sentence lines with their global character offsets.
  struct Line {
    std::string text;
    int begin = 0;  // global offset of first character
  };
  std::vector<Line> lines;
  {
    std::string raw((std::istreambuf_iterator<char>(tin)),
                    std::istreambuf_iterator<char>());
    int pos = 0;
    const int n = static_cast<int>(raw.size());
    while (pos <= n) {
      std::size_t nl = raw.find('\n', static_cast<std::size_t>(pos));
      int end = nl == std::string::npos ? n : static_cast<int>(nl);
      lines.push_back({raw.substr(static_cast<std::size_t>(pos),
                                  static_cast<std::size_t>(end - pos)),
                       pos});
      if (nl == std::string::npos) break;
      pos = end + 1;
    }
    while (!lines.empty() && lines.back().text.empty()) lines.pop_back();
  }

  std::vector<detail::BratEntity> entities;
  std::vector<detail::BratRelation> relations;
  {
    std::string line;
    int line_no = 0;
    while (std::getline(ain, line)) {
      ++line_no;
      if (line.empty()) continue;
      auto bad = [&](const std::string& why) {
        throw Error(errc::kParse, ann_path + ":" + std::to_string(line_no) +
                                      ": " + why);
      };
      if (line[0] == 'T') {
        std::size_t tab1 = line.find('\t');
        if (tab1 == std::string::npos) bad("entity line without tab");
        std::size_t tab2 = line.find('\t', tab1 + 1);
        std::string mid = line.substr(
            tab1 + 1, tab2 == std::string::npos ? std::string::npos
                                                : tab2 - tab1 - 1);
        detail::BratEntity e;
        e.id = line.substr(0, tab1);
        std::istringstream ms(mid);
        if (!(ms >> e.type)) bad("entity line without type");
        std::string rest;
        std::getline(ms, rest);
        // rest: " <s> <e>[;<s> <e>]*"
        std::istringstream spans(rest);
        std::string piece;
        while (std::getline(spans, piece, ';')) {
          std::istringstream ps(piece);
          int a = 0, b = 0;
          if (!(ps >> a >> b) || a < 0 || b <= a)
            bad("bad span in entity " + e.id);
          e.char_spans.emplace_back(a, b);
        }
        if (e.char_spans.empty()) bad("entity " + e.id + " has no spans");
        entities.push_back(std::move(e));
      } else if (line[0] == 'R') {
        std::size_t tab1 = line.find('\t');
        if (tab1 == std::string::npos) bad("relation line without tab");
        std::istringstream ms(line.substr(tab1 + 1));
        std::string rel, a1, a2;
        if (!(ms >> rel >> a1 >> a2)) bad("bad relation line");
        auto strip = [&](std::string& arg, const char* prefix) {
          if (arg.rfind(prefix, 0) != 0)
            bad("relation argument '" + arg + "' missing " + prefix);
          arg = arg.substr(std::string(prefix).size());
        };
        strip(a1, "Arg1:");
        strip(a2, "Arg2:");
        relations.push_back({a1, a2});
      }
      // Other line kinds (annotator notes, events) are ignored.
    }
  }

  // Tokenize each line and build global-offset -> (sentence, token) lookup.
  std::vector<AnnotatedSentence> sentences(lines.size());
  std::vector<std::vector<Token>> line_tokens(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    sentences[i].id = paper_id + ":" + std::to_string(i);
    sentences[i].paper_id = paper_id;
    sentences[i].text = lines[i].text;
    sentences[i].tokens = tokenizer(lines[i].text);
  }

  // Maps a global character span to (sentence index, token range). A span
  // that crosses a sentence boundary or does not start/end exactly on token
  // boundaries is an error listing the offending offset.
  auto resolve_span = [&](int gs, int ge,
                          const std::string& entity_id)
      -> std::tuple<std::size_t, int, int> {
    std::size_t si = lines.size();
    for (std::size_t i = 0; i < lines.size(); ++i) {
      int lb = lines[i].begin;
      int le = lb + static_cast<int>(lines[i].text.size());
      if (gs >= lb && ge <= le) {
        si = i;
        break;
      }
    }
    if (si == lines.size())
      throw Error(errc::kBoundary,
                  "entity " + entity_id + ": span [" + std::to_string(gs) +
                      "," + std::to_string(ge) +
                      ") crosses a sentence boundary or exceeds the text");
    int ls = gs - lines[si].begin;
    int le = ge - lines[si].begin;
    const auto& toks = sentences[si].tokens;
    int first = -1, last = -1;
    for (std::size_t t = 0; t < toks.size(); ++t) {
      if (toks[t].char_start == ls) first = static_cast<int>(t);
      if (toks[t].char_end == le) last = static_cast<int>(t);
    }
    if (first < 0)
      throw Error(errc::kBoundary, "entity " + entity_id + ": offset " +
                                       std::to_string(gs) +
                                       " is not a token start boundary");
    if (last < 0)
      throw Error(errc::kBoundary, "entity " + entity_id + ": offset " +
                                       std::to_string(ge) +
                                       " is not a token end boundary");
    if (last < first)
      throw Error(errc::kBoundary,
                  "entity " + entity_id + ": empty token range");
    return {si, first, last};
  };

  // Entity id -> (sentence, token fragments).
  std::map<std::string, std::pair<std::size_t, std::vector<std::pair<int, int>>>>
      placed;
  for (const auto& e : entities) {
    std::size_t si = lines.size();
    std::vector<std::pair<int, int>> frags;
    for (const auto& [gs, ge] : e.char_spans) {
      auto [s, a, b] = resolve_span(gs, ge, e.id);
      if (si != lines.size() && s != si)
        throw Error(errc::kBoundary,
                    "entity " + e.id + " spans multiple sentences");
      si = s;
      frags.emplace_back(a, b);
    }
    std::sort(frags.begin(), frags.end());
    placed[e.id] = {si, frags};
    if (e.type == "Term" || e.type == "Symbol") {
      if (frags.size() != 1)
        throw Error(errc::kInvariant,
                    "entity " + e.id + ": a term must be contiguous");
      SymbolOccurrence sym;
      sym.id = e.id;
      for (int t = frags[0].first; t <= frags[0].second; ++t)
        sym.token_indices.push_back(t);
      sentences[si].symbols.push_back(std::move(sym));
    }
    // Definition entities become spans when a relation references them.
  }

  std::map<std::string, std::string> entity_type;
  for (const auto& e : entities) entity_type[e.id] = e.type;

  for (const auto& r : relations) {
    auto it1 = placed.find(r.arg1);
    auto it2 = placed.find(r.arg2);
    if (it1 == placed.end() || it2 == placed.end())
      throw Error(errc::kParse, "relation references unknown entity '" +
                                    (it1 == placed.end() ? r.arg1 : r.arg2) +
                                    "'");
    if (it1->second.first != it2->second.first)
      throw Error(errc::kInvariant,
                  "relation " + r.arg1 + "->" + r.arg2 +
                      " crosses sentences; definitions are sentence-level");
    AnnotatedSentence& s = sentences[it1->second.first];
    // Multiple relations from one symbol merge into a single discontinuous
    // span; the data model allows at most one link per symbol occurrence.
    SymbolDefLink* existing = nullptr;
    for (auto& l : s.links)
      if (l.symbol_id == r.arg1) existing = &l;
    if (existing == nullptr) {
      SymbolDefLink link;
      link.symbol_id = r.arg1;
      link.definition.fragments = it2->second.second;
      s.links.push_back(std::move(link));
    } else {
      auto& frags = existing->definition.fragments;
      frags.insert(frags.end(), it2->second.second.begin(),
                   it2->second.second.end());
      std::sort(frags.begin(), frags.end());
    }
  }

  for (auto& s : sentences) {
    std::sort(s.symbols.begin(), s.symbols.end(),
              [](const SymbolOccurrence& a, const SymbolOccurrence& b) {
                return a.first_token() < b.first_token();
              });
    validate(s);
  }
  return sentences;
}

}  // namespace symdef

#endif  // SYMDEF_CORPUS_IO_HPP
