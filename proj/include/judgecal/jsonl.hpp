#pragma once

// JSONL ingestion and persistence for items.jsonl / records.jsonl.

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "judgecal/core.hpp"

namespace judgecal {

enum class Schema { Items, Records };

struct DatasetFragment {
  std::vector<PairwiseItem> items;
  std::vector<JudgmentRecord> records;
};

namespace detail {

inline const json& require(const json& obj, const char* key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing \"") + key + "\"");
  return *it;
}

inline std::string require_string(const json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_string()) throw ParseError(line, std::string("\"") + key + "\" must be a string");
  return v.get<std::string>();
}

inline bool require_bool(const json& obj, const char* key, std::size_t line) {
  const auto& v = require(obj, key, line);
  if (!v.is_boolean()) throw ParseError(line, std::string("\"") + key + "\" must be a boolean");
  return v.get<bool>();
}

inline Label require_label(const json& obj, const char* key, std::size_t line) {
  auto s = require_string(obj, key, line);
  auto l = parse_label(s);
  if (!l) throw ParseError(line, std::string("\"") + key + "\" must be \"A\" or \"B\", got \"" + s + "\"");
  return *l;
}

inline json collect_extra(const json& obj, std::initializer_list<const char*> known) {
  json extra = json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool is_known = false;
    for (const char* k : known)
      if (it.key() == k) is_known = true;
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

}  // namespace detail

inline PairwiseItem item_from_json(const json& obj, std::size_t line = 0) {
  if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
  PairwiseItem it;
  it.item_id = detail::require_string(obj, "item_id", line);
  if (it.item_id.empty()) throw ParseError(line, "\"item_id\" must be nonempty");
  it.question = detail::require_string(obj, "question", line);
  it.answer_a = detail::require_string(obj, "answer_a", line);
  it.answer_b = detail::require_string(obj, "answer_b", line);
  it.gold_label = detail::require_label(obj, "gold_label", line);
  it.extra = detail::collect_extra(obj, {"item_id", "question", "answer_a", "answer_b", "gold_label"});
  return it;
}

inline json to_json(const PairwiseItem& it) {
  json j = json::object();
  j["item_id"] = it.item_id;
  j["question"] = it.question;
  j["answer_a"] = it.answer_a;
  j["answer_b"] = it.answer_b;
  j["gold_label"] = std::string(to_string(it.gold_label));
  for (auto e = it.extra.begin(); e != it.extra.end(); ++e) j[e.key()] = e.value();
  return j;
}

inline JudgmentRecord record_from_json(const json& obj, std::size_t line = 0) {
  if (!obj.is_object()) throw ParseError(line, "expected a JSON object");
  JudgmentRecord r;
  r.item_id = detail::require_string(obj, "item_id", line);
  if (r.item_id.empty()) throw ParseError(line, "\"item_id\" must be nonempty");
  r.judge_id = detail::require_string(obj, "judge_id", line);
  auto setting = detail::require_string(obj, "setting", line);
  auto s = parse_setting(setting);
  if (!s) throw ParseError(line, "unknown setting \"" + setting + "\"");
  r.setting = *s;
  r.chosen = detail::require_label(obj, "chosen", line);
  const auto& conf = detail::require(obj, "confidence", line);
  if (!conf.is_number()) throw ParseError(line, "\"confidence\" must be a number");
  r.confidence = conf.get<double>();
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
    throw ParseError(line, "\"confidence\" outside [0,1]");
  r.correct = detail::require_bool(obj, "correct", line);
  r.valid = detail::require_bool(obj, "valid", line);
  if (auto it = obj.find("explanation"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) throw ParseError(line, "\"explanation\" must be a string or null");
    r.explanation = it->get<std::string>();
  }
  r.extra = detail::collect_extra(
      obj, {"item_id", "judge_id", "setting", "chosen", "confidence", "correct", "valid", "explanation"});
  return r;
}

inline json to_json(const JudgmentRecord& r) {
  json j = json::object();
  j["item_id"] = r.item_id;
  j["judge_id"] = r.judge_id;
  j["setting"] = std::string(to_string(r.setting));
  j["chosen"] = std::string(to_string(r.chosen));
  j["confidence"] = r.confidence;
  j["correct"] = r.correct;
  j["valid"] = r.valid;
  j["explanation"] = r.explanation ? json(*r.explanation) : json(nullptr);
  for (auto e = r.extra.begin(); e != r.extra.end(); ++e) j[e.key()] = e.value();
  return j;
}

/// Parses a JSONL stream. Every line must parse or the whole call fails; blank
/// lines are skipped. Duplicate item ids are rejected for the items schema.
inline DatasetFragment parse_jsonl(std::istream& in, Schema schema) {
  DatasetFragment frag;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("malformed JSON: ") + e.what());
    }
    if (schema == Schema::Items) {
      auto item = item_from_json(obj, lineno);
      if (!seen.insert(item.item_id).second)
        throw DuplicateError("line " + std::to_string(lineno) + ": duplicate item_id '" +
                             item.item_id + "'");
      frag.items.push_back(std::move(item));
    } else {
      frag.records.push_back(record_from_json(obj, lineno));
    }
  }
  return frag;
}

inline DatasetFragment load_jsonl(const std::filesystem::path& path, Schema schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_jsonl(in, schema);
}

inline std::vector<PairwiseItem> load_items(const std::filesystem::path& path) {
  return load_jsonl(path, Schema::Items).items;
}

inline std::vector<JudgmentRecord> load_records(const std::filesystem::path& path) {
  return load_jsonl(path, Schema::Records).records;
}

template <class T>
std::string to_jsonl(std::span<const T> rows) {
  std::string out;
  for (const auto& r : rows) {
    out += to_json(r).dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

template <class T>
void write_jsonl(const std::filesystem::path& path, std::span<const T> rows, bool append = false) {
  std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out) throw IoError("cannot write " + path.string());
  out << to_jsonl(rows);
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_records(const std::filesystem::path& path, std::span<const JudgmentRecord> rows,
                          bool append = false) {
  write_jsonl<JudgmentRecord>(path, rows, append);
}

inline void write_items(const std::filesystem::path& path, std::span<const PairwiseItem> rows) {
  write_jsonl<PairwiseItem>(path, rows);
}

}  // namespace judgecal
