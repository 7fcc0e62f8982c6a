#pragma once

// Domain types shared by every module: labels, pairwise items, judgment
// records and the dataset that links them.

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "judgecal/errors.hpp"

namespace judgecal {

using json = nlohmann::ordered_json;

enum class Label { A, B };

inline constexpr Label other(Label l) noexcept { return l == Label::A ? Label::B : Label::A; }

inline std::string_view to_string(Label l) noexcept { return l == Label::A ? "A" : "B"; }

/// Rendering used inside prompts and model replies.
inline std::string_view prompt_label(Label l) noexcept {
  return l == Label::A ? "Output (a)" : "Output (b)";
}

inline std::optional<Label> parse_label(std::string_view s) noexcept {
  if (s == "A") return Label::A;
  if (s == "B") return Label::B;
  return std::nullopt;
}

inline std::optional<Label> parse_prompt_label(std::string_view s) noexcept {
  if (s == "Output (a)") return Label::A;
  if (s == "Output (b)") return Label::B;
  return std::nullopt;
}

enum class Setting { SC, MP, LogP, Aggregated, Fused };

inline std::string_view to_string(Setting s) noexcept {
  switch (s) {
    case Setting::SC: return "SC";
    case Setting::MP: return "MP";
    case Setting::LogP: return "LogP";
    case Setting::Aggregated: return "Aggregated";
    case Setting::Fused: return "Fused";
  }
  return "SC";
}

inline std::optional<Setting> parse_setting(std::string_view s) noexcept {
  if (s == "SC") return Setting::SC;
  if (s == "MP") return Setting::MP;
  if (s == "LogP") return Setting::LogP;
  if (s == "Aggregated") return Setting::Aggregated;
  if (s == "Fused") return Setting::Fused;
  return std::nullopt;
}

enum class ConfidenceScale { Percent, Fraction };

/// Maps a raw confidence on its declared scale to a fraction in [0,1].
inline double normalize_confidence(double raw, ConfidenceScale scale) {
  const double hi = scale == ConfidenceScale::Percent ? 100.0 : 1.0;
  if (!(raw >= 0.0 && raw <= hi)) {
    throw RangeError("confidence " + std::to_string(raw) + " outside " +
                     (scale == ConfidenceScale::Percent ? "percent scale [0,100]"
                                                        : "fraction scale [0,1]"));
  }
  return scale == ConfidenceScale::Percent ? raw / 100.0 : raw;
}

struct PairwiseItem {
  std::string item_id;
  std::string question;
  std::string answer_a;
  std::string answer_b;
  Label gold_label = Label::A;
  json extra = json::object();  // unknown fields, preserved on round-trip
};

/// One judge's decision on one pairwise item.
struct JudgmentRecord {
  std::string item_id;
  std::string judge_id;
  Setting setting = Setting::SC;
  Label chosen = Label::A;
  double confidence = 0.0;
  bool correct = false;
  std::optional<std::string> explanation;
  bool valid = true;
  json extra = json::object();

  friend bool operator==(const JudgmentRecord&, const JudgmentRecord&) = default;
};

/// Placeholder record for a reply that could not be used. Carries confidence 0
/// and never counts as correct.
inline JudgmentRecord make_invalid_record(std::string item_id, std::string judge_id,
                                          Setting setting, std::string reason) {
  JudgmentRecord r;
  r.item_id = std::move(item_id);
  r.judge_id = std::move(judge_id);
  r.setting = setting;
  r.valid = false;
  r.confidence = 0.0;
  r.correct = false;
  r.extra["invalid_reason"] = std::move(reason);
  return r;
}

inline void validate(const JudgmentRecord& r) {
  if (r.item_id.empty()) throw ValidationError("record with empty item_id");
  if (!(r.confidence >= 0.0 && r.confidence <= 1.0))
    throw ValidationError("record " + r.item_id + "/" + r.judge_id + ": confidence " +
                          std::to_string(r.confidence) + " outside [0,1]");
  if (!r.valid && r.confidence != 0.0)
    throw ValidationError("invalid record " + r.item_id + "/" + r.judge_id +
                          " must carry confidence 0");
}

inline void validate(const PairwiseItem& item) {
  if (item.item_id.empty()) throw ValidationError("item with empty item_id");
}

/// item_id -> gold label lookup.
class GoldIndex {
 public:
  GoldIndex() = default;
  explicit GoldIndex(std::span<const PairwiseItem> items) {
    for (const auto& it : items) {
      if (!gold_.emplace(it.item_id, it.gold_label).second)
        throw DuplicateError("duplicate item_id '" + it.item_id + "'");
    }
  }

  std::optional<Label> find(const std::string& id) const {
    auto it = gold_.find(id);
    if (it == gold_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& id) const { return gold_.count(id) != 0; }
  std::size_t size() const { return gold_.size(); }

 private:
  std::unordered_map<std::string, Label> gold_;
};

/// Sets correct = (chosen == gold_label) on every valid record. Idempotent;
/// chosen, confidence and validity are never touched.
inline std::vector<JudgmentRecord> attach_correctness(std::vector<JudgmentRecord> records,
                                                      const GoldIndex& gold) {
  for (auto& r : records) {
    auto g = gold.find(r.item_id);
    if (!g) throw LinkError("record references unknown item_id '" + r.item_id + "'");
    r.correct = r.valid && r.chosen == *g;
  }
  return records;
}

inline std::vector<JudgmentRecord> attach_correctness(std::vector<JudgmentRecord> records,
                                                      std::span<const PairwiseItem> items) {
  return attach_correctness(std::move(records), GoldIndex(items));
}

struct Dataset {
  std::vector<PairwiseItem> items;
  std::vector<JudgmentRecord> records;
  std::map<std::string, std::string> metadata;

  /// Checks item uniqueness and that every record resolves to an item.
  void validate_links() const {
    GoldIndex gold(items);
    for (const auto& r : records)
      if (!gold.contains(r.item_id))
        throw LinkError("record references unknown item_id '" + r.item_id + "'");
  }
};

/// Valid records only; the invalid count is reported separately by metrics.
inline std::vector<JudgmentRecord> valid_only(std::span<const JudgmentRecord> records) {
  std::vector<JudgmentRecord> out;
  out.reserve(records.size());
  for (const auto& r : records)
    if (r.valid) out.push_back(r);
  return out;
}

}  // namespace judgecal
