#pragma once

// Fusion of several judges' decisions and critiques by a fuser model, plus
// disagreement analysis against majority voting.

#include <cmath>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "judgecal/aggregation.hpp"
#include "judgecal/backends.hpp"
#include "judgecal/elicitation.hpp"
#include "judgecal/templates.hpp"

namespace judgecal {

struct FusedDecision {
  std::string item_id;
  std::string fuser_id;
  Label chosen = Label::A;
  double confidence = 0.0;
  std::string explanation;
  std::vector<std::string> input_judges;
  bool valid = false;
  std::optional<std::string> invalid_reason;
};

struct FuserConfig {
  std::string prompt_template{kFuserPromptTemplate};
  double temperature = 0.0;
  int retry_on_parse_failure = 1;
  bool strict_json = false;
};

struct FuserPrompt {
  std::string text;
  std::vector<std::string> included;  // judge ids rendered, in order
  std::vector<std::string> omitted;   // invalid outputs left out
};

/// Confidence on the 0-100 prompt scale: an integer when the fraction maps to
/// one (0.85 -> 85), otherwise the shortest round-trip double.
inline json percent_confidence(double fraction) {
  const double v = fraction * 100.0;
  const double r = std::round(v);
  if (std::abs(v - r) < 1e-9) return static_cast<long long>(r);
  return v;
}

/// The per-judge JSON object shown to the fuser.
inline std::string render_judge_json(const JudgeOutput& o) {
  json j = json::object();
  j["selected_output"] = std::string(prompt_label(o.chosen));
  j["confidence_score"] = percent_confidence(o.confidence);
  j["explanation"] = o.explanation;
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

/// Renders judge outputs in the given order, numbered from 1. Invalid outputs
/// are omitted and reported in `omitted`.
inline FuserPrompt build_fuser_prompt(const PairwiseItem& item, std::span<const JudgeOutput> outputs,
                                      std::string_view tpl = kFuserPromptTemplate) {
  FuserPrompt p;
  std::vector<std::string> rendered;
  for (const auto& o : outputs) {
    if (!o.valid) {
      p.omitted.push_back(o.judge_id);
      continue;
    }
    rendered.push_back(render_judge_json(o));
    p.included.push_back(o.judge_id);
  }
  if (rendered.empty()) throw PreconditionError("fuser prompt for " + item.item_id + " needs at least one valid judge output");
  p.text = render_loop_prompt(tpl, item, rendered);
  return p;
}

inline FusedDecision fuse(const PairwiseItem& item, std::span<const JudgeOutput> outputs, Backend& fuser,
                          const FuserConfig& cfg = {}) {
  auto prompt = build_fuser_prompt(item, outputs, cfg.prompt_template);
  ParseOptions popts{ReplySchema::WithConfidence, cfg.strict_json};
  JudgeOutput parsed;
  for (int attempt = 0; attempt <= cfg.retry_on_parse_failure; ++attempt) {
    auto reply = fuser.chat_complete(ChatRequest{prompt.text, cfg.temperature, false});
    parsed = parse_judge_json(reply.text, popts);
    if (parsed.valid) break;
  }
  FusedDecision d;
  d.item_id = item.item_id;
  d.fuser_id = fuser.id();
  d.input_judges = prompt.included;
  d.valid = parsed.valid;
  if (parsed.valid) {
    d.chosen = parsed.chosen;
    d.confidence = parsed.confidence;
    d.explanation = parsed.explanation;
  } else {
    d.invalid_reason = parsed.invalid_reason;
  }
  return d;
}

/// Fused decisions enter the metrics exactly like SC records, with setting Fused.
inline JudgmentRecord to_record(const FusedDecision& d) {
  if (!d.valid) {
    auto r = make_invalid_record(d.item_id, d.fuser_id, Setting::Fused, d.invalid_reason.value_or("invalid"));
    r.extra["input_judges"] = d.input_judges;
    return r;
  }
  JudgmentRecord r;
  r.item_id = d.item_id;
  r.judge_id = d.fuser_id;
  r.setting = Setting::Fused;
  r.chosen = d.chosen;
  r.confidence = d.confidence;
  r.valid = true;
  r.explanation = d.explanation;
  r.extra["input_judges"] = d.input_judges;
  return r;
}

struct DisagreementStats {
  std::size_t total = 0;
  std::size_t correct_disagreements = 0;    // fuser right, majority wrong
  std::size_t incorrect_disagreements = 0;  // fuser wrong, majority right
  std::size_t both_wrong_disagreements = 0;

  friend bool operator==(const DisagreementStats&, const DisagreementStats&) = default;
};

using OutputsByItem = std::map<std::string, std::vector<JudgeOutput>>;

/// Compares each valid fused decision with majority voting over the same
/// judges. Invalid fused decisions are not classified.
inline DisagreementStats disagreement_report(std::span<const FusedDecision> fused, const OutputsByItem& outputs,
                                             std::span<const PairwiseItem> items) {
  GoldIndex gold(items);
  std::set<std::string> fused_ids;
  for (const auto& f : fused) fused_ids.insert(f.item_id);
  std::vector<std::string> missing;
  for (const auto& id : fused_ids)
    if (!outputs.count(id)) missing.push_back(id);
  for (const auto& [id, _] : outputs)
    if (!fused_ids.count(id)) missing.push_back(id);
  for (const auto& id : fused_ids)
    if (!gold.contains(id)) missing.push_back(id);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw CoverageError("fused decisions and judge outputs cover different items: " + list, missing);
  }

  DisagreementStats s;
  for (const auto& f : fused) {
    if (!f.valid) continue;
    const auto maj = majority_vote(outputs.at(f.item_id), f.item_id);
    if (maj.chosen == f.chosen) continue;
    const Label g = *gold.find(f.item_id);
    ++s.total;
    if (f.chosen == g)
      ++s.correct_disagreements;
    else if (maj.chosen == g)
      ++s.incorrect_disagreements;
    else
      ++s.both_wrong_disagreements;
  }
  return s;
}

inline json to_json(const DisagreementStats& s) {
  return json{{"total", s.total},
              {"correct_disagreements", s.correct_disagreements},
              {"incorrect_disagreements", s.incorrect_disagreements},
              {"both_wrong_disagreements", s.both_wrong_disagreements}};
}

}  // namespace judgecal
