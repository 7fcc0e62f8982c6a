#pragma once

// Confidence elicitation: self-reported confidence (SC), vote share over
// repeated sampling (MP) and softmax of decision-token logits (LogP).

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "judgecal/backends.hpp"
#include "judgecal/core.hpp"
#include "judgecal/templates.hpp"

namespace judgecal {

struct JudgeOutput {
  std::string judge_id;
  Label chosen = Label::A;
  double confidence = 0.0;
  std::string explanation;
  bool valid = false;
  std::string raw_reply;
  std::optional<std::string> invalid_reason;
  bool tie = false;          // MP vote tie or LogP equal logits, resolved to A
  bool approximate = false;  // LogP side filled from residual mass
};

inline JudgeOutput invalid_output(std::string raw, std::string reason) {
  JudgeOutput o;
  o.raw_reply = std::move(raw);
  o.invalid_reason = std::move(reason);
  o.valid = false;
  o.confidence = 0.0;
  return o;
}

enum class ReplySchema { WithConfidence, LabelOnly };

struct ParseOptions {
  ReplySchema schema = ReplySchema::WithConfidence;
  bool strict = false;  // whole reply (optionally one code fence) must be the object
};

namespace detail {

/// Offset one past the '}' closing the object opened at `open`, honouring strings.
inline std::optional<std::size_t> match_object(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') ++i;
      else if (c == '"') in_string = false;
      continue;
    }
    if (c == '"') in_string = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::nullopt;
}

inline std::optional<json> first_json_object(std::string_view text) {
  for (auto open = text.find('{'); open != std::string_view::npos; open = text.find('{', open + 1)) {
    auto end = match_object(text, open);
    if (!end) continue;
    try {
      auto j = json::parse(text.substr(open, *end - open));
      if (j.is_object()) return j;
    } catch (const json::parse_error&) {
    }
  }
  return std::nullopt;
}

inline std::string_view strip_fence(std::string_view t) {
  t = trim(t);
  if (t.substr(0, 3) == "```") {
    auto nl = t.find('\n');
    auto close = t.rfind("```");
    if (nl != std::string_view::npos && close != std::string_view::npos && close > nl)
      t = trim(t.substr(nl + 1, close - nl - 1));
  }
  return t;
}

}  // namespace detail

/// Parses a judge reply. Never throws; failures come back as invalid outputs
/// whose reason is one of no-json, missing-field, type, unknown-label, range.
inline JudgeOutput parse_judge_json(std::string_view text, const ParseOptions& opts = {}) {
  std::optional<json> obj;
  if (opts.strict) {
    try {
      auto j = json::parse(detail::strip_fence(text));
      if (j.is_object()) obj = std::move(j);
    } catch (const json::parse_error&) {
    }
  } else {
    obj = detail::first_json_object(text);
  }
  std::string raw(text);
  if (!obj) return invalid_output(raw, "no-json");

  auto sel = obj->find("selected_output");
  if (sel == obj->end()) return invalid_output(raw, "missing-field: selected_output");
  if (!sel->is_string()) return invalid_output(raw, "type: selected_output");
  auto label = parse_prompt_label(sel->get<std::string>());
  if (!label) return invalid_output(raw, "unknown-label");

  JudgeOutput out;
  out.raw_reply = raw;
  out.chosen = *label;
  if (auto ex = obj->find("explanation"); ex != obj->end() && ex->is_string())
    out.explanation = ex->get<std::string>();

  if (opts.schema == ReplySchema::WithConfidence) {
    auto cs = obj->find("confidence_score");
    if (cs == obj->end()) return invalid_output(raw, "missing-field: confidence_score");
    if (!cs->is_number()) return invalid_output(raw, "type: confidence_score");
    const double v = cs->get<double>();
    if (!(v >= 0.0 && v <= 100.0)) return invalid_output(raw, "range");
    out.confidence = normalize_confidence(v, ConfidenceScale::Percent);
  }
  out.valid = true;
  return out;
}

/// Two-way softmax in the overflow-free form p_A = 1 / (1 + e^(l_B - l_A)).
/// The smaller probability is computed directly and the larger as its
/// complement, so the pair sums to one.
inline std::pair<double, double> softmax_pair(const LogitPair& l) {
  if (!std::isfinite(l.a) || !std::isfinite(l.b)) throw NumericError("softmax_pair: non-finite logit");
  if (l.a >= l.b) {
    const double pb = 1.0 / (1.0 + std::exp(l.a - l.b));
    return {1.0 - pb, pb};
  }
  const double pa = 1.0 / (1.0 + std::exp(l.b - l.a));
  return {pa, 1.0 - pa};
}

struct ElicitationConfig {
  Setting setting = Setting::SC;
  std::size_t mp_samples = 10;
  double temperature_sc = 0.0;
  double temperature_mp = 0.7;
  double temperature_logp = 0.0;
  int retry_on_parse_failure = 1;
  bool strict_json = false;
  std::string sc_template{kScPromptTemplate};
  std::string mp_template{kMpPromptTemplate};
  std::string logp_template{kMpPromptTemplate};
  LabelTokenMap label_tokens;

  void validate() const {
    if (mp_samples < 1) throw ParameterError("mp_samples must be >= 1");
    if (retry_on_parse_failure < 0) throw ParameterError("retry_on_parse_failure must be >= 0");
  }
};

namespace detail {

/// Issues `n` requests for the same prompt and re-asks, up to the configured
/// retry count, for each sample whose reply did not parse.
inline std::vector<JudgeOutput> sample_parsed(Backend& backend, const std::string& prompt, double temperature,
                                              std::size_t n, const ParseOptions& popts,
                                              const ElicitationConfig& cfg) {
  std::vector<JudgeOutput> outs(n);
  std::vector<std::size_t> pending(n);
  for (std::size_t i = 0; i < n; ++i) pending[i] = i;
  for (int round = 0; round <= cfg.retry_on_parse_failure && !pending.empty(); ++round) {
    std::vector<ChatRequest> reqs(pending.size(), ChatRequest{prompt, temperature, false});
    auto replies = backend.chat_batch(reqs);
    std::vector<std::size_t> still;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      outs[pending[k]] = parse_judge_json(replies[k].text, popts);
      if (!outs[pending[k]].valid) still.push_back(pending[k]);
    }
    pending = std::move(still);
  }
  return outs;
}

}  // namespace detail

inline JudgeOutput elicit_sc(const PairwiseItem& item, Backend& backend, const ElicitationConfig& cfg = {}) {
  cfg.validate();
  auto prompt = render_item_prompt(cfg.sc_template, item);
  ParseOptions popts{ReplySchema::WithConfidence, cfg.strict_json};
  auto out = detail::sample_parsed(backend, prompt, cfg.temperature_sc, 1, popts, cfg).front();
  out.judge_id = backend.id();
  return out;
}

/// Combines MP sub-replies: modal label, confidence = votes / samples. Invalid
/// sub-replies stay in the denominator; a vote tie resolves to A with tie set.
inline JudgeOutput combine_mp_votes(const std::vector<JudgeOutput>& samples) {
  std::size_t votes_a = 0;
  std::size_t votes_b = 0;
  const JudgeOutput* first_a = nullptr;
  const JudgeOutput* first_b = nullptr;
  for (const auto& s : samples) {
    if (!s.valid) continue;
    if (s.chosen == Label::A) {
      ++votes_a;
      if (!first_a) first_a = &s;
    } else {
      ++votes_b;
      if (!first_b) first_b = &s;
    }
  }
  if (votes_a + votes_b == 0) {
    auto o = invalid_output(samples.empty() ? std::string() : samples.front().raw_reply, "all-samples-invalid");
    return o;
  }
  JudgeOutput out;
  out.valid = true;
  out.tie = votes_a == votes_b;
  out.chosen = votes_a >= votes_b ? Label::A : Label::B;
  const auto votes = out.chosen == Label::A ? votes_a : votes_b;
  out.confidence = static_cast<double>(votes) / static_cast<double>(samples.size());
  const JudgeOutput* rep = out.chosen == Label::A ? first_a : first_b;
  out.explanation = rep->explanation;
  out.raw_reply = rep->raw_reply;
  return out;
}

inline JudgeOutput elicit_mp(const PairwiseItem& item, Backend& backend, const ElicitationConfig& cfg = {}) {
  cfg.validate();
  auto prompt = render_item_prompt(cfg.mp_template, item);
  ParseOptions popts{ReplySchema::LabelOnly, cfg.strict_json};
  auto samples = detail::sample_parsed(backend, prompt, cfg.temperature_mp, cfg.mp_samples, popts, cfg);
  auto out = combine_mp_votes(samples);
  out.judge_id = backend.id();
  return out;
}

/// Throws CapabilityError when the backend lacks logprobs and ExtractionError
/// when the reply's logprobs do not expose a decision token.
inline JudgeOutput elicit_logp(const PairwiseItem& item, Backend& backend, const ElicitationConfig& cfg = {}) {
  cfg.validate();
  if (!backend.supports_logprobs())
    throw CapabilityError("backend '" + backend.id() + "' cannot serve LogP elicitation without logprobs");
  auto prompt = render_item_prompt(cfg.logp_template, item);
  auto reply = backend.chat_complete(ChatRequest{prompt, cfg.temperature_logp, true});
  auto logits = extract_decision_logits(reply, cfg.label_tokens);
  auto [pa, pb] = softmax_pair(logits.pair);

  JudgeOutput out;
  out.judge_id = backend.id();
  out.valid = true;
  out.raw_reply = reply.text;
  out.chosen = pa >= pb ? Label::A : Label::B;
  out.confidence = std::max(pa, pb);
  out.tie = pa == pb;
  out.approximate = logits.approximate;
  auto parsed = parse_judge_json(reply.text, ParseOptions{ReplySchema::LabelOnly, false});
  if (parsed.valid) out.explanation = parsed.explanation;
  return out;
}

inline JudgeOutput elicit(const PairwiseItem& item, Backend& backend, const ElicitationConfig& cfg) {
  switch (cfg.setting) {
    case Setting::SC: return elicit_sc(item, backend, cfg);
    case Setting::MP: return elicit_mp(item, backend, cfg);
    case Setting::LogP: return elicit_logp(item, backend, cfg);
    default: throw ParameterError("elicitation setting must be SC, MP or LogP");
  }
}

/// Record for an elicited output. Correctness is attached later against gold.
inline JudgmentRecord to_record(const JudgeOutput& o, const std::string& item_id, Setting setting) {
  if (!o.valid)
    return make_invalid_record(item_id, o.judge_id, setting, o.invalid_reason.value_or("invalid"));
  JudgmentRecord r;
  r.item_id = item_id;
  r.judge_id = o.judge_id;
  r.setting = setting;
  r.chosen = o.chosen;
  r.confidence = o.confidence;
  r.valid = true;
  r.explanation = o.explanation;
  if (o.tie) r.extra["tie"] = true;
  if (o.approximate) r.extra["approximate"] = true;
  return r;
}

/// Inverse of to_record, for feeding stored records into aggregation or fusion.
inline JudgeOutput from_record(const JudgmentRecord& r) {
  JudgeOutput o;
  o.judge_id = r.judge_id;
  o.chosen = r.chosen;
  o.confidence = r.confidence;
  o.explanation = r.explanation.value_or("");
  o.valid = r.valid;
  if (!r.valid) {
    auto it = r.extra.find("invalid_reason");
    o.invalid_reason = it != r.extra.end() && it->is_string() ? it->get<std::string>() : "invalid";
  }
  return o;
}

}  // namespace judgecal
