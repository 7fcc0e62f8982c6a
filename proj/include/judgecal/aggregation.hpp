#pragma once

// Baseline multi-judge aggregators: majority, confidence-weighted,
// square-root-confidence-weighted and entropy-weighted voting.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "judgecal/core.hpp"
#include "judgecal/elicitation.hpp"

namespace judgecal {

enum class AggregationMethod { Majority, ConfWeighted, SqrtConfWeighted, EntropyWeighted };

inline constexpr std::array<AggregationMethod, 4> kAllAggregationMethods{
    AggregationMethod::Majority, AggregationMethod::ConfWeighted, AggregationMethod::SqrtConfWeighted,
    AggregationMethod::EntropyWeighted};

inline std::string_view to_string(AggregationMethod m) noexcept {
  switch (m) {
    case AggregationMethod::Majority: return "Majority";
    case AggregationMethod::ConfWeighted: return "ConfWeighted";
    case AggregationMethod::SqrtConfWeighted: return "SqrtConfWeighted";
    case AggregationMethod::EntropyWeighted: return "EntropyWeighted";
  }
  return "Majority";
}

struct AggregatedDecision {
  std::string item_id;
  AggregationMethod method = AggregationMethod::Majority;
  Label chosen = Label::A;
  double confidence = 0.0;
  bool tie = false;                  // residual tie, resolved to A
  bool broken_by_confidence = false; // mass tie settled by the highest single confidence
  std::map<Label, double> per_label_mass;
};

inline constexpr double kEntropyClip = 1e-6;
inline constexpr double kEntropyFloor = 1e-6;
/// Relative slack under which two label masses count as tied.
inline constexpr double kMassTieTolerance = 1e-12;

/// Natural-log binary entropy with the confidence clipped away from 0 and 1.
inline double binary_entropy(double c) {
  c = std::clamp(c, kEntropyClip, 1.0 - kEntropyClip);
  return -c * std::log(c) - (1.0 - c) * std::log(1.0 - c);
}

inline double entropy_weight(double c) { return 1.0 / (binary_entropy(c) + kEntropyFloor); }

/// Mass one voter contributes to its label.
inline double voter_mass(AggregationMethod m, double c) {
  switch (m) {
    case AggregationMethod::Majority: return 1.0;
    case AggregationMethod::ConfWeighted: return c;
    case AggregationMethod::SqrtConfWeighted: return std::sqrt(c);
    case AggregationMethod::EntropyWeighted: return entropy_weight(c) * c;
  }
  return 1.0;
}

namespace detail {

inline bool masses_tied(double x, double y) {
  return std::abs(x - y) <= kMassTieTolerance * std::max({1.0, std::abs(x), std::abs(y)});
}

}  // namespace detail

/// Aggregates valid outputs. Per-label contributions are summed in ascending
/// order so the result does not depend on voter order. Ties on mass go to the
/// label whose single most confident voter is higher; a remaining tie goes to A.
inline AggregatedDecision aggregate(std::span<const JudgeOutput> outputs, AggregationMethod method,
                                    std::string item_id = {}) {
  std::map<Label, std::vector<double>> contrib;
  std::map<Label, double> max_conf;
  for (const auto& o : outputs) {
    if (!o.valid) continue;
    contrib[o.chosen].push_back(voter_mass(method, o.confidence));
    auto [it, fresh] = max_conf.emplace(o.chosen, o.confidence);
    if (!fresh) it->second = std::max(it->second, o.confidence);
  }
  if (contrib.empty())
    throw EmptyInputError(std::string(to_string(method)) + " needs at least one valid judge output");

  AggregatedDecision d;
  d.item_id = std::move(item_id);
  d.method = method;
  double total = 0.0;
  for (auto& [label, parts] : contrib) {
    std::sort(parts.begin(), parts.end());
    double m = 0.0;
    for (double p : parts) m += p;
    d.per_label_mass[label] = m;
    total += m;
  }

  if (contrib.size() == 1) {
    d.chosen = contrib.begin()->first;
  } else {
    const double ma = d.per_label_mass[Label::A];
    const double mb = d.per_label_mass[Label::B];
    if (!detail::masses_tied(ma, mb)) {
      d.chosen = ma > mb ? Label::A : Label::B;
    } else if (max_conf[Label::A] != max_conf[Label::B]) {
      d.chosen = max_conf[Label::A] > max_conf[Label::B] ? Label::A : Label::B;
      d.broken_by_confidence = true;
    } else {
      d.chosen = Label::A;
      d.tie = true;
    }
  }

  if (total > 0.0)
    d.confidence = std::clamp(d.per_label_mass[d.chosen] / total, 0.0, 1.0);
  else
    d.confidence = 1.0 / static_cast<double>(contrib.size());
  return d;
}

inline AggregatedDecision majority_vote(std::span<const JudgeOutput> outputs, std::string item_id = {}) {
  return aggregate(outputs, AggregationMethod::Majority, std::move(item_id));
}

inline AggregatedDecision conf_weighted(std::span<const JudgeOutput> outputs, std::string item_id = {}) {
  return aggregate(outputs, AggregationMethod::ConfWeighted, std::move(item_id));
}

inline AggregatedDecision sqrt_conf_weighted(std::span<const JudgeOutput> outputs, std::string item_id = {}) {
  return aggregate(outputs, AggregationMethod::SqrtConfWeighted, std::move(item_id));
}

inline AggregatedDecision entropy_weighted(std::span<const JudgeOutput> outputs, std::string item_id = {}) {
  return aggregate(outputs, AggregationMethod::EntropyWeighted, std::move(item_id));
}

/// Serializes as a record with setting Aggregated and judge_id = method name.
inline JudgmentRecord to_record(const AggregatedDecision& d) {
  JudgmentRecord r;
  r.item_id = d.item_id;
  r.judge_id = std::string(to_string(d.method));
  r.setting = Setting::Aggregated;
  r.chosen = d.chosen;
  r.confidence = d.confidence;
  r.valid = true;
  if (d.tie) r.extra["tie"] = true;
  if (d.broken_by_confidence) r.extra["tie_broken_by_confidence"] = true;
  return r;
}

}  // namespace judgecal
