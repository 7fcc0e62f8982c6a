#pragma once

// Synthetic judges with known calibration behaviour, used to validate metrics.

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "judgecal/core.hpp"

namespace judgecal {

/// Always reports the same confidence.
struct ConstantConfidence {
  double c = 0.9;
};

/// Per-item correctness probability drawn uniformly from {0.60, 0.65, ..., 0.95};
/// the judge reports exactly that probability.
struct CalibratedConfidence {};

/// Confidence ~ Beta(a, b), independent of correctness.
struct BetaNoiseConfidence {
  double a = 2.0;
  double b = 2.0;
};

using ConfidenceModel = std::variant<ConstantConfidence, CalibratedConfidence, BetaNoiseConfidence>;

inline constexpr int kCalibratedGridSize = 8;

inline double calibrated_grid_value(int k) { return static_cast<double>(12 + k) / 20.0; }

struct SyntheticJudgeProfile {
  std::string judge_id = "synthetic";
  double true_accuracy = 0.5;  // ignored by CalibratedConfidence
  ConfidenceModel confidence_model = ConstantConfidence{};
  std::uint64_t seed = 0;
  Setting setting = Setting::SC;

  void validate() const {
    if (!(true_accuracy >= 0.0 && true_accuracy <= 1.0))
      throw ParameterError("true_accuracy must lie in [0,1]");
    if (auto* c = std::get_if<ConstantConfidence>(&confidence_model); c && !(c->c >= 0.0 && c->c <= 1.0))
      throw ParameterError("constant confidence must lie in [0,1]");
    if (auto* b = std::get_if<BetaNoiseConfidence>(&confidence_model); b && !(b->a > 0.0 && b->b > 0.0))
      throw ParameterError("beta parameters must be positive");
  }
};

/// One record per item; deterministic for a fixed seed.
inline std::vector<JudgmentRecord> synthetic_judge_run(const SyntheticJudgeProfile& profile,
                                                       std::span<const PairwiseItem> items) {
  profile.validate();
  if (items.empty()) throw ParameterError("synthetic_judge_run needs at least one item");
  std::mt19937_64 rng(profile.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, kCalibratedGridSize - 1);

  std::vector<JudgmentRecord> out;
  out.reserve(items.size());
  for (const auto& item : items) {
    double p_correct = profile.true_accuracy;
    double confidence = 0.0;
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<M, ConstantConfidence>) {
            confidence = m.c;
          } else if constexpr (std::is_same_v<M, CalibratedConfidence>) {
            p_correct = calibrated_grid_value(grid(rng));
            confidence = p_correct;
          } else {
            std::gamma_distribution<double> ga(m.a, 1.0);
            std::gamma_distribution<double> gb(m.b, 1.0);
            const double x = ga(rng);
            const double y = gb(rng);
            confidence = x + y > 0.0 ? x / (x + y) : 0.5;
          }
        },
        profile.confidence_model);
    const bool correct = unit(rng) < p_correct;

    JudgmentRecord r;
    r.item_id = item.item_id;
    r.judge_id = profile.judge_id;
    r.setting = profile.setting;
    r.chosen = correct ? item.gold_label : other(item.gold_label);
    r.confidence = confidence;
    r.correct = correct;
    r.valid = true;
    out.push_back(std::move(r));
  }
  return out;
}

/// Placeholder items with zero-padded ids and seeded gold labels.
inline std::vector<PairwiseItem> make_synthetic_items(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::bernoulli_distribution coin(0.5);
  const std::size_t width = std::to_string(n).size();
  std::vector<PairwiseItem> items;
  items.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto idx = std::to_string(i + 1);
    PairwiseItem it;
    it.item_id = "syn-" + std::string(width - idx.size(), '0') + idx;
    it.question = "Synthetic question " + idx;
    it.answer_a = "Synthetic answer A " + idx;
    it.answer_b = "Synthetic answer B " + idx;
    it.gold_label = coin(rng) ? Label::A : Label::B;
    items.push_back(std::move(it));
  }
  return items;
}

}  // namespace judgecal
