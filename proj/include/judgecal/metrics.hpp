#pragma once

// Calibration metrics over valid judgment records: fixed and adaptive binning,
// ECE / ACE / MCE, Brier score, NLL and TH-Score.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "judgecal/core.hpp"

namespace judgecal {

inline constexpr std::size_t kDefaultBins = 10;
inline constexpr double kNllClip = 1e-6;
/// Published TH-Score values correspond to coverage expressed in percent and halved.
inline constexpr double kThScale = 50.0;
/// Slack for the TH interval edges so that e.g. 0.9 >= 1 - 0.1 holds.
inline constexpr double kEdgeTolerance = 1e-12;

struct BinStats {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  double mean_confidence = 0.0;
  double accuracy = 0.0;  // 0 when count == 0; such bins never enter metrics

  bool occupied() const noexcept { return count > 0; }
  double gap() const noexcept { return std::abs(accuracy - mean_confidence); }
};

namespace detail {

inline void require_bins(std::size_t m) {
  if (m == 0) throw ParameterError("bin count must be >= 1");
}

inline void require_all_valid(std::span<const JudgmentRecord> records) {
  for (const auto& r : records)
    if (!r.valid)
      throw PreconditionError("binning requires valid records; got invalid record for " + r.item_id);
}

inline std::vector<JudgmentRecord> require_valid(std::span<const JudgmentRecord> records,
                                                 const char* what) {
  auto v = valid_only(records);
  if (v.empty()) throw EmptyInputError(std::string(what) + " needs at least one valid record");
  return v;
}

struct BinAccumulator {
  std::size_t count = 0;
  std::size_t correct = 0;
  double conf_sum = 0.0;
  double conf_min = std::numeric_limits<double>::infinity();
  double conf_max = -std::numeric_limits<double>::infinity();

  void add(const JudgmentRecord& r) {
    ++count;
    correct += r.correct ? 1 : 0;
    conf_sum += r.confidence;
    conf_min = std::min(conf_min, r.confidence);
    conf_max = std::max(conf_max, r.confidence);
  }

  BinStats finish(double lower, double upper) const {
    BinStats b;
    b.lower = lower;
    b.upper = upper;
    b.count = count;
    if (count > 0) {
      double mean = conf_sum / static_cast<double>(count);
      b.mean_confidence = std::clamp(mean, conf_min, conf_max);
      b.accuracy = static_cast<double>(correct) / static_cast<double>(count);
    }
    return b;
  }
};

inline double weighted_gap(std::span<const BinStats> bins, std::size_t n) {
  double total = 0.0;
  for (const auto& b : bins)
    if (b.occupied()) total += static_cast<double>(b.count) / static_cast<double>(n) * b.gap();
  return total;
}

}  // namespace detail

/// Index of the fixed-width bin [i/M, (i+1)/M) holding c; c == 1 lands in the last bin.
inline std::size_t fixed_bin_index(double c, std::size_t m) {
  auto idx = static_cast<std::size_t>(std::max(0.0, std::floor(c * static_cast<double>(m))));
  if (idx >= m) idx = m - 1;
  // floor(c*M) can be off by one near edges; settle against the real boundaries.
  while (idx + 1 < m && c >= static_cast<double>(idx + 1) / static_cast<double>(m)) ++idx;
  while (idx > 0 && c < static_cast<double>(idx) / static_cast<double>(m)) --idx;
  return idx;
}

inline std::vector<BinStats> bin_fixed(std::span<const JudgmentRecord> records,
                                       std::size_t m = kDefaultBins) {
  detail::require_bins(m);
  detail::require_all_valid(records);
  std::vector<detail::BinAccumulator> acc(m);
  for (const auto& r : records) acc[fixed_bin_index(r.confidence, m)].add(r);
  std::vector<BinStats> bins;
  bins.reserve(m);
  const auto md = static_cast<double>(m);
  for (std::size_t i = 0; i < m; ++i)
    bins.push_back(acc[i].finish(static_cast<double>(i) / md, static_cast<double>(i + 1) / md));
  return bins;
}

/// Canonical ordering for adaptive binning: confidence, then item_id, then
/// judge_id, then correctness. Makes bins independent of input order.
inline bool adaptive_order(const JudgmentRecord& a, const JudgmentRecord& b) {
  if (a.confidence != b.confidence) return a.confidence < b.confidence;
  if (a.item_id != b.item_id) return a.item_id < b.item_id;
  if (a.judge_id != b.judge_id) return a.judge_id < b.judge_id;
  return a.correct < b.correct;
}

/// Equal-mass bins. The first N mod M bins hold ceil(N/M) records, the rest
/// floor(N/M); bins past N are empty. lower/upper are the member extremes.
inline std::vector<BinStats> bin_adaptive(std::span<const JudgmentRecord> records,
                                          std::size_t m = kDefaultBins) {
  detail::require_bins(m);
  detail::require_all_valid(records);
  std::vector<JudgmentRecord> sorted(records.begin(), records.end());
  std::stable_sort(sorted.begin(), sorted.end(), adaptive_order);

  const std::size_t n = sorted.size();
  const std::size_t base = n / m;
  const std::size_t rem = n % m;
  std::vector<BinStats> bins;
  bins.reserve(m);
  double last_edge = 0.0;
  for (std::size_t b = 0; b < m; ++b) {
    const std::size_t start = b * base + std::min(b, rem);
    const std::size_t size = base + (b < rem ? 1 : 0);
    detail::BinAccumulator acc;
    for (std::size_t k = start; k < start + size; ++k) acc.add(sorted[k]);
    if (acc.count == 0) {
      bins.push_back(acc.finish(last_edge, last_edge));
    } else {
      bins.push_back(acc.finish(acc.conf_min, acc.conf_max));
      last_edge = acc.conf_max;
    }
  }
  return bins;
}

inline double accuracy(std::span<const JudgmentRecord> records) {
  auto v = detail::require_valid(records, "accuracy");
  std::size_t correct = 0;
  for (const auto& r : v) correct += r.correct ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(v.size());
}

/// Expected calibration error: sum of (n_i/N)|acc(i) - conf(i)| over fixed bins.
inline double ece(std::span<const JudgmentRecord> records, std::size_t m = kDefaultBins) {
  detail::require_bins(m);
  auto v = detail::require_valid(records, "ece");
  return detail::weighted_gap(bin_fixed(v, m), v.size());
}

/// Adaptive calibration error: ECE over equal-mass bins.
inline double ace(std::span<const JudgmentRecord> records, std::size_t m = kDefaultBins) {
  detail::require_bins(m);
  auto v = detail::require_valid(records, "ace");
  return detail::weighted_gap(bin_adaptive(v, m), v.size());
}

/// Maximum calibration error over occupied fixed bins.
inline double mce(std::span<const JudgmentRecord> records, std::size_t m = kDefaultBins) {
  detail::require_bins(m);
  auto v = detail::require_valid(records, "mce");
  double worst = 0.0;
  for (const auto& b : bin_fixed(v, m))
    if (b.occupied()) worst = std::max(worst, b.gap());
  return worst;
}

inline double brier(std::span<const JudgmentRecord> records) {
  auto v = detail::require_valid(records, "brier");
  double total = 0.0;
  for (const auto& r : v) {
    const double d = r.confidence - (r.correct ? 1.0 : 0.0);
    total += d * d;
  }
  return total / static_cast<double>(v.size());
}

/// Mean negative log-likelihood of correctness, probabilities clipped to
/// [kNllClip, 1 - kNllClip], natural log.
inline double nll(std::span<const JudgmentRecord> records) {
  auto v = detail::require_valid(records, "nll");
  double total = 0.0;
  for (const auto& r : v) {
    const double p = std::clamp(r.confidence, kNllClip, 1.0 - kNllClip);
    total -= r.correct ? std::log(p) : std::log1p(-p);
  }
  return total / static_cast<double>(v.size());
}

struct ThParams {
  double epsilon = 0.1;
  bool include_low_interval = true;
  bool boundary_inclusive = true;

  /// epsilon = 0.5 is admitted so the whole range can be covered.
  void validate() const {
    if (!(epsilon > 0.0 && epsilon <= 0.5))
      throw ParameterError("TH epsilon must lie in (0, 0.5], got " + std::to_string(epsilon));
  }
};

struct ThResult {
  double interval_accuracy = 0.0;
  double coverage = 0.0;
  double score = 0.0;
  double epsilon = 0.0;
  std::size_t n_selected = 0;
  std::size_t n_total = 0;
  double high_threshold = 1.0;             // confidence >= this (or > when exclusive)
  std::optional<double> low_threshold;     // confidence <= this, when the low interval is used
  bool empty = true;                       // no record fell in the intervals
};

/// TH-Score from interval accuracy and coverage (both fractions).
inline double th_score_value(double interval_accuracy, double coverage) {
  return (std::exp(interval_accuracy - 0.5) - 1.0) * coverage * kThScale;
}

inline bool in_th_interval(double c, const ThParams& p) {
  const double hi = 1.0 - p.epsilon;
  const double lo = p.epsilon;
  bool high = p.boundary_inclusive ? c >= hi - kEdgeTolerance : c > hi + kEdgeTolerance;
  bool low = false;
  if (p.include_low_interval)
    low = p.boundary_inclusive ? c <= lo + kEdgeTolerance : c < lo - kEdgeTolerance;
  return high || low;
}

inline ThResult th_score(std::span<const JudgmentRecord> records, const ThParams& params = {}) {
  params.validate();
  auto v = detail::require_valid(records, "th_score");
  ThResult res;
  res.epsilon = params.epsilon;
  res.n_total = v.size();
  res.high_threshold = 1.0 - params.epsilon;
  if (params.include_low_interval) res.low_threshold = params.epsilon;
  std::size_t correct = 0;
  for (const auto& r : v) {
    if (!in_th_interval(r.confidence, params)) continue;
    ++res.n_selected;
    correct += r.correct ? 1 : 0;
  }
  if (res.n_selected == 0) return res;
  res.empty = false;
  res.interval_accuracy = static_cast<double>(correct) / static_cast<double>(res.n_selected);
  res.coverage = static_cast<double>(res.n_selected) / static_cast<double>(res.n_total);
  res.score = th_score_value(res.interval_accuracy, res.coverage);
  return res;
}

struct MetricConfig {
  std::size_t bins = kDefaultBins;
  ThParams th;
};

struct MetricSuite {
  double acc = 0.0;
  double ece = 0.0;
  double ace = 0.0;
  double mce = 0.0;
  double brier = 0.0;
  double nll = 0.0;
  ThResult th;
  std::size_t n_valid = 0;
  std::size_t n_invalid = 0;

  /// Column-keyed view used by the table renderer.
  std::map<std::string, double> to_map() const {
    return {{"acc", acc}, {"ece", ece}, {"ace", ace},   {"brier", brier},
            {"mce", mce}, {"nll", nll}, {"th", th.score}};
  }
};

inline MetricSuite metric_suite(std::span<const JudgmentRecord> records,
                                const MetricConfig& config = {}) {
  auto valid = valid_only(records);
  MetricSuite s;
  s.n_valid = valid.size();
  s.n_invalid = records.size() - valid.size();
  auto guarded = [](const char* name, auto&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      throw MetricError(name, e.what());
    }
  };
  s.acc = guarded("acc", [&] { return accuracy(valid); });
  s.ece = guarded("ece", [&] { return ece(valid, config.bins); });
  s.ace = guarded("ace", [&] { return ace(valid, config.bins); });
  s.mce = guarded("mce", [&] { return mce(valid, config.bins); });
  s.brier = guarded("brier", [&] { return brier(valid); });
  s.nll = guarded("nll", [&] { return nll(valid); });
  s.th = guarded("th", [&] { return th_score(valid, config.th); });
  return s;
}

inline json to_json(const MetricSuite& s) {
  json j = json::object();
  j["acc"] = s.acc;
  j["ece"] = s.ece;
  j["ace"] = s.ace;
  j["mce"] = s.mce;
  j["brier"] = s.brier;
  j["nll"] = s.nll;
  j["th"] = {{"accuracy", s.th.interval_accuracy},
             {"coverage", s.th.coverage},
             {"score", s.th.score},
             {"epsilon", s.th.epsilon}};
  j["n_valid"] = s.n_valid;
  j["n_invalid"] = s.n_invalid;
  return j;
}

}  // namespace judgecal
