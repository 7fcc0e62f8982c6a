#pragma once

// Command implementations behind the CLI: elicit, metrics, aggregate, fuse,
// simulate and report. Each returns a summary; none prints.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "judgecal/aggregation.hpp"
#include "judgecal/config.hpp"
#include "judgecal/fuser.hpp"
#include "judgecal/jsonl.hpp"
#include "judgecal/metrics.hpp"
#include "judgecal/report.hpp"
#include "judgecal/synthetic.hpp"

namespace judgecal {

using BackendFactory = std::function<std::unique_ptr<Backend>(const std::string& id, const BackendSpec&)>;

inline BackendFactory default_backend_factory() { return make_backend; }

struct Failure {
  std::string item_id;
  std::string source;  // judge or fuser id
  std::string error;
};

inline json to_json(const std::vector<Failure>& failures) {
  json arr = json::array();
  for (const auto& f : failures) arr.push_back({{"item_id", f.item_id}, {"source", f.source}, {"error", f.error}});
  return arr;
}

/// Replaces characters outside [A-Za-z0-9._-] so ids are safe in file names.
inline std::string file_safe(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_' ? c : '_');
  return out.empty() ? std::string("_") : out;
}

namespace detail {

inline void ensure_dir(const std::filesystem::path& p) {
  std::error_code ec;
  std::filesystem::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

inline std::vector<PairwiseItem> require_items(const RunConfig& cfg) {
  if (cfg.items_path.empty()) throw ConfigError("config does not name an items file");
  if (!std::filesystem::exists(cfg.items_path)) throw ConfigError("items file not found: " + cfg.items_path.string());
  return load_items(cfg.items_path);
}

inline std::vector<JudgmentRecord> require_records(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw ConfigError("records file not found: " + path.string());
  return load_records(path);
}

/// Gold-linked copy of records when an items file is configured.
inline std::vector<JudgmentRecord> link_to_items(std::vector<JudgmentRecord> records, const RunConfig& cfg) {
  if (cfg.items_path.empty()) return records;
  auto items = require_items(cfg);
  return attach_correctness(std::move(records), items);
}

using GroupKey = std::pair<std::string, std::string>;  // judge_id, setting

inline std::map<GroupKey, std::vector<JudgmentRecord>> group_records(std::span<const JudgmentRecord> records) {
  std::map<GroupKey, std::vector<JudgmentRecord>> groups;
  for (const auto& r : records) groups[{r.judge_id, std::string(to_string(r.setting))}].push_back(r);
  return groups;
}

inline std::string group_label(const GroupKey& k) { return k.first + " (" + k.second + ")"; }

struct GroupMetrics {
  GroupKey key;
  MetricSuite suite;
};

/// Writes <stem>.csv, <stem>.txt and <stem>.json for a set of metric rows.
inline void write_metric_tables(const std::filesystem::path& dir, const std::string& stem,
                                const std::vector<GroupMetrics>& rows) {
  std::vector<TableRow> table;
  json arr = json::array();
  for (const auto& g : rows) {
    table.push_back({group_label(g.key), g.suite.to_map()});
    auto j = to_json(g.suite);
    json entry = {{"judge_id", g.key.first}, {"setting", g.key.second}};
    for (auto it = j.begin(); it != j.end(); ++it) entry[it.key()] = it.value();
    arr.push_back(entry);
  }
  auto rendered = render_table(table);
  write_text_file(dir / (stem + ".csv"), rendered.csv);
  write_text_file(dir / (stem + ".txt"), rendered.text);
  write_text_file(dir / (stem + ".json"), arr.dump(2) + "\n");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elicit

struct ElicitSummary {
  std::size_t new_records = 0;
  std::size_t skipped = 0;  // (item, judge, setting) already present
  std::size_t attempted = 0;
  std::vector<Failure> failures;
  std::size_t requests = 0;  // backend requests issued by non-synthetic judges
  bool live_backends = false; // any Http judge; such runs are not reproducible

  bool ok() const { return failures.size() * 2 <= attempted; }
};

inline json to_json(const ElicitSummary& s) {
  return {{"command", "elicit"}, {"new_records", s.new_records}, {"skipped", s.skipped},
          {"attempted", s.attempted}, {"requests", s.requests},   {"failures", to_json(s.failures)},
          {"nondeterministic", s.live_backends}, {"ok", s.ok()}};
}

namespace detail {

/// Counts requests passing through to the wrapped backend.
class CountingBackend : public Backend {
 public:
  explicit CountingBackend(Backend& inner) : inner_(inner) {}
  std::string id() const override { return inner_.id(); }
  bool supports_logprobs() const override { return inner_.supports_logprobs(); }
  std::size_t max_concurrency() const override { return inner_.max_concurrency(); }
  ChatReply chat_complete(const ChatRequest& r) override {
    ++count_;
    return inner_.chat_complete(r);
  }
  std::vector<ChatReply> chat_batch(std::span<const ChatRequest> reqs) override {
    count_ += reqs.size();
    return inner_.chat_batch(reqs);
  }
  std::size_t count() const { return count_.load(); }

 private:
  Backend& inner_;
  std::atomic<std::size_t> count_{0};
};

}  // namespace detail

/// One record per (item, judge). Existing (item, judge, setting) records in the
/// records file are skipped and new ones appended, so reruns resume.
inline ElicitSummary cmd_elicit(const RunConfig& cfg, const BackendFactory& factory = default_backend_factory()) {
  cfg.validate();
  auto items = detail::require_items(cfg);
  GoldIndex gold(items);

  ElicitSummary summary;
  // Fail fast on roster problems before any request goes out.
  std::vector<std::unique_ptr<Backend>> backends;
  for (const auto& j : cfg.judges) {
    if (j.backend.kind == BackendKind::Synthetic) {
      backends.emplace_back();
      continue;
    }
    if (j.backend.kind == BackendKind::Http) summary.live_backends = true;
    auto b = factory(j.id, j.backend);
    if (j.setting == Setting::LogP && !b->supports_logprobs())
      throw CapabilityError("judge '" + j.id + "' uses LogP but its backend does not support logprobs");
    backends.push_back(std::move(b));
  }

  detail::ensure_dir(cfg.out_dir);
  const auto path = cfg.records_file();
  std::set<std::tuple<std::string, std::string, std::string>> done;
  if (std::filesystem::exists(path))
    for (const auto& r : load_records(path)) done.insert({r.item_id, r.judge_id, std::string(to_string(r.setting))});

  std::vector<JudgmentRecord> fresh;
  for (std::size_t ji = 0; ji < cfg.judges.size(); ++ji) {
    const auto& judge = cfg.judges[ji];
    const std::string setting(to_string(judge.setting));
    std::vector<PairwiseItem> pending;
    for (const auto& it : items) {
      if (done.count({it.item_id, judge.id, setting}))
        ++summary.skipped;
      else
        pending.push_back(it);
    }
    if (pending.empty()) continue;
    summary.attempted += pending.size();

    if (judge.backend.kind == BackendKind::Synthetic) {
      auto profile = *judge.backend.profile;
      profile.judge_id = judge.id;
      profile.setting = judge.setting;
      for (auto& r : synthetic_judge_run(profile, pending)) fresh.push_back(std::move(r));
      continue;
    }

    detail::CountingBackend counted(*backends[ji]);
    auto ecfg = cfg.elicitation;
    ecfg.setting = judge.setting;
    auto outcomes = run_bounded(pending.size(), counted.max_concurrency(), [&](std::size_t i) {
      auto out = elicit(pending[i], counted, ecfg);
      out.judge_id = judge.id;
      return to_record(out, pending[i].item_id, judge.setting);
    });
    summary.requests += counted.count();
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (outcomes[i].ok()) {
        fresh.push_back(*outcomes[i].value);
        continue;
      }
      try {
        std::rethrow_exception(outcomes[i].error);
      } catch (const std::exception& e) {
        summary.failures.push_back({pending[i].item_id, judge.id, e.what()});
      }
    }
  }
  fresh = attach_correctness(std::move(fresh), gold);
  summary.new_records = fresh.size();
  if (!fresh.empty()) write_records(path, fresh, /*append=*/true);
  return summary;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsSummary {
  std::vector<detail::GroupMetrics> groups;
  std::vector<std::string> warnings;
  std::vector<std::filesystem::path> outputs;
};

inline json to_json(const MetricsSummary& s) {
  json groups = json::array();
  for (const auto& g : s.groups) {
    auto j = to_json(g.suite);
    groups.push_back({{"judge_id", g.key.first}, {"setting", g.key.second}, {"metrics", j}});
  }
  json outs = json::array();
  for (const auto& p : s.outputs) outs.push_back(p.string());
  return {{"command", "metrics"}, {"groups", groups}, {"warnings", s.warnings}, {"outputs", outs}};
}

namespace detail {

/// Metric suite and reliability outputs for every (judge, setting) group.
inline MetricsSummary metrics_for(std::span<const JudgmentRecord> records, const RunConfig& cfg,
                                  const std::string& stem) {
  MetricsSummary s;
  std::vector<GroupMetrics> rows;
  for (const auto& [key, recs] : group_records(records)) {
    bool any_valid = std::any_of(recs.begin(), recs.end(), [](const JudgmentRecord& r) { return r.valid; });
    if (!any_valid) {
      s.warnings.push_back("group " + group_label(key) + " has no valid records; skipped");
      continue;
    }
    GroupMetrics g{key, metric_suite(recs, cfg.metrics)};
    rows.push_back(g);
    auto diagram = reliability_data(recs, cfg.metrics.bins, key.first, key.second);
    const auto base = "reliability_" + file_safe(key.first) + "_" + file_safe(key.second);
    render_reliability_svg(diagram, cfg.out_dir / (base + ".svg"));
    write_text_file(cfg.out_dir / (base + ".json"), to_json(diagram).dump(2) + "\n");
    s.outputs.push_back(cfg.out_dir / (base + ".svg"));
    s.outputs.push_back(cfg.out_dir / (base + ".json"));
  }
  write_metric_tables(cfg.out_dir, stem, rows);
  for (const char* ext : {".csv", ".txt", ".json"}) s.outputs.push_back(cfg.out_dir / (stem + ext));
  s.groups = std::move(rows);
  return s;
}

}  // namespace detail

inline MetricsSummary cmd_metrics(const RunConfig& cfg) {
  cfg.validate();
  detail::ensure_dir(cfg.out_dir);
  auto records = detail::link_to_items(detail::require_records(cfg.records_file()), cfg);
  return detail::metrics_for(records, cfg, "metrics");
}

// ---------------------------------------------------------------------------
// aggregate

struct AggregateSummary {
  std::size_t items_aggregated = 0;
  std::size_t items_skipped = 0;  // fewer than two valid judge outputs
  std::vector<detail::GroupMetrics> methods;
  std::vector<std::string> warnings;
};

inline json to_json(const AggregateSummary& s) {
  json methods = json::array();
  for (const auto& g : s.methods) methods.push_back({{"method", g.key.first}, {"metrics", to_json(g.suite)}});
  return {{"command", "aggregate"}, {"items_aggregated", s.items_aggregated},
          {"items_skipped", s.items_skipped}, {"methods", methods}, {"warnings", s.warnings}};
}

namespace detail {

inline OutputsByItem outputs_by_item(std::span<const JudgmentRecord> records, Setting setting) {
  OutputsByItem by_item;
  for (const auto& r : records)
    if (r.setting == setting) by_item[r.item_id].push_back(from_record(r));
  for (auto& [_, outs] : by_item)
    std::stable_sort(outs.begin(), outs.end(),
                     [](const JudgeOutput& a, const JudgeOutput& b) { return a.judge_id < b.judge_id; });
  return by_item;
}

inline std::size_t count_valid(const std::vector<JudgeOutput>& outs) {
  return static_cast<std::size_t>(std::count_if(outs.begin(), outs.end(), [](const JudgeOutput& o) { return o.valid; }));
}

}  // namespace detail

/// Runs the four baseline aggregators over every item with >= 2 valid judge
/// outputs and feeds each method's records through metric_suite.
inline AggregateSummary cmd_aggregate(const RunConfig& cfg) {
  cfg.validate();
  detail::ensure_dir(cfg.out_dir);
  auto items = detail::require_items(cfg);
  auto records = attach_correctness(detail::require_records(cfg.records_file()), items);
  auto by_item = detail::outputs_by_item(records, cfg.aggregate_setting);

  AggregateSummary s;
  std::vector<JudgmentRecord> aggregated;
  for (auto method : kAllAggregationMethods) {
    std::vector<JudgmentRecord> recs;
    for (const auto& item : items) {
      auto it = by_item.find(item.item_id);
      if (it == by_item.end() || detail::count_valid(it->second) < 2) continue;
      recs.push_back(to_record(aggregate(it->second, method, item.item_id)));
    }
    recs = attach_correctness(std::move(recs), items);
    if (!recs.empty())
      s.methods.push_back({{std::string(to_string(method)), "Aggregated"}, metric_suite(recs, cfg.metrics)});
    aggregated.insert(aggregated.end(), recs.begin(), recs.end());
  }
  for (const auto& item : items) {
    auto it = by_item.find(item.item_id);
    if (it == by_item.end() || detail::count_valid(it->second) < 2)
      ++s.items_skipped;
    else
      ++s.items_aggregated;
  }
  if (s.items_aggregated == 0) s.warnings.push_back("no item had two or more valid judge outputs; nothing aggregated");
  write_records(cfg.out_dir / "aggregated.jsonl", aggregated);
  detail::write_metric_tables(cfg.out_dir, "aggregate_metrics", s.methods);
  return s;
}

// ---------------------------------------------------------------------------
// fuse

struct FuserRun {
  std::string fuser_id;
  std::size_t fused = 0;
  std::size_t invalid = 0;
  std::size_t skipped = 0;  // items without any valid judge output
  DisagreementStats disagreements;
  std::optional<MetricSuite> metrics;
};

struct FuseSummary {
  std::vector<FuserRun> fusers;
  std::vector<Failure> failures;
  std::vector<std::string> warnings;

  /// False when any fuser produced no valid decision at all.
  bool ok() const {
    for (const auto& f : fusers)
      if (f.fused == 0) return false;
    return !fusers.empty();
  }
};

inline json to_json(const FuseSummary& s) {
  json fusers = json::array();
  for (const auto& f : s.fusers) {
    json j = {{"fuser_id", f.fuser_id}, {"fused", f.fused}, {"invalid", f.invalid}, {"skipped", f.skipped},
              {"disagreements", to_json(f.disagreements)}};
    j["metrics"] = f.metrics ? to_json(*f.metrics) : json(nullptr);
    fusers.push_back(j);
  }
  return {{"command", "fuse"}, {"fusers", fusers}, {"failures", to_json(s.failures)},
          {"warnings", s.warnings}, {"ok", s.ok()}};
}

inline std::string disagreements_csv(const std::vector<FuserRun>& runs) {
  std::string out = "fuser_id,total,correct,incorrect,both_wrong\n";
  for (const auto& r : runs)
    out += fmt::csv_field(r.fuser_id) + "," + std::to_string(r.disagreements.total) + "," +
           std::to_string(r.disagreements.correct_disagreements) + "," +
           std::to_string(r.disagreements.incorrect_disagreements) + "," +
           std::to_string(r.disagreements.both_wrong_disagreements) + "\n";
  return out;
}

inline FuseSummary cmd_fuse(const RunConfig& cfg, const BackendFactory& factory = default_backend_factory()) {
  cfg.validate();
  if (cfg.fusers.empty()) throw ConfigError("config names no fuser");
  detail::ensure_dir(cfg.out_dir);
  auto items = detail::require_items(cfg);
  auto records = attach_correctness(detail::require_records(cfg.records_file()), items);
  auto by_item = detail::outputs_by_item(records, cfg.fuse_setting);

  std::vector<std::string> roster;
  for (const auto& j : cfg.judges) roster.push_back(j.id);

  FuseSummary s;
  std::vector<JudgmentRecord> fused_records;
  std::vector<detail::GroupMetrics> metric_rows;
  std::map<std::string, DisagreementStats> chart;
  for (const auto& fspec : cfg.fusers) {
    auto backend = factory(fspec.id, fspec.backend);
    const auto& order = fspec.judges.empty() ? roster : fspec.judges;

    std::vector<const PairwiseItem*> work;
    std::vector<std::vector<JudgeOutput>> inputs;
    FuserRun run;
    run.fuser_id = fspec.id;
    for (const auto& item : items) {
      auto it = by_item.find(item.item_id);
      if (it == by_item.end()) {
        ++run.skipped;
        continue;
      }
      std::vector<JudgeOutput> ordered;
      if (order.empty()) {
        ordered = it->second;
      } else {
        for (const auto& jid : order)
          for (const auto& o : it->second)
            if (o.judge_id == jid) ordered.push_back(o);
      }
      if (detail::count_valid(ordered) == 0) {
        ++run.skipped;
        continue;
      }
      for (const auto& o : ordered)
        if (!o.valid) s.warnings.push_back("fuser " + fspec.id + ": omitted invalid output of " + o.judge_id + " on " + item.item_id);
      work.push_back(&item);
      inputs.push_back(std::move(ordered));
    }

    auto outcomes = run_bounded(work.size(), backend->max_concurrency(), [&](std::size_t i) {
      auto d = fuse(*work[i], inputs[i], *backend, cfg.fuser_config);
      d.fuser_id = fspec.id;
      return d;
    });
    std::vector<FusedDecision> decisions;
    OutputsByItem judged;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
      if (!outcomes[i].ok()) {
        try {
          std::rethrow_exception(outcomes[i].error);
        } catch (const std::exception& e) {
          s.failures.push_back({work[i]->item_id, fspec.id, e.what()});
        }
        continue;
      }
      const auto& d = *outcomes[i].value;
      (d.valid ? run.fused : run.invalid)++;
      decisions.push_back(d);
      judged[d.item_id] = inputs[i];
    }

    auto recs = std::vector<JudgmentRecord>();
    for (const auto& d : decisions) recs.push_back(to_record(d));
    recs = attach_correctness(std::move(recs), items);
    if (run.fused > 0) {
      run.metrics = metric_suite(recs, cfg.metrics);
      metric_rows.push_back({{fspec.id, "Fused"}, *run.metrics});
    } else {
      s.warnings.push_back("fuser " + fspec.id + " produced no valid decision");
    }
    run.disagreements = disagreement_report(decisions, judged, items);
    chart[fspec.id] = run.disagreements;
    fused_records.insert(fused_records.end(), recs.begin(), recs.end());
    s.fusers.push_back(std::move(run));
  }

  write_records(cfg.out_dir / "fused_records.jsonl", fused_records);
  detail::write_metric_tables(cfg.out_dir, "fused_metrics", metric_rows);
  write_text_file(cfg.out_dir / "disagreements.csv", disagreements_csv(s.fusers));
  json dj = json::object();
  for (const auto& r : s.fusers) dj[r.fuser_id] = to_json(r.disagreements);
  write_text_file(cfg.out_dir / "disagreements.json", dj.dump(2) + "\n");
  auto bars = disagreement_chart_data(chart);
  write_text_file(cfg.out_dir / "disagreement_chart.csv", to_csv(bars));
  write_text_file(cfg.out_dir / "disagreement_chart.json", to_json(bars).dump(2) + "\n");
  return s;
}

// ---------------------------------------------------------------------------
// simulate

struct SimulationCheck {
  std::string judge_id;
  std::string description;  // e.g. "ECE < 0.02" or "ECE ≈ 0.75"
  double observed = 0.0;
  double expected = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  std::string line() const {
    return judge_id + ": " + description + ": " + (pass ? "PASS" : "FAIL") + " (ece=" + fmt::fixed(observed, 4) + ")";
  }
};

struct SimulateSummary {
  std::vector<SimulationCheck> checks;
  std::vector<detail::GroupMetrics> groups;

  bool ok() const {
    return std::all_of(checks.begin(), checks.end(), [](const SimulationCheck& c) { return c.pass; });
  }
};

inline json to_json(const SimulateSummary& s) {
  json checks = json::array();
  for (const auto& c : s.checks)
    checks.push_back({{"judge_id", c.judge_id}, {"check", c.description}, {"observed", c.observed},
                      {"expected", c.expected}, {"tolerance", c.tolerance}, {"pass", c.pass}});
  return {{"command", "simulate"}, {"checks", checks}, {"ok", s.ok()}};
}

/// Population ECE of a judge whose confidence ~ Beta(a, b) independently of
/// correctness with rate `accuracy`: sum over bins of P(bin) |accuracy - E[c | bin]|.
/// Midpoint quadrature, which stays off the singular endpoints when a or b < 1.
inline double expected_ece_beta(double a, double b, double accuracy, std::size_t bins) {
  const double log_norm = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  constexpr std::size_t kSteps = 20000;
  double total = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double lo = static_cast<double>(i) / static_cast<double>(bins);
    const double hi = static_cast<double>(i + 1) / static_cast<double>(bins);
    const double h = (hi - lo) / kSteps;
    double mass = 0.0;
    double first = 0.0;
    for (std::size_t k = 0; k < kSteps; ++k) {
      const double c = lo + (static_cast<double>(k) + 0.5) * h;
      const double f = std::exp(log_norm + (a - 1) * std::log(c) + (b - 1) * std::log1p(-c));
      mass += f * h;
      first += c * f * h;
    }
    if (mass > 0) total += mass * std::abs(accuracy - first / mass);
  }
  return total;
}

/// Analytic expectation for a profile's ECE and the tolerance it is checked at.
inline SimulationCheck expectation_for(const SyntheticJudgeProfile& p, std::size_t bins) {
  SimulationCheck c;
  c.judge_id = p.judge_id;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, CalibratedConfidence>) {
          c.expected = 0.0;
          c.tolerance = 0.02;
          c.description = "ECE < 0.02";
        } else if constexpr (std::is_same_v<M, ConstantConfidence>) {
          c.expected = std::abs(p.true_accuracy - m.c);
          c.tolerance = 0.01;
          c.description = "ECE ≈ " + fmt::fixed(c.expected, 2);
        } else {
          c.expected = expected_ece_beta(m.a, m.b, p.true_accuracy, bins);
          c.tolerance = 0.02;
          c.description = "ECE ≈ " + fmt::fixed(c.expected, 2);
        }
      },
      p.confidence_model);
  return c;
}

inline std::vector<SyntheticJudgeProfile> default_simulation_profiles(std::uint64_t seed) {
  return {SyntheticJudgeProfile{"calibrated", 0.5, CalibratedConfidence{}, derive_seed(seed, 1000), Setting::SC},
          SyntheticJudgeProfile{"overconfident", 0.2, ConstantConfidence{0.95}, derive_seed(seed, 1001), Setting::SC}};
}

inline SimulateSummary cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  if (cfg.simulate.n_items == 0) throw ParameterError("simulate.n_items must be >= 1");
  detail::ensure_dir(cfg.out_dir);
  auto profiles = cfg.simulate.profiles.empty() ? default_simulation_profiles(cfg.seed) : cfg.simulate.profiles;
  auto items = make_synthetic_items(cfg.simulate.n_items, cfg.seed);

  SimulateSummary s;
  std::vector<JudgmentRecord> all;
  for (const auto& p : profiles) {
    auto recs = synthetic_judge_run(p, items);
    auto suite = metric_suite(recs, cfg.metrics);
    auto check = expectation_for(p, cfg.metrics.bins);
    check.observed = suite.ece;
    check.pass = std::holds_alternative<CalibratedConfidence>(p.confidence_model)
                     ? suite.ece < check.tolerance
                     : std::abs(suite.ece - check.expected) <= check.tolerance;
    s.checks.push_back(check);
    s.groups.push_back({{p.judge_id, std::string(to_string(p.setting))}, suite});
    all.insert(all.end(), recs.begin(), recs.end());
  }
  write_items(cfg.out_dir / "simulated_items.jsonl", items);
  write_records(cfg.out_dir / "simulated_records.jsonl", all);
  detail::write_metric_tables(cfg.out_dir, "simulate_metrics", s.groups);
  std::string lines;
  for (const auto& c : s.checks) lines += c.line() + "\n";
  write_text_file(cfg.out_dir / "simulate_summary.txt", lines);
  return s;
}

// ---------------------------------------------------------------------------
// report

struct ReportSummary {
  std::vector<std::filesystem::path> inputs;
  MetricsSummary metrics;
  std::size_t fusers_charted = 0;
};

inline json to_json(const ReportSummary& s) {
  json ins = json::array();
  for (const auto& p : s.inputs) ins.push_back(p.string());
  return {{"command", "report"}, {"inputs", ins}, {"metrics", to_json(s.metrics)}, {"fusers_charted", s.fusers_charted}};
}

/// Re-renders tables and diagrams from the record files already in the output
/// directory, without issuing any backend request.
inline ReportSummary cmd_report(const RunConfig& cfg) {
  cfg.validate();
  detail::ensure_dir(cfg.out_dir);
  ReportSummary s;
  std::vector<JudgmentRecord> all;
  for (const auto& p : {cfg.records_file(), cfg.out_dir / "aggregated.jsonl", cfg.out_dir / "fused_records.jsonl"}) {
    if (!std::filesystem::exists(p)) continue;
    auto recs = load_records(p);
    all.insert(all.end(), recs.begin(), recs.end());
    s.inputs.push_back(p);
  }
  if (s.inputs.empty()) throw ConfigError("no record files found under " + cfg.out_dir.string());
  all = detail::link_to_items(std::move(all), cfg);
  s.metrics = detail::metrics_for(all, cfg, "report");

  const auto dpath = cfg.out_dir / "disagreements.json";
  if (std::filesystem::exists(dpath)) {
    std::ifstream in(dpath, std::ios::binary);
    auto j = json::parse(in);
    std::map<std::string, DisagreementStats> stats;
    for (auto it = j.begin(); it != j.end(); ++it)
      stats[it.key()] = DisagreementStats{it->at("total").get<std::size_t>(),
                                          it->at("correct_disagreements").get<std::size_t>(),
                                          it->at("incorrect_disagreements").get<std::size_t>(),
                                          it->at("both_wrong_disagreements").get<std::size_t>()};
    auto bars = disagreement_chart_data(stats);
    write_text_file(cfg.out_dir / "disagreement_chart.csv", to_csv(bars));
    write_text_file(cfg.out_dir / "disagreement_chart.json", to_json(bars).dump(2) + "\n");
    s.fusers_charted = bars.size();
  }
  return s;
}

}  // namespace judgecal
