// judgecal: elicit, metrics, aggregate, fuse, simulate, report.

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

#include "judgecal/pipeline.hpp"

namespace {

struct GlobalFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::optional<std::size_t> bins;
  bool json = false;
};

/// Overrides go into the config document before parsing so that per-judge
/// seeds are derived from the overriding run seed.
judgecal::RunConfig load(const GlobalFlags& g) {
  judgecal::json doc = judgecal::json::object();
  std::filesystem::path base = ".";
  if (!g.config.empty()) {
    doc = judgecal::load_config_json(g.config);
    base = judgecal::config_base(g.config);
  }
  if (!doc.is_object()) throw judgecal::ConfigError("config must be a JSON object");
  if (g.seed) doc["seed"] = *g.seed;
  if (g.epsilon) doc["epsilon"] = *g.epsilon;
  if (g.bins) doc["bins"] = *g.bins;
  auto cfg = judgecal::parse_config(doc, base);
  // Records default to <out>/records.jsonl, so moving out_dir moves them too
  // unless the config pinned an explicit records path.
  if (!g.out.empty()) cfg.out_dir = g.out;
  return cfg;
}

void print_lines(const std::vector<std::string>& lines) {
  for (const auto& l : lines) std::cerr << "warning: " << l << "\n";
}

void print_failures(const std::vector<judgecal::Failure>& fs) {
  for (const auto& f : fs) std::cerr << "failed: " << f.source << " on " << f.item_id << ": " << f.error << "\n";
}

int emit(const GlobalFlags& g, const judgecal::json& summary, const std::string& text, bool ok) {
  if (g.json)
    std::cout << summary.dump(2) << "\n";
  else
    std::cout << text;
  return ok ? 0 : 1;
}

std::string table_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Calibration toolkit for pairwise LLM judges"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", g.out, "output directory (overrides config)");
  app.add_option("--seed", g.seed, "run seed (overrides config)");
  app.add_option("--epsilon", g.epsilon, "TH-Score interval width, (0, 0.5]");
  app.add_option("--bins", g.bins, "number of calibration bins")->check(CLI::PositiveNumber);
  app.add_flag("--json", g.json, "print a machine-readable summary on stdout");

  auto* elicit = app.add_subcommand("elicit", "collect judge decisions into records.jsonl");
  auto* metrics = app.add_subcommand("metrics", "calibration metrics per (judge, setting)");
  auto* aggregate = app.add_subcommand("aggregate", "baseline multi-judge voting");
  auto* fuse = app.add_subcommand("fuse", "fuse judge outputs with a fuser model");
  auto* simulate = app.add_subcommand("simulate", "synthetic judges checked against analytic ECE");
  auto* report = app.add_subcommand("report", "re-render tables and diagrams from existing records");
  for (auto* sub : {elicit, metrics, aggregate, fuse, simulate, report}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    const auto cfg = load(g);
    if (*elicit) {
      auto s = judgecal::cmd_elicit(cfg);
      print_failures(s.failures);
      std::string text = "new records: " + std::to_string(s.new_records) + ", skipped: " + std::to_string(s.skipped) +
                         ", failed: " + std::to_string(s.failures.size()) + "/" + std::to_string(s.attempted) + "\n";
      return emit(g, to_json(s), text, s.ok());
    }
    if (*metrics) {
      auto s = judgecal::cmd_metrics(cfg);
      print_lines(s.warnings);
      return emit(g, to_json(s), table_text(cfg.out_dir / "metrics.txt"), !s.groups.empty());
    }
    if (*aggregate) {
      auto s = judgecal::cmd_aggregate(cfg);
      print_lines(s.warnings);
      std::string text = table_text(cfg.out_dir / "aggregate_metrics.txt") + "aggregated items: " +
                         std::to_string(s.items_aggregated) + ", skipped: " + std::to_string(s.items_skipped) + "\n";
      return emit(g, to_json(s), text, s.items_aggregated > 0);
    }
    if (*fuse) {
      auto s = judgecal::cmd_fuse(cfg);
      print_lines(s.warnings);
      print_failures(s.failures);
      std::string text = table_text(cfg.out_dir / "fused_metrics.txt");
      for (const auto& f : s.fusers)
        text += f.fuser_id + ": fused " + std::to_string(f.fused) + ", invalid " + std::to_string(f.invalid) +
                ", disagreements " + std::to_string(f.disagreements.total) + " (+" +
                std::to_string(f.disagreements.correct_disagreements) + " / -" +
                std::to_string(f.disagreements.incorrect_disagreements) + ")\n";
      return emit(g, to_json(s), text, s.ok());
    }
    if (*simulate) {
      auto s = judgecal::cmd_simulate(cfg);
      std::string text;
      for (const auto& c : s.checks) text += c.line() + "\n";
      return emit(g, to_json(s), text, s.ok());
    }
    if (*report) {
      auto s = judgecal::cmd_report(cfg);
      print_lines(s.metrics.warnings);
      return emit(g, to_json(s), table_text(cfg.out_dir / "report.txt"), !s.metrics.groups.empty());
    }
  } catch (const judgecal::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (g.json) std::cout << judgecal::json{{"ok", false}, {"error", e.what()}}.dump(2) << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
