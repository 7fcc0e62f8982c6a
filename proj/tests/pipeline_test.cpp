#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "judgecal/pipeline.hpp"

using namespace judgecal;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto d = fs::temp_directory_path() / ("judgecal_pipeline_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<PairwiseItem> items(std::size_t n, const std::vector<Label>& gold = {}) {
  std::vector<PairwiseItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    PairwiseItem it;
    it.item_id = "q" + std::to_string(i + 1);
    it.question = "Question " + std::to_string(i + 1);
    it.answer_a = "first answer";
    it.answer_b = "second answer";
    it.gold_label = gold.empty() ? (i % 2 ? Label::B : Label::A) : gold[i];
    out.push_back(it);
  }
  return out;
}

std::string reply(Label l, int score) {
  return std::string(R"({"selected_output":")") + std::string(prompt_label(l)) + R"(","confidence_score":)" +
         std::to_string(score) + R"(,"explanation":"scripted"})";
}

RunConfig base_config(const fs::path& dir, const std::vector<PairwiseItem>& its) {
  write_items(dir / "items.jsonl", its);
  RunConfig c;
  c.items_path = dir / "items.jsonl";
  c.out_dir = dir / "out";
  return c;
}

JudgeSpec mock_judge(std::string id, std::vector<std::string> texts, Setting s = Setting::SC) {
  JudgeSpec j;
  j.id = std::move(id);
  j.setting = s;
  for (auto& t : texts) j.backend.script.push_back(ChatReply{std::move(t), std::nullopt});
  return j;
}

JudgmentRecord rec(std::string item, std::string judge, Label l, double c, Setting s = Setting::SC) {
  JudgmentRecord r;
  r.item_id = std::move(item);
  r.judge_id = std::move(judge);
  r.chosen = l;
  r.confidence = c;
  r.setting = s;
  return r;
}

/// Forwards to a mock owned by the test so its request log outlives the command.
class Forwarding : public Backend {
 public:
  explicit Forwarding(std::shared_ptr<MockBackend> m) : m_(std::move(m)) {}
  std::string id() const override { return m_->id(); }
  bool supports_logprobs() const override { return m_->supports_logprobs(); }
  ChatReply chat_complete(const ChatRequest& r) override { return m_->chat_complete(r); }

 private:
  std::shared_ptr<MockBackend> m_;
};

/// Factory that remembers every mock it hands out.
struct RecordingFactory {
  std::vector<std::shared_ptr<MockBackend>> made;
  BackendFactory get() {
    return [this](const std::string& id, const BackendSpec& spec) -> std::unique_ptr<Backend> {
      made.push_back(std::make_shared<MockBackend>(id, spec.script, spec.supports_logprobs));
      return std::make_unique<Forwarding>(made.back());
    };
  }
};

}  // namespace

TEST(Elicit, RecordsPerItemAndJudgeThenResume) {
  auto dir = scratch("elicit");
  auto its = items(3);
  auto cfg = base_config(dir, its);
  cfg.judges.push_back(mock_judge("alpha", {reply(Label::A, 90), reply(Label::B, 80), reply(Label::B, 70)}));
  cfg.judges.push_back(mock_judge("beta", {reply(Label::B, 60), reply(Label::B, 55), "no json here", "still none"}));
  auto s = cmd_elicit(cfg);
  EXPECT_EQ(s.new_records, 6u);
  EXPECT_EQ(s.attempted, 6u);
  EXPECT_TRUE(s.failures.empty());
  EXPECT_FALSE(s.live_backends);
  auto recs = load_records(cfg.records_file());
  ASSERT_EQ(recs.size(), 6u);
  EXPECT_EQ(recs[0].judge_id, "alpha");
  EXPECT_EQ(recs[0].item_id, "q1");
  EXPECT_TRUE(recs[0].correct);
  EXPECT_DOUBLE_EQ(recs[0].confidence, 0.9);
  EXPECT_FALSE(recs[5].valid);
  EXPECT_FALSE(recs[5].correct);
  EXPECT_EQ(recs[5].extra["invalid_reason"], "no-json");

  auto again = cmd_elicit(cfg);
  EXPECT_EQ(again.requests, 0u);
  EXPECT_EQ(again.new_records, 0u);
  EXPECT_EQ(again.skipped, 6u);
  EXPECT_EQ(load_records(cfg.records_file()).size(), 6u);
}

TEST(Elicit, LogpWithoutCapabilityFailsBeforeRequests) {
  auto dir = scratch("logp");
  auto cfg = base_config(dir, items(2));
  cfg.judges.push_back(mock_judge("sc", {reply(Label::A, 90), reply(Label::A, 90)}));
  cfg.judges.push_back(mock_judge("lp", {}, Setting::LogP));
  RecordingFactory f;
  EXPECT_THROW(cmd_elicit(cfg, f.get()), CapabilityError);
  for (const auto& m : f.made) EXPECT_TRUE(m->requests().empty());
  EXPECT_FALSE(fs::exists(cfg.records_file()));
}

TEST(Elicit, BackendFailuresReported) {
  auto dir = scratch("fail");
  auto cfg = base_config(dir, items(3));
  cfg.judges.push_back(mock_judge("short", {reply(Label::A, 90)}));
  auto s = cmd_elicit(cfg);
  EXPECT_EQ(s.new_records, 1u);
  EXPECT_EQ(s.failures.size(), 2u);
  EXPECT_FALSE(s.ok());
  EXPECT_EQ(s.failures[0].source, "short");
}

TEST(Elicit, SyntheticJudge) {
  auto dir = scratch("syn");
  auto cfg = base_config(dir, items(50));
  JudgeSpec j;
  j.id = "syn";
  j.backend.kind = BackendKind::Synthetic;
  j.backend.profile = SyntheticJudgeProfile{"ignored", 0.6, ConstantConfidence{0.7}, 3, Setting::SC};
  cfg.judges.push_back(j);
  auto s = cmd_elicit(cfg);
  EXPECT_EQ(s.new_records, 50u);
  EXPECT_EQ(s.requests, 0u);
  auto recs = load_records(cfg.records_file());
  EXPECT_EQ(recs[0].judge_id, "syn");
}

TEST(Metrics, OverconfidentJudgeAndSettingsGroups) {
  auto dir = scratch("metrics");
  auto its = items(20, std::vector<Label>(20, Label::A));
  auto cfg = base_config(dir, its);
  std::vector<JudgmentRecord> rs;
  for (int i = 0; i < 20; ++i) {
    const auto id = "q" + std::to_string(i + 1);
    rs.push_back(rec(id, "over", i < 4 ? Label::A : Label::B, 0.95));
    rs.push_back(rec(id, "over", Label::A, 0.85, Setting::MP));
  }
  fs::create_directories(cfg.out_dir);
  write_records(cfg.records_file(), rs);
  auto s = cmd_metrics(cfg);
  ASSERT_EQ(s.groups.size(), 2u);
  const auto& sc = s.groups[1];
  EXPECT_EQ(sc.key, (detail::GroupKey{"over", "SC"}));
  EXPECT_NEAR(sc.suite.ece * 100, 75.0, 1e-9);
  EXPECT_NEAR(sc.suite.acc, 0.2, 1e-12);
  EXPECT_EQ(s.groups[0].key.second, "MP");
  EXPECT_NEAR(s.groups[0].suite.ece, 0.15, 1e-12);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "reliability_over_SC.svg"));
  EXPECT_TRUE(fs::exists(cfg.out_dir / "reliability_over_MP.json"));
  auto csv = slurp(cfg.out_dir / "metrics.csv");
  EXPECT_NE(csv.find("over (SC),20.00,75.00"), std::string::npos);
  EXPECT_NE(csv.find("over (MP),100.00,15.00"), std::string::npos);

  auto wider = cfg;
  wider.metrics.th.epsilon = 0.2;
  auto s2 = cmd_metrics(wider);
  for (std::size_t g = 0; g < 2; ++g) {
    const auto& a = s.groups[g].suite;
    const auto& b = s2.groups[g].suite;
    EXPECT_EQ(a.acc, b.acc);
    EXPECT_EQ(a.ece, b.ece);
    EXPECT_EQ(a.ace, b.ace);
    EXPECT_EQ(a.mce, b.mce);
    EXPECT_EQ(a.brier, b.brier);
    EXPECT_EQ(a.nll, b.nll);
  }
  EXPECT_NE(s.groups[0].suite.th.score, s2.groups[0].suite.th.score);
}

TEST(Metrics, AllInvalidGroupWarns) {
  auto dir = scratch("metrics_invalid");
  auto cfg = base_config(dir, items(2));
  fs::create_directories(cfg.out_dir);
  std::vector<JudgmentRecord> rs{make_invalid_record("q1", "bad", Setting::SC, "no-json"),
                                 rec("q1", "good", Label::A, 0.8)};
  write_records(cfg.records_file(), rs);
  auto s = cmd_metrics(cfg);
  EXPECT_EQ(s.groups.size(), 1u);
  EXPECT_EQ(s.warnings.size(), 1u);
}

TEST(Metrics, MissingRecordsFile) {
  auto dir = scratch("metrics_missing");
  auto cfg = base_config(dir, items(2));
  EXPECT_THROW(cmd_metrics(cfg), Error);
}

TEST(Aggregate, BaselinesOverRecords) {
  auto dir = scratch("aggregate");
  auto cfg = base_config(dir, items(3, {Label::B, Label::A, Label::A}));
  fs::create_directories(cfg.out_dir);
  std::vector<JudgmentRecord> rs{rec("q1", "j1", Label::A, 0.9), rec("q1", "j2", Label::A, 0.6),
                                 rec("q1", "j3", Label::B, 0.95), rec("q2", "j1", Label::A, 0.7),
                                 rec("q2", "j2", Label::A, 0.8), rec("q3", "j1", Label::B, 0.9)};
  write_records(cfg.records_file(), rs);
  auto s = cmd_aggregate(cfg);
  EXPECT_EQ(s.items_aggregated, 2u);
  EXPECT_EQ(s.items_skipped, 1u);
  ASSERT_EQ(s.methods.size(), 4u);
  auto out = load_records(cfg.out_dir / "aggregated.jsonl");
  ASSERT_EQ(out.size(), 8u);
  std::map<std::string, Label> q1;
  for (const auto& r : out) {
    EXPECT_EQ(r.setting, Setting::Aggregated);
    if (r.item_id == "q1") q1[r.judge_id] = r.chosen;
    if (r.item_id == "q2") {
      EXPECT_EQ(r.chosen, Label::A);
      EXPECT_EQ(r.confidence, 1.0);
    }
  }
  EXPECT_EQ(q1["Majority"], Label::A);
  EXPECT_EQ(q1["ConfWeighted"], Label::A);
  EXPECT_EQ(q1["SqrtConfWeighted"], Label::A);
  EXPECT_EQ(q1["EntropyWeighted"], Label::B);
  EXPECT_TRUE(fs::exists(cfg.out_dir / "aggregate_metrics.csv"));
}

TEST(Aggregate, SingleJudgeRunsSkipEverything) {
  auto dir = scratch("aggregate_single");
  auto cfg = base_config(dir, items(2));
  fs::create_directories(cfg.out_dir);
  write_records(cfg.records_file(), std::vector<JudgmentRecord>{rec("q1", "j1", Label::A, 0.9), rec("q2", "j1", Label::A, 0.8)});
  auto s = cmd_aggregate(cfg);
  EXPECT_EQ(s.items_aggregated, 0u);
  EXPECT_EQ(s.items_skipped, 2u);
  EXPECT_FALSE(s.warnings.empty());
}

namespace {

/// Four items; the fuser overturns the majority on q1 and q2 (correctly) and
/// agrees with it on q3 and q4.
RunConfig fuse_setup(const fs::path& dir, std::vector<std::string> fuser_script) {
  auto cfg = base_config(dir, items(4, {Label::B, Label::A, Label::A, Label::B}));
  fs::create_directories(cfg.out_dir);
  std::vector<JudgmentRecord> rs{
      rec("q1", "j1", Label::A, 0.9), rec("q1", "j2", Label::A, 0.6), rec("q1", "j3", Label::B, 0.95),
      rec("q2", "j1", Label::B, 0.7), rec("q2", "j2", Label::B, 0.8), rec("q2", "j3", Label::A, 0.6),
      rec("q3", "j1", Label::A, 0.7), rec("q3", "j2", Label::A, 0.8), rec("q3", "j3", Label::A, 0.9),
      rec("q4", "j1", Label::B, 0.7), rec("q4", "j2", Label::A, 0.55), rec("q4", "j3", Label::B, 0.9)};
  rs[4] = make_invalid_record("q2", "j2", Setting::SC, "no-json");
  rs[4].chosen = Label::B;
  write_records(cfg.records_file(), rs);
  for (const char* id : {"j1", "j2", "j3"}) cfg.judges.push_back(mock_judge(id, {}));
  FuserSpec f;
  f.id = "fuser";
  for (auto& t : fuser_script) f.backend.script.push_back(ChatReply{std::move(t), std::nullopt});
  cfg.fusers.push_back(f);
  return cfg;
}

}  // namespace

TEST(Fuse, DecisionsDisagreementsAndPrompts) {
  auto dir = scratch("fuse");
  auto cfg = fuse_setup(dir, {reply(Label::B, 88), reply(Label::A, 75), reply(Label::A, 90), reply(Label::B, 80)});
  RecordingFactory f;
  auto s = cmd_fuse(cfg, f.get());
  ASSERT_EQ(s.fusers.size(), 1u);
  const auto& run = s.fusers[0];
  EXPECT_EQ(run.fused, 4u);
  EXPECT_TRUE(s.ok());
  // q2 has only j1 and j3 valid, a 1-1 split that majority breaks towards j1 (0.7 > 0.6).
  EXPECT_EQ(run.disagreements.total, 2u);
  EXPECT_EQ(run.disagreements.correct_disagreements, 2u);
  EXPECT_EQ(run.disagreements.incorrect_disagreements, 0u);
  ASSERT_TRUE(run.metrics);
  EXPECT_DOUBLE_EQ(run.metrics->acc, 1.0);
  EXPECT_EQ(slurp(cfg.out_dir / "disagreements.csv"), "fuser_id,total,correct,incorrect,both_wrong\nfuser,2,2,0,0\n");
  EXPECT_EQ(slurp(cfg.out_dir / "disagreement_chart.csv"), "fuser_id,positive,negative\nfuser,2,0\n");

  ASSERT_EQ(f.made.size(), 1u);
  const auto& reqs = f.made[0]->requests();
  ASSERT_EQ(reqs.size(), 4u);
  auto its = load_items(cfg.items_path);
  auto by_item = detail::outputs_by_item(load_records(cfg.records_file()), Setting::SC);
  EXPECT_EQ(reqs[0].prompt, build_fuser_prompt(its[0], by_item["q1"]).text);
  EXPECT_EQ(reqs[1].prompt.find("JSON Output 3"), std::string::npos);  // invalid j2 output omitted

  auto first = slurp(cfg.out_dir / "fused_records.jsonl");
  auto again = cmd_fuse(cfg);
  EXPECT_EQ(slurp(cfg.out_dir / "fused_records.jsonl"), first);
  EXPECT_EQ(again.fusers[0].disagreements.total, 2u);
}

TEST(Fuse, AllInvalidFuserFails) {
  auto dir = scratch("fuse_invalid");
  auto cfg = fuse_setup(dir, std::vector<std::string>(8, "I cannot decide."));
  auto s = cmd_fuse(cfg);
  EXPECT_EQ(s.fusers[0].fused, 0u);
  EXPECT_EQ(s.fusers[0].invalid, 4u);
  EXPECT_FALSE(s.ok());
  EXPECT_FALSE(s.fusers[0].metrics);
}

TEST(Fuse, NoFuserConfigured) {
  auto dir = scratch("fuse_none");
  auto cfg = fuse_setup(dir, {});
  cfg.fusers.clear();
  EXPECT_THROW(cmd_fuse(cfg), ConfigError);
}

TEST(Simulate, DefaultProfilesPassAndAreDeterministic) {
  auto dir = scratch("simulate");
  RunConfig cfg;
  cfg.out_dir = dir / "a";
  cfg.seed = 5;
  auto s = cmd_simulate(cfg);
  ASSERT_EQ(s.checks.size(), 2u);
  EXPECT_TRUE(s.ok());
  EXPECT_LT(s.checks[0].observed, 0.02);
  EXPECT_NEAR(s.checks[1].observed, 0.75, 0.01);
  auto other = cfg;
  other.out_dir = dir / "b";
  cmd_simulate(other);
  for (const char* f : {"simulated_records.jsonl", "simulate_metrics.csv", "simulate_summary.txt"})
    EXPECT_EQ(slurp(cfg.out_dir / f), slurp(other.out_dir / f)) << f;
  auto reseeded = cfg;
  reseeded.out_dir = dir / "c";
  reseeded.seed = 6;
  cmd_simulate(reseeded);
  EXPECT_NE(slurp(cfg.out_dir / "simulated_records.jsonl"), slurp(reseeded.out_dir / "simulated_records.jsonl"));
}

TEST(Simulate, BetaProfileExpectation) {
  auto dir = scratch("simulate_beta");
  RunConfig cfg;
  cfg.out_dir = dir;
  cfg.simulate.n_items = 20000;
  cfg.simulate.profiles.push_back({"beta", 0.5, BetaNoiseConfidence{2, 2}, 8, Setting::SC});
  auto s = cmd_simulate(cfg);
  EXPECT_TRUE(s.ok()) << s.checks[0].line();
  // Beta(2,2) is symmetric around 0.5 and correctness is independent, so the population ECE
  // is E|c - 0.5| = 3/16 up to binning.
  EXPECT_NEAR(expected_ece_beta(2, 2, 0.5, 10000), 0.1875, 1e-4);
}

TEST(Report, RerendersFromOutputs) {
  auto dir = scratch("report");
  auto cfg = fuse_setup(dir, {reply(Label::B, 88), reply(Label::A, 75), reply(Label::A, 90), reply(Label::B, 80)});
  cmd_aggregate(cfg);
  cmd_fuse(cfg);
  auto s = cmd_report(cfg);
  EXPECT_EQ(s.inputs.size(), 3u);
  EXPECT_EQ(s.fusers_charted, 1u);
  auto csv = slurp(cfg.out_dir / "report.csv");
  EXPECT_NE(csv.find("fuser (Fused)"), std::string::npos);
  EXPECT_NE(csv.find("Majority (Aggregated)"), std::string::npos);
  EXPECT_NE(csv.find("j1 (SC)"), std::string::npos);
}

TEST(Report, NothingToReport) {
  auto dir = scratch("report_empty");
  RunConfig cfg;
  cfg.out_dir = dir;
  EXPECT_THROW(cmd_report(cfg), ConfigError);
}
