#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "dialdiv/errors.hpp"
#include "dialdiv/experiment.hpp"
#include "fixtures.hpp"

using namespace dialdiv;
using namespace dialdiv::experiment;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

ExperimentConfig small(const std::string& name) {
  auto cfg = canned(name, fixtures::corpus_dir());
  cfg.trials = 2;
  cfg.case_limit = 2;
  cfg.max_turns = 6;
  return cfg;
}

}  // namespace

TEST(Experiment, CannedConfigsValidate) {
  for (const auto& n : canned_names()) {
    auto cfg = canned(n, fixtures::corpus_dir());
    EXPECT_NO_THROW(cfg.validate()) << n;
    EXPECT_FALSE(cfg.conditions.empty()) << n;
  }
  EXPECT_THROW(canned("nope", fixtures::corpus_dir()), Error);
}

TEST(Experiment, CannedContents) {
  auto sweep = canned("lambda_sweep", fixtures::corpus_dir());
  ASSERT_EQ(sweep.conditions.size(), lambda_grid().size());
  EXPECT_EQ(sweep.conditions.back().lambda, 1.0);
  auto order = canned("block_order", fixtures::corpus_dir());
  std::vector<std::string> orders;
  for (const auto& c : order.conditions) orders.push_back(c.order);
  EXPECT_EQ(orders, (std::vector<std::string>{"bpmec", "bmepc", "bmecp", "cepmb", "cempb"}));
  auto ro = canned("retain_one_grid", fixtures::corpus_dir());
  EXPECT_EQ(ro.conditions.size(), 10u);
  auto ex = canned("exclusiveness", fixtures::corpus_dir());
  EXPECT_EQ(ex.comparisons.size(), 4u);
}

TEST(Experiment, ConfigJsonRoundTrip) {
  for (const auto& n : canned_names()) {
    auto cfg = canned(n, fixtures::corpus_dir());
    auto back = config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back).dump(), to_json(cfg).dump()) << n;
  }
}

TEST(Experiment, ValidationFailures) {
  auto cfg = small("block_ablations");
  cfg.trials = 1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small("block_ablations");
  cfg.conditions.push_back(cfg.conditions.front());
  EXPECT_THROW(cfg.validate(), Error);
  cfg = small("block_ablations");
  cfg.comparisons = {{"Full", "Nope"}};
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Experiment, RetainOneSpec) {
  auto r = parse_retain_one("m:Hi");
  EXPECT_EQ(r.block, prompt::BlockId::kMemory);
  EXPECT_EQ(r.which, pruning::Which::kHi);
  EXPECT_EQ(parse_retain_one("e:Lo").which, pruning::Which::kLo);
  EXPECT_THROW(parse_retain_one("c:Hi"), Error);
  EXPECT_THROW(parse_retain_one("m"), Error);
}

TEST(Experiment, TrialSeedIgnoresLambda) {
  auto cfg = small("lambda_sweep");
  const auto& cs = cfg.conditions;
  EXPECT_EQ(trial_seed(cfg, cs[1], "case_01", 0), trial_seed(cfg, cs[5], "case_01", 0));
  EXPECT_NE(trial_seed(cfg, cs[1], "case_01", 0), trial_seed(cfg, cs[1], "case_01", 1));
  EXPECT_NE(trial_seed(cfg, cs[1], "case_01", 0), trial_seed(cfg, cs[1], "case_02", 0));
}

TEST(Experiment, PrepareCaseAppliesRenameAndLength) {
  auto c = corpus::load_corpus(fixtures::corpus_dir()).front();
  Condition cond;
  cond.rename = {"Harry Potter", "Severus Snape"};
  auto r = prepare_case(c, cond, 1);
  EXPECT_EQ(r.agent_a.name, "Harry Potter");
  Condition len;
  len.block_length = 250;
  len.block_length_memory = false;
  auto p = prepare_case(c, len, 1);
  EXPECT_EQ(p.agent_a.memory_items, c.agent_a.memory_items);
  EXPECT_EQ(p.variant, "bln250");
}

TEST(Experiment, SmallRunWritesOutputsDeterministically) {
  backend::MockBackend be;
  fixtures::TempDir out("exp");
  auto cfg = small("block_ablations");
  auto s1 = run_experiment(cfg, {&be, nullptr}, out.path / "a");
  auto s2 = run_experiment(cfg, {&be, nullptr}, out.path / "b");
  const auto d1 = out.path / "a" / "block_ablations";
  const auto d2 = out.path / "b" / "block_ablations";
  for (const char* f : {"metrics.csv", "config.json", "failures.json"}) {
    ASSERT_TRUE(std::filesystem::exists(d1 / f)) << f;
    EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
  }
  const auto id = corpus::load_corpus(fixtures::corpus_dir()).front().id;
  auto t = transcript_path(d1, "RMm", id, 1);
  ASSERT_TRUE(std::filesystem::exists(t));
  EXPECT_EQ(slurp(t), slurp(transcript_path(d2, "RMm", id, 1)));
  // 6 conditions x (2 cases + ALL)
  EXPECT_EQ(s1.rows.size(), 18u);
  EXPECT_TRUE(s1.fully_failed_conditions.empty());

  auto tr = dialogue::read_transcript(t);
  for (const auto& turn : tr.turns)
    for (const auto& id : turn.prompt_unit_ids) EXPECT_NE(id.rfind("m.", 0), 0u) << id;

  auto again = metrics_from_run(d1, be);
  ASSERT_EQ(again.size(), s1.rows.size());
  EXPECT_EQ(metrics::csv_row(again[0]), metrics::csv_row(s1.rows[0]));
}

TEST(Experiment, ExclusivenessAndPerUtteranceOutputs) {
  backend::MockBackend be;
  fixtures::TempDir out("exp2");
  auto cfg = small("exclusiveness");
  cfg.conditions.resize(2);
  cfg.comparisons = {{"Full_s0", "Full_s1"}};
  cfg.per_utterance = true;
  run_experiment(cfg, {&be, nullptr}, out.path);
  EXPECT_TRUE(std::filesystem::exists(out.path / "exclusiveness" / "exclusiveness.csv"));
  EXPECT_TRUE(std::filesystem::exists(out.path / "exclusiveness" / "per_utterance.csv"));
}

TEST(Experiment, FailedConditionReported) {
  backend::MockBackend be;
  be.add_rule({"", {"x"}, [](const backend::GenerationRequest&, std::size_t) {
                 return std::map<std::string, AttentionTensor>{};
               }});
  fixtures::TempDir out("exp3");
  auto cfg = small("lambda_sweep");
  cfg.conditions = {cfg.conditions[2]};
  auto s = run_experiment(cfg, {&be, nullptr}, out.path);
  EXPECT_EQ(s.fully_failed_conditions, std::vector<std::string>{cfg.conditions[0].label});
  EXPECT_EQ(s.failures.size(), 4u);
}
