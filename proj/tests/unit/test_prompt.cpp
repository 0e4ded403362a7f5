#include <gtest/gtest.h>

#include "dialdiv/errors.hpp"
#include "dialdiv/prompt.hpp"
#include "fixtures.hpp"

using namespace dialdiv;
using namespace dialdiv::prompt;

namespace {

std::vector<BlockId> seq(const Prompt& p) { return p.block_sequence(); }

}  // namespace

TEST(Prompt, DefaultLayoutBlockOrder) {
  auto c = fixtures::small_case();
  auto p = assemble(c, {}, corpus::AgentId::kA, PromptLayout{});
  std::vector<BlockId> want = {BlockId::kOpening,     BlockId::kBasicInfo,
                               BlockId::kPreviousDialogues, BlockId::kMemory,
                               BlockId::kEnvironment, BlockId::kCurrentDialogue,
                               BlockId::kTaskDescription, BlockId::kOutputInstruction};
  EXPECT_EQ(seq(p), want);
  EXPECT_EQ(removable_units(p).size(), 5u + 1u + 30u + 2u);
  EXPECT_EQ(p.find("c.0")->content, Template::builtin().empty_dialogue);
  EXPECT_FALSE(p.find("c.0")->removable);
  EXPECT_NE(p.text().find("Arthur Burton"), std::string::npos);
}

TEST(Prompt, SpeakerSwapUsesOwnProfile) {
  auto c = fixtures::small_case();
  auto p = assemble(c, {{"Arthur Burton", "Hi."}}, corpus::AgentId::kB, PromptLayout{});
  EXPECT_EQ(p.find("m.0")->content, c.agent_b.memory_items[0]);
  EXPECT_EQ(p.find("c.0")->content, "Arthur Burton: Hi.");
}

TEST(Prompt, OrderAndAblation) {
  auto c = fixtures::small_case();
  auto p = assemble(c, {}, corpus::AgentId::kA, PromptLayout::parse("cebpm", "bm"));
  std::vector<BlockId> want = {BlockId::kOpening, BlockId::kCurrentDialogue, BlockId::kEnvironment,
                               BlockId::kPreviousDialogues, BlockId::kTaskDescription,
                               BlockId::kOutputInstruction};
  EXPECT_EQ(seq(p), want);
  EXPECT_EQ(PromptLayout::parse("bpmec", "mb").ablation_letters(), "bm");
}

TEST(Prompt, InvalidLayouts) {
  EXPECT_THROW(PromptLayout::parse("bpme"), InvalidLayout);
  EXPECT_THROW(PromptLayout::parse("bbpmec"), InvalidLayout);
  EXPECT_THROW(PromptLayout::parse("bpmecx"), InvalidLayout);
  EXPECT_THROW(PromptLayout::parse("bpmec", "c"), InvalidLayout);
}

TEST(Prompt, HumanNeedsBlockFollowsBasicInfo) {
  auto c = corpus::sample_human_needs(fixtures::small_case(), 3);
  auto p = assemble(c, {}, corpus::AgentId::kA, PromptLayout{});
  auto s = seq(p);
  ASSERT_GE(s.size(), 3u);
  EXPECT_EQ(s[1], BlockId::kBasicInfo);
  EXPECT_EQ(s[2], BlockId::kHumanNeeds);
}

TEST(Prompt, EmptyBlocksDropped) {
  auto c = fixtures::small_case();
  c.previous_dialogues.clear();
  auto p = assemble(c, {}, corpus::AgentId::kA, PromptLayout{});
  EXPECT_EQ(p.block(BlockId::kPreviousDialogues), nullptr);
  std::set<std::string> all;
  for (const auto* u : removable_units(p)) all.insert(u->id);
  auto empty = drop_empty_blocks(p.without_units(all));
  for (auto id : empty.block_sequence()) EXPECT_FALSE(is_ablatable(id));
  EXPECT_NE(empty.find("c.0"), nullptr);
}

TEST(Prompt, RemovingEverythingEqualsFullAblation) {
  auto c = fixtures::small_case();
  auto p = assemble(c, {}, corpus::AgentId::kA, PromptLayout{});
  std::set<std::string> all;
  for (const auto* u : removable_units(p)) all.insert(u->id);
  auto pruned = drop_empty_blocks(p.without_units(all));
  auto ablated = assemble(c, {}, corpus::AgentId::kA, PromptLayout::parse("bpmec", "bmpe"));
  EXPECT_TRUE(structurally_equal(pruned, ablated));
  EXPECT_EQ(pruned.text(), ablated.text());
}

TEST(Prompt, CharSpansCoverText) {
  auto c = fixtures::small_case();
  auto p = assemble(c, {}, corpus::AgentId::kA, PromptLayout{});
  auto text = p.text();
  for (const auto& [u, span] : p.char_spans())
    EXPECT_EQ(text.substr(span.begin, span.end - span.begin), u->content);
}

TEST(Prompt, AppendedInstruction) {
  auto c = fixtures::small_case();
  auto p = assemble(c, {}, corpus::AgentId::kA, PromptLayout{});
  auto q = p.with_appended_instruction("sequential", "extra");
  EXPECT_EQ(q.unit_ids().back(), "sequential");
  EXPECT_EQ(q.unit_ids().size(), p.unit_ids().size() + 1);
}

TEST(Prompt, ShippedTemplateMatchesBuiltin) {
  auto t = Template::load(fixtures::source_dir() / "templates" / "utterance_v1.json");
  EXPECT_EQ(t, Template::builtin());
}

TEST(Prompt, BlockWordStats) {
  auto c = fixtures::small_case();
  auto stats = block_word_stats({c});
  bool saw_memory = false;
  for (const auto& s : stats)
    if (s.block == BlockId::kMemory) {
      saw_memory = true;
      EXPECT_DOUBLE_EQ(s.mean_items, 30.0);
      EXPECT_DOUBLE_EQ(s.mean_words, 30.0 * 6.0);
    }
  EXPECT_TRUE(saw_memory);
}
