#pragma once

// Modular utterance prompt: an ordered list of blocks, each a list of units.
// Units are either "items" (pieces of information) or "texts" (headers and
// instructions). Only items of the content blocks b/h/m/p/e are removable.

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dialdiv/corpus.hpp"

namespace dialdiv::prompt {

enum class UnitKind { kItem, kText };

enum class BlockId {
  kBasicInfo,          // b
  kHumanNeeds,         // h
  kMemory,             // m
  kPreviousDialogues,  // p
  kEnvironment,        // e
  kCurrentDialogue,    // c
  kOpening,
  kTaskDescription,
  kOutputInstruction,
};

enum class BlockKind { kFixed, kFixedInDialogue, kTrajectory, kContext, kScaffold };

/// Letter used in order strings and ablation masks ('b','h','m','p','e','c'); '\0' for scaffold.
char letter(BlockId id);
std::optional<BlockId> block_from_letter(char c);
std::string_view to_string(BlockId id);
BlockKind kind_of(BlockId id);
bool is_ablatable(BlockId id);
bool is_scaffold(BlockId id);

struct TokenSpan {
  std::size_t start = 0;  // inclusive
  std::size_t end = 0;    // exclusive
  std::size_t size() const { return end - start; }
  bool operator==(const TokenSpan&) const = default;
};

struct Unit {
  std::string id;
  UnitKind kind = UnitKind::kText;
  std::string content;
  BlockId block = BlockId::kOpening;
  bool removable = false;
  std::optional<TokenSpan> token_span;
  bool operator==(const Unit&) const = default;
};

struct Block {
  BlockId id;
  BlockKind kind;
  std::vector<Unit> units;

  std::size_t item_count() const;
  bool operator==(const Block&) const = default;
};

struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct Prompt {
  std::vector<Block> blocks;

  /// Units joined by newlines, in block order.
  std::string text() const;
  /// Character span of every unit inside text(), in unit order.
  std::vector<std::pair<const Unit*, CharSpan>> char_spans() const;
  std::vector<const Unit*> units() const;
  std::vector<std::string> unit_ids() const;
  const Unit* find(std::string_view unit_id) const;
  const Block* block(BlockId id) const;
  std::vector<BlockId> block_sequence() const;

  /// Copy with the given units removed (no block dropping).
  Prompt without_units(const std::set<std::string>& unit_ids) const;
  /// Copy with an extra scaffold text unit appended to the output instruction.
  Prompt with_appended_instruction(const std::string& unit_id, const std::string& content) const;

  bool operator==(const Prompt&) const = default;
};

struct PromptLayout {
  std::string order = "bpmec";
  std::set<BlockId> ablation_mask;

  /// Throws InvalidLayout on repeated/unknown letters or a missing 'c'.
  static PromptLayout parse(std::string_view order, std::string_view ablate = "");
  void validate() const;
  /// Mask rendered as letters in canonical b,h,m,p,e order, e.g. "bmpe".
  std::string ablation_letters() const;
};

/// Wording of every text unit. Placeholders: {speaker}, {listener}, {location},
/// {situation}. Frozen copy shipped as templates/utterance_v1.json.
struct Template {
  std::string version;
  std::string opening;
  std::string basic_info_header;
  std::string human_needs_header;
  std::string memory_header;
  std::string previous_header;
  std::string previous_footer;
  std::string location_item;
  std::string situation_item;
  std::string current_header;
  std::string empty_dialogue;
  std::string task_description;
  std::string output_instruction;
  std::string sequential_instruction;

  static const Template& builtin();
  static Template load(const std::filesystem::path& path);
  nlohmann::json to_json() const;
  bool operator==(const Template&) const = default;
};

struct DialogueLine {
  std::string speaker;
  std::string utterance;
};

/// "Name: utterance" lines.
std::string render_dialogue(const std::vector<DialogueLine>& lines);

Prompt assemble(const corpus::Case& c, const std::vector<DialogueLine>& dialogue_so_far,
                corpus::AgentId speaker, const PromptLayout& layout,
                const Template& tmpl = Template::builtin());

/// Item units of blocks b/h/m/p/e in prompt order.
std::vector<const Unit*> removable_units(const Prompt& p);

/// Drops content blocks that have no item units left. Scaffold and current
/// dialogue blocks are kept.
Prompt drop_empty_blocks(const Prompt& p);

struct BlockWordStats {
  BlockId block;
  double mean_items = 0.0;
  double mean_words = 0.0;
};

/// Per-block item and word averages over prompts assembled at dialogue start
/// (opening speaker, default layout). Blocks absent from a prompt count as 0.
std::vector<BlockWordStats> block_word_stats(const std::vector<corpus::Case>& corpus);

/// Structural identity: same block sequence and same unit ids in the same order.
bool structurally_equal(const Prompt& a, const Prompt& b);

}  // namespace dialdiv::prompt
