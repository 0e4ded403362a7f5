#include "dialdiv/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "dialdiv/errors.hpp"
#include "dialdiv/text.hpp"

namespace dialdiv::prompt {

using corpus::AgentId;
using nlohmann::json;

char letter(BlockId id) {
  switch (id) {
    case BlockId::kBasicInfo: return 'b';
    case BlockId::kHumanNeeds: return 'h';
    case BlockId::kMemory: return 'm';
    case BlockId::kPreviousDialogues: return 'p';
    case BlockId::kEnvironment: return 'e';
    case BlockId::kCurrentDialogue: return 'c';
    default: return '\0';
  }
}

std::optional<BlockId> block_from_letter(char c) {
  switch (c) {
    case 'b': return BlockId::kBasicInfo;
    case 'h': return BlockId::kHumanNeeds;
    case 'm': return BlockId::kMemory;
    case 'p': return BlockId::kPreviousDialogues;
    case 'e': return BlockId::kEnvironment;
    case 'c': return BlockId::kCurrentDialogue;
    default: return std::nullopt;
  }
}

std::string_view to_string(BlockId id) {
  switch (id) {
    case BlockId::kBasicInfo: return "basic_info";
    case BlockId::kHumanNeeds: return "human_needs";
    case BlockId::kMemory: return "memory";
    case BlockId::kPreviousDialogues: return "previous_dialogues";
    case BlockId::kEnvironment: return "environment";
    case BlockId::kCurrentDialogue: return "current_dialogue";
    case BlockId::kOpening: return "opening";
    case BlockId::kTaskDescription: return "task_description";
    case BlockId::kOutputInstruction: return "output_instruction";
  }
  return "?";
}

BlockKind kind_of(BlockId id) {
  switch (id) {
    case BlockId::kBasicInfo: return BlockKind::kFixed;
    case BlockId::kHumanNeeds: return BlockKind::kFixedInDialogue;
    case BlockId::kMemory:
    case BlockId::kPreviousDialogues: return BlockKind::kTrajectory;
    case BlockId::kEnvironment:
    case BlockId::kCurrentDialogue: return BlockKind::kContext;
    default: return BlockKind::kScaffold;
  }
}

bool is_ablatable(BlockId id) {
  return id == BlockId::kBasicInfo || id == BlockId::kHumanNeeds || id == BlockId::kMemory ||
         id == BlockId::kPreviousDialogues || id == BlockId::kEnvironment;
}

bool is_scaffold(BlockId id) { return kind_of(id) == BlockKind::kScaffold; }

std::size_t Block::item_count() const {
  return static_cast<std::size_t>(std::count_if(
      units.begin(), units.end(), [](const Unit& u) { return u.kind == UnitKind::kItem; }));
}

std::string Prompt::text() const {
  std::string out;
  bool first = true;
  for (const auto& b : blocks)
    for (const auto& u : b.units) {
      if (!first) out.push_back('\n');
      first = false;
      out += u.content;
    }
  return out;
}

std::vector<std::pair<const Unit*, CharSpan>> Prompt::char_spans() const {
  std::vector<std::pair<const Unit*, CharSpan>> out;
  std::size_t pos = 0;
  bool first = true;
  for (const auto& b : blocks)
    for (const auto& u : b.units) {
      if (!first) ++pos;
      first = false;
      out.push_back({&u, {pos, pos + u.content.size()}});
      pos += u.content.size();
    }
  return out;
}

std::vector<const Unit*> Prompt::units() const {
  std::vector<const Unit*> out;
  for (const auto& b : blocks)
    for (const auto& u : b.units) out.push_back(&u);
  return out;
}

std::vector<std::string> Prompt::unit_ids() const {
  std::vector<std::string> out;
  for (const auto* u : units()) out.push_back(u->id);
  return out;
}

const Unit* Prompt::find(std::string_view unit_id) const {
  for (const auto& b : blocks)
    for (const auto& u : b.units)
      if (u.id == unit_id) return &u;
  return nullptr;
}

const Block* Prompt::block(BlockId id) const {
  for (const auto& b : blocks)
    if (b.id == id) return &b;
  return nullptr;
}

std::vector<BlockId> Prompt::block_sequence() const {
  std::vector<BlockId> out;
  for (const auto& b : blocks) out.push_back(b.id);
  return out;
}

Prompt Prompt::without_units(const std::set<std::string>& unit_ids) const {
  Prompt out;
  for (const auto& b : blocks) {
    Block nb{b.id, b.kind, {}};
    for (const auto& u : b.units)
      if (!unit_ids.contains(u.id)) nb.units.push_back(u);
    out.blocks.push_back(std::move(nb));
  }
  return out;
}

Prompt Prompt::with_appended_instruction(const std::string& unit_id,
                                         const std::string& content) const {
  Prompt out = *this;
  for (auto& b : out.blocks) {
    if (b.id == BlockId::kOutputInstruction) {
      b.units.push_back({unit_id, UnitKind::kText, content, b.id, false, std::nullopt});
      return out;
    }
  }
  out.blocks.push_back({BlockId::kOutputInstruction,
                        BlockKind::kScaffold,
                        {{unit_id, UnitKind::kText, content, BlockId::kOutputInstruction, false,
                          std::nullopt}}});
  return out;
}

PromptLayout PromptLayout::parse(std::string_view order, std::string_view ablate) {
  PromptLayout l;
  l.order = std::string(order);
  for (char ch : ablate) {
    auto id = block_from_letter(ch);
    if (!id || !is_ablatable(*id))
      throw InvalidLayout(std::string("cannot ablate block '") + ch + "'");
    l.ablation_mask.insert(*id);
  }
  l.validate();
  return l;
}

void PromptLayout::validate() const {
  std::set<char> seen;
  for (char ch : order) {
    if (!block_from_letter(ch))
      throw InvalidLayout(std::string("unknown block letter '") + ch + "' in order '" + order + "'");
    if (!seen.insert(ch).second)
      throw InvalidLayout(std::string("block letter '") + ch + "' repeated in order '" + order + "'");
  }
  if (!seen.contains('c')) throw InvalidLayout("order '" + order + "' must contain 'c'");
  for (auto id : ablation_mask)
    if (!is_ablatable(id)) throw InvalidLayout("ablation mask contains a non-ablatable block");
}

std::string PromptLayout::ablation_letters() const {
  std::string out;
  for (auto id : {BlockId::kBasicInfo, BlockId::kHumanNeeds, BlockId::kMemory,
                  BlockId::kPreviousDialogues, BlockId::kEnvironment})
    if (ablation_mask.contains(id)) out.push_back(letter(id));
  return out;
}

namespace {

Template make_builtin() {
  Template t;
  t.version = "utterance-v1";
  t.opening = "Context for the task:";
  t.basic_info_header = "Here is a brief description of {speaker}.";
  t.human_needs_header = "Here are {speaker}'s status of psychological needs:";
  t.memory_header = "Here is the memory that is in {speaker}'s head:";
  t.previous_header = "Past Context:";
  t.previous_footer = "This context takes place after the above conversation.";
  t.location_item = "Current Location: {location}";
  t.situation_item = "Current Context: {situation}";
  t.current_header = "{speaker} and {listener} are chatting. Here is their conversation so far:";
  t.empty_dialogue = "[The conversation has not started yet.]";
  t.task_description =
      "-----\nTask: Given the above, what should {speaker} say to {listener} next in the "
      "conversation? And did it end the conversation?";
  t.output_instruction =
      "Output format: Output a json of the following format:\n{\n\"{speaker}\": \"{speaker}'s "
      "utterance\",\n\"Did the conversation end with {speaker}'s utterance?\": \"<json "
      "Boolean>\"\n}";
  t.sequential_instruction = "Please output TEN candidates";
  return t;
}

#define DIALDIV_TEMPLATE_FIELDS(X)                                                        \
  X(version) X(opening) X(basic_info_header) X(human_needs_header) X(memory_header)       \
  X(previous_header) X(previous_footer) X(location_item) X(situation_item)                \
  X(current_header) X(empty_dialogue) X(task_description) X(output_instruction)           \
  X(sequential_instruction)

Unit text_unit(std::string id, BlockId block, std::string content) {
  return {std::move(id), UnitKind::kText, std::move(content), block, false, std::nullopt};
}

Unit item_unit(std::string id, BlockId block, std::string content, bool removable) {
  return {std::move(id), UnitKind::kItem, std::move(content), block, removable, std::nullopt};
}

}  // namespace

const Template& Template::builtin() {
  static const Template t = make_builtin();
  return t;
}

Template Template::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open template " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  Template t;
#define X(name)                                                                     \
  if (!j.contains(#name) || !j[#name].is_string())                                  \
    throw ParseError(path.string() + ": missing template field '" #name "'");       \
  t.name = j[#name].get<std::string>();
  DIALDIV_TEMPLATE_FIELDS(X)
#undef X
  return t;
}

json Template::to_json() const {
  json j;
#define X(name) j[#name] = name;
  DIALDIV_TEMPLATE_FIELDS(X)
#undef X
  return j;
}

std::string render_dialogue(const std::vector<DialogueLine>& lines) {
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i].speaker + ": " + lines[i].utterance;
  }
  return out;
}

Prompt assemble(const corpus::Case& c, const std::vector<DialogueLine>& dialogue_so_far,
                AgentId speaker, const PromptLayout& layout, const Template& tmpl) {
  layout.validate();
  const auto& self = c.agent(speaker);
  const auto& listener = c.agent(corpus::other(speaker));
  const std::vector<std::pair<std::string, std::string>> names = {{"speaker", self.name},
                                                                  {"listener", listener.name}};
  auto fill = [&](const std::string& s) { return text::substitute(s, names); };

  auto build = [&](BlockId id) {
    Block b{id, kind_of(id), {}};
    auto add_items = [&](const std::string& prefix, const std::vector<std::string>& items) {
      for (std::size_t i = 0; i < items.size(); ++i)
        b.units.push_back(item_unit(prefix + std::to_string(i), id, items[i], true));
    };
    switch (id) {
      case BlockId::kBasicInfo:
        b.units.push_back(text_unit("b.text", id, fill(tmpl.basic_info_header)));
        add_items("b.", self.basic_info_items);
        break;
      case BlockId::kHumanNeeds:
        b.units.push_back(text_unit("h.text", id, fill(tmpl.human_needs_header)));
        if (self.human_needs) add_items("h.", self.human_needs->render(self.name, listener.name));
        break;
      case BlockId::kMemory:
        b.units.push_back(text_unit("m.text", id, fill(tmpl.memory_header)));
        add_items("m.", self.memory_items);
        break;
      case BlockId::kPreviousDialogues:
        b.units.push_back(text_unit("p.text", id, fill(tmpl.previous_header)));
        add_items("p.", c.previous_dialogues);
        b.units.push_back(text_unit("p.footer", id, fill(tmpl.previous_footer)));
        break;
      case BlockId::kEnvironment:
        for (std::size_t i = 0; i < c.environment.items.size(); ++i) {
          const auto& e = c.environment.items[i];
          std::string content =
              e.kind == corpus::EnvKind::kLocation
                  ? text::substitute(tmpl.location_item, {{"location", e.text}})
                  : text::substitute(tmpl.situation_item, {{"situation", e.text}});
          b.units.push_back(item_unit("e." + std::to_string(i), id, std::move(content), true));
        }
        break;
      case BlockId::kCurrentDialogue:
        b.units.push_back(text_unit("c.text", id, fill(tmpl.current_header)));
        b.units.push_back(item_unit(
            "c.0", id, dialogue_so_far.empty() ? tmpl.empty_dialogue : render_dialogue(dialogue_so_far),
            false));
        break;
      case BlockId::kOpening:
        b.units.push_back(text_unit("opening", id, fill(tmpl.opening)));
        break;
      case BlockId::kTaskDescription:
        b.units.push_back(text_unit("task", id, fill(tmpl.task_description)));
        break;
      case BlockId::kOutputInstruction:
        b.units.push_back(text_unit("output", id, fill(tmpl.output_instruction)));
        break;
    }
    return b;
  };

  std::vector<BlockId> content;
  for (char ch : layout.order) content.push_back(*block_from_letter(ch));
  const bool has_needs = self.human_needs.has_value();
  if (has_needs && layout.order.find('h') == std::string::npos) {
    auto it = std::find(content.begin(), content.end(), BlockId::kBasicInfo);
    content.insert(it == content.end() ? content.begin() : it + 1, BlockId::kHumanNeeds);
  }

  Prompt p;
  p.blocks.push_back(build(BlockId::kOpening));
  for (auto id : content) {
    if (layout.ablation_mask.contains(id)) continue;
    if (id == BlockId::kHumanNeeds && !has_needs) continue;
    p.blocks.push_back(build(id));
  }
  p.blocks.push_back(build(BlockId::kTaskDescription));
  p.blocks.push_back(build(BlockId::kOutputInstruction));
  return drop_empty_blocks(p);
}

std::vector<const Unit*> removable_units(const Prompt& p) {
  std::vector<const Unit*> out;
  for (const auto& b : p.blocks) {
    if (!is_ablatable(b.id)) continue;
    for (const auto& u : b.units)
      if (u.kind == UnitKind::kItem) out.push_back(&u);
  }
  return out;
}

Prompt drop_empty_blocks(const Prompt& p) {
  Prompt out;
  for (const auto& b : p.blocks) {
    if (is_ablatable(b.id) && b.item_count() == 0) continue;
    out.blocks.push_back(b);
  }
  return out;
}

std::vector<BlockWordStats> block_word_stats(const std::vector<corpus::Case>& corpus) {
  if (corpus.empty()) throw Error("block_word_stats needs a nonempty corpus");
  const BlockId ids[] = {BlockId::kBasicInfo,         BlockId::kHumanNeeds,  BlockId::kMemory,
                         BlockId::kPreviousDialogues, BlockId::kEnvironment, BlockId::kCurrentDialogue};
  std::map<BlockId, std::pair<double, double>> sums;
  for (const auto& c : corpus) {
    auto p = assemble(c, {}, c.opening_speaker, PromptLayout{});
    for (auto id : ids) {
      const Block* b = p.block(id);
      if (!b || id == BlockId::kCurrentDialogue) {
        sums[id];  // absent (or placeholder-only dialogue) counts as 0
        continue;
      }
      for (const auto& u : b->units) {
        if (u.kind != UnitKind::kItem) continue;
        sums[id].first += 1.0;
        sums[id].second += static_cast<double>(text::word_count(u.content));
      }
    }
  }
  std::vector<BlockWordStats> out;
  const double n = static_cast<double>(corpus.size());
  for (auto id : ids) out.push_back({id, sums[id].first / n, sums[id].second / n});
  return out;
}

bool structurally_equal(const Prompt& a, const Prompt& b) {
  return a.block_sequence() == b.block_sequence() && a.unit_ids() == b.unit_ids();
}

}  // namespace dialdiv::prompt
