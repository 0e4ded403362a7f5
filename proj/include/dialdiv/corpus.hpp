#pragma once

// Simulation cases: two agents at a frozen checkpoint, their memories, past
// dialogues and the environment they meet in. Optional human-needs state
// turns a GA case into an HA case.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace dialdiv::corpus {

enum class Need { kFullness, kSocial, kFun, kHealth, kEnergy };
enum class Modifier { kSlightly, kNone, kVery, kExtremely };
enum class Emotion { kDisgusted, kAfraid, kSad, kSurprised, kHappy, kAngry, kNeutral };
enum class Closeness { kDistant, kRatherClose, kClose, kVeryClose };

inline constexpr Need kAllNeeds[] = {Need::kFullness, Need::kSocial, Need::kFun, Need::kHealth,
                                     Need::kEnergy};
inline constexpr Emotion kNonNeutralEmotions[] = {Emotion::kDisgusted, Emotion::kAfraid,
                                                  Emotion::kSad,       Emotion::kSurprised,
                                                  Emotion::kHappy,     Emotion::kAngry};

struct UnsatisfiedNeed {
  Need need;
  Modifier modifier;
  bool operator==(const UnsatisfiedNeed&) const = default;
};

struct HumanNeeds {
  std::vector<UnsatisfiedNeed> unsatisfied_needs;
  Emotion emotion = Emotion::kNeutral;
  Closeness closeness = Closeness::kDistant;

  /// Rendered block items, e.g. "Arthur Burton is slightly hungry.".
  std::vector<std::string> render(const std::string& self, const std::string& other) const;
  bool operator==(const HumanNeeds&) const = default;
};

struct AgentProfile {
  std::string name;
  std::vector<std::string> basic_info_items;
  std::vector<std::string> memory_items;
  std::optional<HumanNeeds> human_needs;
  bool operator==(const AgentProfile&) const = default;
};

enum class EnvKind { kLocation, kSituation };

struct EnvItem {
  EnvKind kind;
  std::string text;
  bool operator==(const EnvItem&) const = default;
};

/// Location + situation. Held as tagged items so block-length perturbation
/// can duplicate or delete them; canonical cases hold exactly [location, situation].
struct EnvironmentContext {
  std::vector<EnvItem> items;
  bool operator==(const EnvironmentContext&) const = default;
};

enum class AgentId { kA, kB };

inline AgentId other(AgentId id) { return id == AgentId::kA ? AgentId::kB : AgentId::kA; }

struct Case {
  std::string id;
  std::string timestamp;
  AgentProfile agent_a;
  AgentProfile agent_b;
  std::vector<std::string> previous_dialogues;
  EnvironmentContext environment;
  AgentId opening_speaker = AgentId::kA;
  /// "ga" / "ha" for corpus cases; perturbed cases carry e.g. "bln250".
  std::string variant = "ga";

  const AgentProfile& agent(AgentId id) const { return id == AgentId::kA ? agent_a : agent_b; }
  AgentProfile& agent(AgentId id) { return id == AgentId::kA ? agent_a : agent_b; }
  bool operator==(const Case&) const = default;
};

/// Throws SchemaError naming the offending field.
void validate(const Case& c);

nlohmann::json to_json(const Case& c);
/// Throws SchemaError on type mismatches and invariant violations.
Case from_json(const nlohmann::json& j);

/// Throws ParseError when the file cannot be read or is not JSON.
Case load_case(const std::filesystem::path& path);
void save_case(const Case& c, const std::filesystem::path& path);

enum class Dataset { kGA, kHA };

/// All cases of a corpus directory sorted by file name: `*.json` for GA,
/// `*.json.ha` for HA.
std::vector<Case> load_corpus(const std::filesystem::path& dir, Dataset dataset = Dataset::kGA);

/// Path of the HA sibling of a GA case file.
std::filesystem::path ha_sibling(const std::filesystem::path& ga_path);

/// Sampling probabilities for human-needs augmentation.
struct NeedsProbabilities {
  double unsatisfied = 0.40;
  double unsatisfied_energy = 0.20;
  double per_emotion = 0.08;
  double closeness[4] = {0.50, 0.20, 0.20, 0.10};
};

/// Draw one agent's human-needs state; deterministic in (case_id, seed, agent).
HumanNeeds draw_human_needs(const std::string& case_id, std::uint64_t seed, AgentId agent,
                            const NeedsProbabilities& p = {});

/// Throws AlreadyAugmented if either agent has human needs.
Case sample_human_needs(const Case& c, std::uint64_t seed);

/// Whole-word substitution in every text field. The mapping must cover both
/// agent names with nonempty distinct targets (IncompleteMapping otherwise).
Case replace_names(const Case& c, const std::map<std::string, std::string>& mapping);

struct PerturbOptions {
  bool include_memory = true;
};

/// Picks an index in [0, n); lets tests script the item choices.
using ItemChooser = std::function<std::size_t(std::size_t n)>;

/// Duplicate or delete random items in every item-bearing block (basic info,
/// memory, previous dialogues, environment) until the block's word count
/// first crosses target_words. Throws EmptyBlock when growth is needed from
/// zero items.
Case perturb_block_length(const Case& c, std::size_t target_words, std::uint64_t seed,
                          const PerturbOptions& opts = {});
Case perturb_block_length(const Case& c, std::size_t target_words, const ItemChooser& choose,
                          const PerturbOptions& opts = {});

/// The per-block loop, exposed for tests. Returns the perturbed item list.
std::vector<std::string> perturb_items(std::vector<std::string> items, std::size_t target_words,
                                       const ItemChooser& choose);

std::string_view to_string(Need n);
std::string_view to_string(Modifier m);
std::string_view to_string(Emotion e);
std::string_view to_string(Closeness c);

}  // namespace dialdiv::corpus
