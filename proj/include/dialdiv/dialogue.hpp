#pragma once

// Two-agent dialogue loop: per utterance, score the full prompt, prune,
// generate on the pruned prompt, parse, optionally revise.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dialdiv/attention.hpp"
#include "dialdiv/backend.hpp"
#include "dialdiv/corpus.hpp"
#include "dialdiv/prompt.hpp"
#include "dialdiv/pruning.hpp"
#include "dialdiv/revision.hpp"

namespace dialdiv::dialogue {

struct ParsedUtterance {
  std::string utterance;
  bool ended = false;
  bool end_flag_present = false;
};

/// Extracts the first balanced JSON object of `raw` and reads the speaker's
/// utterance and end flag (true, "true", "True", "yes" and 1 all count).
std::optional<ParsedUtterance> parse_utterance(const std::string& raw, const std::string& speaker);

/// Candidates from a JSON array (or, failing that, every balanced object).
std::vector<ParsedUtterance> parse_candidates(const std::string& raw, const std::string& speaker);

/// Text of the first balanced {...} (or [...] with open='[') outside string
/// literals; empty when none.
std::string first_balanced(std::string_view raw, char open = '{');

struct RetainOne {
  prompt::BlockId block = prompt::BlockId::kMemory;
  pruning::Which which = pruning::Which::kHi;
};

struct EngineConfig {
  double lambda = 0.0;
  pruning::Strategy strategy = pruning::Strategy::kDescending;
  prompt::PromptLayout layout;
  backend::DecodingConfig decoding;
  attention::Reducer reducer = attention::Reducer::kSumMean;
  int score_samples = 3;
  int max_turns = 16;
  int parse_retries = 3;
  revision::RevisionConfig revision;
  std::optional<RetainOne> retain_one;
  bool sequential = false;
  /// Judge every emitted utterance against all units of the full prompt.
  bool full_prompt_inconsistency = false;
  /// Re-score the pruned prompt to measure how much attention survives.
  bool post_removal_stats = false;
  const prompt::Template* tmpl = nullptr;
};

struct Backends {
  backend::GenerationBackend* generator = nullptr;
  /// Defaults to the generator when null.
  backend::GenerationBackend* judge = nullptr;
};

struct Turn {
  int index = 0;
  corpus::AgentId speaker = corpus::AgentId::kA;
  std::string speaker_name;
  std::string utterance;
  bool ended = false;
  pruning::PruningPlan plan;
  std::vector<std::string> prompt_unit_ids;
  std::vector<prompt::BlockId> prompt_blocks;
  std::vector<revision::RevisionEvent> revision_events;
  std::optional<double> removed_inconsistency;
  std::optional<double> full_inconsistency;
  std::optional<attention::PostRemovalStats> post_removal;
  std::size_t candidate_count = 0;  // sequential mode
  std::size_t candidate_index = 0;
  int parse_attempts = 1;
  std::string raw_output;
};

struct Transcript {
  std::string case_id;
  std::string condition;
  int trial = 0;
  std::uint64_t trial_seed = 0;
  std::string speaker_a;
  std::string speaker_b;
  std::vector<Turn> turns;
  bool ended_by_flag = false;
  bool failed = false;
  std::string error;
};

Transcript run_dialogue(const corpus::Case& c, const EngineConfig& config, const Backends& backends,
                        std::uint64_t trial_seed);

/// run_dialogue with the ten-candidates instruction and a seeded random pick.
Transcript run_sequential(const corpus::Case& c, EngineConfig config, const Backends& backends,
                          std::uint64_t trial_seed);

/// Speakers alternate from the opening speaker and the length is within max_turns.
bool check_alternation(const Transcript& t, corpus::AgentId opening);

/// "Name: utterance" lines of a transcript.
std::string dialogue_text(const Transcript& t);

nlohmann::json to_json(const Turn& t);
Turn turn_from_json(const nlohmann::json& j);

/// Header line, one line per turn, then a footer line.
std::string to_jsonl(const Transcript& t);
Transcript from_jsonl(std::string_view text);
void write_transcript(const Transcript& t, const std::filesystem::path& path);
Transcript read_transcript(const std::filesystem::path& path);

}  // namespace dialdiv::dialogue
