#pragma once

// Post-generation conflict check against the units that were pruned away,
// with rollback to backup candidates.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dialdiv/backend.hpp"
#include "dialdiv/prompt.hpp"

namespace dialdiv::revision {

struct RevisionConfig {
  bool enabled = false;
  double theta = 6.67;
  int max_rollbacks = 3;
  int backup_count = 3;
  int judge_calls = 3;

  void validate() const;
};

struct RevisionEvent {
  int candidate_index = 0;
  std::vector<double> scores;
  double mean_score = 0.0;
  bool accepted = false;
};

/// Who is talking and which backend/decoding judges them.
struct JudgeSetup {
  backend::GenerationBackend* judge = nullptr;
  std::string speaker;
  std::string listener;
  backend::DecodingConfig decoding;
  int calls = 3;
};

struct ConflictScore {
  std::vector<double> scores;  // empty when nothing was judged
  double mean = 0.0;
};

/// Judges `utterance` against `statements` `setup.calls` times with distinct
/// seeds derived from `seed`. No statements: mean 1.0 without judge calls.
ConflictScore detect_conflict(const std::vector<std::string>& statements,
                              const std::string& utterance, const JudgeSetup& setup,
                              std::uint64_t seed);

/// Contents of every item unit of `p` except the current dialogue.
std::vector<std::string> full_prompt_statements(const prompt::Prompt& p);

ConflictScore estimate_full_prompt_inconsistency(const prompt::Prompt& full_prompt,
                                                 const std::string& utterance,
                                                 const JudgeSetup& setup, std::uint64_t seed);

struct RevisionOutcome {
  std::size_t chosen_index = 0;
  std::vector<std::string> candidates;  // index 0 is the initial utterance
  std::vector<RevisionEvent> events;
  int rollbacks = 0;
};

/// Supplies candidate `index` once the pre-generated ones run out.
using CandidateSource = std::function<std::string(std::size_t index)>;

/// Scores candidate 0 and rolls back through the following candidates while
/// the mean exceeds θ, at most max_rollbacks times. When nothing passes, the
/// candidate with the lowest mean (earliest on ties) is chosen.
RevisionOutcome revise(std::vector<std::string> candidates, const std::vector<std::string>& statements,
                       const JudgeSetup& setup, const RevisionConfig& config, std::uint64_t seed,
                       const CandidateSource& fresh = {});

}  // namespace dialdiv::revision
