#include "dialdiv/revision.hpp"

#include <numeric>

#include "dialdiv/errors.hpp"
#include "dialdiv/seed.hpp"

namespace dialdiv::revision {

void RevisionConfig::validate() const {
  if (!(theta > 1.0 && theta < 10.0)) throw Error("theta must lie in (1, 10)");
  if (max_rollbacks < 0) throw Error("max_rollbacks must be non-negative");
  if (backup_count < 0) throw Error("backup_count must be non-negative");
  if (judge_calls < 1) throw Error("judge_calls must be positive");
}

ConflictScore detect_conflict(const std::vector<std::string>& statements,
                              const std::string& utterance, const JudgeSetup& setup,
                              std::uint64_t seed) {
  if (utterance.empty()) throw Error("cannot judge an empty utterance");
  ConflictScore out;
  if (statements.empty()) {
    out.mean = 1.0;
    return out;
  }
  if (!setup.judge) throw Error("no judge backend configured");
  for (int k = 0; k < setup.calls; ++k) {
    auto cfg = setup.decoding;
    cfg.seed = mix_seed({seed, static_cast<std::uint64_t>(k)});
    out.scores.push_back(static_cast<double>(
        backend::judge(*setup.judge, statements, utterance, setup.speaker, setup.listener, cfg)));
  }
  out.mean = std::accumulate(out.scores.begin(), out.scores.end(), 0.0) /
             static_cast<double>(out.scores.size());
  return out;
}

std::vector<std::string> full_prompt_statements(const prompt::Prompt& p) {
  std::vector<std::string> out;
  for (const auto* u : p.units())
    if (u->kind == prompt::UnitKind::kItem && u->block != prompt::BlockId::kCurrentDialogue)
      out.push_back(u->content);
  return out;
}

ConflictScore estimate_full_prompt_inconsistency(const prompt::Prompt& full_prompt,
                                                 const std::string& utterance,
                                                 const JudgeSetup& setup, std::uint64_t seed) {
  return detect_conflict(full_prompt_statements(full_prompt), utterance, setup, seed);
}

RevisionOutcome revise(std::vector<std::string> candidates, const std::vector<std::string>& statements,
                       const JudgeSetup& setup, const RevisionConfig& config, std::uint64_t seed,
                       const CandidateSource& fresh) {
  config.validate();
  if (candidates.empty()) throw NoCandidates("revise needs at least one candidate");
  RevisionOutcome out;
  std::size_t best = 0;
  double best_mean = 0.0;
  for (int round = 0; round <= config.max_rollbacks; ++round) {
    const auto idx = static_cast<std::size_t>(round);
    if (idx >= candidates.size()) {
      if (!fresh) break;
      candidates.push_back(fresh(idx));
    }
    auto s = detect_conflict(statements, candidates[idx], setup,
                             mix_seed({seed, static_cast<std::uint64_t>(round)}));
    const bool ok = !(s.mean > config.theta);
    out.events.push_back({round, s.scores, s.mean, ok});
    if (round == 0 || s.mean < best_mean) {
      best = idx;
      best_mean = s.mean;
    }
    if (ok) {
      best = idx;
      break;
    }
    if (round < config.max_rollbacks && (idx + 1 < candidates.size() || fresh)) ++out.rollbacks;
  }
  out.chosen_index = best;
  out.candidates = std::move(candidates);
  return out;
}

}  // namespace dialdiv::revision
