#pragma once

// Diversity observables over sets of dialogues: Dist-N, embedding similarity,
// exclusiveness between two sets, per-position curves and last-turn repetition.

#include <optional>
#include <string>
#include <vector>

#include "dialdiv/backend.hpp"
#include "dialdiv/dialogue.hpp"

namespace dialdiv::metrics {

/// One dialogue as seen by the metrics: embedding text and its utterances.
struct DialogueSample {
  std::string text;                     // "Name: utterance" lines
  std::vector<std::string> utterances;  // n-grams never cross these
};

DialogueSample sample_of(const dialogue::Transcript& t);

struct NgramCounts {
  std::size_t unique = 0;
  std::size_t total = 0;
};

/// N-grams counted within each utterance, pooled over all dialogues.
/// `max_tokens` truncates each dialogue's token stream (in utterance order).
NgramCounts ngram_counts(const std::vector<std::vector<std::string>>& dialogues, int n,
                         std::optional<std::size_t> max_tokens = std::nullopt);

/// |unique N-grams| / |N-grams| across the dialogues. With `length_matched`,
/// every dialogue is first truncated to the shortest one's token count.
/// Throws TooShort when a dialogue has fewer than N tokens.
double dist_n(const std::vector<std::vector<std::string>>& dialogues, int n,
              bool length_matched = false);

/// Mean pairwise cosine of the embedded texts. Throws TooShort for < 2 texts.
double sim(const std::vector<std::string>& texts, backend::GenerationBackend& embedder);

struct Exclusiveness {
  double avg_max_sim = 0.0;
  double excl[3] = {0.0, 0.0, 0.0};  // n = 1, 2, 3
};

/// B-to-A: mean over B of the max cosine to any A; share of B's unique
/// n-grams that never occur in A.
Exclusiveness exclusiveness(const std::vector<DialogueSample>& a, const std::vector<DialogueSample>& b,
                            backend::GenerationBackend& embedder);

struct UtterancePoint {
  std::size_t index = 0;
  std::size_t contributors = 0;
  double dist3 = 0.0;  // NaN when the utterances hold no trigram
  double sim = 0.0;
};

/// Diversity of the i-th utterances across transcripts; indices with fewer
/// than two contributing transcripts are omitted.
std::vector<UtterancePoint> per_utterance_diversity(const std::vector<dialogue::Transcript>& trials,
                                                    backend::GenerationBackend& embedder);

/// Share of transcripts whose final utterance (normalized) repeats an earlier one.
double last_turn_repetition_rate(const std::vector<dialogue::Transcript>& trials);

struct MetricsReport {
  std::string experiment;
  std::string condition;
  std::string case_id;  // "ALL" for aggregates
  std::size_t n = 0;
  std::size_t failed = 0;
  double sim = 0.0;
  double dist[3] = {0.0, 0.0, 0.0};
  double dist3_length_matched = 0.0;
  double last_turn_repetition = 0.0;
  double mean_turns = 0.0;
  double mean_words = 0.0;
  double ended_by_flag_rate = 0.0;
  double word_removal_ratio = 0.0;
  double removed_units = 0.0;
  double removed_inconsistency = 0.0;  // NaN when not measured
  double full_inconsistency = 0.0;     // NaN when not measured
  double retention_percent = 0.0;      // NaN when not measured
  double top_share[3] = {0.0, 0.0, 0.0};
  double rollbacks = 0.0;
};

/// Report for one (condition, case) trial set. Failed transcripts are
/// counted but excluded; needs at least two survivors (TooShort).
MetricsReport report(const std::vector<dialogue::Transcript>& trials, backend::GenerationBackend& embedder);

/// Unweighted mean of every metric over the case reports (NaN entries skipped).
MetricsReport aggregate(const std::vector<MetricsReport>& per_case);

std::vector<std::string> csv_header();
std::vector<std::string> csv_row(const MetricsReport& r);

}  // namespace dialdiv::metrics
