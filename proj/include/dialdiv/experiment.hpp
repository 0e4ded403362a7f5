#pragma once

// Named experiment runs: every (case, condition, trial) dialogue, then metrics,
// CSV tables and SVG plots under one run directory.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dialdiv/corpus.hpp"
#include "dialdiv/dialogue.hpp"
#include "dialdiv/metrics.hpp"

namespace dialdiv::experiment {

struct Condition {
  std::string label;
  /// Plot series this condition belongs to (defaults to the experiment name).
  std::string series;
  double lambda = 0.0;
  pruning::Strategy strategy = pruning::Strategy::kDescending;
  std::string order = "bpmec";
  std::string ablate;
  std::optional<dialogue::RetainOne> retain_one;
  /// Replacement names for agent a and agent b.
  std::optional<std::pair<std::string, std::string>> rename;
  std::optional<std::size_t> block_length;
  bool block_length_memory = true;
  bool sequential = false;
  std::optional<double> temperature;
  std::optional<double> top_p;
  revision::RevisionConfig revision;
  attention::Reducer reducer = attention::Reducer::kSumMean;
  bool post_removal_stats = false;
  bool full_prompt_inconsistency = false;
  /// Shifts trial seeds so that otherwise identical conditions draw fresh samples.
  std::uint64_t seed_offset = 0;
};

struct ExperimentConfig {
  std::string name = "custom";
  std::filesystem::path corpus_dir;
  corpus::Dataset dataset = corpus::Dataset::kGA;
  std::vector<Condition> conditions;
  int trials = 10;
  std::uint64_t seed = 2024;
  int max_turns = 16;
  int jobs = 1;
  /// Use only the first `case_limit` cases (0 = all).
  std::size_t case_limit = 0;
  bool per_utterance = false;
  /// Exclusiveness pairs (A label, B label).
  std::vector<std::pair<std::string, std::string>> comparisons;
  /// Emit λ-vs-metric and removal-ratio-vs-metric plots.
  bool lambda_plots = false;

  /// Throws Error on duplicate labels, trials < 2 or unknown comparison labels.
  void validate() const;
};

nlohmann::json to_json(const Condition& c);
Condition condition_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// "m:Hi" style retain-one spec.
dialogue::RetainOne parse_retain_one(const std::string& spec);

/// λ values of the sweep experiments.
const std::vector<double>& lambda_grid();

std::vector<std::string> canned_names();
ExperimentConfig canned(const std::string& name, const std::filesystem::path& corpus_dir);

/// The case exactly as a condition sees it (renamed, length-perturbed).
corpus::Case prepare_case(const corpus::Case& c, const Condition& cond, std::uint64_t seed);
dialogue::EngineConfig engine_config(const Condition& cond, const ExperimentConfig& cfg);
std::uint64_t trial_seed(const ExperimentConfig& cfg, const Condition& cond, const std::string& case_id,
                         int trial);

struct FailedTrial {
  std::string condition;
  std::string case_id;
  int trial = 0;
  std::string error;
};

struct RunSummary {
  std::filesystem::path run_dir;
  std::vector<metrics::MetricsReport> rows;  // per case, then one ALL row per condition
  std::vector<FailedTrial> failures;
  std::vector<std::string> fully_failed_conditions;
};

/// Runs everything and writes, under out_root/<name>/:
///   <condition>/<case>/<trial>.jsonl, metrics.csv, per_utterance.csv,
///   exclusiveness.csv, failures.json, *.svg, config.json
RunSummary run_experiment(const ExperimentConfig& cfg, const dialogue::Backends& backends,
                          const std::filesystem::path& out_root);

std::filesystem::path transcript_path(const std::filesystem::path& run_dir, const std::string& condition,
                                      const std::string& case_id, int trial);

/// Recomputes metrics.csv from transcripts already on disk.
std::vector<metrics::MetricsReport> metrics_from_run(const std::filesystem::path& run_dir,
                                                     backend::GenerationBackend& embedder);

}  // namespace dialdiv::experiment
