#pragma once

// Contract between the engine and a model: sampled generation with optional
// per-unit attention, sentence embeddings, and the consistency judge.
// Implementations: MockBackend (deterministic, in-process) and RemoteBackend
// (HTTP client for the model sidecar).

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dialdiv/prompt.hpp"
#include "dialdiv/tensor.hpp"

namespace dialdiv::backend {

struct DecodingConfig {
  double temperature = 0.8;
  double top_p = 0.9;
  std::optional<int> top_k;
  int max_new_tokens = 256;
  std::uint64_t seed = 0;

  /// Throws Error when temperature <= 0, top_p outside (0,1] or max_new_tokens < 1.
  void validate() const;
};

struct UnitCharSpan {
  std::string id;
  std::size_t char_start = 0;
  std::size_t char_end = 0;
};

struct GenerationRequest {
  std::string prompt_text;
  std::vector<UnitCharSpan> unit_spans;
  DecodingConfig config;
  bool want_attention = false;
};

struct GenerationResult {
  std::string text;
  std::map<std::string, AttentionTensor> unit_attention;
  std::size_t prompt_token_count = 0;
};

struct Capabilities {
  std::string model_name;
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::size_t embed_dim = 0;
};

struct Token {
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Word runs (letters, digits, UTF-8 continuation bytes) and single
/// punctuation characters; whitespace separates.
class Tokenizer {
 public:
  std::vector<Token> tokenize(std::string_view text) const;
};

/// Token span of every unit of `p`, mapped from its character span in p.text().
prompt::Prompt bind_token_spans(const prompt::Prompt& p, const Tokenizer& tok);

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual Capabilities capabilities() = 0;
  virtual GenerationResult generate(const GenerationRequest& request) = 0;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
  /// Tokenizer used for attention slicing when the backend runs in-process.
  virtual const Tokenizer* tokenizer() const { return nullptr; }
};

GenerationRequest make_request(const prompt::Prompt& p, const DecodingConfig& config,
                               bool want_attention);

/// Validating front door: nonempty prompt, valid config, attention covering
/// every span when requested, empty attention map otherwise.
GenerationResult generate(GenerationBackend& backend, const prompt::Prompt& p,
                          const DecodingConfig& config, bool want_attention);

/// Unit-norm embeddings (±1e-6). Throws Error on an empty list.
std::vector<std::vector<double>> embed(GenerationBackend& backend,
                                       const std::vector<std::string>& texts);

std::string judge_prompt(const std::vector<std::string>& statements, const std::string& response,
                         const std::string& speaker_a, const std::string& speaker_b);

/// Last "Score: N", else the last standalone number in [1,10]. N may carry a
/// decimal part.
std::optional<double> parse_judge_score(const std::string& output);

struct JudgeOptions {
  int retries = 2;
};

/// Inconsistency score in [1,10]. Parse failures are retried with seed+1;
/// JudgeParseError once retries are exhausted.
double judge(GenerationBackend& backend, const std::vector<std::string>& statements,
          const std::string& response, const std::string& speaker_a, const std::string& speaker_b,
          const DecodingConfig& config, const JudgeOptions& opts = {});

// ---------------------------------------------------------------------------
// Mock backend

struct MockConfig {
  std::string model_name = "mock-attention";
  std::size_t layers = 2;
  std::size_t heads = 2;
  std::size_t embed_dim = 256;
  /// Attention multiplier per block letter ('b','h','m','p','e','c'); 1 when absent.
  std::map<char, double> block_bias = {{'m', 2.0}};
  /// Attention mass each later response token keeps on earlier response tokens.
  double response_self_mass = 0.1;
  /// Probability that a free-running generation is malformed.
  double malformed_rate = 0.02;
};

/// One scripted reply: prompts containing `pattern` get `responses` in order
/// (the last one repeats). `attention`, when set, supplies the per-unit tensors.
struct ScriptRule {
  std::string pattern;
  std::vector<std::string> responses;
  std::function<std::map<std::string, AttentionTensor>(const GenerationRequest&, std::size_t call)>
      attention;
};

/// Deterministic backend. Free-running output is a pure function of
/// (prompt text, seed); scripted rules take precedence.
class MockBackend final : public GenerationBackend {
 public:
  explicit MockBackend(MockConfig config = {});

  Capabilities capabilities() override;
  GenerationResult generate(const GenerationRequest& request) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  const Tokenizer* tokenizer() const override { return &tokenizer_; }

  void add_rule(ScriptRule rule);
  void set_embedding(const std::string& text, std::vector<double> vector);
  /// Keep a copy of every prompt sent to generate() (off by default).
  void set_recording(bool on);
  std::vector<std::string> recorded_prompts() const;
  /// Recorded prompts containing `pattern`.
  std::size_t calls_matching(const std::string& pattern) const;
  std::size_t total_calls() const;

  /// Free-running attention tensors for the request's unit spans.
  std::map<std::string, AttentionTensor> mock_attention(const GenerationRequest& request,
                                                        std::size_t response_tokens) const;
  const MockConfig& config() const { return config_; }

 private:
  std::string free_text(const GenerationRequest& request) const;

  MockConfig config_;
  Tokenizer tokenizer_;
  mutable std::mutex mu_;
  std::vector<ScriptRule> rules_;
  std::vector<std::size_t> rule_calls_;
  std::map<std::string, std::vector<double>> embeddings_;
  std::vector<std::string> prompt_log_;
  bool recording_ = false;
  std::size_t total_calls_ = 0;
};

/// Hashed bag-of-words embedding used by the mock (unit norm).
std::vector<double> hashed_bow_embedding(std::string_view text, std::size_t dim);

// ---------------------------------------------------------------------------
// Remote backend

struct RemoteConfig {
  std::string url = "http://127.0.0.1:8765";
  std::chrono::seconds timeout{120};
  int retries = 2;
};

/// HTTP client for the sidecar wire protocol. Performs the capability
/// handshake on construction (BackendUnavailable if unreachable).
class RemoteBackend final : public GenerationBackend {
 public:
  explicit RemoteBackend(RemoteConfig config);

  Capabilities capabilities() override { return caps_; }
  GenerationResult generate(const GenerationRequest& request) override;
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string post(const std::string& path, const std::string& body);

  RemoteConfig config_;
  Capabilities caps_;
};

/// Environment variable consulted for the backend URL when no flag is given.
inline constexpr const char* kBackendUrlEnv = "DIALDIV_BACKEND_URL";

}  // namespace dialdiv::backend
