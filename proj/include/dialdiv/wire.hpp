#pragma once

// JSON wire format shared with the model sidecar.
//   GET  /capabilities -> {model_name, layers, heads, embed_dim}
//   POST /generate     {prompt_text, unit_spans:[{id,char_start,char_end}], temperature,
//                       top_p, top_k, max_new_tokens, seed, want_attention}
//                      -> {text, prompt_token_count,
//                          attentions:[{unit_id, shape:[L,H,m,n], values}]}
//   POST /embed        {texts} -> {vectors}
// Attention values travel as row-major float32 decimals.

#include <memory>
#include <string>

#include <json.hpp>

#include "dialdiv/backend.hpp"

namespace dialdiv::wire {

nlohmann::json to_json(const backend::Capabilities& c);
backend::Capabilities capabilities_from_json(const nlohmann::json& j);

nlohmann::json to_json(const backend::GenerationRequest& r);
backend::GenerationRequest request_from_json(const nlohmann::json& j);

nlohmann::json to_json(const backend::GenerationResult& r);
backend::GenerationResult result_from_json(const nlohmann::json& j);

/// HTTP server exposing a backend over the wire protocol.
class BackendServer {
 public:
  explicit BackendServer(backend::GenerationBackend& backend);
  ~BackendServer();
  BackendServer(const BackendServer&) = delete;
  BackendServer& operator=(const BackendServer&) = delete;

  /// Binds to an ephemeral port and returns it.
  int bind_any_port(const std::string& host = "127.0.0.1");
  /// Blocks serving on a port bound with bind_any_port().
  void serve_bound();
  /// Blocks serving on host:port.
  bool listen(const std::string& host, int port);
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace dialdiv::wire
