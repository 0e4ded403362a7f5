#include "dialdiv/wire.hpp"

#include <httplib.h>

#include <spdlog/spdlog.h>

#include "dialdiv/errors.hpp"

namespace dialdiv::wire {

using nlohmann::json;

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(key, "missing from wire message");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw SchemaError(key, e.what());
  }
}

}  // namespace

json to_json(const backend::Capabilities& c) {
  return {{"model_name", c.model_name}, {"layers", c.layers}, {"heads", c.heads},
          {"embed_dim", c.embed_dim}};
}

backend::Capabilities capabilities_from_json(const json& j) {
  return {field<std::string>(j, "model_name"), field<std::size_t>(j, "layers"),
          field<std::size_t>(j, "heads"), field<std::size_t>(j, "embed_dim")};
}

json to_json(const backend::GenerationRequest& r) {
  json spans = json::array();
  for (const auto& s : r.unit_spans)
    spans.push_back({{"id", s.id}, {"char_start", s.char_start}, {"char_end", s.char_end}});
  return {{"prompt_text", r.prompt_text},
          {"unit_spans", std::move(spans)},
          {"temperature", r.config.temperature},
          {"top_p", r.config.top_p},
          {"top_k", r.config.top_k ? json(*r.config.top_k) : json(nullptr)},
          {"max_new_tokens", r.config.max_new_tokens},
          {"seed", r.config.seed},
          {"want_attention", r.want_attention}};
}

backend::GenerationRequest request_from_json(const json& j) {
  backend::GenerationRequest r;
  r.prompt_text = field<std::string>(j, "prompt_text");
  for (const auto& s : field<json>(j, "unit_spans"))
    r.unit_spans.push_back({field<std::string>(s, "id"), field<std::size_t>(s, "char_start"),
                            field<std::size_t>(s, "char_end")});
  r.config.temperature = field<double>(j, "temperature");
  r.config.top_p = field<double>(j, "top_p");
  if (j.contains("top_k") && !j["top_k"].is_null()) r.config.top_k = field<int>(j, "top_k");
  r.config.max_new_tokens = field<int>(j, "max_new_tokens");
  r.config.seed = field<std::uint64_t>(j, "seed");
  r.want_attention = field<bool>(j, "want_attention");
  return r;
}

json to_json(const backend::GenerationResult& r) {
  json atts = json::array();
  for (const auto& [id, t] : r.unit_attention) {
    std::vector<float> v(t.values.begin(), t.values.end());
    atts.push_back({{"unit_id", id},
                    {"shape", {t.layers, t.heads, t.unit_tokens, t.response_tokens}},
                    {"values", std::move(v)}});
  }
  return {{"text", r.text}, {"prompt_token_count", r.prompt_token_count}, {"attentions", std::move(atts)}};
}

backend::GenerationResult result_from_json(const json& j) {
  backend::GenerationResult r;
  r.text = field<std::string>(j, "text");
  if (j.contains("prompt_token_count")) r.prompt_token_count = field<std::size_t>(j, "prompt_token_count");
  if (!j.contains("attentions")) return r;
  for (const auto& a : j.at("attentions")) {
    const auto shape = field<std::vector<std::size_t>>(a, "shape");
    if (shape.size() != 4) throw SchemaError("shape", "attention shape must have 4 entries");
    AttentionTensor t(shape[0], shape[1], shape[2], shape[3]);
    const auto values = field<std::vector<double>>(a, "values");
    if (values.size() != t.values.size())
      throw SchemaError("values", "attention value count does not match shape");
    t.values = values;
    r.unit_attention.emplace(field<std::string>(a, "unit_id"), std::move(t));
  }
  return r;
}

struct BackendServer::Impl {
  backend::GenerationBackend& backend;
  httplib::Server server;
};

BackendServer::BackendServer(backend::GenerationBackend& be) : impl_(new Impl{be, {}}) {
  auto& srv = impl_->server;
  auto fail = [](httplib::Response& res, int status, const std::string& msg) {
    res.status = status;
    res.set_content(json{{"error", msg}}.dump(), "application/json");
  };
  srv.Get("/capabilities", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(to_json(impl_->backend.capabilities()).dump(), "application/json");
  });
  srv.Post("/generate", [this, fail](const httplib::Request& req, httplib::Response& res) {
    try {
      auto r = impl_->backend.generate(request_from_json(json::parse(req.body)));
      res.set_content(to_json(r).dump(), "application/json");
    } catch (const std::exception& e) {
      fail(res, 400, e.what());
    }
  });
  srv.Post("/embed", [this, fail](const httplib::Request& req, httplib::Response& res) {
    try {
      auto texts = field<std::vector<std::string>>(json::parse(req.body), "texts");
      res.set_content(json{{"vectors", impl_->backend.embed(texts)}}.dump(), "application/json");
    } catch (const std::exception& e) {
      fail(res, 400, e.what());
    }
  });
}

BackendServer::~BackendServer() { stop(); }

int BackendServer::bind_any_port(const std::string& host) { return impl_->server.bind_to_any_port(host); }

void BackendServer::serve_bound() { impl_->server.listen_after_bind(); }

bool BackendServer::listen(const std::string& host, int port) {
  spdlog::info("serving backend on {}:{}", host, port);
  return impl_->server.listen(host, port);
}

void BackendServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
}

void BackendServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

}  // namespace dialdiv::wire
