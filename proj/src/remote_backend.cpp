#include <httplib.h>

#include <spdlog/spdlog.h>

#include "dialdiv/backend.hpp"
#include "dialdiv/errors.hpp"
#include "dialdiv/wire.hpp"

namespace dialdiv::backend {

using nlohmann::json;

namespace {

httplib::Client make_client(const RemoteConfig& cfg) {
  httplib::Client cli(cfg.url);
  const auto secs = static_cast<time_t>(cfg.timeout.count());
  cli.set_connection_timeout(secs, 0);
  cli.set_read_timeout(secs, 0);
  cli.set_write_timeout(secs, 0);
  return cli;
}

}  // namespace

RemoteBackend::RemoteBackend(RemoteConfig config) : config_(std::move(config)) {
  auto cli = make_client(config_);
  auto res = cli.Get("/capabilities");
  if (!res) throw BackendUnavailable("cannot reach backend at " + config_.url);
  if (res->status != 200)
    throw BackendUnavailable("capability handshake failed with HTTP " + std::to_string(res->status));
  try {
    caps_ = wire::capabilities_from_json(json::parse(res->body));
  } catch (const json::exception& e) {
    throw BackendUnavailable(std::string("bad capability reply: ") + e.what());
  }
  spdlog::info("remote backend {} (L={}, H={})", caps_.model_name, caps_.layers, caps_.heads);
}

std::string RemoteBackend::post(const std::string& path, const std::string& body) {
  for (int attempt = 0;; ++attempt) {
    auto cli = make_client(config_);
    auto res = cli.Post(path, body, "application/json");
    if (res && res->status == 200) return res->body;
    const bool timed_out = !res && res.error() == httplib::Error::Read;
    if (attempt >= config_.retries) {
      if (timed_out) throw GenerationTimeout("backend timed out on " + path);
      if (!res) throw BackendUnavailable("backend unreachable on " + path);
      throw BackendError("backend returned HTTP " + std::to_string(res->status) + ": " + res->body);
    }
    spdlog::warn("retrying {} after failure (attempt {})", path, attempt + 1);
  }
}

GenerationResult RemoteBackend::generate(const GenerationRequest& request) {
  auto body = post("/generate", wire::to_json(request).dump());
  try {
    return wire::result_from_json(json::parse(body));
  } catch (const json::exception& e) {
    throw BackendError(std::string("bad generate reply: ") + e.what());
  }
}

std::vector<std::vector<double>> RemoteBackend::embed(const std::vector<std::string>& texts) {
  auto body = post("/embed", json{{"texts", texts}}.dump());
  try {
    return json::parse(body).at("vectors").get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("bad embed reply: ") + e.what());
  }
}

}  // namespace dialdiv::backend
