#pragma once
// Long-running routing service: many concurrent readers route against an
// immutable published snapshot (score table + vocabulary + theta) while an
// admin endpoint swaps in freshly validated snapshots atomically. A failed
// reload leaves the previous snapshot in force.
//
// The service decides, it does not infer: no candidate model is called on
// the request path. An optional proxy mode forwards the query to the
// chosen model's configured endpoint after deciding.

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "tagroute/decider.hpp"
#include "tagroute/io.hpp"
#include "tagroute/normalize.hpp"
#include "tagroute/providers.hpp"
#include "tagroute/scorer.hpp"

namespace tagroute {

struct GatewayModel {
  ModelId model;
  std::string proxy_endpoint;  // used only in proxy mode
};

struct GatewayConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  double theta = 0.0;
  std::string table_path;
  std::string vocab_path;
  std::vector<GatewayModel> models;  // registry with unit costs
  ProviderConfig tag_provider;       // used when requests carry a raw query
  ProviderConfig embed_provider;     // backs vocabulary alignment
  std::string auth_token;            // static bearer token; empty disables auth
  bool proxy_mode = false;
};

GatewayConfig load_gateway_config(const std::string& path);

struct GatewaySnapshot {
  TagScoreTable table;
  TagVocabulary vocab;
  double theta = 0.0;
  std::uint64_t version = 0;
};

struct RouteRequest {
  std::optional<std::string> query;
  std::optional<std::vector<std::string>> tags;  // take precedence over query
  std::optional<double> theta_override;
};

struct RouteResponse {
  RoutingDecision decision;
  std::uint64_t snapshot_version = 0;
};

class RouterService {
 public:
  explicit RouterService(GatewayConfig config);

  // Validates and atomically publishes a new snapshot; throws and keeps
  // the old snapshot on any parse or invariant failure. Returns the new,
  // strictly increasing version.
  std::uint64_t reload(const std::string& table_path,
                       const std::string& vocab_path);
  std::uint64_t reload();  // uses the configured paths

  // Explicit tags are used verbatim (deduplicated); a raw query runs
  // through the tag provider and vocabulary alignment first. Throws
  // BadRequest / NoSnapshot / provider errors for the HTTP layer to map.
  RouteResponse route(const RouteRequest& request) const;

  std::shared_ptr<const GatewaySnapshot> snapshot() const;

  const GatewayConfig& config() const noexcept { return config_; }

 private:
  TagSet tags_for(const RouteRequest& request,
                  const GatewaySnapshot& snap) const;

  GatewayConfig config_;
  std::unique_ptr<TagGenerator> tagger_;
  std::unique_ptr<TagEmbedder> embedder_;
  std::mutex reload_mutex_;
  std::atomic<std::uint64_t> next_version_{1};
  std::shared_ptr<const GatewaySnapshot> snapshot_;
};

// HTTP front end:
//   POST /v1/route     {query?, tags?, theta_override?}
//   POST /admin/reload {table_path?, vocab_path?}
//   GET  /healthz      {status, snapshot_version}
//   GET  /v1/models    {models: [{id, role, unit_cost}]}
class HttpGateway {
 public:
  explicit HttpGateway(RouterService& service);
  ~HttpGateway();

  // Binds to config host/port (or an OS-assigned port when port == 0) and
  // serves on a background thread. Returns the bound port.
  int start();
  void stop();

  // Blocks until the server stops.
  void wait();

 private:
  struct Impl;
  Json proxy_reply(const std::string& model_id, const std::string& query) const;

  RouterService& service_;
  std::unique_ptr<Impl> impl_;
};

Json decision_to_json(const RoutingDecision& decision,
                      std::uint64_t snapshot_version);

}  // namespace tagroute
