#include "tagroute/gateway.hpp"

#include <thread>
#include <utility>

#include <httplib.h>

#include "tagroute/util.hpp"

namespace tagroute {

namespace {

int status_for(Errc code) {
  switch (code) {
    case Errc::BadRequest:
    case Errc::EmptyTag:
    case Errc::EmptyInput:
      return 400;
    case Errc::NoSnapshot:
      return 503;
    case Errc::ProviderUnavailable:
    case Errc::MalformedResponse:
    case Errc::MissingEntry:
      return 502;
    default:
      return 422;
  }
}

}  // namespace

GatewayConfig load_gateway_config(const std::string& path) {
  const Json doc = load_json(path);
  GatewayConfig config;
  const std::string listen = doc.value("listen", "127.0.0.1:8080");
  const auto colon = listen.rfind(':');
  if (colon == std::string::npos) {
    fail(Errc::InvalidConfig, "listen must be host:port");
  }
  config.listen_host = listen.substr(0, colon);
  config.listen_port = std::stoi(listen.substr(colon + 1));
  config.theta = doc.value("theta", 0.0);
  config.table_path = doc.value("table_path", "");
  config.vocab_path = doc.value("vocab_path", "");
  config.auth_token = doc.value("auth_token", "");
  config.proxy_mode = doc.value("proxy_mode", false);

  std::vector<ModelId> system;
  for (const Json& entry : doc.value("models", Json::array())) {
    GatewayModel model;
    model.model.id = entry.value("id", "");
    model.model.role = parse_role(entry.value("role", "alternate"));
    model.model.unit_cost = entry.value("unit_cost", 0.0);
    model.proxy_endpoint = entry.value("proxy_endpoint", "");
    system.push_back(model.model);
    config.models.push_back(std::move(model));
  }
  if (!system.empty()) validate_model_system(system);

  if (doc.contains("tag_provider")) {
    config.tag_provider = provider_config_from_json(doc["tag_provider"]);
  }
  if (doc.contains("embed_provider")) {
    config.embed_provider = provider_config_from_json(doc["embed_provider"]);
  }
  return config;
}

RouterService::RouterService(GatewayConfig config)
    : config_(std::move(config)) {
  validate_provider_config(config_.tag_provider, "tag generator");
  validate_provider_config(config_.embed_provider, "tag embedder");
  tagger_ = std::make_unique<TagGenerator>(config_.tag_provider);
  embedder_ = std::make_unique<TagEmbedder>(config_.embed_provider);
}

std::uint64_t RouterService::reload() {
  return reload(config_.table_path, config_.vocab_path);
}

std::uint64_t RouterService::reload(const std::string& table_path,
                                    const std::string& vocab_path) {
  // Validate everything before touching the published snapshot.
  auto next = std::make_shared<GatewaySnapshot>();
  next->table = load_table(table_path);
  next->vocab = load_vocabulary(vocab_path);
  next->theta = config_.theta;
  if (next->table.alternate_ids().empty()) {
    fail(Errc::NoAlternates, "table has no alternate models");
  }
  for (const GatewayModel& entry : config_.models) {
    if (next->table.models().count(entry.model.id) != 0) {
      next->table.set_unit_cost(entry.model.id, entry.model.unit_cost);
    }
  }

  std::lock_guard guard(reload_mutex_);
  const std::uint64_t version = next_version_.fetch_add(1);
  next->version = version;
  std::atomic_store(&snapshot_,
                    std::shared_ptr<const GatewaySnapshot>(std::move(next)));
  return version;
}

std::shared_ptr<const GatewaySnapshot> RouterService::snapshot() const {
  return std::atomic_load(&snapshot_);
}

TagSet RouterService::tags_for(const RouteRequest& request,
                               const GatewaySnapshot& snap) const {
  TagSet tags;
  if (request.tags) {
    for (const std::string& raw : *request.tags) {
      tags.add(make_tag(raw));
    }
    return tags;
  }
  // Raw query: generate tags, then align each into the vocabulary.
  for (const std::string& raw : tagger_->generate(*request.query)) {
    const Tag generated = make_tag(raw);
    if (snap.vocab.empty()) {
      tags.add(generated);
    } else {
      tags.add(align_tag(generated, snap.vocab, *embedder_));
    }
  }
  return tags;
}

RouteResponse RouterService::route(const RouteRequest& request) const {
  if (!request.tags && !request.query) {
    fail(Errc::BadRequest, "request needs tags or a query");
  }
  auto snap = snapshot();
  if (!snap) fail(Errc::NoSnapshot, "no snapshot loaded yet");

  const TagSet tags = tags_for(request, *snap);
  const double theta = request.theta_override.value_or(snap->theta);
  RouteResponse response;
  response.decision = select(snap->table, tags, theta);
  response.snapshot_version = snap->version;
  return response;
}

Json decision_to_json(const RoutingDecision& decision,
                      std::uint64_t snapshot_version) {
  Json aggregates = Json::object();
  for (const auto& [model_id, value] : decision.aggregates) {
    aggregates[model_id] = value;
  }
  Json tags = Json::array();
  for (const Tag& tag : decision.tags_used) tags.push_back(tag.name());
  return Json{{"model", decision.chosen}, {"delta", decision.delta},
              {"theta", decision.theta},  {"aggregates", aggregates},
              {"tags_used", tags},        {"snapshot_version", snapshot_version}};
}

// ---------------------------------------------------------------------------
// HTTP layer
// ---------------------------------------------------------------------------

struct HttpGateway::Impl {
  httplib::Server server;
  std::thread worker;
  int port = 0;
};

HttpGateway::HttpGateway(RouterService& service)
    : service_(service), impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;

  const auto authorized = [this](const httplib::Request& req) {
    const std::string& token = service_.config().auth_token;
    if (token.empty()) return true;
    return req.get_header_value("Authorization") == "Bearer " + token;
  };

  const auto send_error = [](httplib::Response& res, const Error& err) {
    res.status = status_for(err.code());
    res.set_content(Json{{"error", err.what()},
                         {"code", std::string(errc_name(err.code()))}}
                        .dump(),
                    "application/json");
  };

  server.Post("/v1/route", [this, authorized, send_error](
                               const httplib::Request& req,
                               httplib::Response& res) {
    if (!authorized(req)) {
      res.status = 401;
      res.set_content(R"({"error":"unauthorized"})", "application/json");
      return;
    }
    try {
      const Json body = parse_json(req.body, "route request");
      RouteRequest request;
      if (body.contains("query") && body["query"].is_string()) {
        request.query = body["query"].get<std::string>();
      }
      if (body.contains("tags") && body["tags"].is_array()) {
        std::vector<std::string> tags;
        for (const Json& tag : body["tags"]) {
          tags.push_back(tag.get<std::string>());
        }
        request.tags = std::move(tags);
      }
      if (body.contains("theta_override")) {
        request.theta_override = body["theta_override"].get<double>();
      }
      const RouteResponse response = service_.route(request);
      Json reply = decision_to_json(response.decision, response.snapshot_version);

      if (service_.config().proxy_mode && request.query) {
        reply["response"] = proxy_reply(response.decision.chosen, *request.query);
      }
      res.set_content(reply.dump(), "application/json");
    } catch (const Error& err) {
      send_error(res, err);
    }
  });

  server.Post("/admin/reload", [this, authorized, send_error](
                                   const httplib::Request& req,
                                   httplib::Response& res) {
    if (!authorized(req)) {
      res.status = 401;
      res.set_content(R"({"error":"unauthorized"})", "application/json");
      return;
    }
    try {
      const Json body =
          req.body.empty() ? Json::object() : parse_json(req.body, "reload");
      const std::string table_path =
          body.value("table_path", service_.config().table_path);
      const std::string vocab_path =
          body.value("vocab_path", service_.config().vocab_path);
      const std::uint64_t version = service_.reload(table_path, vocab_path);
      res.set_content(Json{{"version", version}}.dump(), "application/json");
    } catch (const Error& err) {
      send_error(res, err);
    }
  });

  server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
    auto snap = service_.snapshot();
    Json reply = {{"status", snap ? "ok" : "empty"},
                  {"snapshot_version", snap ? snap->version : 0}};
    res.set_content(reply.dump(), "application/json");
  });

  server.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
    Json models = Json::array();
    for (const GatewayModel& entry : service_.config().models) {
      models.push_back(Json{{"id", entry.model.id},
                            {"role", std::string(role_name(entry.model.role))},
                            {"unit_cost", entry.model.unit_cost}});
    }
    res.set_content(Json{{"models", models}}.dump(), "application/json");
  });
}

Json HttpGateway::proxy_reply(const std::string& model_id,
                              const std::string& query) const {
  std::string endpoint;
  for (const GatewayModel& entry : service_.config().models) {
    if (entry.model.id == model_id) endpoint = entry.proxy_endpoint;
  }
  if (endpoint.empty()) {
    return Json{{"error", "no proxy endpoint configured for " + model_id}};
  }
  const auto scheme_end = endpoint.find("://");
  const auto path_start = scheme_end == std::string::npos
                              ? std::string::npos
                              : endpoint.find('/', scheme_end + 3);
  const std::string origin =
      path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
  const std::string path =
      path_start == std::string::npos ? "/" : endpoint.substr(path_start);

  httplib::Client client(origin);
  Json body = {{"model", model_id},
               {"messages",
                Json::array({Json{{"role", "user"}, {"content", query}}})}};
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res || res->status / 100 != 2) {
    return Json{{"error", "upstream model call failed"}};
  }
  Json parsed = Json::parse(res->body, nullptr, false);
  return parsed.is_discarded() ? Json(res->body) : parsed;
}

HttpGateway::~HttpGateway() { stop(); }

int HttpGateway::start() {
  auto& server = impl_->server;
  const auto& config = service_.config();
  if (config.listen_port == 0) {
    impl_->port = server.bind_to_any_port(config.listen_host);
  } else {
    if (!server.bind_to_port(config.listen_host, config.listen_port)) {
      fail(Errc::IoError, "cannot bind " + config.listen_host + ":" +
                              std::to_string(config.listen_port));
    }
    impl_->port = config.listen_port;
  }
  impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void HttpGateway::stop() {
  if (impl_ && impl_->server.is_running()) {
    impl_->server.stop();
  }
  if (impl_ && impl_->worker.joinable()) {
    impl_->worker.join();
  }
}

void HttpGateway::wait() {
  if (impl_ && impl_->worker.joinable()) {
    impl_->worker.join();
  }
}

}  // namespace tagroute
