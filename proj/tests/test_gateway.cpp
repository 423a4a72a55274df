#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include <httplib.h>

#include "tagroute/gateway.hpp"
#include "tagroute/io.hpp"
#include "testsupport.hpp"

using namespace tagroute;

namespace {

struct Fixture {
  std::string dir;
  std::string table_path;
  std::string vocab_path;
  GatewayConfig config;

  explicit Fixture(const std::string& label) : dir(planted::temp_dir(label)) {
    table_path = dir + "/table.json";
    vocab_path = dir + "/vocab.json";

    const auto specs = planted::one_alternate();
    save_table(planted::planted_table(specs, 1000, 41), table_path);

    TagVocabulary vocab;
    for (std::size_t i = 0; i < planted::kTagCount; ++i) {
      vocab.counts[planted::tag_name(i)] = 10;
    }
    save_vocabulary(vocab, vocab_path);

    config.table_path = table_path;
    config.vocab_path = vocab_path;
    config.theta = 0.0;
    for (const ModelId& model : planted::model_system(specs)) {
      config.models.push_back(GatewayModel{model, ""});
    }
  }
};

RouteRequest tags_request(std::initializer_list<const char*> tags) {
  RouteRequest request;
  std::vector<std::string> raw;
  for (const char* tag : tags) raw.emplace_back(tag);
  request.tags = std::move(raw);
  return request;
}

}  // namespace

TEST_CASE("explicit-tag requests match library-level select exactly") {
  Fixture fx("gw-basic");
  RouterService service(fx.config);
  service.reload();

  const auto request = tags_request({"Skill 03", "Skill 04"});
  const RouteResponse response = service.route(request);

  TagSet tags;
  tags.add(make_tag("Skill 03"));
  tags.add(make_tag("Skill 04"));
  const auto snap = service.snapshot();
  const RoutingDecision direct = select(snap->table, tags, snap->theta);
  CHECK(response.decision == direct);
  CHECK(response.snapshot_version == snap->version);
}

TEST_CASE("an extreme theta override routes to the reference") {
  Fixture fx("gw-override");
  RouterService service(fx.config);
  service.reload();

  RouteRequest request = tags_request({"Skill 03"});
  request.theta_override = 1e9;
  CHECK(service.route(request).decision.chosen == "ref-large");

  request.theta_override = -1e9;
  CHECK(service.route(request).decision.chosen == "alt-a");
}

TEST_CASE("requests without query or tags and empty service error out") {
  Fixture fx("gw-errors");
  RouterService service(fx.config);

  try {
    service.route(tags_request({"Skill 01"}));
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::NoSnapshot);
  }

  service.reload();
  try {
    service.route(RouteRequest{});
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::BadRequest);
  }
}

TEST_CASE("query requests run tag generation plus alignment") {
  Fixture fx("gw-query");
  RouterService service(fx.config);  // stub tag provider by default
  service.reload();

  RouteRequest request;
  request.query = "Translate the following text into Chinese: hello";
  const RouteResponse response = service.route(request);
  // The stub emits "Translation", which aligns into the Skill vocabulary.
  REQUIRE(response.decision.tags_used.size() == 1);
  CHECK(response.decision.tags_used.tags()[0].name().rfind("Skill", 0) == 0);
}

TEST_CASE("tag provider failures surface as provider errors") {
  Fixture fx("gw-provider");
  const std::string empty_cache = fx.dir + "/empty.jsonl";
  write_file(empty_cache, "");
  fx.config.tag_provider.kind = ProviderKind::File;
  fx.config.tag_provider.cache_path = empty_cache;

  RouterService service(fx.config);
  service.reload();
  RouteRequest request;
  request.query = "anything";
  try {
    service.route(request);
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::MissingEntry);  // maps to 502 at the HTTP layer
  }
}

TEST_CASE("reload failures keep the previous snapshot serving") {
  Fixture fx("gw-reload");
  RouterService service(fx.config);
  const std::uint64_t v1 = service.reload();

  const std::string corrupt = fx.dir + "/corrupt.json";
  write_file(corrupt, "{ nope");
  CHECK_THROWS_AS(service.reload(corrupt, fx.vocab_path), Error);

  const RouteResponse response = service.route(tags_request({"Skill 00"}));
  CHECK(response.snapshot_version == v1);

  // identical content still bumps the version
  const std::uint64_t v2 = service.reload();
  CHECK(v2 > v1);
  CHECK(service.route(tags_request({"Skill 00"})).snapshot_version == v2);
}

TEST_CASE("reloading a grown table makes the new alternate routable") {
  Fixture fx("gw-grow");
  RouterService service(fx.config);
  service.reload();
  CHECK(service.route(tags_request({"Skill 30"})).decision.chosen ==
        "ref-large");  // alt-a is weak past Skill 25

  const auto specs = planted::two_alternates();
  save_table(planted::planted_table(specs, 2000, 43), fx.table_path);
  service.reload();
  CHECK(service.route(tags_request({"Skill 30"})).decision.chosen == "alt-b");
}

TEST_CASE("concurrent routes during reloads see single-version snapshots") {
  Fixture fx("gw-stress");

  // Two table variants cycled by the reloader thread.
  const auto specs = planted::one_alternate();
  const std::string variant_a = fx.dir + "/variant-a.json";
  const std::string variant_b = fx.dir + "/variant-b.json";
  save_table(planted::planted_table(specs, 600, 51), variant_a);
  save_table(planted::planted_table(specs, 600, 52), variant_b);

  RouterService service(fx.config);
  service.reload(variant_a, fx.vocab_path);

  std::atomic<bool> done{false};
  std::atomic<int> mismatches{0};

  std::thread reloader([&] {
    for (int i = 0; i < 25; ++i) {
      service.reload(i % 2 == 0 ? variant_b : variant_a, fx.vocab_path);
    }
    done = true;
  });

  std::vector<std::thread> routers;
  for (int t = 0; t < 4; ++t) {
    routers.emplace_back([&, t] {
      std::mt19937_64 rng(static_cast<std::uint64_t>(t));
      while (!done) {
        const std::string tag = planted::tag_name(uniform_below(rng, 50));
        RouteRequest request;
        request.tags = std::vector<std::string>{tag};
        const RouteResponse response = service.route(request);
        // replay on the snapshot the service claims it used
        const auto snap = service.snapshot();
        if (snap->version == response.snapshot_version) {
          TagSet tags;
          tags.add(make_tag(tag));
          if (!(select(snap->table, tags, snap->theta) == response.decision)) {
            ++mismatches;
          }
        }
      }
    });
  }
  reloader.join();
  for (auto& thread : routers) thread.join();
  CHECK(mismatches.load() == 0);
}

TEST_CASE("http gateway round trip") {
  Fixture fx("gw-http");
  fx.config.listen_port = 0;  // pick any free port
  RouterService service(fx.config);
  service.reload();

  HttpGateway gateway(service);
  const int port = gateway.start();
  httplib::Client client("127.0.0.1", port);

  auto health = client.Get("/healthz");
  REQUIRE(health);
  CHECK(health->status == 200);
  const Json health_body = Json::parse(health->body);
  CHECK(health_body["status"] == "ok");
  CHECK(health_body["snapshot_version"].get<std::uint64_t>() >= 1);

  auto models = client.Get("/v1/models");
  REQUIRE(models);
  const Json model_body = Json::parse(models->body);
  REQUIRE(model_body["models"].is_array());
  CHECK(model_body["models"].size() == 2);

  auto route = client.Post("/v1/route",
                           R"({"tags":["Skill 01"],"theta_override":0.0})",
                           "application/json");
  REQUIRE(route);
  CHECK(route->status == 200);
  const Json route_body = Json::parse(route->body);
  CHECK(route_body["model"] == "alt-a");
  CHECK(route_body["tags_used"][0] == "Skill 01");

  auto bad = client.Post("/v1/route", R"({})", "application/json");
  REQUIRE(bad);
  CHECK(bad->status == 400);

  auto reload = client.Post("/admin/reload", R"({})", "application/json");
  REQUIRE(reload);
  CHECK(reload->status == 200);
  CHECK(Json::parse(reload->body)["version"].get<std::uint64_t>() >= 2);

  auto broken = client.Post(
      "/admin/reload", R"({"table_path":"/definitely/missing.json"})",
      "application/json");
  REQUIRE(broken);
  CHECK(broken->status == 422);

  gateway.stop();
}

TEST_CASE("bearer token guards the http surface when configured") {
  Fixture fx("gw-auth");
  fx.config.listen_port = 0;
  fx.config.auth_token = "sesame";
  RouterService service(fx.config);
  service.reload();

  HttpGateway gateway(service);
  const int port = gateway.start();
  httplib::Client client("127.0.0.1", port);

  auto denied =
      client.Post("/v1/route", R"({"tags":["Skill 01"]})", "application/json");
  REQUIRE(denied);
  CHECK(denied->status == 401);

  httplib::Headers headers{{"Authorization", "Bearer sesame"}};
  auto allowed = client.Post("/v1/route", headers,
                             R"({"tags":["Skill 01"]})", "application/json");
  REQUIRE(allowed);
  CHECK(allowed->status == 200);

  gateway.stop();
}

TEST_CASE("proxy mode forwards the query to the chosen model") {
  // Fake upstream model endpoint.
  httplib::Server upstream;
  std::string seen_body;
  upstream.Post("/v1/chat/completions",
                [&](const httplib::Request& req, httplib::Response& res) {
                  seen_body = req.body;
                  res.set_content(R"({"choices":[{"message":{"content":"hi"}}]})",
                                  "application/json");
                });
  const int upstream_port = upstream.bind_to_any_port("127.0.0.1");
  std::thread upstream_thread([&] { upstream.listen_after_bind(); });
  upstream.wait_until_ready();

  Fixture fx("gw-proxy");
  fx.config.listen_port = 0;
  fx.config.proxy_mode = true;
  for (auto& entry : fx.config.models) {
    entry.proxy_endpoint = "http://127.0.0.1:" + std::to_string(upstream_port) +
                           "/v1/chat/completions";
  }
  RouterService service(fx.config);
  service.reload();

  HttpGateway gateway(service);
  const int port = gateway.start();
  httplib::Client client("127.0.0.1", port);

  auto res = client.Post("/v1/route",
                         R"({"query":"Translate the following text: hello"})",
                         "application/json");
  REQUIRE(res);
  CHECK(res->status == 200);
  const Json body = Json::parse(res->body);
  REQUIRE(body.contains("response"));
  CHECK(body["response"]["choices"][0]["message"]["content"] == "hi");
  CHECK(seen_body.find("Translate the following text") != std::string::npos);

  gateway.stop();
  upstream.stop();
  upstream_thread.join();
}

TEST_CASE("gateway config file parses providers and models") {
  Fixture fx("gw-config");
  const std::string path = fx.dir + "/gateway.json";
  write_file(path, R"({
    "listen": "127.0.0.1:0",
    "theta": 0.25,
    "table_path": ")" + fx.table_path + R"(",
    "vocab_path": ")" + fx.vocab_path + R"(",
    "models": [
      {"id": "ref-large", "role": "reference", "unit_cost": 13.49},
      {"id": "alt-a", "role": "alternate", "unit_cost": 2.01}
    ],
    "tag_provider": {"kind": "stub"}
  })");

  const GatewayConfig config = load_gateway_config(path);
  CHECK(config.listen_host == "127.0.0.1");
  CHECK(config.theta == 0.25);
  REQUIRE(config.models.size() == 2);
  CHECK(config.models[0].model.role == Role::Reference);

  RouterService service(config);
  service.reload();
  const auto snap = service.snapshot();
  CHECK(snap->theta == 0.25);
  CHECK(snap->table.models().at("alt-a").unit_cost == 2.01);
}
