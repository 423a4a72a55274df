#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>

#include "tagroute/io.hpp"
#include "tagroute/providers.hpp"
#include "tagroute/util.hpp"
#include "testsupport.hpp"

using namespace tagroute;

namespace {

ProviderConfig stub_config() {
  ProviderConfig config;
  config.kind = ProviderKind::Stub;
  return config;
}

// Minimal chat-completion endpoint serving a canned content string, with a
// configurable number of leading failures for retry tests.
struct FakeServer {
  httplib::Server server;
  std::thread worker;
  int port = 0;
  std::atomic<int> requests{0};
  std::atomic<int> failures_left{0};
  std::string content;
  std::string seen_auth;
  Json seen_body;

  explicit FakeServer(std::string reply_content)
      : content(std::move(reply_content)) {
    server.Post("/v1/chat/completions",
                [this](const httplib::Request& req, httplib::Response& res) {
                  ++requests;
                  seen_auth = req.get_header_value("Authorization");
                  seen_body = Json::parse(req.body, nullptr, false);
                  if (failures_left.fetch_sub(1) > 0) {
                    res.status = 503;
                    return;
                  }
                  Json reply = {
                      {"choices",
                       Json::array({Json{{"message", Json{{"role", "assistant"},
                                                          {"content", content}}}}})}};
                  res.set_content(reply.dump(), "application/json");
                });
    port = server.bind_to_any_port("127.0.0.1");
    worker = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
    failures_left = 0;
  }

  ~FakeServer() {
    server.stop();
    worker.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions";
  }
};

}  // namespace

TEST_CASE("render_template substitutes placeholders only") {
  const std::string out = render_template(
      "json {\"x\": \"{prompt}\"} and {missing} and {prompt}",
      {{"prompt", "hello"}});
  CHECK(out == "json {\"x\": \"hello\"} and {missing} and hello");
}

TEST_CASE("provider config validation") {
  ProviderConfig remote;
  remote.kind = ProviderKind::Remote;
  remote.endpoint = "";
  CHECK_THROWS_AS(validate_provider_config(remote, "t"), Error);

  ProviderConfig file;
  file.kind = ProviderKind::File;
  CHECK_THROWS_AS(validate_provider_config(file, "t"), Error);

  ProviderConfig negative = stub_config();
  negative.max_retries = -1;
  CHECK_THROWS_AS(validate_provider_config(negative, "t"), Error);
}

TEST_CASE("stub tag generator applies the keyword rule table") {
  const TagGenerator generator(stub_config());
  const auto tags = generator.generate(
      "Translate the following text into Chinese: To cool down, a snake moves "
      "into the shade.");
  REQUIRE(tags.size() == 1);
  CHECK(tags[0] == "Translation");
}

TEST_CASE("stub tag generator emits one to four tags, deterministically") {
  const TagGenerator generator(stub_config());
  const char* queries[] = {
      "Write a story with a poem inside, output as json, and translate it",
      "why is the sky blue?",
      "hello there",
      "Summarize and classify this text, then extract keywords in json format",
  };
  for (const char* query : queries) {
    const auto tags = generator.generate(query);
    CHECK(tags.size() >= 1);
    CHECK(tags.size() <= 4);
    CHECK(generator.generate(query) == tags);
  }
  CHECK_THROWS_AS(generator.generate("  "), Error);
}

TEST_CASE("file tag generator replays the cache") {
  const std::string dir = planted::temp_dir("tagcache");
  const std::string path = dir + "/tags.jsonl";
  const std::string query = "some exact query text";
  write_jsonl(path, {Json{{"query_id", "q1"},
                          {"query_hash", to_hex(fnv1a64(query))},
                          {"tags", Json::array({"Alpha", "Beta"})}}});

  ProviderConfig config;
  config.kind = ProviderKind::File;
  config.cache_path = path;
  const TagGenerator generator(config);

  const auto by_id = generator.generate("anything", "q1");
  REQUIRE(by_id.size() == 2);
  CHECK(by_id[0] == "Alpha");
  CHECK(by_id[1] == "Beta");

  const auto by_hash = generator.generate(query);
  CHECK(by_hash == by_id);

  CHECK_THROWS_AS(generator.generate("unknown", "nope"), Error);
  try {
    generator.generate("unknown", "nope");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::MissingEntry);
  }
}

TEST_CASE("stub judge is deterministic and position-antisymmetric") {
  const PairJudge judge(stub_config());
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const std::string q = "q" + std::to_string(uniform_below(rng, 50));
    const std::string a = "answer-" + std::to_string(uniform_below(rng, 40));
    const std::string b = "answer-" + std::to_string(uniform_below(rng, 40));
    const JudgeVerdict forward = judge.judge(q, a, b);
    const JudgeVerdict swapped = judge.judge(q, b, a);
    CHECK(judge.judge(q, a, b).compare_result == forward.compare_result);
    if (forward.compare_result == "C") {
      CHECK(swapped.compare_result == "C");
    } else {
      CHECK(swapped.compare_result != forward.compare_result);
      CHECK(swapped.compare_result != "C");
    }
    if (a == b) CHECK(forward.compare_result == "C");
  }
}

TEST_CASE("stub judge varies with the seed") {
  ProviderConfig seeded = stub_config();
  seeded.seed = 99;
  const PairJudge a(stub_config());
  const PairJudge b(seeded);
  int differing = 0;
  for (int i = 0; i < 50; ++i) {
    const std::string q = "query " + std::to_string(i);
    if (a.judge(q, "left", "right").compare_result !=
        b.judge(q, "left", "right").compare_result) {
      ++differing;
    }
  }
  CHECK(differing > 0);
}

TEST_CASE("file judge replays verdicts and swap-rejudge resolves to tie") {
  const std::string dir = planted::temp_dir("judgecache");
  const std::string path = dir + "/verdicts.jsonl";
  // Plant a biased pair: A wins both orders, which a swapped rejudge must
  // treat as disagreement.
  write_jsonl(path,
              {Json{{"key", judge_cache_key("q", "x", "y")},
                    {"explanation", "planted"},
                    {"compare_result", "A"}},
               Json{{"key", judge_cache_key("q", "y", "x")},
                    {"explanation", "planted"},
                    {"compare_result", "A"}}});

  ProviderConfig config;
  config.kind = ProviderKind::File;
  config.cache_path = path;
  const PairJudge plain(config);
  CHECK(plain.judge("q", "x", "y").compare_result == "A");

  config.swap_rejudge = true;
  const PairJudge swapping(config);
  CHECK(swapping.judge("q", "x", "y").compare_result == "C");

  CHECK_THROWS_AS(plain.judge("q", "x", "unseen"), Error);
}

TEST_CASE("stub embedding contract") {
  const TagEmbedder embedder(stub_config());
  const Embedding a = embedder.embed(make_tag("Text Generation"));
  CHECK(a.dim() == 64);
  CHECK(is_normalized(a));

  const Embedding b = embedder.embed(make_tag("Text Generation"));
  CHECK(a.values == b.values);  // cache: bitwise identical

  const Embedding close = embedder.embed(make_tag("Text Generation!"));
  const Embedding far = embedder.embed(make_tag("Geometry"));
  CHECK(cosine(a, close) > cosine(a, far));

  const Embedding tiny = embedder.embed(make_tag("ab"));
  CHECK(is_normalized(tiny));
}

TEST_CASE("embedding cache round-trip and dimension check") {
  const std::string dir = planted::temp_dir("embcache");
  const std::string path = dir + "/embeddings.jsonl";

  const TagEmbedder fresh(stub_config());
  const Embedding original = fresh.embed(make_tag("Translation"));
  fresh.save_cache(path);

  ProviderConfig file_config;
  file_config.kind = ProviderKind::File;
  file_config.cache_path = path;
  const TagEmbedder replay(file_config);
  CHECK(replay.embed(make_tag("Translation")).values == original.values);
  CHECK_THROWS_AS(replay.embed(make_tag("Unseen Tag")), Error);

  ProviderConfig wrong_dim = file_config;
  wrong_dim.dim = 32;
  CHECK_THROWS_AS(TagEmbedder{wrong_dim}, Error);
  try {
    TagEmbedder bad(wrong_dim);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::DimensionMismatch);
  }
}

TEST_CASE("remote tag provider parses fenced payloads and sends auth") {
  FakeServer server(
      "Here you go:\n```json\n[{\"tag\":\"Translation\",\"explanation\":\"x\"},"
      "{\"tag\":\"Poetry\",\"explanation\":\"y\"}]\n```\n");

  ProviderConfig config;
  config.kind = ProviderKind::Remote;
  config.endpoint = server.endpoint();
  config.model = "judge-large";
  config.api_key = "sekrit";
  const TagGenerator generator(config);

  const auto tags = generator.generate("Translate this");
  REQUIRE(tags.size() == 2);
  CHECK(tags[0] == "Translation");
  CHECK(tags[1] == "Poetry");
  CHECK(server.seen_auth == "Bearer sekrit");
  CHECK(server.seen_body["model"] == "judge-large");
  REQUIRE(server.seen_body["messages"].is_array());
  CHECK(server.seen_body["messages"][0]["role"] == "user");
  const std::string prompt =
      server.seen_body["messages"][0]["content"].get<std::string>();
  CHECK(prompt.find("Translate this") != std::string::npos);
}

TEST_CASE("remote judge parses verdicts and retries transient failures") {
  FakeServer server(
      "```json\n{\"explanation\":\"close call\",\"compare_result\":\"C\"}\n```");

  ProviderConfig config;
  config.kind = ProviderKind::Remote;
  config.endpoint = server.endpoint();
  config.max_retries = 2;
  const PairJudge judge(config);

  server.failures_left = 2;
  server.requests = 0;
  const JudgeVerdict verdict = judge.judge("q", "a", "b");
  CHECK(verdict.compare_result == "C");
  CHECK(server.requests.load() == 3);  // two 503s, then success

  server.failures_left = 10;
  server.requests = 0;
  CHECK_THROWS_AS(judge.judge("q", "a", "b"), Error);
  CHECK(server.requests.load() == 3);  // never exceeds 1 + max_retries
  try {
    server.failures_left = 10;
    judge.judge("q", "a", "b");
  } catch (const Error& err) {
    CHECK(err.code() == Errc::ProviderUnavailable);
  }
}

TEST_CASE("remote provider flags malformed payloads") {
  FakeServer server("not json at all");
  ProviderConfig config;
  config.kind = ProviderKind::Remote;
  config.endpoint = server.endpoint();
  config.max_retries = 0;
  const TagGenerator generator(config);
  try {
    generator.generate("query");
    CHECK(false);
  } catch (const Error& err) {
    CHECK(err.code() == Errc::MalformedResponse);
  }
}
