#include "tagroute/providers.hpp"

#include <cstdlib>
#include <filesystem>
#include <utility>

#include <httplib.h>

#include "tagroute/io.hpp"
#include "tagroute/util.hpp"

namespace tagroute {

namespace {

// ---------------------------------------------------------------------------
// Built-in prompt templates (identical to the files under assets/prompts/)
// ---------------------------------------------------------------------------

constexpr std::string_view kTagTemplate = R"([System]

You are an instruction tagging system designed to provide coarse-grained tags for human instructions, aiming to identify and analyze the semantics and intentions of instructions through these tags.

Please provide coarse-grained tags, such as "Text Generation", "Spelling and Grammar Check", and "Cosplay", to clearly describe the main intentions of the provided instruction. These tags will aid in the quantitative analysis of the diversity and complexity of instructions. Here is an instruction:

[begin]

```json
{
 "instruction": "{prompt}",
}
```

[end]

Your response should include a list of tag titles and a brief explanation for each tag. Your response must strictly follow the JSON format below. Please respond in English.

[Output Format]

```json
[
  {
    "tag": str,
    "explanation": str
  }
]
```
)";

constexpr std::string_view kTagTemplateSmall = R"([System]

You are an expert text tag extractor. Your task is to identify tags that readers should focus on while engaging with the user query below.

[User Query]

{Input}
)";

constexpr std::string_view kJudgeTemplate = R"([System]

Please act as an impartial judge and evaluate the quality of responses provided by two AI assistants to the user question displayed below. Your evaluation should consider correctness and helpfulness. You will be given assistant A's answer, and assistant B's answer. Your job is to evaluate which assistant's answer is better. You should independently solve the user question step-by-step first. Then compare both assistants' answers with your answer. Identify and correct any mistakes. Avoid any position biases and ensure that the order in which the responses were presented does not influence your decision. Do not allow the length of the responses to influence your evaluation. Do not favor certain names of the assistants. Be as objective as possible. After providing your explanation, output your final verdict by strictly following this format: "A" if assistant A is better, "B" if assistant B is better, and "C" for a tie. Please answer in English.

[User Question]

```json
{
 "instruction": "{request_data}",
}
```

[The Start of Assistant A's Answer]

```json
{
 "instruction": "{answerA}",
}
```

[The End of Assistant A's Answer]

[The Start of Assistant B's Answer]

```json
{
 "instruction": "{answerB}",
}
```

[The End of Assistant B's Answer]

[Output Format]

```json
{
 "explanation": str,
 "compare_result": A/B/C
}
```
)";

std::string env_or_empty(const char* name) {
  const char* value = std::getenv(name);
  return value ? std::string(value) : std::string();
}

std::string resolve_endpoint(const ProviderConfig& config) {
  if (!config.endpoint.empty()) return config.endpoint;
  return env_or_empty("TAGROUTE_API_BASE");
}

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    fail(Errc::InvalidConfig, "endpoint '" + url + "' has no scheme");
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// POSTs the prompt as a single user message and returns the first message
// content of the response. Retries transport errors and 5xx responses up
// to max_retries additional attempts.
std::string chat_completion(const ProviderConfig& config,
                            const std::string& prompt) {
  const std::string endpoint = resolve_endpoint(config);
  if (endpoint.empty()) {
    fail(Errc::InvalidConfig,
         "remote provider needs an endpoint or TAGROUTE_API_BASE");
  }
  const ParsedUrl url = parse_url(endpoint);

  Json body = {
      {"model", config.model.empty() ? "default" : config.model},
      {"messages", Json::array({Json{{"role", "user"}, {"content", prompt}}})},
  };
  const std::string payload = body.dump();

  std::string api_key =
      config.api_key.empty() ? env_or_empty("TAGROUTE_API_KEY") : config.api_key;
  httplib::Headers headers;
  if (!api_key.empty()) {
    std::string value = api_key;
    if (config.auth_header == "Authorization" &&
        value.rfind("Bearer ", 0) != 0) {
      value = "Bearer " + value;
    }
    headers.emplace(config.auth_header, value);
  }

  httplib::Client client(url.origin);
  client.set_connection_timeout(config.timeout);
  client.set_read_timeout(config.timeout);

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
    auto res = client.Post(url.path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server returned " + std::to_string(res->status);
      continue;
    }
    if (res->status / 100 != 2) {
      fail(Errc::ProviderUnavailable,
           "endpoint returned " + std::to_string(res->status));
    }
    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded()) {
      fail(Errc::MalformedResponse, "response body is not JSON");
    }
    if (reply.contains("choices") && reply["choices"].is_array() &&
        !reply["choices"].empty()) {
      const Json& message = reply["choices"][0];
      if (message.contains("message") &&
          message["message"].contains("content") &&
          message["message"]["content"].is_string()) {
        return message["message"]["content"].get<std::string>();
      }
    }
    if (reply.contains("result") && reply["result"].is_string()) {
      return reply["result"].get<std::string>();
    }
    fail(Errc::MalformedResponse, "response carries no message content");
  }
  fail(Errc::ProviderUnavailable,
       "gave up after " + std::to_string(config.max_retries + 1) +
           " attempt(s): " + last_error);
}

// Returns the JSON payload inside the first ```...``` fence, or the whole
// text when no fence is present.
std::string strip_code_fence(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return trim(text);
  auto begin = open + 3;
  if (text.substr(begin, 4) == "json") begin += 4;
  const auto close = text.find("```", begin);
  const auto end = close == std::string_view::npos ? text.size() : close;
  return trim(text.substr(begin, end - begin));
}

std::string load_template(const ProviderConfig& config,
                          std::string_view fallback) {
  if (config.template_path.empty()) return std::string(fallback);
  return read_file(config.template_path);
}

// Keyword rules for the stub tag generator, checked in order against the
// lowercased query. At most four tags; "Text Generation" when nothing fires.
struct StubRule {
  std::string_view keyword;
  std::string_view tag;
};

constexpr StubRule kStubRules[] = {
    {"translat", "Translation"},
    {"summar", "Summarization"},
    {"classif", "Text Classification"},
    {"rewrit", "Text Rewriting"},
    {"rephras", "Text Rewriting"},
    {"slogan", "Advertising"},
    {"advertis", "Advertising"},
    {"marketing", "Advertising"},
    {"keyword", "Keyword Extraction"},
    {"json", "Output Formatting"},
    {"format", "Output Formatting"},
    {"code", "Code Generation"},
    {"program", "Code Generation"},
    {"math", "Problem Solving"},
    {"calculat", "Problem Solving"},
    {"geometr", "Geometry"},
    {"triangle", "Geometry"},
    {"poem", "Creative Writing"},
    {"story", "Creative Writing"},
    {"brainstorm", "Brainstorming"},
    {"idea", "Brainstorming"},
    {"extract", "Information Extraction"},
    {"question", "Question Answering"},
    {"?", "Question Answering"},
};

std::string verdict_complement(const std::string& verdict) {
  if (verdict == "A") return "B";
  if (verdict == "B") return "A";
  return verdict;
}

}  // namespace

std::string_view provider_kind_name(ProviderKind kind) {
  switch (kind) {
    case ProviderKind::Remote: return "remote";
    case ProviderKind::File: return "file";
    case ProviderKind::Stub: return "stub";
  }
  return "stub";
}

ProviderKind parse_provider_kind(std::string_view text) {
  if (text == "remote") return ProviderKind::Remote;
  if (text == "file") return ProviderKind::File;
  if (text == "stub") return ProviderKind::Stub;
  fail(Errc::ParseError, "unknown provider kind '" + std::string(text) + "'");
}

ProviderConfig provider_config_from_json(const nlohmann::json& doc) {
  ProviderConfig config;
  config.kind = parse_provider_kind(doc.value("kind", "stub"));
  config.endpoint = doc.value("endpoint", "");
  config.model = doc.value("model", "");
  config.template_path = doc.value("template_path", "");
  config.cache_path = doc.value("cache_path", "");
  config.timeout = std::chrono::milliseconds(doc.value("timeout_ms", 30000));
  config.max_retries = doc.value("max_retries", 2);
  config.seed = doc.value("seed", std::uint64_t{0});
  config.dim = doc.value("dim", std::size_t{64});
  config.auth_header = doc.value("auth_header", "Authorization");
  config.api_key = doc.value("api_key", "");
  config.swap_rejudge = doc.value("swap_rejudge", false);
  return config;
}

void validate_provider_config(const ProviderConfig& config,
                              std::string_view capability) {
  if (config.max_retries < 0) {
    fail(Errc::InvalidConfig, "max_retries must be >= 0");
  }
  if (config.kind == ProviderKind::Remote && resolve_endpoint(config).empty()) {
    fail(Errc::InvalidConfig, std::string(capability) +
                                  ": remote provider requires an endpoint");
  }
  if (config.kind == ProviderKind::File && config.cache_path.empty()) {
    fail(Errc::InvalidConfig,
         std::string(capability) + ": file provider requires cache_path");
  }
  if (config.dim == 0) {
    fail(Errc::InvalidConfig, "embedding dimension must be positive");
  }
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars) {
  std::string out(tmpl);
  for (const auto& [key, value] : vars) {
    const std::string needle = "{" + key + "}";
    std::size_t pos = 0;
    while ((pos = out.find(needle, pos)) != std::string::npos) {
      out.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return out;
}

std::string_view default_tag_template() { return kTagTemplate; }
std::string_view default_tag_template_small() { return kTagTemplateSmall; }
std::string_view default_judge_template() { return kJudgeTemplate; }

// ---------------------------------------------------------------------------
// TagGenerator
// ---------------------------------------------------------------------------

TagGenerator::TagGenerator(ProviderConfig config)
    : config_(std::move(config)) {
  validate_provider_config(config_, "tag generator");
  if (config_.kind == ProviderKind::Remote) {
    template_text_ = load_template(config_, kTagTemplate);
  }
  if (config_.kind == ProviderKind::File) {
    for (const Json& row : read_jsonl(config_.cache_path)) {
      std::vector<std::string> tags;
      for (const Json& tag : row.value("tags", Json::array())) {
        tags.push_back(tag.get<std::string>());
      }
      if (row.contains("query_id")) {
        cache_by_id_[row["query_id"].get<std::string>()] = tags;
      }
      if (row.contains("query_hash")) {
        cache_by_hash_[row["query_hash"].get<std::string>()] = tags;
      }
    }
  }
}

std::vector<std::string> TagGenerator::generate(std::string_view query,
                                                std::string_view query_id) const {
  if (trim(query).empty()) fail(Errc::EmptyInput, "query is empty");
  switch (config_.kind) {
    case ProviderKind::Remote:
      return generate_remote(query);
    case ProviderKind::Stub:
      return generate_stub(query);
    case ProviderKind::File: {
      if (!query_id.empty()) {
        auto it = cache_by_id_.find(std::string(query_id));
        if (it != cache_by_id_.end()) return it->second;
      }
      auto it = cache_by_hash_.find(to_hex(fnv1a64(query)));
      if (it != cache_by_hash_.end()) return it->second;
      fail(Errc::MissingEntry,
           "no cached tags for query id '" + std::string(query_id) + "'");
    }
  }
  fail(Errc::InvalidConfig, "unreachable provider kind");
}

std::vector<std::string> TagGenerator::generate_remote(
    std::string_view query) const {
  const std::string prompt =
      render_template(template_text_, {{"prompt", std::string(query)},
                                       {"Input", std::string(query)}});
  const std::string content = chat_completion(config_, prompt);
  Json payload = Json::parse(strip_code_fence(content), nullptr, false);
  if (payload.is_discarded() || !payload.is_array()) {
    fail(Errc::MalformedResponse, "tag payload is not a JSON array");
  }
  std::vector<std::string> tags;
  for (const Json& item : payload) {
    if (!item.is_object() || !item.contains("tag") ||
        !item["tag"].is_string()) {
      fail(Errc::MalformedResponse, "tag entry lacks a string 'tag' field");
    }
    tags.push_back(item["tag"].get<std::string>());
  }
  return tags;
}

std::vector<std::string> TagGenerator::generate_stub(
    std::string_view query) const {
  const std::string lowered = to_lower_ascii(query);
  std::vector<std::string> tags;
  for (const StubRule& rule : kStubRules) {
    if (tags.size() >= 4) break;
    if (lowered.find(rule.keyword) == std::string::npos) continue;
    const std::string tag(rule.tag);
    bool seen = false;
    for (const auto& existing : tags) seen = seen || existing == tag;
    if (!seen) tags.push_back(tag);
  }
  if (tags.empty()) tags.emplace_back("Text Generation");
  return tags;
}

// ---------------------------------------------------------------------------
// PairJudge
// ---------------------------------------------------------------------------

std::string judge_cache_key(std::string_view query, std::string_view answer_a,
                            std::string_view answer_b) {
  std::uint64_t h = fnv1a64(query);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(answer_a, h);
  h = fnv1a64("\x1f", h);
  h = fnv1a64(answer_b, h);
  return to_hex(h);
}

PairJudge::PairJudge(ProviderConfig config) : config_(std::move(config)) {
  validate_provider_config(config_, "pair judge");
  if (config_.kind == ProviderKind::Remote) {
    template_text_ = load_template(config_, kJudgeTemplate);
  }
  if (config_.kind == ProviderKind::File) {
    for (const Json& row : read_jsonl(config_.cache_path)) {
      JudgeVerdict verdict;
      verdict.explanation = row.value("explanation", "");
      verdict.compare_result = row.value("compare_result", "");
      if (verdict.compare_result != "A" && verdict.compare_result != "B" &&
          verdict.compare_result != "C") {
        fail(Errc::MalformedResponse,
             "cached verdict '" + verdict.compare_result + "' is not A/B/C");
      }
      cache_[row.value("key", "")] = verdict;
    }
  }
}

JudgeVerdict PairJudge::judge(std::string_view query, std::string_view answer_a,
                              std::string_view answer_b) const {
  if (trim(query).empty() || trim(answer_a).empty() || trim(answer_b).empty()) {
    fail(Errc::EmptyInput, "query and both answers must be nonempty");
  }
  JudgeVerdict first = judge_once(query, answer_a, answer_b);
  if (!config_.swap_rejudge) return first;

  JudgeVerdict swapped = judge_once(query, answer_b, answer_a);
  if (verdict_complement(swapped.compare_result) == first.compare_result) {
    return first;
  }
  return JudgeVerdict{"position swap disagreed; resolved to tie", "C"};
}

JudgeVerdict PairJudge::judge_once(std::string_view query,
                                   std::string_view answer_a,
                                   std::string_view answer_b) const {
  switch (config_.kind) {
    case ProviderKind::Remote:
      return judge_remote(query, answer_a, answer_b);
    case ProviderKind::Stub:
      return judge_stub(query, answer_a, answer_b);
    case ProviderKind::File: {
      auto it = cache_.find(judge_cache_key(query, answer_a, answer_b));
      if (it == cache_.end()) {
        fail(Errc::MissingEntry, "no cached verdict for this pair");
      }
      return it->second;
    }
  }
  fail(Errc::InvalidConfig, "unreachable provider kind");
}

JudgeVerdict PairJudge::judge_remote(std::string_view query,
                                     std::string_view answer_a,
                                     std::string_view answer_b) const {
  const std::string prompt =
      render_template(template_text_, {{"request_data", std::string(query)},
                                       {"answerA", std::string(answer_a)},
                                       {"answerB", std::string(answer_b)}});
  const std::string content = chat_completion(config_, prompt);
  Json payload = Json::parse(strip_code_fence(content), nullptr, false);
  if (payload.is_discarded() || !payload.is_object() ||
      !payload.contains("compare_result")) {
    fail(Errc::MalformedResponse, "verdict payload lacks compare_result");
  }
  JudgeVerdict verdict;
  verdict.explanation = payload.value("explanation", "");
  verdict.compare_result = trim(payload["compare_result"].is_string()
                                    ? payload["compare_result"].get<std::string>()
                                    : payload["compare_result"].dump());
  if (verdict.compare_result != "A" && verdict.compare_result != "B" &&
      verdict.compare_result != "C") {
    fail(Errc::MalformedResponse,
         "compare_result '" + verdict.compare_result + "' is not A/B/C");
  }
  return verdict;
}

JudgeVerdict PairJudge::judge_stub(std::string_view query,
                                   std::string_view answer_a,
                                   std::string_view answer_b) const {
  // Content hashes make the verdict follow answers, not positions: swapping
  // the answers swaps A and B while ties stay ties.
  const std::uint64_t context = fnv1a64(query) ^ config_.seed;
  const std::uint64_t ha = fnv1a64(answer_a, kFnvOffset ^ context);
  const std::uint64_t hb = fnv1a64(answer_b, kFnvOffset ^ context);
  JudgeVerdict verdict;
  verdict.explanation = "deterministic stub comparison";
  if ((ha ^ hb) % 5 == 0) {
    verdict.compare_result = "C";
  } else {
    verdict.compare_result = ha > hb ? "A" : "B";
  }
  return verdict;
}

// ---------------------------------------------------------------------------
// TagEmbedder
// ---------------------------------------------------------------------------

Embedding trigram_embedding(std::string_view tag_name, std::size_t dim) {
  const std::string lowered = to_lower_ascii(tag_name);
  Embedding e;
  e.values.assign(dim, 0.0);
  if (lowered.size() < 3) {
    e.values[fnv1a64(lowered) % dim] += 1.0;
  } else {
    for (std::size_t i = 0; i + 3 <= lowered.size(); ++i) {
      e.values[fnv1a64(std::string_view(lowered).substr(i, 3)) % dim] += 1.0;
    }
  }
  l2_normalize(e);
  return e;
}

TagEmbedder::TagEmbedder(ProviderConfig config) : config_(std::move(config)) {
  validate_provider_config(config_, "tag embedder");
  if (!config_.cache_path.empty() &&
      std::filesystem::exists(config_.cache_path)) {
    for (const Json& row : read_jsonl(config_.cache_path)) {
      Embedding e;
      for (const Json& v : row.value("values", Json::array())) {
        e.values.push_back(v.get<double>());
      }
      const auto stated = row.value("dim", e.values.size());
      if (stated != e.values.size() || e.values.size() != config_.dim) {
        fail(Errc::DimensionMismatch,
             "cached vector for '" + row.value("tag", "") + "' has dim " +
                 std::to_string(e.values.size()) + ", configured " +
                 std::to_string(config_.dim));
      }
      if (!is_normalized(e)) l2_normalize(e);
      cache_[row.value("tag", "")] = std::move(e);
    }
  }
}

Embedding TagEmbedder::embed(const Tag& tag) const {
  {
    std::shared_lock lock(mutex_);
    auto it = cache_.find(tag.name());
    if (it != cache_.end()) return it->second;
  }

  Embedding e;
  switch (config_.kind) {
    case ProviderKind::Remote:
      e = embed_remote(tag);
      break;
    case ProviderKind::Stub:
      e = embed_stub(tag);
      break;
    case ProviderKind::File:
      fail(Errc::MissingEntry, "no cached embedding for '" + tag.name() + "'");
  }
  if (e.dim() != config_.dim) {
    fail(Errc::DimensionMismatch, "provider returned dim " +
                                      std::to_string(e.dim()) + ", configured " +
                                      std::to_string(config_.dim));
  }

  std::unique_lock lock(mutex_);
  auto [it, inserted] = cache_.emplace(tag.name(), std::move(e));
  (void)inserted;  // a concurrent insert of the same tag wins, values equal
  return it->second;
}

Embedding TagEmbedder::embed_remote(const Tag& tag) const {
  const std::string endpoint = resolve_endpoint(config_);
  const ParsedUrl url = parse_url(endpoint);

  Json body = {{"model", config_.model.empty() ? "default" : config_.model},
               {"input", Json::array({tag.name()})}};

  httplib::Client client(url.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);

  std::string api_key =
      config_.api_key.empty() ? env_or_empty("TAGROUTE_API_KEY") : config_.api_key;
  httplib::Headers headers;
  if (!api_key.empty()) {
    std::string value = api_key;
    if (config_.auth_header == "Authorization" &&
        value.rfind("Bearer ", 0) != 0) {
      value = "Bearer " + value;
    }
    headers.emplace(config_.auth_header, value);
  }

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    auto res = client.Post(url.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server returned " + std::to_string(res->status);
      continue;
    }
    if (res->status / 100 != 2) {
      fail(Errc::ProviderUnavailable,
           "endpoint returned " + std::to_string(res->status));
    }
    Json reply = Json::parse(res->body, nullptr, false);
    if (reply.is_discarded() || !reply.contains("data") ||
        !reply["data"].is_array() || reply["data"].empty() ||
        !reply["data"][0].contains("embedding")) {
      fail(Errc::MalformedResponse, "embedding payload missing data[0].embedding");
    }
    Embedding e;
    for (const Json& v : reply["data"][0]["embedding"]) {
      e.values.push_back(v.get<double>());
    }
    l2_normalize(e);
    return e;
  }
  fail(Errc::ProviderUnavailable,
       "gave up after " + std::to_string(config_.max_retries + 1) +
           " attempt(s): " + last_error);
}

Embedding TagEmbedder::embed_stub(const Tag& tag) const {
  return trigram_embedding(tag.name(), config_.dim);
}

void TagEmbedder::save_cache(const std::string& path) const {
  std::vector<Json> rows;
  std::shared_lock lock(mutex_);
  for (const auto& [name, e] : cache_) {
    rows.push_back(Json{{"tag", name}, {"dim", e.dim()}, {"values", e.values}});
  }
  lock.unlock();
  write_jsonl(path, rows);
}

}  // namespace tagroute
