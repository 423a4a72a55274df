#pragma once
// Pluggable clients for the three external capabilities: tag generation,
// pairwise judging and tag embedding. Each comes in three kinds:
//
//   remote — generic chat-completion / embeddings HTTP endpoint
//   file   — offline replay from a JSON Lines cache
//   stub   — deterministic, dependency-free implementation for tests
//
// Prompt templates are editable text assets substituted with exact
// {placeholder} string replacement; defaults ship under assets/prompts/.

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "tagroute/types.hpp"

namespace tagroute {

enum class ProviderKind { Remote, File, Stub };

std::string_view provider_kind_name(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view text);

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Stub;
  std::string endpoint;       // remote; falls back to TAGROUTE_API_BASE
  std::string model;          // remote model name placed in the request body
  std::string template_path;  // prompt template override
  std::string cache_path;     // file-backed store (required for kind=file)
  std::chrono::milliseconds timeout{30000};
  int max_retries = 2;
  std::uint64_t seed = 0;     // stub determinism
  std::size_t dim = 64;       // embedding dimension
  std::string auth_header = "Authorization";
  std::string api_key;        // falls back to TAGROUTE_API_KEY
  bool swap_rejudge = false;  // judge twice with swapped positions
};

// remote requires a resolvable endpoint; file requires cache_path.
void validate_provider_config(const ProviderConfig& config,
                              std::string_view capability);

// Provider block as it appears in config files: {kind, endpoint, model,
// template_path, cache_path, timeout_ms, max_retries, seed, dim,
// auth_header, api_key, swap_rejudge}.
ProviderConfig provider_config_from_json(const nlohmann::json& doc);

// Replaces every occurrence of "{key}" for the given variables. No other
// brace handling: literal braces in the template pass through untouched.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& vars);

// Built-in copies of the shipped template assets.
std::string_view default_tag_template();
std::string_view default_tag_template_small();
std::string_view default_judge_template();

struct JudgeVerdict {
  std::string explanation;
  std::string compare_result;  // one of "A", "B", "C"
};

// ---------------------------------------------------------------------------
// Tag generation
// ---------------------------------------------------------------------------

class TagGenerator {
 public:
  explicit TagGenerator(ProviderConfig config);

  // Returns the provider's tag titles in emission order. query_id is used
  // by the file provider when present; otherwise entries are keyed by a
  // 64-bit hash of the exact query text.
  std::vector<std::string> generate(std::string_view query,
                                    std::string_view query_id = {}) const;

  const ProviderConfig& config() const noexcept { return config_; }

 private:
  std::vector<std::string> generate_remote(std::string_view query) const;
  std::vector<std::string> generate_stub(std::string_view query) const;

  ProviderConfig config_;
  std::string template_text_;
  std::map<std::string, std::vector<std::string>> cache_by_id_;
  std::map<std::string, std::vector<std::string>> cache_by_hash_;
};

// ---------------------------------------------------------------------------
// Pairwise judging
// ---------------------------------------------------------------------------

class PairJudge {
 public:
  explicit PairJudge(ProviderConfig config);

  // Judges answer_a (position A) against answer_b (position B). With
  // swap_rejudge enabled the pair is judged twice with swapped positions
  // and any disagreement resolves to a tie.
  JudgeVerdict judge(std::string_view query, std::string_view answer_a,
                     std::string_view answer_b) const;

  const ProviderConfig& config() const noexcept { return config_; }

 private:
  JudgeVerdict judge_once(std::string_view query, std::string_view answer_a,
                          std::string_view answer_b) const;
  JudgeVerdict judge_remote(std::string_view query, std::string_view answer_a,
                            std::string_view answer_b) const;
  JudgeVerdict judge_stub(std::string_view query, std::string_view answer_a,
                          std::string_view answer_b) const;

  ProviderConfig config_;
  std::string template_text_;
  std::map<std::string, JudgeVerdict> cache_;  // key: hash of (q, a, b)
};

// Cache key used by the file-backed judge.
std::string judge_cache_key(std::string_view query, std::string_view answer_a,
                            std::string_view answer_b);

// ---------------------------------------------------------------------------
// Tag embedding
// ---------------------------------------------------------------------------

// Anything that maps tags to L2-normalized vectors of a fixed dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual Embedding embed(const Tag& tag) const = 0;
  virtual std::size_t dim() const = 0;
};

class TagEmbedder final : public Embedder {
 public:
  explicit TagEmbedder(ProviderConfig config);

  // Results are cached by exact tag name; repeated calls return bitwise
  // identical vectors. Concurrent reads, serialized inserts.
  Embedding embed(const Tag& tag) const override;
  std::size_t dim() const override { return config_.dim; }

  // Persists the in-memory cache as JSON Lines {tag, dim, values}.
  void save_cache(const std::string& path) const;

  const ProviderConfig& config() const noexcept { return config_; }

 private:
  Embedding embed_remote(const Tag& tag) const;
  Embedding embed_stub(const Tag& tag) const;

  ProviderConfig config_;
  mutable std::shared_mutex mutex_;
  mutable std::map<std::string, Embedding> cache_;
};

// Stub embedding used when no external model is configured: character
// trigrams of the lowercased tag hashed into `dim` buckets, then
// L2-normalized. Deterministic across runs and platforms.
Embedding trigram_embedding(std::string_view tag_name, std::size_t dim);

}  // namespace tagroute
