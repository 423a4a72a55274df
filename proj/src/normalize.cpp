#include "tagroute/normalize.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "tagroute/io.hpp"
#include "tagroute/util.hpp"

namespace tagroute {

namespace {

struct Codepoint {
  char32_t value;
  std::size_t length;
};

Codepoint decode_utf8(std::string_view text, std::size_t pos) {
  const auto byte = [&](std::size_t i) {
    return static_cast<unsigned char>(text[pos + i]);
  };
  const unsigned char lead = byte(0);
  if (lead < 0x80) return {lead, 1};
  if ((lead >> 5) == 0x6 && pos + 1 < text.size()) {
    return {static_cast<char32_t>(((lead & 0x1F) << 6) | (byte(1) & 0x3F)), 2};
  }
  if ((lead >> 4) == 0xE && pos + 2 < text.size()) {
    return {static_cast<char32_t>(((lead & 0x0F) << 12) |
                                  ((byte(1) & 0x3F) << 6) | (byte(2) & 0x3F)),
            3};
  }
  if ((lead >> 3) == 0x1E && pos + 3 < text.size()) {
    return {static_cast<char32_t>(((lead & 0x07) << 18) |
                                  ((byte(1) & 0x3F) << 12) |
                                  ((byte(2) & 0x3F) << 6) | (byte(3) & 0x3F)),
            4};
  }
  return {0xFFFD, 1};  // invalid sequence: treated as a special character
}

// Letter/digit test. ASCII is exact; beyond ASCII we keep everything that
// is not in the common punctuation and symbol blocks (general punctuation,
// CJK punctuation, fullwidth forms), which covers the scripts seen in
// open-domain query logs without shipping full category tables.
bool is_word_codepoint(char32_t cp) {
  if (cp < 0x80) {
    return std::isalnum(static_cast<int>(cp)) != 0;
  }
  if (cp >= 0x00A1 && cp <= 0x00BF) return false;  // Latin-1 signs
  if (cp == 0x00D7 || cp == 0x00F7) return false;  // multiply / divide signs
  if (cp >= 0x2000 && cp <= 0x206F) return false;  // general punctuation
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK symbols
  if (cp == 0x30A0 || cp == 0x30FB) return false;  // katakana dot / dash
  if (cp >= 0xFF01 && cp <= 0xFF0F) return false;  // fullwidth ! to /
  if (cp >= 0xFF1A && cp <= 0xFF20) return false;  // fullwidth : to @
  if (cp >= 0xFF3B && cp <= 0xFF40) return false;  // fullwidth [ to `
  if (cp >= 0xFF5B && cp <= 0xFF65) return false;  // fullwidth { to halfwidth .
  if (cp == 0xFFFD) return false;
  return true;
}

std::string cumulative_argmin_name(const std::vector<Tag>& members,
                                   const std::map<std::string, Embedding>& embeddings) {
  double best_sum = std::numeric_limits<double>::infinity();
  std::string best_name;
  for (const Tag& tag : members) {
    double sum = 0.0;
    const Embedding& e = embeddings.at(tag.name());
    for (const Tag& other : members) {
      if (other.name() == tag.name()) continue;
      sum += cosine(e, embeddings.at(other.name()));
    }
    if (sum < best_sum ||
        (sum == best_sum && tag.name() > best_name)) {
      best_sum = sum;
      best_name = tag.name();
    }
  }
  return best_name;
}

// Classic DBSCAN over precomputed unit vectors; the neighborhood of a
// point includes the point itself. Returns -1 for noise.
std::vector<int> dbscan_cosine(const std::vector<Embedding>& points,
                               const ClusterParams& params) {
  const std::size_t n = points.size();
  constexpr int kUnvisited = -2;
  constexpr int kNoise = -1;
  std::vector<int> labels(n, kUnvisited);

  const auto neighbors = [&](std::size_t i) {
    std::vector<std::size_t> result;
    for (std::size_t j = 0; j < n; ++j) {
      if (1.0 - cosine(points[i], points[j]) <= params.eps) result.push_back(j);
    }
    return result;
  };

  int next_cluster = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != kUnvisited) continue;
    auto seed = neighbors(i);
    if (seed.size() < static_cast<std::size_t>(params.min_pts)) {
      labels[i] = kNoise;
      continue;
    }
    const int cluster = next_cluster++;
    labels[i] = cluster;
    for (std::size_t k = 0; k < seed.size(); ++k) {
      const std::size_t j = seed[k];
      if (labels[j] == kNoise) labels[j] = cluster;
      if (labels[j] != kUnvisited) continue;
      labels[j] = cluster;
      auto reach = neighbors(j);
      if (reach.size() >= static_cast<std::size_t>(params.min_pts)) {
        seed.insert(seed.end(), reach.begin(), reach.end());
      }
    }
  }
  return labels;
}

}  // namespace

void validate_cluster_params(const ClusterParams& params) {
  if (!(params.eps > 0.0 && params.eps < 1.0)) {
    fail(Errc::InvalidConfig, "eps must lie in (0, 1)");
  }
  if (params.min_pts < 2) {
    fail(Errc::InvalidConfig, "min_pts must be >= 2");
  }
}

std::vector<Tag> TagVocabulary::tags() const {
  std::vector<Tag> out;
  out.reserve(counts.size());
  for (const auto& [name, count] : counts) {
    (void)count;
    out.push_back(make_tag(name));
  }
  return out;
}

std::uint64_t TagVocabulary::total_count() const {
  std::uint64_t total = 0;
  for (const auto& [name, count] : counts) {
    (void)name;
    total += count;
  }
  return total;
}

Tag rule_aggregate(std::string_view raw) {
  std::string spaced;
  spaced.reserve(raw.size());
  for (std::size_t pos = 0; pos < raw.size();) {
    const Codepoint cp = decode_utf8(raw, pos);
    if (is_word_codepoint(cp.value)) {
      spaced.append(raw.substr(pos, cp.length));
    } else {
      spaced.push_back(' ');
    }
    pos += cp.length;
  }

  std::string result;
  result.reserve(spaced.size());
  bool word_start = true;
  bool pending_space = false;
  for (char c : spaced) {
    if (c == ' ') {
      pending_space = !result.empty();
      word_start = true;
      continue;
    }
    if (pending_space) {
      result.push_back(' ');
      pending_space = false;
    }
    if (word_start && c >= 'a' && c <= 'z') {
      result.push_back(static_cast<char>(c - 'a' + 'A'));
    } else {
      result.push_back(c);
    }
    word_start = false;
  }
  return make_tag(result);
}

TagVocabulary frequency_filter(const std::map<std::string, std::uint64_t>& counts,
                               std::uint64_t threshold) {
  TagVocabulary vocab;
  vocab.threshold = threshold;
  for (const auto& [name, count] : counts) {
    if (count == 0) {
      fail(Errc::InvariantViolation, "tag '" + name + "' has a zero count");
    }
    if (count >= threshold) vocab.counts[name] = count;
  }
  return vocab;
}

ClusterReduction reduce_cluster(std::span<const Tag> cluster,
                                const std::map<std::string, Embedding>& embeddings,
                                std::size_t keep) {
  if (cluster.size() < 2) {
    fail(Errc::EmptyInput, "cluster must contain at least two tags");
  }
  for (const Tag& tag : cluster) {
    if (embeddings.find(tag.name()) == embeddings.end()) {
      fail(Errc::MissingEmbedding, "no embedding for '" + tag.name() + "'");
    }
  }
  if (keep < 1) keep = 1;

  ClusterReduction result;
  result.survivors.assign(cluster.begin(), cluster.end());
  while (result.survivors.size() > keep) {
    const std::string victim = cumulative_argmin_name(result.survivors, embeddings);
    auto it = std::find_if(result.survivors.begin(), result.survivors.end(),
                           [&](const Tag& t) { return t.name() == victim; });
    result.removed.push_back(*it);
    result.survivors.erase(it);
  }
  return result;
}

TagVocabulary semantic_aggregate(const TagVocabulary& vocab,
                                 const ClusterParams& params,
                                 const Embedder& embedder,
                                 std::size_t max_cluster_size) {
  validate_cluster_params(params);
  if (vocab.empty()) {
    fail(Errc::EmptyVocabulary, "cannot aggregate an empty vocabulary");
  }

  const std::vector<Tag> names = vocab.tags();
  std::map<std::string, Embedding> embeddings;
  std::vector<Embedding> points;
  points.reserve(names.size());
  for (const Tag& tag : names) {
    try {
      Embedding e = embedder.embed(tag);
      points.push_back(e);
      embeddings.emplace(tag.name(), std::move(e));
    } catch (const Error& err) {
      if (err.code() == Errc::MissingEntry) {
        fail(Errc::MissingEmbedding, "no embedding for '" + tag.name() + "'");
      }
      throw;
    }
  }

  const std::vector<int> labels = dbscan_cosine(points, params);

  std::map<int, std::vector<Tag>> clusters;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (labels[i] >= 0) clusters[labels[i]].push_back(names[i]);
  }

  TagVocabulary out;
  out.counts = vocab.counts;
  out.threshold = vocab.threshold;
  out.cluster_params = params;

  std::map<std::string, std::string> new_remap;
  for (const auto& [label, members] : clusters) {
    (void)label;
    ClusterReduction reduction =
        reduce_cluster(members, embeddings, max_cluster_size);
    for (const Tag& removed : reduction.removed) {
      // Nearest surviving cluster member; cosine ties prefer the
      // lexicographically smaller survivor.
      double best = -std::numeric_limits<double>::infinity();
      std::string target;
      for (const Tag& survivor : reduction.survivors) {
        const double sim =
            cosine(embeddings.at(removed.name()), embeddings.at(survivor.name()));
        if (sim > best || (sim == best && survivor.name() < target)) {
          best = sim;
          target = survivor.name();
        }
      }
      new_remap[removed.name()] = target;
      out.counts[target] += out.counts.at(removed.name());
      out.counts.erase(removed.name());
    }
  }

  // Rewrite prior remap entries whose target was itself removed, then add
  // the new entries so resolution stays single-step.
  for (const auto& [from, to] : vocab.remap) {
    auto it = new_remap.find(to);
    out.remap[from] = it == new_remap.end() ? to : it->second;
  }
  for (const auto& [from, to] : new_remap) {
    out.remap[from] = to;
  }
  return out;
}

Tag align_tag(const Tag& generated, const TagVocabulary& vocab,
              const Embedder& embedder,
              std::optional<double> min_similarity) {
  if (vocab.empty()) {
    fail(Errc::EmptyVocabulary, "cannot align against an empty vocabulary");
  }
  const std::string resolved = vocab.resolve(generated.name());
  if (vocab.contains(resolved)) return make_tag(resolved);

  const Embedding probe = embedder.embed(generated);
  double best = -std::numeric_limits<double>::infinity();
  std::string best_name;
  for (const auto& [name, count] : vocab.counts) {
    (void)count;
    const double sim = cosine(probe, embedder.embed(make_tag(name)));
    if (sim > best) {  // map order is ascending, so ties keep the smaller name
      best = sim;
      best_name = name;
    }
  }
  if (min_similarity && best < *min_similarity) return generated;
  return make_tag(best_name);
}

void save_vocabulary(const TagVocabulary& vocab, const std::string& path) {
  Json tags = Json::object();
  for (const auto& [name, count] : vocab.counts) tags[name] = count;
  Json remap = Json::object();
  for (const auto& [from, to] : vocab.remap) remap[from] = to;
  Json doc = {
      {"version", 1},
      {"threshold", vocab.threshold},
      {"tags", tags},
      {"remap", remap},
      {"cluster_params",
       {{"eps", vocab.cluster_params.eps},
        {"min_pts", vocab.cluster_params.min_pts}}},
  };
  write_file(path, doc.dump(2) + "\n");
}

TagVocabulary load_vocabulary(const std::string& path) {
  const Json doc = load_json(path);
  if (!doc.is_object() || !doc.contains("tags") || !doc["tags"].is_object()) {
    fail(Errc::ParseError, "vocabulary file '" + path + "' lacks a tags object");
  }
  TagVocabulary vocab;
  vocab.threshold = doc.value("threshold", std::uint64_t{5});
  if (doc.contains("cluster_params")) {
    vocab.cluster_params.eps = doc["cluster_params"].value("eps", 0.15);
    vocab.cluster_params.min_pts = doc["cluster_params"].value("min_pts", 2);
    validate_cluster_params(vocab.cluster_params);
  }
  for (const auto& [name, count] : doc["tags"].items()) {
    if (!count.is_number_unsigned() || count.get<std::uint64_t>() == 0) {
      fail(Errc::InvariantViolation,
           "vocabulary count for '" + name + "' must be a positive integer");
    }
    vocab.counts[name] = count.get<std::uint64_t>();
  }
  const Json remap = doc.value("remap", Json::object());
  for (const auto& [from, to] : remap.items()) {
    if (!to.is_string() || !vocab.contains(to.get<std::string>())) {
      fail(Errc::InvariantViolation,
           "remap target for '" + from + "' is not a surviving tag");
    }
    if (vocab.contains(from)) {
      fail(Errc::InvariantViolation,
           "remapped tag '" + from + "' still present in the vocabulary");
    }
    vocab.remap[from] = to.get<std::string>();
  }
  return vocab;
}

}  // namespace tagroute
