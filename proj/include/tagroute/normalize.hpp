#pragma once
// Tag normalization pipeline and inference-time tag alignment.
//
// Pipeline order is fixed: rule_aggregate per raw tag, then
// frequency_filter, then semantic_aggregate. Semantic aggregation clusters
// tag embeddings with DBSCAN under cosine distance and iteratively reduces
// each cluster, remapping removed tags to their nearest survivor so no
// count mass is lost.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagroute/providers.hpp"
#include "tagroute/types.hpp"

namespace tagroute {

struct ClusterParams {
  double eps = 0.15;  // cosine-distance radius, in (0, 1)
  int min_pts = 2;    // minimum neighborhood size, >= 2

  friend bool operator==(const ClusterParams&, const ClusterParams&) = default;
};

void validate_cluster_params(const ClusterParams& params);

// The refined tag set: surviving tags with their record frequencies plus a
// one-step remap from removed tags to their surviving canonical tag.
struct TagVocabulary {
  std::map<std::string, std::uint64_t> counts;  // surviving tag -> frequency
  std::map<std::string, std::string> remap;     // removed tag -> survivor
  std::uint64_t threshold = 5;
  ClusterParams cluster_params;

  bool contains(std::string_view name) const {
    return counts.find(std::string(name)) != counts.end();
  }
  // Resolves a removed tag to its survivor; other names pass through.
  std::string resolve(const std::string& name) const {
    auto it = remap.find(name);
    return it == remap.end() ? name : it->second;
  }
  std::vector<Tag> tags() const;
  std::uint64_t total_count() const;
  bool empty() const { return counts.empty(); }
};

// Replaces every character that is not a letter or digit with a space,
// collapses whitespace runs, and uppercases the first letter of each word
// (remaining letters are left unchanged).
Tag rule_aggregate(std::string_view raw);

// Keeps exactly the tags whose count reaches the threshold. Discarded tags
// appear in neither counts nor remap.
TagVocabulary frequency_filter(const std::map<std::string, std::uint64_t>& counts,
                               std::uint64_t threshold = 5);

struct ClusterReduction {
  std::vector<Tag> survivors;
  std::vector<Tag> removed;  // in removal order
};

// While the cluster is larger than `keep`, removes the member with the
// least cumulative cosine similarity to the rest; ties remove the
// lexicographically larger name. Requires an embedding per member.
ClusterReduction reduce_cluster(std::span<const Tag> cluster,
                                const std::map<std::string, Embedding>& embeddings,
                                std::size_t keep = 2);

// Embeds every surviving tag, clusters with DBSCAN (cosine distance,
// params.eps / params.min_pts), reduces each cluster to max_cluster_size
// members and remaps removed tags to their nearest surviving cluster
// member. Noise points survive unchanged; total count mass is preserved.
TagVocabulary semantic_aggregate(const TagVocabulary& vocab,
                                 const ClusterParams& params,
                                 const Embedder& embedder,
                                 std::size_t max_cluster_size = 2);

// Maps a generated tag into the vocabulary: remap resolution first, then
// identity for in-vocabulary tags, otherwise the vocabulary tag with the
// highest cosine similarity (ties break to the lexicographically smaller
// name). With min_similarity set, tags below the threshold are returned
// unchanged instead of force-mapped.
Tag align_tag(const Tag& generated, const TagVocabulary& vocab,
              const Embedder& embedder,
              std::optional<double> min_similarity = std::nullopt);

// Vocabulary file: {version, threshold, tags, remap, cluster_params}.
void save_vocabulary(const TagVocabulary& vocab, const std::string& path);
TagVocabulary load_vocabulary(const std::string& path);

}  // namespace tagroute
