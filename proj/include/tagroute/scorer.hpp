#pragma once
// Tag-score table: the key-value capability representation of each
// candidate model, built from pairwise win/tie/loss counts against the
// reference model.
//
// Raw counts are the source of truth; scores are a derived cache
// recomputed from counts (and never persisted), so merging tables adds
// counts and re-derives instead of adding scores whose weights were
// normalized against different totals.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tagroute/types.hpp"

namespace tagroute {

struct OutcomeCounts {
  std::uint64_t win = 0;
  std::uint64_t tie = 0;
  std::uint64_t loss = 0;

  std::uint64_t total() const noexcept { return win + tie + loss; }
  friend bool operator==(const OutcomeCounts&, const OutcomeCounts&) = default;
};

// w_t = (1 - exp(-count_t)) / total_count where total_count sums the
// per-tag record counts over the whole table.
double tag_weight(std::uint64_t count_t, std::uint64_t total_count);

class TagScoreTable {
 public:
  TagScoreTable() = default;
  TagScoreTable(std::string reference_id, ScoreWeights weights);

  const std::string& reference() const noexcept { return reference_; }
  const ScoreWeights& weights() const noexcept { return weights_; }
  const std::map<std::string, ModelId>& models() const noexcept {
    return models_;
  }
  const std::map<std::string, std::uint64_t>& tag_counts() const noexcept {
    return tag_counts_;
  }
  const std::map<std::string, std::map<std::string, OutcomeCounts>>&
  raw_counts() const noexcept {
    return raw_counts_;
  }
  const std::map<std::string, std::map<std::string, double>>& scores()
      const noexcept {
    return scores_;
  }

  std::uint64_t total_tag_count() const;
  std::vector<std::string> alternate_ids() const;
  bool empty() const noexcept { return tag_counts_.empty(); }

  void add_model(ModelId model);
  void set_unit_cost(const std::string& model_id, double unit_cost);
  void add_counts(const std::string& model_id, const std::string& tag,
                  const OutcomeCounts& counts);
  void add_tag_count(const std::string& tag, std::uint64_t count);

  // Re-derives every cached score from raw counts and weights.
  void recompute_scores();

  // True when the score cache was overwritten by a score-level merge and
  // no longer matches a recomputation from counts.
  bool score_cache_overridden() const noexcept { return score_overridden_; }
  void override_scores(std::map<std::string, std::map<std::string, double>> scores);

 private:
  std::string reference_;
  ScoreWeights weights_;
  std::map<std::string, ModelId> models_;
  std::map<std::string, std::map<std::string, OutcomeCounts>> raw_counts_;
  std::map<std::string, std::uint64_t> tag_counts_;
  std::map<std::string, std::map<std::string, double>> scores_;
  bool score_overridden_ = false;
};

// Tallies normalized/aligned records into a table. Every record must name
// the same reference model; candidates must be alternates.
TagScoreTable build_table(std::span<const ComparisonRecord> records,
                          const ScoreWeights& weights);

// Stored score, 0.0 for missing evidence, always 0.0 for the reference.
double lookup_score(const TagScoreTable& table, const std::string& model_id,
                    const Tag& tag);

enum class MergeMode {
  Counts,  // add raw counts, recompute scores (default)
  Scores,  // additionally overwrite the score cache with entrywise sums
};

// Requires equal weights and the same reference model id.
TagScoreTable merge_tables(const TagScoreTable& a, const TagScoreTable& b,
                           MergeMode mode = MergeMode::Counts);

// Table file: {version, reference, weights, tag_counts, models}. Scores
// are never persisted; load always re-derives them from the counts.
void save_table(const TagScoreTable& table, const std::string& path);
TagScoreTable load_table(const std::string& path);

// Comparison record file: JSON Lines {query_id, tags, candidate, reference,
// outcome}. A registry, when given, supplies roles and unit costs.
std::vector<ComparisonRecord> load_records(const std::string& path,
                                           std::span<const ModelId> registry = {});
void save_records(std::span<const ComparisonRecord> records,
                  const std::string& path);

}  // namespace tagroute
