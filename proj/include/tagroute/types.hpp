#pragma once
// Core domain types: tags, tag sets, models, pairwise outcomes, score
// weights and embeddings. Parsing/validation primitives live here;
// serialization stays with the modules that own each file format.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tagroute/errors.hpp"

namespace tagroute {

class Tag;
Tag make_tag(std::string_view raw);

// A normalized semantic feature label attached to a query. Equality is
// exact, case-sensitive string comparison; rule aggregation (normalize
// module) is the only canonicalization step. Construct via make_tag so the
// whitespace invariants always hold.
class Tag {
 public:
  Tag() = default;

  const std::string& name() const noexcept { return name_; }
  bool empty() const noexcept { return name_.empty(); }

  friend bool operator==(const Tag&, const Tag&) = default;
  friend auto operator<=>(const Tag&, const Tag&) = default;

 private:
  friend Tag make_tag(std::string_view);
  explicit Tag(std::string name) : name_(std::move(name)) {}

  std::string name_;
};

// Ordered tag sequence without duplicates; first occurrence wins on dedup.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(std::vector<Tag> tags);

  // No-op when the tag is already present.
  void add(Tag tag);

  bool contains(std::string_view name) const;
  const std::vector<Tag>& tags() const noexcept { return tags_; }
  std::size_t size() const noexcept { return tags_.size(); }
  bool empty() const noexcept { return tags_.empty(); }

  auto begin() const noexcept { return tags_.begin(); }
  auto end() const noexcept { return tags_.end(); }

  friend bool operator==(const TagSet&, const TagSet&) = default;

 private:
  std::vector<Tag> tags_;
};

enum class Role { Reference, Alternate };

std::string_view role_name(Role role);
Role parse_role(std::string_view text);

// A candidate model. The reference model is the baseline every pairwise
// outcome is judged against; unit_cost is an opaque configured scalar per
// routed query.
struct ModelId {
  std::string id;
  Role role = Role::Alternate;
  double unit_cost = 0.0;
};

// Exactly one reference, unique ids, nonnegative costs.
void validate_model_system(std::span<const ModelId> models);

enum class Outcome { Win, Tie, Loss };

std::string_view outcome_name(Outcome outcome);
Outcome parse_outcome(std::string_view text);

// Per-query, per-candidate judged result versus the reference model.
struct ComparisonRecord {
  std::string query_id;
  TagSet tags;            // normalized/aligned before table building
  ModelId candidate;      // role must be Alternate
  ModelId reference;      // role must be Reference
  Outcome outcome = Outcome::Tie;
};

void validate_record(const ComparisonRecord& record);

// Score contributions per pairwise result. Defaults follow the tuned tie
// weight of 0.15 rather than treating a tie like a win.
struct ScoreWeights {
  double s_win = 1.0;
  double s_tie = 0.15;
  double s_loss = -1.0;

  double value(Outcome outcome) const noexcept {
    switch (outcome) {
      case Outcome::Win: return s_win;
      case Outcome::Tie: return s_tie;
      case Outcome::Loss: return s_loss;
    }
    return 0.0;
  }

  friend bool operator==(const ScoreWeights&, const ScoreWeights&) = default;
};

// Throws InvalidConfig unless s_loss < s_tie < s_win.
void validate_weights(const ScoreWeights& weights);

// Fixed-length real vector; all embeddings in one store share a dimension
// and are L2-normalized (norm 1 within 1e-6).
struct Embedding {
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
};

double dot(const Embedding& a, const Embedding& b);
double cosine(const Embedding& a, const Embedding& b);
void l2_normalize(Embedding& e);
bool is_normalized(const Embedding& e, double tol = 1e-6);

// Which slot the candidate's answer occupied in a pairwise judge prompt.
enum class Position { A, B };

// "A"/"B" name a position; "C" is a tie. Win when the verdict names the
// candidate's position, Loss when it names the other one.
Outcome parse_verdict(std::string_view verdict, Position candidate_position);

}  // namespace tagroute
