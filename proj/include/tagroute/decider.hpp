#pragma once
// Per-query model selection: aggregate the tag scores of every candidate,
// take the best alternate, and compare its margin over the reference
// against the cost-awareness threshold theta. The margin at or above theta
// routes to the alternate; below theta the query goes to the reference.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tagroute/scorer.hpp"
#include "tagroute/types.hpp"

namespace tagroute {

struct RoutingDecision {
  std::string chosen;
  std::string reference;
  std::string best_alternate;                // the alternate compared against
  std::map<std::string, double> aggregates;  // model id -> summed tag score
  double delta = 0.0;                        // best alternate minus reference
  double theta = 0.0;
  TagSet tags_used;

  friend bool operator==(const RoutingDecision&, const RoutingDecision&) = default;
};

// Sum of lookup_score over the query's tags for every model in the table.
// The reference aggregates to zero by the scorer convention; an empty tag
// set yields all-zero aggregates.
std::map<std::string, double> aggregate_scores(const TagScoreTable& table,
                                               const TagSet& tags);

// Ties between alternates break to the lexicographically smallest id.
// delta == theta routes to the alternate (the reference wins only strictly
// below theta).
RoutingDecision select(const TagScoreTable& table, const TagSet& tags,
                       double theta);

// Evenly spaced grid spanning the observed deltas, plus sentinels below
// and above and an exact 0.0 entry. Sorted, deduplicated.
std::vector<double> default_theta_grid(std::span<const double> deltas,
                                       std::size_t points = 101);

}  // namespace tagroute
