#include "tagroute/decider.hpp"

#include <algorithm>
#include <limits>

namespace tagroute {

std::map<std::string, double> aggregate_scores(const TagScoreTable& table,
                                               const TagSet& tags) {
  std::map<std::string, double> aggregates;
  for (const auto& [model_id, model] : table.models()) {
    (void)model;
    double sum = 0.0;
    for (const Tag& tag : tags) {
      sum += lookup_score(table, model_id, tag);
    }
    aggregates[model_id] = sum;
  }
  return aggregates;
}

RoutingDecision select(const TagScoreTable& table, const TagSet& tags,
                       double theta) {
  RoutingDecision decision;
  decision.reference = table.reference();
  decision.theta = theta;
  decision.tags_used = tags;
  decision.aggregates = aggregate_scores(table, tags);

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [model_id, aggregate] : decision.aggregates) {
    if (model_id == decision.reference) continue;
    if (aggregate > best) {  // ascending ids: strict > keeps the smallest
      best = aggregate;
      decision.best_alternate = model_id;
    }
  }
  if (decision.best_alternate.empty()) {
    fail(Errc::NoAlternates, "table has no alternate models");
  }

  decision.delta = best - decision.aggregates.at(decision.reference);
  decision.chosen =
      decision.delta < theta ? decision.reference : decision.best_alternate;
  return decision;
}

std::vector<double> default_theta_grid(std::span<const double> deltas,
                                       std::size_t points) {
  std::vector<double> grid;
  if (!deltas.empty() && points >= 2) {
    const auto [lo_it, hi_it] = std::minmax_element(deltas.begin(), deltas.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) {
      grid.push_back(lo + step * static_cast<double>(i));
    }
    grid.push_back(lo - 1.0);  // routes everything to the best alternate
    grid.push_back(hi + 1.0);  // routes everything to the reference
  }
  grid.push_back(0.0);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace tagroute
