#include "tagroute/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tagroute/io.hpp"
#include "tagroute/util.hpp"

namespace tagroute {

namespace {

// Everything theta-dependent about a query collapses to its delta plus two
// precomputed acceptance/cost pairs, so sweeps and grid searches route each
// query once.
struct PreparedQuery {
  double delta = 0.0;
  bool accept_alternate = false;  // outcome of the best alternate in {W, T}
  bool accept_reference = false;  // outcome of the best alternate in {T, L}
  double cost_alternate = 0.0;
  double cost_reference = 0.0;
};

Outcome displaced_outcome(const EvalQuery& query, const std::string& alternate) {
  auto it = query.outcomes.find(alternate);
  if (it == query.outcomes.end()) {
    fail(Errc::MissingOutcome, "query '" + query.query_id +
                                   "' has no outcome for '" + alternate + "'");
  }
  return it->second;
}

double model_cost(const EvalQuery& query, const std::string& model_id,
                  const std::map<std::string, double>& unit_costs) {
  auto override_it = query.cost_overrides.find(model_id);
  if (override_it != query.cost_overrides.end()) return override_it->second;
  auto it = unit_costs.find(model_id);
  if (it == unit_costs.end()) {
    fail(Errc::MissingCost, "no unit cost for '" + model_id + "'");
  }
  return it->second;
}

std::vector<PreparedQuery> prepare(const TagScoreTable& table,
                                   std::span<const EvalQuery> queries) {
  std::map<std::string, double> unit_costs;
  for (const auto& [id, model] : table.models()) {
    unit_costs[id] = model.unit_cost;
  }

  std::vector<PreparedQuery> prepared;
  prepared.reserve(queries.size());
  for (const EvalQuery& query : queries) {
    // theta only moves the threshold, so any value routes identically to
    // select() once delta and the best alternate are fixed.
    const RoutingDecision decision = select(table, query.tags, 0.0);
    const Outcome outcome = displaced_outcome(query, decision.best_alternate);

    PreparedQuery p;
    p.delta = decision.delta;
    p.accept_alternate = outcome == Outcome::Win || outcome == Outcome::Tie;
    p.accept_reference = outcome == Outcome::Tie || outcome == Outcome::Loss;
    p.cost_alternate = model_cost(query, decision.best_alternate, unit_costs);
    p.cost_reference = model_cost(query, decision.reference, unit_costs);
    prepared.push_back(p);
  }
  return prepared;
}

CurvePoint point_at_theta(std::span<const PreparedQuery> prepared, double theta) {
  const double n = static_cast<double>(prepared.size());
  std::size_t to_reference = 0;
  std::size_t accepted_count = 0;
  double total_cost = 0.0;
  for (const PreparedQuery& p : prepared) {
    if (p.delta < theta) {
      ++to_reference;
      accepted_count += p.accept_reference ? 1 : 0;
      total_cost += p.cost_reference;
    } else {
      accepted_count += p.accept_alternate ? 1 : 0;
      total_cost += p.cost_alternate;
    }
  }
  CurvePoint point;
  point.theta = theta;
  point.rho = static_cast<double>(to_reference) / n;
  point.accept_rate = static_cast<double>(accepted_count) / n;
  point.mean_cost = total_cost / n;
  return point;
}

}  // namespace

bool accepted(const EvalQuery& query, const RoutingDecision& decision) {
  if (decision.chosen != decision.reference) {
    auto it = query.outcomes.find(decision.chosen);
    if (it == query.outcomes.end()) {
      fail(Errc::MissingOutcome, "query '" + query.query_id +
                                     "' has no outcome for '" +
                                     decision.chosen + "'");
    }
    return it->second == Outcome::Win || it->second == Outcome::Tie;
  }

  // Reference chosen: judge it against the alternate it displaced.
  std::string opponent = decision.best_alternate;
  if (opponent.empty()) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [model_id, aggregate] : decision.aggregates) {
      if (model_id == decision.reference) continue;
      if (aggregate > best) {
        best = aggregate;
        opponent = model_id;
      }
    }
  }
  if (opponent.empty()) {
    fail(Errc::NoAlternates, "decision has no displaced alternate");
  }
  const Outcome outcome = displaced_outcome(query, opponent);
  return outcome == Outcome::Tie || outcome == Outcome::Loss;
}

double accept_rate(std::span<const EvalQuery> queries,
                   std::span<const RoutingDecision> decisions) {
  if (queries.empty()) fail(Errc::EmptySet, "no queries to score");
  if (queries.size() != decisions.size()) {
    fail(Errc::LengthMismatch, "queries and decisions differ in length");
  }
  std::size_t count = 0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    count += accepted(queries[i], decisions[i]) ? 1 : 0;
  }
  return static_cast<double>(count) / static_cast<double>(queries.size());
}

double gpt_rank(std::span<const EvalQuery> queries,
                std::span<const RoutingDecision> decisions) {
  if (queries.empty()) fail(Errc::EmptySet, "no queries to rank");
  if (queries.size() != decisions.size()) {
    fail(Errc::LengthMismatch, "queries and decisions differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    total += accepted(queries[i], decisions[i]) ? 1.0 : 2.0;
  }
  return total / static_cast<double>(queries.size());
}

double mean_cost(std::span<const RoutingDecision> decisions,
                 const std::map<std::string, double>& unit_costs) {
  if (decisions.empty()) fail(Errc::EmptySet, "no decisions to cost");
  double total = 0.0;
  for (const RoutingDecision& decision : decisions) {
    auto it = unit_costs.find(decision.chosen);
    if (it == unit_costs.end()) {
      fail(Errc::MissingCost, "no unit cost for '" + decision.chosen + "'");
    }
    total += it->second;
  }
  return total / static_cast<double>(decisions.size());
}

EvalCurve sweep_curve(const TagScoreTable& table,
                      std::span<const EvalQuery> queries,
                      std::span<const double> theta_grid) {
  if (theta_grid.empty()) fail(Errc::EmptyGrid, "theta grid is empty");
  if (queries.empty()) fail(Errc::EmptySet, "no queries to sweep");

  const std::vector<PreparedQuery> prepared = prepare(table, queries);

  double min_delta = std::numeric_limits<double>::infinity();
  double max_delta = -std::numeric_limits<double>::infinity();
  for (const PreparedQuery& p : prepared) {
    min_delta = std::min(min_delta, p.delta);
    max_delta = std::max(max_delta, p.delta);
  }

  std::vector<double> grid(theta_grid.begin(), theta_grid.end());
  const auto [lo, hi] = std::minmax_element(grid.begin(), grid.end());
  if (*lo > min_delta) grid.push_back(min_delta - 1.0);  // forces rho = 0
  if (*hi <= max_delta) grid.push_back(max_delta + 1.0);  // forces rho = 1
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  EvalCurve curve;
  for (double theta : grid) {
    const CurvePoint point = point_at_theta(prepared, theta);
    if (!curve.points.empty() && curve.points.back().rho == point.rho) {
      // Same routing split: keep the best achievable accept rate.
      if (point.accept_rate > curve.points.back().accept_rate) {
        curve.points.back() = point;
      }
      continue;
    }
    curve.points.push_back(point);
  }

  double reference_accepts = 0.0;
  for (const PreparedQuery& p : prepared) {
    reference_accepts += p.accept_reference ? 1.0 : 0.0;
  }
  curve.ar_reference = reference_accepts / static_cast<double>(prepared.size());
  return curve;
}

double auc(const EvalCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const CurvePoint& a = curve.points[i - 1];
    const CurvePoint& b = curve.points[i];
    area += (b.rho - a.rho) * (a.accept_rate + b.accept_rate) / 2.0;
  }
  return area;
}

PaucMode parse_pauc_mode(std::string_view text) {
  if (text == "excess") return PaucMode::Excess;
  if (text == "as-written") return PaucMode::AsWritten;
  fail(Errc::ParseError, "unknown pauc mode '" + std::string(text) + "'");
}

double pauc(const EvalCurve& curve, PaucMode mode) {
  const double level = curve.ar_reference;
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const CurvePoint& a = curve.points[i - 1];
    const CurvePoint& b = curve.points[i];
    const double width = b.rho - a.rho;
    if (width <= 0.0) continue;
    const double fa = a.accept_rate - level;
    const double fb = b.accept_rate - level;

    if (fa <= 0.0 && fb <= 0.0) continue;

    // Sub-interval of [a.rho, b.rho] where AR exceeds the reference level;
    // AR is linear on the segment, so the crossing is exact.
    double x0 = a.rho;
    double x1 = b.rho;
    double y0 = a.accept_rate;
    double y1 = b.accept_rate;
    if (fa < 0.0) {
      x0 = a.rho + width * (-fa) / (fb - fa);
      y0 = level;
    } else if (fb < 0.0) {
      x1 = a.rho + width * fa / (fa - fb);
      y1 = level;
    }
    const double span = x1 - x0;
    if (mode == PaucMode::Excess) {
      area += span * ((y0 - level) + (y1 - level)) / 2.0;
    } else {
      area += span * (y0 + y1) / 2.0;
    }
  }
  return area;
}

std::vector<RoutingDecision> baseline_route(const RoutePolicy& policy,
                                            std::span<const EvalQuery> queries,
                                            std::span<const ModelId> models) {
  validate_model_system(models);

  std::string reference;
  std::vector<std::string> alternates;
  for (const ModelId& model : models) {
    if (model.role == Role::Reference) {
      reference = model.id;
    } else {
      alternates.push_back(model.id);
    }
  }
  if (alternates.empty()) {
    fail(Errc::NoAlternates, "baseline needs at least one alternate");
  }
  std::sort(alternates.begin(), alternates.end());

  if (policy.kind == RoutePolicy::Kind::AlwaysAlternate) {
    const bool known = std::find(alternates.begin(), alternates.end(),
                                 policy.alternate_id) != alternates.end();
    if (!known) {
      fail(Errc::UnknownModel,
           "'" + policy.alternate_id + "' is not an alternate");
    }
  }

  std::mt19937_64 rng(policy.seed);
  std::vector<RoutingDecision> decisions;
  decisions.reserve(queries.size());
  for (const EvalQuery& query : queries) {
    RoutingDecision decision;
    decision.reference = reference;
    decision.tags_used = query.tags;
    for (const ModelId& model : models) decision.aggregates[model.id] = 0.0;

    switch (policy.kind) {
      case RoutePolicy::Kind::AlwaysReference:
        decision.chosen = reference;
        decision.best_alternate = alternates.front();
        break;
      case RoutePolicy::Kind::AlwaysAlternate:
        decision.chosen = policy.alternate_id;
        decision.best_alternate = policy.alternate_id;
        break;
      case RoutePolicy::Kind::Random: {
        const std::size_t pick =
            static_cast<std::size_t>(uniform_below(rng, models.size()));
        decision.chosen = models[pick].id;
        decision.best_alternate =
            decision.chosen == reference ? alternates.front() : decision.chosen;
        break;
      }
    }
    decisions.push_back(std::move(decision));
  }
  return decisions;
}

double cohen_kappa(std::span<const std::string> labels_a,
                   std::span<const std::string> labels_b) {
  if (labels_a.empty() || labels_b.empty()) {
    fail(Errc::EmptyInput, "label sequences are empty");
  }
  if (labels_a.size() != labels_b.size()) {
    fail(Errc::LengthMismatch, "label sequences differ in length");
  }
  const double n = static_cast<double>(labels_a.size());

  std::size_t agree = 0;
  std::map<std::string, std::size_t> marginal_a;
  std::map<std::string, std::size_t> marginal_b;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    agree += labels_a[i] == labels_b[i] ? 1 : 0;
    ++marginal_a[labels_a[i]];
    ++marginal_b[labels_b[i]];
  }
  const double p_o = static_cast<double>(agree) / n;
  double p_e = 0.0;
  for (const auto& [label, count_a] : marginal_a) {
    auto it = marginal_b.find(label);
    if (it == marginal_b.end()) continue;
    p_e += (static_cast<double>(count_a) / n) *
           (static_cast<double>(it->second) / n);
  }
  if (p_e == 1.0) return 1.0;  // both raters constant on the same label
  return (p_o - p_e) / (1.0 - p_e);
}

double tune_theta(const TagScoreTable& table,
                  std::span<const EvalQuery> sample,
                  std::span<const double> grid) {
  if (grid.empty()) fail(Errc::EmptyGrid, "theta grid is empty");
  if (sample.empty()) fail(Errc::EmptySample, "tuning sample is empty");

  const std::vector<PreparedQuery> prepared = prepare(table, sample);

  bool first = true;
  double best_theta = 0.0;
  double best_ar = 0.0;
  double best_cost = 0.0;
  for (double theta : grid) {
    const CurvePoint point = point_at_theta(prepared, theta);
    const bool better =
        first || point.accept_rate > best_ar ||
        (point.accept_rate == best_ar && point.mean_cost < best_cost) ||
        (point.accept_rate == best_ar && point.mean_cost == best_cost &&
         theta < best_theta);
    if (better) {
      first = false;
      best_theta = theta;
      best_ar = point.accept_rate;
      best_cost = point.mean_cost;
    }
  }
  return best_theta;
}

PolicyReport route_and_score(const TagScoreTable& table,
                             std::span<const EvalQuery> queries, double theta) {
  if (queries.empty()) fail(Errc::EmptySet, "no queries to score");
  const std::vector<PreparedQuery> prepared = prepare(table, queries);
  const CurvePoint point = point_at_theta(prepared, theta);
  return PolicyReport{point.accept_rate, point.mean_cost, point.rho};
}

EvalSummary summarize(const EvalCurve& curve, PaucMode mode) {
  EvalSummary summary;
  summary.auc = auc(curve);
  summary.pauc = pauc(curve, mode);
  bool first = true;
  for (const CurvePoint& point : curve.points) {
    const bool better = first || point.accept_rate > summary.max_ar ||
                        (point.accept_rate == summary.max_ar &&
                         point.mean_cost < summary.cost_at_max_ar);
    if (better) {
      first = false;
      summary.max_ar = point.accept_rate;
      summary.cost_at_max_ar = point.mean_cost;
      summary.theta_at_max_ar = point.theta;
    }
  }
  summary.rank_at_max_ar = 2.0 - summary.max_ar;
  return summary;
}

std::vector<EvalQuery> load_eval_set(const std::string& path) {
  std::vector<EvalQuery> queries;
  for (const Json& row : read_jsonl(path)) {
    EvalQuery query;
    query.query_id = row.value("query_id", "");
    query.label = row.value("label", "");
    for (const Json& tag : row.value("tags", Json::array())) {
      query.tags.add(make_tag(tag.get<std::string>()));
    }
    if (!row.contains("outcomes") || !row["outcomes"].is_object() ||
        row["outcomes"].empty()) {
      fail(Errc::ParseError,
           "eval record '" + query.query_id + "' lacks outcomes");
    }
    for (const auto& [model_id, outcome] : row["outcomes"].items()) {
      query.outcomes[model_id] = parse_outcome(outcome.get<std::string>());
    }
    const Json costs = row.value("costs", Json::object());
    for (const auto& [model_id, cost] : costs.items()) {
      query.cost_overrides[model_id] = cost.get<double>();
    }
    queries.push_back(std::move(query));
  }
  return queries;
}

void save_eval_set(std::span<const EvalQuery> queries, const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(queries.size());
  for (const EvalQuery& query : queries) {
    Json tags = Json::array();
    for (const Tag& tag : query.tags) tags.push_back(tag.name());
    Json outcomes = Json::object();
    for (const auto& [model_id, outcome] : query.outcomes) {
      outcomes[model_id] = std::string(outcome_name(outcome));
    }
    Json row = {{"query_id", query.query_id},
                {"tags", tags},
                {"outcomes", outcomes}};
    if (!query.label.empty()) row["label"] = query.label;
    if (!query.cost_overrides.empty()) {
      Json costs = Json::object();
      for (const auto& [model_id, cost] : query.cost_overrides) {
        costs[model_id] = cost;
      }
      row["costs"] = costs;
    }
    rows.push_back(std::move(row));
  }
  write_jsonl(path, rows);
}

void write_curve_csv(const EvalCurve& curve, const std::string& path) {
  std::ostringstream out;
  out << "theta,rho,accept_rate,mean_cost\n";
  out.precision(17);
  for (const CurvePoint& point : curve.points) {
    out << point.theta << ',' << point.rho << ',' << point.accept_rate << ','
        << point.mean_cost << '\n';
  }
  write_file(path, out.str());
}

}  // namespace tagroute
