#pragma once
// Evaluation harness: accept rate, rank, cost accounting, the theta-sweep
// cost/performance curve with its AUC and partial AUC, trivial baseline
// policies and the Cohen's kappa agreement statistic.
//
// Acceptance semantics: a routed alternate is accepted when its judged
// outcome is a win or tie; the routed reference is accepted when the
// alternate it displaced (the top scorer) tied or lost. The second rule is
// what keeps an always-reference policy below a perfect accept rate.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tagroute/decider.hpp"
#include "tagroute/scorer.hpp"
#include "tagroute/types.hpp"

namespace tagroute {

struct EvalQuery {
  std::string query_id;
  std::string label;                              // optional task category
  TagSet tags;
  std::map<std::string, Outcome> outcomes;        // alternate id -> result
  std::map<std::string, double> cost_overrides;   // optional per-record costs
};

bool accepted(const EvalQuery& query, const RoutingDecision& decision);

double accept_rate(std::span<const EvalQuery> queries,
                   std::span<const RoutingDecision> decisions);

// Mean rank of the chosen model in the pairwise setting: 1 when accepted,
// 2 otherwise, i.e. 2 - accept_rate.
double gpt_rank(std::span<const EvalQuery> queries,
                std::span<const RoutingDecision> decisions);

double mean_cost(std::span<const RoutingDecision> decisions,
                 const std::map<std::string, double>& unit_costs);

struct CurvePoint {
  double theta = 0.0;
  double rho = 0.0;          // share routed to the reference
  double accept_rate = 0.0;
  double mean_cost = 0.0;
};

struct EvalCurve {
  std::vector<CurvePoint> points;  // rho strictly increasing, spans [0, 1]
  double ar_reference = 0.0;       // AR of the always-reference policy
};

// Routes every query at each theta and records (rho, AR, cost). Sentinel
// thetas below/above the observed deltas are added when the grid does not
// already force rho = 0 and rho = 1. Equal-rho points are deduplicated
// keeping the best accept rate.
EvalCurve sweep_curve(const TagScoreTable& table,
                      std::span<const EvalQuery> queries,
                      std::span<const double> theta_grid);

// Trapezoidal integral of AR over rho in [0, 1].
double auc(const EvalCurve& curve);

enum class PaucMode {
  Excess,     // integral of max(0, AR(rho) - ar_reference)
  AsWritten,  // integral of AR(rho) restricted to AR(rho) > ar_reference
};

PaucMode parse_pauc_mode(std::string_view text);

double pauc(const EvalCurve& curve, PaucMode mode = PaucMode::Excess);

struct RoutePolicy {
  enum class Kind { Random, AlwaysReference, AlwaysAlternate };
  Kind kind = Kind::Random;
  std::uint64_t seed = 0;
  std::string alternate_id;  // for AlwaysAlternate
};

// Decisions for the trivial baselines; random is uniform over all models
// and deterministic given the seed.
std::vector<RoutingDecision> baseline_route(const RoutePolicy& policy,
                                            std::span<const EvalQuery> queries,
                                            std::span<const ModelId> models);

// kappa = (p_o - p_e) / (1 - p_e) with chance agreement p_e from the
// marginal label frequencies. Identical constant sequences return 1.
double cohen_kappa(std::span<const std::string> labels_a,
                   std::span<const std::string> labels_b);

// Grid search for the theta with the best accept rate on the sample; ties
// break to the lower mean cost, then the smaller theta.
double tune_theta(const TagScoreTable& table,
                  std::span<const EvalQuery> sample,
                  std::span<const double> grid);

// Point metrics of a whole-set routing at one theta.
struct PolicyReport {
  double accept_rate = 0.0;
  double mean_cost = 0.0;
  double rho = 0.0;
};

PolicyReport route_and_score(const TagScoreTable& table,
                             std::span<const EvalQuery> queries, double theta);

struct EvalSummary {
  double max_ar = 0.0;
  double cost_at_max_ar = 0.0;
  double rank_at_max_ar = 0.0;
  double auc = 0.0;
  double pauc = 0.0;
  double theta_at_max_ar = 0.0;
};

EvalSummary summarize(const EvalCurve& curve, PaucMode mode = PaucMode::Excess);

// Eval dataset file: JSON Lines {query_id, tags, outcomes{model: result}}.
std::vector<EvalQuery> load_eval_set(const std::string& path);
void save_eval_set(std::span<const EvalQuery> queries, const std::string& path);

// CSV with header theta,rho,accept_rate,mean_cost.
void write_curve_csv(const EvalCurve& curve, const std::string& path);

}  // namespace tagroute
