// tagroute — batch entry points for the routing pipeline.
//
// Subcommands compose into the full flow:
//   tag -> normalize -> judge -> build -> (merge/sample/tune) -> eval
// plus one-off routing (`route`), the HTTP service (`serve`) and the
// evaluator-agreement statistic (`kappa`).
//
// A pipeline manifest (--manifest pipeline.json) can supply any value a
// flag would; explicit flags win. Every subcommand is deterministic given
// its inputs and the seed; per-subcommand randomness is derived as
// hash(subcommand) XOR seed.

#include <cstdint>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tagroute/decider.hpp"
#include "tagroute/eval.hpp"
#include "tagroute/gateway.hpp"
#include "tagroute/io.hpp"
#include "tagroute/normalize.hpp"
#include "tagroute/providers.hpp"
#include "tagroute/sampler.hpp"
#include "tagroute/scorer.hpp"
#include "tagroute/util.hpp"

namespace {

using namespace tagroute;

std::uint64_t derive_seed(std::string_view subcommand, std::uint64_t seed) {
  return fnv1a64(subcommand) ^ seed;
}

void require_path(const std::string& value, const char* what) {
  if (value.empty()) {
    fail(Errc::InvalidConfig,
         std::string(what) + " must come from a flag or the manifest");
  }
}

std::vector<ModelId> load_registry(const std::string& path) {
  const Json doc = load_json(path);
  std::vector<ModelId> models;
  for (const Json& entry : doc.value("models", Json::array())) {
    ModelId model;
    model.id = entry.value("id", "");
    model.role = parse_role(entry.value("role", "alternate"));
    model.unit_cost = entry.value("unit_cost", 0.0);
    models.push_back(std::move(model));
  }
  validate_model_system(models);
  return models;
}

void apply_registry(TagScoreTable& table, std::span<const ModelId> registry) {
  for (const ModelId& model : registry) {
    if (table.models().count(model.id) != 0) {
      table.set_unit_cost(model.id, model.unit_cost);
    }
  }
}

// Provider precedence: --flag file, then the manifest's inline
// providers.<key> object, then the stub.
ProviderConfig resolve_provider(const std::string& flag_path,
                                const Json& manifest, const char* key,
                                std::uint64_t seed) {
  ProviderConfig config;
  if (!flag_path.empty()) {
    config = provider_config_from_json(load_json(flag_path));
  } else if (manifest.contains("providers") &&
             manifest["providers"].contains(key)) {
    config = provider_config_from_json(manifest["providers"][key]);
  }
  if (config.seed == 0) config.seed = seed;
  return config;
}

ScoreWeights parse_weights_text(const std::string& text) {
  ScoreWeights weights;
  const auto first = text.find(',');
  const auto second = text.find(',', first + 1);
  if (first == std::string::npos || second == std::string::npos) {
    fail(Errc::InvalidConfig, "--weights expects s_win,s_tie,s_loss");
  }
  weights.s_win = std::stod(text.substr(0, first));
  weights.s_tie = std::stod(text.substr(first + 1, second - first - 1));
  weights.s_loss = std::stod(text.substr(second + 1));
  return weights;
}

ScoreWeights resolve_weights(const std::string& flag, const Json& manifest) {
  ScoreWeights weights;
  if (!flag.empty()) {
    weights = parse_weights_text(flag);
  } else if (manifest.contains("weights")) {
    const Json& w = manifest["weights"];
    if (w.is_string()) {
      weights = parse_weights_text(w.get<std::string>());
    } else {
      weights.s_win = w.value("s_win", 1.0);
      weights.s_tie = w.value("s_tie", 0.15);
      weights.s_loss = w.value("s_loss", -1.0);
    }
  }
  validate_weights(weights);
  return weights;
}

std::vector<std::string> split_csv(const std::string& text) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    const auto comma = text.find(',', begin);
    const auto end = comma == std::string::npos ? text.size() : comma;
    if (end > begin) out.push_back(text.substr(begin, end - begin));
    if (comma == std::string::npos) break;
    begin = comma + 1;
  }
  return out;
}

std::string record_id(const Json& row) {
  if (row.contains("query_id")) return row["query_id"].get<std::string>();
  if (row.contains("id")) return row["id"].get<std::string>();
  return "";
}

// ---------------------------------------------------------------------------
// Subcommand bodies
// ---------------------------------------------------------------------------

struct TagArgs {
  std::string in, out, provider;
  std::uint64_t seed = 0;
};

int run_tag(const TagArgs& args, const Json& manifest) {
  require_path(args.in, "tag --in (manifest: raw_queries)");
  require_path(args.out, "tag --out (manifest: tag_cache)");
  const TagGenerator generator(resolve_provider(
      args.provider, manifest, "tagger", derive_seed("tag", args.seed)));
  std::vector<Json> out_rows;
  for (const Json& row : read_jsonl(args.in)) {
    const std::string query = row.value("query", "");
    const std::string id = record_id(row);
    const auto tags = generator.generate(query, id);
    out_rows.push_back(Json{{"query_id", id},
                            {"query_hash", to_hex(fnv1a64(query))},
                            {"tags", tags}});
  }
  write_jsonl(args.out, out_rows);
  std::cout << "tagged " << out_rows.size() << " queries -> " << args.out
            << "\n";
  return 0;
}

struct NormalizeArgs {
  std::string in, out, embedder;
  std::uint64_t threshold = 5;
  double eps = 0.15;
  int min_pts = 2;
  std::size_t max_cluster_size = 2;
  std::uint64_t seed = 0;
};

int run_normalize(const NormalizeArgs& args, const Json& manifest) {
  require_path(args.in, "normalize --in (manifest: tag_cache)");
  require_path(args.out, "normalize --out (manifest: vocabulary)");
  std::map<std::string, std::uint64_t> counts;
  for (const Json& row : read_jsonl(args.in)) {
    TagSet per_record;  // a tag counts once per record
    for (const Json& raw : row.value("tags", Json::array())) {
      per_record.add(rule_aggregate(raw.get<std::string>()));
    }
    for (const Tag& tag : per_record) ++counts[tag.name()];
  }

  TagVocabulary vocab = frequency_filter(counts, args.threshold);
  const ClusterParams params{args.eps, args.min_pts};
  if (!vocab.empty()) {
    const TagEmbedder embedder(
        resolve_provider(args.embedder, manifest, "embedder",
                         derive_seed("normalize", args.seed)));
    vocab = semantic_aggregate(vocab, params, embedder, args.max_cluster_size);
  } else {
    vocab.cluster_params = params;
  }
  save_vocabulary(vocab, args.out);
  std::cout << "vocabulary: " << vocab.counts.size() << " tags, "
            << vocab.remap.size() << " remapped -> " << args.out << "\n";
  return 0;
}

struct JudgeArgs {
  std::string in, out, provider, models, tags_from;
  bool swap_rejudge = false;
  std::uint64_t seed = 0;
};

int run_judge(const JudgeArgs& args, const Json& manifest) {
  require_path(args.in, "judge --in (manifest: answers)");
  require_path(args.out, "judge --out (manifest: records)");
  ProviderConfig provider = resolve_provider(args.provider, manifest, "judge",
                                             derive_seed("judge", args.seed));
  provider.swap_rejudge = provider.swap_rejudge || args.swap_rejudge;
  const PairJudge judge(provider);

  std::vector<ModelId> registry;
  if (!args.models.empty()) registry = load_registry(args.models);
  const auto lookup = [&](const std::string& id, Role fallback) {
    for (const ModelId& model : registry) {
      if (model.id == id) return model;
    }
    return ModelId{id, fallback, 0.0};
  };

  std::map<std::string, std::vector<std::string>> tag_join;
  if (!args.tags_from.empty()) {
    for (const Json& row : read_jsonl(args.tags_from)) {
      std::vector<std::string> tags;
      for (const Json& tag : row.value("tags", Json::array())) {
        tags.push_back(tag.get<std::string>());
      }
      tag_join[record_id(row)] = std::move(tags);
    }
  }

  std::vector<ComparisonRecord> records;
  for (const Json& row : read_jsonl(args.in)) {
    ComparisonRecord record;
    record.query_id = record_id(row);
    record.candidate = lookup(row.value("candidate", ""), Role::Alternate);
    record.reference = lookup(row.value("reference", ""), Role::Reference);

    if (row.contains("tags")) {
      for (const Json& tag : row["tags"]) {
        record.tags.add(make_tag(tag.get<std::string>()));
      }
    } else if (auto it = tag_join.find(record.query_id); it != tag_join.end()) {
      for (const std::string& tag : it->second) record.tags.add(make_tag(tag));
    }

    // Candidate answers sit at position A.
    const JudgeVerdict verdict =
        judge.judge(row.value("query", ""), row.value("answer_candidate", ""),
                    row.value("answer_reference", ""));
    record.outcome = parse_verdict(verdict.compare_result, Position::A);
    validate_record(record);
    records.push_back(std::move(record));
  }
  save_records(records, args.out);
  std::cout << "judged " << records.size() << " pairs -> " << args.out << "\n";
  return 0;
}

struct BuildArgs {
  std::string records, out, weights, models, vocab, embedder;
  std::optional<double> align_threshold;
};

int run_build(const BuildArgs& args, const Json& manifest) {
  require_path(args.records, "build --records (manifest: records)");
  require_path(args.out, "build --out (manifest: table)");
  std::vector<ModelId> registry;
  if (!args.models.empty()) registry = load_registry(args.models);
  std::vector<ComparisonRecord> records = load_records(args.records, registry);

  if (!args.vocab.empty()) {
    const TagVocabulary vocab = load_vocabulary(args.vocab);
    const TagEmbedder embedder(
        resolve_provider(args.embedder, manifest, "embedder", 0));
    for (ComparisonRecord& record : records) {
      TagSet aligned;
      for (const Tag& tag : record.tags) {
        aligned.add(align_tag(tag, vocab, embedder, args.align_threshold));
      }
      record.tags = std::move(aligned);
    }
  }

  TagScoreTable table =
      build_table(records, resolve_weights(args.weights, manifest));
  apply_registry(table, registry);
  save_table(table, args.out);
  std::cout << "table: " << table.tag_counts().size() << " tags, "
            << table.alternate_ids().size() << " alternates -> " << args.out
            << "\n";
  return 0;
}

struct MergeArgs {
  std::string a, b, out;
  std::string mode = "counts";
};

int run_merge(const MergeArgs& args) {
  require_path(args.a, "merge --a");
  require_path(args.b, "merge --b");
  require_path(args.out, "merge --out");
  const TagScoreTable a = load_table(args.a);
  const TagScoreTable b = load_table(args.b);
  const MergeMode mode =
      args.mode == "scores" ? MergeMode::Scores : MergeMode::Counts;
  const TagScoreTable merged = merge_tables(a, b, mode);
  save_table(merged, args.out);
  std::cout << "merged " << args.a << " + " << args.b << " -> " << args.out
            << "\n";
  return 0;
}

struct SampleArgs {
  std::string in, out;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  std::string weight_mode = "sum";
};

int run_sample(const SampleArgs& args) {
  require_path(args.in, "sample --in (manifest: items)");
  require_path(args.out, "sample --out (manifest: sampled)");
  const std::vector<Json> rows = read_jsonl(args.in);
  std::vector<SampleItem> items;
  std::map<std::string, Json> by_id;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    SampleItem item;
    item.id = record_id(rows[i]);
    if (item.id.empty()) item.id = "row-" + std::to_string(i);
    for (const Json& tag : rows[i].value("tags", Json::array())) {
      item.tags.add(make_tag(tag.get<std::string>()));
    }
    by_id[item.id] = rows[i];
    items.push_back(std::move(item));
  }

  const HybridWeights weights =
      item_weights(items, tag_frequencies(items),
                   parse_weight_mode(args.weight_mode));
  SamplePlan plan;
  plan.alpha = args.alpha;
  plan.seed = derive_seed("sample", args.seed);

  std::vector<Json> sampled_rows;
  for (const std::string& id : weighted_sample(items, weights, plan)) {
    sampled_rows.push_back(by_id.at(id));  // full records preserved
  }
  write_jsonl(args.out, sampled_rows);
  std::cout << "sampled " << sampled_rows.size() << " of " << items.size()
            << " items -> " << args.out << "\n";
  return 0;
}

struct TuneArgs {
  std::string table, eval_set, models, out;
  std::size_t grid_points = 101;
};

int run_tune(const TuneArgs& args) {
  require_path(args.table, "tune --table (manifest: table)");
  require_path(args.eval_set, "tune --eval-set (manifest: eval_set)");
  TagScoreTable table = load_table(args.table);
  if (!args.models.empty()) apply_registry(table, load_registry(args.models));
  const std::vector<EvalQuery> sample = load_eval_set(args.eval_set);

  std::vector<double> deltas;
  deltas.reserve(sample.size());
  for (const EvalQuery& query : sample) {
    deltas.push_back(select(table, query.tags, 0.0).delta);
  }
  const std::vector<double> grid = default_theta_grid(deltas, args.grid_points);
  const double theta = tune_theta(table, sample, grid);

  const Json doc = {{"theta", theta}};
  if (!args.out.empty()) write_file(args.out, doc.dump(2) + "\n");
  std::cout << doc.dump() << "\n";
  return 0;
}

struct EvalArgs {
  std::string table, eval_set, models, curve, summary;
  std::size_t grid_points = 101;
  std::optional<double> theta;
  std::string pauc_mode = "excess";
};

int run_eval(const EvalArgs& args) {
  require_path(args.table, "eval --table (manifest: table)");
  require_path(args.eval_set, "eval --eval-set (manifest: eval_set)");
  TagScoreTable table = load_table(args.table);
  if (!args.models.empty()) apply_registry(table, load_registry(args.models));
  const std::vector<EvalQuery> queries = load_eval_set(args.eval_set);

  std::vector<double> deltas;
  deltas.reserve(queries.size());
  for (const EvalQuery& query : queries) {
    deltas.push_back(select(table, query.tags, 0.0).delta);
  }
  const std::vector<double> grid = default_theta_grid(deltas, args.grid_points);
  const EvalCurve curve = sweep_curve(table, queries, grid);
  const PaucMode mode = parse_pauc_mode(args.pauc_mode);
  const EvalSummary summary = summarize(curve, mode);

  Json doc = {
      {"max_ar", summary.max_ar},
      {"cost_at_max_ar", summary.cost_at_max_ar},
      {"rank_at_max_ar", summary.rank_at_max_ar},
      {"auc", summary.auc},
      {"pauc", summary.pauc},
      {"theta_at_max_ar", summary.theta_at_max_ar},
      {"ar_reference", curve.ar_reference},
  };
  if (args.theta) {
    const PolicyReport report = route_and_score(table, queries, *args.theta);
    doc["theta"] = *args.theta;
    doc["ar_at_theta"] = report.accept_rate;
    doc["cost_at_theta"] = report.mean_cost;
    doc["rho_at_theta"] = report.rho;
    doc["rank_at_theta"] = 2.0 - report.accept_rate;

    // group-by-label breakdown for records carrying a task category
    std::map<std::string, std::pair<std::size_t, std::size_t>> by_label;
    for (const EvalQuery& query : queries) {
      if (query.label.empty()) continue;
      auto& [total, good] = by_label[query.label];
      ++total;
      good += accepted(query, select(table, query.tags, *args.theta)) ? 1 : 0;
    }
    if (!by_label.empty()) {
      Json labels = Json::object();
      for (const auto& [label, tally] : by_label) {
        labels[label] = Json{{"count", tally.first},
                             {"accept_rate",
                              static_cast<double>(tally.second) /
                                  static_cast<double>(tally.first)}};
      }
      doc["labels"] = labels;
    }
  }

  if (!args.curve.empty()) write_curve_csv(curve, args.curve);
  if (!args.summary.empty()) write_file(args.summary, doc.dump(2) + "\n");
  std::cout << doc.dump() << "\n";
  return 0;
}

struct RouteArgs {
  std::string table, vocab, models, tags, query, provider, embedder;
  std::optional<double> align_threshold;
  double theta = 0.0;
  std::uint64_t seed = 0;
};

int run_route(const RouteArgs& args, const Json& manifest) {
  require_path(args.table, "route --table (manifest: table)");
  TagScoreTable table = load_table(args.table);
  if (!args.models.empty()) apply_registry(table, load_registry(args.models));

  TagSet tags;
  if (!args.tags.empty()) {
    for (const std::string& raw : split_csv(args.tags)) {
      tags.add(make_tag(raw));
    }
  } else if (!args.query.empty()) {
    const TagGenerator generator(resolve_provider(
        args.provider, manifest, "tagger", derive_seed("route", args.seed)));
    const TagEmbedder embedder(
        resolve_provider(args.embedder, manifest, "embedder", 0));
    std::optional<TagVocabulary> vocab;
    if (!args.vocab.empty()) vocab = load_vocabulary(args.vocab);
    for (const std::string& raw : generator.generate(args.query)) {
      const Tag generated = make_tag(raw);
      tags.add(vocab && !vocab->empty()
                   ? align_tag(generated, *vocab, embedder, args.align_threshold)
                   : generated);
    }
  } else {
    fail(Errc::BadRequest, "route needs --tags or --query");
  }

  const RoutingDecision decision = select(table, tags, args.theta);
  std::cout << decision_to_json(decision, 0).dump() << "\n";
  return 0;
}

int run_serve(const std::string& config_path) {
  require_path(config_path, "serve --config");
  RouterService service(load_gateway_config(config_path));
  const std::uint64_t version = service.reload();
  HttpGateway gateway(service);
  const int port = gateway.start();
  std::cout << "listening on " << service.config().listen_host << ":" << port
            << " (snapshot v" << version << ")\n";
  gateway.wait();
  return 0;
}

struct KappaArgs {
  std::string a, b;
};

int run_kappa(const KappaArgs& args) {
  require_path(args.a, "kappa --a");
  require_path(args.b, "kappa --b");
  const auto read_labels = [](const std::string& path) {
    std::vector<std::string> labels;
    std::istringstream stream(read_file(path));
    std::string line;
    while (std::getline(stream, line)) {
      const std::string label = trim(line);
      if (!label.empty()) labels.push_back(label);
    }
    return labels;
  };
  const auto a = read_labels(args.a);
  const auto b = read_labels(args.b);
  std::cout << Json{{"kappa", cohen_kappa(a, b)}}.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tag-based LLM routing toolkit"};
  app.require_subcommand(1);
  app.fallthrough();  // --seed / --manifest may follow the subcommand name

  std::uint64_t seed = 0;
  std::string manifest_path;
  app.add_option("--seed", seed, "master seed fanned out per subcommand");
  app.add_option("--manifest", manifest_path,
                 "pipeline manifest JSON supplying defaults for any flag");

  TagArgs tag_args;
  auto* tag_cmd = app.add_subcommand("tag", "generate tags for raw queries");
  tag_cmd->add_option("--in", tag_args.in, "raw queries JSONL");
  tag_cmd->add_option("--out", tag_args.out, "tag cache JSONL");
  tag_cmd->add_option("--provider", tag_args.provider, "provider config JSON");

  NormalizeArgs norm_args;
  auto* norm_cmd =
      app.add_subcommand("normalize", "build the tag vocabulary from a cache");
  norm_cmd->add_option("--in", norm_args.in, "tag cache JSONL");
  norm_cmd->add_option("--out", norm_args.out, "vocabulary JSON");
  norm_cmd->add_option("--threshold", norm_args.threshold,
                       "minimum tag frequency");
  norm_cmd->add_option("--eps", norm_args.eps, "DBSCAN cosine-distance radius");
  norm_cmd->add_option("--min-pts", norm_args.min_pts, "DBSCAN density");
  norm_cmd->add_option("--max-cluster-size", norm_args.max_cluster_size,
                       "survivors kept per cluster");
  norm_cmd->add_option("--embedder", norm_args.embedder,
                       "embedding provider config JSON");

  JudgeArgs judge_args;
  auto* judge_cmd =
      app.add_subcommand("judge", "judge answer pairs into comparison records");
  judge_cmd->add_option("--in", judge_args.in, "answer pairs JSONL");
  judge_cmd->add_option("--out", judge_args.out, "comparison records JSONL");
  judge_cmd->add_option("--provider", judge_args.provider,
                        "judge provider config JSON");
  judge_cmd->add_option("--models", judge_args.models, "model registry JSON");
  judge_cmd->add_option("--tags-from", judge_args.tags_from,
                        "tag cache to join tags by query_id");
  judge_cmd->add_flag("--swap-rejudge", judge_args.swap_rejudge,
                      "judge twice with swapped positions");

  BuildArgs build_args;
  auto* build_cmd =
      app.add_subcommand("build", "build a tag-score table from records");
  build_cmd->add_option("--records", build_args.records, "records JSONL");
  build_cmd->add_option("--out", build_args.out, "table JSON");
  build_cmd->add_option("--weights", build_args.weights,
                        "s_win,s_tie,s_loss (default 1,0.15,-1)");
  build_cmd->add_option("--models", build_args.models, "model registry JSON");
  build_cmd->add_option("--vocab", build_args.vocab,
                        "align record tags against this vocabulary");
  build_cmd->add_option("--embedder", build_args.embedder,
                        "embedding provider config JSON");
  build_cmd->add_option("--align-threshold", build_args.align_threshold,
                        "reject alignments below this cosine similarity");

  MergeArgs merge_args;
  auto* merge_cmd = app.add_subcommand("merge", "merge two tag-score tables");
  merge_cmd->add_option("--a", merge_args.a, "first table")->required();
  merge_cmd->add_option("--b", merge_args.b, "second table")->required();
  merge_cmd->add_option("--out", merge_args.out, "merged table")->required();
  merge_cmd->add_option("--merge-mode", merge_args.mode, "counts|scores")
      ->check(CLI::IsMember({"counts", "scores"}));

  SampleArgs sample_args;
  auto* sample_cmd =
      app.add_subcommand("sample", "hybrid weight-based data sampling");
  sample_cmd->add_option("--in", sample_args.in, "items JSONL");
  sample_cmd->add_option("--out", sample_args.out, "sampled JSONL");
  sample_cmd->add_option("--alpha", sample_args.alpha, "sampling ratio (0,1]");
  sample_cmd->add_option("--weight-mode", sample_args.weight_mode,
                         "sum|mean|max")
      ->check(CLI::IsMember({"sum", "mean", "max"}));

  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "grid search the best theta");
  tune_cmd->add_option("--table", tune_args.table, "table JSON");
  tune_cmd->add_option("--eval-set", tune_args.eval_set, "labeled sample JSONL");
  tune_cmd->add_option("--models", tune_args.models, "model registry JSON");
  tune_cmd->add_option("--grid-points", tune_args.grid_points, "grid size");
  tune_cmd->add_option("--out", tune_args.out, "write {theta} JSON here");

  EvalArgs eval_args;
  auto* eval_cmd =
      app.add_subcommand("eval", "sweep theta and report curve metrics");
  eval_cmd->add_option("--table", eval_args.table, "table JSON");
  eval_cmd->add_option("--eval-set", eval_args.eval_set, "eval set JSONL");
  eval_cmd->add_option("--models", eval_args.models, "model registry JSON");
  eval_cmd->add_option("--curve", eval_args.curve, "curve CSV output");
  eval_cmd->add_option("--summary", eval_args.summary, "summary JSON output");
  eval_cmd->add_option("--grid-points", eval_args.grid_points, "grid size");
  eval_cmd->add_option("--theta", eval_args.theta,
                       "also report metrics at this theta");
  eval_cmd->add_option("--pauc-mode", eval_args.pauc_mode, "excess|as-written")
      ->check(CLI::IsMember({"excess", "as-written"}));

  RouteArgs route_args;
  auto* route_cmd = app.add_subcommand("route", "route one query or tag set");
  route_cmd->add_option("--table", route_args.table, "table JSON");
  route_cmd->add_option("--vocab", route_args.vocab, "vocabulary JSON");
  route_cmd->add_option("--models", route_args.models, "model registry JSON");
  route_cmd->add_option("--tags", route_args.tags, "comma-separated tags");
  route_cmd->add_option("--query", route_args.query, "raw query text");
  route_cmd->add_option("--provider", route_args.provider,
                        "tag provider config JSON");
  route_cmd->add_option("--embedder", route_args.embedder,
                        "embedding provider config JSON");
  route_cmd->add_option("--align-threshold", route_args.align_threshold,
                        "reject alignments below this cosine similarity");
  route_cmd->add_option("--theta", route_args.theta, "cost-awareness threshold");

  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "run the routing gateway");
  serve_cmd->add_option("--config", serve_config, "gateway config JSON")
      ->required();

  KappaArgs kappa_args;
  auto* kappa_cmd =
      app.add_subcommand("kappa", "Cohen's kappa between two label files");
  kappa_cmd->add_option("--a", kappa_args.a, "labels, one per line")->required();
  kappa_cmd->add_option("--b", kappa_args.b, "labels, one per line")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    Json manifest = Json::object();
    if (!manifest_path.empty()) manifest = load_json(manifest_path);

    // Manifest values fill whatever the command line left unset.
    const auto fill = [&](CLI::App* cmd, const char* flag, std::string& target,
                          const char* key) {
      if (cmd->count(flag) == 0 && target.empty() && manifest.contains(key)) {
        target = manifest[key].get<std::string>();
      }
    };
    const auto fill_num = [&](CLI::App* cmd, const char* flag, auto& target,
                              const char* key) {
      if (cmd->count(flag) == 0 && manifest.contains(key)) {
        target = manifest[key].get<std::decay_t<decltype(target)>>();
      }
    };
    if (app.count("--seed") == 0 && manifest.contains("seed")) {
      seed = manifest["seed"].get<std::uint64_t>();
    }

    fill(tag_cmd, "--in", tag_args.in, "raw_queries");
    fill(tag_cmd, "--out", tag_args.out, "tag_cache");

    fill(norm_cmd, "--in", norm_args.in, "tag_cache");
    fill(norm_cmd, "--out", norm_args.out, "vocabulary");
    fill_num(norm_cmd, "--threshold", norm_args.threshold, "threshold");
    fill_num(norm_cmd, "--eps", norm_args.eps, "eps");
    fill_num(norm_cmd, "--min-pts", norm_args.min_pts, "min_pts");
    fill_num(norm_cmd, "--max-cluster-size", norm_args.max_cluster_size,
             "max_cluster_size");

    fill(judge_cmd, "--in", judge_args.in, "answers");
    fill(judge_cmd, "--out", judge_args.out, "records");
    fill(judge_cmd, "--models", judge_args.models, "models");
    fill(judge_cmd, "--tags-from", judge_args.tags_from, "tag_cache");

    fill(build_cmd, "--records", build_args.records, "records");
    fill(build_cmd, "--out", build_args.out, "table");
    fill(build_cmd, "--models", build_args.models, "models");
    fill(build_cmd, "--vocab", build_args.vocab, "vocabulary");

    fill(sample_cmd, "--in", sample_args.in, "items");
    fill(sample_cmd, "--out", sample_args.out, "sampled");
    fill_num(sample_cmd, "--alpha", sample_args.alpha, "alpha");
    fill(sample_cmd, "--weight-mode", sample_args.weight_mode, "weight_mode");

    fill(tune_cmd, "--table", tune_args.table, "table");
    fill(tune_cmd, "--eval-set", tune_args.eval_set, "eval_set");
    fill(tune_cmd, "--models", tune_args.models, "models");
    fill(tune_cmd, "--out", tune_args.out, "theta_out");
    fill_num(tune_cmd, "--grid-points", tune_args.grid_points, "grid_points");

    fill(eval_cmd, "--table", eval_args.table, "table");
    fill(eval_cmd, "--eval-set", eval_args.eval_set, "eval_set");
    fill(eval_cmd, "--models", eval_args.models, "models");
    fill(eval_cmd, "--curve", eval_args.curve, "curve");
    fill(eval_cmd, "--summary", eval_args.summary, "summary");
    fill_num(eval_cmd, "--grid-points", eval_args.grid_points, "grid_points");
    fill(eval_cmd, "--pauc-mode", eval_args.pauc_mode, "pauc_mode");
    if (eval_cmd->count("--theta") == 0 && manifest.contains("theta")) {
      eval_args.theta = manifest["theta"].get<double>();
    }

    fill(route_cmd, "--table", route_args.table, "table");
    fill(route_cmd, "--vocab", route_args.vocab, "vocabulary");
    fill(route_cmd, "--models", route_args.models, "models");
    fill_num(route_cmd, "--theta", route_args.theta, "theta");

    tag_args.seed = seed;
    norm_args.seed = seed;
    judge_args.seed = seed;
    sample_args.seed = seed;
    route_args.seed = seed;

    if (tag_cmd->parsed()) return run_tag(tag_args, manifest);
    if (norm_cmd->parsed()) return run_normalize(norm_args, manifest);
    if (judge_cmd->parsed()) return run_judge(judge_args, manifest);
    if (build_cmd->parsed()) return run_build(build_args, manifest);
    if (merge_cmd->parsed()) return run_merge(merge_args);
    if (sample_cmd->parsed()) return run_sample(sample_args);
    if (tune_cmd->parsed()) return run_tune(tune_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (route_cmd->parsed()) return run_route(route_args, manifest);
    if (serve_cmd->parsed()) return run_serve(serve_config);
    if (kappa_cmd->parsed()) return run_kappa(kappa_args);
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
