#include "tagroute/scorer.hpp"

#include <cmath>

#include "tagroute/io.hpp"

namespace tagroute {

double tag_weight(std::uint64_t count_t, std::uint64_t total_count) {
  if (count_t == 0 || total_count < count_t) {
    fail(Errc::InvariantViolation, "tag_weight requires 1 <= count_t <= total");
  }
  return (1.0 - std::exp(-static_cast<double>(count_t))) /
         static_cast<double>(total_count);
}

TagScoreTable::TagScoreTable(std::string reference_id, ScoreWeights weights)
    : reference_(std::move(reference_id)), weights_(weights) {
  validate_weights(weights_);
  models_[reference_] = ModelId{reference_, Role::Reference, 0.0};
}

std::uint64_t TagScoreTable::total_tag_count() const {
  std::uint64_t total = 0;
  for (const auto& [tag, count] : tag_counts_) {
    (void)tag;
    total += count;
  }
  return total;
}

std::vector<std::string> TagScoreTable::alternate_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, model] : models_) {
    if (model.role == Role::Alternate) ids.push_back(id);
  }
  return ids;
}

void TagScoreTable::add_model(ModelId model) {
  if (model.role == Role::Reference && model.id != reference_) {
    fail(Errc::ReferenceMismatch,
         "table reference is '" + reference_ + "', got '" + model.id + "'");
  }
  models_.emplace(model.id, std::move(model));  // first registration wins
}

void TagScoreTable::set_unit_cost(const std::string& model_id,
                                  double unit_cost) {
  auto it = models_.find(model_id);
  if (it == models_.end()) {
    fail(Errc::UnknownModel, "no model '" + model_id + "' in table");
  }
  if (unit_cost < 0.0) {
    fail(Errc::InvalidConfig, "negative unit_cost for '" + model_id + "'");
  }
  it->second.unit_cost = unit_cost;
}

void TagScoreTable::add_counts(const std::string& model_id,
                               const std::string& tag,
                               const OutcomeCounts& counts) {
  if (model_id == reference_) {
    fail(Errc::InvariantViolation, "reference model cannot hold raw counts");
  }
  if (models_.find(model_id) == models_.end()) {
    add_model(ModelId{model_id, Role::Alternate, 0.0});
  }
  OutcomeCounts& cell = raw_counts_[model_id][tag];
  cell.win += counts.win;
  cell.tie += counts.tie;
  cell.loss += counts.loss;
}

void TagScoreTable::add_tag_count(const std::string& tag, std::uint64_t count) {
  tag_counts_[tag] += count;
}

void TagScoreTable::recompute_scores() {
  scores_.clear();
  score_overridden_ = false;
  const std::uint64_t total = total_tag_count();
  for (const auto& [model_id, by_tag] : raw_counts_) {
    for (const auto& [tag, counts] : by_tag) {
      auto it = tag_counts_.find(tag);
      if (it == tag_counts_.end() || it->second == 0) {
        fail(Errc::InvariantViolation,
             "counts for tag '" + tag + "' without a tag frequency");
      }
      const double weighted = static_cast<double>(counts.win) * weights_.s_win +
                              static_cast<double>(counts.tie) * weights_.s_tie +
                              static_cast<double>(counts.loss) * weights_.s_loss;
      scores_[model_id][tag] = tag_weight(it->second, total) * weighted;
    }
  }
}

void TagScoreTable::override_scores(
    std::map<std::string, std::map<std::string, double>> scores) {
  scores_ = std::move(scores);
  score_overridden_ = true;
}

TagScoreTable build_table(std::span<const ComparisonRecord> records,
                          const ScoreWeights& weights) {
  if (records.empty()) fail(Errc::NoRecords, "no comparison records");

  TagScoreTable table(records.front().reference.id, weights);
  table.set_unit_cost(table.reference(), records.front().reference.unit_cost);

  for (const ComparisonRecord& record : records) {
    validate_record(record);
    if (record.reference.id != table.reference()) {
      fail(Errc::MixedReference,
           "records disagree on the reference: '" + table.reference() +
               "' vs '" + record.reference.id + "'");
    }
    table.add_model(record.candidate);
    OutcomeCounts one;
    switch (record.outcome) {
      case Outcome::Win: one.win = 1; break;
      case Outcome::Tie: one.tie = 1; break;
      case Outcome::Loss: one.loss = 1; break;
    }
    for (const Tag& tag : record.tags) {
      table.add_counts(record.candidate.id, tag.name(), one);
      table.add_tag_count(tag.name(), 1);
    }
  }
  table.recompute_scores();
  return table;
}

double lookup_score(const TagScoreTable& table, const std::string& model_id,
                    const Tag& tag) {
  if (table.models().find(model_id) == table.models().end()) {
    fail(Errc::UnknownModel, "no model '" + model_id + "' in table");
  }
  if (model_id == table.reference()) return 0.0;
  auto model_it = table.scores().find(model_id);
  if (model_it == table.scores().end()) return 0.0;
  auto tag_it = model_it->second.find(tag.name());
  return tag_it == model_it->second.end() ? 0.0 : tag_it->second;
}

TagScoreTable merge_tables(const TagScoreTable& a, const TagScoreTable& b,
                           MergeMode mode) {
  if (a.weights() != b.weights()) {
    fail(Errc::WeightMismatch, "tables use different score weights");
  }
  if (a.reference() != b.reference()) {
    fail(Errc::ReferenceMismatch, "tables use different reference models");
  }

  TagScoreTable merged(a.reference(), a.weights());
  for (const auto& [id, model] : a.models()) merged.add_model(model);
  for (const auto& [id, model] : b.models()) merged.add_model(model);

  for (const auto* source : {&a, &b}) {
    for (const auto& [tag, count] : source->tag_counts()) {
      merged.add_tag_count(tag, count);
    }
    for (const auto& [model_id, by_tag] : source->raw_counts()) {
      for (const auto& [tag, counts] : by_tag) {
        merged.add_counts(model_id, tag, counts);
      }
    }
  }
  merged.recompute_scores();

  if (mode == MergeMode::Scores) {
    auto sums = a.scores();
    for (const auto& [model_id, by_tag] : b.scores()) {
      for (const auto& [tag, score] : by_tag) {
        sums[model_id][tag] += score;
      }
    }
    merged.override_scores(std::move(sums));
  }
  return merged;
}

void save_table(const TagScoreTable& table, const std::string& path) {
  Json tag_counts = Json::object();
  for (const auto& [tag, count] : table.tag_counts()) tag_counts[tag] = count;

  Json models = Json::object();
  for (const auto& [model_id, by_tag] : table.raw_counts()) {
    Json tags = Json::object();
    for (const auto& [tag, counts] : by_tag) {
      tags[tag] = {{"win", counts.win}, {"tie", counts.tie}, {"loss", counts.loss}};
    }
    models[model_id] = tags;
  }

  Json doc = {
      {"version", 1},
      {"reference", table.reference()},
      {"weights",
       {{"s_win", table.weights().s_win},
        {"s_tie", table.weights().s_tie},
        {"s_loss", table.weights().s_loss}}},
      {"tag_counts", tag_counts},
      {"models", models},
  };
  write_file(path, doc.dump(2) + "\n");
}

TagScoreTable load_table(const std::string& path) {
  const Json doc = load_json(path);
  if (!doc.is_object() || !doc.contains("reference") ||
      !doc["reference"].is_string() || !doc.contains("tag_counts") ||
      !doc.contains("models")) {
    fail(Errc::ParseError, "table file '" + path + "' has an invalid shape");
  }

  ScoreWeights weights;
  if (doc.contains("weights")) {
    weights.s_win = doc["weights"].value("s_win", 1.0);
    weights.s_tie = doc["weights"].value("s_tie", 0.15);
    weights.s_loss = doc["weights"].value("s_loss", -1.0);
  }
  try {
    validate_weights(weights);
  } catch (const Error&) {
    fail(Errc::InvariantViolation, "table weights violate s_loss < s_tie < s_win");
  }

  TagScoreTable table(doc["reference"].get<std::string>(), weights);
  for (const auto& [tag, count] : doc["tag_counts"].items()) {
    if (!count.is_number_unsigned()) {
      fail(Errc::InvariantViolation,
           "tag count for '" + tag + "' must be a nonnegative integer");
    }
    table.add_tag_count(tag, count.get<std::uint64_t>());
  }
  for (const auto& [model_id, by_tag] : doc["models"].items()) {
    if (model_id == table.reference()) {
      fail(Errc::InvariantViolation, "reference model must not carry counts");
    }
    table.add_model(ModelId{model_id, Role::Alternate, 0.0});
    for (const auto& [tag, counts] : by_tag.items()) {
      if (!counts.is_object()) {
        fail(Errc::ParseError, "counts for '" + tag + "' must be an object");
      }
      for (const char* field : {"win", "tie", "loss"}) {
        if (counts.contains(field) && !counts[field].is_number_unsigned()) {
          fail(Errc::InvariantViolation,
               "count '" + std::string(field) + "' for '" + tag +
                   "' must be a nonnegative integer");
        }
      }
      OutcomeCounts cell;
      cell.win = counts.value("win", std::uint64_t{0});
      cell.tie = counts.value("tie", std::uint64_t{0});
      cell.loss = counts.value("loss", std::uint64_t{0});
      table.add_counts(model_id, tag, cell);

      auto it = table.tag_counts().find(tag);
      if (it == table.tag_counts().end() || it->second < cell.total()) {
        fail(Errc::InvariantViolation,
             "tag '" + tag + "' has more per-model results than occurrences");
      }
    }
  }
  table.recompute_scores();
  return table;
}

std::vector<ComparisonRecord> load_records(const std::string& path,
                                           std::span<const ModelId> registry) {
  const auto registered = [&](const std::string& id,
                              Role fallback_role) -> ModelId {
    for (const ModelId& model : registry) {
      if (model.id == id) return model;
    }
    return ModelId{id, fallback_role, 0.0};
  };

  std::vector<ComparisonRecord> records;
  for (const Json& row : read_jsonl(path)) {
    ComparisonRecord record;
    record.query_id = row.value("query_id", "");
    for (const Json& tag : row.value("tags", Json::array())) {
      record.tags.add(make_tag(tag.get<std::string>()));
    }
    if (!row.contains("candidate") || !row.contains("reference") ||
        !row.contains("outcome")) {
      fail(Errc::ParseError,
           "record '" + record.query_id + "' lacks candidate/reference/outcome");
    }
    record.candidate =
        registered(row["candidate"].get<std::string>(), Role::Alternate);
    record.reference =
        registered(row["reference"].get<std::string>(), Role::Reference);
    record.outcome = parse_outcome(row["outcome"].get<std::string>());
    validate_record(record);
    records.push_back(std::move(record));
  }
  return records;
}

void save_records(std::span<const ComparisonRecord> records,
                  const std::string& path) {
  std::vector<Json> rows;
  rows.reserve(records.size());
  for (const ComparisonRecord& record : records) {
    Json tags = Json::array();
    for (const Tag& tag : record.tags) tags.push_back(tag.name());
    rows.push_back(Json{{"query_id", record.query_id},
                        {"tags", tags},
                        {"candidate", record.candidate.id},
                        {"reference", record.reference.id},
                        {"outcome", std::string(outcome_name(record.outcome))}});
  }
  write_jsonl(path, rows);
}

}  // namespace tagroute
