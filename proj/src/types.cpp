#include "tagroute/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "tagroute/util.hpp"

namespace tagroute {

namespace {

bool is_space(char c) {
  return std::isspace(static_cast<unsigned char>(c)) != 0;
}

}  // namespace

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(text[begin])) ++begin;
  while (end > begin && is_space(text[end - 1])) --end;
  return std::string(text.substr(begin, end - begin));
}

std::string to_lower_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

std::string to_hex(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xF];
    value >>= 4;
  }
  return out;
}

Tag make_tag(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c);
  }
  if (out.empty()) fail(Errc::EmptyTag, "tag is empty after trimming");
  return Tag(std::move(out));
}

TagSet::TagSet(std::vector<Tag> tags) {
  tags_.reserve(tags.size());
  for (auto& tag : tags) add(std::move(tag));
}

void TagSet::add(Tag tag) {
  if (!contains(tag.name())) tags_.push_back(std::move(tag));
}

bool TagSet::contains(std::string_view name) const {
  return std::any_of(tags_.begin(), tags_.end(),
                     [&](const Tag& t) { return t.name() == name; });
}

std::string_view role_name(Role role) {
  return role == Role::Reference ? "reference" : "alternate";
}

Role parse_role(std::string_view text) {
  if (text == "reference") return Role::Reference;
  if (text == "alternate") return Role::Alternate;
  fail(Errc::ParseError, "unknown role '" + std::string(text) + "'");
}

void validate_model_system(std::span<const ModelId> models) {
  std::size_t references = 0;
  std::set<std::string> seen;
  for (const auto& model : models) {
    if (model.id.empty()) fail(Errc::InvalidConfig, "model id is empty");
    if (!seen.insert(model.id).second) {
      fail(Errc::InvalidConfig, "duplicate model id '" + model.id + "'");
    }
    if (model.unit_cost < 0.0) {
      fail(Errc::InvalidConfig, "negative unit_cost for '" + model.id + "'");
    }
    if (model.role == Role::Reference) ++references;
  }
  if (references != 1) {
    fail(Errc::InvalidConfig, "model system must have exactly one reference");
  }
}

std::string_view outcome_name(Outcome outcome) {
  switch (outcome) {
    case Outcome::Win: return "win";
    case Outcome::Tie: return "tie";
    case Outcome::Loss: return "loss";
  }
  return "tie";
}

Outcome parse_outcome(std::string_view text) {
  if (text == "win") return Outcome::Win;
  if (text == "tie") return Outcome::Tie;
  if (text == "loss") return Outcome::Loss;
  fail(Errc::ParseError, "unknown outcome '" + std::string(text) + "'");
}

void validate_record(const ComparisonRecord& record) {
  if (record.candidate.role != Role::Alternate) {
    fail(Errc::InvariantViolation,
         "record candidate '" + record.candidate.id + "' is not an alternate");
  }
  if (record.reference.role != Role::Reference) {
    fail(Errc::InvariantViolation,
         "record reference '" + record.reference.id + "' is not a reference");
  }
  if (record.candidate.id == record.reference.id) {
    fail(Errc::InvariantViolation,
         "record candidate equals the reference model");
  }
  if (record.tags.empty()) {
    fail(Errc::InvariantViolation,
         "record '" + record.query_id + "' has no tags");
  }
}

void validate_weights(const ScoreWeights& weights) {
  if (!(weights.s_loss < weights.s_tie && weights.s_tie < weights.s_win)) {
    fail(Errc::InvalidConfig, "score weights must satisfy s_loss < s_tie < s_win");
  }
}

double dot(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    fail(Errc::DimensionMismatch, "embedding dimensions differ");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    sum += a.values[i] * b.values[i];
  }
  return sum;
}

double cosine(const Embedding& a, const Embedding& b) {
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) {
    fail(Errc::InvariantViolation, "cosine of a zero vector");
  }
  return dot(a, b) / (na * nb);
}

void l2_normalize(Embedding& e) {
  double norm = std::sqrt(dot(e, e));
  if (norm == 0.0) {
    fail(Errc::InvariantViolation, "cannot normalize a zero vector");
  }
  for (double& v : e.values) v /= norm;
}

bool is_normalized(const Embedding& e, double tol) {
  if (e.values.empty()) return false;
  return std::abs(std::sqrt(dot(e, e)) - 1.0) <= tol;
}

Outcome parse_verdict(std::string_view verdict, Position candidate_position) {
  if (verdict == "C") return Outcome::Tie;
  if (verdict != "A" && verdict != "B") {
    fail(Errc::MalformedVerdict, "verdict '" + std::string(verdict) +
                                     "' is not one of A/B/C");
  }
  const bool names_candidate =
      (verdict == "A") == (candidate_position == Position::A);
  return names_candidate ? Outcome::Win : Outcome::Loss;
}

}  // namespace tagroute
