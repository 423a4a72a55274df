#pragma once
// Error taxonomy shared by every module. Failures carry a stable code so
// callers (and the HTTP layer) can match on the condition, not the text.

#include <stdexcept>
#include <string>
#include <string_view>

namespace tagroute {

enum class Errc {
  // tag / verdict parsing
  EmptyTag,
  MalformedVerdict,
  // providers
  ProviderUnavailable,
  MalformedResponse,
  MissingEntry,
  DimensionMismatch,
  // normalize
  MissingEmbedding,
  EmptyVocabulary,
  // scorer
  NoRecords,
  MixedReference,
  UnknownModel,
  WeightMismatch,
  ReferenceMismatch,
  // decider
  NoAlternates,
  EmptyGrid,
  EmptySample,
  // sampler
  UntaggedItem,
  SampleTooLarge,
  // eval
  MissingOutcome,
  EmptySet,
  MissingCost,
  LengthMismatch,
  EmptyInput,
  // serialization / service
  ParseError,
  InvariantViolation,
  IoError,
  InvalidConfig,
  BadRequest,
  NoSnapshot,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::EmptyTag: return "EmptyTag";
    case Errc::MalformedVerdict: return "MalformedVerdict";
    case Errc::ProviderUnavailable: return "ProviderUnavailable";
    case Errc::MalformedResponse: return "MalformedResponse";
    case Errc::MissingEntry: return "MissingEntry";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::MissingEmbedding: return "MissingEmbedding";
    case Errc::EmptyVocabulary: return "EmptyVocabulary";
    case Errc::NoRecords: return "NoRecords";
    case Errc::MixedReference: return "MixedReference";
    case Errc::UnknownModel: return "UnknownModel";
    case Errc::WeightMismatch: return "WeightMismatch";
    case Errc::ReferenceMismatch: return "ReferenceMismatch";
    case Errc::NoAlternates: return "NoAlternates";
    case Errc::EmptyGrid: return "EmptyGrid";
    case Errc::EmptySample: return "EmptySample";
    case Errc::UntaggedItem: return "UntaggedItem";
    case Errc::SampleTooLarge: return "SampleTooLarge";
    case Errc::MissingOutcome: return "MissingOutcome";
    case Errc::EmptySet: return "EmptySet";
    case Errc::MissingCost: return "MissingCost";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::ParseError: return "ParseError";
    case Errc::InvariantViolation: return "InvariantViolation";
    case Errc::IoError: return "IoError";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::BadRequest: return "BadRequest";
    case Errc::NoSnapshot: return "NoSnapshot";
  }
  return "UnknownError";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message),
        code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace tagroute
