#include "pink/error.h"

namespace pink {
namespace {

std::string Decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> line) {
  std::string out(ErrorCodeName(code));
  if (line) out += "(line " + std::to_string(*line) + ")";
  out += ": ";
  out += message;
  return out;
}

}  // namespace

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kDuplicateSampleId: return "DuplicateSampleId";
    case ErrorCode::kEmptyTranscription: return "EmptyTranscription";
    case ErrorCode::kUnresolvableImageRef: return "UnresolvableImageRef";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kUnknownSampleId: return "UnknownSampleId";
    case ErrorCode::kDuplicateKey: return "DuplicateKey";
    case ErrorCode::kWrongArity: return "WrongArity";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kInvalidRubric: return "InvalidRubric";
    case ErrorCode::kPrecondition: return "PreconditionViolation";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kFixtureMiss: return "FixtureMiss";
    case ErrorCode::kArityMismatch: return "ArityMismatch";
    case ErrorCode::kInvalidThreshold: return "InvalidThreshold";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kAllOraclesZero: return "AllOraclesZero";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kAllTied: return "AllTied";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kZeroMean: return "ZeroMean";
    case ErrorCode::kModelSetMismatch: return "ModelSetMismatch";
    case ErrorCode::kNoOverlap: return "NoOverlap";
    case ErrorCode::kInsufficientRuns: return "InsufficientRuns";
    case ErrorCode::kSampleSetMismatch: return "SampleSetMismatch";
    case ErrorCode::kInsufficientRaters: return "InsufficientRaters";
    case ErrorCode::kUnresolvedMapping: return "UnresolvedMapping";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kMissingStore: return "MissingStore";
    case ErrorCode::kBindFailure: return "BindFailure";
    case ErrorCode::kStoreLocked: return "StoreLocked";
    case ErrorCode::kValidation: return "ValidationError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> line)
    : std::runtime_error(Decorate(code, message, line)),
      code_(code),
      line_(line) {}

}  // namespace pink
