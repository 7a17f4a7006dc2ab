#ifndef PINK_ERROR_H_
#define PINK_ERROR_H_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pink {

enum class ErrorCode {
  // datamodel
  kMalformedRecord,
  kMissingField,
  kDuplicateSampleId,
  kEmptyTranscription,
  kUnresolvableImageRef,
  kEmptyCorpus,
  kUnknownSampleId,
  kDuplicateKey,
  kWrongArity,
  kOutOfRange,
  kInvalidRubric,
  // judge
  kPrecondition,
  kTransportError,
  kTimeout,
  kParseError,
  kFixtureMiss,
  // penalty / metrics / stats
  kArityMismatch,
  kInvalidThreshold,
  kEmptyInput,
  kAllOraclesZero,
  kZeroVariance,
  kAllTied,
  kUnknownCategory,
  kZeroMean,
  // analysis
  kModelSetMismatch,
  kNoOverlap,
  kInsufficientRuns,
  kSampleSetMismatch,
  kInsufficientRaters,
  kUnresolvedMapping,
  // app
  kConfigError,
  kMissingStore,
  kBindFailure,
  kStoreLocked,
  kValidation,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure surfaced by the library. `line` is set for errors that can be
// pinned to a 1-based line of an input file.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> line = std::nullopt);

  ErrorCode code() const { return code_; }
  std::optional<std::size_t> line() const { return line_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> line_;
};

}  // namespace pink

#endif  // PINK_ERROR_H_
