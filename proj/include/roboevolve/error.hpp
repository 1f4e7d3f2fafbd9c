#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace roboevolve {

enum class ErrorCode {
  EmptyParseSet,
  UnsatisfiableScene,
  EmptyPlan,
  UnknownObject,
  EmptyCandidateSet,
  SegmentMismatch,
  GroupTooSmall,
  NonFiniteRatio,
  NonFiniteLogProb,
  NonFiniteParams,
  UnknownBin,
  EmptyPairSet,
  ConfigInvalid,
  SchemaViolation,
  DuplicateSceneId,
  MissingCheckpoint,
  IntegrityError,
  MissingMetrics,
  Io,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; callers switch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace roboevolve
