#include "roboevolve/error.hpp"

namespace roboevolve {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyParseSet: return "EmptyParseSet";
    case ErrorCode::UnsatisfiableScene: return "UnsatisfiableScene";
    case ErrorCode::EmptyPlan: return "EmptyPlan";
    case ErrorCode::UnknownObject: return "UnknownObject";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::SegmentMismatch: return "SegmentMismatch";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::NonFiniteRatio: return "NonFiniteRatio";
    case ErrorCode::NonFiniteLogProb: return "NonFiniteLogProb";
    case ErrorCode::NonFiniteParams: return "NonFiniteParams";
    case ErrorCode::UnknownBin: return "UnknownBin";
    case ErrorCode::EmptyPairSet: return "EmptyPairSet";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::DuplicateSceneId: return "DuplicateSceneId";
    case ErrorCode::MissingCheckpoint: return "MissingCheckpoint";
    case ErrorCode::IntegrityError: return "IntegrityError";
    case ErrorCode::MissingMetrics: return "MissingMetrics";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace roboevolve
