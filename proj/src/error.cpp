#include "isotruss/error.hpp"

namespace isotruss {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DuplicateNode: return "duplicate-node";
    case ErrorCode::NodeOutOfRange: return "node-out-of-range";
    case ErrorCode::DegenerateEdge: return "degenerate-edge";
    case ErrorCode::Infeasible: return "infeasible";
    case ErrorCode::Reconstruction: return "reconstruction";
    case ErrorCode::LimitViolation: return "limit-violation";
    case ErrorCode::RankDeficient: return "rank-deficient";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Io: return "io";
    case ErrorCode::Checksum: return "checksum";
    case ErrorCode::Version: return "version";
    case ErrorCode::SpeedCap: return "speed-cap";
    case ErrorCode::Domain: return "domain";
    case ErrorCode::Consistency: return "consistency";
    case ErrorCode::Stability: return "stability";
    case ErrorCode::Aborted: return "aborted";
  }
  return "unknown";
}

}  // namespace isotruss
