#pragma once

#include <stdexcept>
#include <string>

namespace isotruss {

// Numeric values are part of the C API (see isotruss.h) and must stay stable.
enum class ErrorCode : int {
  InvalidArgument = 1,
  DuplicateNode = 2,
  NodeOutOfRange = 3,
  DegenerateEdge = 4,
  Infeasible = 5,
  Reconstruction = 6,
  LimitViolation = 7,
  RankDeficient = 8,
  Parse = 9,
  Io = 10,
  Checksum = 11,
  Version = 12,
  SpeedCap = 13,
  Domain = 14,
  Consistency = 15,
  Stability = 16,
  Aborted = 17,
};

const char* to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace isotruss
