#pragma once

#include <stdexcept>
#include <string>

namespace ffsim {

enum class ErrorCode {
  InvalidGeometry,
  OutOfRange,
  Oversize,
  RewriteWithoutErase,
  BadBlockAccess,
  CrashAlreadyArmed,
  BadImage,
  DeviceTooSmall,
  NotFormatted,
  CorruptAnchor,
  VariantMismatch,
  StaleHandle,
  InvalidPath,
  NotFound,
  AlreadyExists,
  NotADirectory,
  IsADirectory,
  DirNotEmpty,
  RangeBeyondEof,
  ChecksumMismatch,
  NoSpace,
  TooLarge,
  NeedFourPoints,
  BadConfig,
};

const char* error_code_name(ErrorCode c);

// All recoverable failures carry a code so tests and the CLI can match on
// them instead of parsing message text.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by an armed crash plan mid-operation. Deliberately not an Error:
// callers that map ErrorCode must never swallow a power loss by accident.
class PowerLoss : public std::exception {
 public:
  const char* what() const noexcept override { return "power loss"; }
};

}  // namespace ffsim
