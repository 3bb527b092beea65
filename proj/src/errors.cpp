#include "ffsim/errors.hpp"

namespace ffsim {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::Oversize: return "Oversize";
    case ErrorCode::RewriteWithoutErase: return "RewriteWithoutErase";
    case ErrorCode::BadBlockAccess: return "BadBlockAccess";
    case ErrorCode::CrashAlreadyArmed: return "CrashAlreadyArmed";
    case ErrorCode::BadImage: return "BadImage";
    case ErrorCode::DeviceTooSmall: return "DeviceTooSmall";
    case ErrorCode::NotFormatted: return "NotFormatted";
    case ErrorCode::CorruptAnchor: return "CorruptAnchor";
    case ErrorCode::VariantMismatch: return "VariantMismatch";
    case ErrorCode::StaleHandle: return "StaleHandle";
    case ErrorCode::InvalidPath: return "InvalidPath";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::AlreadyExists: return "AlreadyExists";
    case ErrorCode::NotADirectory: return "NotADirectory";
    case ErrorCode::IsADirectory: return "IsADirectory";
    case ErrorCode::DirNotEmpty: return "DirNotEmpty";
    case ErrorCode::RangeBeyondEof: return "RangeBeyondEof";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::NoSpace: return "NoSpace";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NeedFourPoints: return "NeedFourPoints";
    case ErrorCode::BadConfig: return "BadConfig";
  }
  return "Unknown";
}

}  // namespace ffsim
