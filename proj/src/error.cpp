#include "artbridge/error.hpp"

namespace artbridge {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "INVALID_INPUT";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::DimensionMismatch: return "DIMENSION_MISMATCH";
    case ErrorCode::OutOfBounds: return "OUT_OF_BOUNDS";
    case ErrorCode::EmptyMap: return "EMPTY_MAP";
    case ErrorCode::Io: return "IO_ERROR";
    case ErrorCode::BackendUnavailable: return "BACKEND_UNAVAILABLE";
    case ErrorCode::ProtocolError: return "PROTOCOL_ERROR";
    case ErrorCode::InvalidReference: return "INVALID_REFERENCE";
    case ErrorCode::UnknownSession: return "UNKNOWN_SESSION";
    case ErrorCode::UnknownBuffer: return "UNKNOWN_BUFFER";
    case ErrorCode::DuplicateBuffer: return "DUPLICATE_BUFFER";
    case ErrorCode::DuplicateZOrder: return "DUPLICATE_Z_ORDER";
    case ErrorCode::DuplicateBackground: return "DUPLICATE_BACKGROUND";
    case ErrorCode::DuplicateLayer: return "DUPLICATE_LAYER";
    case ErrorCode::StaleFrame: return "STALE_FRAME";
    case ErrorCode::NotFound: return "NOT_FOUND";
    case ErrorCode::NotReady: return "NOT_READY";
    case ErrorCode::BadMessage: return "BAD_MESSAGE";
    case ErrorCode::FrameDropped: return "FRAME_DROPPED";
  }
  return "UNKNOWN";
}

} // namespace artbridge
