#include "chartattrib/error.hpp"

namespace chartattrib {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::Capacity: return "capacity";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Contract: return "contract";
    case ErrorKind::Bounds: return "bounds";
    case ErrorKind::NoCandidate: return "no-candidate";
    case ErrorKind::Degenerate: return "degenerate";
    case ErrorKind::Integrity: return "integrity";
    case ErrorKind::Verification: return "verification";
  }
  return "unknown";
}

}  // namespace chartattrib
