#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace chartattrib {

enum class ErrorKind {
  Io,            // read/write failure, truncated stream, missing file
  Format,        // bad magic, malformed JSON
  Capacity,      // size overflow or memory budget exceeded
  Validation,    // data violates a type invariant (NaN, out-of-frame box, ...)
  Contract,      // caller broke a precondition (dim mismatch, frame mismatch)
  Bounds,        // region outside its grid
  NoCandidate,   // window config admits no window on this grid
  Degenerate,    // statistic undefined for this input (kappa with p_e = 1)
  Integrity,     // dangling reference inside a manifest
  Verification,  // fast path disagrees with its oracle
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace chartattrib
