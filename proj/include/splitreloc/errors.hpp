#pragma once

#include <stdexcept>
#include <string>

namespace splitreloc {

// Error taxonomy shared across the library. Each failure mode maps to one
// code so callers (and the CLI) can branch without parsing messages.
enum class Errc {
  invalid_argument,
  parse_error,
  validation_error,
  degenerate_fusion,
  insufficient_data,
  degenerate_fit,
  alignment_error,
  protocol_error,
  integrity_error,
  incomplete_frame,
  shape_error,
  numeric_error,
  connection_error,
  remote_error,
  io_error,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
  throw Error(code, std::string(errc_name(code)) + ": " + what);
}

}  // namespace splitreloc
