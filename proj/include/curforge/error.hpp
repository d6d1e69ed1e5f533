#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace curforge {

enum class Errc {
  invalid_argument,
  validation,
  dimension_mismatch,
  empty_input,
  unsupported_size,
  out_of_range,
  limit_exceeded,
  non_finite,
  parse,
  config,
  io,
  degenerate,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "invalid-argument";
    case Errc::validation: return "validation";
    case Errc::dimension_mismatch: return "dimension-mismatch";
    case Errc::empty_input: return "empty-input";
    case Errc::unsupported_size: return "unsupported-size";
    case Errc::out_of_range: return "out-of-range";
    case Errc::limit_exceeded: return "limit-exceeded";
    case Errc::non_finite: return "non-finite";
    case Errc::parse: return "parse";
    case Errc::config: return "config";
    case Errc::io: return "io";
    case Errc::degenerate: return "degenerate";
  }
  return "unknown";
}

// All library failures are reported through this type; code() lets callers
// branch without matching on message text.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace curforge
