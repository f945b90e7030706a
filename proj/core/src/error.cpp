#include "labelforge/error.hpp"

namespace labelforge {

ParseError::ParseError(std::string message, std::size_t line)
    : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message),
      line_(line) {}

ProviderError::ProviderError(Kind kind, std::string message)
    : Error(std::string(to_string(kind)) + " error: " + message), kind_(kind) {}

const char* to_string(ProviderError::Kind kind) noexcept {
  switch (kind) {
    case ProviderError::Kind::transport:
      return "transport";
    case ProviderError::Kind::authentication:
      return "authentication";
    case ProviderError::Kind::rate_limit:
      return "rate-limit";
    case ProviderError::Kind::bad_response:
      return "bad-response";
  }
  return "unknown";
}

}  // namespace labelforge
