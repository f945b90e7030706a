#pragma once

#include <stdexcept>
#include <string>

namespace labelforge {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input data (corpus lines, config files, JSON payloads).
class ParseError : public Error {
 public:
  ParseError(std::string message, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A value violates a documented invariant or precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Failure talking to a chat or embedding backend.
class ProviderError : public Error {
 public:
  enum class Kind { transport, authentication, rate_limit, bad_response };

  ProviderError(Kind kind, std::string message);
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

const char* to_string(ProviderError::Kind kind) noexcept;

/// An experiment stopped before all of its runs completed.
class IncompleteExperiment : public Error {
 public:
  using Error::Error;
};

}  // namespace labelforge
