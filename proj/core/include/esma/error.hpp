#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace esma {

/// Coarse error category. The CLI prints it as the first token of its
/// single-line error message so scripts can branch on it.
enum class ErrorKind {
  config,     // invalid configuration or arguments
  io,         // filesystem failures
  data,       // malformed or inconsistent input data
  domain,     // argument outside a function's domain
  undefined,  // metric is undefined for the given input (e.g. no incorrect trials)
  protocol,   // malformed endpoint reply
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace esma
