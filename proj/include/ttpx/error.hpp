#pragma once

#include <stdexcept>
#include <string>

namespace ttpx {

// Error categories double as CLI exit codes.
enum class ErrorKind : int {
  Usage = 1,     // bad arguments, profile or configuration
  Data = 2,      // malformed or inconsistent input files
  Upstream = 3,  // LLM gateway or scoring endpoint
  Audit = 4,     // consistency audit failed in strict mode
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class UpstreamError : public Error {
 public:
  explicit UpstreamError(const std::string& what) : Error(ErrorKind::Upstream, what) {}
};

class AuditError : public Error {
 public:
  explicit AuditError(const std::string& what) : Error(ErrorKind::Audit, what) {}
};

// Raised by the scoring client when a response breaks the wire contract.
class ProtocolError : public UpstreamError {
 public:
  explicit ProtocolError(const std::string& what) : UpstreamError("protocol error: " + what) {}
};

}  // namespace ttpx
