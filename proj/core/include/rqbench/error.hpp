#pragma once

#include <stdexcept>
#include <string>

namespace rqbench {

/// Broad failure classes. The CLI maps each to a process exit code.
enum class ErrorKind {
  kManifest,    // configuration / manifest validation
  kProcess,     // external tool failed or produced unusable output
  kData,        // input data violates a contract
  kIo,          // file system failure
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& message)
      : Error(ErrorKind::kData, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message)
      : Error(ErrorKind::kIo, message) {}
};

class ProcessError : public Error {
 public:
  ProcessError(const std::string& message, std::string captured_output)
      : Error(ErrorKind::kProcess, message),
        output_(std::move(captured_output)) {}

  const std::string& captured_output() const noexcept { return output_; }

 private:
  std::string output_;
};

class ManifestError : public Error {
 public:
  ManifestError(std::string field, const std::string& reason)
      : Error(ErrorKind::kManifest, field + ": " + reason),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace rqbench
