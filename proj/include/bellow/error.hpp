#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bellow {

// Base of every engine error. `code()` is a stable machine-readable tag used
// by the CLI exit path and the service's error payloads.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

// Input violates one or more named constraints.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::vector<std::string> violations)
      : Error("validation_failed", what), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class FitError : public Error {
 public:
  explicit FitError(const std::string& what) : Error("fit_failed", what) {}
};

class DegenerateError : public Error {
 public:
  explicit DegenerateError(const std::string& what) : Error("degenerate", what) {}
};

class ToleranceError : public Error {
 public:
  explicit ToleranceError(const std::string& what) : Error("tolerance_unattainable", what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error("malformed_input", what) {}
};

class VersionError : public Error {
 public:
  explicit VersionError(const std::string& what) : Error("version_mismatch", what) {}
};

class NotFoundError : public Error {
 public:
  explicit NotFoundError(const std::string& what) : Error("not_found", what) {}
};

// A store write would replace different bytes under an existing name.
class ConflictError : public Error {
 public:
  explicit ConflictError(const std::string& what) : Error("conflict", what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error("io_error", what) {}
};

}  // namespace bellow
