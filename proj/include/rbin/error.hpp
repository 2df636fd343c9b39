#pragma once

#include <stdexcept>
#include <string>

namespace rbin {

// Exit-code families surfaced by the CLI.
enum class ErrorKind {
  kUsage = 2,
  kIo = 3,
  kNumerical = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::kUsage, what) {}
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& what)
      : Error(ErrorKind::kUsage, what) {}
};

/// Raised by the image readers. `reason` distinguishes the failure modes.
class LoadError : public Error {
 public:
  enum class Reason { kUnreadable, kUnsupportedFormat, kEmptyImage, kCorrupt };
  LoadError(Reason reason, const std::string& what)
      : Error(ErrorKind::kIo, what), reason_(reason) {}
  Reason reason() const noexcept { return reason_; }

 private:
  Reason reason_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

/// A banded solve met a non-positive pivot.
class SingularSystemError : public Error {
 public:
  explicit SingularSystemError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

/// fit_rank_one could not produce a term (e.g. lambda = 0 with a zero-weight row).
class DegenerateFitError : public Error {
 public:
  explicit DegenerateFitError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

/// A metric is undefined for the given ground truth (empty foreground, uniform blocks).
class UndefinedMetricError : public Error {
 public:
  explicit UndefinedMetricError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

}  // namespace rbin
