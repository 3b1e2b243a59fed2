#pragma once

#include <stdexcept>
#include <string>

namespace acctune {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the supported C subset. Carries a 1-based position.
class ParseError : public Error {
 public:
  ParseError(std::string construct, int line, int column, const std::string& detail = {})
      : Error(format(construct, line, column, detail)),
        construct_(std::move(construct)),
        line_(line),
        column_(column) {}

  const std::string& construct() const noexcept { return construct_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& construct, int line, int column,
                            const std::string& detail) {
    std::string msg = std::to_string(line) + ":" + std::to_string(column) +
                      ": unsupported construct: " + construct;
    if (!detail.empty()) msg += " (" + detail + ")";
    return msg;
  }

  std::string construct_;
  int line_;
  int column_;
};

/// Malformed structural description or config file.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// The compile probe could not run at all (missing command, unwritable temp dir).
class ProbeUnavailable : public Error {
 public:
  using Error::Error;
};

/// External commands missing or unusable; aborts a run.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

class GenomeLengthMismatch : public Error {
 public:
  GenomeLengthMismatch(std::size_t got, std::size_t expected)
      : Error("genome length " + std::to_string(got) + " does not match " +
              std::to_string(expected) + " eligible loops") {}
};

class PlanInconsistent : public Error {
 public:
  using Error::Error;
};

/// A plan entry cannot be written as a clause (for example an unknown extent).
class EmissionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// No eligible loops: the search space is empty.
class ZeroGeneLength : public Error {
 public:
  ZeroGeneLength() : Error("nothing to offload: no eligible loops") {}
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class ModelIncomplete : public Error {
 public:
  using Error::Error;
};

class TooLarge : public Error {
 public:
  using Error::Error;
};

class UnparsableOutput : public Error {
 public:
  using Error::Error;
};

/// Invalid user configuration (CLI exit code 1).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace acctune
