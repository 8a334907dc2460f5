#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lineout {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numeric argument outside its admissible range (e.g. a non-positive reactance).
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input that is not a case-file problem.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

enum class CaseIssue {
  Schema,
  DuplicateBus,
  UnknownBus,
  SelfLoop,
  NonpositiveReactance,
  BadLineIndex,
  NoReference,
  MultipleReference,
  ReferenceExternal,
  Disconnected,
  MissingMatrix,
  MalformedRow,
};

const char* to_string(CaseIssue issue);

/// Case validation or parsing failure. `locus()` names the field path
/// (`branches[3].x`) or source line (`line 214`) where it was detected.
class CaseError : public Error {
 public:
  CaseError(CaseIssue issue, std::string locus, const std::string& message)
      : Error(locus.empty() ? message : locus + ": " + message),
        issue_(issue),
        locus_(std::move(locus)) {}

  CaseIssue issue() const noexcept { return issue_; }
  const std::string& locus() const noexcept { return locus_; }

 private:
  CaseIssue issue_;
  std::string locus_;
};

/// Scenario references an unknown line, repeats a line, or sets an invalid reactance.
class ScenarioError : public Error {
 public:
  using Error::Error;
};

/// Removing the listed lines splits the grid.
class IslandingError : public Error {
 public:
  IslandingError(std::vector<int> lines, const std::string& message)
      : Error(message), lines_(std::move(lines)) {}

  const std::vector<int>& lines() const noexcept { return lines_; }

 private:
  std::vector<int> lines_;
};

class SingularSystemError : public Error {
 public:
  using Error::Error;
};

/// The observation lies in the range of the external block, so every s is zero.
class DegenerateObservationError : public Error {
 public:
  using Error::Error;
};

class NoCandidateError : public Error {
 public:
  using Error::Error;
};

class InsufficientRowsError : public Error {
 public:
  using Error::Error;
};

/// Syntax-level failure in a text document; `locus()` is a line or byte position.
class ParseError : public Error {
 public:
  ParseError(std::string locus, const std::string& message)
      : Error(locus.empty() ? message : locus + ": " + message), locus_(std::move(locus)) {}

  const std::string& locus() const noexcept { return locus_; }

 private:
  std::string locus_;
};

}  // namespace lineout
