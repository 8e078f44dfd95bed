#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tfsm {

enum class ErrorCode {
  // signature
  MissingBot,
  SubtypeCycle,
  NotBoundedComplete,
  FeatureIntroductionViolation,
  AppropriatenessNonMonotone,
  UnknownType,
  UnknownFeature,
  DuplicateDeclaration,
  // frontend
  SyntaxError,
  UnsupportedConstruct,
  UnknownMacro,
  ArityMismatch,
  RecursiveMacro,
  InconsistentDescription,
  // machine / inversion
  RegisterOverflow,
  InversionFailure,
  NotInvertible,
  BadArtifact,
  // run time
  UnknownWord,
  MalformedSemantics,
  ResourceExhausted,
  MachineFault,
  Usage,
};

const char* error_code_name(ErrorCode code) noexcept;

struct SourcePos {
  int line = 0;
  int column = 0;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::vector<std::string> details = {}, SourcePos pos = {})
      : std::runtime_error(std::move(message)), code_(code), details_(std::move(details)), pos_(pos) {}

  ErrorCode code() const noexcept { return code_; }
  // Structured payload, e.g. the two types and the incomparable upper
  // bounds of a NotBoundedComplete error.
  const std::vector<std::string>& details() const noexcept { return details_; }
  SourcePos pos() const noexcept { return pos_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
  SourcePos pos_;
};

// Grammar-level problems: bad input text, inconsistent declarations.
class CompileError : public Error {
  using Error::Error;
};

// Problems that arise while running a compiled grammar.
class RuntimeError : public Error {
  using Error::Error;
};

struct Diagnostic {
  std::string message;
  SourcePos pos;
};

}  // namespace tfsm
