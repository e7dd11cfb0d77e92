#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aprior {

enum class Errc {
  // knowledge base construction
  SchemaError,
  DuplicateId,
  DanglingReference,
  CyclicTree,
  InvalidPredicate,
  SiblingOverlap,
  EmptyTask,
  InapplicableOperation,
  // runtime
  InvalidArgument,
  InvalidCount,
  NotLeaf,
  UnderconstrainedLeaf,
  NonMonotonicTrial,
  UnknownObject,
  UnknownProgram,
  IneligibleProgram,
  TruthMismatch,
  MalformedLog,
  IoError,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::SchemaError: return "SchemaError";
    case Errc::DuplicateId: return "DuplicateId";
    case Errc::DanglingReference: return "DanglingReference";
    case Errc::CyclicTree: return "CyclicTree";
    case Errc::InvalidPredicate: return "InvalidPredicate";
    case Errc::SiblingOverlap: return "SiblingOverlap";
    case Errc::EmptyTask: return "EmptyTask";
    case Errc::InapplicableOperation: return "InapplicableOperation";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::InvalidCount: return "InvalidCount";
    case Errc::NotLeaf: return "NotLeaf";
    case Errc::UnderconstrainedLeaf: return "UnderconstrainedLeaf";
    case Errc::NonMonotonicTrial: return "NonMonotonicTrial";
    case Errc::UnknownObject: return "UnknownObject";
    case Errc::UnknownProgram: return "UnknownProgram";
    case Errc::IneligibleProgram: return "IneligibleProgram";
    case Errc::TruthMismatch: return "TruthMismatch";
    case Errc::MalformedLog: return "MalformedLog";
    case Errc::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
/// what() is "<Code>: <detail>".
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace aprior
