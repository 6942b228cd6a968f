#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tableprep {

enum class ErrorCode {
  // ingestion
  EmptyInput,
  DuplicateColumn,
  RaggedRow,
  MissingKey,
  MalformedInput,
  // operator parsing
  UnknownOperator,
  MissingParam,
  BadParamType,
  // operator execution
  ColumnNotFound,
  NoValidColumns,
  ColumnExists,
  ExecutorFailure,
  // reward / gate
  DegenerateInitialTable,
  BadBudget,
  EmptyCandidates,
  EmptyGroup,
  GroupTooSmall,
  // llm / qa
  EmptyQuestion,
  NoJsonFound,
  AllRequestsFailed,
  AuthMissing,
  TransportError,
  QaTransportError,
  // app
  ConfigError,
  DatasetError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Raised by parse_pipeline; carries the array index of the offending operator.
class PipelineParseError : public Error {
 public:
  PipelineParseError(std::size_t index, const Error& cause)
      : Error(cause.code(), "operator " + std::to_string(index) + ": " + cause.what()),
        index_(index) {}

  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// Raised by the rollback machine; `state()` is the rollback state (1..3)
/// whose QA call failed.
class QaTransportError : public Error {
 public:
  QaTransportError(int state, const std::string& message)
      : Error(ErrorCode::QaTransportError,
              "QA call failed in state " + std::to_string(state) + ": " + message),
        state_(state) {}

  int state() const noexcept { return state_; }

 private:
  int state_;
};

}  // namespace tableprep
