#include "tableprep/error.hpp"

namespace tableprep {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::DuplicateColumn: return "DuplicateColumn";
    case ErrorCode::RaggedRow: return "RaggedRow";
    case ErrorCode::MissingKey: return "MissingKey";
    case ErrorCode::MalformedInput: return "MalformedInput";
    case ErrorCode::UnknownOperator: return "UnknownOperator";
    case ErrorCode::MissingParam: return "MissingParam";
    case ErrorCode::BadParamType: return "BadParamType";
    case ErrorCode::ColumnNotFound: return "ColumnNotFound";
    case ErrorCode::NoValidColumns: return "NoValidColumns";
    case ErrorCode::ColumnExists: return "ColumnExists";
    case ErrorCode::ExecutorFailure: return "ExecutorFailure";
    case ErrorCode::DegenerateInitialTable: return "DegenerateInitialTable";
    case ErrorCode::BadBudget: return "BadBudget";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::GroupTooSmall: return "GroupTooSmall";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::NoJsonFound: return "NoJsonFound";
    case ErrorCode::AllRequestsFailed: return "AllRequestsFailed";
    case ErrorCode::AuthMissing: return "AuthMissing";
    case ErrorCode::TransportError: return "TransportError";
    case ErrorCode::QaTransportError: return "QaTransportError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::DatasetError: return "DatasetError";
  }
  return "Unknown";
}

}  // namespace tableprep
