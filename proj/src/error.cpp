#include "epf/error.hpp"

namespace epf {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateDate: return "DuplicateDate";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::AllMissingColumn: return "AllMissingColumn";
    case ErrorCode::TooFewRows: return "TooFewRows";
    case ErrorCode::InvalidRecord: return "InvalidRecord";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::EmptyRange: return "EmptyRange";
    case ErrorCode::UnknownFeature: return "UnknownFeature";
    case ErrorCode::SeriesTooShort: return "SeriesTooShort";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFiniteActivation: return "NonFiniteActivation";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::StaleCache: return "StaleCache";
    case ErrorCode::NonDeterministicForward: return "NonDeterministicForward";
    case ErrorCode::ShapeUnderflow: return "ShapeUnderflow";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DivergedLoss: return "DivergedLoss";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyCounts: return "EmptyCounts";
    case ErrorCode::HistoryTooShort: return "HistoryTooShort";
    case ErrorCode::NonFinitePrediction: return "NonFinitePrediction";
    case ErrorCode::EmptyResult: return "EmptyResult";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace epf
