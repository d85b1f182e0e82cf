#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace epf {

enum class ErrorCode {
  // data ingestion
  MissingColumn,
  DuplicateDate,
  EmptyFile,
  AllMissingColumn,
  TooFewRows,
  InvalidRecord,
  ParseError,
  // preprocessing
  EmptyRange,
  UnknownFeature,
  SeriesTooShort,
  // network kernel
  ShapeMismatch,
  NonFiniteActivation,
  InvalidRate,
  StaleCache,
  NonDeterministicForward,
  ShapeUnderflow,
  InvalidConfig,
  // training
  EmptyDataset,
  DivergedLoss,
  // metrics
  LengthMismatch,
  EmptyInput,
  EmptyCounts,
  // forecasting
  HistoryTooShort,
  NonFinitePrediction,
  EmptyResult,
  // i/o
  IoError,
  FormatError,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace epf
