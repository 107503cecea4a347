// Copyright (c) 2026 the cascade authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace cascade {

enum class ErrorCode {
  // user / input errors
  UnknownCategoryLabel,
  RowArityMismatch,
  NonNumericValue,
  ConstantFeature,
  NoMaskableFeatures,
  SchemaInvalid,
  SchemaMismatch,
  FileNotFound,
  ConfigInvalid,
  EmptyInput,
  EmptyTrainingSet,
  EmptyAfterMissingDrop,
  SingleClassTarget,
  UnsupportedTarget,
  EncoderHashMismatch,
  // contract violations
  SpecialCategoryHasNoSource,
  ShapeMismatch,
  NonFiniteGradient,
  Internal,
};

// True for codes caused by bad user input or configuration (CLI exit code 2),
// false for internal faults (exit code 1).
bool is_user_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline bool is_user_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCategoryLabel:
    case ErrorCode::RowArityMismatch:
    case ErrorCode::NonNumericValue:
    case ErrorCode::ConstantFeature:
    case ErrorCode::NoMaskableFeatures:
    case ErrorCode::SchemaInvalid:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::FileNotFound:
    case ErrorCode::ConfigInvalid:
    case ErrorCode::EmptyInput:
    case ErrorCode::EmptyTrainingSet:
    case ErrorCode::EmptyAfterMissingDrop:
    case ErrorCode::SingleClassTarget:
    case ErrorCode::UnsupportedTarget:
    case ErrorCode::EncoderHashMismatch:
      return true;
    default:
      return false;
  }
}

}  // namespace cascade
