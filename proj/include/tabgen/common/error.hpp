// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace tabgen {

/// Base class for every error raised by the library. The CLI maps each
/// subclass to a process exit code (see exit_code()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define TABGEN_DEFINE_ERROR(Name, Base)   \
  class Name : public Base {              \
   public:                                \
    using Base::Base;                     \
  };

// Configuration / validation (exit 2).
TABGEN_DEFINE_ERROR(ConfigError, Error)
TABGEN_DEFINE_ERROR(ContractError, Error)
TABGEN_DEFINE_ERROR(ShapeError, ContractError)
TABGEN_DEFINE_ERROR(EncodingError, ContractError)
TABGEN_DEFINE_ERROR(SchemaError, ConfigError)

// Numeric failure (exit 3).
TABGEN_DEFINE_ERROR(NumericError, Error)

// Data insufficiency (exit 4).
TABGEN_DEFINE_ERROR(DataError, Error)
TABGEN_DEFINE_ERROR(StratificationError, DataError)
TABGEN_DEFINE_ERROR(BankError, DataError)

// I/O and persistence (exit 5).
TABGEN_DEFINE_ERROR(IoError, Error)
TABGEN_DEFINE_ERROR(CheckpointError, IoError)
TABGEN_DEFINE_ERROR(MagicError, CheckpointError)
TABGEN_DEFINE_ERROR(VersionError, CheckpointError)
TABGEN_DEFINE_ERROR(SchemaMismatchError, CheckpointError)
TABGEN_DEFINE_ERROR(TruncatedError, CheckpointError)

#undef TABGEN_DEFINE_ERROR

namespace exit_codes {
inline constexpr int kOk = 0;
inline constexpr int kConfig = 2;
inline constexpr int kNumeric = 3;
inline constexpr int kData = 4;
inline constexpr int kIo = 5;
}  // namespace exit_codes

/// Exit code associated with an error category.
inline int exit_code(const Error& e) {
  if (dynamic_cast<const NumericError*>(&e)) return exit_codes::kNumeric;
  if (dynamic_cast<const DataError*>(&e)) return exit_codes::kData;
  if (dynamic_cast<const IoError*>(&e)) return exit_codes::kIo;
  return exit_codes::kConfig;
}

}  // namespace tabgen
