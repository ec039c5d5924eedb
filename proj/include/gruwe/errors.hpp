#pragma once

#include <stdexcept>
#include <string>

namespace gruwe {

// error taxonomy, mirrored by the CLI exit codes:
//   ConfigError   -> exit 2  (bad config file, bad flag, bad key/value)
//   DataError     -> exit 3  (malformed or inconsistent input files)
//   TrainingError -> exit 4  (numerical failure during optimization)
//   InternalError -> exit 5  (broken internal contract; indicates a bug)

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

// dimension mismatch between tensors that should already agree
struct ShapeError : InternalError {
    using InternalError::InternalError;
};

// argument outside the mathematical domain of an operation (e.g. negative dt)
struct DomainError : InternalError {
    using InternalError::InternalError;
};

} // namespace gruwe
