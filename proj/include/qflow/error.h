// Copyright 2026 The qflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QFLOW_ERROR_H
#define QFLOW_ERROR_H

#include <stdexcept>
#include <string>

namespace qflow {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad user configuration (flags, config files, routing weights, ...).
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed or inconsistent input data.
struct DataError : Error {
    using Error::Error;
};

/// A CSV or model file could not be parsed. Carries the offending line when known.
struct ParseError : DataError {
    ParseError(const std::string &where, std::size_t line, const std::string &what)
        : DataError(where + ":" + std::to_string(line) + ": " + what), line(line) {
    }
    explicit ParseError(const std::string &what) : DataError(what), line(0) {
    }
    std::size_t line;
};

/// A model file is corrupt, truncated or of the wrong kind.
struct ModelFileError : DataError {
    using DataError::DataError;
};

/// A model file written by a newer, incompatible format version.
struct VersionError : ModelFileError {
    using ModelFileError::ModelFileError;
};

/// A circuit layout or a vector whose shape does not match the layout.
struct LayoutError : Error {
    using Error::Error;
};

/// A basis state component outside [0, N).
struct InvalidStateError : Error {
    using Error::Error;
};

/// A precondition on numeric inputs was violated (e.g. unnormalized distribution).
struct ContractError : Error {
    using Error::Error;
};

/// Non-finite values appeared during a numerical computation.
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace qflow

#endif
