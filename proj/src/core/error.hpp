#pragma once

#include <stdexcept>
#include <string>

namespace tal {

// Base for everything the pipeline can throw. The C API maps subclasses to
// status codes (and the CLI to exit codes): config 2, missing artifact 3,
// numeric failure 4, anything else 1.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct MissingArtifactError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

// Malformed input file (dataset line, proposal dump row, checkpoint).
struct ParseError : Error {
  using Error::Error;
};

// Well-formed input that violates a declared invariant.
struct SchemaError : Error {
  using Error::Error;
};

// Synthetic generation could not satisfy its postconditions.
struct GenerationError : Error {
  using Error::Error;
};

}  // namespace tal
