#pragma once

#include <stdexcept>
#include <string>

namespace trimfit {

// Error taxonomy. The CLI maps these onto exit codes: configuration and data
// problems (ParseError, SchemaError, ValidationError, SpecError) exit 2,
// FitError (non-convergence, infeasible constraints) exits 3, NumericError
// exits 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};

struct SchemaError : Error {
  using Error::Error;
};

struct ValidationError : Error {
  using Error::Error;
};

// A ModelSpec that cannot be fit as given (validate_spec found fatal issues).
struct SpecError : Error {
  using Error::Error;
};

// Observation-model domain violation: log of a non-positive inner product.
// group/row locate the offending observation (group index, row within group).
struct DomainError : Error {
  DomainError(const std::string& what, int group, int row)
      : Error(what), group(group), row(row) {}
  int group = -1;
  int row = -1;
};

struct NumericError : Error {
  using Error::Error;
};

struct FitError : Error {
  using Error::Error;
};

}  // namespace trimfit
