#pragma once

#include <stdexcept>
#include <string>

namespace mixpool {

// Base class for all library-specific failures. Precondition violations on
// plain arguments use std::invalid_argument directly; the types below exist
// where callers need to tell failure modes apart.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Two histograms (or a panel and a cell) do not share the same bin grid.
class GridMismatchError : public Error {
 public:
  explicit GridMismatchError(const std::string& what) : Error(what) {}
};

// A realization falls outside the finite support of a bin grid.
class OutOfRangeError : public Error {
 public:
  explicit OutOfRangeError(const std::string& what) : Error(what) {}
};

// A panel cell required by an operation is missing.
class MissingCellError : public Error {
 public:
  explicit MissingCellError(const std::string& what) : Error(what) {}
};

// The combination objective cannot be evaluated (e.g. a data row where every
// forecaster assigns zero density).
class InfeasibleObjectiveError : public Error {
 public:
  explicit InfeasibleObjectiveError(const std::string& what) : Error(what) {}
};

// A source bin straddles target-bin edges during harmonization.
class BinStraddleError : public Error {
 public:
  explicit BinStraddleError(const std::string& what) : Error(what) {}
};

// Malformed or inconsistent input data (files, tables, headers, dates).
class InputFormatError : public Error {
 public:
  explicit InputFormatError(const std::string& what) : Error(what) {}
};

}  // namespace mixpool
