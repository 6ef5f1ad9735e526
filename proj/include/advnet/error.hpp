#pragma once

#include <stdexcept>
#include <string>

namespace advnet {

// Inputs disagree on shape (wrong number of links, servers, commodities).
class StructuralError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A caller broke an operation's precondition (e.g. a loss above the announced bound).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Parameters cannot produce a valid object (infeasible slack, bad bounds).
class ConstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An internal invariant failed; indicates a bug rather than bad input.
class InvariantFailure : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed scenario or trace text.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace advnet
