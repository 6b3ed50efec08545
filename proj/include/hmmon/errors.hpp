#pragma once

#include <stdexcept>
#include <string>

namespace hmmon {

// Malformed model document (JSON syntax or schema).
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Well-formed document describing an invalid model.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Monitor alphabet differs from the model's observation set.
class AlphabetMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Query on a trace outside the model's language.
class NotInLanguage : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Every state has risk 0, so risk normalization is undefined.
class DegenerateRisk : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive enumeration would exceed its configured budget.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// No color-consistent policy completes a trace of the required shape.
class Infeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hmmon
