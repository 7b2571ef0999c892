#ifndef INVEVOLVE_ERRORS_H_
#define INVEVOLVE_ERRORS_H_

#include <stdexcept>
#include <string>

namespace invevolve {

// Argument outside an operation's documented domain.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent configuration (e.g. reference policy missing from the pool).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A policy produced a non-finite or negative decision.
class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The per-epoch evaluation budget N_t would be exceeded.
class BudgetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// File system or serialization failure; message carries the path.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace invevolve

#endif  // INVEVOLVE_ERRORS_H_
