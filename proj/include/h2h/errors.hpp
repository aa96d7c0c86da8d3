#pragma once

#include <stdexcept>
#include <string>

namespace h2h {

// Unparsable documents, schema violations, malformed graph structure.
class ParseError : public std::runtime_error {
 public:
  explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// A layer kind that the named accelerator (or the whole system) cannot run.
class UnsupportedLayerError : public std::runtime_error {
 public:
  explicit UnsupportedLayerError(const std::string& msg) : std::runtime_error(msg) {}
};

// Broken precondition on a mapping state or schedule.
class InvariantError : public std::runtime_error {
 public:
  explicit InvariantError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exhaustive search refused to run: candidate count above budget.
class BudgetExceededError : public std::runtime_error {
 public:
  explicit BudgetExceededError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace h2h
