#pragma once

#include <stdexcept>
#include <string>

namespace mvtrack {

// Precondition violations on public entry points.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Singular or non-finite numerics (Kalman innovation, training losses).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A metric whose denominator is empty (no GT boxes, no cross-view pairs, V < 2).
class UndefinedMetric : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& file, int line, int column, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ":" + std::to_string(column) +
                           ": " + what),
        line_(line),
        column_(column) {}

  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

}  // namespace mvtrack
