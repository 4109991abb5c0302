#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rmc {

// An iterative kernel hit its iteration cap without converging.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  std::size_t iterations() const { return iterations_; }

 private:
  std::size_t iterations_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Requested diagnostic needs dense desk-scale data that is not available.
class UnsupportedAtScale : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rmc
