#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmmm {

// Raised by file loaders. Carries the offending file and 1-based line (0 when
// the problem is not tied to a particular line).
class LoadError : public std::runtime_error {
 public:
  LoadError(std::string file, std::size_t line, const std::string& what);

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite or exploding loss during training/search.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(std::size_t epoch, const std::string& what);
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

// Artifact (JSON) schema violations. `path` is a JSON-pointer-like location.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(std::string path, const std::string& what);
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace pmmm
