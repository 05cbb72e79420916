#include "pmmm/error.hpp"

namespace pmmm {

LoadError::LoadError(std::string file, std::size_t line, const std::string& what)
    : std::runtime_error(file + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
      file_(std::move(file)),
      line_(line) {}

DivergenceError::DivergenceError(std::size_t epoch, const std::string& what)
    : std::runtime_error("epoch " + std::to_string(epoch) + ": " + what), epoch_(epoch) {}

SchemaError::SchemaError(std::string path, const std::string& what)
    : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

}  // namespace pmmm
