#pragma once

#include <stdexcept>
#include <string>

namespace btg {

// Malformed input files, unusable models, infeasible decode requests.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

// Structurally invalid derivations and violated call preconditions.
class StructureError : public std::invalid_argument {
 public:
  explicit StructureError(const std::string& what)
      : std::invalid_argument(what) {}
};

}  // namespace btg
