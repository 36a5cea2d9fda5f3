#pragma once

#include <stdexcept>
#include <string>

namespace disclab {

// Enumeration / sampling budget exceeded (CLI exit code 3).
struct budget_error : std::runtime_error {
  explicit budget_error(const std::string& what) : std::runtime_error(what) {}
};

// Markov chain failed its convergence checks (CLI exit code 5).
struct chain_error : std::runtime_error {
  explicit chain_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace disclab
