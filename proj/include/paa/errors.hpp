#pragma once

#include <stdexcept>
#include <string>

namespace paa {

/// Iterative solver exhausted its budget without meeting its stopping rule.
class ConvergenceError : public std::runtime_error {
public:
  explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Input data admits no meaningful fit (e.g. all points coincide, zero spread).
class DegenerateDataError : public std::runtime_error {
public:
  explicit DegenerateDataError(const std::string& what) : std::runtime_error(what) {}
};

/// A file or value does not match the declared manifold signature / schema.
class SchemaError : public std::runtime_error {
public:
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace paa
